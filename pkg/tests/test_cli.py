# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

import os

import numpy as np
import pytest
import yaml

from gfnpath import cli
from gfnpath.module_utils.exception import (RC_BAD_FLAG, RC_BUDGET,
                                            RC_IO)
from gfnpath.module_utils.gfnpath_common import read_csv
from gfnpath.module_utils.nn import (FlowModel, ModelConfig, load_checkpoint,
                                     save_checkpoint)
from gfnpath.module_utils.scenes import write_scene
from gfnpath.version import VERSION

SMALL = ['--buildings-per-side', '1']


def _invoke(capsys, *argv):
    """Run the gfnpath command; return its exit code, stdout and stderr."""
    with pytest.raises(SystemExit) as excinfo:
        cli.main([str(arg) for arg in argv])
    out, err = capsys.readouterr()
    return excinfo.value.code, out, err


def _run(capsys, *argv):
    """Run a subcommand; return its exit code and its YAML result."""
    code, out, err = _invoke(capsys, *argv)
    return code, yaml.safe_load(out if code == 0 else err)


class TestDispatch:

    def test_help(self, capsys):
        code, text, _ = _invoke(capsys, '--help')
        assert code == 0
        assert 'coverage' in text

    def test_subcommand_help(self, capsys):
        code, text, _ = _invoke(capsys, 'train', '--help')
        assert code == 0
        assert '--no-buffer' in text

    def test_version(self, capsys):
        code, text, _ = _invoke(capsys, '--version')
        assert code == 0
        assert VERSION in text

    def test_unknown_subcommand(self, capsys):
        code, _, _ = _invoke(capsys, 'frobnicate')
        assert code == 2

    def test_unknown_flag(self, capsys):
        code, _, _ = _invoke(capsys, 'stats', '--frobnicate')
        assert code == 2


class TestGenerate:

    def test_same_seed_same_files(self, capsys, tmp_path):
        outputs = []
        for name in ('a', 'b'):
            dest = tmp_path / name
            code, result = _run(capsys, 'generate', '--n', 2, '--seed', 5,
                                '--dest-dir', dest)
            assert code == 0
            assert len(result['files']) == 2
            outputs.append([open(path).read() for path in result['files']])
        assert outputs[0] == outputs[1]
        assert os.path.basename(result['files'][1]) == 'scene_0001.obj'

    def test_keep_every_building(self, capsys, tmp_path):
        code, result = _run(capsys, 'generate', '--n', 3, '--keep-min', 1.0,
                            '--keep-max', 1.0, '--dest-dir', tmp_path)
        assert code == 0
        assert result['n_objects'] == [102, 102, 102]

    def test_inverted_range(self, capsys, tmp_path):
        code, result = _run(capsys, 'generate', '--keep-min', 0.9,
                            '--keep-max', 0.5, '--dest-dir', tmp_path)
        assert code == RC_BAD_FLAG
        assert result['failed']
        assert 'keep' in result['msg']

    def test_logfile(self, capsys, tmp_path):
        logfile = tmp_path / 'gfnpath.log'
        code, _ = _run(capsys, 'generate', '-vv', '--logfile', logfile,
                       '--dest-dir', tmp_path)
        assert code == 0
        assert '[generate] Wrote' in logfile.read_text()


class TestStats:

    def test_rows_and_csv(self, capsys, tmp_path):
        dest = tmp_path / 'stats.csv'
        code, result = _run(capsys, 'stats', '--n-scenes', 2, '--k', 1,
                            '--dest', dest, *SMALL)
        assert code == 0
        assert [row['k'] for row in result['rows']] == [0, 1]
        assert dest.read_text().startswith('# cmdline: gfnpath stats')

    def test_budget_exceeded(self, capsys, tmp_path):
        code, result = _run(capsys, 'stats', '--n-scenes', 1, '--k', 3,
                            '--budget', 10, '--dest', tmp_path / 's.csv',
                            '--keep-min', 1, *SMALL)
        assert code == RC_BUDGET
        assert '10' in result['msg']

    def test_bad_order_range(self, capsys, tmp_path):
        code, _ = _run(capsys, 'stats', '--k', 1, '--k-min', 2,
                       '--dest', tmp_path / 's.csv')
        assert code == RC_BAD_FLAG


class TestTrainAndEval:

    def test_train_then_eval(self, capsys, tmp_path):
        checkpoint = tmp_path / 'model.ckpt'
        metrics = tmp_path / 'metrics.csv'
        code, result = _run(capsys, 'train', '--iterations', 2, '--batch', 4,
                            '--d', 8, '--val-every', 2, '--val-scenes', 2,
                            '--m', 2, '--checkpoint', checkpoint,
                            '--metrics', metrics, *SMALL)
        assert code == 0
        assert result['final']['iteration'] == 2
        model, opt_state = load_checkpoint(str(checkpoint))
        assert model.config.d == 8
        assert opt_state.step == 2
        _, rows = read_csv(str(metrics))
        assert len(rows) == 2

        dest = tmp_path / 'eval.csv'
        code, result = _run(capsys, 'eval', '--checkpoint', checkpoint,
                            '--n-scenes', 2, '--m', 3, '--dest', dest,
                            *SMALL)
        assert code == 0
        assert result['k'] == 1
        assert 0.0 <= result['accuracy'] <= 1.0
        header, rows = read_csv(str(dest))
        assert header[:3] == ['k', 'm', 'n_scenes']

    def test_same_flags_same_artifacts(self, capsys, tmp_path):
        artifacts = []
        for name in ('a', 'b'):
            checkpoint = tmp_path / ('%s.ckpt' % name)
            metrics = tmp_path / ('%s.csv' % name)
            code, _ = _run(capsys, 'train', '--iterations', 3, '--batch', 4,
                           '--d', 8, '--val-every', 0, '--seed', 11,
                           '--checkpoint', checkpoint, '--metrics', metrics,
                           *SMALL)
            assert code == 0
            artifacts.append((checkpoint.read_bytes(),
                              read_csv(str(metrics))[1]))
        assert artifacts[0] == artifacts[1]

    def test_bad_alpha(self, capsys, tmp_path):
        code, _ = _run(capsys, 'train', '--alpha', 2.0, '--iterations', 0,
                       '--checkpoint', tmp_path / 'm.ckpt',
                       '--metrics', tmp_path / 'm.csv')
        assert code == RC_BAD_FLAG

    def test_eval_needs_samples(self, capsys):
        code, result = _run(capsys, 'eval', '--m', 0)
        assert code == RC_BAD_FLAG
        assert 'm option' in result['msg']

    def test_missing_checkpoint(self, capsys, tmp_path):
        code, _ = _run(capsys, 'eval', '--checkpoint',
                       tmp_path / 'missing.ckpt')
        assert code == RC_IO


class TestCoverage:

    def test_model_against_exhaustive(self, capsys, tmp_path, ground):
        scene = tmp_path / 'ground.obj'
        write_scene(ground, str(scene))
        grid = ['--scene', scene, '--extent', -4, 4, -4, 4, '--cell', 2,
                '--k-max', 1]
        truth = tmp_path / 'truth.csv'
        code, result = _run(capsys, 'coverage', '--dest', truth, *grid)
        assert code == 0
        assert result['cells'] == 16
        assert result['covered'] == 16

        checkpoint = tmp_path / 'k1.ckpt'
        model = FlowModel.initialize(ModelConfig(d=8, k=1),
                                     np.random.default_rng(0))
        save_checkpoint(model, None, str(checkpoint))
        residuals = tmp_path / 'residuals.csv'
        code, result = _run(capsys, 'coverage', '--source', 'model',
                            '--checkpoints', checkpoint, '--m', 4,
                            '--dest', tmp_path / 'model.csv',
                            '--compare', truth, '--residual-dest', residuals,
                            *grid)
        assert code == 0
        assert result['rmse_db'] >= 0.0
        header, rows = read_csv(str(residuals))
        assert header == ['x', 'y', 'rel', 'rel_db']
        assert len(rows) == 16

    def test_checkpoint_per_order(self, capsys, tmp_path):
        code, result = _run(capsys, 'coverage', '--source', 'model',
                            '--k-max', 2, '--dest', tmp_path / 'c.csv')
        assert code == RC_BAD_FLAG
        assert 'checkpoint' in result['msg']

    def test_bad_tx(self, capsys, tmp_path):
        code, _ = _run(capsys, 'coverage', '--tx', 1, 2,
                       '--dest', tmp_path / 'c.csv')
        assert code == RC_BAD_FLAG


class TestBench:

    def test_exhaustive_validations(self, capsys, tmp_path):
        dest = tmp_path / 'bench.csv'
        code, result = _run(capsys, 'bench', '--n', 10, '--k', 2,
                            '--methods', 'exhaustive', '--repeats', 1,
                            '--dest', dest, *SMALL)
        assert code == 0
        assert len(result['rows']) == 1
        assert result['rows'][0]['validations'] == 100
        assert result['fits'] == []

    def test_sampler_fit(self, capsys, tmp_path):
        code, result = _run(capsys, 'bench', '--n', 10, 20, '--k', 1,
                            '--m', 2, '--methods', 'sampler', '--repeats', 1,
                            '--d', 8, '--dest', tmp_path / 'bench.csv',
                            *SMALL)
        assert code == 0
        assert len(result['rows']) == 2
        assert [(fit['k'], fit['m']) for fit in result['fits']] == [(1, 2)]

    def test_bad_method(self, capsys, tmp_path):
        code, _, _ = _invoke(capsys, 'bench', '--methods', 'guess',
                                    '--dest', tmp_path / 'bench.csv')
        assert code == 2
