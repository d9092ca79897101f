# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

import numpy as np
import pytest

from gfnpath.module_utils.exception import (BudgetExceeded, Io,
                                            NonTriangleFace, ParseError)
from gfnpath.module_utils.gfnpath_common import read_csv
from gfnpath.module_utils.scenes import (CanyonParams, generate_canyon,
                                         generate_non_empty,
                                         point_inside_building, read_scene,
                                         scene_stats, write_scene)


class TestCanyonParams:

    def test_defaults(self):
        params = CanyonParams()
        assert params.n_buildings_per_side == 5
        assert params.slot_length == pytest.approx(28.0)
        assert params.canyon_rectangle() == (-10.0, 10.0, 0.0, 140.0)
        assert params.whole_rectangle() == (-30.0, 30.0, 0.0, 140.0)

    @pytest.mark.parametrize('kwargs', [
        dict(keep_min=0.9, keep_max=0.5),
        dict(keep_max=1.5),
        dict(height_min=50.0),
        dict(n_buildings_per_side=0),
        dict(street_width=0.0),
        dict(include_ground='sometimes'),
        dict(sampling_region='city'),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            CanyonParams(**kwargs)


class TestGenerateCanyon:

    def test_pure_function_of_the_stream(self):
        params = CanyonParams()
        first = generate_canyon(params, np.random.default_rng(7))
        second = generate_canyon(params, np.random.default_rng(7))
        np.testing.assert_array_equal(first.vertices, second.vertices)
        np.testing.assert_array_equal(first.faces, second.faces)
        np.testing.assert_array_equal(first.tx, second.tx)
        np.testing.assert_array_equal(first.rx, second.rx)

    def test_full_canyon(self):
        params = CanyonParams(keep_min=1.0, keep_max=1.0)
        scene = generate_canyon(params, np.random.default_rng(0))
        # Ten buildings of ten triangles and the two ground triangles.
        assert scene.n_objects == 102
        assert len(scene.boxes) == 10

    def test_mean_kept_fraction(self):
        params = CanyonParams(keep_min=0.5, keep_max=0.5,
                              include_ground='never')
        rng = np.random.default_rng(8)
        slots = 2 * params.n_buildings_per_side
        kept = [len(generate_canyon(params, rng).boxes) / float(slots)
                for _ in range(3000)]
        assert np.mean(kept) == pytest.approx(0.5, abs=0.02)

    def test_ground_policy(self):
        never = generate_canyon(CanyonParams(include_ground='never',
                                             keep_min=1.0, keep_max=1.0),
                                np.random.default_rng(0))
        assert never.n_objects == 100
        assert np.all(never.centroids[:, 2] > 0.0)

    def test_buildings_stay_on_their_side(self):
        params = CanyonParams()
        rng = np.random.default_rng(3)
        for _ in range(20):
            scene = generate_canyon(params, rng)
            for xmin, xmax, ymin, ymax, height in scene.boxes:
                assert xmax <= -10.0 or xmin >= 10.0
                assert xmax - xmin <= params.footprint_max
                assert 0.0 <= ymin < ymax <= params.street_length
                assert params.height_min <= height <= params.height_max

    def test_endpoints_in_the_sampling_region(self):
        params = CanyonParams()
        rng = np.random.default_rng(4)
        for _ in range(50):
            scene = generate_canyon(params, rng)
            assert -10.0 <= scene.tx[0] <= 10.0
            assert -10.0 <= scene.rx[0] <= 10.0
            assert 2.0 <= scene.tx[2] <= 50.0
            assert 1.0 <= scene.rx[2] <= 2.0

    def test_whole_region_without_inside_placements(self):
        params = CanyonParams(sampling_region='whole')
        rng = np.random.default_rng(5)
        for _ in range(30):
            scene = generate_canyon(params, rng, allow_inside=False)
            assert not point_inside_building(scene.boxes, scene.tx)
            assert not point_inside_building(scene.boxes, scene.rx)

    def test_empty_scene_is_skipped(self):
        params = CanyonParams(include_ground='never', keep_min=0.0,
                              keep_max=0.0)
        assert generate_canyon(params, np.random.default_rng(0)).n_objects \
            == 0
        params = CanyonParams(include_ground='random', keep_min=0.0,
                              keep_max=0.0)
        assert generate_non_empty(params, np.random.default_rng(0)) \
            .n_objects == 2


class TestSceneStats:

    def test_orders(self, small_canyon):
        stats = scene_stats(small_canyon, 10, 2, np.random.default_rng(0))
        assert [row.k for row in stats.rows] == [0, 1, 2]
        assert stats.row(0).mean_candidates == 1.0
        # One building per side and the ground.
        assert stats.row(1).mean_candidates == 22.0
        assert stats.row(2).mean_candidates == 22.0 ** 2
        for row in stats.rows:
            assert 0.0 <= row.valid_fraction <= 1.0
        assert stats.row(2).valid_fraction < stats.row(1).valid_fraction

    def test_no_repeat_count(self, small_canyon):
        stats = scene_stats(small_canyon, 2, 2, np.random.default_rng(0),
                            no_repeat=True, k_min=2)
        assert [row.k for row in stats.rows] == [2]
        assert stats.row(2).mean_candidates == 22.0 * 21.0

    def test_budget(self, small_canyon):
        with pytest.raises(BudgetExceeded):
            scene_stats(small_canyon, 1, 3, np.random.default_rng(0),
                        cap=1000)

    def test_csv(self, small_canyon, tmp_path):
        stats = scene_stats(small_canyon, 2, 1, np.random.default_rng(0))
        path = str(tmp_path / 'stats.csv')
        stats.to_csv(path, cmdline='gfnpath stats --k 1')
        with open(path) as fp:
            assert fp.readline() == '# cmdline: gfnpath stats --k 1\n'
        header, rows = read_csv(path)
        assert header == ['k', 'mean_candidates', 'valid_fraction']
        assert len(rows) == 2


class TestSceneFile:

    def test_round_trip(self, tmp_path):
        scene = generate_canyon(CanyonParams(), np.random.default_rng(2))
        path = str(tmp_path / 'scene.obj')
        write_scene(scene, path)
        loaded = read_scene(path)
        np.testing.assert_array_equal(loaded.vertices, scene.vertices)
        np.testing.assert_array_equal(loaded.faces, scene.faces)
        np.testing.assert_array_equal(loaded.tx, scene.tx)
        np.testing.assert_array_equal(loaded.rx, scene.rx)

    def test_reads_obj_extras(self, tmp_path):
        path = tmp_path / 'scene.obj'
        path.write_text('# tx 0 0 1\n#rx 5 0 1\nmtllib a.mtl\no wall\n'
                        'v 1 -1 0\nv 1 1 0\nv 1 0 2\nvn 1 0 0\n'
                        's off\nf 1//1 2//1 3//1\n')
        scene = read_scene(str(path))
        assert scene.n_objects == 1
        np.testing.assert_array_equal(scene.rx, [5.0, 0.0, 1.0])

    @pytest.mark.parametrize('text, line', [
        ('# tx 0 0 1\n# rx 1 0 1\nv 0 0\n', 3),
        ('# tx 0 0 1\n# rx 1 0 1\nv 0 0 x\n', 3),
        ('# tx 0 0 1\n# rx 1 0 1\nv 0 0 0\nf 1 2 3\n', 4),
        ('# tx 0 0 1\n# tx 1 0 1\n', 2),
        ('# tx 0 0 1\n# rx 1 0 1\nl 1 2\n', 3),
    ])
    def test_parse_errors(self, tmp_path, text, line):
        path = tmp_path / 'bad.obj'
        path.write_text(text)
        with pytest.raises(ParseError) as excinfo:
            read_scene(str(path))
        assert excinfo.value.line == line
        assert 'line %d' % line in str(excinfo.value)

    def test_missing_directive(self, tmp_path):
        path = tmp_path / 'bad.obj'
        path.write_text('# tx 0 0 1\nv 0 0 0\n')
        with pytest.raises(ParseError):
            read_scene(str(path))

    def test_quad_face(self, tmp_path):
        path = tmp_path / 'quad.obj'
        path.write_text('# tx 0 0 1\n# rx 1 0 1\nv 0 0 0\nv 1 0 0\n'
                        'v 1 1 0\nv 0 1 0\nf 1 2 3 4\n')
        with pytest.raises(NonTriangleFace) as excinfo:
            read_scene(str(path))
        assert excinfo.value.line == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(Io):
            read_scene(str(tmp_path / 'missing.obj'))
