#!/usr/bin/python
# -*- coding: utf-8 -*-

# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

DOCUMENTATION = '''
---
extends_documentation_fragment:
  - gfnpath_common.logging_documentation
  - gfnpath_common.run_documentation
  - gfnpath_common.canyon_documentation
module: coverage
short_description: Coverage map of a receiver grid
description:
  - Compute the total path gain (sum of 1/length^2 over the paths found) of
    every cell of a horizontal receiver grid, for the line-of-sight path and
    interaction orders 1 to I(k_max).
  - With C(--source exhaustive) every valid path is enumerated. With
    C(--source model) each order is sampled I(m) times per cell from the
    matching checkpoint and duplicates are counted once.
  - With I(compare) the computed map is compared against a coverage CSV
    taken as ground truth and the residual map is written to
    I(residual_dest).
options:
  scene:
    description:
      - Scene file. A canyon is generated from the canyon options when
        omitted.
    required: false
    default: none
    type: path
  tx:
    description:
      - Transmitter position. Defaults to the TX of the scene.
    required: false
    default: none
    type: list
    elements: float
  extent:
    description:
      - Grid rectangle C(xmin xmax ymin ymax). Defaults to the whole canyon
        of generated scenes, else to the horizontal extent of the scene.
    required: false
    default: none
    type: list
    elements: float
  cell:
    description:
      - Cell size in meters.
    required: false
    default: 1.0
    type: float
  height:
    description:
      - Height of the receiver plane in meters.
    required: false
    default: 1.5
    type: float
  k_max:
    description:
      - Highest interaction order.
    required: false
    default: 2
    type: int
  source:
    description:
      - Where the paths come from.
    required: false
    default: exhaustive
    choices: [exhaustive, model]
    type: str
  checkpoints:
    description:
      - One checkpoint per order 1 to I(k_max), required by C(--source model).
    required: false
    default: none
    type: list
    elements: path
  m:
    description:
      - Samples per cell and order for C(--source model).
    required: false
    default: 10
    type: int
  budget:
    description:
      - Enumeration cap of one cell and order.
    required: false
    default: 5000000
    type: int
  dest:
    description:
      - Path of the coverage CSV.
    required: false
    default: coverage.csv
    type: path
  compare:
    description:
      - Ground truth coverage CSV to compare the computed map against.
    required: false
    default: none
    type: path
  residual_dest:
    description:
      - Path of the residual CSV (C(x,y,rel,rel_db)).
    required: false
    default: residuals.csv
    type: path
  rmse_region:
    description:
      - Cells entering the RMSE, all of them or those of the street canyon.
    required: false
    default: full
    choices: [full, canyon]
    type: str
'''

EXAMPLES = '''
gfnpath coverage --source exhaustive --k-max 2 --dest gt.csv
gfnpath coverage --source model --checkpoints k1.ckpt k2.ckpt --k-max 2 \\
    --dest pred.csv --compare gt.csv --rmse-region canyon
'''

RETURN = '''
dest:
  description:
    - Path of the coverage CSV.
  returned: success
  type: str
cells:
  description:
    - Number of grid cells.
  returned: success
  type: int
covered:
  description:
    - Number of cells with a positive gain.
  returned: success
  type: int
rmse_db:
  description:
    - Root mean square of the dB residuals. Null when no cell is defined.
  returned: when I(compare) is set
  type: float
msg:
  description:
    - A human-readable summary.
  returned: always
  type: str
'''

# Standard library imports
import math
import sys

import numpy as np

from gfnpath.module_utils import gfnpath_common
from gfnpath.module_utils.evaluation import (CoverageGrid, GridSpec,
                                             coverage_map, region_mask,
                                             residual_maps)
from gfnpath.module_utils.exception import BadFlag, GfnPathError
from gfnpath.module_utils.nn import load_checkpoint
from gfnpath.module_utils.scenes import generate_canyon, read_scene

# Sub-stream of the run seed used by scene generation.
SCENE_STREAM = 1


def _load_models(paths):
    models = {}
    for k, path in enumerate(paths, start=1):
        model, _ = load_checkpoint(path)
        if model.config.k != k:
            raise BadFlag("Checkpoint %s has order K=%d, expected K=%d." %
                          (path, model.config.k, k))
        models[k] = model
    return models


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        scene=dict(type='path', required=False, default=None),
        tx=dict(type='list', elements='float', required=False, default=None),
        extent=dict(type='list', elements='float', required=False,
                    default=None),
        cell=dict(type='float', required=False, default=1.0),
        height=dict(type='float', required=False, default=1.5),
        k_max=dict(type='int', required=False, default=2),
        source=dict(type='str', required=False, default='exhaustive',
                    choices=['exhaustive', 'model']),
        checkpoints=dict(type='list', elements='path', required=False,
                         default=None),
        m=dict(type='int', required=False, default=10),
        budget=dict(type='int', required=False, default=5000000),
        dest=dict(type='path', required=False, default='coverage.csv'),
        compare=dict(type='path', required=False, default=None),
        residual_dest=dict(type='path', required=False,
                           default='residuals.csv'),
        rmse_region=dict(type='str', required=False, default='full',
                         choices=['full', 'canyon']),
    )
    argument_spec.update(gfnpath_common.canyon_spec)

    module = gfnpath_common.GfnPathModule(
        'coverage',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False}
    try:
        module.bad_flag(params['k_max'] >= 0,
                        "The value of the k_max option (%d) must be >= 0." %
                        params['k_max'])
        module.bad_flag(params['m'] >= 1,
                        "The value of the m option (%d) must be >= 1." %
                        params['m'])
        module.bad_flag(params['tx'] is None or len(params['tx']) == 3,
                        "The tx option takes 3 coordinates.")
        module.bad_flag(params['extent'] is None or
                        len(params['extent']) == 4,
                        "The extent option takes xmin xmax ymin ymax.")
        models = None
        if params['source'] == 'model':
            checkpoints = params['checkpoints'] or []
            module.bad_flag(len(checkpoints) == params['k_max'],
                            "--source model needs one checkpoint per order "
                            "1..%d, got %d." % (params['k_max'],
                                                len(checkpoints)))
            models = _load_models(checkpoints)
        canyon = gfnpath_common.canyon_params(params)

        if params['scene'] is not None:
            scene = read_scene(params['scene'])
            extent = params['extent'] or (
                float(scene.vertices[:, 0].min()),
                float(scene.vertices[:, 0].max()),
                float(scene.vertices[:, 1].min()),
                float(scene.vertices[:, 1].max()))
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence([params['seed'], SCENE_STREAM]))
            scene = generate_canyon(canyon, rng)
            extent = params['extent'] or canyon.whole_rectangle()
        tx = params['tx'] if params['tx'] is not None else scene.tx
        try:
            spec = GridSpec(extent[0], extent[1], extent[2], extent[3],
                            cell=params['cell'], height=params['height'])
        except ValueError as ex:
            raise BadFlag(str(ex))

        grid = coverage_map(scene, tx, spec, params['k_max'], models=models,
                            m=params['m'], seed=params['seed'],
                            cap=params['budget'], workers=params['threads'])
        grid.to_csv(params['dest'], cmdline=module.cmdline)
        results['dest'] = params['dest']
        results['cells'] = int(grid.gain.size)
        results['covered'] = int(np.count_nonzero(grid.gain))

        if params['compare'] is not None:
            truth = CoverageGrid.from_csv(params['compare'],
                                          height=params['height'])
            mask = None
            if params['rmse_region'] == 'canyon':
                mask = region_mask(grid, canyon.canyon_rectangle())
            residuals = residual_maps(truth, grid, mask=mask)
            residuals.to_csv(params['residual_dest'], cmdline=module.cmdline)
            results['residual_dest'] = params['residual_dest']
            results['rmse_db'] = None if math.isnan(residuals.rmse_db) \
                else float(residuals.rmse_db)
            module.logger.info("RMSE (%s): %s dB", params['rmse_region'],
                               residuals.rmse_db)
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    results['changed'] = True
    results['msg'] = "Coverage of %d cell(s) written to %s." % (
        results['cells'], params['dest'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
