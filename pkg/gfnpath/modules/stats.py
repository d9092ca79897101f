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
module: stats
short_description: Exhaustive path statistics of generated canyons
description:
  - Generate I(n_scenes) canyon scenes and, for every interaction order from
    I(k_min) to I(k), report the mean number of path candidates per scene and
    the fraction of them that are valid paths.
  - Order 0 is the line-of-sight path, a single candidate per scene.
  - Use I(region) and I(ground) to report the statistics of a given sampling
    region or ground policy.
options:
  n_scenes:
    description:
      - Number of scenes of the Monte-Carlo estimate.
    required: false
    default: 100
    type: int
    aliases:
      - n
  k:
    description:
      - Highest interaction order.
    required: false
    default: 3
    type: int
  k_min:
    description:
      - Lowest interaction order.
    required: false
    default: 0
    type: int
  no_repeat:
    description:
      - Skip candidates interacting twice in a row with the same object.
    required: false
    default: false
    type: bool
  budget:
    description:
      - Largest number of candidates one scene may enumerate at one order.
    required: false
    default: 5000000
    type: int
  dest:
    description:
      - Path of the statistics CSV (C(k,mean_candidates,valid_fraction)).
    required: false
    default: stats.csv
    type: path
'''

EXAMPLES = '''
gfnpath stats --n-scenes 100 --k 1 --seed 3
gfnpath stats --k 3 --region whole --ground never --dest whole.csv
'''

RETURN = '''
rows:
  description:
    - One entry per interaction order with keys C(k), C(mean_candidates)
      and C(valid_fraction).
  returned: success
  type: list
dest:
  description:
    - Path of the written CSV.
  returned: success
  type: str
msg:
  description:
    - A human-readable summary.
  returned: always
  type: str
'''

# Standard library imports
import sys

import numpy as np

from gfnpath.module_utils import gfnpath_common
from gfnpath.module_utils.exception import GfnPathError
from gfnpath.module_utils.scenes import scene_stats

# Sub-stream of the run seed used by scene generation.
SCENE_STREAM = 1


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        n_scenes=dict(type='int', required=False, default=100,
                      aliases=['n']),
        k=dict(type='int', required=False, default=3),
        k_min=dict(type='int', required=False, default=0),
        no_repeat=dict(type='bool', required=False, default=False),
        budget=dict(type='int', required=False, default=5000000),
        dest=dict(type='path', required=False, default='stats.csv'),
    )
    argument_spec.update(gfnpath_common.canyon_spec)

    module = gfnpath_common.GfnPathModule(
        'stats',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False, 'rows': []}
    try:
        module.bad_flag(params['n_scenes'] >= 1,
                        "The value of the n_scenes option (%d) must be >= 1."
                        % params['n_scenes'])
        module.bad_flag(0 <= params['k_min'] <= params['k'],
                        "The order range k_min=%d, k=%d is invalid." %
                        (params['k_min'], params['k']))
        module.bad_flag(params['budget'] >= 1,
                        "The value of the budget option (%d) must be >= 1."
                        % params['budget'])
        canyon = gfnpath_common.canyon_params(params)
        rng = np.random.default_rng(
            np.random.SeedSequence([params['seed'], SCENE_STREAM]))
        stats = scene_stats(canyon, params['n_scenes'], params['k'], rng,
                            no_repeat=params['no_repeat'],
                            cap=params['budget'],
                            workers=params['threads'],
                            k_min=params['k_min'])
        stats.to_csv(params['dest'], cmdline=module.cmdline)
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    for row in stats.rows:
        module.logger.info("K=%d: %.6g candidates, valid fraction %.6g",
                           row.k, row.mean_candidates, row.valid_fraction)
        results['rows'].append({'k': int(row.k),
                                'mean_candidates': float(row.mean_candidates),
                                'valid_fraction': float(row.valid_fraction)})
    results['dest'] = params['dest']
    results['changed'] = True
    results['msg'] = "Statistics of %d scene(s) written to %s." % (
        params['n_scenes'], params['dest'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
