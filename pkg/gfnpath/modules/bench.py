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
module: bench
short_description: Time exhaustive enumeration against model sampling
description:
  - For every scene size I(n) a fully built canyon is cut down to its first
    I(n) triangles. For every order I(k) the median wall time of the
    exhaustive solver (N^K validations) and of the sampler (scene encoding
    plus I(m) trajectories, one validation each) is measured over I(repeats)
    runs.
  - Orders without a checkpoint are timed with a freshly initialized model
    of size I(d); its cost equals a trained model of the same size.
  - When at least two sizes are given, the sampler times of every (k, m)
    pair are fitted with a line in N.
options:
  n:
    description:
      - Scene sizes, in triangles.
    required: false
    default: [50, 100, 200]
    type: list
    elements: int
  k:
    description:
      - Interaction orders.
    required: false
    default: [1, 2]
    type: list
    elements: int
  m:
    description:
      - Samples per sampler run.
    required: false
    default: [10]
    type: list
    elements: int
  repeats:
    description:
      - Timed runs per configuration; the median is reported.
    required: false
    default: 3
    type: int
  methods:
    description:
      - Methods to time.
    required: false
    default: [exhaustive, sampler]
    choices: [exhaustive, sampler]
    type: list
    elements: str
  checkpoints:
    description:
      - Checkpoints of trained models, matched to orders by their K.
    required: false
    default: none
    type: list
    elements: path
  d:
    description:
      - Embedding size of the models built for orders without a checkpoint.
    required: false
    default: 128
    type: int
  budget:
    description:
      - Largest N^K the exhaustive method may enumerate.
    required: false
    default: 5000000
    type: int
  dest:
    description:
      - Path of the benchmark CSV
        (C(n,k,method,m,median_seconds,validations)).
    required: false
    default: bench.csv
    type: path
'''

EXAMPLES = '''
gfnpath bench --n 10 --k 2 --methods exhaustive
gfnpath bench --n 100 200 400 --k 3 --m 10 --checkpoints k3.ckpt
'''

RETURN = '''
rows:
  description:
    - One entry per timed configuration.
  returned: success
  type: list
fits:
  description:
    - Linear fits C(slope), C(intercept), C(r2) of the sampler time in N,
      one per (k, m) pair timed on two sizes or more.
  returned: success
  type: list
msg:
  description:
    - A human-readable summary.
  returned: always
  type: str
'''

# Standard library imports
import sys

from gfnpath.module_utils import gfnpath_common
from gfnpath.module_utils.evaluation import (benchmark, linear_fit,
                                             write_benchmark)
from gfnpath.module_utils.exception import BadFlag, GfnPathError
from gfnpath.module_utils.nn import load_checkpoint


def sampler_fits(rows):
    """Linear fit of the sampler median time in N for each (k, m)."""
    series = {}
    for row in rows:
        if row.method == 'sampler':
            series.setdefault((row.k, row.m), []).append(row)
    fits = []
    for (k, m), points in sorted(series.items()):
        if len(set(point.n for point in points)) < 2:
            continue
        slope, intercept, r2 = linear_fit([point.n for point in points],
                                          [point.median_seconds
                                           for point in points])
        fits.append({'k': int(k), 'm': int(m), 'slope': slope,
                     'intercept': intercept, 'r2': r2})
    return fits


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        n=dict(type='list', elements='int', required=False,
               default=[50, 100, 200]),
        k=dict(type='list', elements='int', required=False, default=[1, 2]),
        m=dict(type='list', elements='int', required=False, default=[10]),
        repeats=dict(type='int', required=False, default=3),
        methods=dict(type='list', elements='str', required=False,
                     default=['exhaustive', 'sampler'],
                     choices=['exhaustive', 'sampler']),
        checkpoints=dict(type='list', elements='path', required=False,
                         default=None),
        d=dict(type='int', required=False, default=128),
        budget=dict(type='int', required=False, default=5000000),
        dest=dict(type='path', required=False, default='bench.csv'),
    )
    argument_spec.update(gfnpath_common.canyon_spec)

    module = gfnpath_common.GfnPathModule(
        'bench',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False}
    try:
        module.bad_flag(all(n >= 1 for n in params['n']),
                        "Scene sizes must be >= 1, got %s." % params['n'])
        module.bad_flag(all(k >= 1 for k in params['k']),
                        "Orders must be >= 1, got %s." % params['k'])
        module.bad_flag(all(m >= 1 for m in params['m']),
                        "Sample counts must be >= 1, got %s." % params['m'])
        module.bad_flag(params['repeats'] >= 1,
                        "The value of the repeats option (%d) must be >= 1."
                        % params['repeats'])
        module.bad_flag(params['d'] >= 1,
                        "The value of the d option (%d) must be >= 1." %
                        params['d'])
        canyon = gfnpath_common.canyon_params(params)
        models = {}
        for path in params['checkpoints'] or []:
            model, _ = load_checkpoint(path)
            if model.config.k in models:
                raise BadFlag("Two checkpoints of order K=%d." %
                              model.config.k)
            models[model.config.k] = model
        try:
            rows = benchmark(canyon, params['n'], params['k'], params['m'],
                             repeats=params['repeats'], models=models,
                             seed=params['seed'], d=params['d'],
                             cap=params['budget'],
                             methods=tuple(params['methods']))
        except ValueError as ex:
            raise BadFlag(str(ex))
        write_benchmark(rows, params['dest'], cmdline=module.cmdline)
        fits = sampler_fits(rows)
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    for fit in fits:
        module.logger.info("sampler K=%d M=%d: %.3g s per object, R2=%.3f",
                           fit['k'], fit['m'], fit['slope'], fit['r2'])
    results['rows'] = [{'n': int(row.n), 'k': int(row.k),
                        'method': row.method, 'm': int(row.m),
                        'median_seconds': float(row.median_seconds),
                        'validations': int(row.validations)}
                       for row in rows]
    results['fits'] = fits
    results['dest'] = params['dest']
    results['changed'] = True
    results['msg'] = "%d timing row(s) written to %s." % (len(rows),
                                                          params['dest'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
