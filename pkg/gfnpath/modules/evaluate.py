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
  - gfnpath_common.model_documentation
module: eval
short_description: Accuracy and hit rate of a flow model
description:
  - Draw I(n_scenes) held-out canyon scenes, enumerate their valid paths and
    sample I(m) candidates per scene from the model with greedy settings
    (no exploration, masking on, no distance weights).
  - Without I(checkpoint) a freshly initialized model of size I(d) and order
    I(k) is evaluated; its flows are uniform.
options:
  checkpoint:
    description:
      - Checkpoint of the model to evaluate.
    required: false
    default: none
    type: path
  n_scenes:
    description:
      - Number of validation scenes.
    required: false
    default: 100
    type: int
    aliases:
      - n
  m:
    description:
      - Samples per scene.
    required: false
    default: 10
    type: int
  budget:
    description:
      - Enumeration cap of the ground truth.
    required: false
    default: 5000000
    type: int
  dest:
    description:
      - Optional CSV receiving C(k,m,n_scenes,accuracy,hit_rate).
    required: false
    default: none
    type: path
'''

EXAMPLES = '''
gfnpath eval --checkpoint model.ckpt --m 10 --n-scenes 100
gfnpath eval --k 1 --d 16 --dest baseline.csv
'''

RETURN = '''
accuracy:
  description:
    - Fraction of the sampled candidates that are valid paths.
  returned: success
  type: float
hit_rate:
  description:
    - Mean fraction of each scene's valid paths found by the samples, over
      scenes with at least one valid path. Null when there is none.
  returned: success
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
from gfnpath.module_utils.exception import BadFlag, GfnPathError
from gfnpath.module_utils.nn import FlowModel, ModelConfig, load_checkpoint
from gfnpath.module_utils.trainer import (STREAM_INIT, STREAM_VALIDATION,
                                          ValidationSet, validate)


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        checkpoint=dict(type='path', required=False, default=None),
        n_scenes=dict(type='int', required=False, default=100,
                      aliases=['n']),
        m=dict(type='int', required=False, default=10),
        budget=dict(type='int', required=False, default=5000000),
        dest=dict(type='path', required=False, default=None),
    )
    argument_spec.update(gfnpath_common.canyon_spec)
    argument_spec.update(gfnpath_common.model_spec)

    module = gfnpath_common.GfnPathModule(
        'eval',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False}
    try:
        module.bad_flag(params['m'] >= 1,
                        "The value of the m option (%d) must be >= 1." %
                        params['m'])
        module.bad_flag(params['n_scenes'] >= 1,
                        "The value of the n_scenes option (%d) must be >= 1."
                        % params['n_scenes'])
        canyon = gfnpath_common.canyon_params(params)
        if params['checkpoint'] is not None:
            model, _ = load_checkpoint(params['checkpoint'])
        else:
            try:
                config = ModelConfig(d=params['d'], k=params['k'])
            except ValueError as ex:
                raise BadFlag(str(ex))
            model = FlowModel.initialize(config, np.random.default_rng(
                np.random.SeedSequence([params['seed'], STREAM_INIT])))
        k = model.config.k
        rng = np.random.default_rng(
            np.random.SeedSequence([params['seed'], STREAM_VALIDATION]))
        validation = ValidationSet.generate(canyon, params['n_scenes'], k,
                                            rng, cap=params['budget'],
                                            workers=params['threads'])
        accuracy, hit_rate = validate(model, validation, params['m'],
                                      seed=params['seed'])
        if params['dest'] is not None:
            gfnpath_common.write_csv(
                params['dest'], ('k', 'm', 'n_scenes', 'accuracy', 'hit_rate'),
                [(k, params['m'], params['n_scenes'], accuracy, hit_rate)],
                cmdline=module.cmdline)
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    module.logger.info("K=%d accuracy=%.4f hit_rate=%.4f", k, accuracy,
                       hit_rate)
    results['k'] = int(k)
    results['accuracy'] = float(accuracy)
    results['hit_rate'] = None if math.isnan(hit_rate) else float(hit_rate)
    results['msg'] = "Accuracy %.4f, hit rate %s over %d scene(s)." % (
        accuracy, 'undef' if math.isnan(hit_rate) else '%.4f' % hit_rate,
        params['n_scenes'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
