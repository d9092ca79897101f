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
module: train
short_description: Train the flow model on generated canyon scenes
description:
  - Every iteration draws one fresh canyon scene, samples I(batch)
    trajectories on it, replays I(batch) valid pairs from the buffer and
    takes a single optimizer step on the whole model.
  - One metrics row is appended to I(metrics) per iteration. The checkpoint
    is written every I(val_every) iterations and at exit.
options:
  iterations:
    description:
      - Number of training iterations.
    required: false
    default: 1000
    type: int
  batch:
    description:
      - Fresh trajectories per iteration, also the replay batch size.
    required: false
    default: 64
    type: int
  alpha:
    description:
      - Weight of the replay loss, or the probability of drawing a sample
        from the buffer when I(replay_mode=probabilistic).
    required: false
    default: 0.5
    type: float
  epsilon:
    description:
      - Probability of a uniform draw over the available objects.
    required: false
    default: 0.1
    type: float
  lr:
    description:
      - Learning rate.
    required: false
    default: 0.0001
    type: float
  optimizer:
    description:
      - Optimizer of the joint update.
    required: false
    default: adam
    choices: [adam, sgd]
    type: str
  val_every:
    description:
      - Iterations between two validations and checkpoints (0 disables).
    required: false
    default: 1000
    type: int
  val_scenes:
    description:
      - Number of held-out validation scenes.
    required: false
    default: 100
    type: int
  m:
    description:
      - Samples per validation scene.
    required: false
    default: 10
    type: int
  buffer:
    description:
      - Replay valid pairs. Use C(--no-buffer) to disable the buffer.
    required: false
    default: true
    type: bool
  buffer_capacity:
    description:
      - Capacity of the replay buffer.
    required: false
    default: 10000
    type: int
  check_buffer:
    description:
      - Revalidate every pair pushed into the buffer.
    required: false
    default: false
    type: bool
  replay_mode:
    description:
      - C(weighted) mixes two batches with weights 1-alpha and alpha,
        C(probabilistic) replaces each fresh sample with probability alpha.
    required: false
    default: weighted
    choices: [weighted, probabilistic]
    type: str
  mask:
    description:
      - Mask actions during training. Use C(--no-mask) to disable.
    required: false
    default: true
    type: bool
  distance_weights:
    description:
      - Weight the policy by inverse squared distances during training.
    required: false
    default: false
    type: bool
  symmetry:
    description:
      - Also learn every sampled candidate reversed on the TX/RX swapped
        scene.
    required: false
    default: false
    type: bool
  checkpoint:
    description:
      - Path of the checkpoint file.
    required: false
    default: model.ckpt
    type: path
  metrics:
    description:
      - Path of the metrics CSV.
    required: false
    default: metrics.csv
    type: path
  resume:
    description:
      - Continue from the model and optimizer state of this checkpoint.
    required: false
    default: none
    type: path
  budget:
    description:
      - Enumeration cap of the validation ground truth.
    required: false
    default: 5000000
    type: int
'''

EXAMPLES = '''
gfnpath train --iterations 50000 --k 1 --seed 1
gfnpath train --k 2 --no-buffer --iterations 200000 --metrics nobuffer.csv
gfnpath train --resume model.ckpt --iterations 1000
'''

RETURN = '''
checkpoint:
  description:
    - Path of the written checkpoint.
  returned: success
  type: str
metrics:
  description:
    - Path of the metrics CSV.
  returned: success
  type: str
final:
  description:
    - Metrics of the last iteration.
  returned: success
  type: dict
msg:
  description:
    - A human-readable summary.
  returned: always
  type: str
'''

# Standard library imports
import math
import sys

from gfnpath.module_utils import gfnpath_common
from gfnpath.module_utils.exception import BadFlag, GfnPathError
from gfnpath.module_utils.trainer import TrainConfig, Trainer, resume


def _plain(value):
    value = float(value)
    return None if math.isnan(value) else value


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        iterations=dict(type='int', required=False, default=1000),
        batch=dict(type='int', required=False, default=64),
        alpha=dict(type='float', required=False, default=0.5),
        epsilon=dict(type='float', required=False, default=0.1),
        lr=dict(type='float', required=False, default=1e-4),
        optimizer=dict(type='str', required=False, default='adam',
                       choices=['adam', 'sgd']),
        val_every=dict(type='int', required=False, default=1000),
        val_scenes=dict(type='int', required=False, default=100),
        m=dict(type='int', required=False, default=10),
        buffer=dict(type='bool', required=False, default=True),
        buffer_capacity=dict(type='int', required=False, default=10000),
        check_buffer=dict(type='bool', required=False, default=False),
        replay_mode=dict(type='str', required=False, default='weighted',
                         choices=['weighted', 'probabilistic']),
        mask=dict(type='bool', required=False, default=True),
        distance_weights=dict(type='bool', required=False, default=False),
        symmetry=dict(type='bool', required=False, default=False),
        checkpoint=dict(type='path', required=False, default='model.ckpt'),
        metrics=dict(type='path', required=False, default='metrics.csv'),
        resume=dict(type='path', required=False, default=None),
        budget=dict(type='int', required=False, default=5000000),
    )
    argument_spec.update(gfnpath_common.canyon_spec)
    argument_spec.update(gfnpath_common.model_spec)

    module = gfnpath_common.GfnPathModule(
        'train',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False}
    try:
        module.bad_flag(params['iterations'] >= 0,
                        "The value of the iterations option (%d) must be "
                        ">= 0." % params['iterations'])
        module.bad_flag(params['val_every'] >= 0,
                        "The value of the val_every option (%d) must be "
                        ">= 0." % params['val_every'])
        module.bad_flag(params['val_scenes'] >= 1,
                        "The value of the val_scenes option (%d) must be "
                        ">= 1." % params['val_scenes'])
        canyon = gfnpath_common.canyon_params(params)
        try:
            config = TrainConfig(
                k=params['k'], d=params['d'], batch=params['batch'],
                alpha=params['alpha'], epsilon=params['epsilon'],
                lr=params['lr'], iterations=params['iterations'],
                val_every=params['val_every'],
                val_scenes=params['val_scenes'], m_val=params['m'],
                symmetry_augment=params['symmetry'], seed=params['seed'],
                use_buffer=params['buffer'],
                buffer_capacity=params['buffer_capacity'],
                replay_mode=params['replay_mode'],
                use_mask=params['mask'],
                use_distance_weights=params['distance_weights'],
                optimizer=params['optimizer'],
                check_buffer=params['check_buffer'],
                workers=params['threads'],
                enumeration_cap=params['budget'])
        except ValueError as ex:
            raise BadFlag(str(ex))
        kwargs = dict(metrics_path=params['metrics'],
                      checkpoint_path=params['checkpoint'],
                      cmdline=module.cmdline)
        if params['resume'] is not None:
            module.logger.info("Resuming from %s.", params['resume'])
            try:
                trainer = resume(config, canyon, params['resume'], **kwargs)
            except ValueError as ex:
                raise BadFlag(str(ex))
        else:
            trainer = Trainer(config, canyon, **kwargs)
        history = trainer.train()
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    if history:
        last = history[-1]
        results['final'] = {
            'iteration': int(last.iteration),
            'loss_new': _plain(last.loss_new),
            'loss_replay': _plain(last.loss_replay),
            'batch_accuracy': _plain(last.batch_accuracy),
            'buffer_size': int(last.buffer_size),
            'val_accuracy': _plain(last.val_accuracy),
            'val_hit_rate': _plain(last.val_hit_rate),
        }
    results['checkpoint'] = params['checkpoint']
    results['metrics'] = params['metrics']
    results['changed'] = True
    results['msg'] = "Trained %d iteration(s), checkpoint %s." % (
        len(history), params['checkpoint'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
