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
module: generate
short_description: Write procedurally generated street canyon scenes
description:
  - Draw I(n) street canyon scenes from the canyon options and write each one
    as an OBJ file with C(# tx) and C(# rx) directives.
  - Scenes are a pure function of I(seed) and the canyon options.
options:
  n:
    description:
      - Number of scenes to write.
    required: false
    default: 1
    type: int
  dest_dir:
    description:
      - Directory receiving the scene files. It is created if missing.
    required: false
    default: .
    type: path
  prefix:
    description:
      - File name prefix; files are named C(<prefix>_<index>.obj).
    required: false
    default: scene
    type: str
'''

EXAMPLES = '''
gfnpath generate --n 3 --seed 7 --dest-dir scenes
gfnpath generate --n 10 --keep-min 1.0 --keep-max 1.0 --ground never
'''

RETURN = '''
files:
  description:
    - Paths of the written scene files, in generation order.
  returned: success
  type: list
n_objects:
  description:
    - Number of triangles of each written scene.
  returned: success
  type: list
msg:
  description:
    - A human-readable summary.
  returned: always
  type: str
'''

# Standard library imports
import os
import sys

import numpy as np

from gfnpath.module_utils import gfnpath_common
from gfnpath.module_utils.exception import GfnPathError, Io
from gfnpath.module_utils.scenes import generate_canyon, write_scene

# Sub-stream of the run seed used by scene generation.
SCENE_STREAM = 1


def main(argv=None):
    # The argument spec for the module.
    argument_spec = dict(
        n=dict(type='int', required=False, default=1),
        dest_dir=dict(type='path', required=False, default='.'),
        prefix=dict(type='str', required=False, default='scene'),
    )
    argument_spec.update(gfnpath_common.canyon_spec)

    module = gfnpath_common.GfnPathModule(
        'generate',
        argument_spec=argument_spec,
        documentation=DOCUMENTATION,
        argv=argv)
    params = module.params

    results = {'msg': '', 'changed': False, 'files': [], 'n_objects': []}
    try:
        module.bad_flag(params['n'] >= 1,
                        "The value of the n option (%d) must be >= 1." %
                        params['n'])
        canyon = gfnpath_common.canyon_params(params)
        dest_dir = params['dest_dir']
        try:
            if not os.path.isdir(dest_dir):
                os.makedirs(dest_dir)
        except OSError as ex:
            raise Io("Unable to create %s. %s" % (dest_dir, str(ex)))
        rng = np.random.default_rng(
            np.random.SeedSequence([params['seed'], SCENE_STREAM]))
        width = max(4, len(str(params['n'] - 1)))
        for index in range(params['n']):
            scene = generate_canyon(canyon, rng)
            path = os.path.join(dest_dir, '%s_%0*d.obj' %
                                (params['prefix'], width, index))
            write_scene(scene, path)
            module.logger.info("Wrote %s (N=%d).", path, scene.n_objects)
            results['files'].append(path)
            results['n_objects'].append(int(scene.n_objects))
    except GfnPathError as ex:
        module.fail_json(msg=str(ex), rc=ex.rc)

    results['changed'] = True
    results['msg'] = "Wrote %d scene(s) to %s." % (params['n'],
                                                   params['dest_dir'])
    module.exit_json(**results)


if __name__ == '__main__':
    main(sys.argv[1:])
