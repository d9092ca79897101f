# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""The gfnpath command: ``gfnpath <subcommand> [options]``."""

# Standard library imports
import importlib
import sys
from argparse import ArgumentParser

from gfnpath.version import DATE, VERSION

# Subcommand name -> module under gfnpath.modules.
SUBCOMMANDS = {
    'generate': 'generate',
    'stats': 'stats',
    'train': 'train',
    'eval': 'evaluate',
    'coverage': 'coverage',
    'bench': 'bench',
}


def _parser():
    parser = ArgumentParser(
        prog='gfnpath',
        description="Ray path sampling with generative flow networks and an "
                    "exhaustive image-method oracle.",
        epilog="Run 'gfnpath <subcommand> --help' for the options of a "
               "subcommand.")
    parser.add_argument('--version', action='version',
                        version='%%(prog)s %s (%s)' % (VERSION, DATE))
    parser.add_argument('subcommand', choices=sorted(SUBCOMMANDS),
                        help="One of %(choices)s.")
    return parser


def main(argv=None):
    """Dispatch argv to the main() of a subcommand module.

    Exits 0 on success, 2 on an unknown subcommand or bad flag, and with the
    subcommand's return code otherwise.
    """
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    args = _parser().parse_args(argv[:1])
    module = importlib.import_module('gfnpath.modules.%s' %
                                     SUBCOMMANDS[args.subcommand])
    return module.main(argv[1:])


if __name__ == '__main__':
    main()
