# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

from gfnpath.version import VERSION

__version__ = VERSION.lstrip("v")
