# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

import numpy as np
import pytest

from gfnpath.module_utils.scenes import CanyonParams
from gfnpath.module_utils.tracer import Scene


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help="Run the long acceptance tests.")


def pytest_configure(config):
    config.addinivalue_line('markers',
                            "slow: long running acceptance test")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def _quad(corners):
    """Two triangles (a, b, c) and (a, c, d) of a planar quad."""
    return np.array(corners, dtype=np.float64), np.array([[0, 1, 2],
                                                          [0, 2, 3]])


def _merge(parts, tx, rx):
    vertices = []
    faces = []
    offset = 0
    for part_vertices, part_faces in parts:
        vertices.append(part_vertices)
        faces.append(part_faces + offset)
        offset += len(part_vertices)
    return Scene(np.vstack(vertices), np.vstack(faces), tx, rx)


def corridor_parts():
    """Walls x = +5 (objects 0, 1) and x = -5 (objects 2, 3)."""
    east = _quad([[5.0, -20.0, 0.0], [5.0, 20.0, 0.0],
                  [5.0, 20.0, 10.0], [5.0, -20.0, 10.0]])
    west = _quad([[-5.0, -20.0, 0.0], [-5.0, 20.0, 0.0],
                  [-5.0, 20.0, 10.0], [-5.0, -20.0, 10.0]])
    return [east, west]


CORRIDOR_TX = (-1.0, -3.0, 2.0)
CORRIDOR_RX = (1.0, 3.0, 2.0)


@pytest.fixture
def corridor():
    """Two parallel walls: one reflection per wall at K=1, two paths at K=2."""
    return _merge(corridor_parts(), CORRIDOR_TX, CORRIDOR_RX)


@pytest.fixture
def blocked_corridor():
    """The corridor with a fifth triangle (object 4) across the TX-RX line."""
    blocker = (np.array([[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0],
                         [0.0, 0.0, 5.0]]), np.array([[0, 1, 2]]))
    return _merge(corridor_parts() + [blocker], CORRIDOR_TX, CORRIDOR_RX)


@pytest.fixture
def ground():
    """A single ground quad; the reflection point lies in object 1."""
    return _merge([_quad([[-10.0, -10.0, 0.0], [10.0, -10.0, 0.0],
                          [10.0, 10.0, 0.0], [-10.0, 10.0, 0.0]])],
                  (-3.0, 1.0, 2.0), (3.0, 1.0, 2.0))


@pytest.fixture
def small_canyon():
    """Canyon parameters small enough for exhaustive K=2 in tests."""
    return CanyonParams(n_buildings_per_side=1, keep_min=1.0, keep_max=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
