# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

import numpy as np
import pytest

from gfnpath.module_utils.exception import CoincidentEndpoints
from gfnpath.module_utils.geometry import (azimuthal_rotation,
                                           canonical_frame,
                                           canonical_triangles, to_canonical,
                                           similarity_transform)


class TestCanonicalFrame:
    """Basis, scale and the image of the endpoints."""

    def test_tx_maps_to_origin_and_rx_to_unit_z(self):
        frame = canonical_frame((1.0, 2.0, 3.0), (4.0, 6.0, 3.0))
        assert frame.scale == pytest.approx(5.0)
        np.testing.assert_allclose(to_canonical(frame, (1.0, 2.0, 3.0)),
                                   [0.0, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(to_canonical(frame, (4.0, 6.0, 3.0)),
                                   [0.0, 0.0, 1.0], atol=1e-15)

    def test_basis_is_orthonormal_with_horizontal_lateral_axis(self):
        frame = canonical_frame((0.0, 0.0, 0.0), (3.0, -1.0, 2.0))
        np.testing.assert_allclose(frame.basis @ frame.basis.T, np.eye(3),
                                   atol=1e-12)
        assert abs(frame.u[2]) < 1e-15

    def test_vertical_link_uses_fixed_lateral_axis(self):
        frame = canonical_frame((0.0, 0.0, 0.0), (0.0, 0.0, 7.0))
        np.testing.assert_allclose(frame.u, [1.0, 0.0, 0.0])
        np.testing.assert_allclose(frame.basis @ frame.basis.T, np.eye(3),
                                   atol=1e-12)

    def test_coincident_endpoints(self):
        with pytest.raises(CoincidentEndpoints):
            canonical_frame((1.0, 1.0, 1.0), (1.0, 1.0, 1.0 + 1e-13))

    def test_non_finite_point(self):
        with pytest.raises(ValueError):
            canonical_frame((np.nan, 0.0, 0.0), (1.0, 0.0, 0.0))

    def test_canonical_triangles_shape(self):
        frame = canonical_frame((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        triangles = np.arange(2 * 9, dtype=np.float64).reshape(2, 3, 3)
        rows = canonical_triangles(frame, triangles)
        assert rows.shape == (2, 9)
        np.testing.assert_allclose(rows[1, 3:6],
                                   to_canonical(frame, triangles[1, 1]))


class TestInvariance:
    """Canonical coordinates under global similarity transforms."""

    def test_translation_scaling_and_azimuthal_rotation(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            points = rng.uniform(-50.0, 50.0, size=(6, 3))
            tx, rx = points[0], points[1]
            scale = rng.uniform(0.1, 10.0)
            rotation = azimuthal_rotation(rng.uniform(0.0, 2.0 * np.pi))
            translation = rng.uniform(-100.0, 100.0, size=3)
            moved = similarity_transform(points, scale, rotation, translation)

            before = to_canonical(canonical_frame(tx, rx), points)
            after = to_canonical(canonical_frame(moved[0], moved[1]), moved)
            np.testing.assert_allclose(after, before, rtol=0.0, atol=1e-9)

    def test_tilted_rotation_is_not_an_invariance(self):
        points = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0],
                           [5.0, 3.0, 1.0]])
        c, s = np.cos(0.5), np.sin(0.5)
        tilt = np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
        moved = similarity_transform(points, rotation=tilt)
        before = to_canonical(canonical_frame(points[0], points[1]), points)
        after = to_canonical(canonical_frame(moved[0], moved[1]), moved)
        assert not np.allclose(before, after, atol=1e-6)
