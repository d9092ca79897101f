# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Canonical frame of a TX/RX link.

The canonical frame translates TX to the origin, divides by the link length
and rotates the link onto the local z axis while keeping the lateral axis
horizontal. Coordinates expressed in it are invariant to a global
translation, a global scaling and any rotation about the vertical axis of
the world frame. They are NOT invariant to tilted rotations.
"""

import logging
from dataclasses import dataclass

import numpy as np

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils.exception import CoincidentEndpoints

logger = logging.getLogger(__name__)

E_Z = np.array([0.0, 0.0, 1.0])
# Below this norm of w x e_z the link is treated as vertical.
VERTICAL_THRESHOLD = 1e-9


def as_vec3(value):
    """Return value as a float64 array of shape (3,)."""
    vec = np.asarray(value, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(vec)):
        raise ValueError("Vec3 components must be finite, got %s" % (vec,))
    return vec


@dataclass(frozen=True)
class CanonicalFrame:
    """Basis R (rows u, v, w), scale s (meters) and origin (TX)."""

    basis: np.ndarray
    scale: float
    origin: np.ndarray

    @property
    def u(self):
        return self.basis[0]

    @property
    def v(self):
        return self.basis[1]

    @property
    def w(self):
        return self.basis[2]


def canonical_frame(tx, rx):
    """Build the canonical frame of the link tx -> rx.

    Args:
        tx: Transmitter position.
        rx: Receiver position.

    Returns:
        A CanonicalFrame.

    Raises:
        CoincidentEndpoints: |rx - tx| <= 1e-12 m.
    """
    tx = as_vec3(tx)
    rx = as_vec3(rx)
    link = rx - tx
    scale = float(np.linalg.norm(link))
    if scale <= cfg.COINCIDENCE_THRESHOLD:
        raise CoincidentEndpoints(
            "TX %s and RX %s coincide (distance %g m)." % (tx, rx, scale))
    w = link / scale
    lateral = np.cross(w, E_Z)
    norm = np.linalg.norm(lateral)
    if norm > VERTICAL_THRESHOLD:
        u = lateral / norm
    else:
        # Vertical link: no horizontal direction is singled out by the link.
        logger.debug("Vertical link %s -> %s, using the fixed lateral axis.",
                     tx, rx)
        u = np.array([1.0, 0.0, 0.0])
    v = np.cross(w, u)
    basis = np.vstack([u, v, w])
    return CanonicalFrame(basis=basis, scale=scale, origin=tx)


def to_canonical(frame, points):
    """Map world points (..., 3) to the canonical frame.

    Each output point is R ((x - x_TX) / s).
    """
    points = np.asarray(points, dtype=np.float64)
    return ((points - frame.origin) / frame.scale) @ frame.basis.T


def canonical_triangles(frame, triangles):
    """Return the (N, 9) canonical vertex rows of an (N, 3, 3) triangle soup."""
    triangles = np.asarray(triangles, dtype=np.float64)
    return to_canonical(frame, triangles).reshape(len(triangles), 9)


def azimuthal_rotation(angle):
    """Rotation matrix about the world vertical axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0],
                     [s, c, 0.0],
                     [0.0, 0.0, 1.0]])


def similarity_transform(points, scale=1.0, rotation=None, translation=None):
    """Apply x -> scale * Q x + b to points (..., 3)."""
    points = np.asarray(points, dtype=np.float64)
    if rotation is not None:
        points = points @ np.asarray(rotation, dtype=np.float64).T
    points = points * scale
    if translation is not None:
        points = points + np.asarray(translation, dtype=np.float64)
    return points
