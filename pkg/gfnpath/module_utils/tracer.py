# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Image-method specular path solver and exhaustive enumeration oracle.

Triangles are two-sided mirrors. A path candidate is a tuple of K object
indices; -1 marks a slot that has not been chosen yet. ``validate()`` is
the binary reward of the sampler and the ground truth of every benchmark.
"""

import itertools
import logging
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils.exception import (BudgetExceeded,
                                            CoincidentEndpoints,
                                            IncompleteTrajectory,
                                            IndexOutOfRange)
from gfnpath.module_utils.geometry import as_vec3

logger = logging.getLogger(__name__)

# Minimum triangle area, in square meters.
MIN_TRIANGLE_AREA = 1e-12
# Barycentric tolerance of the closed triangle test.
BARYCENTRIC_TOLERANCE = 1e-12
# Parametric margin of the image-method back trace.
TRACE_EPSILON = 1e-12
# Default epsilon of ray_triangle_intersect (meters along a unit ray).
RAY_EPSILON = 1e-9

Triangle = namedtuple('Triangle', ['v0', 'v1', 'v2', 'id'])


class Scene(object):
    """A triangle soup together with the TX and RX positions.

    Attributes:
        vertices: (M, 3) float64 vertex positions.
        faces: (N, 3) int64 vertex indices, one row per object o_0..o_{N-1}.
        tx: TX position.
        rx: RX position.
        boxes: Optional (B, 5) array of building boxes
               (xmin, xmax, ymin, ymax, height) set by the generator.
               Not part of the scene file.
    """

    def __init__(self, vertices, faces, tx, rx, boxes=None):
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise IndexOutOfRange("Face refers to a missing vertex.")
        self.vertices = vertices
        self.faces = faces
        self.tx = as_vec3(tx)
        self.rx = as_vec3(rx)
        self.boxes = boxes

        self.triangles = vertices[faces]
        self.v0 = self.triangles[:, 0]
        self.edge1 = self.triangles[:, 1] - self.v0
        self.edge2 = self.triangles[:, 2] - self.v0
        cross = np.cross(self.edge1, self.edge2)
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(areas <= MIN_TRIANGLE_AREA):
            raise ValueError("Degenerate triangle(s): %s" %
                             np.flatnonzero(areas <= MIN_TRIANGLE_AREA))
        self.normals = cross / (2.0 * areas)[:, None]
        self.centroids = self.triangles.mean(axis=1)

        points = np.vstack([vertices.reshape(-1, 3), self.tx, self.rx])
        self.diameter = float(np.linalg.norm(points.max(axis=0) -
                                             points.min(axis=0)))
        self.hit_epsilon = cfg.HIT_EPSILON_SCALE * max(self.diameter, 1e-300)

    @property
    def n_objects(self):
        return len(self.faces)

    def __len__(self):
        return len(self.faces)

    def with_endpoints(self, tx, rx):
        """Return the same geometry with other TX/RX positions."""
        return Scene(self.vertices, self.faces, tx, rx, boxes=self.boxes)

    def swapped(self):
        """Return the scene with TX and RX exchanged."""
        return self.with_endpoints(self.rx, self.tx)

    def subset(self, n):
        """Return a scene made of the first n objects."""
        return Scene(self.vertices, self.faces[:n], self.tx, self.rx,
                     boxes=self.boxes)


@dataclass(frozen=True)
class RayPath:
    """Geometric realization of a complete path candidate.

    points holds TX, the K interaction points and RX.
    """

    candidate: tuple
    points: np.ndarray
    length: float

    @property
    def order(self):
        return len(self.candidate)


def _unit_normal(tri):
    normal = np.cross(np.asarray(tri.v1) - tri.v0, np.asarray(tri.v2) - tri.v0)
    return normal / np.linalg.norm(normal)


def ray_triangle_intersect(origin, direction, tri, eps=RAY_EPSILON):
    """Intersect a ray with a closed triangle (Moller-Trumbore).

    Args:
        origin: Ray origin.
        direction: Unit direction.
        tri: Triangle.
        eps: Hits with t <= eps are ignored.

    Returns:
        (t, point) of the hit, or None on a miss.
    """
    origin = as_vec3(origin)
    direction = as_vec3(direction)
    v0 = np.asarray(tri.v0, dtype=np.float64)
    edge1 = np.asarray(tri.v1, dtype=np.float64) - v0
    edge2 = np.asarray(tri.v2, dtype=np.float64) - v0
    pvec = np.cross(direction, edge2)
    det = float(np.dot(edge1, pvec))
    if abs(det) < 1e-12 * np.linalg.norm(edge1) * np.linalg.norm(edge2):
        # Parallel to the plane
        return None
    inv_det = 1.0 / det
    tvec = origin - v0
    u = np.dot(tvec, pvec) * inv_det
    if u < -BARYCENTRIC_TOLERANCE or u > 1.0 + BARYCENTRIC_TOLERANCE:
        return None
    qvec = np.cross(tvec, edge1)
    v = np.dot(direction, qvec) * inv_det
    if v < -BARYCENTRIC_TOLERANCE or u + v > 1.0 + BARYCENTRIC_TOLERANCE:
        return None
    t = float(np.dot(edge2, qvec) * inv_det)
    if t <= eps:
        return None
    return t, origin + t * direction


def _segment_hit_params(scene, a, b):
    """Parametric hits of segment a -> b with every triangle (inf on miss)."""
    direction = b - a
    pvec = np.cross(direction, scene.edge2)
    det = np.einsum('ij,ij->i', scene.edge1, pvec)
    with np.errstate(divide='ignore', invalid='ignore'):
        inv_det = 1.0 / det
        tvec = a - scene.v0
        u = np.einsum('ij,ij->i', tvec, pvec) * inv_det
        qvec = np.cross(tvec, scene.edge1)
        v = (qvec @ direction) * inv_det
        t = np.einsum('ij,ij->i', scene.edge2, qvec) * inv_det
    hit = ((np.abs(det) > 1e-300) &
           (u >= -BARYCENTRIC_TOLERANCE) &
           (v >= -BARYCENTRIC_TOLERANCE) &
           (u + v <= 1.0 + BARYCENTRIC_TOLERANCE))
    return np.where(hit, t, np.inf)


def is_occluded(scene, a, b, ignore=()):
    """Return True if a triangle not in ignore blocks the open segment (a, b).

    The parametric range is (eps, 1 - eps) with eps = hit_epsilon / |b - a|.
    """
    a = as_vec3(a)
    b = as_vec3(b)
    if scene.n_objects == 0:
        return False
    length = np.linalg.norm(b - a)
    if length == 0.0:
        raise CoincidentEndpoints("Occlusion test on the zero-length segment "
                                  "%s -> %s." % (a, b))
    eps = scene.hit_epsilon / length
    t = _segment_hit_params(scene, a, b)
    blocked = (t > eps) & (t < 1.0 - eps)
    for index in ignore:
        if 0 <= index < len(blocked):
            blocked[index] = False
    return bool(blocked.any())


def line_of_sight(scene):
    """Return 1 if the TX -> RX segment is unobstructed, else 0.

    Raises:
        CoincidentEndpoints: |rx - tx| <= 1e-12 m.
    """
    distance = float(np.linalg.norm(scene.rx - scene.tx))
    if distance <= cfg.COINCIDENCE_THRESHOLD:
        raise CoincidentEndpoints("TX %s and RX %s coincide (distance %g m)."
                                  % (scene.tx, scene.rx, distance))
    return 0 if is_occluded(scene, scene.tx, scene.rx) else 1


def _mirror(point, v0, normal):
    return point - 2.0 * np.dot(point - v0, normal) * normal


def mirror_across_plane(p, tri):
    """Mirror p across the supporting plane of tri."""
    return _mirror(as_vec3(p), np.asarray(tri.v0, dtype=np.float64),
                   _unit_normal(tri))


def _inside_triangle(scene, index, point):
    """Closed barycentric test of a point lying on the plane of a triangle."""
    e1 = scene.edge1[index]
    e2 = scene.edge2[index]
    rel = point - scene.v0[index]
    d00 = np.dot(e1, e1)
    d01 = np.dot(e1, e2)
    d11 = np.dot(e2, e2)
    d20 = np.dot(rel, e1)
    d21 = np.dot(rel, e2)
    denom = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    return (v >= -BARYCENTRIC_TOLERANCE and w >= -BARYCENTRIC_TOLERANCE and
            v + w <= 1.0 + BARYCENTRIC_TOLERANCE)


def check_candidate(scene, candidate):
    """Return candidate as a tuple of ints, checking it is complete."""
    candidate = tuple(int(index) for index in candidate)
    for index in candidate:
        if index == -1:
            raise IncompleteTrajectory("Candidate %s is not complete." %
                                       (candidate,))
        if not 0 <= index < scene.n_objects:
            raise IndexOutOfRange("Candidate %s refers to object %d but the "
                                  "scene has %d objects." %
                                  (candidate, index, scene.n_objects))
    return candidate


def image_sources(scene, candidate):
    """Images of TX across the candidate planes, in order (K + 1 points)."""
    images = [scene.tx]
    for index in candidate:
        images.append(_mirror(images[-1], scene.v0[index],
                              scene.normals[index]))
    return images


def trace_image_path(scene, candidate):
    """Solve the specular path of a complete candidate with the image method.

    The forward pass mirrors TX across the candidate planes. The backward
    pass intersects the segment from the running endpoint (RX first) to
    each image with the matching plane. Every intersection must fall
    strictly between the endpoint and the image, which also places the
    incident and outgoing rays on the same side of each mirror, and inside
    its closed triangle. Occlusion is not checked here.

    Returns:
        A RayPath, or None when the candidate has no geometric solution.
    """
    candidate = check_candidate(scene, candidate)
    images = image_sources(scene, candidate)
    points = [scene.rx]
    endpoint = scene.rx
    for j in range(len(candidate) - 1, -1, -1):
        index = candidate[j]
        normal = scene.normals[index]
        image = images[j + 1]
        span = image - endpoint
        denom = np.dot(span, normal)
        if abs(denom) <= 1e-15 * max(np.linalg.norm(span), 1e-300):
            return None
        t = np.dot(scene.v0[index] - endpoint, normal) / denom
        if not TRACE_EPSILON < t < 1.0 - TRACE_EPSILON:
            return None
        point = endpoint + t * span
        if not _inside_triangle(scene, index, point):
            return None
        points.append(point)
        endpoint = point
    points.append(scene.tx)
    points = np.array(points[::-1])
    length = float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))
    return RayPath(candidate=candidate, points=points, length=length)


def _path_is_clear(scene, path):
    candidate = path.candidate
    order = len(candidate)
    for j in range(order + 1):
        ignore = []
        if j >= 1:
            ignore.append(candidate[j - 1])
        if j < order:
            ignore.append(candidate[j])
        if is_occluded(scene, path.points[j], path.points[j + 1], ignore):
            return False
    return True


def validate(scene, candidate):
    """Binary reward of a complete candidate.

    Returns:
        (1, RayPath) when the image-method path exists and every segment is
        unobstructed (ignoring the triangles at the segment's endpoints),
        otherwise (0, None).
    """
    path = trace_image_path(scene, candidate)
    if path is None:
        return 0, None
    if not _path_is_clear(scene, path):
        return 0, None
    return 1, path


def count_candidates(n_objects, k, no_repeat=False):
    """Closed-form number of candidates of order k."""
    if k == 0:
        return 1
    if no_repeat:
        return n_objects * (n_objects - 1) ** (k - 1)
    return n_objects ** k


def iter_candidates(n_objects, k, no_repeat=False, first=None):
    """Lexicographic candidates of order k, optionally with a fixed head."""
    heads = range(n_objects) if first is None else [first]
    for head in heads:
        for tail in itertools.product(range(n_objects), repeat=k - 1):
            candidate = (head,) + tail
            if no_repeat and any(candidate[i] == candidate[i + 1]
                                 for i in range(k - 1)):
                continue
            yield candidate


def _valid_with_head(scene, k, no_repeat, head):
    valid = []
    for candidate in iter_candidates(scene.n_objects, k, no_repeat, head):
        reward, path = validate(scene, candidate)
        if reward:
            valid.append((candidate, path))
    return valid


def enumerate_valid_paths(scene, k, no_repeat=False,
                          cap=cfg.DEFAULT_ENUMERATION_CAP, workers=1,
                          with_paths=False):
    """Exhaustively validate every candidate of order k.

    Args:
        scene: The Scene.
        k: Interaction order (>= 1).
        no_repeat: Skip candidates choosing the same object twice in a row.
        cap: Maximum number of candidates allowed.
        workers: Threads splitting the range by first object. The ordered
                 merge makes the result identical to the serial one.
        with_paths: Also return the RayPath of each valid candidate.

    Returns:
        The valid candidates in lexicographic order, or a list of
        (candidate, RayPath) pairs when with_paths is True.

    Raises:
        BudgetExceeded: More than cap candidates.
    """
    if k < 1:
        raise ValueError("Interaction order must be >= 1, got %d." % k)
    count = count_candidates(scene.n_objects, k, no_repeat)
    if count > cap:
        raise BudgetExceeded(count, cap)
    logger.debug("Enumerating %d candidates (N=%d, K=%d, no_repeat=%s).",
                 count, scene.n_objects, k, no_repeat)
    heads = range(scene.n_objects)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(
                lambda head: _valid_with_head(scene, k, no_repeat, head),
                heads))
    else:
        chunks = [_valid_with_head(scene, k, no_repeat, head)
                  for head in heads]
    found = [item for chunk in chunks for item in chunk]
    logger.debug("%d valid paths out of %d candidates.", len(found), count)
    if with_paths:
        return found
    return [candidate for candidate, _ in found]


def reflection_law_residual(scene, path):
    """Largest angle (rad) between each outgoing ray and its mirror law."""
    worst = 0.0
    for j, index in enumerate(path.candidate, start=1):
        d_in = path.points[j] - path.points[j - 1]
        d_in /= np.linalg.norm(d_in)
        d_out = path.points[j + 1] - path.points[j]
        d_out /= np.linalg.norm(d_out)
        normal = scene.normals[index]
        expected = d_in - 2.0 * np.dot(d_in, normal) * normal
        angle = 2.0 * np.arctan2(np.linalg.norm(d_out - expected),
                                 np.linalg.norm(d_out + expected))
        worst = max(worst, float(angle))
    return worst


def plane_residual(scene, path):
    """Largest distance (m) between an interaction point and its plane."""
    worst = 0.0
    for j, index in enumerate(path.candidate, start=1):
        dist = abs(np.dot(path.points[j] - scene.v0[index],
                          scene.normals[index]))
        worst = max(worst, float(dist))
    return worst
