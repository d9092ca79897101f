# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Procedural street canyons, scene statistics and the OBJ scene format.

The street runs along +y between x = -street_width/2 and x = +street_width/2.
Each side holds n_buildings_per_side slots of length
footprint_max + gap_max; every slot receives one box building. Buildings
are removed independently after all geometry has been drawn so the RNG
stream does not depend on which buildings survive.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils.exception import (Io, NonTriangleFace, ParseError)
from gfnpath.module_utils.gfnpath_common import write_csv
from gfnpath.module_utils.tracer import (Scene, count_candidates,
                                         enumerate_valid_paths, line_of_sight)

logger = logging.getLogger(__name__)

GROUND_POLICIES = ('always', 'random', 'never')
SAMPLING_REGIONS = ('canyon', 'whole')

# Wall and roof quads of a box, as corner indices (bottom 0-3, top 4-7).
BOX_QUADS = (
    (0, 1, 5, 4),
    (1, 2, 6, 5),
    (2, 3, 7, 6),
    (3, 0, 4, 7),
    (4, 5, 6, 7),
)
# Redraws of TX/RX before a placement inside a building is accepted anyway.
MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class CanyonParams:
    """Randomization knobs of the street canyon generator (meters)."""

    n_buildings_per_side: int = 5
    street_width: float = 20.0
    footprint_min: float = 10.0
    footprint_max: float = 20.0
    gap_min: float = 2.0
    gap_max: float = 8.0
    height_min: float = 10.0
    height_max: float = 40.0
    keep_min: float = 0.5
    keep_max: float = 1.0
    include_ground: str = 'always'
    sampling_region: str = 'canyon'
    tx_height_min: float = 2.0
    tx_height_max: float = 50.0
    rx_height_min: float = 1.0
    rx_height_max: float = 2.0

    def __post_init__(self):
        if self.n_buildings_per_side < 1:
            raise ValueError("n_buildings_per_side must be >= 1")
        if self.street_width <= 0.0:
            raise ValueError("street_width must be positive")
        for name in ('footprint', 'gap', 'height', 'keep', 'tx_height',
                     'rx_height'):
            low = getattr(self, name + '_min')
            high = getattr(self, name + '_max')
            if low > high:
                raise ValueError("Inverted %s range: min %g > max %g" %
                                 (name, low, high))
            if low < 0.0:
                raise ValueError("%s range must be non-negative" % name)
        if self.footprint_min <= 0.0 or self.height_min <= 0.0:
            raise ValueError("Buildings need a positive footprint and height")
        if self.keep_max > 1.0:
            raise ValueError("keep range must lie in [0, 1]")
        if self.include_ground not in GROUND_POLICIES:
            raise ValueError("include_ground must be one of %s" %
                             (GROUND_POLICIES,))
        if self.sampling_region not in SAMPLING_REGIONS:
            raise ValueError("sampling_region must be one of %s" %
                             (SAMPLING_REGIONS,))

    @property
    def slot_length(self):
        return self.footprint_max + self.gap_max

    @property
    def street_length(self):
        return self.n_buildings_per_side * self.slot_length

    def canyon_rectangle(self):
        """(xmin, xmax, ymin, ymax) of the street between the buildings."""
        half = 0.5 * self.street_width
        return (-half, half, 0.0, self.street_length)

    def whole_rectangle(self):
        """(xmin, xmax, ymin, ymax) covering the street and both rows."""
        outer = 0.5 * self.street_width + self.footprint_max
        return (-outer, outer, 0.0, self.street_length)

    def region_rectangle(self, region=None):
        region = region or self.sampling_region
        if region == 'canyon':
            return self.canyon_rectangle()
        return self.whole_rectangle()


def _box_building(xmin, xmax, ymin, ymax, height):
    corners = np.array([
        [xmin, ymin, 0.0], [xmax, ymin, 0.0],
        [xmax, ymax, 0.0], [xmin, ymax, 0.0],
        [xmin, ymin, height], [xmax, ymin, height],
        [xmax, ymax, height], [xmin, ymax, height],
    ])
    faces = []
    for a, b, c, d in BOX_QUADS:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return corners, np.array(faces, dtype=np.int64)


def _draw_buildings(params, rng):
    """(B, 5) boxes of every slot and the keep decision of each."""
    half = 0.5 * params.street_width
    boxes = []
    for side in (-1.0, 1.0):
        for slot in range(params.n_buildings_per_side):
            depth = rng.uniform(params.footprint_min, params.footprint_max)
            length = rng.uniform(params.footprint_min, params.footprint_max)
            start = slot * params.slot_length + rng.uniform(
                0.5 * params.gap_min,
                params.slot_length - length - 0.5 * params.gap_min)
            height = rng.uniform(params.height_min, params.height_max)
            if side < 0.0:
                xmin, xmax = -half - depth, -half
            else:
                xmin, xmax = half, half + depth
            boxes.append((xmin, xmax, start, start + length, height))
    boxes = np.array(boxes, dtype=np.float64).reshape(-1, 5)
    keep_probability = rng.uniform(params.keep_min, params.keep_max)
    kept = rng.random(len(boxes)) < keep_probability
    return boxes, kept


def _draw_point(params, rng, region, height_min, height_max):
    xmin, xmax, ymin, ymax = params.region_rectangle(region)
    return np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax),
                     rng.uniform(height_min, height_max)])


def point_inside_building(boxes, point):
    """True if point lies strictly inside one of the (B, 5) boxes."""
    if boxes is None or len(boxes) == 0:
        return False
    x, y, z = point
    inside = ((boxes[:, 0] < x) & (x < boxes[:, 1]) &
              (boxes[:, 2] < y) & (y < boxes[:, 3]) &
              (z < boxes[:, 4]))
    return bool(inside.any())


def generate_canyon(params, rng, allow_inside=True):
    """Draw one street canyon scene.

    Args:
        params: CanyonParams.
        rng: numpy Generator; the scene is a pure function of its state.
        allow_inside: When False, TX and RX are redrawn while they fall
                      inside a kept building.

    Returns:
        A Scene whose boxes attribute lists the kept buildings.
    """
    boxes, kept = _draw_buildings(params, rng)
    if params.include_ground == 'always':
        ground = True
    elif params.include_ground == 'random':
        ground = bool(rng.random() < 0.5)
    else:
        ground = False

    vertices = []
    faces = []
    offset = 0
    for box in boxes[kept]:
        corners, box_faces = _box_building(*box)
        vertices.append(corners)
        faces.append(box_faces + offset)
        offset += len(corners)
    if ground:
        xmin, xmax, ymin, ymax = params.whole_rectangle()
        vertices.append(np.array([[xmin, ymin, 0.0], [xmax, ymin, 0.0],
                                  [xmax, ymax, 0.0], [xmin, ymax, 0.0]]))
        faces.append(np.array([[0, 1, 2], [0, 2, 3]]) + offset)

    kept_boxes = boxes[kept]
    for attempt in range(MAX_PLACEMENT_ATTEMPTS):
        tx = _draw_point(params, rng, params.sampling_region,
                         params.tx_height_min, params.tx_height_max)
        rx = _draw_point(params, rng, params.sampling_region,
                         params.rx_height_min, params.rx_height_max)
        if allow_inside or not (point_inside_building(kept_boxes, tx) or
                                point_inside_building(kept_boxes, rx)):
            break
    else:
        logger.warning("No TX/RX placement outside buildings after %d "
                       "attempts.", MAX_PLACEMENT_ATTEMPTS)

    vertices = np.vstack(vertices) if vertices else np.zeros((0, 3))
    faces = np.vstack(faces) if faces else np.zeros((0, 3), dtype=np.int64)
    return Scene(vertices, faces, tx, rx, boxes=kept_boxes)


def generate_non_empty(params, rng, allow_inside=True):
    """generate_canyon() until the scene holds at least one object."""
    while True:
        scene = generate_canyon(params, rng, allow_inside)
        if scene.n_objects:
            return scene
        logger.debug("Skipping a scene without objects.")


@dataclass(frozen=True)
class StatsRow:
    k: int
    mean_candidates: float
    valid_fraction: float


@dataclass
class SceneStats:
    """Mean candidate count and aggregate valid fraction per order K."""

    rows: list = field(default_factory=list)
    n_scenes: int = 0

    def row(self, k):
        for row in self.rows:
            if row.k == k:
                return row
        raise KeyError(k)

    def to_csv(self, path, cmdline=None):
        write_csv(path, ('k', 'mean_candidates', 'valid_fraction'),
                  [(row.k, row.mean_candidates, row.valid_fraction)
                   for row in self.rows], cmdline=cmdline)


def scene_stats(params, n_scenes, k_max, rng, no_repeat=False,
                cap=cfg.DEFAULT_ENUMERATION_CAP, workers=1, k_min=0):
    """Monte-Carlo statistics of exhaustive enumeration over n_scenes scenes.

    K = 0 is the line-of-sight test with a single candidate.

    Raises:
        BudgetExceeded: A scene has more candidates than cap at some K.
    """
    orders = list(range(k_min, k_max + 1))
    candidates = dict((k, 0) for k in orders)
    valid = dict((k, 0) for k in orders)
    for index in range(n_scenes):
        scene = generate_canyon(params, rng)
        for k in orders:
            if k == 0:
                candidates[k] += 1
                valid[k] += line_of_sight(scene)
                continue
            candidates[k] += count_candidates(scene.n_objects, k, no_repeat)
            if scene.n_objects:
                valid[k] += len(enumerate_valid_paths(
                    scene, k, no_repeat=no_repeat, cap=cap, workers=workers))
        logger.debug("Scene %d/%d: N=%d.", index + 1, n_scenes,
                     scene.n_objects)
    rows = []
    for k in orders:
        mean = candidates[k] / float(n_scenes) if n_scenes else 0.0
        fraction = valid[k] / float(candidates[k]) if candidates[k] else 0.0
        rows.append(StatsRow(k, mean, fraction))
    return SceneStats(rows=rows, n_scenes=n_scenes)


# Scene files

def _fmt(value):
    return '%.17g' % value


def write_scene(scene, path):
    """Write scene as an OBJ subset with '# tx' and '# rx' directives."""
    lines = ['# gfnpath scene',
             '# tx %s' % ' '.join(_fmt(c) for c in scene.tx),
             '# rx %s' % ' '.join(_fmt(c) for c in scene.rx)]
    for vertex in scene.vertices:
        lines.append('v %s' % ' '.join(_fmt(c) for c in vertex))
    for face in scene.faces:
        lines.append('f %d %d %d' % tuple(int(i) + 1 for i in face))
    try:
        with open(path, 'w') as fp:
            fp.write('\n'.join(lines) + '\n')
    except (IOError, OSError) as ex:
        raise Io("Unable to write scene %s. %s" % (path, str(ex)))


def _floats(tokens, line_no, what):
    if len(tokens) != 3:
        raise ParseError("%s needs 3 coordinates, got %d" %
                         (what, len(tokens)), line_no)
    try:
        values = [float(token) for token in tokens]
    except ValueError:
        raise ParseError("%s has a non-numeric coordinate" % what, line_no)
    if not all(np.isfinite(values)):
        raise ParseError("%s has a non-finite coordinate" % what, line_no)
    return values


def _face_index(token, n_vertices, line_no):
    try:
        index = int(token.split('/')[0])
    except ValueError:
        raise ParseError("Bad face index %r" % token, line_no)
    if not 1 <= index <= n_vertices:
        raise ParseError("Face index %d out of range (1..%d)" %
                         (index, n_vertices), line_no)
    return index - 1


IGNORED_OBJ_KEYWORDS = ('vn', 'vt', 'o', 'g', 's', 'usemtl', 'mtllib')


def read_scene(path):
    """Read a scene written by write_scene() (or a compatible OBJ subset).

    Raises:
        Io: The file cannot be read.
        NonTriangleFace: A face does not have exactly 3 vertices.
        ParseError: Any other malformed line, or a missing or repeated TX/RX
                    directive.
    """
    try:
        with open(path, 'r') as fp:
            text = fp.read()
    except (IOError, OSError) as ex:
        raise Io("Unable to read scene %s. %s" % (path, str(ex)))
    vertices = []
    faces = []
    endpoints = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        keyword = tokens[0]
        if keyword.startswith('#'):
            directive = tokens[1:] if keyword == '#' else \
                [keyword[1:]] + tokens[1:]
            if directive and directive[0] in ('tx', 'rx'):
                name = directive[0]
                if name in endpoints:
                    raise ParseError("Repeated '# %s' directive" % name,
                                     line_no)
                endpoints[name] = _floats(directive[1:], line_no, name)
            continue
        if keyword == 'v':
            vertices.append(_floats(tokens[1:], line_no, 'Vertex'))
        elif keyword == 'f':
            if len(tokens) != 4:
                raise NonTriangleFace("Face with %d vertices; only triangles "
                                      "are supported" % (len(tokens) - 1),
                                      line_no)
            faces.append([_face_index(token, len(vertices), line_no)
                          for token in tokens[1:]])
        elif keyword in IGNORED_OBJ_KEYWORDS:
            continue
        else:
            raise ParseError("Unknown keyword %r" % keyword, line_no)
    for name in ('tx', 'rx'):
        if name not in endpoints:
            raise ParseError("Missing '# %s' directive in %s" % (name, path))
    try:
        return Scene(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                     np.array(faces, dtype=np.int64).reshape(-1, 3),
                     endpoints['tx'], endpoints['rx'])
    except ValueError as ex:
        raise ParseError(str(ex))
