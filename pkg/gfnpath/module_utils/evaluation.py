# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Coverage maps, residual metrics and timing benchmarks.

Path gains use unit reflection coefficients: a path of length L contributes
1 / L**2 to the linear gain of its receiver cell.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils import tracer
from gfnpath.module_utils.exception import (BudgetExceeded,
                                            CoincidentEndpoints, GridMismatch)
from gfnpath.module_utils.gfnpath_common import read_csv, write_csv
from gfnpath.module_utils.nn import FlowModel, ModelConfig
from gfnpath.module_utils.sampler import (GREEDY, prepare_scene,
                                          sample_trajectory, trajectory_rng)
from gfnpath.module_utils.scenes import generate_canyon

logger = logging.getLogger(__name__)

COVERAGE_HEADER = ('x', 'y', 'gain_linear', 'gain_db', 'n_paths')
RESIDUAL_HEADER = ('x', 'y', 'rel', 'rel_db')
BENCHMARK_HEADER = ('n', 'k', 'method', 'm', 'median_seconds', 'validations')
# Triangles of one box building.
TRIANGLES_PER_BUILDING = 10


@dataclass(frozen=True)
class GridSpec:
    """Receiver plane: rectangle, square cell size and height (meters)."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    cell: float = 1.0
    height: float = 1.5

    def __post_init__(self):
        if self.cell <= 0.0:
            raise ValueError("cell must be positive, got %r" % self.cell)
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise ValueError("Empty grid rectangle")

    @property
    def shape(self):
        ny = max(1, int(round((self.ymax - self.ymin) / self.cell)))
        nx = max(1, int(round((self.xmax - self.xmin) / self.cell)))
        return ny, nx

    def centers(self):
        """(ys, xs) cell center coordinates."""
        ny, nx = self.shape
        xs = self.xmin + (np.arange(nx) + 0.5) * self.cell
        ys = self.ymin + (np.arange(ny) + 0.5) * self.cell
        return ys, xs


class CoverageGrid(object):
    """Per-cell linear gain and path count.

    Attributes:
        spec: GridSpec.
        xs, ys: Cell center coordinates.
        gain: (ny, nx) linear gains.
        n_paths: (ny, nx) number of paths found.
    """

    def __init__(self, spec, gain=None, n_paths=None, xs=None, ys=None):
        self.spec = spec
        if xs is None or ys is None:
            ys, xs = spec.centers()
        self.xs = np.asarray(xs, dtype=np.float64)
        self.ys = np.asarray(ys, dtype=np.float64)
        shape = (len(self.ys), len(self.xs))
        self.gain = np.zeros(shape) if gain is None else \
            np.asarray(gain, dtype=np.float64)
        self.n_paths = np.zeros(shape, dtype=np.int64) if n_paths is None \
            else np.asarray(n_paths, dtype=np.int64)
        if self.gain.shape != shape or self.n_paths.shape != shape:
            raise GridMismatch("Cell arrays of shape %s for a %s grid" %
                               (self.gain.shape, shape))
        if np.any(self.gain < 0.0):
            raise ValueError("Linear gains must be non-negative")

    @property
    def shape(self):
        return self.gain.shape

    @property
    def gain_db(self):
        """Gains in dB, NaN where the linear gain is zero."""
        with np.errstate(divide='ignore'):
            return np.where(self.gain > 0.0, 10.0 * np.log10(self.gain),
                            np.nan)

    def same_cells(self, other):
        return (self.shape == other.shape and
                np.allclose(self.xs, other.xs) and
                np.allclose(self.ys, other.ys))

    def rows(self):
        gain_db = self.gain_db
        for iy, y in enumerate(self.ys):
            for ix, x in enumerate(self.xs):
                yield (float(x), float(y), float(self.gain[iy, ix]),
                       float(gain_db[iy, ix]), int(self.n_paths[iy, ix]))

    def to_csv(self, path, cmdline=None):
        write_csv(path, COVERAGE_HEADER, self.rows(), cmdline=cmdline)

    @classmethod
    def from_csv(cls, path, height=1.5):
        """Read a coverage CSV written by to_csv()."""
        header, records = read_csv(path)
        if tuple(header) != COVERAGE_HEADER:
            raise GridMismatch("%s is not a coverage CSV (header %s)" %
                               (path, ','.join(header)))
        xs = sorted(set(float(r[0]) for r in records))
        ys = sorted(set(float(r[1]) for r in records))
        gain = np.zeros((len(ys), len(xs)))
        n_paths = np.zeros((len(ys), len(xs)), dtype=np.int64)
        x_index = dict((x, i) for i, x in enumerate(xs))
        y_index = dict((y, i) for i, y in enumerate(ys))
        for record in records:
            iy, ix = y_index[float(record[1])], x_index[float(record[0])]
            gain[iy, ix] = float(record[2])
            n_paths[iy, ix] = int(record[4])
        cell = xs[1] - xs[0] if len(xs) > 1 else \
            (ys[1] - ys[0] if len(ys) > 1 else 1.0)
        spec = GridSpec(xs[0] - 0.5 * cell, xs[-1] + 0.5 * cell,
                        ys[0] - 0.5 * cell, ys[-1] + 0.5 * cell, cell, height)
        return cls(spec, gain, n_paths, xs=xs, ys=ys)


def path_gain(length):
    return 1.0 / (length * length)


def _cell_paths(scene, k_max, models, m, seed, cell_index, cap):
    """Gain and path count of one receiver cell."""
    gain = 0.0
    count = 0
    if tracer.line_of_sight(scene):
        gain += path_gain(float(np.linalg.norm(scene.rx - scene.tx)))
        count += 1
    if scene.n_objects == 0:
        return gain, count
    encodings = {}
    for k in range(1, k_max + 1):
        if models is None:
            found = tracer.enumerate_valid_paths(scene, k, no_repeat=True,
                                                 cap=cap, with_paths=True)
        else:
            model = models[k]
            if k not in encodings:
                encodings[k] = prepare_scene(model, scene)
            unique = dict()
            for sample in range(m):
                rng = trajectory_rng(seed, cell_index, k * m + sample)
                trajectory = sample_trajectory(model, scene, GREEDY, rng,
                                               encodings[k])
                if trajectory.reward:
                    unique[trajectory.candidate] = trajectory.path
            found = sorted(unique.items())
        for _, path in found:
            gain += path_gain(path.length)
            count += 1
    return gain, count


def coverage_map(scene, tx, spec, k_max, models=None, m=10, seed=0,
                 cap=cfg.DEFAULT_ENUMERATION_CAP, workers=1):
    """Coverage of a receiver grid.

    Args:
        scene: Scene geometry (its TX/RX are replaced).
        tx: Transmitter position.
        spec: GridSpec of the receiver plane.
        k_max: Highest interaction order.
        models: None for exhaustive enumeration, else a dict K -> FlowModel
                sampled m times per cell and order, de-duplicated.
        m: Samples per cell and order for the model source.
        seed: Run seed of the per-cell sample streams.
        workers: Threads over cells; the result does not depend on it.

    Raises:
        BudgetExceeded: Exhaustive enumeration exceeds cap in a cell.
    """
    if models is not None:
        missing = [k for k in range(1, k_max + 1) if k not in models]
        if missing:
            raise ValueError("No model for K=%s" % missing)
    grid = CoverageGrid(spec)
    ny, nx = grid.shape
    tx = np.asarray(tx, dtype=np.float64)

    def cell(index):
        iy, ix = divmod(index, nx)
        rx = (grid.xs[ix], grid.ys[iy], spec.height)
        try:
            cell_scene = scene.with_endpoints(tx, rx)
            return _cell_paths(cell_scene, k_max, models, m, seed, index,
                               cap)
        except CoincidentEndpoints:
            logger.warning("Cell %d coincides with the TX; gain set to 0.",
                           index)
            return 0.0, 0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, range(ny * nx)))
    else:
        results = [cell(index) for index in range(ny * nx)]
    for index, (gain, count) in enumerate(results):
        iy, ix = divmod(index, nx)
        grid.gain[iy, ix] = gain
        grid.n_paths[iy, ix] = count
    logger.debug("Coverage of %d cells computed (%s source).", ny * nx,
                 'exhaustive' if models is None else 'model')
    return grid


@dataclass
class ResidualMaps:
    """Per-cell residuals (NaN where undefined) and their dB RMSE."""

    xs: np.ndarray
    ys: np.ndarray
    rel: np.ndarray
    rel_db: np.ndarray
    rmse_db: float

    def rows(self):
        for iy, y in enumerate(self.ys):
            for ix, x in enumerate(self.xs):
                yield (float(x), float(y), float(self.rel[iy, ix]),
                       float(self.rel_db[iy, ix]))

    def to_csv(self, path, cmdline=None):
        write_csv(path, RESIDUAL_HEADER, self.rows(), cmdline=cmdline)


def region_mask(grid, rectangle):
    """Cells whose center lies in rectangle (xmin, xmax, ymin, ymax)."""
    xmin, xmax, ymin, ymax = rectangle
    inside_x = (grid.xs >= xmin) & (grid.xs <= xmax)
    inside_y = (grid.ys >= ymin) & (grid.ys <= ymax)
    return inside_y[:, None] & inside_x[None, :]


def residual_maps(gt, pred, mask=None):
    """Relative residuals of a predicted coverage against the ground truth.

    rel compares the dB gains, (G_gt - G_pred) / G_gt. rel_db is
    10 log10(G_gt / G_pred) on linear gains. Both are NaN unless both gains
    are positive. rmse_db is taken over the defined rel_db cells (restricted
    to mask when given) and is NaN when there is none.

    Raises:
        GridMismatch: The grids do not share their cells.
    """
    if not gt.same_cells(pred):
        raise GridMismatch("Coverage grids of shapes %s and %s do not share "
                           "their cells." % (gt.shape, pred.shape))
    defined = (gt.gain > 0.0) & (pred.gain > 0.0)
    gt_db = gt.gain_db
    pred_db = pred.gain_db
    with np.errstate(divide='ignore', invalid='ignore'):
        rel = np.where(defined & (gt_db != 0.0),
                       (gt_db - pred_db) / gt_db, np.nan)
        rel_db = np.where(defined, 10.0 * np.log10(gt.gain / pred.gain),
                          np.nan)
    selected = defined if mask is None else defined & mask
    if selected.any():
        rmse_db = float(np.sqrt(np.mean(rel_db[selected] ** 2)))
    else:
        rmse_db = float('nan')
    return ResidualMaps(gt.xs, gt.ys, rel, rel_db, rmse_db)


def linear_fit(x, y):
    """Least-squares line through (x, y).

    Returns:
        (slope, intercept, r_squared)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("A linear fit needs at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual ** 2) / total if total > 0 else 1.0
    return float(slope), float(intercept), float(r_squared)


def benchmark_scene(params, n, rng):
    """A fully built canyon cut down to its first n objects."""
    per_side = max(params.n_buildings_per_side,
                   int(math.ceil(n / (2.0 * TRIANGLES_PER_BUILDING))))
    dense = replace(params, n_buildings_per_side=per_side, keep_min=1.0,
                    keep_max=1.0)
    scene = generate_canyon(dense, rng)
    if scene.n_objects < n:
        raise ValueError("Benchmark scene holds %d objects, %d requested" %
                         (scene.n_objects, n))
    return scene.subset(n)


@dataclass(frozen=True)
class BenchmarkRow:
    n: int
    k: int
    method: str
    m: int
    median_seconds: float
    validations: int

    def row(self):
        return (self.n, self.k, self.method, self.m, self.median_seconds,
                self.validations)


def _median_time(func, repeats):
    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = func()
        times.append(time.perf_counter() - start)
    return float(np.median(times)), result


def benchmark(params, n_values, k_values, m_values, repeats=3, models=None,
              seed=0, d=128, cap=cfg.DEFAULT_ENUMERATION_CAP,
              methods=('exhaustive', 'sampler')):
    """Wall-clock medians of exhaustive enumeration and model sampling.

    The exhaustive method validates all N**K candidates. The sampler method
    encodes the scene and draws m trajectories, each validated once. Scene
    generation and model construction are not timed.

    Args:
        params: CanyonParams of the scene family.
        models: Optional dict K -> FlowModel; missing orders use a freshly
                initialized model of size d (same cost as a trained one).

    Raises:
        BudgetExceeded: N**K exceeds cap for the exhaustive method.

    Returns:
        A list of BenchmarkRow.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 4]))
    models = dict(models or {})
    rows = []
    for n in n_values:
        scene = benchmark_scene(params, n, rng)
        for k in k_values:
            if 'exhaustive' in methods:
                count = tracer.count_candidates(n, k)
                if count > cap:
                    raise BudgetExceeded(count, cap)
                seconds, _ = _median_time(
                    lambda: tracer.enumerate_valid_paths(scene, k, cap=cap),
                    repeats)
                rows.append(BenchmarkRow(n, k, 'exhaustive', 0, seconds,
                                         count))
                logger.info("exhaustive N=%d K=%d: %.6f s", n, k, seconds)
            if 'sampler' not in methods:
                continue
            if k not in models:
                models[k] = FlowModel.initialize(
                    ModelConfig(d=d, k=k),
                    np.random.default_rng(np.random.SeedSequence(
                        [int(seed), 5, k])))
            model = models[k]
            for m in m_values:
                def run():
                    encoding = prepare_scene(model, scene)
                    return [sample_trajectory(model, scene, GREEDY,
                                              trajectory_rng(seed, n, i),
                                              encoding)
                            for i in range(m)]
                seconds, _ = _median_time(run, repeats)
                rows.append(BenchmarkRow(n, k, 'sampler', m, seconds, m))
                logger.info("sampler N=%d K=%d M=%d: %.6f s", n, k, m,
                            seconds)
    return rows


def write_benchmark(rows, path, cmdline=None):
    write_csv(path, BENCHMARK_HEADER, [row.row() for row in rows],
              cmdline=cmdline)
