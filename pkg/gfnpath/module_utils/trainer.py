# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Training loop of the flow model.

Each iteration draws one fresh canyon scene, samples a batch of
trajectories on it, mixes in a batch replayed from the buffer of valid
(scene, candidate) pairs and takes a single optimizer step on every
sub-network.
"""

import logging
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from gfnpath.module_utils import configuration as cfg
from gfnpath.module_utils import tracer
from gfnpath.module_utils.exception import NonFiniteFlow, PushInvalid
from gfnpath.module_utils.gfnpath_common import append_csv, write_csv
from gfnpath.module_utils.nn import (OPTIMIZERS, AdamState, FlowModel,
                                     ModelConfig, accumulate, load_checkpoint,
                                     save_checkpoint)
from gfnpath.module_utils.sampler import (GREEDY, SampleOptions, Trajectory,
                                          forced_masks, prepare_scene,
                                          sample_trajectory,
                                          scene_batch_grads, trajectory_rng)
from gfnpath.module_utils.scenes import generate_non_empty

logger = logging.getLogger(__name__)

REPLAY_MODES = ('weighted', 'probabilistic')
METRICS_HEADER = ('iteration', 'loss_new', 'loss_replay', 'batch_accuracy',
                  'buffer_size', 'val_accuracy', 'val_hit_rate')

# Sub-streams derived from the run seed.
STREAM_INIT = 0
STREAM_SCENES = 1
STREAM_REPLAY = 2
STREAM_VALIDATION = 3
# Iteration slot of the validation trajectories in trajectory_rng().
VALIDATION_ITERATION = 2 ** 32 - 1


def _stream(seed, stream):
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream]))


class ReplayBuffer(object):
    """FIFO store of (Scene, candidate) pairs with reward 1.

    Args:
        capacity: Maximum number of pairs; the oldest is evicted first.
        check: Revalidate every pushed pair with tracer.validate().
    """

    def __init__(self, capacity=10000, check=False):
        if capacity < 1:
            raise ValueError("Buffer capacity must be >= 1, got %d" % capacity)
        self.capacity = capacity
        self.check = check
        self.entries = deque(maxlen=capacity)

    def __len__(self):
        return len(self.entries)

    def push(self, scene, candidate):
        candidate = tuple(int(index) for index in candidate)
        if self.check:
            reward, _ = tracer.validate(scene, candidate)
            if not reward:
                raise PushInvalid("Candidate %s is not a valid path of the "
                                  "pushed scene." % (candidate,))
        self.entries.append((scene, candidate))

    def sample(self, n, rng):
        """n entries drawn uniformly with replacement ([] when empty)."""
        if not self.entries or n <= 0:
            return []
        picks = rng.integers(0, len(self.entries), size=n)
        return [self.entries[int(i)] for i in picks]

    def revalidate(self):
        """Number of stored pairs that are no longer valid."""
        return sum(1 for scene, candidate in self.entries
                   if not tracer.validate(scene, candidate)[0])


def buffer_push(buffer, scene, candidate):
    """Store a valid (scene, candidate) pair, evicting the oldest."""
    buffer.push(scene, candidate)


def buffer_sample(buffer, n, rng):
    """n uniform draws with replacement; [] from an empty buffer."""
    return buffer.sample(n, rng)


def reverse_candidate(scene, candidate):
    """The same path seen from the other end: TX/RX swapped, order reversed."""
    candidate = tracer.check_candidate(scene, candidate)
    return scene.swapped(), tuple(reversed(candidate))


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of a training run."""

    k: int = 1
    d: int = 128
    batch: int = 64
    alpha: float = 0.5
    epsilon: float = 0.1
    lr: float = 1e-4
    iterations: int = 1000
    val_every: int = 1000
    val_scenes: int = 100
    m_val: int = 10
    symmetry_augment: bool = False
    seed: int = 0
    use_buffer: bool = True
    buffer_capacity: int = 10000
    replay_mode: str = 'weighted'
    use_mask: bool = True
    use_distance_weights: bool = False
    optimizer: str = 'adam'
    check_buffer: bool = False
    workers: int = 1
    enumeration_cap: int = cfg.DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1], got %r" % self.alpha)
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1], got %r" %
                             self.epsilon)
        if self.batch < 1:
            raise ValueError("batch must be >= 1, got %d" % self.batch)
        if self.m_val < 1:
            raise ValueError("m_val must be >= 1, got %d" % self.m_val)
        if self.k < 1 or self.d < 1:
            raise ValueError("k and d must be >= 1")
        if self.lr <= 0.0:
            raise ValueError("lr must be positive, got %r" % self.lr)
        if self.replay_mode not in REPLAY_MODES:
            raise ValueError("replay_mode must be one of %s" %
                             (REPLAY_MODES,))
        if self.optimizer not in OPTIMIZERS:
            raise ValueError("optimizer must be one of %s" %
                             (sorted(OPTIMIZERS),))

    @property
    def sample_options(self):
        return SampleOptions(epsilon=self.epsilon, use_mask=self.use_mask,
                             use_distance_weights=self.use_distance_weights)


@dataclass(frozen=True)
class TrainMetrics:
    iteration: int
    loss_new: float
    loss_replay: float
    batch_accuracy: float
    buffer_size: int
    val_accuracy: float = float('nan')
    val_hit_rate: float = float('nan')

    def row(self):
        return (self.iteration, self.loss_new, self.loss_replay,
                self.batch_accuracy, self.buffer_size, self.val_accuracy,
                self.val_hit_rate)


class ValidationSet(object):
    """Held-out scenes with their exhaustive ground truth at order k."""

    def __init__(self, scenes, k, cap=cfg.DEFAULT_ENUMERATION_CAP, workers=1):
        self.scenes = list(scenes)
        self.k = k
        self.ground_truth = [
            set(tracer.enumerate_valid_paths(scene, k, no_repeat=True,
                                             cap=cap, workers=workers))
            for scene in self.scenes]

    def __len__(self):
        return len(self.scenes)

    @classmethod
    def generate(cls, params, n_scenes, k, rng, cap=cfg.DEFAULT_ENUMERATION_CAP,
                 workers=1):
        """Draw n_scenes scenes, keeping TX/RX outside buildings."""
        scenes = [generate_non_empty(params, rng, allow_inside=False)
                  for _ in range(n_scenes)]
        return cls(scenes, k, cap=cap, workers=workers)


def sampling_metrics(samples, ground_truth):
    """Accuracy and hit rate of sampled candidates.

    Args:
        samples: Per scene, the list of (candidate, reward) drawn.
        ground_truth: Per scene, the set of valid candidates.

    Returns:
        (accuracy, hit_rate). hit_rate averages over scenes with at least
        one valid path and is NaN when there is none.
    """
    total = 0
    valid = 0
    rates = []
    for drawn, truth in zip(samples, ground_truth):
        total += len(drawn)
        valid += sum(1 for _, reward in drawn if reward)
        if truth:
            found = set(tuple(c) for c, reward in drawn if reward) & truth
            rates.append(len(found) / float(len(truth)))
    accuracy = valid / float(total) if total else float('nan')
    hit_rate = float(np.mean(rates)) if rates else float('nan')
    return accuracy, hit_rate


def validate(model, val_scenes, m, seed=0, opts=GREEDY,
             cap=cfg.DEFAULT_ENUMERATION_CAP):
    """Accuracy and hit rate of the model with m samples per scene.

    Args:
        model: The FlowModel.
        val_scenes: A ValidationSet, or a list of Scenes whose ground truth
                    is enumerated here.
        m: Samples per scene.
        seed: Run seed; trajectory streams are derived from it.
        opts: SampleOptions, greedy settings by default.

    Raises:
        BudgetExceeded: Ground truth enumeration exceeds cap.
    """
    if not isinstance(val_scenes, ValidationSet):
        val_scenes = ValidationSet(val_scenes, model.config.k, cap=cap)
    samples = []
    for index, scene in enumerate(val_scenes.scenes):
        encoding = prepare_scene(model, scene)
        drawn = []
        for sample in range(m):
            rng = trajectory_rng(seed, VALIDATION_ITERATION,
                                 index * m + sample)
            trajectory = sample_trajectory(model, scene, opts, rng, encoding)
            drawn.append((trajectory.candidate, trajectory.reward))
        samples.append(drawn)
    return sampling_metrics(samples, val_scenes.ground_truth)


def _nan_mean(values):
    return float(np.mean(values)) if len(values) else float('nan')


class Trainer(object):
    """Owns the model, the optimizer and the replay buffer of a run.

    Args:
        config: TrainConfig.
        params: CanyonParams of the training and validation scenes.
        model: Optional FlowModel to continue from.
        opt_state: Optional AdamState to continue from.
        metrics_path: CSV receiving one TrainMetrics row per iteration.
        checkpoint_path: Checkpoint written every val_every iterations and
                         by finish().
        cmdline: Recorded on the first line of a new metrics CSV.
    """

    def __init__(self, config, params, model=None, opt_state=None,
                 metrics_path=None, checkpoint_path=None, cmdline=None):
        self.config = config
        self.params = params
        if model is None:
            model = FlowModel.initialize(ModelConfig(d=config.d, k=config.k),
                                         _stream(config.seed, STREAM_INIT))
        elif model.config.k != config.k:
            raise ValueError("Model order K=%d does not match the run K=%d" %
                             (model.config.k, config.k))
        self.model = model
        if config.optimizer == 'adam':
            self.optimizer = OPTIMIZERS['adam'](lr=config.lr,
                                                state=opt_state)
        else:
            self.optimizer = OPTIMIZERS[config.optimizer](lr=config.lr)
        self.iteration = opt_state.step if opt_state is not None else 0
        self.buffer = ReplayBuffer(config.buffer_capacity,
                                   check=config.check_buffer)
        self.scene_rng = _stream(config.seed, STREAM_SCENES)
        self.replay_rng = _stream(config.seed, STREAM_REPLAY)
        self.validation_rng = _stream(config.seed, STREAM_VALIDATION)
        # Fast-forward the scene stream of a resumed run.
        for _ in range(self.iteration):
            generate_non_empty(params, self.scene_rng)
        self.validation_set = None
        self.metrics_path = metrics_path
        self.checkpoint_path = checkpoint_path
        if metrics_path is not None and (self.iteration == 0 or
                                         not os.path.exists(metrics_path)):
            write_csv(metrics_path, METRICS_HEADER, [], cmdline=cmdline)

    def _sample_batch(self, scene, encoding, count):
        opts = self.config.sample_options
        seeds = [(self.config.seed, self.iteration, index)
                 for index in range(count)]

        def draw(seed):
            return sample_trajectory(self.model, scene, opts,
                                     trajectory_rng(*seed), encoding)

        if self.config.workers > 1 and count > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(draw, seeds))
        return [draw(seed) for seed in seeds]

    def _forced(self, scene, candidate, reward):
        masks, fallback = forced_masks(scene, candidate, self.config.use_mask)
        return Trajectory(tuple(candidate), None, masks, reward, fallback)

    def _reversed(self, scene, trajectories):
        swapped = scene.swapped()
        out = []
        for trajectory in trajectories:
            _, candidate = reverse_candidate(scene, trajectory.candidate)
            reward, _ = tracer.validate(swapped, candidate)
            out.append(self._forced(swapped, candidate, reward))
        return swapped, out

    def train_iteration(self):
        """Run one iteration and return its TrainMetrics."""
        config = self.config
        model = self.model
        scene = generate_non_empty(self.params, self.scene_rng)
        encoding = prepare_scene(model, scene)

        replay_entries = []
        n_fresh = config.batch
        use_replay = config.use_buffer and len(self.buffer) > 0
        if use_replay:
            if config.replay_mode == 'weighted':
                replay_entries = buffer_sample(self.buffer, config.batch,
                                               self.replay_rng)
            else:
                n_replay = int(np.sum(self.replay_rng.random(config.batch) <
                                      config.alpha))
                replay_entries = buffer_sample(self.buffer, n_replay,
                                               self.replay_rng)
                n_fresh = config.batch - n_replay

        fresh = self._sample_batch(scene, encoding, n_fresh)
        batch_accuracy = _nan_mean([t.reward for t in fresh])

        new_groups = [(scene, fresh, encoding)]
        if config.symmetry_augment and fresh:
            swapped, reversed_batch = self._reversed(scene, fresh)
            new_groups.append((swapped, reversed_batch, None))
        n_new = sum(len(group[1]) for group in new_groups)
        replayed = [(entry_scene, self._forced(entry_scene, candidate, 1))
                    for entry_scene, candidate in replay_entries]

        if config.replay_mode == 'weighted' and replayed:
            new_scale = (1.0 - config.alpha) / n_new if n_new else 0.0
            replay_scale = config.alpha / len(replayed)
        else:
            total = n_new + len(replayed)
            new_scale = replay_scale = 1.0 / total if total else 0.0

        grads = model.zero_grads()
        new_losses = []
        for group_scene, trajectories, group_encoding in new_groups:
            if not trajectories:
                continue
            losses, group_grads = scene_batch_grads(
                model, group_scene, trajectories, new_scale, group_encoding)
            new_losses.extend(losses)
            accumulate(grads, group_grads)
        replay_losses = []
        for entry_scene, trajectory in replayed:
            losses, entry_grads = scene_batch_grads(
                model, entry_scene, [trajectory], replay_scale)
            replay_losses.extend(losses)
            accumulate(grads, entry_grads)

        loss_new = _nan_mean(new_losses)
        loss_replay = _nan_mean(replay_losses)
        if not all(math.isfinite(loss) for loss in new_losses + replay_losses):
            raise NonFiniteFlow("Non-finite loss at iteration %d." %
                                self.iteration)
        self.optimizer.step(model, grads)

        if config.use_buffer:
            for trajectory in fresh:
                if trajectory.reward and not trajectory.fallback:
                    buffer_push(self.buffer, scene, trajectory.candidate)
            if config.symmetry_augment and len(new_groups) > 1:
                swapped, reversed_batch = new_groups[1][0], new_groups[1][1]
                for trajectory in reversed_batch:
                    if trajectory.reward and not trajectory.fallback:
                        buffer_push(self.buffer, swapped,
                                    trajectory.candidate)

        self.iteration += 1
        val_accuracy = val_hit_rate = float('nan')
        if config.val_every and self.iteration % config.val_every == 0:
            val_accuracy, val_hit_rate = self.run_validation()
            invalid = self.buffer.revalidate()
            if invalid:
                logger.warning("%d replay buffer entries fail revalidation.",
                               invalid)
            self.save()
        metrics = TrainMetrics(self.iteration, loss_new, loss_replay,
                               batch_accuracy, len(self.buffer),
                               val_accuracy, val_hit_rate)
        logger.debug("Iteration %d: loss_new=%s loss_replay=%s accuracy=%s "
                     "buffer=%d", self.iteration, loss_new, loss_replay,
                     batch_accuracy, len(self.buffer))
        if self.metrics_path is not None:
            append_csv(self.metrics_path, [metrics.row()])
        return metrics

    def run_validation(self):
        if self.validation_set is None:
            self.validation_set = ValidationSet.generate(
                self.params, self.config.val_scenes, self.config.k,
                self.validation_rng, cap=self.config.enumeration_cap,
                workers=self.config.workers)
        accuracy, hit_rate = validate(self.model, self.validation_set,
                                      self.config.m_val,
                                      seed=self.config.seed)
        logger.info("Validation after %d iterations: accuracy=%.4f "
                    "hit_rate=%.4f", self.iteration, accuracy, hit_rate)
        return accuracy, hit_rate

    def save(self):
        if self.checkpoint_path is None:
            return
        opt_state = getattr(self.optimizer, 'state', None)
        if not isinstance(opt_state, AdamState):
            opt_state = None
        save_checkpoint(self.model, opt_state, self.checkpoint_path)

    def train(self, iterations=None):
        """Run iterations (config.iterations by default), then finish()."""
        if iterations is None:
            iterations = self.config.iterations
        history = []
        try:
            for _ in range(iterations):
                history.append(self.train_iteration())
        finally:
            self.finish()
        return history

    def finish(self):
        self.save()


def resume(config, params, checkpoint, **kwargs):
    """Trainer continuing from a checkpoint's model and optimizer state."""
    model, opt_state = load_checkpoint(checkpoint)
    return Trainer(config, params, model=model, opt_state=opt_state, **kwargs)
