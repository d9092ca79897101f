# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""GFlowNet policy over path candidates.

A trajectory starts from the empty candidate (all -1) and fills one slot per
step. At step k the model assigns a flow to every object; masking, distance
weighting and epsilon exploration shape the policy, never the flows used by
the flow-matching loss.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from gfnpath.module_utils.exception import (EmptyScene, IncompleteTrajectory,
                                            NonFiniteFlow)
from gfnpath.module_utils.geometry import canonical_frame, canonical_triangles
from gfnpath.module_utils.nn import (accumulate, compute_flows, encode_scene,
                                     encode_state, scene_backward,
                                     trajectory_backward, trajectory_forward)
from gfnpath.module_utils.tracer import validate

logger = logging.getLogger(__name__)

# Floor of the distance weights, relative to the scene diameter.
DISTANCE_FLOOR_SCALE = 1e-6


@dataclass(frozen=True)
class SampleOptions:
    """Exploration rate and policy shaping toggles."""

    epsilon: float = 0.0
    use_mask: bool = True
    use_distance_weights: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1], got %r" %
                             self.epsilon)


# Settings used to report accuracy and hit rate.
GREEDY = SampleOptions(epsilon=0.0, use_mask=True, use_distance_weights=False)


@dataclass(frozen=True)
class Trajectory:
    """One complete pass through the decision tree.

    Attributes:
        candidate: The complete candidate, same as chosen.
        step_flows: (K, N) flows of every object from each visited state.
        step_masks: (K, N) actions available at each step.
        reward: 1 if the candidate is a valid path, else 0.
        fallback: True if an empty mask had to be lifted at some step.
        path: The RayPath when reward is 1.
    """

    candidate: tuple
    step_flows: np.ndarray
    step_masks: np.ndarray
    reward: int
    fallback: bool = False
    path: object = None

    @property
    def chosen(self):
        return self.candidate

    @property
    def order(self):
        return len(self.candidate)


def trajectory_rng(seed, iteration, index):
    """Independent RNG stream of one trajectory."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), int(iteration), int(index)]))


def scene_inputs(scene):
    """Canonical (N, 9) vertex rows of a scene."""
    if scene.n_objects == 0:
        raise EmptyScene("The scene has no objects.")
    frame = canonical_frame(scene.tx, scene.rx)
    return canonical_triangles(frame, scene.triangles)


def prepare_scene(model, scene):
    """Canonical transform and scene encoding, computed once per scene."""
    return encode_scene(model, scene_inputs(scene))


def _n_chosen(partial):
    count = 0
    for index in partial:
        if index == -1:
            break
        count += 1
    return count


def mask_origin(scene, partial):
    """Point the ray came from before hitting the last chosen object."""
    chosen = _n_chosen(partial)
    if chosen == 0:
        return None
    if chosen == 1:
        return scene.tx
    return scene.centroids[partial[chosen - 2]]


def weight_origin(scene, partial):
    """Last interaction point estimate: TX, then the last chosen centroid."""
    chosen = _n_chosen(partial)
    if chosen == 0:
        return scene.tx
    return scene.centroids[partial[chosen - 1]]


def action_mask(scene, partial, last_point=None):
    """Objects the policy may choose from a partial candidate.

    The previously chosen object is excluded. With last_point, objects whose
    centroid lies strictly behind the previous reflecting plane (the side
    opposite to last_point, beyond the scene hit epsilon) are excluded too.
    """
    mask = np.ones(scene.n_objects, dtype=bool)
    chosen = _n_chosen(partial)
    if chosen == 0:
        return mask
    previous = partial[chosen - 1]
    mask[previous] = False
    if last_point is None:
        return mask
    normal = scene.normals[previous]
    v0 = scene.v0[previous]
    side = np.dot(np.asarray(last_point, dtype=np.float64) - v0, normal)
    if abs(side) <= scene.hit_epsilon:
        return mask
    signed = (scene.centroids - v0) @ normal
    behind = np.sign(side) * signed < -scene.hit_epsilon
    mask &= ~behind
    return mask


def distance_weights(scene, last_point, rx, is_last_step):
    """Inverse squared distance weights of every object, summing to 1."""
    if scene.n_objects == 0:
        return np.zeros(0)
    dist = np.linalg.norm(scene.centroids - np.asarray(last_point, float),
                          axis=1)
    if is_last_step:
        dist = dist + np.linalg.norm(scene.centroids - np.asarray(rx, float),
                                     axis=1)
    dist = np.maximum(dist, DISTANCE_FLOOR_SCALE * max(scene.diameter,
                                                       1e-300))
    inv = dist ** -2.0
    return inv / inv.sum()


def action_probabilities(flows, mask=None, weights=None, epsilon=0.0):
    """Full selection distribution of sample_action()."""
    flows = np.asarray(flows, dtype=np.float64)
    if mask is None or not np.any(mask):
        mask = np.ones(len(flows), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    uniform = mask / float(mask.sum())
    scores = flows * weights if weights is not None else flows.copy()
    scores = np.where(mask, scores, 0.0)
    total = scores.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise NonFiniteFlow("Policy scores sum to %r." % total)
    return epsilon * uniform + (1.0 - epsilon) * scores / total


def sample_action(flows, mask=None, weights=None, epsilon=0.0, rng=None):
    """Draw one object index.

    An all-false mask is lifted and the draw is uniform over all objects.

    Returns:
        (index, used_uniform)
    """
    flows = np.asarray(flows, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng()
    if mask is None:
        mask = np.ones(len(flows), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    fallback = not mask.any()
    if fallback:
        mask = np.ones(len(flows), dtype=bool)
    if fallback or (epsilon > 0.0 and rng.random() < epsilon):
        return int(rng.choice(np.flatnonzero(mask))), True
    probs = action_probabilities(flows, mask, weights, 0.0)
    return int(rng.choice(len(flows), p=probs)), False


def _check_flows(flows):
    if not np.all(np.isfinite(flows)) or np.any(flows <= 0.0):
        raise NonFiniteFlow("Flows must be positive and finite, got min %r "
                            "max %r." % (np.min(flows), np.max(flows)))


def sample_trajectory(model, scene, opts, rng, encoding=None):
    """Sample a complete candidate with K sequential selections.

    Args:
        model: The FlowModel.
        scene: The Scene.
        opts: SampleOptions.
        rng: numpy Generator owned by this trajectory.
        encoding: Optional SceneEncoding shared by several trajectories.

    Returns:
        A Trajectory with its reward from tracer.validate().

    Raises:
        EmptyScene: The scene has no objects.
    """
    if encoding is None:
        encoding = prepare_scene(model, scene)
    k = model.config.k
    n_objects = scene.n_objects
    embeddings = encoding.object_embeddings
    partial = [-1] * k
    step_flows = np.empty((k, n_objects))
    step_masks = np.ones((k, n_objects), dtype=bool)
    fallback = False
    for step in range(k):
        state = encode_state(model, partial, embeddings)
        flows = compute_flows(model, embeddings, state,
                              encoding.scene_embedding)
        _check_flows(flows)
        if opts.use_mask:
            mask = action_mask(scene, partial, mask_origin(scene, partial))
        else:
            mask = np.ones(n_objects, dtype=bool)
        if not mask.any():
            fallback = True
            mask = np.ones(n_objects, dtype=bool)
        weights = None
        if opts.use_distance_weights:
            weights = distance_weights(scene, weight_origin(scene, partial),
                                       scene.rx, step == k - 1)
        index, _ = sample_action(flows, mask, weights, opts.epsilon, rng)
        partial[step] = index
        step_flows[step] = flows
        step_masks[step] = mask
    candidate = tuple(partial)
    reward, path = validate(scene, candidate)
    return Trajectory(candidate, step_flows, step_masks, reward, fallback,
                      path)


def forced_masks(scene, candidate, use_mask=True):
    """Step masks along a given candidate.

    A stored action hidden by its mask is unmasked again.

    Returns:
        ((K, N) masks, fallback flag)
    """
    k = len(candidate)
    masks = np.ones((k, scene.n_objects), dtype=bool)
    fallback = False
    if not use_mask:
        return masks, fallback
    partial = [-1] * k
    for step, index in enumerate(candidate):
        mask = action_mask(scene, partial, mask_origin(scene, partial))
        if not mask[index]:
            fallback = True
            mask[index] = True
        masks[step] = mask
        partial[step] = index
    return masks, fallback


def forced_trajectory(model, scene, candidate, use_mask=True, reward=None,
                      encoding=None):
    """Replayed trajectory of a stored candidate with current flows.

    The reward is looked up with tracer.validate() unless given.
    """
    if encoding is None:
        encoding = prepare_scene(model, scene)
    candidate = tuple(int(index) for index in candidate)
    flows, _ = trajectory_forward(model, encoding, candidate)
    _check_flows(flows)
    masks, fallback = forced_masks(scene, candidate, use_mask)
    path = None
    if reward is None:
        reward, path = validate(scene, candidate)
    return Trajectory(candidate, flows, masks, reward, fallback, path)


def _check_complete(trajectory):
    flows = np.asarray(trajectory.step_flows)
    k = len(trajectory.candidate)
    if k == 0 or flows.ndim != 2 or flows.shape[0] != k or \
            np.shape(trajectory.step_masks) != flows.shape or \
            any(index < 0 for index in trajectory.candidate):
        raise IncompleteTrajectory("Trajectory %s is not complete." %
                                   (trajectory.candidate,))
    return flows, np.asarray(trajectory.step_masks, dtype=bool)


def flow_matching_loss(trajectory):
    """Squared flow-matching residuals of the visited states.

    Interior states compare the inflow with the sum of the unmasked outgoing
    flows. The terminal state compares its inflow with the reward.

    Returns:
        (loss, per-state terms)
    """
    flows, masks = _check_complete(trajectory)
    chosen = trajectory.candidate
    k = len(chosen)
    terms = np.empty(k)
    for step in range(1, k):
        inflow = flows[step - 1, chosen[step - 1]]
        outflow = flows[step][masks[step]].sum()
        terms[step - 1] = (inflow - outflow) ** 2
    terms[k - 1] = (flows[k - 1, chosen[k - 1]] - trajectory.reward) ** 2
    return float(terms.sum()), terms


def flow_matching_grad(trajectory):
    """dL/dstep_flows of flow_matching_loss(), shape (K, N)."""
    flows, masks = _check_complete(trajectory)
    chosen = trajectory.candidate
    k = len(chosen)
    grad = np.zeros_like(flows)
    for step in range(1, k):
        diff = flows[step - 1, chosen[step - 1]] - flows[step][masks[step]].sum()
        grad[step - 1, chosen[step - 1]] += 2.0 * diff
        grad[step][masks[step]] -= 2.0 * diff
    grad[k - 1, chosen[k - 1]] += 2.0 * (flows[k - 1, chosen[k - 1]] -
                                         trajectory.reward)
    return grad


def scene_batch_grads(model, scene, trajectories, scale=1.0, encoding=None):
    """Loss and parameter gradients of trajectories sharing one scene.

    Flows are recomputed with the current parameters along each stored
    candidate; masks and rewards are taken from the trajectories. The
    gradient of scale * sum(losses) is returned.

    Returns:
        (list of per-trajectory losses, gradient dict)
    """
    if encoding is None:
        encoding = prepare_scene(model, scene)
    grads = model.zero_grads()
    grad_embeddings = np.zeros_like(encoding.object_embeddings)
    grad_scene = np.zeros_like(encoding.scene_embedding)
    losses = []
    for trajectory in trajectories:
        flows, cache = trajectory_forward(model, encoding,
                                          trajectory.candidate)
        _check_flows(flows)
        current = replace(trajectory, step_flows=flows)
        loss, _ = flow_matching_loss(current)
        losses.append(loss)
        head_grads, d_embeddings, d_scene = trajectory_backward(
            model, encoding, cache, scale * flow_matching_grad(current))
        accumulate(grads, head_grads)
        grad_embeddings += d_embeddings
        grad_scene += d_scene
    if trajectories:
        accumulate(grads, scene_backward(model, encoding, grad_embeddings,
                                         grad_scene))
    return losses, grads
