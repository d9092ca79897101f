# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

import numpy as np
import pytest
from scipy import stats

from gfnpath.module_utils.exception import (EmptyScene, IncompleteTrajectory,
                                            NonFiniteFlow)
from gfnpath.module_utils.nn import Adam, FlowModel, ModelConfig
from gfnpath.module_utils.sampler import (GREEDY, SampleOptions, Trajectory,
                                          action_mask, action_probabilities,
                                          distance_weights,
                                          flow_matching_grad,
                                          flow_matching_loss, forced_masks,
                                          forced_trajectory, mask_origin,
                                          prepare_scene, sample_action,
                                          sample_trajectory,
                                          scene_batch_grads, trajectory_rng,
                                          weight_origin)
from gfnpath.module_utils.tracer import Scene, iter_candidates, validate


def _untrained(k, d=8, seed=0):
    return FlowModel.initialize(ModelConfig(d=d, k=k),
                                np.random.default_rng(seed))


class TestActionMask:

    def test_first_step_is_unmasked(self, corridor):
        assert action_mask(corridor, (-1, -1), None).all()

    def test_previous_object_is_excluded(self, corridor):
        mask = action_mask(corridor, (0, -1))
        assert not mask[0]
        assert mask[1:].all()

    def test_objects_behind_the_previous_plane(self, blocked_corridor):
        scene = blocked_corridor
        # Object 4 lies in the plane y = 0; the ray comes from TX (y < 0).
        mask = action_mask(scene, (4, -1), mask_origin(scene, (4, -1)))
        assert not mask[4]
        # Wall centroids sit at y = +-6.67, only those with y < 0 stay.
        expected = scene.centroids[:, 1] < 0.0
        expected[4] = False
        np.testing.assert_array_equal(mask, expected)

    def test_coplanar_objects_are_kept(self, corridor):
        mask = action_mask(corridor, (0, -1), corridor.tx)
        assert mask[1]
        assert mask[2] and mask[3]

    def test_origins(self, corridor):
        assert mask_origin(corridor, (-1, -1)) is None
        np.testing.assert_array_equal(mask_origin(corridor, (2, -1)),
                                      corridor.tx)
        np.testing.assert_array_equal(mask_origin(corridor, (2, 1)),
                                      corridor.centroids[2])
        np.testing.assert_array_equal(weight_origin(corridor, (-1, -1)),
                                      corridor.tx)
        np.testing.assert_array_equal(weight_origin(corridor, (2, -1)),
                                      corridor.centroids[2])


class TestDistanceWeights:

    def test_normalized_and_nearest_first(self, corridor):
        last = corridor.centroids[0] + np.array([-0.1, 0.0, 0.0])
        weights = distance_weights(corridor, last, corridor.rx, False)
        assert weights.sum() == pytest.approx(1.0)
        assert np.argmax(weights) == 0

    def test_last_step_adds_the_rx_distance(self, corridor):
        plain = distance_weights(corridor, corridor.tx, corridor.rx, False)
        last = distance_weights(corridor, corridor.tx, corridor.rx, True)
        assert not np.allclose(plain, last)

    def test_distance_floor(self, ground):
        weights = distance_weights(ground, ground.centroids[0], ground.rx,
                                   False)
        assert np.all(np.isfinite(weights))
        assert weights[0] == pytest.approx(1.0)


class TestSampleAction:

    def test_probabilities(self):
        probs = action_probabilities([1.0, 3.0, 4.0],
                                     np.array([True, True, False]))
        np.testing.assert_allclose(probs, [0.25, 0.75, 0.0])
        probs = action_probabilities([1.0, 3.0, 4.0], None, None, 0.5)
        np.testing.assert_allclose(probs, [1 / 6. + 1 / 16., 1 / 6. + 3 / 16.,
                                           1 / 6. + 4 / 16.])
        assert probs.sum() == pytest.approx(1.0)

    def test_masked_actions_are_never_drawn(self):
        rng = np.random.default_rng(0)
        mask = np.array([False, True, False, True])
        draws = set(sample_action(np.ones(4), mask, rng=rng)[0]
                    for _ in range(200))
        assert draws == {1, 3}

    def test_empty_mask_is_lifted(self):
        rng = np.random.default_rng(0)
        index, uniform = sample_action(np.ones(3), np.zeros(3, dtype=bool),
                                       rng=rng)
        assert 0 <= index < 3
        assert uniform

    def test_greedy_draw_follows_flows(self):
        flows = np.array([1.0, 2.0, 3.0, 4.0])
        rng = np.random.default_rng(1)
        n_draws = 100000
        counts = np.bincount([sample_action(flows, rng=rng)[0]
                              for _ in range(n_draws)], minlength=4)
        expected = n_draws * flows / flows.sum()
        assert stats.chisquare(counts, expected).pvalue > 0.001

    def test_epsilon_one_is_uniform(self):
        rng = np.random.default_rng(2)
        draws = [sample_action([1.0, 1e6], epsilon=1.0, rng=rng)
                 for _ in range(4000)]
        assert all(uniform for _, uniform in draws)
        share = np.mean([index for index, _ in draws])
        assert share == pytest.approx(0.5, abs=0.04)

    def test_non_finite_scores(self):
        with pytest.raises(NonFiniteFlow):
            action_probabilities([np.nan, 1.0])

    def test_options(self):
        with pytest.raises(ValueError):
            SampleOptions(epsilon=1.5)
        assert GREEDY.epsilon == 0.0 and GREEDY.use_mask
        assert not GREEDY.use_distance_weights


class TestSampleTrajectory:

    def test_complete_and_rewarded(self, corridor):
        model = _untrained(2)
        trajectory = sample_trajectory(model, corridor, GREEDY,
                                       trajectory_rng(0, 0, 0))
        assert len(trajectory.candidate) == 2
        assert all(0 <= index < 4 for index in trajectory.candidate)
        assert trajectory.step_flows.shape == (2, 4)
        assert trajectory.step_masks.shape == (2, 4)
        assert trajectory.reward == validate(corridor,
                                             trajectory.candidate)[0]
        assert not trajectory.step_masks[1][trajectory.candidate[0]]

    def test_same_stream_same_trajectory(self, corridor):
        model = _untrained(2)
        first = sample_trajectory(model, corridor, SampleOptions(0.3),
                                  trajectory_rng(4, 5, 6))
        second = sample_trajectory(model, corridor, SampleOptions(0.3),
                                   trajectory_rng(4, 5, 6))
        assert first.candidate == second.candidate
        np.testing.assert_array_equal(first.step_flows, second.step_flows)

    def test_shared_encoding(self, corridor):
        model = _untrained(1)
        encoding = prepare_scene(model, corridor)
        first = sample_trajectory(model, corridor, GREEDY,
                                  trajectory_rng(1, 2, 3), encoding)
        second = sample_trajectory(model, corridor, GREEDY,
                                   trajectory_rng(1, 2, 3))
        assert first.candidate == second.candidate

    def test_untrained_model_samples_uniformly(self, corridor):
        model = _untrained(1)
        encoding = prepare_scene(model, corridor)
        counts = np.zeros(4)
        for index in range(4000):
            trajectory = sample_trajectory(model, corridor, GREEDY,
                                           trajectory_rng(0, 0, index),
                                           encoding)
            counts[trajectory.candidate[0]] += 1
        np.testing.assert_allclose(counts / 4000.0, 0.25, atol=0.04)

    def test_empty_scene(self):
        scene = Scene(np.zeros((0, 3)), np.zeros((0, 3)), (0.0, 0.0, 0.0),
                      (1.0, 0.0, 0.0))
        with pytest.raises(EmptyScene):
            sample_trajectory(_untrained(1), scene, GREEDY,
                              trajectory_rng(0, 0, 0))

    def test_distance_weights_option(self, corridor):
        model = _untrained(1)
        opts = SampleOptions(use_distance_weights=True)
        trajectory = sample_trajectory(model, corridor, opts,
                                       trajectory_rng(0, 0, 0))
        assert trajectory.candidate[0] in range(4)


class TestForcedTrajectory:

    def test_hidden_action_is_unmasked(self, blocked_corridor):
        scene = blocked_corridor
        masks, fallback = forced_masks(scene, (4, 0))
        # Object 0 (east wall, centroid y > 0) is behind the blocker.
        assert fallback
        assert masks[1][0]
        masks, fallback = forced_masks(scene, (4, 1))
        assert masks[1][1] and not fallback

    def test_flows_match_sampling(self, corridor):
        model = _untrained(2, seed=4)
        sampled = sample_trajectory(model, corridor, GREEDY,
                                    trajectory_rng(0, 1, 2))
        forced = forced_trajectory(model, corridor, sampled.candidate)
        np.testing.assert_allclose(forced.step_flows, sampled.step_flows,
                                   rtol=1e-12)
        np.testing.assert_array_equal(forced.step_masks, sampled.step_masks)
        assert forced.reward == sampled.reward


class TestFlowMatchingLoss:

    def _trajectory(self, reward=1):
        flows = np.array([[1.0, 2.0, 3.0],
                          [0.5, 0.25, 4.0]])
        masks = np.array([[True, True, True],
                          [True, False, True]])
        return Trajectory((1, 2), flows, masks, reward)

    def test_terms(self):
        loss, terms = flow_matching_loss(self._trajectory())
        # Inflow 2 against outflow 0.5 + 4, terminal flow 4 against reward 1.
        np.testing.assert_allclose(terms, [(2.0 - 4.5) ** 2, (4.0 - 1) ** 2])
        assert loss == pytest.approx(6.25 + 9.0)

    def test_gradient(self):
        trajectory = self._trajectory(reward=0)
        grad = flow_matching_grad(trajectory)
        h = 1e-6
        flows = trajectory.step_flows
        for idx in np.ndindex(flows.shape):
            bumped = flows.copy()
            bumped[idx] += h
            up, _ = flow_matching_loss(Trajectory((1, 2), bumped,
                                                  trajectory.step_masks, 0))
            bumped[idx] -= 2 * h
            down, _ = flow_matching_loss(Trajectory((1, 2), bumped,
                                                    trajectory.step_masks, 0))
            assert grad[idx] == pytest.approx((up - down) / (2 * h),
                                              abs=1e-6)

    def test_incomplete(self):
        trajectory = Trajectory((1, -1), np.ones((2, 3)),
                                np.ones((2, 3), dtype=bool), 0)
        with pytest.raises(IncompleteTrajectory):
            flow_matching_loss(trajectory)
        with pytest.raises(IncompleteTrajectory):
            flow_matching_grad(Trajectory((1, 2), np.ones((1, 3)),
                                          np.ones((1, 3), dtype=bool), 0))

    def test_zero_at_balance(self):
        flows = np.array([[0.5, 1.25], [0.25, 1.0]])
        trajectory = Trajectory((1, 1), flows, np.ones((2, 2), dtype=bool), 1)
        loss, _ = flow_matching_loss(trajectory)
        assert loss == pytest.approx(0.0, abs=1e-15)


@pytest.mark.slow
class TestProportionality:
    """Terminal distribution of a trained model on a toy scene."""

    def test_uniform_over_valid_paths(self, corridor):
        scene = corridor
        model = _untrained(2, d=16, seed=1)
        optimizer = Adam(lr=1e-3)
        trajectories = [forced_trajectory(model, scene, c) for c in
                        iter_candidates(scene.n_objects, 2, no_repeat=True)]
        trajectories = [t for t in trajectories if not t.fallback]
        valid = [t.candidate for t in trajectories if t.reward]
        assert len(valid) >= 2
        for _ in range(20000):
            losses, grads = scene_batch_grads(model, scene, trajectories,
                                              1.0 / len(trajectories))
            if np.mean(losses) < 1e-5:
                break
            optimizer.step(model, grads)
        assert np.mean(losses) < 1e-4

        encoding = prepare_scene(model, scene)
        counts = dict((c, 0) for c in valid)
        n_samples = 100000
        for index in range(n_samples):
            trajectory = sample_trajectory(model, scene, GREEDY,
                                           trajectory_rng(9, 0, index),
                                           encoding)
            if trajectory.reward:
                counts[trajectory.candidate] += 1
        total = sum(counts.values())
        for candidate in valid:
            assert counts[candidate] / float(total) == pytest.approx(
                1.0 / len(valid), rel=0.05)
