import dataclasses

import numpy as np
import pytest

from sepmdp import (
    Mdp,
    NotIrreducible,
    SeparableSpec,
    acoe_residual,
    assemble,
    brute_force,
    maximizer_profile,
    per_action_gain,
    solve_baseline,
)
from sepmdp.perturb import sample_instance


class TestPerActionGain:
    def test_zero_state_reward_gives_action_reward(self):
        spec = SeparableSpec(
            r_state=[0.0, 0.0],
            r_action=[0.4, -0.2, 1.1],
            kernel_action=[[0.5, 0.5], [0.9, 0.1], [0.3, 0.7]],
        )
        np.testing.assert_allclose(per_action_gain(spec), [0.4, -0.2, 1.1], atol=1e-14)

    def test_worked_two_action_instance(self, worked_two_action_spec):
        np.testing.assert_allclose(
            per_action_gain(worked_two_action_spec), [0.8, 0.75], atol=1e-12
        )

    def test_shared_kernel_ranks_by_action_reward(self):
        row = [0.6, 0.4]
        spec = SeparableSpec(
            r_state=[2.0, -1.0],
            r_action=[0.1, 0.9, 0.5],
            kernel_action=[row, row, row],
        )
        gains = per_action_gain(spec)
        assert np.argmax(gains) == 1
        np.testing.assert_allclose(gains - gains[0], [0.0, 0.8, 0.4], atol=1e-12)

    def test_reducible_action_named(self):
        spec = SeparableSpec(
            r_state=[0.0, 0.0],
            r_action=[0.0, 0.0],
            kernel_action=[[1.0, 0.0], [0.5, 0.5]],
        )
        with pytest.raises(NotIrreducible) as err:
            per_action_gain(spec)
        assert err.value.actions == [0]

    def test_all_offending_actions_named(self):
        spec = SeparableSpec(
            r_state=[0.0, 0.0],
            r_action=[0.0, 0.0, 0.0],
            kernel_action=[[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]],
        )
        with pytest.raises(NotIrreducible) as err:
            per_action_gain(spec)
        assert err.value.actions == [0, 2]


class TestSolveBaseline:
    def test_single_action(self):
        spec = SeparableSpec(
            r_state=[1.0, 0.0], r_action=[0.5], kernel_action=[[0.8, 0.2]]
        )
        sol = solve_baseline(spec)
        assert sol.best_action == 0
        assert sol.gain == pytest.approx(0.8 + 0.5, abs=1e-12)

    def test_worked_instance(self, worked_two_action_spec):
        sol = solve_baseline(worked_two_action_spec)
        assert sol.best_action == 0
        assert sol.gain == pytest.approx(0.8, abs=1e-12)
        assert sol.policy.is_constant()
        assert sol.gain == max(sol.per_action_gain)
        assert sol.per_action_gain[sol.best_action] == sol.gain

    def test_exact_tie_breaks_to_smallest_index(self):
        row = [0.5, 0.5]
        spec = SeparableSpec(
            r_state=[1.0, 0.0], r_action=[0.3, 0.3], kernel_action=[row, row]
        )
        assert solve_baseline(spec).best_action == 0

    def test_brute_force_agreement_on_sampled_specs(self):
        for seed in range(12):
            spec = sample_instance(seed=seed, n_states=2 + seed % 4, n_actions=2 + seed % 3)
            sol = solve_baseline(spec)
            bf = brute_force(assemble(spec, 0.0))
            assert abs(sol.gain - bf.gain) < 1e-9, seed

    def test_state_reward_shift_preserves_argmax(self, worked_two_action_spec):
        base = solve_baseline(worked_two_action_spec)
        shifted_spec = dataclasses.replace(
            worked_two_action_spec, r_state=worked_two_action_spec.r_state + 2.5
        )
        shifted = solve_baseline(shifted_spec)
        assert shifted.best_action == base.best_action
        np.testing.assert_allclose(
            shifted.per_action_gain, base.per_action_gain + 2.5, atol=1e-12
        )

    def test_poisson_compatibility(self):
        for seed in range(8):
            spec = sample_instance(seed=seed, n_states=3 + seed % 3, n_actions=2 + seed % 3)
            sol = solve_baseline(spec)
            from sepmdp import invariant_distribution

            P_best = np.tile(spec.kernel_action[sol.best_action], (spec.n_states, 1))
            pi = invariant_distribution(P_best)
            defect = pi @ (spec.r_state + spec.r_action[sol.best_action] - sol.gain)
            assert abs(defect) < 1e-10


class TestAcoeResidual:
    def test_single_state_formula(self):
        m = Mdp(1, 3, reward=[[0.1, 0.9, 0.4]], kernel=[[[1.0], [1.0], [1.0]]])
        res = acoe_residual(m, 0.2, np.array([5.0]))
        assert res[0] == pytest.approx(0.9 - 0.2, abs=1e-14)

    def test_baseline_satisfies_acoe(self):
        for seed in range(10):
            spec = sample_instance(seed=seed, n_states=2 + seed % 5, n_actions=2 + seed % 3)
            sol = solve_baseline(spec)
            res = acoe_residual(assemble(spec, 0.0), sol.gain, sol.bias)
            assert np.abs(res).max() < 1e-8, seed

    def test_gain_shift_moves_residual_linearly(self, worked_two_action_spec):
        m = assemble(worked_two_action_spec, 0.0)
        sol = solve_baseline(worked_two_action_spec)
        delta = 0.37
        base = acoe_residual(m, sol.gain, sol.bias)
        shifted = acoe_residual(m, sol.gain + delta, sol.bias)
        np.testing.assert_allclose(shifted, base - delta, atol=1e-14)


class TestMaximizerProfile:
    def test_constant_at_best_action(self):
        for seed in range(10):
            spec = sample_instance(seed=seed, n_states=2 + seed % 5, n_actions=2 + seed % 3)
            sol = solve_baseline(spec)
            profile = maximizer_profile(assemble(spec, 0.0), sol.bias)
            assert (profile == sol.best_action).all(), seed

    def test_single_action_all_zero(self):
        spec = SeparableSpec(r_state=[1.0, 0.0], r_action=[0.5], kernel_action=[[0.8, 0.2]])
        sol = solve_baseline(spec)
        profile = maximizer_profile(assemble(spec, 0.0), sol.bias)
        np.testing.assert_array_equal(profile, [0, 0])

    def test_bonus_to_losing_action_keeps_profile(self, worked_two_action_spec):
        m = assemble(worked_two_action_spec, 0.0)
        sol = solve_baseline(worked_two_action_spec)
        before = maximizer_profile(m, sol.bias)
        # add a state-independent bonus to the non-maximizing action, small
        # enough that it stays non-maximizing
        reward = np.array(m.reward)
        reward[:, 1] += 0.01
        bumped = Mdp(m.n_states, m.n_actions, reward=reward, kernel=m.kernel)
        np.testing.assert_array_equal(maximizer_profile(bumped, sol.bias), before)
