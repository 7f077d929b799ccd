import numpy as np
import pytest

from sepmdp import (
    CapExceeded,
    Mdp,
    Policy,
    assemble,
    brute_force,
    per_action_gain,
    policy_evaluation,
    policy_iteration,
    relative_value_iteration,
    solve_baseline,
)
from sepmdp.perturb import sample_instance


def _random_mdp(seed, n_states, n_actions, floor=0.05):
    rng = np.random.default_rng(seed)
    reward = rng.uniform(-1, 1, (n_states, n_actions))
    rows = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    kernel = floor + (1.0 - n_states * floor) * rows
    return Mdp(n_states, n_actions, reward=reward, kernel=kernel)


class TestPolicyEvaluation:
    def test_single_state(self):
        m = Mdp(1, 2, reward=[[0.3, 0.7]], kernel=[[[1.0], [1.0]]])
        sol = policy_evaluation(m, Policy([1]))
        assert sol.gain == pytest.approx(0.7, abs=1e-14)
        np.testing.assert_allclose(sol.bias, [0.0], atol=1e-14)
        assert sol.iterations == 0

    def test_constant_policy_matches_per_action_gain(self, worked_two_action_spec):
        m = assemble(worked_two_action_spec, 0.0)
        gains = per_action_gain(worked_two_action_spec)
        for a in range(2):
            sol = policy_evaluation(m, Policy.constant(a, 2))
            assert sol.gain == pytest.approx(gains[a], abs=1e-12)

    def test_reward_shift_moves_gain_not_bias(self):
        m = _random_mdp(4, 3, 2)
        pi = Policy([0, 1, 0])
        sol = policy_evaluation(m, pi)
        shifted = Mdp(3, 2, reward=np.array(m.reward) + 1.3, kernel=m.kernel)
        sol2 = policy_evaluation(shifted, pi)
        assert sol2.gain == pytest.approx(sol.gain + 1.3, abs=1e-12)
        np.testing.assert_allclose(sol2.bias, sol.bias, atol=1e-10)

    def test_poisson_residual_invariant(self):
        m = _random_mdp(7, 4, 3)
        sol = policy_evaluation(m, Policy([2, 0, 1, 2]))
        from sepmdp import restrict

        P, r = restrict(m, sol.policy)
        residual = (np.eye(4) - P) @ sol.bias - (r - sol.gain)
        assert np.abs(residual).max() < 1e-8


class TestPolicyIteration:
    def test_single_action_returns_immediately(self):
        m = _random_mdp(1, 3, 1)
        sol = policy_iteration(m)
        assert sol.iterations == 1
        np.testing.assert_array_equal(sol.policy.action_of, [0, 0, 0])

    def test_matches_baseline_on_separable(self):
        for seed in range(8):
            spec = sample_instance(seed=seed, n_states=2 + seed % 5, n_actions=2 + seed % 3)
            base = solve_baseline(spec)
            sol = policy_iteration(assemble(spec, 0.0))
            assert abs(sol.gain - base.gain) < 1e-9, seed

    def test_matches_brute_force_on_random_mdps(self):
        for seed in range(10):
            m = _random_mdp(seed, 2 + seed % 5, 2 + seed % 3)
            pi_sol = policy_iteration(m)
            bf_sol = brute_force(m)
            assert abs(pi_sol.gain - bf_sol.gain) < 1e-9, seed
            assert pi_sol.acoe_residual_norm < 1e-9

    def test_declared_optimum_has_zero_residual(self):
        m = _random_mdp(21, 5, 3)
        sol = policy_iteration(m)
        assert sol.acoe_residual_norm < 1e-9


class TestBruteForce:
    def test_single_state_max_of_scalars(self):
        m = Mdp(1, 3, reward=[[0.1, 0.9, 0.4]], kernel=[[[1.0], [1.0], [1.0]]])
        sol = brute_force(m)
        assert sol.gain == pytest.approx(0.9, abs=1e-14)
        np.testing.assert_array_equal(sol.policy.action_of, [1])
        assert sol.iterations == 3

    def test_two_by_two_agrees_with_policy_iteration(self):
        m = _random_mdp(5, 2, 2)
        bf = brute_force(m)
        assert bf.iterations == 4
        assert abs(bf.gain - policy_iteration(m).gain) < 1e-9

    def test_all_rewards_equal_ties_to_zero_policy(self):
        m = _random_mdp(9, 3, 2)
        m = Mdp(3, 2, reward=np.zeros((3, 2)), kernel=m.kernel)
        sol = brute_force(m)
        np.testing.assert_array_equal(sol.policy.action_of, [0, 0, 0])
        assert sol.gain == pytest.approx(0.0, abs=1e-14)

    def test_cap_exceeded(self):
        m = _random_mdp(3, 4, 3)
        with pytest.raises(CapExceeded):
            brute_force(m, cap=80)


class TestRelativeValueIteration:
    def test_single_state_one_sweep(self):
        m = Mdp(1, 3, reward=[[0.1, 0.9, 0.4]], kernel=[[[1.0], [1.0], [1.0]]])
        g, bias, greedy = relative_value_iteration(m, span_tol=1e-10)
        assert g == pytest.approx(0.9, abs=1e-12)
        np.testing.assert_array_equal(greedy.action_of, [1])

    def test_worked_two_action_instance(self, worked_two_action_spec):
        m = assemble(worked_two_action_spec, 0.0)
        g, _, _ = relative_value_iteration(m, span_tol=1e-10)
        assert abs(g - brute_force(m).gain) < 1e-9

    def test_periodic_chain_converges(self):
        # deterministic 2-cycle under both actions: damping handles periodicity
        kernel = np.array([[[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]])
        m = Mdp(2, 2, reward=[[1.0, 0.5], [0.0, 0.25]], kernel=kernel)
        g, _, _ = relative_value_iteration(m, span_tol=1e-10)
        assert abs(g - brute_force(m).gain) < 1e-9

    def test_cross_solver_agreement(self):
        for seed in range(8):
            m = _random_mdp(seed + 50, 2 + seed % 5, 2 + seed % 3)
            g_rvi, _, _ = relative_value_iteration(m, span_tol=1e-10)
            bf = brute_force(m)
            pi_sol = policy_iteration(m)
            assert abs(pi_sol.gain - bf.gain) < 1e-9, seed
            assert abs(g_rvi - bf.gain) < 1e-9, seed
