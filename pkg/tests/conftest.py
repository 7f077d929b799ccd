import numpy as np
import pytest

from sepmdp import Mdp, SeparableSpec

# worked chain used across modules: invariant [2/3, 1/3] solved by hand
WORKED_P = np.array([[0.9, 0.1], [0.2, 0.8]])
WORKED_R = np.array([1.0, 0.0])
WORKED_INVARIANT = np.array([2.0 / 3.0, 1.0 / 3.0])
WORKED_GAIN = 2.0 / 3.0


@pytest.fixture
def worked_chain():
    return WORKED_P, WORKED_R


@pytest.fixture
def worked_two_action_spec():
    # two rank-one action chains: g(0) = 0.8*1 + 0 = 0.8, g(1) = 0.5*1 + 0.25 = 0.75
    return SeparableSpec(
        r_state=[1.0, 0.0],
        r_action=[0.0, 0.25],
        kernel_action=[[0.8, 0.2], [0.5, 0.5]],
    )


@pytest.fixture
def worked_chain_mdp():
    # the worked chain wrapped as a single-action MDP
    return Mdp(
        n_states=2,
        n_actions=1,
        reward=WORKED_R.reshape(2, 1),
        kernel=WORKED_P.reshape(2, 1, 2),
    )


def random_irreducible_chain(seed, n_states, floor=0.05):
    """Dense random chain with an entry floor: irreducible and aperiodic."""
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.ones(n_states), size=n_states)
    return floor + (1.0 - n_states * floor) * rows


def power_iteration(P, tol=1e-13, max_iter=500_000):
    """Independent stationary-distribution oracle: iterate pi <- pi P from uniform."""
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).max() < tol:
            return nxt
        pi = nxt
    raise AssertionError("power iteration did not converge; chain may be periodic")


def acceptance_dims(seed):
    """Deterministic instance dimensions: N in 2..6, M in 2..4."""
    return 2 + seed % 5, 2 + seed % 3
