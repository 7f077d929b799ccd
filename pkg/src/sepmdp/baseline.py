"""Closed-form solution of the totally separable baseline.

With action-only transitions and additively separable rewards, the optimal
stationary policy is constant: pick the action maximizing
invariant(a) . r_state + r_action[a].  The bias comes from the Poisson
equation of the winning chain, and the optimality-equation residual of the
resulting (gain, bias) pair is checkable directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chain
from .errors import NotIrreducible
from .model import Mdp, Policy, SeparableSpec


@dataclass(frozen=True)
class BaselineSolution:
    """Constant optimal policy of the separable baseline with its gain and bias."""

    best_action: int
    gain: float
    per_action_gain: np.ndarray
    bias: np.ndarray
    policy: Policy


def _action_chains_checked(spec: SeparableSpec) -> None:
    # eager gate so the error names every offending action, not just the first
    bad = [a for a in range(spec.n_actions) if not chain.is_irreducible(_action_matrix(spec, a))]
    if bad:
        raise NotIrreducible(
            f"kernel_action chain(s) not irreducible for action(s) {bad}", actions=bad
        )


def _action_matrix(spec: SeparableSpec, a: int) -> np.ndarray:
    # every state shares the same transition row under a fixed action
    return np.broadcast_to(spec.kernel_action[a], (spec.n_states, spec.n_states))


def per_action_gain(spec: SeparableSpec) -> np.ndarray:
    """Gain of each constant policy: invariant(a) . r_state + r_action[a]."""
    _action_chains_checked(spec)
    gains = np.empty(spec.n_actions)
    for a in range(spec.n_actions):
        pi_a = chain.invariant_distribution(_action_matrix(spec, a))
        gains[a] = float(pi_a @ spec.r_state) + spec.r_action[a]
    return gains


def solve_baseline(spec: SeparableSpec) -> BaselineSolution:
    """Optimal constant policy of the epsilon=0 baseline, with gain and bias.

    Ties in the per-action gain break toward the smallest action index.  The
    bias solves the Poisson equation of the winning action's chain with reward
    r_state + r_action[a*] and is normalized against that chain's invariant.
    """
    gains = per_action_gain(spec)
    best = int(np.argmax(gains))
    g_star = float(gains[best])
    P = _action_matrix(spec, best)
    r = spec.r_state + spec.r_action[best]
    pi_best = chain.invariant_distribution(P)
    bias = chain.solve_poisson(P, r, pi_best, g_star)
    return BaselineSolution(
        best_action=best,
        gain=g_star,
        per_action_gain=gains,
        bias=bias,
        policy=Policy.constant(best, spec.n_states),
    )


def acoe_residual(m: Mdp, g: float, h: np.ndarray) -> np.ndarray:
    """Optimality-equation defect per state:
    max_a [r(s,a) + sum_s' P(s'|s,a) h(s')] - g - h(s).

    (g, h) satisfies the average-cost optimality equation iff this vector is zero.
    """
    q = m.reward + m.kernel @ np.asarray(h, dtype=float)
    return q.max(axis=1) - g - np.asarray(h, dtype=float)


def maximizer_profile(m: Mdp, h: np.ndarray) -> np.ndarray:
    """Per-state smallest action index attaining max_a [r(s,a) + P(s,a) . h]."""
    q = m.reward + m.kernel @ np.asarray(h, dtype=float)
    return np.argmax(q, axis=1)
