"""Exact solvers for general finite average-reward MDPs.

Three independent routes to the optimal gain: Howard policy iteration,
exhaustive policy enumeration, and damped relative value iteration.  They are
deliberately redundant so no optimality claim rests on a single
implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chain
from .baseline import acoe_residual
from .errors import CapExceeded, NonConvergence, NotIrreducible
from .model import Mdp, Policy, restrict

ENUMERATION_CAP = 10**6
IMPROVE_TOL = 1e-12
RVI_MAX_SWEEPS = 10**6
RVI_DAMPING = 0.5


@dataclass(frozen=True)
class PolicySolution:
    """A stationary policy with its exactly evaluated gain and bias.

    acoe_residual_norm is the max-norm optimality defect of (gain, bias)
    against the full MDP; it is ~0 only for an optimal policy.  iterations
    counts evaluation rounds (0 for a plain evaluation, policies enumerated
    for brute force).
    """

    policy: Policy
    gain: float
    bias: np.ndarray
    acoe_residual_norm: float
    iterations: int


def policy_evaluation(m: Mdp, pi: Policy) -> PolicySolution:
    """Exact gain and bias of one policy via its restricted chain."""
    P, r = restrict(m, pi)
    if not chain.is_irreducible(P):
        raise NotIrreducible(
            f"chain restricted to policy {tuple(pi.action_of)} is not irreducible",
            policy=tuple(int(a) for a in pi.action_of),
        )
    sol = chain.analyze_chain(P, r)
    res = float(np.abs(acoe_residual(m, sol.gain, sol.bias)).max())
    return PolicySolution(
        policy=pi, gain=sol.gain, bias=sol.bias, acoe_residual_norm=res, iterations=0
    )


def policy_iteration(m: Mdp, initial: Policy | None = None) -> PolicySolution:
    """Howard policy iteration: exact evaluation alternating with greedy improvement.

    The improvement step switches a state's action only when the Q-value gain
    exceeds 1e-12 (prevents cycling between numerically tied policies) and
    breaks ties toward the smallest action index.  The per-round gain is
    checked to be nondecreasing; a decrease or exceeding the M^N + 1 round cap
    signals a bug, not a model property.
    """
    if initial is None:
        initial = Policy(np.zeros(m.n_states, dtype=np.int64))
    initial.validate_for(m)
    pi = initial.action_of.copy()
    round_cap = min(float(m.n_actions) ** m.n_states + 1, 10.0**6)
    states = np.arange(m.n_states)
    prev_gain = -np.inf
    rounds = 0
    while rounds <= round_cap:
        rounds += 1
        sol = policy_evaluation(m, Policy(pi))
        if sol.gain < prev_gain - IMPROVE_TOL:
            raise NonConvergence(
                f"policy iteration gain decreased from {prev_gain!r} to {sol.gain!r}"
            )
        prev_gain = sol.gain
        q = m.reward + m.kernel @ sol.bias
        greedy = np.argmax(q, axis=1)
        improved = q[states, greedy] > q[states, pi] + IMPROVE_TOL
        if not improved.any():
            return PolicySolution(
                policy=Policy(pi),
                gain=sol.gain,
                bias=sol.bias,
                acoe_residual_norm=sol.acoe_residual_norm,
                iterations=rounds,
            )
        pi = np.where(improved, greedy, pi)
    raise NonConvergence(f"policy iteration did not stabilize within {round_cap} rounds")


def _enumerate_policies(n_states: int, n_actions: int, cap: int) -> np.ndarray:
    """All deterministic policies as a (M^N, N) int array in lexicographic order."""
    count = n_actions**n_states
    if count > cap:
        raise CapExceeded(f"{n_actions}^{n_states} = {count} policies exceeds cap {cap}")
    idx = np.arange(count)
    weights = n_actions ** np.arange(n_states - 1, -1, -1)
    return (idx[:, np.newaxis] // weights[np.newaxis, :]) % n_actions


def _stationary_batch(P_batch: np.ndarray) -> np.ndarray:
    """Invariant distributions of a (K, N, N) stack of irreducible chains."""
    k, n, _ = P_batch.shape
    A = np.broadcast_to(np.eye(n), (k, n, n)) - np.transpose(P_batch, (0, 2, 1))
    A = A.copy()
    A[:, -1, :] = 1.0
    b = np.zeros((k, n, 1))
    b[:, -1, 0] = 1.0
    pis = np.linalg.solve(A, b)[:, :, 0]
    pis = np.clip(pis, 0.0, None)
    return pis / pis.sum(axis=1, keepdims=True)


def _policy_gains_batch(m: Mdp, policies: np.ndarray) -> np.ndarray:
    """Exact gains of a (K, N) array of policies, batched.

    Raises NotIrreducible naming the first offending policy when the kernel
    support does not rule reducibility out.
    """
    states = np.arange(m.n_states)
    if not (m.kernel > chain.EDGE_TOL).all():
        # dense-positive kernels make every restriction irreducible; otherwise gate per policy
        for pol in policies:
            P = m.kernel[states, pol, :]
            if not chain.is_irreducible(P):
                raise NotIrreducible(
                    f"chain restricted to policy {tuple(int(a) for a in pol)} is not irreducible",
                    policy=tuple(int(a) for a in pol),
                )
    P_batch = m.kernel[states[np.newaxis, :], policies, :]
    r_batch = m.reward[states[np.newaxis, :], policies]
    pis = _stationary_batch(P_batch)
    return (pis * r_batch).sum(axis=1)


def _all_policy_gains(m: Mdp, cap: int = ENUMERATION_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Gains of every deterministic policy, in lexicographic policy order."""
    policies = _enumerate_policies(m.n_states, m.n_actions, cap)
    return policies, _policy_gains_batch(m, policies)


def brute_force(m: Mdp, cap: int = ENUMERATION_CAP) -> PolicySolution:
    """Evaluate every deterministic policy; return the gain maximizer.

    Exact ties resolve to the lexicographically smallest action vector.
    """
    policies, gains = _all_policy_gains(m, cap)
    best = int(np.argmax(gains))  # first maximum = lexicographically smallest
    winner = policy_evaluation(m, Policy(policies[best]))
    return PolicySolution(
        policy=winner.policy,
        gain=winner.gain,
        bias=winner.bias,
        acoe_residual_norm=winner.acoe_residual_norm,
        iterations=len(policies),
    )


def _span(x: np.ndarray) -> float:
    return float(x.max() - x.min())


def relative_value_iteration(
    m: Mdp, span_tol: float, max_sweeps: int = RVI_MAX_SWEEPS
) -> tuple[float, np.ndarray, Policy]:
    """Damped relative value iteration: v <- (1-tau) v + tau T(v), tau = 0.5.

    The damping handles periodic chains; re-centering v at state 0 each sweep
    prevents unbounded drift.  Stops when the span of T(v) - v falls below
    span_tol; the gain estimate is the midpoint of the span bounds
    [min(Tv - v), max(Tv - v)], which bracket the optimal gain.  The greedy
    policy at the stopping point is evaluated exactly and must agree with the
    estimate within span_tol.
    """
    v = np.zeros(m.n_states)
    for _ in range(max_sweeps):
        q = m.reward + m.kernel @ v
        tv = q.max(axis=1)
        u = tv - v
        if _span(u) < span_tol:
            g_est = float(u.max() + u.min()) / 2.0
            greedy = Policy(np.argmax(q, axis=1))
            check = policy_evaluation(m, greedy)
            if abs(check.gain - g_est) > span_tol:
                raise NonConvergence(
                    f"greedy policy gain {check.gain!r} is not within {span_tol} "
                    f"of the span-bound estimate {g_est!r}"
                )
            return g_est, v - float(np.dot(_rvi_weights(m, greedy), v)), greedy
        v = (1.0 - RVI_DAMPING) * v + RVI_DAMPING * tv
        v -= v[0]
    raise NonConvergence(f"relative value iteration exceeded {max_sweeps} sweeps")


def _rvi_weights(m: Mdp, greedy: Policy) -> np.ndarray:
    # normalize the bias estimate the same way exact biases are normalized
    P, _ = restrict(m, greedy)
    return chain.invariant_distribution(P)
