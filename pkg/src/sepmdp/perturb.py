"""First-order perturbation analysis and empirical gap sweeps.

The invariant distribution of a perturbed chain P0 + eps*Q expands as
pi0 + eps*pi1 + O(eps^2) with pi1 = pi0 Q (I - P0)^#, so each policy's gain
is within a constant times eps of its unperturbed value.  Taking the max of
that constant over the finitely many policies bounds the optimality gap of
the baseline constant policy by 2*C*eps.  Everything here measures those
quantities exactly (re-solving the perturbed chains) rather than bounding
them analytically.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import chain
from .baseline import solve_baseline
from .errors import CapExceeded, CrossCheckFailure, NotIrreducible
from .model import Mdp, Policy, SeparableSpec, assemble, epsilon_max, restrict
from .solvers import (
    ENUMERATION_CAP,
    _enumerate_policies,
    _policy_gains_batch,
    policy_evaluation,
    policy_iteration,
)

DEFAULT_EXPANSION_GRID = tuple(np.geomspace(1e-4, 1e-2, 5))
RESIDUAL_FLOOR = 1e-12
CROSS_CHECK_TOL = 1e-8
GAP_FLOOR = 1e-12
FALLBACK_SAMPLE_SIZE = 4096


@dataclass(frozen=True)
class ExpansionReport:
    """First-order gain expansion of one policy, with exactly re-solved residuals.

    residual_curve holds (eps, |g_eps - g0 - eps*g1|) pairs; the residual is
    second order in eps when g1 is the true derivative.
    """

    policy: Policy
    pi0: np.ndarray
    pi1: np.ndarray
    g0: float
    g1: float
    residual_curve: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class UniformC:
    """Measured max over policies of |g_eps - g0| / eps.

    exhaustive is False when the policy count exceeded the enumeration cap and
    a seeded random sample was used instead.
    """

    value: float
    exhaustive: bool
    n_policies: int


@dataclass(frozen=True)
class SweepReport:
    """Per-epsilon optimal gain, baseline-policy gain, and their gap.

    uniform_C is the measured perturbation constant, maximized over the
    positive grid points so that gap <= 2*uniform_C*eps holds row-wise;
    slopes are log-log least-squares exponents (None when fewer than two
    points rise above the numerical floor).  feasible_below reports the
    instance's sharp epsilon feasibility bound.
    """

    epsilons: tuple[float, ...]
    optimal_gain: tuple[float, ...]
    fixed_policy_gain: tuple[float, ...]
    gap: tuple[float, ...]
    gap_slope: float | None
    expansion_slope: float | None
    uniform_C: float
    uniform_C_exhaustive: bool
    baseline_action: int
    feasible_below: float


def _restricted_perturbation(spec: SeparableSpec, pi: Policy) -> tuple[np.ndarray, np.ndarray]:
    states = np.arange(spec.n_states)
    q_pi = spec.kernel_perturb[states, pi.action_of, :]
    r_eps_pi = spec.reward_perturb[states, pi.action_of]
    return q_pi, r_eps_pi


def first_order_expansion(
    spec: SeparableSpec, pi: Policy, epsilons=DEFAULT_EXPANSION_GRID
) -> ExpansionReport:
    """Expand one policy's gain to first order in epsilon and measure the remainder.

    pi1 = pi0 Q_pi (I - P0)^# and g1 = pi0 . r_perturb_pi + pi1 . r0; the
    residual at each grid epsilon comes from an exact re-solve of the
    perturbed chain, which is the oracle the expansion is judged against.
    """
    m0 = assemble(spec, 0.0)
    P0, r0 = restrict(m0, pi)
    if not chain.is_irreducible(P0):
        raise NotIrreducible(
            f"chain restricted to policy {tuple(pi.action_of)} is not irreducible at epsilon=0",
            policy=tuple(int(a) for a in pi.action_of),
        )
    pi0 = chain.invariant_distribution(P0)
    _, a_sharp = chain.fundamental_and_group_inverse(P0, pi0)
    q_pi, r_eps_pi = _restricted_perturbation(spec, pi)
    pi1 = pi0 @ q_pi @ a_sharp
    g0 = float(pi0 @ r0)
    g1 = float(pi0 @ r_eps_pi + pi1 @ r0)
    curve = []
    for eps in epsilons:
        eps = float(eps)
        P_eps, r_eps = restrict(assemble(spec, eps), pi)
        g_eps = float(chain.invariant_distribution(P_eps) @ r_eps)
        curve.append((eps, abs(g_eps - g0 - eps * g1)))
    return ExpansionReport(
        policy=pi, pi0=pi0, pi1=pi1, g0=g0, g1=g1, residual_curve=tuple(curve)
    )


def _policy_set(
    n_states: int, n_actions: int, cap: int, sample_seed: int
) -> tuple[np.ndarray, bool]:
    try:
        return _enumerate_policies(n_states, n_actions, cap), True
    except CapExceeded:
        rng = np.random.default_rng(sample_seed)
        return rng.integers(0, n_actions, size=(FALLBACK_SAMPLE_SIZE, n_states)), False


def measure_uniform_C(
    spec: SeparableSpec,
    eps: float,
    cap: int = ENUMERATION_CAP,
    sample_seed: int = 0,
) -> UniformC:
    """Max over policies of |g_eps - g0| / eps, both gains exactly evaluated.

    Enumerates every policy when the count fits the cap; otherwise falls back
    to a seeded random sample and flags the result as non-exhaustive.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    policies, exhaustive = _policy_set(spec.n_states, spec.n_actions, cap, sample_seed)
    g0 = _policy_gains_batch(assemble(spec, 0.0), policies)
    g_eps = _policy_gains_batch(assemble(spec, eps), policies)
    value = float(np.abs(g_eps - g0).max() / eps)
    return UniformC(value=value, exhaustive=exhaustive, n_policies=len(policies))


def _loglog_slope(xs, ys, floor: float) -> float | None:
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > floor]
    if len(pts) < 2:
        return None
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def sweep(
    spec: SeparableSpec,
    epsilons,
    cap: int = ENUMERATION_CAP,
    threads: int | None = None,
) -> SweepReport:
    """Measure the optimality gap of the baseline constant policy across an eps grid.

    At each grid point the optimal gain comes from policy iteration and is
    cross-checked against exhaustive enumeration whenever the policy count
    fits the cap; a discrepancy beyond 1e-8 aborts the run.  The baseline
    policy's gain comes from exact evaluation, and the measured perturbation
    constant is maximized over grid points and policies.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("epsilon grid is empty")
    if any(e < 0 for e in eps_list):
        raise ValueError("epsilons must be nonnegative")
    base = solve_baseline(spec)
    fixed = base.policy
    policies, exhaustive = _policy_set(spec.n_states, spec.n_actions, cap, sample_seed=0)
    g0_all = _policy_gains_batch(assemble(spec, 0.0), policies)

    def point(eps: float):
        m_eps = assemble(spec, eps)
        opt = policy_iteration(m_eps, initial=fixed)
        gains_all = _policy_gains_batch(m_eps, policies)
        if exhaustive and abs(float(gains_all.max()) - opt.gain) > CROSS_CHECK_TOL:
            raise CrossCheckFailure(
                f"policy iteration gain {opt.gain!r} vs enumerated max "
                f"{float(gains_all.max())!r} at eps={eps!r} differ beyond {CROSS_CHECK_TOL}"
            )
        fixed_gain = policy_evaluation(m_eps, fixed).gain
        c_at_eps = float(np.abs(gains_all - g0_all).max() / eps) if eps > 0 else 0.0
        return opt.gain, fixed_gain, c_at_eps

    if threads is None:
        threads = max(1, int(os.environ.get("SEPMDP_THREADS", "1")))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, eps_list))
    else:
        results = [point(e) for e in eps_list]

    optimal = [r[0] for r in results]
    fixed_gain = [r[1] for r in results]
    gap = [o - f for o, f in zip(optimal, fixed_gain)]
    if min(gap) < -1e-10:
        raise CrossCheckFailure(
            f"negative gap {min(gap)!r}: evaluated baseline gain exceeds the solved optimum"
        )
    uniform_c = max((r[2] for r in results), default=0.0)

    positive = [e for e in eps_list if e > 0]
    expansion_slope = None
    if positive:
        exp_report = first_order_expansion(spec, fixed, epsilons=positive)
        expansion_slope = _loglog_slope(
            [p[0] for p in exp_report.residual_curve],
            [p[1] for p in exp_report.residual_curve],
            RESIDUAL_FLOOR,
        )
    gap_slope = _loglog_slope(eps_list, gap, GAP_FLOOR)

    return SweepReport(
        epsilons=tuple(eps_list),
        optimal_gain=tuple(optimal),
        fixed_policy_gain=tuple(fixed_gain),
        gap=tuple(gap),
        gap_slope=gap_slope,
        expansion_slope=expansion_slope,
        uniform_C=uniform_c,
        uniform_C_exhaustive=exhaustive,
        baseline_action=base.best_action,
        feasible_below=epsilon_max(spec),
    )


def sample_instance(
    seed: int,
    n_states: int,
    n_actions: int,
    perturb_scale: float = 0.5,
    entry_floor: float = 0.05,
) -> SeparableSpec:
    """Deterministic random nearly separable instance.

    Kernel rows are Dirichlet draws squashed onto [entry_floor, 1], so every
    per-action chain (and every restricted chain, for feasible epsilon) is
    irreducible by construction.  Perturbation rows are differences of two
    such stochastic rows scaled by perturb_scale, hence sum to zero, and the
    feasibility bound is at least entry_floor / perturb_scale.
    """
    if n_states < 1 or n_actions < 1:
        raise ValueError("n_states and n_actions must be positive")
    if n_states * entry_floor >= 1.0:
        raise ValueError(f"entry floor {entry_floor} infeasible for {n_states} states")
    rng = np.random.default_rng(seed)
    slack = 1.0 - n_states * entry_floor

    def stochastic_rows(shape) -> np.ndarray:
        return entry_floor + slack * rng.dirichlet(np.ones(n_states), size=shape)

    r_state = rng.uniform(-1.0, 1.0, n_states)
    r_action = rng.uniform(-1.0, 1.0, n_actions)
    reward_perturb = rng.uniform(-1.0, 1.0, (n_states, n_actions))
    kernel_action = stochastic_rows(n_actions)
    kernel_perturb = perturb_scale * (
        stochastic_rows((n_states, n_actions)) - stochastic_rows((n_states, n_actions))
    )
    return SeparableSpec(
        r_state=r_state,
        r_action=r_action,
        kernel_action=kernel_action,
        epsilon=0.0,
        reward_perturb=reward_perturb,
        kernel_perturb=kernel_perturb,
    )
