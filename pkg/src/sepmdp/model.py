"""Flat MDP representation, the separable specification, and assembly between them.

Conventions: states and actions are 0-based indices; rewards are dense
(state, action) tables; kernels are dense (state, action, next-state) tables
with row-stochastic last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssemblyInfeasible

ROW_SUM_TOL = 1e-12


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.asarray(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mdp:
    """A finite MDP: `reward[s, a]` table and row-stochastic `kernel[s, a, :]`."""

    n_states: int
    n_actions: int
    reward: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "reward", _frozen_array(self.reward))
        object.__setattr__(self, "kernel", _frozen_array(self.kernel))
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("n_states and n_actions must be positive")
        if self.reward.shape != (self.n_states, self.n_actions):
            raise ValueError(f"reward table must have shape {(self.n_states, self.n_actions)}")
        if self.kernel.shape != (self.n_states, self.n_actions, self.n_states):
            raise ValueError(
                f"kernel must have shape {(self.n_states, self.n_actions, self.n_states)}"
            )


@dataclass(frozen=True)
class SeparableSpec:
    """A nearly separable model: additive state/action rewards, action-only
    transitions, plus bounded reward and kernel perturbations scaled by epsilon.

    `kernel_action[a, :]` is the transition row shared by every state under
    action a; `kernel_perturb[s, a, :]` rows sum to zero so the assembled
    kernel stays stochastic for epsilon below `epsilon_max`.
    """

    r_state: np.ndarray
    r_action: np.ndarray
    kernel_action: np.ndarray
    epsilon: float = 0.0
    reward_perturb: np.ndarray | None = None
    kernel_perturb: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "r_state", _frozen_array(self.r_state))
        object.__setattr__(self, "r_action", _frozen_array(self.r_action))
        object.__setattr__(self, "kernel_action", _frozen_array(self.kernel_action))
        n, m = self.n_states, self.n_actions
        if self.reward_perturb is None:
            object.__setattr__(self, "reward_perturb", _frozen_array(np.zeros((n, m))))
        else:
            object.__setattr__(self, "reward_perturb", _frozen_array(self.reward_perturb))
        if self.kernel_perturb is None:
            object.__setattr__(self, "kernel_perturb", _frozen_array(np.zeros((n, m, n))))
        else:
            object.__setattr__(self, "kernel_perturb", _frozen_array(self.kernel_perturb))
        if self.kernel_action.shape != (m, n):
            raise ValueError(f"kernel_action must have shape {(m, n)}")
        if self.reward_perturb.shape != (n, m):
            raise ValueError(f"reward_perturb must have shape {(n, m)}")
        if self.kernel_perturb.shape != (n, m, n):
            raise ValueError(f"kernel_perturb must have shape {(n, m, n)}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        violations = validate_spec(self)
        if violations:
            raise ValueError("; ".join(violations))

    @property
    def n_states(self) -> int:
        return self.r_state.shape[0]

    @property
    def n_actions(self) -> int:
        return self.r_action.shape[0]


@dataclass(frozen=True)
class Policy:
    """A deterministic stationary policy: one action index per state."""

    action_of: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "action_of", _frozen_array(self.action_of, dtype=np.int64))
        if self.action_of.ndim != 1:
            raise ValueError("action_of must be a 1-d vector of action indices")

    @classmethod
    def constant(cls, action: int, n_states: int) -> "Policy":
        return cls(np.full(n_states, action, dtype=np.int64))

    def validate_for(self, m: Mdp) -> None:
        if self.action_of.shape[0] != m.n_states:
            raise ValueError(f"policy length {self.action_of.shape[0]} != n_states {m.n_states}")
        if (self.action_of < 0).any() or (self.action_of >= m.n_actions).any():
            raise ValueError("policy contains an out-of-range action index")

    def is_constant(self) -> bool:
        return bool((self.action_of == self.action_of[0]).all())


def validate_mdp(m: Mdp) -> list[str]:
    """Check Mdp invariants; return a list of violation messages (empty iff valid).

    Each message names the offending (state, action) row and the failed check.
    """
    violations = []
    if not np.isfinite(m.reward).all():
        for s, a in zip(*np.nonzero(~np.isfinite(m.reward))):
            violations.append(f"reward[{s},{a}] is not finite")
    row_sums = m.kernel.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOL)):
        violations.append(f"kernel row ({s},{a}): row sum {row_sums[s, a]!r} != 1")
    bad_entry = (m.kernel < 0) | (m.kernel > 1)
    for s, a, sp in zip(*np.nonzero(bad_entry)):
        violations.append(
            f"kernel row ({s},{a}): entry {m.kernel[s, a, sp]!r} at next-state {sp} outside [0, 1]"
        )
    return violations


def validate_spec(spec: SeparableSpec) -> list[str]:
    """Check SeparableSpec invariants; return a list of violation messages."""
    violations = []
    for arr, name in [
        (spec.r_state, "r_state"),
        (spec.r_action, "r_action"),
        (spec.reward_perturb, "reward_perturb"),
        (spec.kernel_perturb, "kernel_perturb"),
    ]:
        if not np.isfinite(arr).all():
            violations.append(f"{name} contains non-finite entries")
    row_sums = spec.kernel_action.sum(axis=1)
    for (a,) in zip(*np.nonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOL)):
        violations.append(f"kernel_action[{a}]: row sum {row_sums[a]!r} != 1")
    for a, sp in zip(*np.nonzero(spec.kernel_action < 0)):
        violations.append(f"kernel_action[{a}]: negative entry at next-state {sp}")
    q_sums = spec.kernel_perturb.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(q_sums) > ROW_SUM_TOL)):
        violations.append(f"kernel_perturb row ({s},{a}): row sum {q_sums[s, a]!r} != 0")
    return violations


def epsilon_max(spec: SeparableSpec) -> float:
    """Largest epsilon keeping every assembled kernel entry nonnegative.

    The binding constraints are entries with negative perturbation:
    min over {Q < 0} of P_A / (-Q).  Returns +inf when Q has no negative
    entries (identically zero, since its rows sum to zero).
    """
    q = spec.kernel_perturb
    base = np.broadcast_to(spec.kernel_action[np.newaxis, :, :], q.shape)
    neg = q < 0
    if not neg.any():
        return math.inf
    return float(np.min(base[neg] / -q[neg]))


def assemble(spec: SeparableSpec, epsilon: float | None = None) -> Mdp:
    """Build the flat Mdp at the given epsilon (default: the one stored on the model).

    reward[s, a] = r_state[s] + r_action[a] + eps * reward_perturb[s, a]
    kernel[s, a] = kernel_action[a] + eps * kernel_perturb[s, a]

    Raises AssemblyInfeasible if any assembled kernel entry is negative
    beyond tolerance.
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    n, m = spec.n_states, spec.n_actions
    reward = spec.r_state[:, np.newaxis] + spec.r_action[np.newaxis, :] + eps * spec.reward_perturb
    kernel = spec.kernel_action[np.newaxis, :, :] + eps * spec.kernel_perturb
    worst = kernel.min()
    if worst < -ROW_SUM_TOL:
        s, a, sp = np.unravel_index(np.argmin(kernel), kernel.shape)
        raise AssemblyInfeasible(
            f"kernel entry ({s},{a},{sp}) = {worst!r} < 0 at epsilon={eps!r} "
            f"(epsilon_max = {epsilon_max(spec)!r})"
        )
    kernel = np.clip(kernel, 0.0, None)
    return Mdp(n_states=n, n_actions=m, reward=reward, kernel=kernel)


def restrict(m: Mdp, pi: Policy) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and reward vector of the chain induced by a policy.

    Row s of the matrix is kernel[s, pi(s)]; entry s of the vector is
    reward[s, pi(s)].
    """
    pi.validate_for(m)
    states = np.arange(m.n_states)
    return m.kernel[states, pi.action_of, :], m.reward[states, pi.action_of]
