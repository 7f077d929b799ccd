"""Exact linear-algebra analysis of a single finite Markov chain.

Everything here is dense and direct: invariant distribution by one pivoted
solve, the fundamental matrix by one inversion, the Poisson equation through
the group inverse.  Valid for periodic irreducible chains as well, since no
limits are taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityViolation, NotIrreducible, SingularSystem

EDGE_TOL = 1e-14
INVARIANT_NEG_TOL = 1e-12
COMPAT_TOL = 1e-9


@dataclass(frozen=True)
class ChainSolution:
    """Invariant distribution, gain, bias, and matrix apparatus for one chain.

    bias solves (I - P) h = r - gain*1 and is normalized so invariant . bias = 0;
    group_inverse is the group inverse of I - P; fundamental is
    (I - P + 1 invariant^T)^{-1}.
    """

    invariant: np.ndarray
    gain: float
    bias: np.ndarray
    group_inverse: np.ndarray
    fundamental: np.ndarray


def is_irreducible(P: np.ndarray) -> bool:
    """True iff the support graph of P (entries > 1e-14) is strongly connected."""
    P = np.asarray(P)
    adj = P > EDGE_TOL
    return _reaches_all(adj) and _reaches_all(adj.T)


def _reaches_all(adj: np.ndarray) -> bool:
    # breadth-first reachability from state 0 over a boolean adjacency matrix
    n = adj.shape[0]
    reached = np.zeros(n, dtype=bool)
    reached[0] = True
    frontier = reached.copy()
    while frontier.any():
        nxt = adj[frontier].any(axis=0) & ~reached
        reached |= nxt
        frontier = nxt
    return bool(reached.all())


def invariant_distribution(P: np.ndarray) -> np.ndarray:
    """The unique probability vector pi with pi^T P = pi^T, for irreducible P.

    Solves (I - P^T) x = 0 with the last equation replaced by the
    normalization sum(x) = 1.  Tiny negative entries (within 1e-12) are
    clamped to zero and the vector renormalized.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.eye(n) - P.T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"invariant solve failed: {exc}") from exc
    if pi.min() < -INVARIANT_NEG_TOL:
        raise SingularSystem(
            f"invariant solve produced entry {pi.min()!r} < -{INVARIANT_NEG_TOL}; "
            "the chain is likely not irreducible"
        )
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def fundamental_and_group_inverse(
    P: np.ndarray, invariant: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Fundamental matrix Z = (I - P + 1 pi^T)^{-1} and group inverse Z - 1 pi^T of I - P."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    one_pi = np.outer(np.ones(n), invariant)
    try:
        Z = np.linalg.inv(np.eye(n) - P + one_pi)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"fundamental-matrix inversion failed: {exc}") from exc
    return Z, Z - one_pi


def gain(P: np.ndarray, r: np.ndarray, invariant: np.ndarray) -> float:
    """Steady-state mean reward invariant . r."""
    return float(np.dot(invariant, r))


def solve_poisson(
    P: np.ndarray,
    r: np.ndarray,
    invariant: np.ndarray,
    g: float,
    group_inverse: np.ndarray | None = None,
) -> np.ndarray:
    """Solve (I - P) h = r - g*1 with the normalization invariant . h = 0.

    Requires the compatibility condition invariant . (r - g*1) = 0, i.e. g is
    the true gain of (P, r); otherwise the singular system has no solution and
    CompatibilityViolation is raised.  The group-inverse solution
    h = (I - P)^# (r - g*1) satisfies the normalization automatically.
    """
    rhs = np.asarray(r, dtype=float) - g
    defect = abs(float(np.dot(invariant, rhs)))
    if defect > COMPAT_TOL:
        raise CompatibilityViolation(
            f"invariant . (r - g*1) = {defect!r} > {COMPAT_TOL}; g is not the gain of this chain"
        )
    if group_inverse is None:
        _, group_inverse = fundamental_and_group_inverse(P, invariant)
    return group_inverse @ rhs


def analyze_chain(P: np.ndarray, r: np.ndarray) -> ChainSolution:
    """Full exact analysis of one irreducible chain with reward vector r."""
    if not is_irreducible(P):
        raise NotIrreducible("transition matrix is not irreducible")
    pi = invariant_distribution(P)
    g = gain(P, r, pi)
    Z, A_sharp = fundamental_and_group_inverse(P, pi)
    h = solve_poisson(P, r, pi, g, group_inverse=A_sharp)
    return ChainSolution(invariant=pi, gain=g, bias=h, group_inverse=A_sharp, fundamental=Z)
