"""Simulation-based gain estimation: an oracle with no linear algebra in it.

One seeded trajectory, a burn-in discard, and batch means for the confidence
half-width.  The walk itself is compiled with numba so million-step horizons
stay in the tens of milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import stats

from . import chain
from .errors import NotIrreducible
from .model import Mdp, Policy, restrict

BURN_IN_FRACTION = 0.1
DEFAULT_BATCHES = 20


@dataclass(frozen=True)
class SimEstimate:
    """Time-averaged reward with a 95% batch-means confidence half-width."""

    mean: float
    half_width: float
    horizon: int
    batches: int
    seed: int


@njit(cache=True)
def _walk(cum_rows, u, start):  # pragma: no cover - compiled
    n_steps = u.shape[0]
    n = cum_rows.shape[0]
    path = np.empty(n_steps, dtype=np.int64)
    s = start
    for t in range(n_steps):
        path[t] = s
        x = u[t]
        nxt = 0
        while nxt < n - 1 and cum_rows[s, nxt] < x:
            nxt += 1
        s = nxt
    return path


def simulate_gain(
    m: Mdp,
    pi: Policy,
    horizon: int,
    batches: int = DEFAULT_BATCHES,
    seed: int = 0,
) -> SimEstimate:
    """Estimate the long-run average reward of a policy from one trajectory.

    Starts at state 0, discards the first 10% of `horizon` as burn-in, and
    averages the remainder (trimmed so it splits into `batches` equal
    batches; the recorded horizon is that trimmed length).  The half-width is
    the 95% Student-t interval of the batch means.  Deterministic per seed.
    """
    if batches < 2:
        raise ValueError("batches must be at least 2")
    if horizon < 100 * batches:
        raise ValueError(f"horizon {horizon} < 100 * batches = {100 * batches}")
    P, r = restrict(m, pi)
    if not chain.is_irreducible(P):
        raise NotIrreducible(
            f"chain restricted to policy {tuple(pi.action_of)} is not irreducible",
            policy=tuple(int(a) for a in pi.action_of),
        )
    burn = horizon // 10
    batch_len = (horizon - burn) // batches
    kept = batches * batch_len
    rng = np.random.default_rng(seed)
    u = rng.random(burn + kept)
    cum_rows = np.cumsum(P, axis=1)
    path = _walk(cum_rows, u, np.int64(0))
    rewards = r[path[burn:]]
    batch_means = rewards.reshape(batches, batch_len).mean(axis=1)
    mean = float(batch_means.mean())
    spread = float(batch_means.std(ddof=1))
    quantile = float(stats.t.ppf(0.975, batches - 1))
    half_width = quantile * spread / np.sqrt(batches)
    return SimEstimate(
        mean=mean, half_width=float(half_width), horizon=kept, batches=batches, seed=seed
    )
