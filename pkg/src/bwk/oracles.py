"""Independent reference computations used to check the main code paths.

Nothing here is used by the policies; these are slow, simple oracles.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import LatentStructure


def brute_force_lp(latent: LatentStructure, budgets):
    """Optimum of ``max r.x s.t. A x <= b, x >= 0`` by enumerating every basis.

    Walks over all ``d``-subsets of the columns of ``[A | I]``, keeps the
    feasible basic solutions and returns ``(value, x)`` of the best one.
    """
    A = latent.expected_consumption.T
    d, m = A.shape
    b = np.asarray(budgets, dtype=float).reshape(-1)
    M = np.hstack([A, np.eye(d)])
    best, best_x = 0.0, np.zeros(m)
    for cols in itertools.combinations(range(m + d), d):
        sub = M[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        z = np.linalg.solve(sub, b)
        if np.any(z < -1e-10):
            continue
        x = np.zeros(m + d)
        x[list(cols)] = z
        val = float(latent.expected_reward @ x[:m])
        if val > best + 1e-12:
            best, best_x = val, x[:m]
    return best, best_x


def dual_value(eta, budgets) -> float:
    return float(np.asarray(budgets, dtype=float) @ np.asarray(eta, dtype=float))


def dual_violation(latent: LatentStructure, eta) -> float:
    """Largest violation of ``C eta >= r`` (zero when ``eta`` is dual feasible)."""
    slack = latent.expected_consumption @ np.asarray(eta) - latent.expected_reward
    return float(max(0.0, -slack.min()))


def first_passage_times(q: float, level: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Rounds until a Bernoulli(q) running sum first reaches ``level`` (negative binomial)."""
    failures = rng.negative_binomial(level, q, size=trials)
    return failures + level


def harmonic_tables(n_max: int):
    """Cumulative sums of ``1/l`` and ``1/sqrt(l)`` for ``l = 1..n_max`` (index 0 is empty)."""
    ell = np.arange(1, n_max + 1, dtype=float)
    h1 = np.concatenate([[0.0], np.cumsum(1.0 / ell)])
    hh = np.concatenate([[0.0], np.cumsum(1.0 / np.sqrt(ell))])
    return h1, hh


def mean_radius(c_rad: float, nu, n, tables) -> np.ndarray:
    """``(1/N) sum_{l=1..N} rad(nu, l)`` using precomputed harmonic sums."""
    h1, hh = tables
    n = np.asarray(n, dtype=int)
    return (np.sqrt(c_rad * np.asarray(nu)) * hh[n] + c_rad * h1[n]) / n


def grid_best_mixture(latent: LatentStructure, budgets, steps: int = 40) -> float:
    """Best LP-value over mixtures on a simplex grid (two- and three-arm supports)."""
    from .lp import lp_value

    m = latent.arms
    best = 0.0
    for k in range(1, min(3, m) + 1):
        for arms in itertools.combinations(range(m), k):
            for parts in itertools.product(range(steps + 1), repeat=k - 1):
                if sum(parts) > steps:
                    continue
                w = np.zeros(m)
                w[list(arms[:-1])] = np.array(parts) / steps
                w[arms[-1]] = 1 - sum(parts) / steps
                if np.any(latent.expected_consumption.T @ w > 0) or latent.expected_reward @ w == 0:
                    best = max(best, lp_value(w, latent, budgets))
    return best

