"""Confidence radius and the UCB/LCB intervals built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadiusParams:
    c_rad: float

    def __post_init__(self):
        if not self.c_rad > 0:
            raise ValueError("c_rad must be positive")

    @classmethod
    def default(cls, resources: int, horizon: int, arms: int) -> "RadiusParams":
        """``ceil(ln(d*T*m) + 10 ln 2)``."""
        return cls(float(math.ceil(math.log(resources * horizon * arms) + 10 * math.log(2))))


def rad(params: RadiusParams, nu, n):
    """``sqrt(c_rad * nu / n) + c_rad / n``; vectorized over ``nu`` and ``n``."""
    c = params.c_rad
    if np.ndim(nu) == 0 and np.ndim(n) == 0:
        if n <= 0:
            raise ValueError("N must be positive")
        if nu < 0:
            raise ValueError("nu must be nonnegative")
        return math.sqrt(c * nu / n) + c / n
    nu = np.asarray(nu, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0):
        raise ValueError("N must be positive")
    if np.any(nu < 0):
        raise ValueError("nu must be nonnegative")
    return np.sqrt(c * nu / n) + c / n


def interval(params: RadiusParams, nu_hat, n):
    """Return ``(lcb, ucb)``: ``nu_hat -/+ rad(nu_hat, n)`` clipped to [0, 1]."""
    w = rad(params, nu_hat, n)
    if np.ndim(w) == 0:
        return max(0.0, nu_hat - w), min(1.0, nu_hat + w)
    nu_hat = np.asarray(nu_hat, dtype=float)
    return np.maximum(0.0, nu_hat - w), np.minimum(1.0, nu_hat + w)


def is_strong_estimate(params: RadiusParams, nu, nu_hat, n) -> bool:
    return abs(nu - nu_hat) <= rad(params, nu_hat, n)


class ConfidenceState:
    """Per-arm pull counts and running means of reward and consumption."""

    def __init__(self, arms: int, resources: int):
        self.counts = np.zeros(arms, dtype=np.int64)
        self.reward_sum = np.zeros(arms)
        self.consumption_sum = np.zeros((arms, resources))

    @property
    def arms(self) -> int:
        return self.counts.shape[0]

    def update(self, arm: int, reward: float, consumption) -> None:
        self.counts[arm] += 1
        self.reward_sum[arm] += reward
        self.consumption_sum[arm] += consumption

    def mean_reward(self) -> np.ndarray:
        n = np.maximum(self.counts, 1)
        return np.clip(self.reward_sum / n, 0.0, 1.0)

    def mean_consumption(self) -> np.ndarray:
        n = np.maximum(self.counts, 1)[:, None]
        return np.clip(self.consumption_sum / n, 0.0, 1.0)

    def reward_interval(self, params: RadiusParams):
        """(lcb, ucb) per arm; arms never pulled get the trivial interval [0, 1]."""
        return self._interval(params, self.mean_reward(), self.counts)

    def consumption_interval(self, params: RadiusParams):
        return self._interval(params, self.mean_consumption(), self.counts[:, None])

    @staticmethod
    def _interval(params, means, counts):
        seen = np.broadcast_to(counts > 0, means.shape)
        n = np.maximum(counts, 1)
        lo, hi = interval(params, means, np.broadcast_to(n, means.shape))
        return np.where(seen, lo, 0.0), np.where(seen, hi, 1.0)
