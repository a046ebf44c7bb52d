"""Hedge (multiplicative weights) over a d-dimensional simplex."""

from __future__ import annotations

import math

import numpy as np

_RENORM_AT = 1e100


class Hedge:
    """Maintains ``y_t = v_t / sum(v_t)`` and applies ``v <- v * (1+eps)**payoff``.

    Also accumulates the payoff vectors and the realized ``sum_t y_t . payoff_t``
    so the regret guarantee can be checked after a run.
    """

    def __init__(self, d: int, eps: float):
        if d < 1:
            raise ValueError("d must be >= 1")
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        self.eps = float(eps)
        self.v = np.ones(d)
        self.step_count = 0
        self.cumulative_payoffs = np.zeros(d)
        self.earned = 0.0

    @property
    def d(self) -> int:
        return self.v.shape[0]

    @property
    def y(self) -> np.ndarray:
        return self.v / self.v.sum()

    def step(self, payoff, check: bool = True) -> np.ndarray:
        """Consume one payoff vector; return the ``y`` that was in force for it.

        ``check=False`` skips input validation for callers that guarantee it.
        """
        pi = np.asarray(payoff, dtype=float)
        if check:
            if pi.shape != self.v.shape:
                raise ValueError(f"payoff must have shape {self.v.shape}")
            if np.any(pi < 0) or np.any(pi > 1):
                raise ValueError("payoff components must lie in [0, 1]")
        y = self.y
        self.earned += float(y @ pi)
        self.cumulative_payoffs += pi
        self.v = self.v * np.power(1.0 + self.eps, pi)
        top = self.v.max()
        if top > _RENORM_AT:
            self.v = self.v / top
        self.step_count += 1
        return y

    def guarantee_slack(self) -> float:
        """``sum_t y_t.pi_t - [(1-eps) max_i sum_t pi_ti - ln(d)/eps]``; nonnegative by theory."""
        best = float(self.cumulative_payoffs.max())
        return self.earned - ((1 - self.eps) * best - math.log(self.d) / self.eps)


def hedge_init(d: int, eps: float) -> Hedge:
    return Hedge(d, eps)


def hedge_step(state: Hedge, payoff):
    """Functional form: returns ``(y_used, state)``; ``state`` is updated in place."""
    y = state.step(payoff)
    return y, state
