import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bwk.hedge import Hedge, hedge_init, hedge_step


class TestInit:
    def test_uniform(self):
        np.testing.assert_allclose(hedge_init(4, 0.1).y, [0.25] * 4)

    def test_singleton(self):
        h = hedge_init(1, 0.3)
        for _ in range(10):
            y, h = hedge_step(h, [0.7])
            assert y[0] == 1.0

    @pytest.mark.parametrize("eps", [0.0, 1.0, 1.5, -0.2])
    def test_bad_eps(self, eps):
        with pytest.raises(ValueError):
            hedge_init(2, eps)


class TestStep:
    def test_example(self):
        h = hedge_init(2, 0.5)
        y, h = hedge_step(h, [1.0, 0.0])
        np.testing.assert_allclose(y, [0.5, 0.5])
        np.testing.assert_allclose(h.v, [1.5, 1.0])
        np.testing.assert_allclose(h.y, [0.6, 0.4])

    def test_zero_payoff(self):
        h = hedge_init(3, 0.2)
        hedge_step(h, [0.2, 0.9, 0.0])
        v = h.v.copy()
        hedge_step(h, np.zeros(3))
        np.testing.assert_array_equal(h.v, v)

    def test_all_ones_keeps_y(self):
        h = hedge_init(3, 0.2)
        hedge_step(h, [0.2, 0.9, 0.0])
        y = h.y
        hedge_step(h, np.ones(3))
        np.testing.assert_allclose(h.y, y, atol=1e-15)

    def test_rejects_out_of_range(self):
        h = hedge_init(2, 0.2)
        with pytest.raises(ValueError):
            h.step([1.2, 0.0])
        with pytest.raises(ValueError):
            h.step([0.0])

    def test_renormalization_invariance(self):
        eps = 0.9
        a = Hedge(2, eps)
        for _ in range(2000):
            a.step([1.0, 0.9])
        assert a.v.max() <= 1e100 * (1 + eps)
        # y_0 / y_1 = (1+eps)^(0.1 * 2000) regardless of rescaling
        expect = 1.0 / (1.0 + (1 + eps) ** (-0.1 * 2000))
        assert a.y[0] == pytest.approx(expect, abs=1e-12)
        assert np.all(np.isfinite(a.v))


class TestGuarantee:
    """Hedge earns at least (1-eps) times the best fixed coordinate minus ln(d)/eps."""

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 16), st.integers(1, 2000), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
    def test_random_sequences(self, d, n, eps, seed):
        rng = np.random.default_rng(seed)
        h = Hedge(d, eps)
        for pi in rng.random((n, d)):
            h.step(pi)
        assert h.guarantee_slack() >= -1e-9

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (50, 3), elements=st.floats(0, 1)), st.floats(0.05, 0.95))
    def test_adversarial_shapes(self, seq, eps):
        h = Hedge(3, eps)
        for pi in seq:
            h.step(pi)
        best = seq.sum(axis=0).max()
        assert h.earned >= (1 - eps) * best - math.log(3) / eps - 1e-9
