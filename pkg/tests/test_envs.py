import math

import numpy as np
import pytest

from bwk.core import make_rng, run_episode
from bwk.envs import (
    DemandCurve,
    LowerBoundParams,
    env_from_config,
    make_lb_env,
    make_pricing_env,
    make_procurement_env,
    make_roundrobin_env,
    make_separation_env,
    opt_inf,
    two_point_pricing,
    two_point_procurement,
)
from bwk.lp import best_fixed_arm_value, lp_value, lpopt
from bwk.oracles import first_passage_times
from bwk.policies import FixedDistribution

CURVE = DemandCurve(np.array([0.2, 0.5, 0.9]), np.array([0.3, 0.4, 0.3]))


def means(env):
    return env.latent.expected_reward, env.latent.expected_consumption


class TestDemandCurve:
    def test_sorted(self):
        c = DemandCurve(np.array([0.9, 0.1]), np.array([0.25, 0.75]))
        np.testing.assert_array_equal(c.values, [0.1, 0.9])
        np.testing.assert_array_equal(c.probs, [0.75, 0.25])

    def test_rejects_bad_probs(self):
        with pytest.raises(ValueError):
            DemandCurve(np.array([0.5]), np.array([0.9]))

    def test_tail_probabilities(self):
        assert CURVE.prob_at_least(0.5) == pytest.approx(0.7)
        assert CURVE.prob_at_most(0.5) == pytest.approx(0.7)


class TestPricing:
    def test_price_zero_always_sells(self):
        r, c = means(make_pricing_env(CURVE, [0.0], 10, 100))
        assert r[0] == 0.0 and c[0, 0] == pytest.approx(1.0)

    def test_price_above_values(self):
        r, c = means(make_pricing_env(CURVE, [0.95], 10, 100))
        assert r[0] == 0.0 and c[0, 0] == 0.0

    def test_ratio_identity(self):
        prices = np.linspace(0, 1, 21)
        r, c = means(make_pricing_env(CURVE, prices, 10, 100))
        for k, p in enumerate(prices):
            if c[k, 0] > 0:
                assert r[k] / c[k, 0] == pytest.approx(p)

    def test_sale_probability_nonincreasing(self):
        prices = np.linspace(0, 1, 51)
        _, c = means(make_pricing_env(CURVE, prices, 10, 100, null_arm=False))
        assert np.all(np.diff(c[:, 0]) <= 1e-12)

    def test_two_point_example(self):
        demand, prices = two_point_pricing(100, 0.1, 1000)
        env = make_pricing_env(demand, prices, 100, 1000)
        q = 100 ** 0.6 / 1000
        assert q == pytest.approx(0.0158, abs=1e-4)
        assert env.latent.expected_reward[1] == pytest.approx(1.0 * q)

    def test_empty_prices(self):
        with pytest.raises(ValueError):
            make_pricing_env(CURVE, [], 10, 100)

    def test_time_column_and_null(self):
        env = make_pricing_env(CURVE, [0.3, 0.6], 10, 100)
        inst = env.instance
        assert inst.time_resource == 1 and inst.null_arm == 2
        np.testing.assert_allclose(env.latent.expected_consumption[:, 1], 0.1)


class TestProcurement:
    def test_price_one_always_buys(self):
        r, c = means(make_procurement_env(CURVE, [1.0], 10, 100))
        assert r[0] == 1.0 and c[0, 0] == 1.0

    def test_price_zero_without_free_sellers(self):
        r, c = means(make_procurement_env(CURVE, [0.0], 10, 100))
        assert r[0] == 0.0 and c[0, 0] == 0.0

    def test_ratio_identity(self):
        prices = np.linspace(0.05, 1, 20)
        r, c = means(make_procurement_env(CURVE, prices, 10, 100))
        for k, p in enumerate(prices):
            if c[k, 0] > 0:
                assert r[k] / c[k, 0] == pytest.approx(1 / p)

    def test_tie_counts_as_sale(self):
        r, _ = means(make_procurement_env(CURVE, [0.5], 10, 100))
        assert r[0] == pytest.approx(0.7)

    def test_two_point_example(self):
        demand, prices = two_point_procurement(50, 500)
        env = make_procurement_env(demand, prices, 50, 500)
        assert env.latent.expected_reward[0] == pytest.approx(0.1)
        b = env.instance.budgets
        best = best_fixed_arm_value(env.latent, b)
        assert best == pytest.approx(50)
        assert lpopt(env.latent, b) >= 1.7 * best


class TestLowerBoundFamily:
    def test_symmetric_when_gap_zero(self):
        env = make_lb_env(LowerBoundParams(3, 10, 0.5, 0.0))
        c = env.latent.expected_consumption
        assert np.all(c == c[0])

    def test_deterministic_case(self):
        env = make_lb_env(LowerBoundParams(2, 10, 1.0, 0.0))
        tr = run_episode(FixedDistribution([0.5, 0.5]), env, make_rng(0))
        assert tr.stop_time == 11 and tr.total_reward == 10

    def test_best_arm_mean(self):
        prm = LowerBoundParams(2, 10, 0.5, 0.1)
        env = make_lb_env(prm)
        rew = np.array([run_episode(FixedDistribution([1.0, 0.0]), env, make_rng(3, k)).total_reward
                        for k in range(5000)])
        se = rew.std(ddof=1) / math.sqrt(len(rew))
        assert abs(rew.mean() - 26.5) <= 3 * se

    def test_opt_inf(self):
        assert opt_inf(LowerBoundParams(2, 10, 0.5, 0.1)) == pytest.approx(26.5)
        assert opt_inf(LowerBoundParams(2, 10, 1.0, 0.0)) == pytest.approx(10.0)

    def test_stopping_time(self):
        """Rounds until consumption first exceeds B average (floor(B)+1)/q."""
        rng = np.random.default_rng(42)
        for q, B in ((0.4, 10), (0.5, 10), (0.25, 7.5)):
            tau = first_passage_times(q, math.floor(B) + 1, 200_000, rng)
            expect = (math.floor(B) + 1) / q
            assert abs(tau.mean() - expect) <= 3 * tau.std(ddof=1) / math.sqrt(len(tau))
            assert abs(tau.mean() - expect) / expect < 0.01

    def test_simulated_stopping_time(self):
        env = make_lb_env(LowerBoundParams(2, 10, 0.5, 0.1))
        tau = np.array([run_episode(FixedDistribution([0.0, 1.0]), env, make_rng(8, k)).stop_time
                        for k in range(3000)])
        assert abs(tau.mean() - 22.0) <= 3 * tau.std(ddof=1) / math.sqrt(len(tau))

    def test_bad_params(self):
        with pytest.raises(ValueError):
            LowerBoundParams(2, 10, 0.5, 0.6)
        with pytest.raises(ValueError):
            LowerBoundParams(2, 10, 0.5, 0.1, best_arm=2)


class TestSeparation:
    def test_lpopt_and_mixture(self):
        env = make_separation_env("i", 4, 10, 40)
        b = env.instance.budgets
        assert lpopt(env.latent, b) == pytest.approx(30)
        mix = np.array([1, 0, 2, 0, 0]) / 3
        assert lp_value(mix, env.latent, b) == pytest.approx(30)

    def test_cases_symmetric(self):
        a = make_separation_env("i", 4, 10, 40)
        b = make_separation_env("ii", 4, 10, 40)
        assert lpopt(a.latent, a.instance.budgets) == pytest.approx(lpopt(b.latent, b.instance.budgets))
        np.testing.assert_array_equal(a.latent.expected_consumption[:, [1, 0, 2]][[2, 3, 0, 1, 4]],
                                      b.latent.expected_consumption)

    def test_best_fixed_arm(self):
        env = make_separation_env("i", 4, 10, 40)
        best = best_fixed_arm_value(env.latent, env.instance.budgets)
        assert best == pytest.approx(20)
        assert best < lpopt(env.latent, env.instance.budgets)

    def test_odd_m(self):
        with pytest.raises(ValueError):
            make_separation_env("i", 3, 10, 40)


class TestRoundRobin:
    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_lpopt_and_best_arm(self, d):
        B = 5
        env = make_roundrobin_env(d, B, d * B + d)
        b = env.instance.budgets
        assert lpopt(env.latent, b) == pytest.approx(d * B)
        assert best_fixed_arm_value(env.latent, b) == pytest.approx(B)

    def test_horizon_too_short(self):
        with pytest.raises(ValueError):
            make_roundrobin_env(3, 5, 10)


class TestConfig:
    def test_scaling(self):
        env = env_from_config({"env": "roundrobin", "d": 2, "B": 10, "T": 100}, alpha=4)
        assert env.instance.horizon == 400
        np.testing.assert_allclose(env.instance.budgets, 40)

    def test_pricing(self):
        env = env_from_config({"env": "pricing", "demand": [[0.5, 1.0]], "prices": [0.25, 0.5], "B": 5, "T": 50})
        assert env.instance.arms == 3

    def test_unknown(self):
        with pytest.raises(ValueError):
            env_from_config({"env": "nope"})

    def test_environment_means_consistent(self):
        rng = make_rng(1)
        env = make_pricing_env(CURVE, [0.3, 0.6], 10, 100)
        draws = np.array([env.supports[1].rewards[rng.choice(2, p=env.supports[1].weights)]
                          for _ in range(100_000)])
        mean = env.latent.expected_reward[1]
        assert abs(draws.mean() - mean) <= 5 * math.sqrt(mean * (0.6 - mean) / len(draws))
