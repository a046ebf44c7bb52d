import json

import numpy as np
import pytest

from bwk.core import (
    ArmSupport,
    Environment,
    Instance,
    InvalidArmError,
    LatentStructure,
    Outcome,
    add_time_resource,
    append_null_arm,
    make_rng,
    normalize_budgets,
    run_episode,
    sample_outcome,
)
from bwk.envs import make_roundrobin_env
from bwk.lp import lpopt
from bwk.policies import FixedDistribution, Policy


class Cycle(Policy):
    """Plays arms 0..k-1 in turn."""

    def __init__(self, k):
        self.k = k

    def reset(self, info, rng):
        super().reset(info, rng)
        self.t = 0

    def choose(self):
        a = self.t % self.k
        self.t += 1
        return a


class Constant(Policy):
    def __init__(self, arm):
        self.arm = arm

    def choose(self):
        return self.arm


class TestOutcomeAndLatent:
    def test_outcome_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Outcome(1.5, (0.0,))
        with pytest.raises(ValueError):
            Outcome(0.5, (0.2, -0.1))

    def test_latent_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            LatentStructure(np.array([0.5]), np.array([[1.2]]))

    def test_instance_rejects_budget_above_horizon(self):
        lat = LatentStructure(np.array([1.0]), np.array([[1.0]]))
        with pytest.raises(ValueError):
            Instance(lat, [20.0], 10)

    def test_null_arm_must_be_idle(self):
        lat = LatentStructure(np.array([0.0, 0.0]), np.array([[0.5, 1.0], [0.1, 1.0]]))
        with pytest.raises(ValueError):
            Instance(lat, [10.0, 10.0], 10, time_resource=1, null_arm=1)


class TestTimeResource:
    def test_rate_one(self):
        lat = LatentStructure(np.array([0.3, 0.7]), np.array([[0.2], [0.4]]))
        inst = add_time_resource(lat, [5.0], 10, time_budget=10)
        assert inst.resources == 2
        np.testing.assert_array_equal(inst.latent.expected_consumption[:, 1], [1.0, 1.0])

    def test_rate_quarter(self):
        lat = LatentStructure(np.array([0.3]), np.array([[0.2]]))
        inst = add_time_resource(lat, [5.0], 20, time_budget=5)
        np.testing.assert_array_equal(inst.latent.expected_consumption[:, 1], [0.25])

    def test_zero_horizon(self):
        lat = LatentStructure(np.array([0.3]), np.array([[0.2]]))
        with pytest.raises(ValueError):
            add_time_resource(lat, [5.0], 0)

    def test_budget_above_horizon_after_insertion(self):
        lat = LatentStructure(np.array([0.3]), np.array([[0.2]]))
        with pytest.raises(ValueError):
            add_time_resource(lat, [50.0], 10)

    def test_environment_column_is_deterministic(self):
        env = Environment.bernoulli(LatentStructure(np.array([0.5]), np.array([[0.5]])), [5.0], 20)
        env2 = add_time_resource(env, time_budget=5)
        for s in env2.supports:
            np.testing.assert_array_equal(s.consumption[:, 1], 0.25)


class TestNormalizeBudgets:
    def test_two_resources(self):
        lat = LatentStructure(np.array([0.5, 0.5]), np.array([[0.1, 0.8], [0.3, 0.8]]))
        inst = normalize_budgets(Instance(lat, [10.0, 40.0], 100))
        np.testing.assert_array_equal(inst.budgets, [10.0, 10.0])
        np.testing.assert_allclose(inst.latent.expected_consumption[:, 1], [0.2, 0.2])

    def test_identity_on_uniform(self):
        lat = LatentStructure(np.array([0.5]), np.array([[0.1, 0.8]]))
        inst = Instance(lat, [10.0, 10.0], 100)
        assert normalize_budgets(inst) is inst

    def test_three_resources(self):
        lat = LatentStructure(np.array([0.5]), np.array([[0.1, 0.2, 0.5]]))
        inst = normalize_budgets(Instance(lat, [3.0, 6.0, 12.0], 100))
        assert inst.latent.expected_consumption[0, 2] == pytest.approx(0.125)

    def test_preserves_lpopt(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m, d = rng.integers(1, 5, 2)
            lat = LatentStructure(rng.random(m), rng.uniform(0.05, 1, (m, d)))
            b = rng.uniform(1, 50, d)
            inst = Instance(lat, b, 100)
            norm = normalize_budgets(inst)
            assert lpopt(norm.latent, norm.budgets) == pytest.approx(lpopt(lat, b), abs=1e-9)

    def test_environment_supports_rescaled(self):
        sup = [ArmSupport.from_points([(0.5, 1.0, [1.0, 0.8]), (0.5, 0.0, [0.0, 0.0])])]
        env = normalize_budgets(Environment(sup, [10.0, 40.0], 100))
        np.testing.assert_allclose(env.supports[0].consumption[:, 1], [0.2, 0.0])
        np.testing.assert_allclose(env.latent.expected_consumption[0], [0.5, 0.1])


class TestNullArm:
    def _inst(self):
        lat = LatentStructure(np.full(3, 0.5), np.full((3, 1), 0.5))
        return add_time_resource(lat, [5.0], 50, time_budget=5)

    def test_appended_row(self):
        inst = append_null_arm(self._inst())
        assert inst.arms == 4 and inst.null_arm == 3
        assert inst.latent.expected_reward[3] == 0
        np.testing.assert_allclose(inst.latent.expected_consumption[3], [0.0, 0.1])

    def test_idempotent(self):
        inst = append_null_arm(self._inst())
        assert append_null_arm(inst) is inst

    def test_requires_time_resource(self):
        lat = LatentStructure(np.full(2, 0.5), np.full((2, 1), 0.5))
        with pytest.raises(ValueError):
            append_null_arm(Instance(lat, [5.0], 50))


class TestSampling:
    def test_point_mass(self):
        env = Environment([ArmSupport.point(1.0, [0.5])], [5.0], 10)
        rng = make_rng(0)
        for _ in range(20):
            o = sample_outcome(env, 0, rng)
            assert o.reward == 1.0 and o.consumption == (0.5,)

    def test_bernoulli_mean(self):
        env = Environment([ArmSupport.from_points([(0.5, 1.0, [1.0]), (0.5, 0.0, [0.0])])], [5.0], 10)
        rng = make_rng(1)
        n = 10**5
        r = np.array([sample_outcome(env, 0, rng).reward for _ in range(n)])
        assert abs(r.mean() - 0.5) <= 3 * 0.5 / np.sqrt(n)

    def test_same_seed_same_sequence(self):
        env = Environment.bernoulli(LatentStructure(np.array([0.3, 0.6]), np.array([[0.4], [0.2]])), [5.0], 10)
        a = [sample_outcome(env, k % 2, make_rng(9, "s", k)) for k in range(50)]
        b = [sample_outcome(env, k % 2, make_rng(9, "s", k)) for k in range(50)]
        assert a == b

    def test_invalid_arm(self):
        env = Environment([ArmSupport.point(1.0, [0.5])], [5.0], 10)
        with pytest.raises(InvalidArmError):
            sample_outcome(env, 3, make_rng(0))

    def test_bernoulli_means_match_latent(self):
        lat = LatentStructure(np.array([0.3, 0.9]), np.array([[0.4, 0.0], [0.25, 1.0]]))
        env = Environment.bernoulli(lat, [5.0, 5.0], 10)
        np.testing.assert_allclose(env.latent.expected_reward, lat.expected_reward, atol=1e-9)
        np.testing.assert_allclose(env.latent.expected_consumption, lat.expected_consumption, atol=1e-9)

    def test_support_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ArmSupport.from_points([(0.5, 1.0, [1.0]), (0.4, 0.0, [0.0])])


class TestRunEpisode:
    def test_single_arm_budget(self):
        env = Environment([ArmSupport.point(1.0, [1.0])], [5.0], 100)
        tr = run_episode(Constant(0), env, make_rng(0))
        assert tr.stop_time == 6 and tr.total_reward == 5

    def test_time_only(self):
        env = Environment([ArmSupport.point(1.0, [1.0])], [10.0], 10, time_resource=0)
        tr = run_episode(Constant(0), env, make_rng(0))
        assert tr.total_reward == 10 and tr.stop_time == 11

    def test_round_robin_oracle(self):
        d, B = 3, 5
        env = make_roundrobin_env(d, B, 100)
        tr = run_episode(Cycle(d), env, make_rng(0))
        assert tr.total_reward == d * B

    def test_invalid_arm_aborts(self):
        env = Environment([ArmSupport.point(1.0, [1.0])], [5.0], 100)
        with pytest.raises(InvalidArmError):
            run_episode(Constant(4), env, make_rng(0))

    def test_trace_invariants(self):
        lat = LatentStructure(np.array([0.3, 0.8, 0.5]), np.array([[0.4, 0.1], [0.9, 0.6], [0.2, 0.7]]))
        env = Environment.bernoulli(lat, [8.0, 8.0], 60)
        for k in range(30):
            tr = run_episode(FixedDistribution(np.ones(3) / 3), env, make_rng(4, k))
            tau = tr.stop_time
            rewards = tr.rewards()
            cons = tr.consumption()
            assert tr.total_reward == pytest.approx(rewards[: tau - 1].sum())
            assert np.all(cons[: tau - 1].sum(axis=0) <= 8.0 + 1e-9)
            if tau <= 60:
                assert np.any(cons[:tau].sum(axis=0) > 8.0)
            assert len(tr.rounds) == min(tau, 60)

    def test_seeded_determinism(self):
        lat = LatentStructure(np.array([0.3, 0.8]), np.array([[0.4], [0.9]]))
        env = Environment.bernoulli(lat, [8.0], 60)
        a = run_episode(FixedDistribution([0.5, 0.5]), env, make_rng(11, "x"))
        b = run_episode(FixedDistribution([0.5, 0.5]), env, make_rng(11, "x"))
        assert a.arms == b.arms and a.outcome_index == b.outcome_index


class TestSerialization:
    def test_round_trip(self):
        env = make_roundrobin_env(2, 5, 20)
        data = json.loads(env.to_json())
        assert set(data) == {"arms", "resources", "budgets", "horizon", "time_resource", "null_arm", "support"}
        assert set(data["support"][0][0]) == {"weight", "reward", "consumption"}
        env2 = Environment.from_json(env.to_json())
        assert env2.latent == env.latent
        assert env2.instance.null_arm == env.instance.null_arm
        np.testing.assert_array_equal(env2.instance.budgets, env.instance.budgets)

    def test_arm_count_mismatch(self):
        data = make_roundrobin_env(2, 5, 20).to_dict()
        data["arms"] = 7
        with pytest.raises(ValueError):
            Environment.from_dict(data)
