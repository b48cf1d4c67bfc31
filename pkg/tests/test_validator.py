import math

import numpy as np
import pytest

from mpmab import env, protocol, validator
from mpmab.policies import PolicyConfig, TransferTsPolicy, UniformRandomPolicy, make_policy


def uniform_policy(M, K, T, eps=0.1):
    return UniformRandomPolicy(PolicyConfig("uniform", T, eps), M, K)


def small_setup(M=5, K=3, eps=0.1, T=400, v=1, seed=17):
    inst = env.generate_instance(M, K, eps, v, seed=seed)
    sched = protocol.make_schedule("concurrent", M, T)
    return inst, sched, uniform_policy(M, K, T, eps)


class TestRadii:
    def test_upper_exceeds_lower_by_2eps(self):
        for n in (1, 3, 10, 57, 500):
            for delta in (0.5, 0.1, 0.05):
                lower = validator.aggregate_radius(n, 5, delta)
                upper = lower + 2 * 0.1
                assert upper - lower == pytest.approx(0.2)

    def test_aggregate_radius_formula(self):
        assert validator.aggregate_radius(30, 5, 0.1) == pytest.approx(
            math.sqrt(2 * math.log(20.0) / 25))
        # floor kicks in at or below M
        assert validator.aggregate_radius(3, 5, 0.1) == pytest.approx(
            math.sqrt(2 * math.log(20.0)))

    def test_individual_radius_formula(self):
        assert validator.individual_radius(16, 0.1) == pytest.approx(
            math.sqrt(2 * math.log(40.0) / 16))
        assert validator.individual_radius(0, 0.1) == pytest.approx(
            math.sqrt(2 * math.log(40.0)))


class TestFastPathEquivalence:
    def test_matches_generic_episode_driver(self):
        inst, sched, policy = small_setup(T=150)
        for seed in (0, 5):
            fast_arms, fast_rewards = validator._simulate_uniform_episode(
                inst, sched, seed)
            trace = protocol.run_episode(inst, sched, policy, seed)
            np.testing.assert_array_equal(fast_arms, trace.arms)
            np.testing.assert_array_equal(fast_rewards, trace.rewards)

    def test_matches_with_partial_schedules(self):
        inst = env.generate_instance(4, 3, 0.1, 1, seed=3)
        sched = protocol.make_schedule("random_subset", 4, 90, seed=8,
                                       subset_prob=0.5)
        policy = uniform_policy(4, 3, 90)
        fast_arms, fast_rewards = validator._simulate_uniform_episode(inst, sched, 2)
        trace = protocol.run_episode(inst, sched, policy, 2)
        np.testing.assert_array_equal(fast_arms, trace.arms)
        np.testing.assert_array_equal(fast_rewards, trace.rewards)


class TestAggConcentration:
    def test_k_zero_trivially_holds(self):
        inst, sched, policy = small_setup()
        lower, upper = validator.check_agg_concentration(
            inst, sched, policy, arm=0, k=0, delta=0.1, episodes=50, seed=1)
        assert lower.violations == 0 and upper.violations == 0
        assert lower.passed and upper.passed

    def test_deterministic_rewards_never_violate(self):
        means = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        inst = env.MpmabInstance(means, 0.0)
        sched = protocol.make_schedule("concurrent", 3, 200)
        policy = uniform_policy(3, 2, 200, eps=0.0)
        for arm in (0, 1):
            lower, upper = validator.check_agg_concentration(
                inst, sched, policy, arm=arm, k=20, delta=0.05,
                episodes=100, seed=4)
            assert lower.violations == 0
            assert upper.violations == 0

    def test_five_player_grid_passes(self):
        inst, sched, policy = small_setup(T=400)
        reports = validator.run_agg_grid(
            inst, sched, policy, ks=(1, 50), deltas=(0.1, 0.05),
            episodes=300, seed=9)
        assert len(reports) == 3 * 2 * 2 * 2
        assert all(r.passed for r in reports)

    def test_reports_are_reproducible(self):
        inst, sched, policy = small_setup(T=200)
        a = validator.run_agg_grid(inst, sched, policy, ks=(5,), deltas=(0.1,),
                                   episodes=60, seed=13)
        b = validator.run_agg_grid(inst, sched, policy, ks=(5,), deltas=(0.1,),
                                   episodes=60, seed=13)
        assert a == b

    def test_k_beyond_budget_rejected(self):
        inst, sched, policy = small_setup(T=100)
        with pytest.raises(ValueError):
            validator.run_agg_grid(inst, sched, policy, ks=(100 * 5 + 1,),
                                   deltas=(0.1,), episodes=10, seed=0)

    def test_insufficient_n_flagged(self):
        inst, sched, policy = small_setup(T=100)
        lower, upper = validator.check_agg_concentration(
            inst, sched, policy, arm=0, k=1, delta=0.05, episodes=10, seed=0)
        assert lower.insufficient_n and upper.insufficient_n

    def test_general_policy_path(self):
        # a non-uniform policy exercises the run_episode-backed path
        inst, sched, _ = small_setup(T=120)
        policy = make_policy(PolicyConfig("ind-ts", 120, 0.1), 5, 3)
        lower, upper = validator.check_agg_concentration(
            inst, sched, policy, arm=0, k=10, delta=0.2, episodes=40, seed=3)
        assert lower.passed and upper.passed


class TestIndConcentration:
    def test_single_player_passes(self):
        inst = env.MpmabInstance([[0.7, 0.4]], 0.0)
        sched = protocol.make_schedule("concurrent", 1, 400)
        policy = uniform_policy(1, 2, 400, eps=0.0)
        report = validator.check_ind_concentration(
            inst, sched, policy, arm=0, player=0, k=100, delta=0.1,
            episodes=400, seed=6)
        assert report.passed
        assert report.direction == validator.DIR_TWO_SIDED

    def test_inactive_player_never_violates(self):
        inst = env.MpmabInstance([[0.5, 0.5], [0.5, 0.5]], 0.0)
        active = np.zeros((50, 2), dtype=bool)
        active[:, 0] = True
        sched = protocol.Schedule(active=active)
        policy = uniform_policy(2, 2, 50, eps=0.0)
        report = validator.check_ind_concentration(
            inst, sched, policy, arm=0, player=1, k=1, delta=0.1,
            episodes=30, seed=2)
        assert report.violations == 0 and report.rate == 0.0

    def test_k_zero_trivial(self):
        inst, sched, policy = small_setup(T=50)
        report = validator.check_ind_concentration(
            inst, sched, policy, arm=1, player=2, k=0, delta=0.1,
            episodes=30, seed=5)
        assert report.violations == 0


def snapshot_trace(eager, M=2, K=2, T=80, eps=0.1, seed=41):
    inst = env.generate_instance(M, K, eps, K - 1, seed=seed)
    sched = protocol.make_schedule("concurrent", M, T)
    alg = "robustagg-ts-v" if eager else "robustagg-ts"
    cfg = PolicyConfig(alg, T, eps)
    policy = TransferTsPolicy(cfg, M, K, eager=eager)
    return protocol.run_episode(inst, sched, policy, seed=seed, snapshot=True)


class TestInvariantsTrace:
    def test_delayed_mode_clean(self):
        trace = snapshot_trace(eager=False)
        assert validator.check_invariants_trace(trace) == []

    def test_eager_mode_detected(self):
        trace = snapshot_trace(eager=True)
        violations = validator.check_invariants_trace(trace)
        assert violations
        assert any("agg" in v for v in violations)

    def test_requires_snapshots(self):
        inst = env.generate_instance(2, 2, 0.1, 1, seed=1)
        sched = protocol.make_schedule("concurrent", 2, 10)
        policy = make_policy(PolicyConfig("robustagg-ts", 10, 0.1), 2, 2)
        trace = protocol.run_episode(inst, sched, policy, seed=1)
        with pytest.raises(ValueError):
            validator.check_invariants_trace(trace)

    def test_single_player_modes_share_ind_fields(self):
        inst = env.generate_instance(1, 3, 0.15, 1, seed=6)
        sched = protocol.make_schedule("concurrent", 1, 60)
        traces = {}
        for eager in (False, True):
            cfg = PolicyConfig("robustagg-ts-v" if eager else "robustagg-ts",
                               60, 0.15)
            policy = TransferTsPolicy(cfg, 1, 3, eager=eager)
            traces[eager] = protocol.run_episode(inst, sched, policy, seed=6,
                                                 snapshot=True)
        for field in ("own_n", "ind_mean", "ind_var", "use_ind"):
            np.testing.assert_array_equal(traces[False].snapshots[field],
                                          traces[True].snapshots[field])

    def test_snapshot_semantics_match_definitions(self):
        # m equals the arm's global count at the player's most recent pull,
        # the stored aggregate mean carries +eps exactly once, and the
        # selection flag is the literal threshold predicate
        trace = snapshot_trace(eager=False, M=3, K=2, T=100, seed=7)
        snaps = trace.snapshots
        eps, T = 0.1, 100
        from mpmab.policies import switch_threshold
        thr = switch_threshold(0.5, T, eps, 3)
        for p in range(3):
            for i in range(2):
                pulls = trace.pulls_of_arm(i)
                own_rounds = np.flatnonzero(pulls[:, p]) + 1
                n_all = trace.arm_count_timeline(i)
                global_rewards = np.cumsum((trace.rewards * pulls).sum(axis=1))
                for t in range(1, T + 1):
                    past = own_rounds[own_rounds <= t - 1]
                    u = int(past[-1]) if past.size else 0
                    expected_m = int(n_all[u - 1]) if u else 0
                    assert snaps["m"][t - 1, p, i] == expected_m
                    if u:
                        expected_agg = (global_rewards[u - 1]
                                        / max(n_all[u - 1], 1) + eps)
                        assert snaps["agg_mean"][t - 1, p, i] == pytest.approx(
                            expected_agg, abs=1e-12)
                    else:
                        assert snaps["agg_mean"][t - 1, p, i] == 0.0
                    n_prev = len(past)
                    assert snaps["own_n"][t - 1, p, i] == n_prev
                    assert snaps["use_ind"][t - 1, p, i] == (n_prev >= thr)
