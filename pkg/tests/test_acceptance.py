"""Benchmark acceptance suite.

Each test prints one `[ACCEPTANCE n] PASS/FAIL` line. The ordering
criteria run the full benchmark scale (20 players, 10 arms, dissimilarity
0.15, horizon 50,000) over 30 generated instances per subpar count, shared
across the comparison tests through session fixtures. Expect the whole
module to take on the order of fifteen minutes on two cores.
"""

import math
import os
from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest
from concurrent.futures import ProcessPoolExecutor

from mpmab import cli, env, metrics, protocol, validator
from mpmab.policies import (ANALYSIS_UCB_WIDTH, PolicyConfig, TransferTsPolicy,
                            UniformRandomPolicy, make_policy, minimize_F)

M, K, EPS, T = 20, 10, 0.15, 50_000
N_INSTANCES = 30
N_SCHED_INSTANCES = 10
CORE_ALGS = ("robustagg-ts", "robustagg-ucb", "ind-ts", "ind-ucb")
WORKERS = max(1, os.cpu_count() or 1)

OPT, NEAR, SUB = (env.ArmCategory.OPTIMAL, env.ArmCategory.NEAR_OPTIMAL,
                  env.ArmCategory.SUBPAR)


def _report(num, name, ok, detail=""):
    line = f"[ACCEPTANCE {num}] {'PASS' if ok else 'FAIL'}: {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


class AlgStats:
    def __init__(self):
        self.finals = []
        self.subpar = []

    @property
    def mean(self):
        return float(np.mean(self.finals))

    @property
    def stderr(self):
        a = np.asarray(self.finals)
        return float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0

    @property
    def subpar_mean(self):
        return float(np.mean(self.subpar))


def pooled_se(a, b):
    return math.sqrt(a.stderr**2 + b.stderr**2)


def beats(winner, loser):
    """winner's mean final regret is below loser's by > 1 pooled stderr."""
    return loser.mean - winner.mean > pooled_se(winner, loser)


def _episode_job(job):
    kind, v, idx, alg = job
    inst = env.generate_instance(M, K, EPS, v,
                                 cli.stable_u64("accept-inst", kind, v, idx))
    sched = protocol.make_schedule(
        kind, M, T, seed=cli.stable_u64("accept-sched", kind, v, idx),
        subset_prob=0.5)
    policy = make_policy(PolicyConfig(alg, T, EPS), M, K)
    trace = protocol.run_episode(
        inst, sched, policy, cli.stable_u64("accept-ep", kind, v, idx, alg))
    gaps = env.compute_gaps(inst)
    subpar = env.subpar_set(gaps, 5 * EPS)
    summary = metrics.summarize_run(trace, gaps, subpar, np.array([T]))
    return (kind, v, alg, float(summary.regret_total[-1]),
            float(summary.regret_by_category[-1, SUB]))


def _run_jobs(jobs):
    stats = defaultdict(AlgStats)
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        for kind, v, alg, final, sub in pool.map(_episode_job, jobs, chunksize=2):
            stats[(kind, v, alg)].finals.append(final)
            stats[(kind, v, alg)].subpar.append(sub)
    return stats


@pytest.fixture(scope="session")
def benchmark_sweep():
    jobs = []
    for v in (0, 5, 8):
        for idx in range(N_INSTANCES):
            for alg in CORE_ALGS + ("robustagg-ts-v",):
                jobs.append(("concurrent", v, idx, alg))
    for idx in range(N_INSTANCES):
        for alg in CORE_ALGS:
            jobs.append(("concurrent", 9, idx, alg))
    stats = _run_jobs(jobs)
    return {(v, alg): s for (kind, v, alg), s in stats.items()}


@pytest.fixture(scope="session")
def schedule_sweep():
    jobs = [(kind, 8, idx, alg)
            for kind in ("sequential", "random_subset")
            for idx in range(N_SCHED_INSTANCES)
            for alg in CORE_ALGS]
    return _run_jobs(jobs)


def test_criterion_01_benchmark_ordering_v8(benchmark_sweep):
    rats = benchmark_sweep[(8, "robustagg-ts")]
    raucb = benchmark_sweep[(8, "robustagg-ucb")]
    indts = benchmark_sweep[(8, "ind-ts")]
    inducb = benchmark_sweep[(8, "ind-ucb")]
    ok = (beats(rats, indts) and beats(rats, raucb) and beats(raucb, inducb))
    _report(1, "transfer-vs-individual ordering at v=8", ok,
            f"RA-TS {rats.mean:.0f}±{rats.stderr:.0f} < Ind-TS {indts.mean:.0f}"
            f"±{indts.stderr:.0f}; RA-TS < RA-UCB {raucb.mean:.0f}"
            f"±{raucb.stderr:.0f}; RA-UCB < Ind-UCB {inducb.mean:.0f}"
            f"±{inducb.stderr:.0f}")


def test_criterion_02_benchmark_ordering_v5(benchmark_sweep):
    rats = benchmark_sweep[(5, "robustagg-ts")]
    raucb = benchmark_sweep[(5, "robustagg-ucb")]
    indts = benchmark_sweep[(5, "ind-ts")]
    inducb = benchmark_sweep[(5, "ind-ucb")]
    lowest = (beats(rats, raucb) and beats(rats, indts) and beats(rats, inducb))
    ts_beats_raucb = beats(indts, raucb)
    _report(2, "transfer-vs-individual ordering at v=5", lowest and ts_beats_raucb,
            f"RA-TS {rats.mean:.0f} lowest of four; Ind-TS {indts.mean:.0f} < "
            f"RA-UCB {raucb.mean:.0f}")


def test_criterion_03_subpar_transfer_effect(benchmark_sweep):
    details = []
    ok = True
    for v in (5, 8):
        rats = benchmark_sweep[(v, "robustagg-ts")]
        raucb = benchmark_sweep[(v, "robustagg-ucb")]
        indts = benchmark_sweep[(v, "ind-ts")]
        inducb = benchmark_sweep[(v, "ind-ucb")]
        ok = ok and rats.subpar_mean < indts.subpar_mean
        ok = ok and raucb.subpar_mean < inducb.subpar_mean
        details.append(f"v={v}: TS {rats.subpar_mean:.0f}<{indts.subpar_mean:.0f}, "
                       f"UCB {raucb.subpar_mean:.0f}<{inducb.subpar_mean:.0f}")
    _report(3, "subpar-arm regret lower with transfer", ok, "; ".join(details))


def test_criterion_04_robustness_extremes(benchmark_sweep):
    rats0 = benchmark_sweep[(0, "robustagg-ts")]
    indts0 = benchmark_sweep[(0, "ind-ts")]
    competitive = rats0.mean <= 1.15 * indts0.mean
    transfer_wins = all(
        beats(benchmark_sweep[(9, winner)], benchmark_sweep[(9, loser)])
        for winner in ("robustagg-ts", "robustagg-ucb")
        for loser in ("ind-ts", "ind-ucb"))
    _report(4, "robust at v=0, dominant at v=9", competitive and transfer_wins,
            f"v=0 ratio {rats0.mean / indts0.mean:.3f} <= 1.15; v=9 transfer "
            f"beats individual")


def test_criterion_05_variant_parity(benchmark_sweep):
    details = []
    ok = True
    for v in (0, 5, 8):
        rats = benchmark_sweep[(v, "robustagg-ts")]
        var = benchmark_sweep[(v, "robustagg-ts-v")]
        rel = abs(var.mean - rats.mean) / rats.mean
        ok = ok and rel <= 0.10
        details.append(f"v={v}: {rel:.1%}")
    _report(5, "eager-update variant within 10% of delayed", ok,
            ", ".join(details))


def test_criterion_06_concentration_validation():
    Mv, Kv, epsv, Tv = 5, 3, 0.1, 2000
    inst = env.generate_instance(Mv, Kv, epsv, 1, cli.stable_u64("acc6-inst"))
    sched = protocol.make_schedule("concurrent", Mv, Tv)
    policy = UniformRandomPolicy(PolicyConfig("uniform", Tv, epsv), Mv, Kv)
    reports = validator.run_agg_grid(
        inst, sched, policy, ks=(1, 50, 200), deltas=(0.1, 0.05),
        episodes=2000, seed=cli.stable_u64("acc6-seed"))
    # run_agg_grid raises StoppingTimeRangeError if n_j(tau_k) ever leaves
    # [k, k + M - 1]; reaching this point means the assertion never fired
    ok = all(r.passed for r in reports) and not any(r.insufficient_n
                                                    for r in reports)
    worst = max(r.rate - r.bound for r in reports)
    _report(6, "stopping-time concentration holds on 2000-episode grid", ok,
            f"{len(reports)} checks, worst rate-bound margin {worst:.4f}")


def test_criterion_07_invariant_suite():
    rng = np.random.default_rng(20240809)

    # delayed-update constancy on 50 randomized episodes
    clean = 0
    for run in range(50):
        Mi = int(rng.integers(2, 5))
        Ki = int(rng.integers(2, 5))
        Ti = int(rng.integers(80, 240))
        vi = int(rng.integers(0, Ki))
        inst = env.generate_instance(Mi, Ki, 0.15, vi, int(rng.integers(2**32)))
        sched = protocol.make_schedule("concurrent", Mi, Ti)
        policy = TransferTsPolicy(PolicyConfig("robustagg-ts", Ti, 0.15), Mi, Ki)
        trace = protocol.run_episode(inst, sched, policy, int(rng.integers(2**32)),
                                     snapshot=True)
        if not validator.check_invariants_trace(trace):
            clean += 1
    delayed_ok = clean == 50

    # the eager variant violates the constancy property detectably
    inst = env.generate_instance(2, 2, 0.15, 1, seed=77)
    sched = protocol.make_schedule("concurrent", 2, 120)
    policy = TransferTsPolicy(PolicyConfig("robustagg-ts-v", 120, 0.15), 2, 2,
                              eager=True)
    eager_trace = protocol.run_episode(inst, sched, policy, seed=78,
                                       snapshot=True)
    eager_detected = len(validator.check_invariants_trace(eager_trace)) > 0

    # dissimilarity facts on 200 generated instances across all v
    facts_ok = True
    for i in range(200):
        v = i % K
        inst = env.generate_instance(M, K, EPS, v, seed=900_000 + i)
        gaps = env.compute_gaps(inst)
        spread = gaps.gap_max - gaps.gap_min
        facts_ok &= bool(np.all(spread <= 2 * EPS + 1e-12))
        for arm in env.subpar_set(gaps, 10 * EPS):
            facts_ok &= bool(np.all(gaps.gaps[:, arm] > 8 * EPS))
        facts_ok &= len(env.subpar_set(gaps, 2 * EPS)) <= K - 1
        for arm in env.subpar_set(gaps, 5 * EPS):
            facts_ok &= gaps.gap_max[arm] <= 2 * gaps.gap_min[arm] + 1e-12
        facts_ok &= len(env.subpar_set(gaps, 5 * EPS)) == v

    # brute-force oracles on 1000 small random instances
    oracle_ok = True
    for _ in range(1000):
        Mi = int(rng.integers(1, 5))
        Ki = int(rng.integers(1, 6))
        means = rng.random((Mi, Ki))
        gaps = env.compute_gaps(env.MpmabInstance(means, 1.0))
        best = means.max(axis=1)
        expected = best[:, None] - means
        oracle_ok &= bool(np.allclose(gaps.gaps, expected, atol=0))
        alpha = float(rng.random())
        expected_subpar = [i for i in range(Ki)
                           if any(expected[p, i] > alpha for p in range(Mi))]
        oracle_ok &= list(env.subpar_set(gaps, alpha)) == expected_subpar

    # deviation-bound minimiser against a 1e-6 grid scan
    lam_grid = np.arange(0.0, 1.0 + 1e-6, 1e-6)
    lam_grid[-1] = 1.0
    min_f_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 10_000))
        m = int(rng.integers(1, 1_000_000))
        epsr = float(rng.random())
        Tr = int(rng.integers(2, 200_000))
        _, val = minimize_F(n, m, epsr, Tr)
        grid_vals = (ANALYSIS_UCB_WIDTH
                     * np.sqrt(math.log(Tr) * (lam_grid**2 / n
                                               + (1 - lam_grid) ** 2 / m))
                     + (1 - lam_grid) * epsr)
        grid_best = float(grid_vals.min())
        min_f_ok &= abs(val - grid_best) <= 1e-9 or val < grid_best

    ok = delayed_ok and eager_detected and facts_ok and oracle_ok and min_f_ok
    _report(7, "invariant suite", ok,
            f"delayed clean {clean}/50, eager detected {eager_detected}, "
            f"facts {facts_ok}, oracles {oracle_ok}, minimize_F {min_f_ok}")


def test_criterion_08_determinism(tmp_path):
    config = replace(cli.PRESETS["smoke"], master_seed=11,
                     out_dir=str(tmp_path / "a"))
    cli.cmd_run(config)
    cli.cmd_run(replace(config, out_dir=str(tmp_path / "b")))
    identical = ((tmp_path / "a" / "summary.csv").read_bytes()
                 == (tmp_path / "b" / "summary.csv").read_bytes())

    inst = env.generate_instance(M, K, EPS, 8, cli.stable_u64("acc8"))
    sched = protocol.make_schedule("concurrent", M, T)
    policy = make_policy(PolicyConfig("robustagg-ts", T, EPS), M, K)
    trace = protocol.run_episode(inst, sched, policy, cli.stable_u64("acc8-ep"))
    gaps = env.compute_gaps(inst)
    total, _ = metrics.regret_trajectory(trace, gaps, [T])
    diff = abs(total[0] - metrics.final_count_regret(trace, gaps))
    ok = identical and diff <= 1e-9
    _report(8, "byte-identical rerun and path-vs-count regret", ok,
            f"identical={identical}, |trajectory - counts| = {diff:.2e}")


def test_criterion_09_schedule_generality(schedule_sweep):
    details = []
    ok = True
    for kind in ("sequential", "random_subset"):
        rats = schedule_sweep[(kind, 8, "robustagg-ts")]
        indts = schedule_sweep[(kind, 8, "ind-ts")]
        completed = all(
            len(schedule_sweep[(kind, 8, alg)].finals) == N_SCHED_INSTANCES
            for alg in CORE_ALGS)
        ok = ok and completed and rats.mean < indts.mean
        details.append(f"{kind}: RA-TS {rats.mean:.0f} < Ind-TS {indts.mean:.0f}")
    _report(9, "orderings persist under partial-activation schedules", ok,
            "; ".join(details))
