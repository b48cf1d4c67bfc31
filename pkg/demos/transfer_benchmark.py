"""Small-scale version of the transfer benchmark.

Compares the five policies on instances with many vs few subpar arms.
The full-scale study (20 players, horizon 50,000, 30 instances per
setting) lives behind `mpmab run --preset paper`; this demo uses a
shorter horizon so it finishes in under a minute.

Run:  python demos/transfer_benchmark.py
"""

import numpy as np

import mpmab

M, K, EPS, T = 8, 6, 0.15, 8000
N_INSTANCES = 4
ALGORITHMS = ("robustagg-ts", "robustagg-ts-v", "robustagg-ucb",
              "ind-ts", "ind-ucb")

for v in (1, 4):
    print(f"\n=== {v} subpar arm(s) out of {K}, {N_INSTANCES} instances, "
          f"T = {T} ===")
    finals = {alg: [] for alg in ALGORITHMS}
    subpar_regret = {alg: [] for alg in ALGORITHMS}
    for idx in range(N_INSTANCES):
        instance = mpmab.generate_instance(M, K, EPS, v, seed=100 * v + idx)
        gaps = mpmab.compute_gaps(instance)
        subpar = mpmab.subpar_set(gaps, 5 * EPS)
        schedule = mpmab.make_schedule("concurrent", M, T)
        for alg in ALGORITHMS:
            config = mpmab.PolicyConfig(alg, T, EPS)
            policy = mpmab.make_policy(config, M, K)
            trace = mpmab.run_episode(instance, schedule, policy,
                                      seed=1000 * v + 10 * idx)
            summary = mpmab.summarize_run(trace, gaps, subpar, np.array([T]))
            finals[alg].append(summary.regret_total[-1])
            subpar_regret[alg].append(summary.regret_by_category[-1, 2])
    print(f"{'algorithm':>16s} {'final regret':>14s} {'on subpar arms':>15s}")
    for alg in ALGORITHMS:
        mean = np.mean(finals[alg])
        se = np.std(finals[alg], ddof=1) / np.sqrt(N_INSTANCES)
        print(f"{alg:>16s} {mean:9.1f} ± {se:5.1f} {np.mean(subpar_regret[alg]):12.1f}")

print("\nReading: the transfer policies put far less regret into subpar "
      "arms; with many subpar arms they dominate outright, and the "
      "Thompson-sampling variants beat their confidence-bound "
      "counterparts throughout.")
