"""Tour of the core objects: instance, gaps, schedule, one episode.

Run:  python demos/quickstart.py
"""

import numpy as np

import mpmab

# A problem with 4 players, 6 arms, mean dissimilarity at most 0.15 per
# arm, and exactly 2 subpar arms (some player's gap exceeds 5 * 0.15).
instance = mpmab.generate_instance(num_players=4, num_arms=6, epsilon=0.15,
                                   target_subpar=2, seed=7)
print("means (players x arms):")
print(np.round(instance.means, 3))

gaps = mpmab.compute_gaps(instance)
subpar = mpmab.subpar_set(gaps, 5 * instance.epsilon)
print("\nper-player best means:", np.round(gaps.best_mean, 3))
print("subpar arms (gap > 0.75 for someone):", list(subpar))
print("worst-case gap per arm:", np.round(gaps.gap_max, 3))

# Every player acts every round for 2000 rounds.
T = 2000
schedule = mpmab.make_schedule("concurrent", instance.num_players, T)
config = mpmab.PolicyConfig("robustagg-ts", horizon=T, epsilon=instance.epsilon)
policy = mpmab.make_policy(config, instance.num_players, instance.num_arms)

trace = mpmab.run_episode(instance, schedule, policy, seed=42)
print(f"\nran {T} rounds, {trace.active.sum()} pulls total")
print("pull counts per (player, arm):")
print(trace.final_counts)

checkpoints = mpmab.default_checkpoints(T, count=10)
summary = mpmab.summarize_run(trace, gaps, subpar, checkpoints)
print("\nregret trajectory at checkpoints:")
for cp, reg in zip(summary.checkpoints, summary.regret_total):
    print(f"  round {cp:5d}: {reg:8.2f}")

fractions, pulls, regret = mpmab.category_breakdown(trace, gaps, subpar)
print("\npull share by category [optimal, near-optimal, subpar]:",
      np.round(fractions, 3))
print("regret by category:", np.round(regret, 2))

# Stopping-time queries over the trace: when did arm 0 reach its k-th
# pull by anyone, and when did player 2 pull it the k-th time?
arm = int(subpar[0]) if len(subpar) else 0
print(f"\narm {arm}: tau_1 = {mpmab.tau_k(trace, arm, 1)}, "
      f"tau_10 = {mpmab.tau_k(trace, arm, 10)}, "
      f"pi_1(player 2) = {mpmab.pi_k(trace, arm, 2, 1)}")
