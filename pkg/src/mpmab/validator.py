"""Monte-Carlo falsification of the stopping-time concentration bounds.

The aggregate estimate of an arm, pooled over all players and offset by
+eps, concentrates around each player's true mean even when it is read at
the random round where the arm reaches its k-th pull. Each check replays N
independent episodes, evaluates the corresponding high-probability event
per episode, and compares the empirical violation rate against delta plus
three binomial standard deviations of finite-sample slack.

Structural checks on snapshot traces live here too: in delayed-update mode
every per-pair posterior quantity must be constant between consecutive
pulls of the arm by the player.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .policies import UniformRandomPolicy
from .protocol import run_episode
from .streams import EpisodeStreams, as_seed_sequence

DIR_LOWER = "lower"    # true mean minus aggregate estimate, plain radius
DIR_UPPER = "upper"    # aggregate estimate minus true mean, radius + 2 eps
DIR_TWO_SIDED = "two_sided"

DEFAULT_EPISODES = 2000


class StoppingTimeRangeError(RuntimeError):
    """The count at a k-th-pull stopping time left [k, k + M - 1]."""


@dataclass(frozen=True)
class ConcCheckReport:
    arm: int
    k: int
    delta: float
    episodes: int
    violations: int
    rate: float
    bound: float
    passed: bool
    direction: str
    insufficient_n: bool
    player: int | None = None

    def to_dict(self):
        return asdict(self)


def _make_report(arm, k, delta, episodes, violations, direction, player=None):
    delta, episodes, violations = float(delta), int(episodes), int(violations)
    sigma = math.sqrt(delta * (1.0 - delta) / episodes)
    rate = violations / episodes
    bound = delta + 3.0 * sigma
    return ConcCheckReport(
        arm=int(arm), k=int(k), delta=delta, episodes=episodes,
        violations=violations, rate=rate, bound=bound,
        passed=rate <= bound, direction=direction,
        insufficient_n=3.0 * sigma > delta,
        player=None if player is None else int(player),
    )


def aggregate_radius(n_at_stop, num_players, delta):
    """sqrt(2 ln(2/delta) / ((n - M) ∨ 1)); the upper direction adds 2 eps
    on top of this."""
    denom = max(n_at_stop - num_players, 1)
    return math.sqrt(2.0 * math.log(2.0 / delta) / denom)


def individual_radius(n_at_stop, delta):
    """sqrt(2 ln(4/delta) / (n ∨ 1)) for the two-sided own-data bound."""
    return math.sqrt(2.0 * math.log(4.0 / delta) / max(n_at_stop, 1))


def _simulate_uniform_episode(instance, schedule, seed):
    """Blockwise replay of run_episode with the uniform-random policy.

    Bit-identical to the generic episode driver (same positioned streams,
    same thresholding), but vectorised over whole rounds at once.
    """
    M, K, T = instance.num_players, instance.num_arms, schedule.horizon
    streams = EpisodeStreams(seed, M, K)
    block = streams.policy.block_size
    arms = np.full((T, M), -1, dtype=np.int16)
    rewards = np.zeros((T, M))
    means = instance.means
    players = np.arange(M)[None, :]
    for start in range(0, T, block):
        stop = min(T, start + block)
        take = stop - start
        u_pol = streams.policy.uniform_block(start // block)[:take, :, 0]
        u_rew = streams.reward.uniform_block(start // block)[:take]
        chosen = np.minimum((u_pol * K).astype(np.int64), K - 1)
        drawn = (u_rew < means[players, chosen]).astype(np.float64)
        mask = schedule.active[start:stop]
        arms[start:stop] = np.where(mask, chosen, -1)
        rewards[start:stop] = np.where(mask, drawn, 0.0)
    return arms, rewards


def _episode_pull_data(instance, schedule, policy, seed):
    """(arms, rewards) for one episode, using the fast path when possible."""
    if isinstance(policy, UniformRandomPolicy):
        return _simulate_uniform_episode(instance, schedule, seed)
    trace = run_episode(instance, schedule, policy, seed)
    return trace.arms, trace.rewards


def _stop_stats(cum_n, cum_sum, k, horizon):
    """(n at the k-th-pull round, pooled reward sum at it) or None if the
    arm never reaches k pulls. k = 0 maps to the round-0 convention."""
    if k == 0:
        return 0, 0.0
    idx = int(np.searchsorted(cum_n, k, side="left"))
    if idx >= horizon:
        return None
    return int(cum_n[idx]), float(cum_sum[idx])


def run_agg_grid(instance, schedule, policy, arms=None, ks=(1, 50, 200),
                 deltas=(0.1, 0.05), episodes=DEFAULT_EPISODES, seed=0):
    """Both directions of the aggregate bound over a (arm, k, delta) grid.

    All grid cells share the same N episodes, which keeps the runtime
    proportional to N rather than to the grid size; each cell's violation
    count is still an exact Binomial(N, p_cell) sample.
    """
    M, K, T = instance.num_players, instance.num_arms, schedule.horizon
    if arms is None:
        arms = range(K)
    arms = [int(a) for a in arms]
    ks = [int(k) for k in ks]
    for k in ks:
        if not 0 <= k <= T * M:
            raise ValueError(f"k must be in [0, T*M] = [0, {T * M}], got {k}")
    eps = instance.epsilon
    mu_max = instance.means.max(axis=0)
    mu_min = instance.means.min(axis=0)

    child_seeds = as_seed_sequence(seed).spawn(episodes)
    viol = np.zeros((len(arms), len(ks), len(deltas), 2), dtype=np.int64)
    for ep_seed in child_seeds:
        ep_arms, ep_rewards = _episode_pull_data(instance, schedule, policy, ep_seed)
        for ai, arm in enumerate(arms):
            pulls = ep_arms == arm
            cum_n = np.cumsum(pulls.sum(axis=1))
            cum_sum = np.cumsum((ep_rewards * pulls).sum(axis=1))
            for ki, k in enumerate(ks):
                stats = _stop_stats(cum_n, cum_sum, k, T)
                if stats is None:
                    continue   # the stopped-out branch can never violate
                n_at, reward_sum = stats
                if k >= 1 and not k <= n_at <= k + M - 1:
                    raise StoppingTimeRangeError(
                        f"arm {arm}: count {n_at} at the k={k} stopping time "
                        f"outside [{k}, {k + M - 1}]"
                    )
                agg = reward_sum / max(n_at, 1) + eps
                for di, delta in enumerate(deltas):
                    radius = aggregate_radius(n_at, M, delta)
                    if mu_max[arm] - agg > radius:
                        viol[ai, ki, di, 0] += 1
                    if agg - mu_min[arm] > radius + 2.0 * eps:
                        viol[ai, ki, di, 1] += 1

    reports = []
    for ai, arm in enumerate(arms):
        for ki, k in enumerate(ks):
            for di, delta in enumerate(deltas):
                reports.append(_make_report(arm, k, delta, episodes,
                                            viol[ai, ki, di, 0], DIR_LOWER))
                reports.append(_make_report(arm, k, delta, episodes,
                                            viol[ai, ki, di, 1], DIR_UPPER))
    return reports


def check_agg_concentration(instance, schedule, policy, arm, k, delta,
                            episodes=DEFAULT_EPISODES, seed=0):
    """One (arm, k, delta) cell of the aggregate bound; returns the
    (lower, upper) report pair."""
    reports = run_agg_grid(instance, schedule, policy, arms=[arm], ks=[k],
                           deltas=[delta], episodes=episodes, seed=seed)
    lower = next(r for r in reports if r.direction == DIR_LOWER)
    upper = next(r for r in reports if r.direction == DIR_UPPER)
    return lower, upper


def check_ind_concentration(instance, schedule, policy, arm, player, k, delta,
                            episodes=DEFAULT_EPISODES, seed=0):
    """Two-sided own-data bound at the player's k-th pull of the arm."""
    M, T = instance.num_players, schedule.horizon
    if not 0 <= k <= T:
        raise ValueError(f"k must be in [0, T] = [0, {T}], got {k}")
    mu = instance.means[player, arm]
    child_seeds = as_seed_sequence(seed).spawn(episodes)
    violations = 0
    for ep_seed in child_seeds:
        ep_arms, ep_rewards = _episode_pull_data(instance, schedule, policy, ep_seed)
        pulls = ep_arms[:, player] == arm
        cum_n = np.cumsum(pulls)
        cum_sum = np.cumsum(np.where(pulls, ep_rewards[:, player], 0.0))
        stats = _stop_stats(cum_n, cum_sum, k, T)
        if stats is None:
            continue
        n_at, reward_sum = stats
        est = reward_sum / max(n_at, 1)
        if abs(est - mu) > individual_radius(n_at, delta):
            violations += 1
    return _make_report(arm, k, delta, episodes, violations, DIR_TWO_SIDED,
                        player=int(player))


SNAPSHOT_FIELDS = ("own_n", "m", "ind_mean", "ind_var", "agg_mean",
                   "agg_var", "use_ind")


def check_invariants_trace(trace):
    """Constancy of per-pair decision state between consecutive pulls.

    For every (player, arm) pair and every inter-pull interval
    (pi_{s-1}, pi_s], asserts that the snapshot quantities (counts, both
    posteriors, and the posterior-selection flag) did not change. Returns
    the list of violations; empty means the delayed-update property holds.
    """
    if trace.snapshots is None:
        raise ValueError("trace was recorded without snapshots")
    snaps = trace.snapshots
    violations = []
    for p in range(trace.num_players):
        for i in range(trace.num_arms):
            pull_rounds = np.flatnonzero(trace.pulls_of_arm(i)[:, p]) + 1
            lo = 0
            for hi in pull_rounds:
                for name in SNAPSHOT_FIELDS:
                    seg = snaps[name][lo:hi, p, i]
                    changed = seg != seg[0]
                    if changed.any():
                        at = lo + 1 + int(np.argmax(changed))
                        violations.append(
                            f"player {p} arm {i}: {name} changed at round {at} "
                            f"within pull interval ({lo}, {int(hi)}]"
                        )
                lo = int(hi)
    return violations
