"""Interaction protocol: oblivious schedules, episodes, stopping times.

A schedule fixes, before play begins, which players are active in each
round. Within a round every active player commits to an arm using only
information from previous rounds, rewards are drawn, and all decisions and
rewards are then broadcast to the policy's update phase. Given the same
seed, instance, schedule and policy, an episode is bit-for-bit
reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .streams import EpisodeStreams

SCHEDULE_KINDS = ("concurrent", "sequential", "random_subset", "from_file")


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Active-player sets for every round, fixed ahead of any episode."""

    active: np.ndarray  # (T, M) bool; row t-1 flags the players acting in round t
    kind: str = "custom"
    total_activations: int = -1

    def __post_init__(self):
        act = np.array(self.active, dtype=bool)
        act.setflags(write=False)
        object.__setattr__(self, "active", act)
        if self.total_activations < 0:
            object.__setattr__(self, "total_activations", int(act.sum()))

    @property
    def horizon(self):
        return self.active.shape[0]

    @property
    def num_players(self):
        return self.active.shape[1]


def make_schedule(kind, num_players, horizon, seed=None, subset_prob=None,
                  path=None):
    """Build one of the stock schedules.

    concurrent:    every player active every round, P = M*T.
    sequential:    round-robin singletons {1 + (t-1 mod M)}, P = T.
    random_subset: each player active independently with probability
                   ``subset_prob`` each round.
    from_file:     parsed from ``path``; its round count must equal the
                   requested horizon.
    """
    M, T = int(num_players), int(horizon)
    if M < 1:
        raise ValueError("num_players must be positive")
    if T < 0:
        raise ValueError("horizon must be non-negative")
    if kind == "concurrent":
        active = np.ones((T, M), dtype=bool)
    elif kind == "sequential":
        active = np.zeros((T, M), dtype=bool)
        if T:
            active[np.arange(T), np.arange(T) % M] = True
    elif kind == "random_subset":
        if subset_prob is None or not 0.0 <= subset_prob <= 1.0:
            raise ValueError("random_subset needs subset_prob in [0, 1]")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        active = rng.random((T, M)) < subset_prob
    elif kind == "from_file":
        if path is None:
            raise ValueError("from_file needs a schedule file path")
        schedule = load_schedule(path, M)
        if schedule.horizon != T:
            raise ProtocolError(
                f"schedule file covers {schedule.horizon} rounds, expected {T}"
            )
        return schedule
    else:
        raise ValueError(f"unknown schedule kind: {kind!r}")
    return Schedule(active=active, kind=kind)


def save_schedule(schedule, path):
    """One line per round of comma-separated 1-based player indices."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in schedule.active:
            fh.write(",".join(str(p + 1) for p in np.flatnonzero(row)))
            fh.write("\n")


def load_schedule(path, num_players):
    """Parse the schedule file format; blank lines are empty active sets."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            row = np.zeros(num_players, dtype=bool)
            if line:
                for tok in line.split(","):
                    p = int(tok)
                    if not 1 <= p <= num_players:
                        raise ProtocolError(
                            f"schedule line {lineno}: player index {p} out of "
                            f"range 1..{num_players}"
                        )
                    row[p - 1] = True
            rows.append(row)
    active = np.array(rows, dtype=bool) if rows else np.zeros((0, num_players), bool)
    return Schedule(active=active, kind="from_file")


@dataclass
class RunTrace:
    """Everything one episode produced.

    arms[t-1, p] is the arm pulled by p in round t (-1 when inactive), and
    rewards[t-1, p] the observed reward (0 when inactive). final_counts is
    the (M, K) pull-count matrix after the last round. snapshots, when
    recorded, holds decision-time policy state per round for invariant
    checking.
    """

    active: np.ndarray
    arms: np.ndarray
    rewards: np.ndarray
    final_counts: np.ndarray
    num_arms: int
    snapshots: dict | None = None

    @property
    def horizon(self):
        return self.arms.shape[0]

    @property
    def num_players(self):
        return self.arms.shape[1]

    def pulls_of_arm(self, arm):
        """(T, M) boolean matrix of pulls of ``arm``."""
        return (self.arms == arm) & self.active

    def arm_count_timeline(self, arm):
        """n_i(t) for t = 1..T as a length-T array."""
        return np.cumsum(self.pulls_of_arm(arm).sum(axis=1))

    def player_count_timeline(self, arm, player):
        """n_i^p(t) for t = 1..T as a length-T array."""
        return np.cumsum(self.pulls_of_arm(arm)[:, player])

    def counts_from_records(self):
        """Recompute the final (M, K) count matrix from the pull records."""
        counts = np.zeros((self.num_players, self.num_arms), dtype=np.int64)
        flat = self.arms[self.active]
        players = np.broadcast_to(
            np.arange(self.num_players), self.arms.shape
        )[self.active]
        np.add.at(counts, (players, flat), 1)
        return counts


def run_episode(instance, schedule, policy, seed, snapshot=False):
    """Play one full episode and record its trace.

    Per round: the policy picks arms for all active players from
    information through the previous round, rewards are drawn from the
    positioned reward stream, and the (decisions, rewards) batch is handed
    to the policy's update phase.
    """
    M, K = instance.num_players, instance.num_arms
    T = schedule.horizon
    if schedule.num_players != M:
        raise ProtocolError(
            f"schedule is for {schedule.num_players} players, instance has {M}"
        )
    mismatch = policy.mismatch(M, K, T, instance.epsilon)
    if mismatch:
        raise ProtocolError(f"policy does not match episode: {mismatch}")

    streams = EpisodeStreams(seed, M, K)
    policy.reset(streams, snapshot=snapshot)

    arms_rec = np.full((T, M), -1, dtype=np.int16)
    rewards_rec = np.zeros((T, M), dtype=np.float64)
    means = instance.means
    capture = policy.capture_snapshot if snapshot else None

    for t in range(1, T + 1):
        if capture is not None:
            capture(t)
        active = np.flatnonzero(schedule.active[t - 1])
        if active.size == 0:
            continue
        arms = policy.act(t, active)
        if arms.shape != active.shape or arms.min() < 0 or arms.max() >= K:
            raise ProtocolError(
                f"round {t}: policy returned invalid arms {arms!r} for "
                f"active players {active!r} (K={K})"
            )
        u = streams.reward.uniforms(t)
        rewards = (u[active] < means[active, arms]).astype(np.float64)
        arms_rec[t - 1, active] = arms
        rewards_rec[t - 1, active] = rewards
        policy.update(t, active, arms, rewards)

    trace = RunTrace(
        active=schedule.active,
        arms=arms_rec,
        rewards=rewards_rec,
        final_counts=np.zeros((M, K), dtype=np.int64),
        num_arms=K,
        snapshots=policy.snapshots if snapshot else None,
    )
    trace.final_counts = trace.counts_from_records()
    return trace


def tau_k(trace, arm, k):
    """First round by which ``arm`` reached k pulls by anyone.

    Returns 0 for k = 0 and the sentinel T+1 when the arm never reaches k
    pulls within the horizon.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0
    timeline = trace.arm_count_timeline(arm)
    idx = int(np.searchsorted(timeline, k, side="left"))
    return idx + 1 if idx < trace.horizon else trace.horizon + 1


def pi_k(trace, arm, player, k):
    """First round by which ``player`` pulled ``arm`` k times, else T+1."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0
    timeline = trace.player_count_timeline(arm, player)
    idx = int(np.searchsorted(timeline, k, side="left"))
    return idx + 1 if idx < trace.horizon else trace.horizon + 1


def kth_puller(trace, arm, k):
    """Player making the k-th pull of ``arm``, ties within a round resolved
    by ascending player index."""
    if k < 1:
        raise ValueError("k must be at least 1")
    t = tau_k(trace, arm, k)
    if t > trace.horizon:
        raise ValueError(f"arm {arm} is pulled fewer than {k} times")
    pulls = trace.pulls_of_arm(arm)
    before = int(pulls[: t - 1].sum())
    pullers = np.flatnonzero(pulls[t - 1])
    return int(pullers[k - before - 1])
