"""Problem instances: player-dependent arm means with bounded dissimilarity.

An instance is an M x K matrix of Bernoulli means, one row per player, in
which the means of any single arm differ by at most ``epsilon`` across
players. The derived gap structure (per-player suboptimality gaps and the
set of arms whose worst-case gap exceeds a threshold) drives both the
regret accounting and the pull categorisation used in reports.
"""

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class ArmCategory(IntEnum):
    OPTIMAL = 0
    NEAR_OPTIMAL = 1
    SUBPAR = 2


class InfeasibleParametersError(ValueError):
    """Raised when no instance with the requested structure fits in [0, 1]."""


@dataclass(frozen=True)
class MpmabInstance:
    """One multi-task bandit problem.

    means[p, i] is the Bernoulli mean of arm i for player p. All means lie
    in [0, 1] and, for every arm, the spread across players is at most
    epsilon. The matrix is frozen after construction so instances can be
    shared across threads and processes.
    """

    means: np.ndarray
    epsilon: float
    reward_family: str = "bernoulli"

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError("means must be a non-empty 2-D (players x arms) matrix")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def num_players(self):
        return self.means.shape[0]

    @property
    def num_arms(self):
        return self.means.shape[1]


@dataclass(frozen=True)
class GapTable:
    """Suboptimality gaps derived from an instance.

    gaps[p, i] = best_mean[p] - means[p, i]; gap_min / gap_max are the
    per-arm extremes over players.
    """

    best_mean: np.ndarray
    gaps: np.ndarray
    gap_min: np.ndarray
    gap_max: np.ndarray

    @property
    def num_players(self):
        return self.gaps.shape[0]

    @property
    def num_arms(self):
        return self.gaps.shape[1]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple = ()


def validate_instance(instance):
    """Check the range and dissimilarity constraints of an instance.

    Violations are data, not failures: the report lists every mean outside
    [0, 1] and every (arm, player, player) pair whose means differ by more
    than epsilon.
    """
    means = instance.means
    eps = instance.epsilon
    violations = []
    bad = np.argwhere((means < 0.0) | (means > 1.0))
    for p, i in bad:
        violations.append(
            f"mean out of range: player {p}, arm {i}, value {means[p, i]!r}"
        )
    if not 0.0 <= eps <= 1.0:
        violations.append(f"epsilon out of range: {eps!r}")
    M = instance.num_players
    for i in range(instance.num_arms):
        col = means[:, i]
        for p in range(M):
            for q in range(p + 1, M):
                diff = abs(col[p] - col[q])
                if diff > eps:
                    violations.append(
                        f"dissimilarity violated: arm {i}, players {p} and {q}, "
                        f"|{col[p]!r} - {col[q]!r}| = {diff!r} > epsilon {eps!r}"
                    )
    return ValidationReport(ok=not violations, violations=tuple(violations))


def compute_gaps(instance):
    means = instance.means
    best = means.max(axis=1)
    gaps = best[:, None] - means
    table = GapTable(
        best_mean=best,
        gaps=gaps,
        gap_min=gaps.min(axis=0),
        gap_max=gaps.max(axis=0),
    )
    for arr in (table.best_mean, table.gaps, table.gap_min, table.gap_max):
        arr.setflags(write=False)
    return table


def subpar_set(gaps, alpha):
    """Arms for which some player's gap strictly exceeds ``alpha``.

    Returned as a sorted index array; the complement is every other arm.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return np.flatnonzero(gaps.gap_max > alpha)


def categorize_pairs(gaps, subpar):
    """Category of every (player, arm) pair as an (M, K) int matrix.

    A pair is OPTIMAL when its gap is zero, SUBPAR when the arm belongs to
    the subpar set (computed at alpha = 5 epsilon for reporting), and
    NEAR_OPTIMAL otherwise.
    """
    cats = np.full(gaps.gaps.shape, ArmCategory.NEAR_OPTIMAL, dtype=np.int8)
    cats[:, np.asarray(subpar, dtype=np.int64)] = ArmCategory.SUBPAR
    cats[gaps.gaps == 0.0] = ArmCategory.OPTIMAL
    return cats


def categorize_pull(gaps, subpar, player, arm):
    if gaps.gaps[player, arm] == 0.0:
        return ArmCategory.OPTIMAL
    if arm in np.asarray(subpar):
        return ArmCategory.SUBPAR
    return ArmCategory.NEAR_OPTIMAL


def sample_reward(instance, player, arm, rng):
    """One Bernoulli(means[player, arm]) draw, consuming one uniform."""
    if instance.reward_family != "bernoulli":
        raise ValueError(f"unsupported reward family: {instance.reward_family}")
    return float(rng.random() < instance.means[player, arm])


# Band construction constants for generate_instance. The optimum arm mean
# b* is drawn from BASE_RANGE; subpar arms get base means at least
# 4*eps + MARGIN below b* (certified above 5*eps by the spread player's
# +/- eps/2 offsets), near-optimal arms within (4*eps - MARGIN, MARGIN) of
# b*, so their worst-case gap stays at most 5*eps - MARGIN.
BASE_RANGE = (0.90, 0.95)
MARGIN = 0.02
SUBPAR_ALPHA_FACTOR = 5.0


def generate_instance(num_players, num_arms, epsilon, target_subpar, seed,
                      max_attempts=100):
    """Random instance with exactly ``target_subpar`` arms in the 5-eps set.

    Player 0 acts as the spread player: it is offset +eps/2 on the optimum
    arm and -eps/2 on every designated subpar arm, which certifies a gap
    above 5*eps for those arms. All other offsets are uniform in
    [-eps/2, +eps/2], keeping the per-arm spread within eps. Means are
    clipped to [0, 1]; clipping can occasionally erode the certification
    margin, so the construction is re-drawn until the subpar count is exact
    (at most ``max_attempts`` times).
    """
    M, K, v = int(num_players), int(num_arms), int(target_subpar)
    eps = float(epsilon)
    if M < 1 or K < 1:
        raise ValueError("need at least one player and one arm")
    if not 0 <= v <= K - 1:
        raise ValueError(f"target_subpar must be in [0, {K - 1}], got {v}")
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {eps}")

    b_lo, _ = BASE_RANGE
    if v > 0 and eps / 2 > b_lo - 4 * eps - MARGIN:
        raise InfeasibleParametersError(
            f"subpar band empty for epsilon={eps}: needs 4.5*eps + {MARGIN} <= {b_lo}"
        )
    if v < K - 1 and 2 * eps < MARGIN:
        raise InfeasibleParametersError(
            f"near-optimal band empty for epsilon={eps}: needs eps >= {MARGIN / 2}"
        )

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    alpha = SUBPAR_ALPHA_FACTOR * eps
    for _ in range(max_attempts):
        b_star = rng.uniform(*BASE_RANGE)
        roles = rng.permutation(K)
        opt_arm = roles[0]
        subpar_arms = roles[1:1 + v]
        near_arms = roles[1 + v:]

        base = np.empty(K)
        base[opt_arm] = b_star
        if v:
            base[subpar_arms] = rng.uniform(eps / 2, b_star - 4 * eps - MARGIN,
                                            size=v)
        if near_arms.size:
            base[near_arms] = rng.uniform(b_star - 4 * eps + MARGIN,
                                          b_star - MARGIN, size=near_arms.size)

        offsets = rng.uniform(-eps / 2, eps / 2, size=(M, K))
        offsets[0, opt_arm] = eps / 2
        offsets[0, subpar_arms] = -eps / 2

        means = np.clip(base[None, :] + offsets, 0.0, 1.0)
        instance = MpmabInstance(means=means, epsilon=eps)
        if not validate_instance(instance).ok:
            continue
        if len(subpar_set(compute_gaps(instance), alpha)) == v:
            return instance
    raise InfeasibleParametersError(
        f"could not realise {v} subpar arms in {max_attempts} attempts "
        f"(M={M}, K={K}, epsilon={eps})"
    )


def save_instance(instance, path, seed=None, target_subpar=None):
    """Write an instance as JSON; means go player-major (row-major).

    Floats are serialised as shortest round-trip decimals, so a
    save/load cycle reproduces the matrix bit-exactly.
    """
    doc = {
        "M": instance.num_players,
        "K": instance.num_arms,
        "epsilon": instance.epsilon,
        "means": [float(x) for x in instance.means.ravel(order="C")],
        "family": instance.reward_family,
        "seed": seed,
        "target_subpar": target_subpar,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_instance(path):
    """Read an instance written by save_instance; returns (instance, doc)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    M, K = int(doc["M"]), int(doc["K"])
    means = np.asarray(doc["means"], dtype=np.float64)
    if means.size != M * K:
        raise ValueError(f"means length {means.size} does not match M*K = {M * K}")
    instance = MpmabInstance(
        means=means.reshape(M, K),
        epsilon=float(doc["epsilon"]),
        reward_family=doc.get("family", "bernoulli"),
    )
    return instance, doc
