"""Regret accounting: trajectories, category breakdowns, cross-run stats.

The default regret measure is pseudo-regret, the cumulative sum of the
true gaps of pulled arms. It is the per-run analogue of expected
collective regret and has lower variance than realised reward
differences; the realised variant is available behind a flag.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .env import ArmCategory, categorize_pairs

N_CATEGORIES = len(ArmCategory)

CSV_COLUMNS = (
    "run_id", "algorithm", "instance_seed", "schedule_kind", "v_subpar",
    "checkpoint", "regret_total", "regret_optimal", "regret_nearopt",
    "regret_subpar", "pulls_optimal", "pulls_nearopt", "pulls_subpar", "P",
)


@dataclass(frozen=True)
class RunSummary:
    """Per-checkpoint view of one episode, aggregatable across runs."""

    checkpoints: np.ndarray          # (C,) 1-based rounds, ascending
    regret_total: np.ndarray         # (C,)
    regret_per_player: np.ndarray    # (C, M)
    pulls_by_category: np.ndarray    # (C, 3) in ArmCategory order
    regret_by_category: np.ndarray   # (C, 3)
    total_activations: int


@dataclass(frozen=True)
class RunMeta:
    run_id: str
    algorithm: str
    instance_seed: int
    schedule_kind: str
    v_subpar: int


@dataclass(frozen=True)
class AggregateSummary:
    """Elementwise mean / sample std / standard error over runs."""

    checkpoints: np.ndarray
    n_runs: int
    regret_mean: np.ndarray
    regret_std: np.ndarray
    regret_stderr: np.ndarray
    regret_by_category_mean: np.ndarray
    regret_by_category_std: np.ndarray
    regret_by_category_stderr: np.ndarray
    pulls_by_category_mean: np.ndarray
    pulls_by_category_std: np.ndarray
    pulls_by_category_stderr: np.ndarray


def default_checkpoints(horizon, count=100):
    """``count`` evenly spaced rounds plus the horizon itself."""
    if horizon < 1:
        return np.zeros(0, dtype=np.int64)
    grid = np.floor(np.arange(1, count + 1) * (horizon / count)).astype(np.int64)
    grid = np.unique(np.concatenate([grid, [horizon]]))
    return grid[grid >= 1]


def _per_round_gap_increments(trace, gaps, realized=False):
    """(T, M) matrix of per-pull regret increments (0 where inactive)."""
    arms = np.maximum(trace.arms, 0)
    players = np.arange(trace.num_players)[None, :]
    if realized:
        inc = gaps.best_mean[None, :] - trace.rewards
    else:
        inc = gaps.gaps[players, arms]
    return np.where(trace.active, inc, 0.0)


def regret_trajectory(trace, gaps, checkpoints, realized=False):
    """Cumulative regret at each checkpoint, collective and per player.

    The collective value is the exact sum of the per-player values.
    """
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if checkpoints.size and (np.any(np.diff(checkpoints) <= 0)
                             or checkpoints[-1] > trace.horizon
                             or checkpoints[0] < 1):
        raise ValueError("checkpoints must be ascending rounds within the horizon")
    inc = _per_round_gap_increments(trace, gaps, realized=realized)
    per_player_cum = np.cumsum(inc, axis=0)
    at_cp = per_player_cum[checkpoints - 1] if checkpoints.size else \
        np.zeros((0, trace.num_players))
    return at_cp.sum(axis=1), at_cp


def category_breakdown(trace, gaps, subpar, realized=False):
    """Final pull fractions and regret split by arm category.

    Returns (fractions (3,), pull counts (3,), regret (3,)) in ArmCategory
    order. Fractions sum to 1 whenever any pull was recorded.
    """
    cats = categorize_pairs(gaps, subpar)
    arms = np.maximum(trace.arms, 0)
    players = np.arange(trace.num_players)[None, :]
    pull_cat = cats[players, arms]
    inc = _per_round_gap_increments(trace, gaps, realized=realized)
    pulls = np.zeros(N_CATEGORIES, dtype=np.int64)
    regret = np.zeros(N_CATEGORIES)
    for c in range(N_CATEGORIES):
        mask = trace.active & (pull_cat == c)
        pulls[c] = int(mask.sum())
        regret[c] = inc[mask].sum()
    total = pulls.sum()
    fractions = pulls / total if total else np.zeros(N_CATEGORIES)
    return fractions, pulls, regret


def summarize_run(trace, gaps, subpar, checkpoints, realized=False):
    """Full RunSummary for one trace at the given checkpoint grid."""
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    regret_total, per_player = regret_trajectory(trace, gaps, checkpoints,
                                                 realized=realized)
    cats = categorize_pairs(gaps, subpar)
    arms = np.maximum(trace.arms, 0)
    players = np.arange(trace.num_players)[None, :]
    pull_cat = np.where(trace.active, cats[players, arms], -1)
    inc = _per_round_gap_increments(trace, gaps, realized=realized)

    pulls_cp = np.zeros((checkpoints.size, N_CATEGORIES), dtype=np.int64)
    regret_cp = np.zeros((checkpoints.size, N_CATEGORIES))
    for c in range(N_CATEGORIES):
        mask = pull_cat == c
        pulls_cum = np.cumsum(mask.sum(axis=1))
        regret_cum = np.cumsum(np.where(mask, inc, 0.0).sum(axis=1))
        if checkpoints.size:
            pulls_cp[:, c] = pulls_cum[checkpoints - 1]
            regret_cp[:, c] = regret_cum[checkpoints - 1]
    return RunSummary(
        checkpoints=checkpoints,
        regret_total=regret_total,
        regret_per_player=per_player,
        pulls_by_category=pulls_cp,
        regret_by_category=regret_cp,
        total_activations=int(trace.active.sum()),
    )


def final_count_regret(trace, gaps):
    """Pseudo-regret from final counts: sum_i sum_p n_i^p(T) gap_i^p."""
    return float((trace.final_counts * gaps.gaps).sum())


def aggregate_runs(summaries):
    """Mean, sample standard deviation (n-1) and standard error per
    checkpoint and per category; n = 1 yields zero spread."""
    if not summaries:
        raise ValueError("need at least one run summary")
    cps = summaries[0].checkpoints
    for s in summaries[1:]:
        if not np.array_equal(s.checkpoints, cps):
            raise ValueError("summaries have mismatched checkpoint grids")
    n = len(summaries)

    def stats(stack):
        mean = stack.mean(axis=0)
        std = stack.std(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
        return mean, std, std / np.sqrt(n)

    reg = stats(np.stack([s.regret_total for s in summaries]))
    reg_cat = stats(np.stack([s.regret_by_category for s in summaries]))
    pull_cat = stats(np.stack([s.pulls_by_category.astype(np.float64)
                               for s in summaries]))
    return AggregateSummary(
        checkpoints=cps, n_runs=n,
        regret_mean=reg[0], regret_std=reg[1], regret_stderr=reg[2],
        regret_by_category_mean=reg_cat[0], regret_by_category_std=reg_cat[1],
        regret_by_category_stderr=reg_cat[2],
        pulls_by_category_mean=pull_cat[0], pulls_by_category_std=pull_cat[1],
        pulls_by_category_stderr=pull_cat[2],
    )


def write_summary_csv(path, entries):
    """Write (RunMeta, RunSummary) pairs as summary.csv.

    One row per (run, checkpoint), sorted by (run_id, checkpoint) so the
    byte content is independent of production order. Floats use shortest
    round-trip formatting.
    """
    rows = []
    for meta, summary in entries:
        for j, cp in enumerate(summary.checkpoints):
            rows.append((
                meta.run_id, meta.algorithm, str(meta.instance_seed),
                meta.schedule_kind, str(meta.v_subpar), str(int(cp)),
                repr(float(summary.regret_total[j])),
                repr(float(summary.regret_by_category[j, ArmCategory.OPTIMAL])),
                repr(float(summary.regret_by_category[j, ArmCategory.NEAR_OPTIMAL])),
                repr(float(summary.regret_by_category[j, ArmCategory.SUBPAR])),
                str(int(summary.pulls_by_category[j, ArmCategory.OPTIMAL])),
                str(int(summary.pulls_by_category[j, ArmCategory.NEAR_OPTIMAL])),
                str(int(summary.pulls_by_category[j, ArmCategory.SUBPAR])),
                str(summary.total_activations),
            ))
    rows.sort(key=lambda r: (r[0], int(r[5])))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


def read_summary_csv(path):
    """Rows of summary.csv as dicts with numeric fields parsed."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            row["instance_seed"] = int(row["instance_seed"])
            row["v_subpar"] = int(row["v_subpar"])
            row["checkpoint"] = int(row["checkpoint"])
            for key in ("regret_total", "regret_optimal", "regret_nearopt",
                        "regret_subpar"):
                row[key] = float(row[key])
            for key in ("pulls_optimal", "pulls_nearopt", "pulls_subpar", "P"):
                row[key] = int(row[key])
            out.append(row)
    return out
