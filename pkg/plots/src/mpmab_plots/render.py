"""Three-panel benchmark figures from a summary.csv results table.

The input is the benchmark's result schema: one row per (run, checkpoint)
with cumulative regret, per-category regret and per-category pull counts.
For a chosen subpar count this module renders, side by side, the mean
cumulative-regret curves with standard-error bands, the stacked final
pull fractions by arm category, and the stacked final regret by arm
category, one colour per algorithm throughout.

Rendering is read-only over the CSV: nothing beyond means, standard
errors and per-run fractions is computed, and identical inputs produce
identical image bytes.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
# fixed hash salt: SVG element ids stay stable across processes
matplotlib.rcParams["svg.hashsalt"] = "mpmab-plots"
import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = (
    "run_id", "algorithm", "instance_seed", "schedule_kind", "v_subpar",
    "checkpoint", "regret_total", "regret_optimal", "regret_nearopt",
    "regret_subpar", "pulls_optimal", "pulls_nearopt", "pulls_subpar", "P",
)

CATEGORY_LABELS = ("optimal", "near-optimal", "subpar")
CATEGORY_COLORS = ("#4c9f70", "#e8b54d", "#c0504d")
PULL_COLUMNS = ("pulls_optimal", "pulls_nearopt", "pulls_subpar")
REGRET_COLUMNS = ("regret_optimal", "regret_nearopt", "regret_subpar")

# Canonical display order and colours; unknown algorithms follow sorted.
ALGORITHM_ORDER = ("robustagg-ts", "robustagg-ts-v", "robustagg-ucb",
                   "ind-ts", "ind-ucb")
ALGORITHM_COLORS = {
    "robustagg-ts": "#1f77b4",
    "robustagg-ts-v": "#17becf",
    "robustagg-ucb": "#9467bd",
    "ind-ts": "#2ca02c",
    "ind-ucb": "#d62728",
}

FRACTION_TOLERANCE = 1e-6


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    v: int
    out_dir: str
    image_format: str = "png"
    algorithms: tuple = ()

    def __post_init__(self):
        if self.image_format not in ("png", "svg"):
            raise RenderError(f"unsupported image format: {self.image_format!r}")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))


def load_rows(csv_path):
    """Parse the results table, enforcing the column schema."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise RenderError(f"{csv_path}: missing columns {missing}")
        rows = []
        for row in reader:
            row["v_subpar"] = int(row["v_subpar"])
            row["checkpoint"] = int(row["checkpoint"])
            for key in ("regret_total",) + REGRET_COLUMNS:
                row[key] = float(row[key])
            for key in PULL_COLUMNS:
                row[key] = int(row[key])
            rows.append(row)
    return rows


def _algorithm_order(present, requested):
    if requested:
        absent = [a for a in requested if a not in present]
        if absent:
            raise RenderError(f"algorithms not in CSV: {absent}")
        return list(requested)
    known = [a for a in ALGORITHM_ORDER if a in present]
    return known + sorted(present - set(known))


def _curve_stats(rows_by_run):
    """Mean and standard error of regret per checkpoint across runs."""
    grids = {tuple(sorted(r["checkpoint"] for r in run)) for run in rows_by_run}
    if len(grids) != 1:
        raise RenderError("inconsistent checkpoint grids across runs")
    checkpoints = np.asarray(sorted(grids.pop()), dtype=np.int64)
    curves = np.array([[r["regret_total"] for r in sorted(run, key=lambda x: x["checkpoint"])]
                       for run in rows_by_run])
    mean = curves.mean(axis=0)
    n = curves.shape[0]
    stderr = curves.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return checkpoints, mean, stderr


def _final_rows(rows_by_run):
    return [max(run, key=lambda r: r["checkpoint"]) for run in rows_by_run]


def _pull_fractions(final_rows):
    """Per-run final pull fractions by category, averaged across runs."""
    fracs = []
    for row in final_rows:
        pulls = np.array([row[c] for c in PULL_COLUMNS], dtype=np.float64)
        total = pulls.sum()
        if total <= 0:
            raise RenderError(f"run {row['run_id']}: no pulls recorded")
        fracs.append(pulls / total)
    mean = np.mean(fracs, axis=0)
    if abs(mean.sum() - 1.0) > FRACTION_TOLERANCE:
        raise RenderError(f"category fractions sum to {mean.sum()!r}, not 1")
    return mean


def _category_regret(final_rows):
    return np.mean([[row[c] for c in REGRET_COLUMNS] for row in final_rows],
                   axis=0)


def render_figures(spec):
    """Write the three-panel figure for spec.v; returns the output paths."""
    rows = load_rows(spec.csv_path)
    selected = [r for r in rows if r["v_subpar"] == spec.v]
    if not selected:
        raise RenderError(f"no rows with v_subpar = {spec.v}")

    by_alg_run = {}
    for row in selected:
        by_alg_run.setdefault(row["algorithm"], {}).setdefault(
            row["run_id"], []).append(row)
    algorithms = _algorithm_order(set(by_alg_run), spec.algorithms)

    fig, (ax_curve, ax_pulls, ax_regret) = plt.subplots(
        1, 3, figsize=(15, 4.2))

    positions = np.arange(len(algorithms))
    for pos, alg in enumerate(algorithms):
        runs = list(by_alg_run[alg].values())
        color = ALGORITHM_COLORS.get(alg, "#7f7f7f")
        checkpoints, mean, stderr = _curve_stats(runs)
        ax_curve.plot(checkpoints, mean, label=alg, color=color)
        ax_curve.fill_between(checkpoints, mean - stderr, mean + stderr,
                              color=color, alpha=0.25, linewidth=0)

        finals = _final_rows(runs)
        bottom = 0.0
        for c, (frac, cat_color) in enumerate(zip(_pull_fractions(finals),
                                                  CATEGORY_COLORS)):
            ax_pulls.bar(pos, frac, bottom=bottom, color=cat_color,
                         width=0.7, label=CATEGORY_LABELS[c] if pos == 0 else None)
            bottom += frac

        bottom = 0.0
        for c, (reg, cat_color) in enumerate(zip(_category_regret(finals),
                                                 CATEGORY_COLORS)):
            ax_regret.bar(pos, reg, bottom=bottom, color=cat_color, width=0.7)
            bottom += reg

    ax_curve.set_xlabel("round")
    ax_curve.set_ylabel("cumulative collective regret")
    ax_curve.set_title(f"regret over time (v = {spec.v})")
    ax_curve.legend(fontsize=8)

    for ax, title, ylabel in (
            (ax_pulls, "final pull share by arm category", "fraction of pulls"),
            (ax_regret, "final regret by arm category", "cumulative regret")):
        ax.set_xticks(positions)
        ax.set_xticklabels(algorithms, rotation=30, ha="right", fontsize=8)
        ax.set_title(title)
        ax.set_ylabel(ylabel)
    ax_pulls.set_ylim(0, 1)
    ax_pulls.legend(fontsize=8)

    fig.tight_layout()
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"benchmark_v{spec.v}.{spec.image_format}"
    metadata = {"Date": None} if spec.image_format == "svg" else None
    fig.savefig(out_path, dpi=150, metadata=metadata)
    plt.close(fig)
    return [out_path]
