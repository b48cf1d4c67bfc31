"""Benchmark CLI: experiment sweeps, instance generation, validation.

Subcommands:
  run            sweep (subpar count, instance, algorithm) combinations and
                 write summary.csv, instance files and a seed manifest
  gen-instances  write the instance files only
  validate       Monte-Carlo concentration checks, JSON report

A master seed plus the configuration determine every output byte; per-run
seeds are stable hashes of (master seed, subpar count, instance index,
algorithm), so any single run can be reproduced in isolation.

Exit codes: 0 ok, 1 check failure, 2 usage error.
"""

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path

from . import env, metrics, protocol, validator
from .policies import (ALGORITHMS, CONSTANT_PRESETS, TIE_LOWEST, PolicyConfig,
                       UniformRandomPolicy, make_policy)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    num_players: int = 20
    num_arms: int = 10
    epsilon: float = 0.15
    horizon: int = 50_000
    schedule_kind: str = "concurrent"
    subset_prob: float = 0.5
    v_values: tuple = tuple(range(10))
    instances_per_v: int = 30
    algorithms: tuple = ("robustagg-ts", "robustagg-ucb", "ind-ts", "ind-ucb")
    constants_preset: str = "experiment"
    c1: float | None = None       # explicit values win over the preset
    c2: float | None = None
    tie_break: str = TIE_LOWEST
    master_seed: int = 0
    checkpoint_count: int = 100
    out_dir: str = "out"

    def problems(self):
        bad = []
        if self.num_players < 1 or self.num_arms < 1 or self.horizon < 1:
            bad.append("num_players, num_arms and horizon must be positive")
        if self.instances_per_v < 1 or self.checkpoint_count < 1:
            bad.append("instances_per_v and checkpoint_count must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            bad.append("epsilon must be in [0, 1]")
        if self.schedule_kind not in ("concurrent", "sequential", "random_subset"):
            bad.append(f"unknown schedule kind {self.schedule_kind!r}")
        if self.constants_preset not in CONSTANT_PRESETS:
            bad.append(f"unknown constants preset {self.constants_preset!r}")
        for name, value in (("c1", self.c1), ("c2", self.c2)):
            if value is not None and value <= 0:
                bad.append(f"{name} must be positive")
        for v in self.v_values:
            if not 0 <= v <= self.num_arms - 1:
                bad.append(f"target subpar count {v} outside [0, {self.num_arms - 1}]")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                bad.append(f"unknown algorithm {alg!r}")
        return bad


PRESETS = {
    "paper": ExperimentConfig(),
    "smoke": ExperimentConfig(
        num_players=2, num_arms=2, epsilon=0.1, horizon=100,
        v_values=(1,), instances_per_v=1, algorithms=("robustagg-ts",),
    ),
    "analysis": ExperimentConfig(constants_preset="analysis"),
}


def stable_u64(*parts):
    """Reconstructible 64-bit seed from a tuple of printable parts."""
    blob = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def config_hash(config):
    doc = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def load_config_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in ("v_values", "algorithms"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return doc


def _run_specs(config):
    specs = []
    for v in config.v_values:
        for idx in range(config.instances_per_v):
            instance_seed = stable_u64(config.master_seed, "instance", v, idx)
            schedule_seed = stable_u64(config.master_seed, "schedule", v, idx)
            for alg in config.algorithms:
                specs.append({
                    "run_id": f"v{v}_i{idx:03d}_{alg}",
                    "v": v,
                    "instance_index": idx,
                    "algorithm": alg,
                    "instance_seed": instance_seed,
                    "schedule_seed": schedule_seed,
                    "episode_seed": stable_u64(config.master_seed, "episode",
                                               v, idx, alg),
                })
    return specs


def _build_schedule(config, schedule_seed):
    return protocol.make_schedule(
        config.schedule_kind, config.num_players, config.horizon,
        seed=schedule_seed, subset_prob=config.subset_prob,
    )


def _execute_run(payload):
    """One (instance, algorithm) episode; standalone for worker processes."""
    config = ExperimentConfig(**payload["config"])
    spec = payload["spec"]
    instance = env.generate_instance(
        config.num_players, config.num_arms, config.epsilon,
        spec["v"], spec["instance_seed"],
    )
    schedule = _build_schedule(config, spec["schedule_seed"])
    c1, c2 = CONSTANT_PRESETS[config.constants_preset]
    policy_config = PolicyConfig(
        spec["algorithm"], config.horizon, config.epsilon,
        c1=config.c1 if config.c1 is not None else c1,
        c2=config.c2 if config.c2 is not None else c2,
        tie_break=config.tie_break,
    )
    policy = make_policy(policy_config, config.num_players, config.num_arms)
    trace = protocol.run_episode(instance, schedule, policy, spec["episode_seed"])
    gaps = env.compute_gaps(instance)
    subpar = env.subpar_set(gaps, 5.0 * config.epsilon)
    checkpoints = metrics.default_checkpoints(config.horizon, config.checkpoint_count)
    summary = metrics.summarize_run(trace, gaps, subpar, checkpoints)
    meta = metrics.RunMeta(
        run_id=spec["run_id"], algorithm=spec["algorithm"],
        instance_seed=spec["instance_seed"], schedule_kind=config.schedule_kind,
        v_subpar=spec["v"],
    )
    return meta, summary


def _write_instances(config, out_dir):
    instances_dir = out_dir / "instances"
    instances_dir.mkdir(parents=True, exist_ok=True)
    for v in config.v_values:
        for idx in range(config.instances_per_v):
            seed = stable_u64(config.master_seed, "instance", v, idx)
            instance = env.generate_instance(
                config.num_players, config.num_arms, config.epsilon, v, seed,
            )
            env.save_instance(
                instance, instances_dir / f"v{v}_i{idx:03d}.json",
                seed=seed, target_subpar=v,
            )


def _write_config_echo(config, out_dir):
    doc = asdict(config)
    doc["config_hash"] = config_hash(config)
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_run(config, workers=1):
    problems = config.problems()
    if problems:
        raise UsageError("; ".join(problems))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config_echo(config, out_dir)
    _write_instances(config, out_dir)

    specs = _run_specs(config)
    payloads = [{"config": asdict(config), "spec": s} for s in specs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_run, payloads))
    else:
        results = [_execute_run(p) for p in payloads]

    results.sort(key=lambda pair: pair[0].run_id)
    metrics.write_summary_csv(out_dir / "summary.csv", results)

    manifest = {
        "config_hash": config_hash(config),
        "runs": sorted(specs, key=lambda s: s["run_id"]),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_gen_instances(config):
    problems = config.problems()
    if problems:
        raise UsageError("; ".join(problems))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config_echo(config, out_dir)
    _write_instances(config, out_dir)
    return 0


def cmd_validate(num_players=5, num_arms=3, epsilon=0.1, horizon=2000,
                 target_subpar=1, ks=(1, 50, 200), deltas=(0.1, 0.05),
                 episodes=2000, seed=0, out_dir=None):
    """Concentration checks over a (arm, k, delta) grid under a
    uniform-random policy; writes a JSON report array."""
    instance = env.generate_instance(num_players, num_arms, epsilon,
                                     target_subpar, stable_u64(seed, "instance"))
    schedule = protocol.make_schedule("concurrent", num_players, horizon)
    policy_config = PolicyConfig("uniform", horizon, epsilon)
    policy = UniformRandomPolicy(policy_config, num_players, num_arms)

    reports = validator.run_agg_grid(
        instance, schedule, policy, ks=ks, deltas=deltas,
        episodes=episodes, seed=stable_u64(seed, "agg"),
    )
    for arm in range(num_arms):
        for k in ks:
            if k > horizon:
                continue
            for delta in deltas:
                reports.append(validator.check_ind_concentration(
                    instance, schedule, policy, arm, 0, k, delta,
                    episodes=episodes, seed=stable_u64(seed, "ind", arm, k, delta),
                ))

    doc = [r.to_dict() for r in reports]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "validation.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        json.dump(doc, sys.stdout, indent=1)
        sys.stdout.write("\n")

    failed = [r for r in reports if not r.passed]
    flagged = [r for r in reports if r.insufficient_n]
    for r in flagged:
        print(f"warning: insufficient N for arm={r.arm} k={r.k} "
              f"delta={r.delta} ({r.direction}): 3-sigma slack exceeds delta",
              file=sys.stderr)
    for r in failed:
        print(f"FAIL arm={r.arm} k={r.k} delta={r.delta} {r.direction}: "
              f"rate {r.rate:.4f} > bound {r.bound:.4f}", file=sys.stderr)
    return 1 if failed else 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mpmab",
        description="Multi-task bandit benchmark: sweeps, instances, validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, help="JSON config file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="named configuration to start from")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", type=str, help="output directory")

    p_run = sub.add_parser("run", help="run an experiment sweep")
    common(p_run)
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel episode workers")

    p_gen = sub.add_parser("gen-instances", help="write instance files only")
    common(p_gen)

    p_val = sub.add_parser("validate", help="concentration checks")
    common(p_val)
    p_val.add_argument("--players", type=int, default=5)
    p_val.add_argument("--arms", type=int, default=3)
    p_val.add_argument("--epsilon", type=float, default=0.1)
    p_val.add_argument("--horizon", type=int, default=2000)
    p_val.add_argument("--target-subpar", type=int, default=1)
    p_val.add_argument("--episodes", type=int, default=2000)
    p_val.add_argument("--k", type=int, action="append", dest="ks",
                       help="stopping-time index; repeatable")
    p_val.add_argument("--delta", type=float, action="append", dest="deltas",
                       help="failure probability; repeatable")
    return parser


def _experiment_config(args):
    config = PRESETS[args.preset] if args.preset else ExperimentConfig()
    if args.config:
        config = replace(config, **load_config_file(args.config))
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    return config


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_experiment_config(args), workers=max(1, args.workers))
        if args.command == "gen-instances":
            return cmd_gen_instances(_experiment_config(args))
        if args.command == "validate":
            return cmd_validate(
                num_players=args.players, num_arms=args.arms,
                epsilon=args.epsilon, horizon=args.horizon,
                target_subpar=args.target_subpar,
                ks=tuple(args.ks or (1, 50, 200)),
                deltas=tuple(args.deltas or (0.1, 0.05)),
                episodes=args.episodes,
                seed=args.seed if args.seed is not None else 0,
                out_dir=args.out,
            )
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (env.InfeasibleParametersError, protocol.ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
