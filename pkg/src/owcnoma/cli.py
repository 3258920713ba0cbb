"""Command-line experiment harness.

Subcommands: train, evaluate, compare, rlnc-stats, validate-scenario.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__, rlnc
from .runner import (DEFAULT_EPISODES, DEFAULT_STEPS, LEARNING_METHODS,
                     METHODS, RunManifest, emit_comparison, run_compare,
                     run_manifest)
from .scenario import (MODE_JOINT, MODE_PER_GROUP, ScenarioError,
                       default_scenario_path, load_scenario)
from .seeding import named_rng


def _scenario_arg(parser):
    parser.add_argument("--scenario", default=None,
                        help="scenario file (YAML or JSON); defaults to the "
                             "bundled 8-AP, 32-user scenario")


def _load(args):
    path = args.scenario
    if path is None:
        path = str(default_scenario_path())
    scenario = load_scenario(path)
    mode = getattr(args, "mode", None)
    if mode:
        scenario.mode = mode
    return scenario, path


def cmd_validate_scenario(args) -> int:
    try:
        scenario, path = _load(args)
    except ScenarioError as exc:
        print(f"INVALID: {exc}")
        return 1
    print(f"OK: {path}")
    print(f"  hash={scenario.content_hash()}")
    print(f"  groups={len(scenario.groups)} users={len(scenario.users)} "
          f"gamma_min={scenario.gamma_min:g} mode={scenario.mode}")
    return 0


def cmd_train(args) -> int:
    scenario, path = _load(args)
    if args.method not in LEARNING_METHODS:
        print(f"train supports {LEARNING_METHODS}, got {args.method!r}",
              file=sys.stderr)
        return 2
    manifest = RunManifest(scenario_path=path, method=args.method,
                           seed=args.seed, episodes=args.episodes,
                           steps=args.steps, out_dir=args.out)
    if args.mode:
        scenario.mode = args.mode
    result = run_manifest(manifest)
    print(f"{args.method} seed={args.seed}: "
          f"avg_sum_rate={result.avg_sum_rate_bps / 1e9:.4f} Gbps "
          f"convergence_iter={result.convergence_iter} "
          f"feasible={result.feasible}")
    print(f"artifacts in {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    scenario, path = _load(args)
    manifest = RunManifest(scenario_path=path, method=args.method,
                           seed=args.seed, episodes=args.episodes,
                           steps=args.steps, out_dir=args.out,
                           grid=args.grid)
    result = run_manifest(manifest)
    print(f"{args.method} seed={args.seed}: "
          f"avg_sum_rate={result.avg_sum_rate_bps / 1e9:.4f} Gbps "
          f"feasible={result.feasible}")
    print(f"artifacts in {args.out}")
    return 0


def cmd_compare(args) -> int:
    scenario, _ = _load(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    results = run_compare(scenario, methods, seeds, episodes=args.episodes,
                          steps=args.steps, grid=args.grid,
                          out_dir=args.out)
    by_method: dict[str, list[float]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r.avg_sum_rate_bps)
    for method in methods:
        rates = by_method[method]
        print(f"{method:>10}: mean avg_sum_rate="
              f"{np.mean(rates) / 1e9:.4f} Gbps over {len(rates)} seed(s)")
    print(f"artifacts in {args.out}")
    return 0


def cmd_rlnc_stats(args) -> int:
    rng = named_rng(args.seed, "rlnc-stats")
    f = args.generation_size
    stats = {
        "version": __version__,
        "seed": args.seed,
        "generation_size": f,
        "packet_length": args.packet_length,
        "trials": args.trials,
        "extra_packets": args.extra,
        "erasure_prob": args.erasure_prob,
    }

    full_rank = 0
    for _ in range(args.trials):
        m = rng.integers(0, 256, size=(f, f), dtype=np.uint8)
        if rlnc.rank(m) == f:
            full_rank += 1
    stats["empirical_full_rank_prob"] = full_rank / args.trials
    stats["analytic_full_rank_prob"] = rlnc.full_rank_probability(f)

    decoded = 0
    for _ in range(args.decode_trials):
        gen = rlnc.Generation(packets=[
            rng.integers(0, 256, size=args.packet_length,
                         dtype=np.uint8).tobytes()
            for _ in range(f)])
        packets = []
        for _ in range(f + args.extra):
            pkt = rlnc.encode(gen, rng)
            # erasure hook: the link between user rates and packet loss is
            # scenario-specific, so the probability is a direct input here
            if args.erasure_prob > 0 and rng.uniform() < args.erasure_prob:
                continue
            packets.append(pkt)
        try:
            out = rlnc.decode(packets, f)
            if out.packets == gen.packets:
                decoded += 1
        except rlnc.InsufficientRankError:
            pass
    stats["decode_trials"] = args.decode_trials
    stats["decode_success_rate"] = decoded / args.decode_trials

    print(json.dumps(stats, indent=2, sort_keys=True))
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w") as fh:
            json.dump(stats, fh, indent=2, sort_keys=True)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="owcnoma",
        description="Indoor optical-wireless NOMA power allocation "
                    "experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-scenario", help="parse and check a scenario")
    _scenario_arg(p)
    p.set_defaults(func=cmd_validate_scenario)

    p = sub.add_parser("train", help="train a NAF or DDPG agent")
    _scenario_arg(p)
    p.add_argument("--method", choices=LEARNING_METHODS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=DEFAULT_EPISODES)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--out", default="out")
    p.add_argument("--mode", choices=[MODE_JOINT, MODE_PER_GROUP],
                   default=None, help="override the scenario's agent mode")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate one method end to end")
    _scenario_arg(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=DEFAULT_EPISODES)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--grid", type=int, default=None,
                   help="grid denominator for exhaustive search")
    p.add_argument("--out", default="out")
    p.add_argument("--mode", choices=[MODE_JOINT, MODE_PER_GROUP],
                   default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compare methods across seeds")
    _scenario_arg(p)
    p.add_argument("--methods", default="naf,ddpg,grpa,exhaustive,fixed",
                   help="comma-separated subset of "
                        + ",".join(METHODS))
    p.add_argument("--seeds", default="0", help="comma-separated seed list")
    p.add_argument("--episodes", type=int, default=DEFAULT_EPISODES)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--mode", choices=[MODE_JOINT, MODE_PER_GROUP],
                   default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rlnc-stats", help="standalone RLNC statistics")
    p.add_argument("--generation-size", "-f", type=int, default=16,
                   dest="generation_size")
    p.add_argument("--packet-length", type=int, default=1024)
    p.add_argument("--trials", type=int, default=10_000,
                   help="random square matrices for the rank statistic")
    p.add_argument("--decode-trials", type=int, default=200)
    p.add_argument("--extra", type=int, default=2,
                   help="coded packets beyond the generation size")
    p.add_argument("--erasure-prob", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional JSON output path")
    p.set_defaults(func=cmd_rlnc_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
