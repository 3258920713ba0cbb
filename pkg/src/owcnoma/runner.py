"""Experiment orchestration: train/evaluate methods, compare them across
seeds, and export reproducible CSV/JSON artifacts.

Every output embeds the run seed, the scenario content hash, and the
package version; re-running the same manifest yields byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .agents import (DdpgAgent, NafAgent, TrainingLog, greedy_rollout,
                     run_training, run_training_per_group)
from .baselines import (default_grid_denominator, scenario_exhaustive,
                        scenario_fixed, scenario_grpa)
from .env import PowerControlEnv, evaluate_allocations
from .rates import RateReport
from .scenario import MODE_PER_GROUP, Scenario, load_scenario

METHODS = ("naf", "ddpg", "grpa", "exhaustive", "fixed")
LEARNING_METHODS = ("naf", "ddpg")

DEFAULT_EPISODES = 25
DEFAULT_STEPS = 200

SMOOTHING_WINDOW = 25
FINAL_TAIL_FRACTION = 0.1


@dataclass(frozen=True)
class RunManifest:
    scenario_path: str
    method: str
    seed: int
    episodes: int = DEFAULT_EPISODES
    steps: int = DEFAULT_STEPS
    out_dir: str = "."
    grid: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class MethodResult:
    method: str
    seed: int
    avg_sum_rate_bps: float
    convergence_iter: int | None
    feasible: bool
    alphas: dict[int, np.ndarray]
    reports: list[RateReport]
    log: TrainingLog | None = None


def moving_average(values, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return x
    out = np.empty_like(x)
    css = np.cumsum(x)
    for i in range(x.size):
        lo = max(0, i - window + 1)
        out[i] = (css[i] - (css[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


def convergence_iteration(rewards, window: int = SMOOTHING_WINDOW,
                          tail_fraction: float = FINAL_TAIL_FRACTION) -> int:
    """First iteration whose smoothed reward reaches 95% of the final
    (tail-mean) level. Iterations are 1-based like the training log."""
    smoothed = moving_average(rewards, window)
    if smoothed.size == 0:
        raise ValueError("empty reward series")
    tail = max(1, int(math.ceil(smoothed.size * tail_fraction)))
    final = float(np.mean(smoothed[-tail:]))
    threshold = 0.95 * final if final >= 0 else 1.05 * final
    hits = np.nonzero(smoothed >= threshold)[0]
    return int(hits[0]) + 1 if hits.size else smoothed.size


def build_agent(method: str, scenario: Scenario, env: PowerControlEnv,
                seed: int):
    if scenario.mode == MODE_PER_GROUP:
        sizes = set(env.group_sizes.values())
        if len(sizes) != 1:
            raise ValueError("per-group mode needs equal group sizes")
        m = sizes.pop()
        state_dim, action_dim = 3 * m, m
    else:
        state_dim, action_dim = env.state_dim, env.action_dim
    cls = NafAgent if method == "naf" else DdpgAgent
    return cls(state_dim, action_dim, seed=seed)


def train_method(scenario: Scenario, method: str, seed: int, episodes: int,
                 steps: int):
    """Train one agent; returns (agent, log, env)."""
    if method not in LEARNING_METHODS:
        raise ValueError(f"{method} is not a learning method")
    env = PowerControlEnv(scenario)
    agent = build_agent(method, scenario, env, seed)
    if scenario.mode == MODE_PER_GROUP:
        log = run_training_per_group(env, agent, episodes, steps)
    else:
        log = run_training(env, agent, episodes, steps)
    return agent, log, env


def evaluate_method(scenario: Scenario, method: str, seed: int,
                    episodes: int = DEFAULT_EPISODES,
                    steps: int = DEFAULT_STEPS,
                    grid: int | None = None,
                    trained_agent=None) -> MethodResult:
    """Final allocation and rates for one method on one seed."""
    if method == "fixed":
        allocs = scenario_fixed(scenario)
        conv = None
        log = None
    elif method == "grpa":
        allocs = scenario_grpa(scenario)
        conv = None
        log = None
    elif method == "exhaustive":
        allocs, _ = scenario_exhaustive(scenario, grid)
        conv = None
        log = None
    elif method in LEARNING_METHODS:
        if trained_agent is not None:
            agent, log, env = trained_agent
        else:
            agent, log, env = train_method(scenario, method, seed, episodes,
                                           steps)
        allocs = greedy_rollout(env, agent, steps,
                                per_group=scenario.mode == MODE_PER_GROUP)
        conv = convergence_iteration(log.rewards)
    else:
        raise ValueError(f"unknown method {method!r}")
    reports, avg_rate = evaluate_allocations(scenario, allocs)
    return MethodResult(method=method, seed=seed, avg_sum_rate_bps=avg_rate,
                        convergence_iter=conv,
                        feasible=all(r.feasible for r in reports),
                        alphas=allocs, reports=reports, log=log)


# -- artifact emission -------------------------------------------------------


def emit_learning_curve(log: TrainingLog, path, seed: int,
                        scenario_hash: str) -> None:
    """CSV with one row per training iteration; rewards of feasible steps
    are in rate_scale units (Gbps with the default scale)."""
    if len(log) == 0:
        raise ValueError("empty training log")
    with open(path, "w", newline="") as fh:
        fh.write("iteration,episode,reward,loss,noise_scale,"
                 "seed,scenario_hash,version\n")
        for i in range(len(log)):
            fh.write(",".join([
                str(log.iterations[i]), str(log.episodes[i]),
                repr(log.rewards[i]), repr(log.losses[i]),
                repr(log.noise_scales[i]), str(seed), scenario_hash,
                __version__]) + "\n")


def _result_row(result: MethodResult, scenario: Scenario,
                scenario_hash: str) -> dict:
    row = {
        "method": result.method,
        "seed": result.seed,
        "avg_sum_rate_bps": repr(result.avg_sum_rate_bps),
        "convergence_iter": ("" if result.convergence_iter is None
                             else str(result.convergence_iter)),
        "feasible": int(result.feasible),
    }
    for report in result.reports:
        row[f"group{report.group_id}_sum_rate_bps"] = repr(report.group_sum)
    for gid, report in zip(scenario.group_ids(), result.reports):
        for uid, rate in zip(scenario.groups[gid], report.per_user_rates):
            row[f"user{uid}_rate_bps"] = repr(float(rate))
    row["scenario_hash"] = scenario_hash
    row["version"] = __version__
    return row


def emit_comparison(results: list[MethodResult], scenario: Scenario,
                    out_dir, seeds: list[int]) -> dict:
    """comparison.csv (per method/seed), comparison_aggregate.csv, and
    summary.json under out_dir; returns the summary structure."""
    os.makedirs(out_dir, exist_ok=True)
    scenario_hash = scenario.content_hash()

    rows = [_result_row(r, scenario, scenario_hash) for r in results]
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(os.path.join(out_dir, "comparison.csv"), "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(c, "")) for c in columns) + "\n")

    by_method: dict[str, list[MethodResult]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r)
    aggregates = {}
    for method, rs in by_method.items():
        rates = np.array([r.avg_sum_rate_bps for r in rs])
        convs = [r.convergence_iter for r in rs
                 if r.convergence_iter is not None]
        aggregates[method] = {
            "n_seeds": len(rs),
            "mean_avg_sum_rate_bps": float(np.mean(rates)),
            "std_avg_sum_rate_bps": float(np.std(rates)),
            "mean_convergence_iter": (float(np.mean(convs)) if convs
                                      else None),
        }
    agg_path = os.path.join(out_dir, "comparison_aggregate.csv")
    with open(agg_path, "w", newline="") as fh:
        fh.write("method,n_seeds,mean_avg_sum_rate_bps,std_avg_sum_rate_bps,"
                 "mean_convergence_iter,scenario_hash,version\n")
        for method in sorted(aggregates):
            a = aggregates[method]
            conv = ("" if a["mean_convergence_iter"] is None
                    else repr(a["mean_convergence_iter"]))
            fh.write(",".join([
                method, str(a["n_seeds"]), repr(a["mean_avg_sum_rate_bps"]),
                repr(a["std_avg_sum_rate_bps"]), conv, scenario_hash,
                __version__]) + "\n")

    summary = {
        "version": __version__,
        "scenario_hash": scenario_hash,
        "seeds": seeds,
        "results": [
            {
                "method": r.method,
                "seed": r.seed,
                "avg_sum_rate_bps": r.avg_sum_rate_bps,
                "convergence_iter": r.convergence_iter,
                "feasible": r.feasible,
                "per_group": [
                    {
                        "group_id": rep.group_id,
                        "sum_rate_bps": rep.group_sum,
                        "alphas": [float(v) for v in r.alphas[rep.group_id]],
                        "user_rates_bps": [float(v)
                                           for v in rep.per_user_rates],
                    }
                    for rep in r.reports
                ],
            }
            for r in results
        ],
        "aggregates": aggregates,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def run_compare(scenario: Scenario, methods: list[str], seeds: list[int],
                episodes: int = DEFAULT_EPISODES, steps: int = DEFAULT_STEPS,
                grid: int | None = None, out_dir=None) -> list[MethodResult]:
    """Evaluate each method on each seed; optionally write artifacts."""
    if not methods:
        raise ValueError("need at least one method")
    if not seeds:
        raise ValueError("need at least one seed")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    results = []
    for method in methods:
        for seed in seeds:
            results.append(evaluate_method(scenario, method, seed,
                                           episodes=episodes, steps=steps,
                                           grid=grid))
    if out_dir is not None:
        emit_comparison(results, scenario, out_dir, seeds)
    return results


def run_manifest(manifest: RunManifest) -> MethodResult:
    """Execute one manifest end to end, writing all artifacts."""
    scenario = load_scenario(manifest.scenario_path)
    out = manifest.out_dir
    os.makedirs(out, exist_ok=True)
    scenario_hash = scenario.content_hash()
    with open(os.path.join(out, "run_manifest.json"), "w") as fh:
        json.dump({**manifest.to_dict(), "scenario_hash": scenario_hash,
                   "version": __version__}, fh, indent=2, sort_keys=True)

    if manifest.method in LEARNING_METHODS:
        agent, log, env = train_method(scenario, manifest.method,
                                       manifest.seed, manifest.episodes,
                                       manifest.steps)
        emit_learning_curve(log, os.path.join(out, "learning_curve.csv"),
                            manifest.seed, scenario_hash)
        agent.save(os.path.join(out, "checkpoint.json"))
        result = evaluate_method(scenario, manifest.method, manifest.seed,
                                 episodes=manifest.episodes,
                                 steps=manifest.steps,
                                 trained_agent=(agent, log, env))
    else:
        result = evaluate_method(scenario, manifest.method, manifest.seed,
                                 episodes=manifest.episodes,
                                 steps=manifest.steps, grid=manifest.grid)
    emit_comparison([result], scenario, out, [manifest.seed])
    return result
