"""Command-line harness: dataset generation, rollouts, strategy comparison,
planning probe, dataset inspection, and the stdio oracle endpoint.

stdout carries machine-readable payloads only; progress and human-oriented
tables go to stderr.  Exit codes: 0 ok, 2 usage, 3 policy failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import control, dataset, evaluation, tasks
from .control import DEFAULT_K, EpisodeSpec, compare_strategies
from .env import noise_rng, policy_rng
from .policy import (
    ExternalPolicy,
    NoiseConfig,
    OraclePolicy,
    PolicySpawnError,
    serve_oracle,
    with_noise,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_POLICY = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    """Flat, serializable view of one invocation; round-trips through JSON."""

    command: str
    task: str = "all"
    episodes: int = 20
    seed: int = 0
    strategy: str = "c"
    K: int | None = None
    eps_plan: float = 0.0
    eps_act: float = 0.0
    p: float = 0.0
    step_budget: int | None = None
    policy: str = "oracle"
    out: str | None = None
    parallel: int = 1
    samples_per_task: int = 10
    data: str | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(data: dict) -> "RunConfig":
        return RunConfig(**data)

    def validate(self) -> None:
        if self.K is not None and self.strategy != "c":
            raise ValueError("--K only applies to strategy c")
        if self.strategy not in control.STRATEGY_KINDS:
            raise ValueError(f"strategy must be one of {control.STRATEGY_KINDS}")

    @property
    def k_threshold(self) -> int:
        return DEFAULT_K if self.K is None else self.K


def _resolve_tasks(selector: str) -> list[str]:
    if selector == "all":
        return tasks.all_task_ids()
    if selector == "long-horizon":
        return tasks.long_horizon_task_ids()
    if selector in ("seen", "unseen", "additional"):
        return tasks.task_ids_by_split(selector)
    chosen = [t.strip() for t in selector.split(",") if t.strip()]
    for task_id in chosen:
        tasks.get_task(task_id)  # raises UnknownTaskError
    return chosen


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", default="all",
                        help="task id, comma list, or one of: all, long-horizon, seen, unseen, additional")
    parser.add_argument("--episodes", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--strategy", choices=control.STRATEGY_KINDS, default="c")
    parser.add_argument("--K", type=int, default=None, help="failure threshold (strategy c)")
    parser.add_argument("--eps-plan", dest="eps_plan", type=float, default=0.0)
    parser.add_argument("--eps-act", dest="eps_act", type=float, default=0.0)
    parser.add_argument("--p", type=float, default=0.0, help="drop probability per transport step")
    parser.add_argument("--step-budget", dest="step_budget", type=int, default=None)
    parser.add_argument("--policy", default="oracle", help="oracle or exec:<command>")
    parser.add_argument("--out", default=None)
    parser.add_argument("--parallel", type=int, default=1)
    parser.add_argument("--samples-per-task", dest="samples_per_task", type=int, default=10)
    parser.add_argument("--data", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabletop", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "rollout", "compare", "probe-planning", "inspect", "tasks"):
        p = sub.add_parser(name)
        _add_common(p)
    echo = sub.add_parser("echo-oracle")
    echo.add_argument("--seed", type=int, default=0)
    return parser


def parse_config(argv: list[str]) -> RunConfig | argparse.Namespace:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        defaults = json.loads(Path(pre.config).read_text())
        defaults.pop("command", None)
        for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            action.set_defaults(**{k: v for k, v in defaults.items()})
    args = parser.parse_args(argv)
    if args.command == "echo-oracle":
        return args
    cfg = RunConfig(
        command=args.command,
        task=args.task,
        episodes=args.episodes,
        seed=args.seed,
        strategy=args.strategy,
        K=args.K,
        eps_plan=args.eps_plan,
        eps_act=args.eps_act,
        p=args.p,
        step_budget=args.step_budget,
        policy=args.policy,
        out=args.out,
        parallel=args.parallel,
        samples_per_task=args.samples_per_task,
        data=args.data,
    )
    cfg.validate()
    return cfg


def _episode_specs(cfg: RunConfig, task_ids: list[str]) -> list[EpisodeSpec]:
    return [
        EpisodeSpec(
            task_id=task_id,
            seed=cfg.seed + i,
            strategy_kind=cfg.strategy,
            k_threshold=cfg.k_threshold,
            eps_plan=cfg.eps_plan,
            eps_act=cfg.eps_act,
            drop_probability=cfg.p,
            step_budget=cfg.step_budget,
            policy=cfg.policy,
        )
        for task_id in task_ids
        for i in range(cfg.episodes)
    ]


def cmd_generate(cfg: RunConfig) -> int:
    task_ids = _resolve_tasks(cfg.task)
    out = cfg.out or "data"
    manifest = dataset.generate(task_ids, cfg.episodes, cfg.seed, out, progress=True)
    json.dump(manifest, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_rollout(cfg: RunConfig) -> int:
    task_ids = _resolve_tasks(cfg.task)
    specs = _episode_specs(cfg, task_ids)
    results = control._run_specs(specs, parallel=cfg.parallel)
    for result in results:
        json.dump(
            {
                "task_id": result.task_id,
                "seed": result.seed,
                "strategy": result.strategy,
                "score": result.score,
                "success": result.success,
                "plan_calls": result.plan_calls,
                "steps": result.steps,
            },
            sys.stdout,
            sort_keys=True,
        )
        sys.stdout.write("\n")
    rows = evaluation.aggregate_results(results)
    sys.stderr.write(evaluation.metrics_csv(rows))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    task_ids = _resolve_tasks(cfg.task)
    seeds = [cfg.seed + i for i in range(cfg.episodes)]
    noise = NoiseConfig(eps_plan=cfg.eps_plan, eps_act=cfg.eps_act, seed=cfg.seed)
    rows, _ = compare_strategies(
        task_ids,
        seeds,
        noise=noise,
        drop_probability=cfg.p,
        k_threshold=cfg.k_threshold,
        parallel=cfg.parallel,
    )
    csv_text = control.comparison_csv(rows)
    sys.stdout.write(csv_text)
    sys.stderr.write(control.comparison_table(rows))
    if cfg.out:
        Path(cfg.out).write_text(csv_text)
    return EXIT_OK


def cmd_probe_planning(cfg: RunConfig) -> int:
    task_ids = _resolve_tasks(cfg.task)
    policy = _build_probe_policy(cfg)
    try:
        overall, per_task = evaluation.planning_accuracy(
            policy, task_ids, samples_per_task=cfg.samples_per_task, seed=cfg.seed
        )
    finally:
        close = getattr(policy, "close", None)
        if close is not None:
            close()
    json.dump({"overall": overall, "per_task": per_task}, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _build_probe_policy(cfg: RunConfig):
    if cfg.policy.startswith("exec:"):
        policy = ExternalPolicy(cfg.policy[len("exec:") :].replace("{seed}", str(cfg.seed)))
    elif cfg.policy == "oracle":
        policy = OraclePolicy(policy_rng(cfg.seed))
    else:
        raise ValueError(f"unknown policy source {cfg.policy!r}")
    if cfg.eps_plan > 0.0 or cfg.eps_act > 0.0:
        noise = NoiseConfig(eps_plan=cfg.eps_plan, eps_act=cfg.eps_act, seed=cfg.seed)
        policy = with_noise(policy, noise, noise_rng(cfg.seed))
    return policy


def cmd_inspect(cfg: RunConfig) -> int:
    if not cfg.data:
        raise ValueError("--data is required for inspect")
    manifest = dataset.read_manifest(cfg.data)
    summary = {
        "config_hash": manifest["config_hash"],
        "total_subtasks": manifest["total_subtasks"],
        "tasks": {
            task_id: {"split": entry["split"], "count": entry["count"]}
            for task_id, entry in sorted(manifest["tasks"].items())
        },
    }
    json.dump(summary, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_tasks(cfg: RunConfig) -> int:
    json.dump(tasks.catalog_manifest(), sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except tasks.UnknownTaskError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if isinstance(cfg, argparse.Namespace):  # echo-oracle
        serve_oracle(sys.stdin, sys.stdout, cfg.seed)
        return EXIT_OK

    handlers = {
        "generate": cmd_generate,
        "rollout": cmd_rollout,
        "compare": cmd_compare,
        "probe-planning": cmd_probe_planning,
        "inspect": cmd_inspect,
        "tasks": cmd_tasks,
    }
    try:
        return handlers[cfg.command](cfg)
    except tasks.UnknownTaskError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except PolicySpawnError as exc:
        print(f"policy failure: {exc}", file=sys.stderr)
        return EXIT_POLICY
    except (OSError, dataset.DatasetError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
