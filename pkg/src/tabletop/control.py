"""Closed-loop episode driver and the three replanning strategies.

Strategy (a) replans only at the start and after a success, (b) replans
before every action, and (c) replans at the start, after any success, or
once the consecutive-failure count within the current sub-task exceeds the
threshold K.  Failure counting resets on every replan, so a success resets
it through the replan it triggers.
"""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .env import TabletopEnv, noise_rng, policy_rng
from .oracle import AlreadyDoneError, PlanningImpossibleError, oracle_decompose, ready_moves
from .policy import NoiseConfig, OraclePolicy, PolicyError, PolicyInterface, with_noise
from .subtasks import SubTask, TargetTable, resolution_key
from .world import Action, StepOutcome, WorkspaceConfig

STRATEGY_KINDS = ("a", "b", "c")
DEFAULT_K = 2


@dataclass(frozen=True)
class Strategy:
    kind: str
    k_threshold: int = DEFAULT_K

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"strategy must be one of {STRATEGY_KINDS}")
        if self.k_threshold < 0:
            raise ValueError("K must be >= 0")


@dataclass
class TranscriptEntry:
    subtask: SubTask | None
    action: Action | None
    outcome: StepOutcome | None
    error: str | None = None


@dataclass
class EpisodeResult:
    task_id: str
    seed: int
    strategy: str
    score: float
    success: bool
    plan_calls: int
    steps: int
    transcript: list[TranscriptEntry] = field(default_factory=list)
    final_fraction: float = 0.0


def default_step_budget(env: TabletopEnv) -> int:
    """Three times the oracle decomposition length, plus slack."""
    plan = oracle_decompose(env.initial_state, env.goal, policy_rng(env.seed ^ 0x5BD1E995))
    return 3 * len(plan) + 5


def _pending_relocation(env: TabletopEnv, subtask: SubTask) -> bool:
    """Is this sub-task a relocation the planner still wants?

    Relocations clear occluders and earn no goal reward, so their completion
    is detected structurally: a commanded table move that is no longer among
    the ready relocations has done its job.
    """
    if not isinstance(subtask.target, TargetTable):
        return False
    if env.done or env.satisfied_fraction() >= 1.0:
        return False
    key = resolution_key(subtask, env.state)
    return any(
        move.is_relocation and resolution_key(move.subtask, env.state) == key
        for move in ready_moves(env.state, env.goal)
    )


def run_episode(
    policy: PolicyInterface,
    env: TabletopEnv,
    strategy: Strategy,
    step_budget: int | None = None,
) -> EpisodeResult:
    if step_budget is None:
        step_budget = default_step_budget(env)
    if step_budget < 1:
        raise ValueError("step_budget must be >= 1")

    obs = env.observe()
    transcript: list[TranscriptEntry] = []
    subtask: SubTask | None = None
    succeeded = False  # previous step completed its sub-task
    failures = 0
    t = 0
    plan_calls = 0

    while not env.done and t < step_budget:
        if strategy.kind == "b":
            need_plan = True
        elif strategy.kind == "a":
            need_plan = t == 0 or succeeded
        else:
            need_plan = t == 0 or succeeded or failures > strategy.k_threshold

        if need_plan:
            plan_calls += 1
            try:
                subtask = policy.plan(obs, env.goal_text)
                failures = 0
            except AlreadyDoneError:
                break
            except PlanningImpossibleError as exc:
                transcript.append(TranscriptEntry(None, None, None, error=str(exc)))
                break
            except PolicyError as exc:
                transcript.append(TranscriptEntry(None, None, None, error=str(exc)))
                succeeded = False
                failures += 1
                t += 1
                continue

        if subtask is None:
            succeeded = False
            failures += 1
            t += 1
            continue

        try:
            action = policy.act(obs, env.goal_text, subtask)
        except PolicyError as exc:
            transcript.append(TranscriptEntry(subtask, None, None, error=str(exc)))
            succeeded = False
            failures += 1
            t += 1
            continue

        was_pending_relocation = _pending_relocation(env, subtask)
        obs, reward, _, outcome = env.step(action)
        transcript.append(TranscriptEntry(subtask, action, outcome))
        succeeded = reward > 0.0 or (
            was_pending_relocation and not _pending_relocation(env, subtask)
        )
        if not succeeded:
            failures += 1
        t += 1

    final_fraction = env.satisfied_fraction()
    score = (100.0 * env.goal.satisfied_count(env.state)) / len(env.goal.sub_goals)
    return EpisodeResult(
        task_id=env.task_id,
        seed=env.seed,
        strategy=strategy.kind,
        score=score,
        success=env.done and score == 100.0,
        plan_calls=plan_calls,
        steps=t,
        transcript=transcript,
        final_fraction=final_fraction,
    )


# ---------------------------------------------------------------------------
# Paired-seed strategy comparison


@dataclass(frozen=True)
class EpisodeSpec:
    task_id: str
    seed: int
    strategy_kind: str
    k_threshold: int = DEFAULT_K
    eps_plan: float = 0.0
    eps_act: float = 0.0
    drop_probability: float = 0.0
    step_budget: int | None = None
    policy: str = "oracle"  # "oracle" or "exec:<command>"; "{seed}" is substituted
    keep_transcript: bool = False


def make_policy(env: TabletopEnv, spec: EpisodeSpec) -> PolicyInterface:
    if spec.policy.startswith("exec:"):
        from .policy import ExternalPolicy

        command = spec.policy[len("exec:") :].replace("{seed}", str(env.seed))
        policy: PolicyInterface = ExternalPolicy(command)
    elif spec.policy == "oracle":
        policy = OraclePolicy(policy_rng(env.seed), cfg=env.cfg)
    else:
        raise ValueError(f"unknown policy source {spec.policy!r}")
    if spec.eps_plan > 0.0 or spec.eps_act > 0.0:
        noise = NoiseConfig(eps_plan=spec.eps_plan, eps_act=spec.eps_act, seed=env.seed)
        policy = with_noise(policy, noise, noise_rng(env.seed))
    return policy


def run_episode_spec(spec: EpisodeSpec) -> EpisodeResult:
    cfg = WorkspaceConfig(drop_probability=spec.drop_probability)
    external = spec.policy.startswith("exec:")
    env = TabletopEnv(spec.task_id, spec.seed, cfg=cfg, render_rasters=external)
    policy = make_policy(env, spec)
    strategy = Strategy(kind=spec.strategy_kind, k_threshold=spec.k_threshold)
    try:
        result = run_episode(policy, env, strategy, step_budget=spec.step_budget)
    finally:
        close = getattr(policy, "close", None)
        if close is not None:
            close()
    if not spec.keep_transcript:
        result.transcript = []
    return result


@dataclass
class StrategyRow:
    task_id: str
    strategy: str
    mean_score: float
    success_rate: float
    mean_plan_calls: float
    episodes: int
    sem_score: float = 0.0
    sem_plan_calls: float = 0.0


def _run_specs(
    specs: list[EpisodeSpec],
    parallel: int = 1,
    runner: Callable[[EpisodeSpec], EpisodeResult] = run_episode_spec,
) -> list[EpisodeResult]:
    if parallel <= 1:
        results = [runner(spec) for spec in specs]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(runner, specs, chunksize=8))
    # Deterministic reduce regardless of executor scheduling.
    results.sort(key=lambda r: (r.task_id, r.strategy, r.seed))
    return results


def compare_strategies(
    task_ids: list[str],
    seeds: list[int],
    noise: NoiseConfig | None = None,
    drop_probability: float = 0.0,
    k_threshold: int = DEFAULT_K,
    parallel: int = 1,
    strategies: tuple[str, ...] = STRATEGY_KINDS,
) -> tuple[list[StrategyRow], list[EpisodeResult]]:
    """Paired design: every strategy sees the same (task, seed) episodes."""
    noise = noise or NoiseConfig()
    specs = [
        EpisodeSpec(
            task_id=task_id,
            seed=seed,
            strategy_kind=kind,
            k_threshold=k_threshold,
            eps_plan=noise.eps_plan,
            eps_act=noise.eps_act,
            drop_probability=drop_probability,
        )
        for task_id in task_ids
        for kind in strategies
        for seed in seeds
    ]
    results = _run_specs(specs, parallel=parallel)
    rows = []
    for task_id in task_ids:
        for kind in strategies:
            bucket = [r for r in results if r.task_id == task_id and r.strategy == kind]
            scores = [r.score for r in bucket]
            plans = [float(r.plan_calls) for r in bucket]
            n = len(bucket)
            rows.append(
                StrategyRow(
                    task_id=task_id,
                    strategy=kind,
                    mean_score=statistics.fmean(scores),
                    success_rate=sum(r.success for r in bucket) / n,
                    mean_plan_calls=statistics.fmean(plans),
                    episodes=n,
                    sem_score=_sem(scores),
                    sem_plan_calls=_sem(plans),
                )
            )
    return rows, results


def _sem(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.stdev(values) / len(values) ** 0.5


COMPARISON_COLUMNS = (
    "task_id",
    "strategy",
    "mean_score",
    "success_rate",
    "mean_plan_calls",
    "episodes",
)


def comparison_csv(rows: list[StrategyRow]) -> str:
    lines = [",".join(COMPARISON_COLUMNS)]
    for row in rows:
        lines.append(
            f"{row.task_id},{row.strategy},{row.mean_score:.4f},"
            f"{row.success_rate:.4f},{row.mean_plan_calls:.4f},{row.episodes}"
        )
    return "\n".join(lines) + "\n"


def comparison_table(rows: list[StrategyRow]) -> str:
    header = ["task_id", "strat", "score", "success", "plans", "episodes"]
    body = [
        [
            row.task_id,
            row.strategy,
            f"{row.mean_score:.1f}",
            f"{row.success_rate:.3f}",
            f"{row.mean_plan_calls:.2f}",
            str(row.episodes),
        ]
        for row in rows
    ]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for r in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"
