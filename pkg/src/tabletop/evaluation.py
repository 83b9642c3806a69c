"""Metric computation and reporting: scores, success rates, planning probe."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .control import EpisodeResult
from .env import TabletopEnv, episode_seed, policy_rng
from .oracle import oracle_decompose, valid_next_subtasks
from .policy import PolicyError, PolicyInterface
from .subtasks import subtask_equivalent
from .world import Observation, WorkspaceConfig


def score_episode(result: EpisodeResult) -> float:
    """Episode score in [0, 100]: percentage of satisfied sub-goals at the end."""
    return result.score


@dataclass
class TaskMetrics:
    task_id: str
    mean_score: float
    success_rate: float
    mean_plan_calls: float
    episodes: int


def aggregate_results(results: list[EpisodeResult]) -> list[TaskMetrics]:
    """Per-task aggregation; invariant under episode ordering."""
    by_task: dict[str, list[EpisodeResult]] = {}
    for result in results:
        by_task.setdefault(result.task_id, []).append(result)
    rows = []
    for task_id in sorted(by_task):
        bucket = by_task[task_id]
        rows.append(
            TaskMetrics(
                task_id=task_id,
                mean_score=statistics.fmean(r.score for r in bucket),
                success_rate=sum(r.success for r in bucket) / len(bucket),
                mean_plan_calls=statistics.fmean(float(r.plan_calls) for r in bucket),
                episodes=len(bucket),
            )
        )
    return rows


def metrics_csv(rows: list[TaskMetrics]) -> str:
    lines = ["task_id,mean_score,success_rate,mean_plan_calls,episodes"]
    for r in rows:
        lines.append(
            f"{r.task_id},{r.mean_score:.4f},{r.success_rate:.4f},"
            f"{r.mean_plan_calls:.4f},{r.episodes}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Planning-accuracy probe: sample mid-episode states from expert rollouts and
# check the policy's predicted sub-task against the enumerated valid set.


@dataclass
class ProbeState:
    """A mid-episode snapshot: everything a policy's plan() call needs."""

    task_id: str
    goal_text: str
    goal: object
    state: object

    def observation(self) -> Observation:
        from .env import SymbolicSnapshot

        return Observation(
            color=None,
            depth=None,
            symbolic=SymbolicSnapshot(
                task_id=self.task_id,
                goal_text=self.goal_text,
                scene=self.state.copy(),
                goal=self.goal,
            ),
        )


def _mid_episode_states(task_id: str, seed: int) -> list[ProbeState]:
    """Scene snapshots before each expert step of one episode."""
    env = TabletopEnv(task_id, seed, cfg=WorkspaceConfig())
    plan = oracle_decompose(env.initial_state, env.goal, policy_rng(seed))
    snapshots = []
    for _, action in plan:
        snapshots.append(
            ProbeState(task_id, env.goal_text, env.goal, env.state.copy())
        )
        env.step(action)
    return snapshots


def planning_accuracy(
    policy: PolicyInterface,
    task_ids: list[str],
    samples_per_task: int = 10,
    episodes_per_task: int = 2,
    seed: int = 0,
) -> tuple[float, dict[str, float]]:
    """Fraction of sampled timesteps whose predicted sub-task is valid."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 777])))
    per_task: dict[str, float] = {}
    hits_total = 0
    n_total = 0
    for task_id in task_ids:
        pool: list[ProbeState] = []
        for ep in range(episodes_per_task):
            pool.extend(_mid_episode_states(task_id, episode_seed(seed, ep * 131 + 7)))
        idx = rng.integers(0, len(pool), size=samples_per_task)
        hits = 0
        for i in idx:
            probe = pool[int(i)]
            valid = valid_next_subtasks(probe.state, probe.goal)
            try:
                predicted = policy.plan(probe.observation(), probe.goal_text)
            except PolicyError:
                continue
            if subtask_equivalent(predicted, valid, probe.state):
                hits += 1
        per_task[task_id] = hits / samples_per_task
        hits_total += hits
        n_total += samples_per_task
    overall = hits_total / n_total if n_total else 0.0
    return overall, per_task


def probe_csv(overall: float, per_task: dict[str, float]) -> str:
    lines = ["task_id,planning_accuracy"]
    for task_id in sorted(per_task):
        lines.append(f"{task_id},{per_task[task_id]:.4f}")
    lines.append(f"overall,{overall:.4f}")
    return "\n".join(lines) + "\n"
