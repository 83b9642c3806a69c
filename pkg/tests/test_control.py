from __future__ import annotations

import numpy as np
import pytest

from tabletop.control import (
    EpisodeSpec,
    Strategy,
    compare_strategies,
    default_step_budget,
    run_episode,
    run_episode_spec,
)
from tabletop.env import TabletopEnv, policy_rng
from tabletop.oracle import PlanningImpossibleError, oracle_decompose
from tabletop.policy import NoiseConfig, OraclePolicy, PolicyError
from tabletop.subtasks import ObjectSelector, SubTask, TargetArea
from tabletop.world import Action, Observation, StepOutcome

DUMMY_SUBTASK = SubTask(
    source=ObjectSelector("block", "red", "big"), target=TargetArea("top-left")
)
DUMMY_ACTION = Action(pick=(0.1, 0.1, 0.0), place=(0.9, 0.4, 0.0))


class ScriptedGoal:
    def __init__(self, env):
        self._env = env

    @property
    def sub_goals(self):
        return tuple(range(self._env.n_subgoals))

    def satisfied_count(self, state):
        return self._env.sat


class ScriptedEnv:
    """Environment emitting a fixed success/failure sequence."""

    def __init__(self, outcomes, n_subgoals=None):
        self.outcomes = list(outcomes)
        self.n_subgoals = n_subgoals or max(1, sum(outcomes))
        self.sat = 0
        self.steps_done = 0
        self.done = False
        self.task_id = "scripted"
        self.seed = 0
        self.goal_text = "scripted goal"
        self.goal = ScriptedGoal(self)
        self.state = None

    def observe(self):
        return Observation(None, None, None)

    def satisfied_fraction(self):
        return self.sat / self.n_subgoals

    def step(self, action):
        success = self.outcomes[self.steps_done] if self.steps_done < len(self.outcomes) else 0
        self.steps_done += 1
        reward = 0.0
        if success:
            self.sat += 1
            reward = 1.0 / self.n_subgoals
        done = self.sat == self.n_subgoals
        self.done = done
        return self.observe(), reward, done, StepOutcome(reward, done, executed=True)


class ScriptedPolicy:
    """Returns a fixed sub-task/action; records the timestep of each plan call."""

    def __init__(self, env):
        self.env = env
        self.plan_events: list[int] = []

    def plan(self, obs, goal_text):
        self.plan_events.append(self.env.steps_done)
        return DUMMY_SUBTASK

    def act(self, obs, goal_text, subtask):
        return DUMMY_ACTION


def golden_trace(outcomes, strategy, n_subgoals=None):
    env = ScriptedEnv(outcomes, n_subgoals)
    policy = ScriptedPolicy(env)
    result = run_episode(policy, env, strategy, step_budget=len(outcomes) + 5)
    return policy.plan_events, result


def test_golden_trace_strategy_c_three_failures_then_success():
    # K = 2: replans exactly at t = 0 and after the third consecutive failure.
    events, result = golden_trace([0, 0, 0, 1], Strategy("c", 2))
    assert events == [0, 3]
    assert result.plan_calls == 2
    assert result.steps == 4
    assert result.success


def test_golden_trace_strategy_b_plans_every_step():
    events, result = golden_trace([0, 0, 0, 1], Strategy("b"))
    assert events == [0, 1, 2, 3]
    assert result.plan_calls == 4


def test_golden_trace_strategy_a_never_replans_on_failure():
    events, result = golden_trace([0, 0, 0, 1], Strategy("a"))
    assert events == [0]
    assert result.plan_calls == 1
    assert result.success


def test_golden_trace_all_success_plans_once_per_step():
    for kind in ("a", "b", "c"):
        events, result = golden_trace([1, 1, 1], Strategy(kind), n_subgoals=3)
        assert events == [0, 1, 2], kind
        assert result.plan_calls == 3
        assert result.success and result.score == 100.0


def test_golden_trace_higher_k_delays_replanning():
    events, _ = golden_trace([0, 0, 0, 0, 0, 1], Strategy("c", 4))
    assert events == [0, 5]


def test_plan_event_dominance_on_random_scripts():
    rng = np.random.default_rng(0)
    for _ in range(50):
        outcomes = rng.integers(0, 2, size=12).tolist()
        if sum(outcomes) == 0:
            outcomes[-1] = 1
        traces = {}
        for kind in ("a", "b", "c"):
            events, _ = golden_trace(list(outcomes), Strategy(kind), n_subgoals=sum(outcomes))
            traces[kind] = set(events)
        assert traces["c"] <= traces["b"]
        assert traces["a"] <= traces["c"]


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy("x")
    with pytest.raises(ValueError):
        Strategy("c", -1)


def test_oracle_plan_calls_equal_decomposition_length():
    for task_id, seed in [
        ("put-block-into-matching-bowl", 0),
        ("stack-block-in-absolute-area", 1),
        ("put-hidden-blocks-in-pyramid-into-matching-bowls", 2),
    ]:
        env = TabletopEnv(task_id, seed)
        plan = oracle_decompose(env.initial_state, env.goal, policy_rng(seed))
        result = run_episode(OraclePolicy(policy_rng(seed), cfg=env.cfg), env, Strategy("c"))
        assert result.score == 100.0 and result.success
        assert result.steps == len(plan)
        assert result.plan_calls == len(plan)


def test_default_budget_is_three_times_plan_plus_five():
    env = TabletopEnv("put-block-into-matching-bowl", 4)
    plan = oracle_decompose(env.initial_state, env.goal, policy_rng(env.seed ^ 0x5BD1E995))
    assert default_step_budget(env) == 3 * len(plan) + 5


def test_strategy_a_deadlocks_under_full_plan_corruption():
    result = run_episode_spec(
        EpisodeSpec("put-block-into-matching-bowl", 3, "a", eps_plan=1.0)
    )
    budget = default_step_budget(TabletopEnv("put-block-into-matching-bowl", 3))
    assert result.steps == budget
    assert not result.success
    assert result.score < 100.0


def test_policy_errors_count_as_failed_steps():
    class FailingPolicy:
        def plan(self, obs, goal_text):
            return DUMMY_SUBTASK

        def act(self, obs, goal_text, subtask):
            raise PolicyError("boom")

    env = ScriptedEnv([1])
    result = run_episode(FailingPolicy(), env, Strategy("c"), step_budget=3)
    assert result.steps == 3
    assert result.score == 0.0
    assert all(e.error for e in result.transcript)


def test_replan_impossible_ends_episode_gracefully():
    class StuckPolicy:
        def plan(self, obs, goal_text):
            raise PlanningImpossibleError("unreachable")

        def act(self, obs, goal_text, subtask):
            raise AssertionError("never called")

    env = ScriptedEnv([1, 1], n_subgoals=2)
    result = run_episode(StuckPolicy(), env, Strategy("c"), step_budget=5)
    assert result.steps == 0
    assert result.score == 0.0


def test_score_matches_cumulative_reward_noiseless():
    # Two independent computations of the same quantity on oracle episodes.
    from tabletop import tasks

    rng = np.random.default_rng(1)
    for _ in range(100):
        task_id = tasks.all_task_ids()[int(rng.integers(23))]
        seed = int(rng.integers(10_000))
        env = TabletopEnv(task_id, seed)
        result = run_episode(OraclePolicy(policy_rng(seed), cfg=env.cfg), env, Strategy("c"))
        assert result.score == pytest.approx(100.0 * env.cumulative_reward, abs=1e-9)
        assert result.score == pytest.approx(100.0 * result.final_fraction, abs=1e-9)


def test_cumulative_reward_stays_in_unit_interval_under_noise():
    # Re-satisfying a sub-goal that noise knocked out never pays twice.
    for seed in range(30):
        env = TabletopEnv(
            "put-block-into-matching-bowl", seed,
        )
        policy = OraclePolicy(policy_rng(seed), cfg=env.cfg)
        from tabletop.policy import NoisyPolicy, with_noise
        from tabletop.env import noise_rng

        noisy = with_noise(policy, NoiseConfig(eps_plan=0.4, eps_act=0.4, seed=seed),
                           noise_rng(seed))
        run_episode(noisy, env, Strategy("c"))
        assert -1e-12 <= env.cumulative_reward <= 1.0 + 1e-9
        if env.done:
            assert env.cumulative_reward == pytest.approx(1.0, abs=1e-9)


def test_compare_strategies_noiseless_rows_identical():
    rows, results = compare_strategies(
        ["put-block-into-matching-bowl", "pick-and-place-primitive"],
        seeds=[0, 1, 2],
    )
    by_task = {}
    for row in rows:
        by_task.setdefault(row.task_id, []).append(
            (row.mean_score, row.success_rate, row.mean_plan_calls, row.episodes)
        )
    for task_id, entries in by_task.items():
        assert len(set(entries)) == 1, task_id
    # paired design: identical seed sets per strategy
    seeds_by_strategy = {}
    for r in results:
        seeds_by_strategy.setdefault((r.task_id, r.strategy), set()).add(r.seed)
    assert len(set(map(frozenset, seeds_by_strategy.values()))) == 1


def test_compare_outputs_have_declared_columns():
    from tabletop.control import COMPARISON_COLUMNS, comparison_csv, comparison_table

    rows, _ = compare_strategies(["pick-and-place-primitive"], seeds=[0])
    csv_text = comparison_csv(rows)
    assert csv_text.splitlines()[0] == ",".join(COMPARISON_COLUMNS)
    assert len(csv_text.splitlines()) == 1 + len(rows)
    table = comparison_table(rows)
    assert "task_id" in table and "pick-and-place-primitive" in table
