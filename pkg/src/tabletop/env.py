"""Seeded episode environment wrapping scene, goal, stepping and observation.

Each episode owns its RNG streams, derived from the episode seed: one for
scene sampling, one for world dynamics and observation noise, and further
streams for policies, so episodes are reproducible and independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .goals import GoalCondition
from .tasks import sample_scene
from .world import (
    Action,
    Observation,
    SceneState,
    StepOutcome,
    WorkspaceConfig,
    render,
    step,
)

_EPS = 1e-9


def _stream(seed: int, lane: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, lane])))


def scene_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 0)


def dynamics_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 1)


def policy_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 2)


def noise_rng(seed: int) -> np.random.Generator:
    return _stream(seed, 3)


def episode_seed(master_seed: int, index: int) -> int:
    """Stable per-episode seed derived from a master seed."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


@dataclass
class SymbolicSnapshot:
    """Debug/oracle channel: the full symbolic scene plus the structured goal."""

    task_id: str
    goal_text: str
    scene: SceneState
    goal: GoalCondition

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "goal_text": self.goal_text,
            "scene": self.scene.to_json(),
            "goal": self.goal.to_json(),
        }

    @staticmethod
    def from_json(data: dict) -> "SymbolicSnapshot":
        return SymbolicSnapshot(
            task_id=data["task_id"],
            goal_text=data["goal_text"],
            scene=SceneState.from_json(data["scene"]),
            goal=GoalCondition.from_json(data["goal"]),
        )


class TabletopEnv:
    """One task episode: sampled scene, reward bookkeeping, done detection."""

    def __init__(
        self,
        task_id: str,
        seed: int,
        cfg: WorkspaceConfig | None = None,
        render_rasters: bool = False,
        obs_noisy: bool = False,
        scene=None,
    ):
        self.task_id = task_id
        self.seed = seed
        self.cfg = cfg or WorkspaceConfig()
        self.render_rasters = render_rasters
        self.obs_noisy = obs_noisy
        self._dyn_rng = dynamics_rng(seed)
        sampled = scene if scene is not None else sample_scene(task_id, scene_rng(seed))
        self.state: SceneState = sampled.state
        self.initial_state: SceneState = sampled.state.copy()
        self.goal: GoalCondition = sampled.goal
        self.goal_text: str = sampled.goal_text
        self.best_fraction = 0.0
        self.cumulative_reward = 0.0
        self.done = False
        self.steps = 0

    def satisfied_fraction(self) -> float:
        return self.goal.satisfied_fraction(self.state)

    def observe(self) -> Observation:
        symbolic = SymbolicSnapshot(
            task_id=self.task_id,
            goal_text=self.goal_text,
            scene=self.state.copy(),
            goal=self.goal,
        )
        if not self.render_rasters:
            return Observation(color=None, depth=None, symbolic=symbolic)
        obs = render(self.state, self.cfg, rng=self._dyn_rng, noisy=self.obs_noisy)
        obs.symbolic = symbolic
        return obs

    def step(self, action: Action) -> tuple[Observation, float, bool, StepOutcome]:
        self.state, outcome = step(
            self.state, action, self.goal, self.cfg, self._dyn_rng,
            prior_progress=self.best_fraction,
        )
        self.best_fraction = max(self.best_fraction, self.satisfied_fraction())
        self.cumulative_reward += outcome.reward
        self.done = self.done or outcome.done
        self.steps += 1
        return self.observe(), outcome.reward, outcome.done, outcome
