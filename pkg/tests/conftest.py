from __future__ import annotations

import numpy as np
import pytest

from tabletop.goals import GoalCondition, InContainerOfColor, SubGoal
from tabletop.tasks import SampledScene
from tabletop.world import COLORS, ObjectInstance, SceneState


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


@pytest.fixture
def make_rng():
    return rng


def grid_matching_scene(n: int) -> SampledScene:
    """Hand-built scene: n blocks on one row, n matching bowls on another."""
    assert n <= len(COLORS)
    colors = list(COLORS)[:n]
    state = SceneState()
    sub_goals = []
    for i, color in enumerate(colors):
        x = 0.08 + i * (0.84 / max(1, n - 1))
        state.add(ObjectInstance(id=i + 1, kind="bowl", color=color, size=None, pose=(x, 0.38, 0.0)))
    for i, color in enumerate(colors):
        x = 0.08 + i * (0.84 / max(1, n - 1))
        state.add(
            ObjectInstance(id=n + i + 1, kind="block", color=color, size="big", pose=(x, 0.1, 0.0))
        )
        sub_goals.append(
            SubGoal(n + i + 1, InContainerOfColor("bowl", frozenset({color})))
        )
    return SampledScene(state, "Put the blocks in the bowls with matching colors.",
                        GoalCondition(tuple(sub_goals)))
