"""Rule-based planner with full scene access.

Produces dependency-ordered decompositions (stacks built bottom-up, occluders
relocated before hidden blocks, occupied precision targets cleared first) and
the expert action for each sub-task.  Also enumerates every sub-task that can
validly come next from a given state, which backs the planning-accuracy probe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Rect, rect_contains_point, rect_from_center, rects_overlap
from .goals import GoalCondition, InArea, InContainerOfColor, NearPoint, OnObjectPose, OnObjectZone, SubGoal
from .subtasks import (
    ObjectSelector,
    SubTask,
    TargetArea,
    TargetObject,
    TargetOffset,
    TargetTable,
    resolution_key,
)
from .tokenizer import ActionCodec
from .world import Action, ObjectInstance, SceneState, WorkspaceConfig, step


class AlreadyDoneError(Exception):
    """Raised when a next sub-task is requested for a solved goal."""


class PlanningImpossibleError(Exception):
    pass


@dataclass(frozen=True)
class Move:
    """A concrete planned pick-and-place: which object goes where."""

    object_id: int
    subtask: SubTask
    subgoal: SubGoal | None = None  # None marks a relocation
    target_id: int | None = None  # concrete container/support instance

    @property
    def is_relocation(self) -> bool:
        return self.subgoal is None


def _selector(obj: ObjectInstance) -> ObjectSelector:
    return ObjectSelector(kind=obj.kind, color=obj.color, size=obj.size)


def _pickable_leaves_above(state: SceneState, oid: int) -> list[ObjectInstance]:
    return [o for o in state.blockers_above(oid) if not state.occupants(o.id)]


def _point_blockers(state: SceneState, x: float, y: float) -> list[ObjectInstance]:
    out = []
    for o in state.iter_sorted():
        if o.kind != "block" or not rect_contains_point(o.rect, x, y):
            continue
        if state.occupants(o.id):
            out.extend(_pickable_leaves_above(state, o.id))
        else:
            out.append(o)
    return out


def _target_ready(state: SceneState, goal: GoalCondition, sg: SubGoal) -> bool:
    pred = sg.predicate
    if isinstance(pred, OnObjectPose):
        target_sg = goal.subgoal_for(pred.target_id)
        if target_sg is not None and not target_sg.satisfied(state):
            return False
        return not state.occupants(pred.target_id)
    if isinstance(pred, NearPoint):
        return not any(
            o.kind == "block" and rect_contains_point(o.rect, pred.x, pred.y)
            for o in state.iter_sorted()
        )
    return True


def _target_blockers(state: SceneState, goal: GoalCondition, sg: SubGoal) -> list[ObjectInstance]:
    pred = sg.predicate
    if isinstance(pred, OnObjectPose):
        target_sg = goal.subgoal_for(pred.target_id)
        if target_sg is not None and not target_sg.satisfied(state):
            return []  # the target's own move will clear it
        return _pickable_leaves_above(state, pred.target_id)
    if isinstance(pred, NearPoint):
        return _point_blockers(state, pred.x, pred.y)
    return []


def _concrete_targets(state: SceneState, sg: SubGoal) -> list[tuple[int | None, object]]:
    pred = sg.predicate
    if isinstance(pred, (OnObjectPose, OnObjectZone)):
        target = state.object(pred.target_id)
        return [(target.id, TargetObject(_selector(target)))]
    if isinstance(pred, InContainerOfColor):
        return [
            (o.id, TargetObject(_selector(o)))
            for o in state.iter_sorted()
            if o.kind == pred.container_kind and o.color in pred.colors
        ]
    if isinstance(pred, InArea):
        return [(None, TargetArea(pred.area_name))]
    if isinstance(pred, NearPoint):
        anchor = state.object(pred.anchor_id)
        return [(None, TargetOffset(_selector(anchor), pred.direction))]
    raise PlanningImpossibleError(f"unsupported predicate {pred!r}")


def ready_moves(state: SceneState, goal: GoalCondition) -> list[Move]:
    """All moves that can validly come first from this state.

    Goal moves whose object is pickable and whose target is ready, plus the
    relocations needed to unblock the rest.  A relocation is skipped when the
    blocking object's own goal move is already executable, since executing it
    clears the blockage without a detour.
    """
    unsatisfied = goal.unsatisfied(state)
    moves: list[Move] = []
    ready_goal_ids: set[int] = set()
    for sg in unsatisfied:
        if state.occupants(sg.object_id) or not _target_ready(state, goal, sg):
            continue
        obj = state.object(sg.object_id)
        for target_id, target in _concrete_targets(state, sg):
            moves.append(
                Move(
                    object_id=sg.object_id,
                    subtask=SubTask(source=_selector(obj), target=target),
                    subgoal=sg,
                    target_id=target_id,
                )
            )
        ready_goal_ids.add(sg.object_id)

    relocation_ids: set[int] = set()
    for sg in unsatisfied:
        blockers = list(_pickable_leaves_above(state, sg.object_id))
        blockers.extend(_target_blockers(state, goal, sg))
        for blocker in blockers:
            if blocker.id in ready_goal_ids or blocker.id in relocation_ids:
                continue
            relocation_ids.add(blocker.id)
    for oid in sorted(relocation_ids):
        obj = state.object(oid)
        moves.append(
            Move(
                object_id=oid,
                subtask=SubTask(source=_selector(obj), target=TargetTable()),
            )
        )
    return moves


def valid_next_subtasks(state: SceneState, goal: GoalCondition) -> list[SubTask]:
    """Unique sub-tasks that start at least one valid completion ordering."""
    if goal.satisfied_fraction(state) >= 1.0:
        raise AlreadyDoneError("goal already satisfied")
    moves = ready_moves(state, goal)
    unique: dict[str, SubTask] = {}
    for move in moves:
        unique.setdefault(move.subtask.text, move.subtask)
    if not unique:
        raise PlanningImpossibleError("no executable sub-task from this state")
    return [unique[text] for text in sorted(unique)]


def choose_subtask(state: SceneState, goal: GoalCondition, rng: np.random.Generator) -> SubTask:
    options = valid_next_subtasks(state, goal)
    return options[int(rng.integers(len(options)))]


# ---------------------------------------------------------------------------
# Action synthesis


def _pending_precision_points(state: SceneState, goal: GoalCondition) -> list[Rect]:
    rects = []
    for sg in goal.unsatisfied(state):
        if isinstance(sg.predicate, NearPoint):
            rects.append(rect_from_center(sg.predicate.x, sg.predicate.y, 0.06, 0.06))
    return rects


def find_free_spot(
    state: SceneState,
    footprint: tuple[float, float],
    rng: np.random.Generator,
    region: Rect | None = None,
    avoid: list[Rect] | None = None,
    cfg: WorkspaceConfig | None = None,
    gap: float = 0.01,
    attempts: int = 300,
) -> tuple[float, float]:
    cfg = cfg or WorkspaceConfig()
    fx, fy = footprint
    if region is None:
        region = (0.0, 0.0, cfg.bounds_x, cfg.bounds_y)
    lo_x, lo_y = region[0] + fx / 2 + gap, region[1] + fy / 2 + gap
    hi_x, hi_y = region[2] - fx / 2 - gap, region[3] - fy / 2 - gap
    if lo_x >= hi_x or lo_y >= hi_y:
        raise PlanningImpossibleError("no room in target region")
    obstacles = [o.rect for o in state.iter_sorted()] + (avoid or [])
    for _ in range(attempts):
        x = rng.uniform(lo_x, hi_x)
        y = rng.uniform(lo_y, hi_y)
        rect = rect_from_center(x, y, fx, fy)
        if not any(rects_overlap(rect, r, gap) for r in obstacles):
            return x, y
    raise PlanningImpossibleError("no free spot found")


def _place_pose_for_move(
    state: SceneState, goal: GoalCondition, move: Move, rng: np.random.Generator,
    cfg: WorkspaceConfig,
) -> tuple[float, float, float]:
    obj = state.object(move.object_id)
    if move.is_relocation:
        avoid = _pending_precision_points(state, goal)
        x, y = find_free_spot(state, obj.footprint, rng, avoid=avoid, cfg=cfg)
        return (x, y, obj.pose[2])
    pred = move.subgoal.predicate
    if isinstance(pred, (OnObjectPose, OnObjectZone, InContainerOfColor)):
        target = state.object(move.target_id)
        return target.pose
    if isinstance(pred, InArea):
        x, y = find_free_spot(
            state, obj.footprint, rng, region=pred.rect, cfg=cfg
        )
        return (x, y, 0.0)
    if isinstance(pred, NearPoint):
        return (pred.x, pred.y, 0.0)
    raise PlanningImpossibleError(f"unsupported predicate {pred!r}")


def action_for_move(
    state: SceneState,
    goal: GoalCondition,
    move: Move,
    rng: np.random.Generator,
    cfg: WorkspaceConfig | None = None,
    codec: ActionCodec | None = None,
) -> Action:
    cfg = cfg or WorkspaceConfig()
    obj = state.object(move.object_id)
    place = _place_pose_for_move(state, goal, move, rng, cfg)
    action = Action(pick=obj.pose, place=place)
    codec = codec or ActionCodec()
    return codec.quantize(action)


def action_for_subtask(
    state: SceneState,
    goal: GoalCondition,
    subtask: SubTask,
    rng: np.random.Generator,
    cfg: WorkspaceConfig | None = None,
    codec: ActionCodec | None = None,
) -> Action:
    """Expert action for a sub-task; wrong sub-tasks are executed faithfully."""
    cfg = cfg or WorkspaceConfig()
    codec = codec or ActionCodec()
    key = resolution_key(subtask, state)
    candidates = [
        m for m in ready_moves(state, goal) if resolution_key(m.subtask, state) == key
    ]
    if candidates:
        move = min(candidates, key=lambda m: (m.object_id, m.target_id or -1))
        return action_for_move(state, goal, move, rng, cfg, codec)
    return _literal_action(state, subtask, rng, cfg, codec)


def _literal_action(
    state: SceneState,
    subtask: SubTask,
    rng: np.random.Generator,
    cfg: WorkspaceConfig,
    codec: ActionCodec,
) -> Action:
    """Best-effort execution of a sub-task outside the oracle plan."""
    source_ids = sorted(subtask.source.resolve(state))
    if not source_ids:
        return codec.quantize(Action(pick=(0.0, 0.0, 0.0), place=(0.0, 0.0, 0.0)))
    pickable = [oid for oid in source_ids if not state.occupants(oid)]
    src = state.object(pickable[0] if pickable else source_ids[0])

    target = subtask.target
    if isinstance(target, TargetObject):
        ids = sorted(target.selector.resolve(state))
        if ids:
            place = state.object(ids[0]).pose
        else:
            x, y = find_free_spot(state, src.footprint, rng, cfg=cfg)
            place = (x, y, 0.0)
    elif isinstance(target, TargetArea):
        from .geometry import area_rect

        rect = area_rect(target.name, cfg.bounds_x, cfg.bounds_y)
        x, y = find_free_spot(state, src.footprint, rng, region=rect, cfg=cfg)
        place = (x, y, 0.0)
    elif isinstance(target, TargetOffset):
        ids = sorted(target.selector.resolve(state))
        if ids:
            anchor = state.object(ids[0])
            dx, dy = {
                "left of": (-0.1, 0.0),
                "right of": (0.1, 0.0),
                "above": (0.0, 0.1),
                "below": (0.0, -0.1),
            }[target.direction]
            x = min(max(anchor.pose[0] + dx, 0.0), cfg.bounds_x)
            y = min(max(anchor.pose[1] + dy, 0.0), cfg.bounds_y)
            place = (x, y, 0.0)
        else:
            x, y = find_free_spot(state, src.footprint, rng, cfg=cfg)
            place = (x, y, 0.0)
    else:  # TargetTable
        x, y = find_free_spot(state, src.footprint, rng, cfg=cfg)
        place = (x, y, src.pose[2])
    return codec.quantize(Action(pick=src.pose, place=place))


def oracle_decompose(
    state: SceneState,
    goal: GoalCondition,
    rng: np.random.Generator,
    cfg: WorkspaceConfig | None = None,
    codec: ActionCodec | None = None,
) -> list[tuple[SubTask, Action]]:
    """Dependency-ordered expert decomposition.

    Executing the returned actions in order on the input state with the drop
    hazard disabled reaches a fully satisfied goal.  Order among independent
    sub-tasks is a seeded random choice at every step.
    """
    cfg = cfg or WorkspaceConfig()
    if cfg.drop_probability != 0.0:
        cfg = WorkspaceConfig()
    codec = codec or ActionCodec()
    sim = state.copy()
    plan: list[tuple[SubTask, Action]] = []
    budget = 4 * len(goal.sub_goals) + 24
    while goal.satisfied_fraction(sim) < 1.0:
        if len(plan) >= budget:
            raise PlanningImpossibleError(
                f"no progress after {len(plan)} moves; goal unreachable"
            )
        subtask = choose_subtask(sim, goal, rng)
        action = action_for_subtask(sim, goal, subtask, rng, cfg, codec)
        sim, _ = step(sim, action, goal, cfg, rng)
        plan.append((subtask, action))
    return plan
