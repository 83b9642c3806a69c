"""Goal conditions: per-sub-goal predicates over scene states.

A goal is a list of sub-goals, one per required pick-and-place step.  Each
sub-goal binds a concrete object to a target predicate and is re-evaluated
from the scene alone, never from episode history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Rect, area_rect, overlap_fraction
from .world import (
    SQUARE_YAW_PERIOD,
    TOL_POS,
    TOL_YAW,
    ZONE_OVERLAP_THRESHOLD,
    SceneState,
    WorldError,
    pose_match,
)


@dataclass(frozen=True)
class OnObjectPose:
    """Object rests directly on `target_id`, aligned within pose tolerances."""

    target_id: int
    tol_pos: float = TOL_POS
    tol_yaw: float = TOL_YAW
    yaw_period: float = SQUARE_YAW_PERIOD

    match_mode = "pose"

    def satisfied(self, state: SceneState, obj_id: int) -> bool:
        obj = state.object(obj_id)
        if obj.supported_by != self.target_id:
            return False
        target = state.object(self.target_id)
        return pose_match(
            state, obj_id, target.pose, self.tol_pos, self.tol_yaw, self.yaw_period
        )

    def to_json(self) -> dict:
        return {
            "type": "on_object_pose",
            "target_id": self.target_id,
            "tol_pos": self.tol_pos,
            "tol_yaw": self.tol_yaw,
            "yaw_period": self.yaw_period,
        }


@dataclass(frozen=True)
class OnObjectZone:
    """Object footprint overlaps a specific bowl or zone above the threshold."""

    target_id: int
    threshold: float = ZONE_OVERLAP_THRESHOLD

    match_mode = "zone"

    def satisfied(self, state: SceneState, obj_id: int) -> bool:
        obj = state.object(obj_id)
        target = state.object(self.target_id)
        return overlap_fraction(obj.rect, target.rect) > self.threshold

    def to_json(self) -> dict:
        return {"type": "on_object_zone", "target_id": self.target_id, "threshold": self.threshold}


@dataclass(frozen=True)
class InContainerOfColor:
    """Object sits in some bowl/zone whose color is in the allowed set."""

    container_kind: str  # "bowl" | "zone"
    colors: frozenset[str]
    threshold: float = ZONE_OVERLAP_THRESHOLD

    match_mode = "zone"

    def satisfied(self, state: SceneState, obj_id: int) -> bool:
        obj = state.object(obj_id)
        for other in state.iter_sorted():
            if other.kind != self.container_kind or other.color not in self.colors:
                continue
            if overlap_fraction(obj.rect, other.rect) > self.threshold:
                return True
        return False

    def to_json(self) -> dict:
        return {
            "type": "in_container_of_color",
            "container_kind": self.container_kind,
            "colors": sorted(self.colors),
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class InArea:
    """Object footprint lies mostly inside a named workspace quadrant."""

    area_name: str
    bounds_x: float = 1.0
    bounds_y: float = 0.5
    threshold: float = ZONE_OVERLAP_THRESHOLD

    match_mode = "zone"

    @property
    def rect(self) -> Rect:
        return area_rect(self.area_name, self.bounds_x, self.bounds_y)

    def satisfied(self, state: SceneState, obj_id: int) -> bool:
        obj = state.object(obj_id)
        return overlap_fraction(obj.rect, self.rect) > self.threshold

    def to_json(self) -> dict:
        return {
            "type": "in_area",
            "area_name": self.area_name,
            "bounds_x": self.bounds_x,
            "bounds_y": self.bounds_y,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class NearPoint:
    """Object center within `tol_pos` of a fixed point; yaw is free.

    The anchor fields record how the point was derived (offset from a
    reference block) so the matching sub-task can be rendered as language.
    """

    x: float
    y: float
    anchor_id: int
    direction: str  # left of | right of | above | below
    tol_pos: float = TOL_POS

    match_mode = "pose"

    def satisfied(self, state: SceneState, obj_id: int) -> bool:
        obj = state.object(obj_id)
        return math.hypot(obj.pose[0] - self.x, obj.pose[1] - self.y) <= self.tol_pos

    def to_json(self) -> dict:
        return {
            "type": "near_point",
            "x": self.x,
            "y": self.y,
            "anchor_id": self.anchor_id,
            "direction": self.direction,
            "tol_pos": self.tol_pos,
        }


Predicate = OnObjectPose | OnObjectZone | InContainerOfColor | InArea | NearPoint


def predicate_from_json(data: dict) -> Predicate:
    kind = data["type"]
    if kind == "on_object_pose":
        return OnObjectPose(
            target_id=int(data["target_id"]),
            tol_pos=float(data["tol_pos"]),
            tol_yaw=float(data["tol_yaw"]),
            yaw_period=float(data["yaw_period"]),
        )
    if kind == "on_object_zone":
        return OnObjectZone(target_id=int(data["target_id"]), threshold=float(data["threshold"]))
    if kind == "in_container_of_color":
        return InContainerOfColor(
            container_kind=data["container_kind"],
            colors=frozenset(data["colors"]),
            threshold=float(data["threshold"]),
        )
    if kind == "in_area":
        return InArea(
            area_name=data["area_name"],
            bounds_x=float(data["bounds_x"]),
            bounds_y=float(data["bounds_y"]),
            threshold=float(data["threshold"]),
        )
    if kind == "near_point":
        return NearPoint(
            x=float(data["x"]),
            y=float(data["y"]),
            anchor_id=int(data["anchor_id"]),
            direction=data["direction"],
            tol_pos=float(data["tol_pos"]),
        )
    raise WorldError(f"unknown predicate type: {kind!r}")


@dataclass(frozen=True)
class SubGoal:
    object_id: int
    predicate: Predicate

    @property
    def match_mode(self) -> str:
        return self.predicate.match_mode

    def satisfied(self, state: SceneState) -> bool:
        return self.predicate.satisfied(state, self.object_id)

    def to_json(self) -> dict:
        return {"object_id": self.object_id, "predicate": self.predicate.to_json()}

    @staticmethod
    def from_json(data: dict) -> "SubGoal":
        return SubGoal(
            object_id=int(data["object_id"]),
            predicate=predicate_from_json(data["predicate"]),
        )


@dataclass(frozen=True)
class GoalCondition:
    """All sub-goals of one task instance."""

    sub_goals: tuple[SubGoal, ...] = field(default_factory=tuple)

    def satisfied_count(self, state: SceneState) -> int:
        return sum(1 for sg in self.sub_goals if sg.satisfied(state))

    def satisfied_fraction(self, state: SceneState) -> float:
        if not self.sub_goals:
            return 1.0
        return self.satisfied_count(state) / len(self.sub_goals)

    def unsatisfied(self, state: SceneState) -> list[SubGoal]:
        return [sg for sg in self.sub_goals if not sg.satisfied(state)]

    def subgoal_for(self, object_id: int) -> SubGoal | None:
        for sg in self.sub_goals:
            if sg.object_id == object_id:
                return sg
        return None

    def to_json(self) -> dict:
        return {"sub_goals": [sg.to_json() for sg in self.sub_goals]}

    @staticmethod
    def from_json(data: dict) -> "GoalCondition":
        return GoalCondition(tuple(SubGoal.from_json(e) for e in data["sub_goals"]))
