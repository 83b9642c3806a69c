"""Structured atomic instructions and their canonical sentence form.

The structured form is ground truth; the text is a deterministic view of it.
One sentence template exists per target shape, so parsing is the exact
inverse of rendering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .geometry import AREA_NAMES
from .world import COLORS, KINDS, SIZES, SceneState

DIRECTIONS = ("left of", "right of", "above", "below")


class SubTaskError(Exception):
    pass


@dataclass(frozen=True)
class ObjectSelector:
    """Descriptive reference to scene objects by kind, color and (for blocks) size."""

    kind: str
    color: str
    size: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SubTaskError(f"unknown kind {self.kind!r}")
        if self.color not in COLORS:
            raise SubTaskError(f"unknown color {self.color!r}")
        if self.kind == "block":
            if self.size not in SIZES:
                raise SubTaskError("block selector needs a size")
        elif self.size is not None:
            raise SubTaskError(f"{self.kind} selector must not carry a size")

    def resolve(self, state: SceneState) -> frozenset[int]:
        return frozenset(
            o.id
            for o in state.iter_sorted()
            if o.kind == self.kind and o.color == self.color and o.size == self.size
        )

    def describe(self) -> str:
        if self.kind == "block":
            return f"the {self.size} {self.color} block"
        return f"the {self.color} {self.kind}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "color": self.color, "size": self.size}

    @staticmethod
    def from_json(data: dict) -> "ObjectSelector":
        return ObjectSelector(kind=data["kind"], color=data["color"], size=data.get("size"))


@dataclass(frozen=True)
class TargetObject:
    selector: ObjectSelector

    @property
    def preposition(self) -> str:
        return "on" if self.selector.kind == "block" else "in"

    def describe(self) -> str:
        return f"{self.preposition} {self.selector.describe()}"

    def to_json(self) -> dict:
        return {"type": "object", **self.selector.to_json()}


@dataclass(frozen=True)
class TargetArea:
    name: str

    def __post_init__(self) -> None:
        if self.name not in AREA_NAMES:
            raise SubTaskError(f"unknown area {self.name!r}")

    def describe(self) -> str:
        return f"in the {self.name} area"

    def to_json(self) -> dict:
        return {"type": "area", "name": self.name}


@dataclass(frozen=True)
class TargetTable:
    """Any free spot on the table (used to relocate occluding blocks)."""

    def describe(self) -> str:
        return "on the table"

    def to_json(self) -> dict:
        return {"type": "table"}


@dataclass(frozen=True)
class TargetOffset:
    """A spot at a fixed offset from a reference block."""

    selector: ObjectSelector
    direction: str

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise SubTaskError(f"unknown direction {self.direction!r}")

    def describe(self) -> str:
        return f"{self.direction} {self.selector.describe()}"

    def to_json(self) -> dict:
        return {"type": "offset", "direction": self.direction, **self.selector.to_json()}


Target = TargetObject | TargetArea | TargetTable | TargetOffset


def target_from_json(data: dict) -> Target:
    kind = data["type"]
    if kind == "object":
        return TargetObject(ObjectSelector.from_json(data))
    if kind == "area":
        return TargetArea(data["name"])
    if kind == "table":
        return TargetTable()
    if kind == "offset":
        return TargetOffset(ObjectSelector.from_json(data), data["direction"])
    raise SubTaskError(f"unknown target type: {kind!r}")


@dataclass(frozen=True)
class SubTask:
    """One atomic pick-and-place instruction."""

    source: ObjectSelector
    target: Target
    verb: str = "pick_place"

    @property
    def text(self) -> str:
        return f"Pick up {self.source.describe()} and place it {self.target.describe()}."

    def to_json(self) -> dict:
        return {
            "verb": self.verb,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "text": self.text,
        }

    @staticmethod
    def from_json(data: dict) -> "SubTask":
        return SubTask(
            source=ObjectSelector.from_json(data["source"]),
            target=target_from_json(data["target"]),
            verb=data.get("verb", "pick_place"),
        )


_COLORS_RE = "|".join(sorted(COLORS))
_SIZES_RE = "|".join(SIZES)
_AREAS_RE = "|".join(AREA_NAMES)
_DIRS_RE = "|".join(DIRECTIONS)

_SENTENCE_RE = re.compile(
    rf"^Pick up the ({_SIZES_RE}) ({_COLORS_RE}) block and place it (.+)\.$"
)
_TGT_OBJECT_RE = re.compile(
    rf"^(on|in) the (?:({_SIZES_RE}) )?({_COLORS_RE}) (block|bowl|zone)$"
)
_TGT_AREA_RE = re.compile(rf"^in the ({_AREAS_RE}) area$")
_TGT_OFFSET_RE = re.compile(rf"^({_DIRS_RE}) the ({_SIZES_RE}) ({_COLORS_RE}) block$")


def parse_subtask_text(text: str) -> SubTask:
    """Inverse of SubTask.text for the canonical sentence grammar."""
    m = _SENTENCE_RE.match(text.strip())
    if m is None:
        raise SubTaskError(f"unparseable sub-task sentence: {text!r}")
    source = ObjectSelector(kind="block", color=m.group(2), size=m.group(1))
    rest = m.group(3)
    if rest == "on the table":
        return SubTask(source=source, target=TargetTable())
    tm = _TGT_AREA_RE.match(rest)
    if tm:
        return SubTask(source=source, target=TargetArea(tm.group(1)))
    tm = _TGT_OFFSET_RE.match(rest)
    if tm:
        sel = ObjectSelector(kind="block", color=tm.group(3), size=tm.group(2))
        return SubTask(source=source, target=TargetOffset(sel, tm.group(1)))
    tm = _TGT_OBJECT_RE.match(rest)
    if tm:
        kind = tm.group(4)
        sel = ObjectSelector(kind=kind, color=tm.group(3), size=tm.group(2) if kind == "block" else None)
        return SubTask(source=source, target=TargetObject(sel))
    raise SubTaskError(f"unparseable sub-task target: {rest!r}")


def _target_key(target: Target, state: SceneState):
    if isinstance(target, TargetObject):
        return ("object", target.selector.resolve(state))
    if isinstance(target, TargetArea):
        return ("area", target.name)
    if isinstance(target, TargetOffset):
        return ("offset", target.direction, target.selector.resolve(state))
    return ("table",)


def resolution_key(subtask: SubTask, state: SceneState):
    """What a sub-task denotes in a given scene: (verb, source set, target region)."""
    return (subtask.verb, subtask.source.resolve(state), _target_key(subtask.target, state))


def subtask_equivalent(predicted: SubTask, valid: set[SubTask] | list[SubTask], state: SceneState) -> bool:
    """True iff `predicted` denotes the same move as some element of `valid`."""
    key = resolution_key(predicted, state)
    return any(resolution_key(v, state) == key for v in valid)
