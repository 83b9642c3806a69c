"""The 23-task catalog: scene samplers, instruction rendering, goal conditions.

Each sampler builds a solvable scene whose goal starts fully unsatisfied, so
the per-episode score is exactly the fraction of completed pick-and-place
steps.  Scenes are pure functions of the RNG passed in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import AREA_NAMES, Rect, area_rect, rect_from_center, rects_overlap
from .goals import (
    GoalCondition,
    InArea,
    InContainerOfColor,
    NearPoint,
    OnObjectPose,
    OnObjectZone,
    SubGoal,
)
from .subtasks import DIRECTIONS
from .world import COLORS, SIZES, ObjectInstance, SceneState, WorkspaceConfig

REL_OFFSET = 0.1  # meters between a reference block and a relative target spot


class SamplerError(Exception):
    pass


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    instruction_template: str
    split: str  # seen | unseen | additional
    long_horizon: bool
    match_modes: tuple[str, ...]
    object_counts: str
    sampler: Callable = field(compare=False, repr=False)


@dataclass
class SampledScene:
    state: SceneState
    goal_text: str
    goal: GoalCondition


class _SceneBuilder:
    """Rejection-sampling placement of non-overlapping objects."""

    def __init__(self, rng: np.random.Generator, cfg: WorkspaceConfig | None = None):
        self.rng = rng
        self.cfg = cfg or WorkspaceConfig()
        self.state = SceneState()
        self._next_id = 1
        self._reserved: list[Rect] = []

    def reserve(self, rect: Rect) -> None:
        """Keep future placements away from a rect (e.g. a pending target spot)."""
        self._reserved.append(rect)

    def _occupied(self) -> list[Rect]:
        return [o.rect for o in self.state.iter_sorted()] + self._reserved

    def find_spot(
        self,
        footprint: tuple[float, float],
        region: Rect | None = None,
        exclude: list[Rect] | None = None,
        gap: float = 0.01,
        attempts: int = 300,
    ) -> tuple[float, float]:
        fx, fy = footprint
        if region is None:
            lo_x, lo_y = fx / 2 + gap, fy / 2 + gap
            hi_x, hi_y = self.cfg.bounds_x - fx / 2 - gap, self.cfg.bounds_y - fy / 2 - gap
        else:
            lo_x, lo_y = region[0] + fx / 2 + gap, region[1] + fy / 2 + gap
            hi_x, hi_y = region[2] - fx / 2 - gap, region[3] - fy / 2 - gap
        if lo_x >= hi_x or lo_y >= hi_y:
            raise SamplerError(f"region too small for footprint {footprint}")
        occupied = self._occupied()
        for _ in range(attempts):
            x = self.rng.uniform(lo_x, hi_x)
            y = self.rng.uniform(lo_y, hi_y)
            rect = rect_from_center(x, y, fx, fy)
            if any(rects_overlap(rect, r, gap) for r in occupied):
                continue
            if exclude is not None and any(rects_overlap(rect, r) for r in exclude):
                continue
            return x, y
        raise SamplerError(
            f"placement budget exhausted for footprint {footprint} "
            f"({len(self.state.objects)} objects already placed)"
        )

    def add(
        self,
        kind: str,
        color: str,
        size: str | None = None,
        at: tuple[float, float] | None = None,
        region: Rect | None = None,
        exclude: list[Rect] | None = None,
        supported_by: int | None = None,
        yaw: float = 0.0,
    ) -> ObjectInstance:
        probe = ObjectInstance(id=0, kind=kind, color=color, size=size, pose=(0.5, 0.25, 0.0))
        if at is None:
            at = self.find_spot(probe.footprint, region=region, exclude=exclude)
        obj = ObjectInstance(
            id=self._next_id,
            kind=kind,
            color=color,
            size=size,
            pose=(at[0], at[1], yaw),
            supported_by=supported_by,
        )
        self._next_id += 1
        self.state.add(obj)
        return obj


def _pick(rng: np.random.Generator, seq):
    return seq[int(rng.integers(len(seq)))]


def _shuffled(rng: np.random.Generator, seq: list) -> list:
    return [seq[i] for i in rng.permutation(len(seq))]

def _colors(rng: np.random.Generator, n: int, exclude: set[str] | None = None) -> list[str]:
    pool = [c for c in COLORS if not exclude or c not in exclude]
    if n > len(pool):
        raise SamplerError(f"not enough colors: need {n}")
    idx = rng.choice(len(pool), size=n, replace=False)
    return [pool[int(i)] for i in idx]


def _size(rng: np.random.Generator) -> str:
    return _pick(rng, SIZES)


def _two_areas(rng: np.random.Generator) -> tuple[str, str]:
    a, b = rng.choice(len(AREA_NAMES), size=2, replace=False)
    return AREA_NAMES[int(a)], AREA_NAMES[int(b)]


def _quadrant(name: str) -> Rect:
    return area_rect(name, 1.0, 0.5)


def _stack_chain(blocks: list[ObjectInstance]) -> list[SubGoal]:
    """Sub-goals stacking blocks[1:] onto blocks[0] bottom-up."""
    return [
        SubGoal(object_id=above.id, predicate=OnObjectPose(target_id=below.id))
        for below, above in zip(blocks, blocks[1:])
    ]


# ---------------------------------------------------------------------------
# Primitive tasks


def _sample_primitive(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    target_kind = _pick(rng, ["block", "bowl", "zone"])
    n_distract = int(rng.integers(0, 3))
    colors = _colors(rng, 2 + n_distract)
    source = b.add("block", colors[0], _size(rng))
    if target_kind == "block":
        target = b.add("block", colors[1], _size(rng))
        pred = OnObjectPose(target_id=target.id)
    else:
        target = b.add(target_kind, colors[1])
        pred = OnObjectZone(target_id=target.id)
    for c in colors[2:]:
        b.add("block", c, _size(rng))
    goal = GoalCondition((SubGoal(source.id, pred),))
    text = f"Put the {colors[0]} block on the {colors[1]} {target_kind}."
    return SampledScene(b.state, text, goal)


def _sample_primitive_with_size(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_distract = int(rng.integers(0, 3))
    combos = [(s, c) for c in COLORS for s in SIZES]
    idx = rng.choice(len(combos), size=2 + n_distract, replace=False)
    chosen = [combos[int(i)] for i in idx]
    source = b.add("block", chosen[0][1], chosen[0][0])
    target = b.add("block", chosen[1][1], chosen[1][0])
    for s, c in chosen[2:]:
        b.add("block", c, s)
    goal = GoalCondition((SubGoal(source.id, OnObjectPose(target_id=target.id)),))
    text = (
        f"Put the {chosen[0][0]} {chosen[0][1]} block "
        f"on the {chosen[1][0]} {chosen[1][1]} block."
    )
    return SampledScene(b.state, text, goal)


def _sample_primitive_with_abs(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    area = _pick(rng, AREA_NAMES)
    n_distract = int(rng.integers(0, 3))
    colors = _colors(rng, 1 + n_distract)
    source = b.add("block", colors[0], _size(rng), exclude=[_quadrant(area)])
    for c in colors[1:]:
        b.add("block", c, _size(rng))
    goal = GoalCondition((SubGoal(source.id, InArea(area_name=area)),))
    text = f"Put the {colors[0]} block on the {area} area."
    return SampledScene(b.state, text, goal)


# ---------------------------------------------------------------------------
# Bowl and zone rearrangement tasks


def _matching_scene(rng: np.random.Generator, container: str, mismatch: bool) -> SampledScene:
    b = _SceneBuilder(rng)
    n = int(rng.integers(3, 5))
    colors = _colors(rng, n)
    for c in _shuffled(rng, colors):
        b.add(container, c)
    blocks = [b.add("block", c, _size(rng)) for c in colors]
    sub_goals = []
    for block in blocks:
        allowed = (
            frozenset(c for c in colors if c != block.color)
            if mismatch
            else frozenset({block.color})
        )
        sub_goals.append(
            SubGoal(block.id, InContainerOfColor(container_kind=container, colors=allowed))
        )
    word = "mismatching" if mismatch else "matching"
    noun = "bowls" if container == "bowl" else "zones"
    text = f"Put the blocks in the {noun} with {word} colors."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_matching_bowl(rng):
    return _matching_scene(rng, "bowl", mismatch=False)


def _sample_mismatching_bowl(rng):
    return _matching_scene(rng, "bowl", mismatch=True)


def _sample_mismatching_zone(rng):
    return _matching_scene(rng, "zone", mismatch=True)


def _sample_even_blocks(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_even = int(rng.integers(1, 3))
    n_odd = int(rng.integers(1, 3))
    colors = _colors(rng, n_even + n_odd)
    even_colors, odd_colors = colors[:n_even], colors[n_even:]
    counts = {c: int(_pick(rng, [2, 2, 4])) for c in even_colors}
    counts.update({c: int(_pick(rng, [1, 3])) for c in odd_colors})
    if sum(counts.values()) > 8:
        counts = {c: (2 if c in even_colors else 1) for c in colors}
    for c in colors:
        b.add("zone", c)
    sub_goals = []
    for c in colors:
        for _ in range(counts[c]):
            block = b.add("block", c, _size(rng))
            if c in even_colors:
                sub_goals.append(
                    SubGoal(block.id, InContainerOfColor("zone", frozenset({c})))
                )
    text = "Move all blocks of a color that occur in even numbers."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


# ---------------------------------------------------------------------------
# Stacking tasks


def _sample_smaller_over_bigger(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_pairs = int(rng.integers(2, 4))
    n_distract = int(rng.integers(0, 3))
    colors = _colors(rng, n_pairs + n_distract)
    sub_goals = []
    for c in colors[:n_pairs]:
        big = b.add("block", c, "big")
        small = b.add("block", c, "small")
        sub_goals.append(SubGoal(small.id, OnObjectPose(target_id=big.id)))
    for c in colors[n_pairs:]:
        b.add("block", c, _size(rng))
    text = "Stack smaller blocks over bigger blocks of the same color."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_stack_in_area(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    area = _pick(rng, AREA_NAMES)
    n = int(rng.integers(4, 7))
    colors = _colors(rng, n)
    blocks = [
        b.add("block", c, _size(rng), exclude=[_quadrant(area)]) for c in colors
    ]
    order = _shuffled(rng, blocks)
    sub_goals = [SubGoal(order[0].id, InArea(area_name=area))] + _stack_chain(order)
    text = f"Stack all the blocks in the {area} area."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_stack_same_size(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_big, n_small = _pick(
        rng, [(2, 2), (2, 3), (3, 2), (3, 3), (1, 3), (3, 1), (1, 4), (4, 1), (2, 4), (4, 2)]
    )
    colors = _colors(rng, n_big + n_small)
    bigs = [b.add("block", c, "big") for c in colors[:n_big]]
    smalls = [b.add("block", c, "small") for c in colors[n_big:]]
    sub_goals = []
    for group in (bigs, smalls):
        if len(group) >= 2:
            sub_goals.extend(_stack_chain(_shuffled(rng, group)))
    text = "Stack blocks of the same size."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_stack_same_color(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_groups = int(rng.integers(1, 3))
    n_single = int(rng.integers(1, 3))
    colors = _colors(rng, n_groups + n_single)
    sub_goals = []
    for c in colors[:n_groups]:
        count = int(_pick(rng, [2, 2, 3]))
        if count == 2:
            group = [b.add("block", c, "big"), b.add("block", c, "small")]
        else:
            group = [b.add("block", c, _size(rng)) for _ in range(count)]
        sub_goals.extend(_stack_chain(_shuffled(rng, group)))
    for c in colors[n_groups:]:
        b.add("block", c, _size(rng))
    text = "Stack blocks of the same color."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_alternate_color(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n_a, n_b = _pick(rng, [(2, 2), (3, 2), (3, 3)])
    color_a, color_b = _colors(rng, 2)
    if n_a == n_b and rng.random() < 0.5:
        color_a, color_b = color_b, color_a
    blocks_a = [b.add("block", color_a, "big") for _ in range(n_a)]
    blocks_b = [b.add("block", color_b, "big") for _ in range(n_b)]
    tower: list[ObjectInstance] = []
    for i in range(n_a + n_b):
        tower.append(blocks_a[i // 2] if i % 2 == 0 else blocks_b[i // 2])
    text = "Stack blocks in alternate colors."
    return SampledScene(b.state, text, GoalCondition(tuple(_stack_chain(tower))))


def _sized_pair_in_zone(rng: np.random.Generator, bigger_under: bool) -> SampledScene:
    b = _SceneBuilder(rng)
    n_pairs = int(rng.integers(2, 4))
    n_distract = int(rng.integers(0, 2))
    colors = _colors(rng, n_pairs + n_distract)
    sub_goals = []
    for c in colors[:n_pairs]:
        b.add("zone", c)
    for c in colors[:n_pairs]:
        big = b.add("block", c, "big")
        small = b.add("block", c, "small")
        under, over = (big, small) if bigger_under else (small, big)
        sub_goals.append(SubGoal(under.id, InContainerOfColor("zone", frozenset({c}))))
        sub_goals.append(SubGoal(over.id, OnObjectPose(target_id=under.id)))
    for c in colors[n_pairs:]:
        b.add("block", c, _size(rng))
    order = "bigger" if bigger_under else "smaller"
    text = (
        "Stack blocks of the same color in the zone with same color, "
        f"with the {order} blocks underneath."
    )
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_smaller_over_bigger_in_zone(rng):
    return _sized_pair_in_zone(rng, bigger_under=True)


def _sample_bigger_over_smaller_in_zone(rng):
    return _sized_pair_in_zone(rng, bigger_under=False)


def _sample_stack_all_on_zone(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    n = int(rng.integers(4, 6))
    with_distractor_zone = rng.random() < 0.5
    colors = _colors(rng, n + 1 + int(with_distractor_zone))
    zone_color = colors[0]
    b.add("zone", zone_color)
    if with_distractor_zone:
        b.add("zone", colors[-1])
    block_colors = colors[1 : n + 1]
    blocks = [b.add("block", c, _size(rng)) for c in block_colors]
    order = _shuffled(rng, blocks)
    sub_goals = [
        SubGoal(order[0].id, InContainerOfColor("zone", frozenset({zone_color})))
    ] + _stack_chain(order)
    text = f"Stack all the blocks on the {zone_color} zone."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_stack_by_relative_position(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    direction = _pick(rng, DIRECTIONS)
    n = int(rng.integers(3, 5))
    colors = _colors(rng, n + 2)
    zone_color, ref_color = colors[0], colors[1]
    dx, dy = {
        "left of": (-REL_OFFSET, 0.0),
        "right of": (REL_OFFSET, 0.0),
        "above": (0.0, REL_OFFSET),
        "below": (0.0, -REL_OFFSET),
    }[direction]
    # The zone is placed so that the offset spot stays well inside the table.
    margin = 0.2
    zone = b.add(
        "zone",
        zone_color,
        region=(
            margin + max(0.0, -dx),
            margin / 2 + max(0.0, -dy),
            1.0 - margin - max(0.0, dx),
            0.5 - margin / 2 - max(0.0, dy),
        ),
    )
    ref = b.add("block", ref_color, _size(rng), at=(zone.pose[0], zone.pose[1]))
    spot = (ref.pose[0] + dx, ref.pose[1] + dy)
    b.reserve(rect_from_center(spot[0], spot[1], 0.06, 0.06))
    blocks = [b.add("block", c, _size(rng)) for c in colors[2:]]
    order = _shuffled(rng, blocks)
    sub_goals = [
        SubGoal(
            order[0].id,
            NearPoint(x=spot[0], y=spot[1], anchor_id=ref.id, direction=direction),
        )
    ] + _stack_chain(order)
    text = f"Stack all the blocks {direction} the {ref_color} block on the {zone_color} zone."
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


# ---------------------------------------------------------------------------
# Hidden-block tasks


def _tower_scene(rng: np.random.Generator, layers: int, mismatch: bool) -> SampledScene:
    b = _SceneBuilder(rng)
    n_towers = 2 if layers == 3 else int(rng.integers(2, 4))
    n_hidden_per = layers - 1
    colors = _colors(rng, n_towers * layers)
    hidden_colors = colors[: n_towers * n_hidden_per]
    top_colors = colors[n_towers * n_hidden_per :]
    for c in hidden_colors:
        b.add("bowl", c)
    sub_goals = []
    for i in range(n_towers):
        tower_hidden = hidden_colors[i * n_hidden_per : (i + 1) * n_hidden_per]
        base = b.add("block", tower_hidden[0], _size(rng))
        below = base
        for c in tower_hidden[1:] + [top_colors[i]]:
            below = b.add(
                "block", c, _size(rng), at=(base.pose[0], base.pose[1]), supported_by=below.id
            )
        for c in tower_hidden:
            allowed = (
                frozenset(h for h in hidden_colors if h != c)
                if mismatch
                else frozenset({c})
            )
            block = next(o for o in b.state.iter_sorted() if o.kind == "block" and o.color == c)
            sub_goals.append(SubGoal(block.id, InContainerOfColor("bowl", allowed)))
    word = "mismatching" if mismatch else "matching"
    layer_word = "two" if layers == 2 else "three"
    text = (
        f"Put all the hidden blocks in the {layer_word}-layer stacked towers "
        f"into the bowls with {word} colors."
    )
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


def _sample_hidden_two_layer_matching(rng):
    return _tower_scene(rng, layers=2, mismatch=False)


def _sample_hidden_two_layer_mismatching(rng):
    return _tower_scene(rng, layers=2, mismatch=True)


def _sample_hidden_three_layer_matching(rng):
    return _tower_scene(rng, layers=3, mismatch=False)


def _sample_hidden_pyramid(rng: np.random.Generator) -> SampledScene:
    b = _SceneBuilder(rng)
    colors = _colors(rng, 6)
    base_colors, upper_colors = colors[:3], colors[3:]
    for c in base_colors:
        b.add("bowl", c)
    pitch = 0.042  # block edge plus a hair of clearance
    cx, cy = b.find_spot((3 * pitch + 0.04, 0.06))
    bases = [
        b.add("block", c, "big", at=(cx + (i - 1) * pitch, cy))
        for i, c in enumerate(base_colors)
    ]
    mid_left = b.add(
        "block", upper_colors[0], "big", at=(cx - pitch / 2, cy), supported_by=bases[0].id
    )
    b.add("block", upper_colors[1], "big", at=(cx + pitch / 2, cy), supported_by=bases[1].id)
    b.add("block", upper_colors[2], "big", at=(cx, cy), supported_by=mid_left.id)
    sub_goals = [
        SubGoal(block.id, InContainerOfColor("bowl", frozenset({block.color})))
        for block in bases
    ]
    text = (
        "Put all the hidden blocks on the first layer of the pyramid "
        "into the bowls with matching colors."
    )
    return SampledScene(b.state, text, GoalCondition(tuple(sub_goals)))


# ---------------------------------------------------------------------------
# Area-to-area tasks


def _move_between_areas(
    rng: np.random.Generator,
    by_size: str | None = None,
    by_color: str | None = None,
) -> tuple[_SceneBuilder, str, str, list[ObjectInstance]]:
    b = _SceneBuilder(rng)
    src, dst = _two_areas(rng)
    n_movers = int(rng.integers(2, 4))
    movers = []
    if by_color is not None:
        mover_colors = [by_color] * n_movers
        other = _colors(rng, 2, exclude={by_color})
        distractor_specs = [(c, _size(rng)) for c in other[: int(rng.integers(1, 3))]]
    else:
        palette = _colors(rng, n_movers + 2)
        mover_colors = palette[:n_movers]
        distractor_specs = []
        for c in palette[n_movers:][: int(rng.integers(1, 3))]:
            size = _size(rng) if by_size is None else ("small" if by_size == "big" else "big")
            distractor_specs.append((c, size))
    for c in mover_colors:
        size = by_size if by_size is not None else _size(rng)
        movers.append(b.add("block", c, size, region=_quadrant(src)))
    filtered = by_size is not None or by_color is not None
    for c, size in distractor_specs:
        # Distractors may share the source area only when a size/color filter
        # excludes them from the instruction; the plain task covers every
        # block in the source area.
        if filtered and rng.random() < 0.5:
            b.add("block", c, size, region=_quadrant(src))
        else:
            b.add("block", c, size, exclude=[_quadrant(src)])
    return b, src, dst, movers


def _sample_move_between_areas(rng: np.random.Generator) -> SampledScene:
    b, src, dst, movers = _move_between_areas(rng)
    sub_goals = tuple(SubGoal(m.id, InArea(area_name=dst)) for m in movers)
    text = f"Move all the blocks in the {src} area to the {dst} area."
    return SampledScene(b.state, text, GoalCondition(sub_goals))


def _sample_move_between_areas_by_size(rng: np.random.Generator) -> SampledScene:
    size = _pick(rng, SIZES)
    b, src, dst, movers = _move_between_areas(rng, by_size=size)
    sub_goals = tuple(SubGoal(m.id, InArea(area_name=dst)) for m in movers)
    text = f"Move all the {size} blocks in the {src} area to the {dst} area."
    return SampledScene(b.state, text, GoalCondition(sub_goals))


def _sample_move_between_areas_by_color(rng: np.random.Generator) -> SampledScene:
    color = _colors(rng, 1)[0]
    b, src, dst, movers = _move_between_areas(rng, by_color=color)
    sub_goals = tuple(SubGoal(m.id, InArea(area_name=dst)) for m in movers)
    text = f"Move all the {color} blocks in the {src} area to the {dst} area."
    return SampledScene(b.state, text, GoalCondition(sub_goals))


# ---------------------------------------------------------------------------
# Catalog


def _spec(task_id, template, split, long_horizon, modes, counts, sampler) -> TaskSpec:
    return TaskSpec(task_id, template, split, long_horizon, modes, counts, sampler)


_CATALOG: tuple[TaskSpec, ...] = (
    _spec(
        "pick-and-place-primitive",
        "Put the [OBJ] on the [OBJ].",
        "seen", False, ("pose", "zone"), "2-4 objects",
        _sample_primitive,
    ),
    _spec(
        "pick-and-place-primitive-with-size",
        "Put the [SIZE] [OBJ] on the [SIZE] [OBJ].",
        "seen", False, ("pose",), "2-4 blocks",
        _sample_primitive_with_size,
    ),
    _spec(
        "pick-and-place-primitive-with-absolute-position",
        "Put the [OBJ] on the [ABS_POS].",
        "seen", False, ("zone",), "1-3 blocks",
        _sample_primitive_with_abs,
    ),
    _spec(
        "put-block-into-matching-bowl",
        "Put the blocks in the bowls with matching colors.",
        "seen", True, ("zone",), "3-4 blocks, 3-4 bowls",
        _sample_matching_bowl,
    ),
    _spec(
        "stack-smaller-over-bigger-with-same-color",
        "Stack smaller blocks over bigger blocks of the same color.",
        "seen", True, ("pose",), "4-8 blocks",
        _sample_smaller_over_bigger,
    ),
    _spec(
        "stack-block-in-absolute-area",
        "Stack all the blocks in the [ABS_POS] area.",
        "seen", True, ("zone", "pose"), "4-6 blocks",
        _sample_stack_in_area,
    ),
    _spec(
        "put-even-blocks-in-same-color-zone",
        "Move all blocks of a color that occur in even numbers.",
        "seen", True, ("zone",), "3-8 blocks, 2-4 zones",
        _sample_even_blocks,
    ),
    _spec(
        "put-block-into-mismatching-bowl",
        "Put the blocks in the bowls with mismatching colors.",
        "unseen", True, ("zone",), "3-4 blocks, 3-4 bowls",
        _sample_mismatching_bowl,
    ),
    _spec(
        "stack-blocks-of-same-size",
        "Stack blocks of the same size.",
        "unseen", True, ("pose",), "4-6 blocks",
        _sample_stack_same_size,
    ),
    _spec(
        "stack-blocks-with-alternate-color",
        "Stack blocks in alternate colors.",
        "unseen", True, ("pose",), "4-6 blocks",
        _sample_alternate_color,
    ),
    _spec(
        "stack-smaller-over-bigger-with-same-color-in-same-color-zone",
        "Stack blocks of the same color in the zone with same color, "
        "with the bigger blocks underneath.",
        "unseen", True, ("zone", "pose"), "4-7 blocks, 2-3 zones",
        _sample_smaller_over_bigger_in_zone,
    ),
    _spec(
        "move-blocks-between-absolute-positions",
        "Move all the blocks in the [ABS_POS] area to the [ABS_POS] area.",
        "unseen", True, ("zone",), "3-6 blocks",
        _sample_move_between_areas,
    ),
    _spec(
        "stack-blocks-of-same-color",
        "Stack blocks of the same color.",
        "unseen", True, ("pose",), "3-8 blocks",
        _sample_stack_same_color,
    ),
    _spec(
        "put-block-into-mismatching-zone",
        "Put the blocks in the zones with mismatching colors.",
        "additional", True, ("zone",), "3-4 blocks, 3-4 zones",
        _sample_mismatching_zone,
    ),
    _spec(
        "put-hidden-blocks-in-two-layer-towers-into-matching-bowls",
        "Put all the hidden blocks in the two-layer stacked towers "
        "into the bowls with matching colors.",
        "additional", True, ("zone",), "4-6 blocks, 2-3 bowls",
        _sample_hidden_two_layer_matching,
    ),
    _spec(
        "put-hidden-blocks-in-two-layer-towers-into-mismatching-bowls",
        "Put all the hidden blocks in the two-layer stacked towers "
        "into the bowls with mismatching colors.",
        "additional", True, ("zone",), "4-6 blocks, 2-3 bowls",
        _sample_hidden_two_layer_mismatching,
    ),
    _spec(
        "put-hidden-blocks-in-three-layer-towers-into-matching-bowls",
        "Put all the hidden blocks in the three-layer stacked towers "
        "into the bowls with matching colors.",
        "additional", True, ("zone",), "6 blocks, 4 bowls",
        _sample_hidden_three_layer_matching,
    ),
    _spec(
        "put-hidden-blocks-in-pyramid-into-matching-bowls",
        "Put all the hidden blocks on the first layer of the pyramid "
        "into the bowls with matching colors.",
        "additional", True, ("zone",), "6 blocks, 3 bowls",
        _sample_hidden_pyramid,
    ),
    _spec(
        "stack-bigger-over-smaller-with-same-color-in-same-color-zone",
        "Stack blocks of the same color in the zone with same color, "
        "with the smaller blocks underneath.",
        "additional", True, ("zone", "pose"), "4-7 blocks, 2-3 zones",
        _sample_bigger_over_smaller_in_zone,
    ),
    _spec(
        "stack-all-blocks-on-a-zone",
        "Stack all the blocks on the [COLOR] zone.",
        "additional", True, ("zone", "pose"), "4-5 blocks, 1-2 zones",
        _sample_stack_all_on_zone,
    ),
    _spec(
        "stack-blocks-by-relative-position",
        "Stack all the blocks on the [REL_POS] of the [COLOR] block on the [COLOR] zone.",
        "additional", True, ("pose",), "4-6 blocks, 1 zone",
        _sample_stack_by_relative_position,
    ),
    _spec(
        "move-blocks-between-absolute-positions-by-size",
        "Move all the [SIZE] blocks in the [ABS_POS] area to the [ABS_POS] area.",
        "additional", True, ("zone",), "3-6 blocks",
        _sample_move_between_areas_by_size,
    ),
    _spec(
        "move-blocks-between-absolute-positions-by-color",
        "Move all the [COLOR] blocks in the [ABS_POS] area to the [ABS_POS] area.",
        "additional", True, ("zone",), "3-6 blocks",
        _sample_move_between_areas_by_color,
    ),
)

TASKS: dict[str, TaskSpec] = {spec.task_id: spec for spec in _CATALOG}


class UnknownTaskError(Exception):
    pass


def get_task(task_id: str) -> TaskSpec:
    try:
        return TASKS[task_id]
    except KeyError:
        known = ", ".join(sorted(TASKS))
        raise UnknownTaskError(f"unknown task {task_id!r}; catalog: {known}") from None


def all_task_ids() -> list[str]:
    return [spec.task_id for spec in _CATALOG]


def long_horizon_task_ids() -> list[str]:
    return [spec.task_id for spec in _CATALOG if spec.long_horizon]


def task_ids_by_split(split: str) -> list[str]:
    return [spec.task_id for spec in _CATALOG if spec.split == split]


def sample_scene(task_id: str, rng: np.random.Generator) -> SampledScene:
    """Sample a solvable, initially-unsolved scene for the given task."""
    spec = get_task(task_id)
    scene = spec.sampler(rng)
    scene.state.validate(WorkspaceConfig())
    if scene.goal.satisfied_count(scene.state) != 0:
        raise SamplerError(f"{task_id}: sampled scene starts partially satisfied")
    if not scene.goal.sub_goals:
        raise SamplerError(f"{task_id}: sampled scene has no sub-goals")
    return scene


def catalog_manifest() -> list[dict]:
    """Machine-readable task catalog for docs and dataset metadata."""
    return [
        {
            "task_id": spec.task_id,
            "instruction_template": spec.instruction_template,
            "split": spec.split,
            "long_horizon": spec.long_horizon,
            "match_modes": list(spec.match_modes),
            "object_counts": spec.object_counts,
        }
        for spec in _CATALOG
    ]
