"""Kinematic tabletop world: objects, suction pick-and-place, rendering, matchers.

Objects are rigid prisms on a 1.0 x 0.5 m table.  There is no force or contact
simulation: a pick attaches the topmost object under the pick point, and a
place teleports it to the place pose, snapping it on top of whatever object
contains that point.  Stochastic transport drops model external disturbances.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

from .geometry import (
    Rect,
    rect_contains_point,
    rect_from_center,
    overlap_fraction,
    wrap_angle,
    yaw_error,
)

# Fixed object catalog (meters).  Blocks are cubes; bowls render as discs but
# match and collide through their bounding square; zones are flat markings.
BLOCK_EDGE = {"big": 0.04, "small": 0.02}
BOWL_DIAMETER = 0.12
BOWL_HEIGHT = 0.02
ZONE_EDGE = 0.12

KINDS = ("block", "bowl", "zone")
SIZES = ("big", "small")

COLORS: dict[str, tuple[int, int, int]] = {
    "blue": (78, 121, 167),
    "red": (255, 87, 89),
    "green": (89, 169, 79),
    "orange": (242, 142, 43),
    "yellow": (237, 201, 72),
    "purple": (176, 122, 161),
    "pink": (255, 157, 167),
    "cyan": (118, 183, 178),
    "brown": (156, 117, 95),
    "white": (255, 255, 255),
    "gray": (186, 176, 172),
}

TABLE_COLOR = (45, 45, 45)

# Default evaluation tolerances.
TOL_POS = 0.01
TOL_YAW = math.radians(15.0)
ZONE_OVERLAP_THRESHOLD = 0.5
SQUARE_YAW_PERIOD = math.pi / 2.0

_EPS = 1e-9


class WorldError(Exception):
    """Base class for world-model errors."""


class NoSuchObjectError(WorldError):
    pass


class WrongKindError(WorldError):
    pass


@dataclass(frozen=True)
class WorkspaceConfig:
    """Workspace geometry and disturbance parameters."""

    bounds_x: float = 1.0
    bounds_y: float = 0.5
    raster_width: int = 320
    raster_height: int = 160
    pixels_per_meter: int = 320
    drop_probability: float = 0.0
    transport_substeps: int = 3
    obs_noise_sigma: float = 0.002
    noise_color: bool = True
    noise_depth: bool = True
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.raster_width != round(self.bounds_x * self.pixels_per_meter):
            raise ValueError("raster width must equal bounds_x * pixels_per_meter")
        if self.raster_height != round(self.bounds_y * self.pixels_per_meter):
            raise ValueError("raster height must equal bounds_y * pixels_per_meter")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")
        if self.obs_noise_sigma < 0.0:
            raise ValueError("obs_noise_sigma must be >= 0")
        if self.transport_substeps < 1:
            raise ValueError("transport_substeps must be >= 1")

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.bounds_x and 0.0 <= y <= self.bounds_y


@dataclass
class ObjectInstance:
    """One rigid object.  `supported_by` is the id it rests on (None = table)."""

    id: int
    kind: str
    color: str
    size: str | None
    pose: tuple[float, float, float]  # x, y, yaw
    supported_by: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.color not in COLORS:
            raise ValueError(f"unknown color {self.color!r}")
        if self.kind == "block":
            if self.size not in SIZES:
                raise ValueError(f"block needs size in {SIZES}, got {self.size!r}")
        elif self.size is not None:
            raise ValueError(f"{self.kind} has a fixed footprint, size must be None")

    @property
    def footprint(self) -> tuple[float, float]:
        if self.kind == "block":
            edge = BLOCK_EDGE[self.size]  # type: ignore[index]
            return (edge, edge)
        if self.kind == "bowl":
            return (BOWL_DIAMETER, BOWL_DIAMETER)
        return (ZONE_EDGE, ZONE_EDGE)

    @property
    def height(self) -> float:
        if self.kind == "block":
            return BLOCK_EDGE[self.size]  # type: ignore[index]
        if self.kind == "bowl":
            return BOWL_HEIGHT
        return 0.0

    @property
    def rect(self) -> Rect:
        fx, fy = self.footprint
        return rect_from_center(self.pose[0], self.pose[1], fx, fy)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "color": self.color,
            "size": self.size,
            "pose": list(self.pose),
            "supported_by": self.supported_by,
        }

    @staticmethod
    def from_json(data: dict) -> "ObjectInstance":
        return ObjectInstance(
            id=int(data["id"]),
            kind=data["kind"],
            color=data["color"],
            size=data["size"],
            pose=(float(data["pose"][0]), float(data["pose"][1]), float(data["pose"][2])),
            supported_by=None if data["supported_by"] is None else int(data["supported_by"]),
        )


@dataclass
class SceneState:
    """Full symbolic world state: the set of objects and their support relations."""

    objects: dict[int, ObjectInstance] = field(default_factory=dict)

    def copy(self) -> "SceneState":
        return SceneState({oid: replace(o) for oid, o in self.objects.items()})

    def object(self, oid: int) -> ObjectInstance:
        try:
            return self.objects[oid]
        except KeyError:
            raise NoSuchObjectError(f"no such object: {oid}") from None

    def add(self, obj: ObjectInstance) -> None:
        if obj.id in self.objects:
            raise ValueError(f"duplicate object id {obj.id}")
        self.objects[obj.id] = obj

    def iter_sorted(self) -> list[ObjectInstance]:
        return [self.objects[oid] for oid in sorted(self.objects)]

    def z_bottom(self, oid: int) -> float:
        z = 0.0
        seen = set()
        cur = self.object(oid).supported_by
        while cur is not None:
            if cur in seen:
                raise WorldError(f"support cycle involving object {cur}")
            seen.add(cur)
            supporter = self.object(cur)
            z += supporter.height
            cur = supporter.supported_by
        return z

    def z_top(self, oid: int) -> float:
        return self.z_bottom(oid) + self.object(oid).height

    def supported_children(self, oid: int) -> list[ObjectInstance]:
        return [o for o in self.iter_sorted() if o.supported_by == oid]

    def occupants(self, oid: int) -> list[ObjectInstance]:
        """Blocks resting at the top level of `oid` (overlapping footprints)."""
        base = self.object(oid)
        top = self.z_top(oid)
        out = []
        for other in self.iter_sorted():
            if other.id == oid or other.kind != "block":
                continue
            if abs(self.z_bottom(other.id) - top) > 1e-6:
                continue
            if _rects_positive_overlap(base.rect, other.rect):
                out.append(other)
        return out

    def is_clear(self, oid: int) -> bool:
        return not self.occupants(oid)

    def blockers_above(self, oid: int) -> list[ObjectInstance]:
        """All blocks transitively resting on `oid`, nearest level first."""
        out: list[ObjectInstance] = []
        frontier = self.occupants(oid)
        seen = {oid}
        while frontier:
            nxt: list[ObjectInstance] = []
            for o in frontier:
                if o.id in seen:
                    continue
                seen.add(o.id)
                out.append(o)
                nxt.extend(self.occupants(o.id))
            frontier = nxt
        return out

    def support_at(self, x: float, y: float, exclude: int | None = None) -> ObjectInstance | None:
        """Topmost block or bowl whose footprint contains (x, y)."""
        best: ObjectInstance | None = None
        best_key = (-1.0, -1)
        for o in self.iter_sorted():
            if o.id == exclude or o.kind == "zone":
                continue
            if rect_contains_point(o.rect, x, y):
                key = (self.z_top(o.id), o.id)
                if key > best_key:
                    best, best_key = o, key
        return best

    def topmost_at(self, x: float, y: float) -> ObjectInstance | None:
        """Topmost object of any kind whose footprint contains (x, y)."""
        best: ObjectInstance | None = None
        best_key = (-1.0, -1)
        for o in self.iter_sorted():
            if rect_contains_point(o.rect, x, y):
                key = (self.z_top(o.id), o.id)
                if key > best_key:
                    best, best_key = o, key
        return best

    def validate(self, cfg: WorkspaceConfig) -> None:
        for o in self.iter_sorted():
            x, y, _ = o.pose
            if not cfg.in_bounds(x, y):
                raise WorldError(f"object {o.id} outside workspace bounds")
            if o.supported_by is not None and o.kind != "block":
                raise WorldError(f"{o.kind} {o.id} must not be supported")
            self.z_bottom(o.id)  # raises on support cycles

    def to_json(self) -> dict:
        return {"objects": [o.to_json() for o in self.iter_sorted()]}

    @staticmethod
    def from_json(data: dict) -> "SceneState":
        state = SceneState()
        for entry in data["objects"]:
            state.add(ObjectInstance.from_json(entry))
        return state


def _rects_positive_overlap(a: Rect, b: Rect) -> bool:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w > _EPS and h > _EPS


@dataclass(frozen=True)
class Action:
    """Suction pick pose and place pose, each (x, y, yaw) in workspace frame."""

    pick: tuple[float, float, float]
    place: tuple[float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pick", (self.pick[0], self.pick[1], wrap_angle(self.pick[2])))
        object.__setattr__(self, "place", (self.place[0], self.place[1], wrap_angle(self.place[2])))

    def as_list(self) -> list[float]:
        return [*self.pick, *self.place]

    @staticmethod
    def from_list(values: list[float]) -> "Action":
        if len(values) != 6:
            raise ValueError("action vector must have 6 entries")
        return Action(pick=(values[0], values[1], values[2]), place=(values[3], values[4], values[5]))


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    done: bool
    drop_event: bool = False
    executed: bool = False


@dataclass
class Observation:
    """Top-down orthographic views plus the optional symbolic debug channel."""

    color: np.ndarray | None
    depth: np.ndarray | None
    symbolic: object | None = None


def step(
    state: SceneState,
    action: Action,
    goal,
    cfg: WorkspaceConfig,
    rng: np.random.Generator,
    prior_progress: float | None = None,
) -> tuple[SceneState, StepOutcome]:
    """Execute one pick-and-place.

    Reward is the newly earned satisfied-goal fraction: the increase of
    `goal.satisfied_fraction` over the best fraction seen so far
    (`prior_progress`, defaulting to the input state's fraction), so a
    re-satisfied sub-goal is never paid twice.
    """
    for pose, name in ((action.pick, "pick"), (action.place, "place")):
        if not cfg.in_bounds(pose[0], pose[1]):
            raise ValueError(f"{name} pose out of workspace bounds: {pose}")

    frac_before = goal.satisfied_fraction(state)
    baseline = frac_before if prior_progress is None else max(prior_progress, frac_before)

    new_state = state.copy()
    px, py, _ = action.pick
    target = new_state.topmost_at(px, py)
    if target is None or target.kind == "zone":
        # Nothing graspable under the pick point; the step is a no-op.
        frac = goal.satisfied_fraction(new_state)
        return new_state, StepOutcome(
            reward=max(0.0, frac - baseline), done=frac >= 1.0 - _EPS, executed=False
        )

    # Objects resting directly on the picked one fall straight down.
    for child in new_state.supported_children(target.id):
        child.supported_by = target.supported_by
    target.supported_by = None

    # Transport with per-substep drop hazard; a drop lands the object at a
    # uniformly random point of the straight pick -> place segment.
    drop_event = False
    dest_x, dest_y, dest_yaw = action.place
    if cfg.drop_probability > 0.0:
        for _ in range(cfg.transport_substeps):
            if rng.random() < cfg.drop_probability:
                u = rng.random()
                dest_x = px + u * (action.place[0] - px)
                dest_y = py + u * (action.place[1] - py)
                drop_event = True
                break

    support = new_state.support_at(dest_x, dest_y, exclude=target.id)
    target.pose = (dest_x, dest_y, wrap_angle(dest_yaw))
    target.supported_by = support.id if support is not None else None

    frac = goal.satisfied_fraction(new_state)
    return new_state, StepOutcome(
        reward=max(0.0, frac - baseline),
        done=frac >= 1.0 - _EPS,
        drop_event=drop_event,
        executed=True,
    )


def pose_match(
    state: SceneState,
    obj_id: int,
    target_pose: tuple[float, float, float],
    tol_pos: float = TOL_POS,
    tol_yaw: float = TOL_YAW,
    yaw_period: float | None = None,
) -> bool:
    """Position-and-orientation match within tolerances.

    `yaw_period` enables rotational symmetry (pi/2 for square blocks).
    """
    obj = state.object(obj_id)
    dx = obj.pose[0] - target_pose[0]
    dy = obj.pose[1] - target_pose[1]
    if math.hypot(dx, dy) > tol_pos:
        return False
    period = yaw_period if yaw_period is not None else 2.0 * math.pi
    return abs(yaw_error(obj.pose[2], target_pose[2], period)) <= tol_yaw


def zone_match(
    state: SceneState,
    obj_id: int,
    zone_id: int,
    threshold: float = ZONE_OVERLAP_THRESHOLD,
) -> bool:
    """Strict overlap test: object footprint must overlap the target region
    by more than `threshold` of its own area."""
    obj = state.object(obj_id)
    zone = state.object(zone_id)
    if zone.kind not in ("zone", "bowl"):
        raise WrongKindError(f"object {zone_id} is a {zone.kind}, not a zone or bowl")
    return overlap_fraction(obj.rect, zone.rect) > threshold


# ---------------------------------------------------------------------------
# Rendering


def _pixel_span(lo: float, hi: float, ppm: int, n: int) -> tuple[int, int]:
    # Pixels whose centers fall inside [lo, hi).
    a = int(math.ceil(lo * ppm - 0.5))
    b = int(math.ceil(hi * ppm - 0.5))
    return max(0, a), min(n, b)


def render(
    state: SceneState,
    cfg: WorkspaceConfig,
    rng: np.random.Generator | None = None,
    noisy: bool = False,
) -> Observation:
    """Painter's-order top-down rasterization by object height."""
    h, w = cfg.raster_height, cfg.raster_width
    ppm = cfg.pixels_per_meter
    color = np.empty((h, w, 3), dtype=np.uint8)
    color[:] = TABLE_COLOR
    depth = np.zeros((h, w), dtype=np.float64)

    order = sorted(state.iter_sorted(), key=lambda o: (state.z_top(o.id), o.id))
    for obj in order:
        x0, y0, x1, y1 = obj.rect
        c0, c1 = _pixel_span(x0, x1, ppm, w)
        # Image row 0 is the top edge (max y).
        r0 = max(0, int(math.ceil((cfg.bounds_y - y1) * ppm - 0.5)))
        r1 = min(h, int(math.ceil((cfg.bounds_y - y0) * ppm - 0.5)))
        if c0 >= c1 or r0 >= r1:
            continue
        z_top = state.z_top(obj.id)
        rgb = COLORS[obj.color]
        if obj.kind == "bowl":
            rows = (cfg.bounds_y - (np.arange(r0, r1) + 0.5) / ppm)[:, None]
            cols = ((np.arange(c0, c1) + 0.5) / ppm)[None, :]
            mask = (rows - obj.pose[1]) ** 2 + (cols - obj.pose[0]) ** 2 <= (
                BOWL_DIAMETER / 2.0
            ) ** 2
            color[r0:r1, c0:c1][mask] = rgb
            depth[r0:r1, c0:c1][mask] = z_top
        else:
            color[r0:r1, c0:c1] = rgb
            depth[r0:r1, c0:c1] = z_top

    if noisy:
        if rng is None:
            raise ValueError("noisy rendering requires an RNG")
        if cfg.noise_depth and cfg.obs_noise_sigma > 0.0:
            depth = np.maximum(0.0, depth + rng.normal(0.0, cfg.obs_noise_sigma, depth.shape))
        if cfg.noise_color:
            jitter = rng.integers(-2, 3, size=color.shape, dtype=np.int16)
            color = np.clip(color.astype(np.int16) + jitter, 0, 255).astype(np.uint8)

    return Observation(color=color, depth=depth)


# ---------------------------------------------------------------------------
# Raster serialization: 8-bit RGB PNG for color, 16-bit grayscale PNG for
# depth in integer millimeters.


def color_to_png(color: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(color, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_to_color(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"), dtype=np.uint8)


def depth_to_png(depth: np.ndarray) -> bytes:
    mm = np.round(depth * 1000.0).astype(np.uint16)
    buf = io.BytesIO()
    Image.fromarray(mm).save(buf, format="PNG")
    return buf.getvalue()


def png_to_depth(data: bytes) -> np.ndarray:
    mm = np.asarray(Image.open(io.BytesIO(data)), dtype=np.uint16)
    return mm.astype(np.float64) / 1000.0
