"""Reference external policy speaking the tabletop harness wire protocol.

Reads newline-delimited JSON requests on stdin and answers on stdout, one
response per request, echoing the request id.  Planning uses only the
symbolic observation channel: the heuristic proposes the first block that is
not yet in its matching-color bowl.  Actions are emitted as 6 discrete
tokens using the documented codec: per-dimension normalization over
x in [0, 1], y in [0, 0.5], yaw in [-pi, pi), 1024 uniform bins,
token = floor(norm * 1024) clamped to 1023, layout
(pick.x, pick.y, pick.yaw, place.x, place.y, place.yaw).

The client is deterministic and stateless across requests, so a recorded
transcript byte-matches across runs.
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import dataclass

BINS = 1024
RANGES = [(0.0, 1.0), (0.0, 0.5), (-math.pi, math.pi)] * 2

AREA_CENTERS = {
    "top-left": (0.25, 0.375),
    "top-right": (0.75, 0.375),
    "bottom-left": (0.25, 0.125),
    "bottom-right": (0.75, 0.125),
}

OFFSETS = {
    "left of": (-0.1, 0.0),
    "right of": (0.1, 0.0),
    "above": (0.0, 0.1),
    "below": (0.0, -0.1),
}

# Canonical sub-task sentence grammar.
_SENTENCE = re.compile(
    r"^Pick up the (big|small) (\w+) block and place it (.+)\.$"
)
_TGT_OBJECT = re.compile(r"^(?:on|in) the (?:(big|small) )?(\w+) (block|bowl|zone)$")
_TGT_AREA = re.compile(r"^in the (top-left|top-right|bottom-left|bottom-right) area$")
_TGT_OFFSET = re.compile(r"^(left of|right of|above|below) the (big|small) (\w+) block$")

# Two object centers closer than this count as "at the same spot".
NEAR = 0.04


class ClientError(Exception):
    pass


@dataclass
class SceneObject:
    id: int
    kind: str
    color: str
    size: str | None
    x: float
    y: float
    yaw: float

    @staticmethod
    def from_json(data: dict) -> "SceneObject":
        return SceneObject(
            id=int(data["id"]),
            kind=data["kind"],
            color=data["color"],
            size=data.get("size"),
            x=float(data["pose"][0]),
            y=float(data["pose"][1]),
            yaw=float(data["pose"][2]),
        )


def parse_scene(request: dict) -> list[SceneObject]:
    try:
        objects = request["obs"]["symbolic"]["scene"]["objects"]
    except (KeyError, TypeError) as exc:
        raise ClientError(f"request carries no symbolic scene: {exc}") from exc
    return sorted((SceneObject.from_json(o) for o in objects), key=lambda o: o.id)


def encode_tokens(values: list[float]) -> list[int]:
    tokens = []
    for value, (lo, hi) in zip(values, RANGES):
        value = min(max(value, lo), hi)
        norm = (value - lo) / (hi - lo)
        tokens.append(min(BINS - 1, int(norm * BINS)))
    return tokens


def _near(a: SceneObject, b: SceneObject) -> bool:
    return math.hypot(a.x - b.x, a.y - b.y) < NEAR


def plan_matching_pair(scene: list[SceneObject]) -> dict:
    """First block that is not yet in the bowl of its own color."""
    blocks = [o for o in scene if o.kind == "block"]
    bowls = [o for o in scene if o.kind == "bowl"]
    choice = None
    for block in blocks:
        matching = [b for b in bowls if b.color == block.color]
        if not matching:
            continue
        if any(_near(block, bowl) for bowl in matching):
            continue
        choice = (block, matching[0])
        break
    if choice is None and blocks and bowls:
        choice = (blocks[0], bowls[0])  # nothing sensible left; stay grammatical
    if choice is None:
        raise ClientError("scene has no block/bowl pair to act on")
    block, bowl = choice
    text = f"Pick up the {block.size} {block.color} block and place it in the {bowl.color} bowl."
    return {
        "verb": "pick_place",
        "source": {"kind": "block", "color": block.color, "size": block.size},
        "target": {"type": "object", "kind": "bowl", "color": bowl.color, "size": None},
        "text": text,
    }


def _find(scene: list[SceneObject], kind: str, color: str, size: str | None) -> list[SceneObject]:
    return [
        o for o in scene
        if o.kind == kind and o.color == color and (kind != "block" or o.size == size)
    ]


def _free_table_spot(scene: list[SceneObject]) -> tuple[float, float]:
    # Deterministic coarse scan for a spot away from every object.
    for yi in range(1, 10):
        for xi in range(1, 20):
            x, y = xi * 0.05, yi * 0.05
            if all(math.hypot(o.x - x, o.y - y) > 0.09 for o in scene):
                return x, y
    return 0.05, 0.05


def act_tokens(request: dict) -> list[int]:
    scene = parse_scene(request)
    text = request.get("subtask")
    if not isinstance(text, str):
        raise ClientError("act request carries no subtask text")
    m = _SENTENCE.match(text.strip())
    if m is None:
        raise ClientError(f"unparseable sub-task: {text!r}")
    size, color, rest = m.group(1), m.group(2), m.group(3)

    target_xy: tuple[float, float]
    target_yaw = 0.0
    avoid: SceneObject | None = None
    if rest == "on the table":
        target_xy = _free_table_spot(scene)
    elif (am := _TGT_AREA.match(rest)) is not None:
        target_xy = AREA_CENTERS[am.group(1)]
    elif (om := _TGT_OFFSET.match(rest)) is not None:
        anchors = _find(scene, "block", om.group(3), om.group(2))
        if not anchors:
            raise ClientError(f"no anchor block for: {rest!r}")
        dx, dy = OFFSETS[om.group(1)]
        target_xy = (anchors[0].x + dx, anchors[0].y + dy)
    elif (tm := _TGT_OBJECT.match(rest)) is not None:
        targets = _find(scene, tm.group(3), tm.group(2), tm.group(1))
        if not targets:
            raise ClientError(f"no target object for: {rest!r}")
        avoid = targets[0]
        target_xy = (targets[0].x, targets[0].y)
        target_yaw = targets[0].yaw
    else:
        raise ClientError(f"unsupported target phrase: {rest!r}")

    sources = _find(scene, "block", color, size)
    if not sources:
        raise ClientError(f"no source block matching {size} {color}")
    source = next(
        (s for s in sources if avoid is None or not _near(s, avoid)), sources[0]
    )
    return encode_tokens([source.x, source.y, source.yaw, target_xy[0], target_xy[1], target_yaw])


def handle_request(line: str) -> dict:
    req_id = None
    try:
        request = json.loads(line)
        if not isinstance(request, dict):
            raise ClientError("request frame is not an object")
        req_id = request.get("id")
        req_type = request.get("type")
        if req_type == "plan":
            return {"id": req_id, "subtask": plan_matching_pair(parse_scene(request))}
        if req_type == "act":
            return {"id": req_id, "tokens": act_tokens(request)}
        raise ClientError(f"unknown request type: {req_type!r}")
    except ClientError as exc:
        return {"id": req_id, "error": str(exc)}
    except Exception as exc:  # malformed JSON and anything else: stay alive
        return {"id": req_id, "error": f"{type(exc).__name__}: {exc}"}


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        response = handle_request(line)
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()
    return 0
