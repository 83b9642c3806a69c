"""Policies: scripted oracle, error-injecting wrappers, external subprocess.

A policy exposes two entry points mirroring the two halves of hierarchical
control: `plan` proposes the next atomic sub-task from the observation and
goal, `act` turns a sub-task into a pick-and-place action.  A flat policy is
the degenerate case of `act` with a fixed placeholder sub-task.

The external policy speaks newline-delimited JSON over a child process's
standard streams; see `build_plan_request` / `build_act_request` for the
frame shapes.
"""

from __future__ import annotations

import base64
import json
import math
import select
import shlex
import subprocess
import time
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .env import SymbolicSnapshot
from .geometry import AREA_NAMES
from .oracle import (
    AlreadyDoneError,
    action_for_subtask,
    choose_subtask,
    valid_next_subtasks,
)
from .subtasks import (
    ObjectSelector,
    SubTask,
    SubTaskError,
    TargetArea,
    TargetObject,
    TargetTable,
    resolution_key,
)
from .tokenizer import ActionCodec, TokenizerError
from .world import TOL_POS, Action, Observation, SceneState, WorkspaceConfig, color_to_png, depth_to_png

ACT_OFFSET_MIN = 0.05  # meters; must stay >= 2x pose tolerance
ACT_OFFSET_MAX = 0.20


class PolicyError(Exception):
    """Base class for recoverable policy failures (a failed step for control)."""


class MissingSymbolicError(PolicyError):
    pass


class PolicySpawnError(Exception):
    """Fatal: the external policy process could not be started at all."""


class PolicyTimeoutError(PolicyError):
    pass


class ProtocolError(PolicyError):
    pass


class TokenRangeError(ProtocolError):
    pass


class PolicyInterface(Protocol):
    def plan(self, obs: Observation, goal_text: str) -> SubTask: ...

    def act(self, obs: Observation, goal_text: str, subtask: SubTask) -> Action: ...


def _snapshot(obs: Observation) -> SymbolicSnapshot:
    if obs.symbolic is None:
        raise MissingSymbolicError("oracle requires the symbolic observation channel")
    return obs.symbolic


class OraclePolicy:
    """Scripted expert with full scene access through the symbolic channel.

    Actions are emitted pre-quantized through the codec, exactly as a
    token-emitting model would produce them.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        cfg: WorkspaceConfig | None = None,
        codec: ActionCodec | None = None,
    ):
        self._rng = rng
        self._cfg = cfg or WorkspaceConfig()
        self._codec = codec or ActionCodec()

    def plan(self, obs: Observation, goal_text: str) -> SubTask:
        snap = _snapshot(obs)
        return choose_subtask(snap.scene, snap.goal, self._rng)

    def act(self, obs: Observation, goal_text: str, subtask: SubTask) -> Action:
        snap = _snapshot(obs)
        return action_for_subtask(
            snap.scene, snap.goal, subtask, self._rng, self._cfg, self._codec
        )


@dataclass(frozen=True)
class NoiseConfig:
    """Injection rates for the two model-side failure types."""

    eps_plan: float = 0.0
    eps_act: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps_plan <= 1.0 or not 0.0 <= self.eps_act <= 1.0:
            raise ValueError("noise rates must be in [0, 1]")


def enumerate_subtask_space(scene: SceneState) -> list[SubTask]:
    """All grammatical sub-tasks over the scene's selectors and regions."""
    block_selectors = sorted(
        {
            ObjectSelector("block", o.color, o.size)
            for o in scene.iter_sorted()
            if o.kind == "block"
        },
        key=lambda s: (s.color, s.size or ""),
    )
    container_selectors = sorted(
        {
            ObjectSelector(o.kind, o.color)
            for o in scene.iter_sorted()
            if o.kind in ("bowl", "zone")
        },
        key=lambda s: (s.kind, s.color),
    )
    out: list[SubTask] = []
    for source in block_selectors:
        targets: list = [TargetObject(s) for s in block_selectors if s != source]
        targets += [TargetObject(s) for s in container_selectors]
        targets += [TargetArea(name) for name in AREA_NAMES]
        targets.append(TargetTable())
        out.extend(SubTask(source=source, target=t) for t in targets)
    return out


class NoisyPolicy:
    """Wraps a policy with seed-deterministic plan and action corruption.

    A corrupted plan is a grammatical sub-task that is not equivalent to any
    valid next sub-task; a corrupted action offsets the place pose by at
    least twice the pose tolerance.
    """

    def __init__(self, inner: PolicyInterface, cfg: NoiseConfig, rng: np.random.Generator):
        self.inner = inner
        self.cfg = cfg
        self._rng = rng
        self._workspace = WorkspaceConfig()

    def plan(self, obs: Observation, goal_text: str) -> SubTask:
        subtask = self.inner.plan(obs, goal_text)
        if self.cfg.eps_plan > 0.0 and self._rng.random() < self.cfg.eps_plan:
            corrupted = self._corrupt_plan(obs)
            if corrupted is not None:
                return corrupted
        return subtask

    def _corrupt_plan(self, obs: Observation) -> SubTask | None:
        snap = _snapshot(obs)
        try:
            valid = valid_next_subtasks(snap.scene, snap.goal)
        except AlreadyDoneError:
            valid = []
        valid_keys = {resolution_key(s, snap.scene) for s in valid}
        wrong = [
            s
            for s in enumerate_subtask_space(snap.scene)
            if resolution_key(s, snap.scene) not in valid_keys
        ]
        if not wrong:
            return None
        return wrong[int(self._rng.integers(len(wrong)))]

    def act(self, obs: Observation, goal_text: str, subtask: SubTask) -> Action:
        action = self.inner.act(obs, goal_text, subtask)
        if self.cfg.eps_act > 0.0 and self._rng.random() < self.cfg.eps_act:
            return self._corrupt_action(action)
        return action

    def _corrupt_action(self, action: Action) -> Action:
        assert ACT_OFFSET_MIN >= 2 * TOL_POS
        px, py, pyaw = action.place
        for _ in range(50):
            theta = self._rng.uniform(0.0, 2.0 * math.pi)
            dist = self._rng.uniform(ACT_OFFSET_MIN, ACT_OFFSET_MAX)
            x = px + dist * math.cos(theta)
            y = py + dist * math.sin(theta)
            if self._workspace.in_bounds(x, y):
                return Action(pick=action.pick, place=(x, y, pyaw))
        # Workspace corner fallback; still a large miss.
        return Action(pick=action.pick, place=(0.0, 0.0, pyaw))


def with_noise(inner: PolicyInterface, cfg: NoiseConfig, rng: np.random.Generator) -> NoisyPolicy:
    return NoisyPolicy(inner, cfg, rng)


# ---------------------------------------------------------------------------
# Wire protocol


def encode_observation(obs: Observation, include_symbolic: bool = True) -> dict:
    color_b64 = (
        base64.b64encode(color_to_png(obs.color)).decode("ascii") if obs.color is not None else ""
    )
    depth_b64 = (
        base64.b64encode(depth_to_png(obs.depth)).decode("ascii") if obs.depth is not None else ""
    )
    payload: dict = {"color_png_b64": color_b64, "depth_png_b64": depth_b64}
    if include_symbolic and obs.symbolic is not None:
        payload["symbolic"] = obs.symbolic.to_json()
    return payload


def build_plan_request(req_id: int, goal_text: str, obs: Observation) -> dict:
    return {"id": req_id, "type": "plan", "goal": goal_text, "obs": encode_observation(obs)}


def build_act_request(req_id: int, goal_text: str, subtask: SubTask, obs: Observation) -> dict:
    return {
        "id": req_id,
        "type": "act",
        "goal": goal_text,
        "subtask": subtask.text,
        "obs": encode_observation(obs),
    }


class ExternalPolicy:
    """Policy hosted by a child process speaking the NDJSON protocol.

    One request is in flight at a time; responses must echo the request id.
    Every malformed response surfaces as a distinct PolicyError subclass so
    the controller can treat it as a failed step instead of crashing.
    """

    def __init__(self, command: str | list[str], timeout: float = 10.0, codec: ActionCodec | None = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._codec = codec or ActionCodec()
        self._proc: subprocess.Popen | None = None
        self._buffer = b""
        self._next_id = 1

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    bufsize=0,
                )
            except OSError as exc:
                raise PolicySpawnError(f"cannot spawn policy process: {exc}") from exc
            self._buffer = b""
        return self._proc

    def _read_line(self, deadline: float) -> bytes:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PolicyTimeoutError(f"policy response timed out after {self.timeout}s")
            ready, _, _ = select.select([proc.stdout], [], [], remaining)
            if not ready:
                raise PolicyTimeoutError(f"policy response timed out after {self.timeout}s")
            chunk = proc.stdout.read(65536)
            if not chunk:
                raise ProtocolError("policy process closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _request(self, payload: dict) -> dict:
        proc = self._ensure_started()
        assert proc.stdin is not None
        data = (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")
        try:
            proc.stdin.write(data)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"policy process pipe broken: {exc}") from exc
        line = self._read_line(time.monotonic() + self.timeout)
        try:
            response = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(f"malformed response frame: {exc}") from exc
        if not isinstance(response, dict):
            raise ProtocolError("response frame is not an object")
        if response.get("id") != payload["id"]:
            raise ProtocolError(
                f"response id {response.get('id')!r} does not echo request id {payload['id']}"
            )
        if "error" in response:
            raise ProtocolError(f"policy error response: {response['error']}")
        return response

    def plan(self, obs: Observation, goal_text: str) -> SubTask:
        req_id = self._next_id
        self._next_id += 1
        response = self._request(build_plan_request(req_id, goal_text, obs))
        try:
            return SubTask.from_json(response["subtask"])
        except (KeyError, TypeError, SubTaskError) as exc:
            raise ProtocolError(f"malformed plan response: {exc}") from exc

    def act(self, obs: Observation, goal_text: str, subtask: SubTask) -> Action:
        req_id = self._next_id
        self._next_id += 1
        response = self._request(build_act_request(req_id, goal_text, subtask, obs))
        tokens = response.get("tokens")
        if not isinstance(tokens, list) or len(tokens) != 6 or not all(
            isinstance(t, int) and not isinstance(t, bool) for t in tokens
        ):
            raise ProtocolError(f"act response must carry 6 integer tokens, got {tokens!r}")
        try:
            return self._codec.decode(tokens)
        except TokenizerError as exc:
            raise TokenRangeError(str(exc)) from exc

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.wait(timeout=2.0)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def __enter__(self) -> "ExternalPolicy":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def serve_oracle(stdin, stdout, seed: int) -> None:
    """Expose the in-process oracle over the wire protocol (stdio loop).

    Reference endpoint for differential testing: identical RNG stream and
    logic as `OraclePolicy`, fed from the request's symbolic channel.
    """
    from .env import policy_rng

    rng = policy_rng(seed)
    cfg = WorkspaceConfig()
    codec = ActionCodec()
    for raw in stdin:
        raw = raw.strip()
        if not raw:
            continue
        request: object = None
        try:
            request = json.loads(raw)
            req_id = request["id"]
            snap = SymbolicSnapshot.from_json(request["obs"]["symbolic"])
            if request["type"] == "plan":
                subtask = choose_subtask(snap.scene, snap.goal, rng)
                response = {"id": req_id, "subtask": subtask.to_json()}
            elif request["type"] == "act":
                from .subtasks import parse_subtask_text

                subtask = parse_subtask_text(request["subtask"])
                action = action_for_subtask(snap.scene, snap.goal, subtask, rng, cfg, codec)
                response = {"id": req_id, "tokens": codec.encode(action)}
            else:
                response = {"id": req_id, "error": f"unknown request type {request['type']!r}"}
        except Exception as exc:  # noqa: BLE001 - protocol servers must not die
            response = {"id": request.get("id") if isinstance(request, dict) else None,
                        "error": str(exc)}
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()
