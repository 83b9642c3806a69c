"""Expert-demonstration dataset: generation, serialization, verified loading.

Layout: one directory per episode holding the per-step color/depth PNGs and a
single JSON record; one manifest at the root.  Byte content is a pure
function of (task set, episodes per task, master seed): rasters are written
noiseless and JSON is canonicalized, so regeneration is bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .env import TabletopEnv, episode_seed, policy_rng
from .oracle import oracle_decompose
from .subtasks import SubTask
from .tasks import get_task
from .tokenizer import ActionCodec
from .world import Action, WorkspaceConfig, color_to_png, depth_to_png

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
RECORD_NAME = "record.json"

log = logging.getLogger(__name__)


class DatasetError(Exception):
    pass


class DatasetIntegrityError(DatasetError):
    pass


@dataclass
class StepRecord:
    subtask: SubTask
    action: Action
    action_tokens: list[int]
    reward: float
    color_path: Path | None
    depth_path: Path | None


@dataclass
class EpisodeRecord:
    task_id: str
    seed: int
    index: int
    goal_text: str
    steps: list[StepRecord]
    directory: Path


@dataclass
class GenerationConfig:
    episodes_per_task: dict[str, int]
    master_seed: int
    codec: ActionCodec = field(default_factory=ActionCodec)

    def hash(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "master_seed": self.master_seed,
            "episodes_per_task": dict(sorted(self.episodes_per_task.items())),
            "codec": self.codec.to_json(),
            "observations": "noiseless",
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _canonical_json(data: dict) -> bytes:
    return (json.dumps(data, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _build_episode(task_id: str, seed: int, codec: ActionCodec):
    """Roll out the oracle decomposition, collecting observations and rewards."""
    env = TabletopEnv(task_id, seed, cfg=WorkspaceConfig(), render_rasters=True)
    plan = oracle_decompose(env.initial_state, env.goal, policy_rng(seed), codec=codec)
    steps = []
    for subtask, action in plan:
        obs = env.observe()
        _, reward, _, _ = env.step(action)
        steps.append((obs, subtask, action, reward))
    if env.satisfied_fraction() < 1.0:
        raise DatasetError(f"{task_id} seed {seed}: decomposition did not solve the scene")
    return env, steps


def _replay_ok(task_id: str, seed: int, steps) -> bool:
    env = TabletopEnv(task_id, seed, cfg=WorkspaceConfig(), render_rasters=False)
    for _, _, action, reward in steps:
        _, replay_reward, _, _ = env.step(action)
        if replay_reward != reward:
            return False
    return env.satisfied_fraction() >= 1.0


def generate_episode(task_id: str, index: int, master_seed: int, codec: ActionCodec):
    """Build one replay-verified episode, retrying with fresh derived seeds."""
    retries = 0
    for attempt in range(3):
        seed = episode_seed(master_seed, index) if attempt == 0 else episode_seed(
            master_seed, (index + 1) * 1_000_003 + attempt
        )
        env, steps = _build_episode(task_id, seed, codec)
        if _replay_ok(task_id, seed, steps):
            return env, seed, steps, retries
        retries += 1
        log.warning("replay verification failed for %s episode %d, retrying", task_id, index)
    raise DatasetError(f"{task_id} episode {index}: replay verification kept failing")


def _write_episode(
    directory: Path, task_id: str, seed: int, index: int, master_seed: int,
    env: TabletopEnv, steps, codec: ActionCodec,
) -> str:
    directory.mkdir(parents=True, exist_ok=True)
    files_sha = {}
    step_entries = []
    for t, (obs, subtask, action, reward) in enumerate(steps):
        color_name = f"step_{t:03d}_color.png"
        depth_name = f"step_{t:03d}_depth.png"
        color_bytes = color_to_png(obs.color)
        depth_bytes = depth_to_png(obs.depth)
        (directory / color_name).write_bytes(color_bytes)
        (directory / depth_name).write_bytes(depth_bytes)
        files_sha[color_name] = _sha256(color_bytes)
        files_sha[depth_name] = _sha256(depth_bytes)
        step_entries.append(
            {
                "color": color_name,
                "depth": depth_name,
                "subtask": subtask.to_json(),
                "action_continuous": action.as_list(),
                "action_tokens": codec.encode(action),
                "reward": reward,
            }
        )
    record = {
        "schema_version": SCHEMA_VERSION,
        "task_id": task_id,
        "seed": seed,
        "index": index,
        "master_seed": master_seed,
        "goal_text": env.goal_text,
        "codec": codec.to_json(),
        "steps": step_entries,
        "files_sha256": files_sha,
    }
    payload = _canonical_json(record)
    (directory / RECORD_NAME).write_bytes(payload)
    return _sha256(payload)


def generate(
    task_ids: list[str],
    n_episodes: int,
    master_seed: int,
    out_dir: str | Path,
    codec: ActionCodec | None = None,
    progress: bool = False,
) -> dict:
    """Generate `n_episodes` verified episodes per task and write the manifest."""
    codec = codec or ActionCodec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = GenerationConfig(
        episodes_per_task={t: n_episodes for t in task_ids},
        master_seed=master_seed,
        codec=codec,
    )
    tasks_entry = {}
    total_subtasks = 0
    total_retries = 0
    for task_id in task_ids:
        spec = get_task(task_id)
        episodes = []
        for index in range(n_episodes):
            env, seed, steps, retries = generate_episode(task_id, index, master_seed, codec)
            total_retries += retries
            rel = Path(task_id) / f"episode_{index:05d}"
            record_sha = _write_episode(
                out / rel, task_id, seed, index, master_seed, env, steps, codec
            )
            episodes.append({"dir": str(rel), "seed": seed, "record_sha256": record_sha})
            total_subtasks += len(steps)
            if progress:
                print(f"{task_id} episode {index}: {len(steps)} steps", file=sys.stderr)
        tasks_entry[task_id] = {
            "split": spec.split,
            "count": n_episodes,
            "episodes": episodes,
        }
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "codec": codec.to_json(),
        "generation": {
            "master_seed": master_seed,
            "episodes_per_task": dict(sorted(config.episodes_per_task.items())),
            "observations": "noiseless",
            "replay_retries": total_retries,
        },
        "config_hash": config.hash(),
        "total_subtasks": total_subtasks,
        "tasks": tasks_entry,
    }
    (out / MANIFEST_NAME).write_bytes(_canonical_json(manifest))
    return manifest


def read_manifest(root: str | Path) -> dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise DatasetError(f"no manifest at {path}")
    manifest = json.loads(path.read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(
            f"unsupported schema version {manifest.get('schema_version')!r}"
        )
    return manifest


def _load_episode(root: Path, entry: dict, task_id: str) -> EpisodeRecord:
    directory = root / entry["dir"]
    record_path = directory / RECORD_NAME
    if not record_path.exists():
        raise DatasetIntegrityError(f"{entry['dir']}: missing {RECORD_NAME}")
    payload = record_path.read_bytes()
    if _sha256(payload) != entry["record_sha256"]:
        raise DatasetIntegrityError(f"{entry['dir']}: record checksum mismatch")
    record = json.loads(payload)
    for name, expected in record["files_sha256"].items():
        data = (directory / name).read_bytes() if (directory / name).exists() else b""
        if _sha256(data) != expected:
            raise DatasetIntegrityError(f"{entry['dir']}: checksum mismatch for {name}")
    steps = [
        StepRecord(
            subtask=SubTask.from_json(s["subtask"]),
            action=Action.from_list(s["action_continuous"]),
            action_tokens=list(s["action_tokens"]),
            reward=s["reward"],
            color_path=directory / s["color"],
            depth_path=directory / s["depth"],
        )
        for s in record["steps"]
    ]
    return EpisodeRecord(
        task_id=task_id,
        seed=record["seed"],
        index=record["index"],
        goal_text=record["goal_text"],
        steps=steps,
        directory=directory,
    )


def load(
    root: str | Path,
    tasks: list[str] | None = None,
    split: str | None = None,
    skip_corrupt: bool = False,
) -> Iterator[EpisodeRecord]:
    """Lazily iterate episodes, verifying per-episode checksums on read.

    With `skip_corrupt`, integrity failures are logged and skipped so the
    rest of the dataset stays readable; otherwise they raise, identifying
    the offending episode.
    """
    root = Path(root)
    manifest = read_manifest(root)
    for task_id, task_entry in sorted(manifest["tasks"].items()):
        if tasks is not None and task_id not in tasks:
            continue
        if split is not None and task_entry["split"] != split:
            continue
        for entry in task_entry["episodes"]:
            try:
                yield _load_episode(root, entry, task_id)
            except DatasetIntegrityError as exc:
                if not skip_corrupt:
                    raise
                log.warning("skipping corrupt episode: %s", exc)


def replay_episode(record: EpisodeRecord) -> bool:
    """Re-execute a stored episode noiselessly and check rewards and solution."""
    env = TabletopEnv(record.task_id, record.seed, cfg=WorkspaceConfig())
    for step_record in record.steps:
        _, reward, _, _ = env.step(step_record.action)
        if reward != step_record.reward:
            return False
    return env.satisfied_fraction() >= 1.0
