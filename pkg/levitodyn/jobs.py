"""
Run manifests and parallel work for levitodyn.

Every CLI run that writes files records a manifest next to its main output: the
config snapshot, seed, command line and the sha256 of each file written. Replaying a
manifest re-runs the command line and checks the digests.
"""

import datetime
import hashlib
import json
import logging
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from levitodyn import __version__

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    id: str
    created_at: str
    updated_at: str
    status: str
    tool_version: str
    command: List[str]
    config: Dict[str, Any]
    seeds: Dict[str, Any]
    outputs: Dict[str, str] = field(default_factory=dict)
    error_message: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def manifest_path_for(output: str | Path) -> Path:
    """`<out>.manifest.json` next to the main output."""
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def create_run_manifest(command: List[str], config: Dict[str, Any], seeds: Dict[str, Any]) -> RunManifest:
    """
    Start a manifest for a run.

    Args:
        command: CLI arguments (without the program name)
        config: Raw config snapshot the run was built from
        seeds: Master seed and any derived seed info

    Returns:
        RunManifest with status "running"
    """
    now = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return RunManifest(
        id=str(uuid.uuid4()),
        created_at=now,
        updated_at=now,
        status="running",
        tool_version=__version__,
        command=list(command),
        config=config,
        seeds=seeds,
    )


def record_output(manifest: RunManifest, path: str | Path) -> None:
    """Add a written file and its digest."""
    manifest.outputs[str(path)] = file_sha256(path)


def update_run_status(manifest: RunManifest, status: str, error_message: Optional[str] = None) -> None:
    """
    Update manifest status (running, completed, failed) and optionally store an error.
    """
    manifest.status = status
    manifest.updated_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if error_message is not None:
        manifest.error_message = error_message


def save_manifest(manifest: RunManifest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Manifest written to {path}")
    return path


def load_manifest(path: str | Path) -> RunManifest:
    from levitodyn.core import ConfigError

    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"manifest {path} is not valid JSON: {e}") from None
    try:
        return RunManifest(**raw)
    except TypeError as e:
        raise ConfigError(f"manifest {path} has unexpected fields: {e}") from None


def verify_outputs(manifest: RunManifest) -> List[str]:
    """Files whose current digest differs from the recorded one (missing files included)."""
    mismatched = []
    for path, expected in sorted(manifest.outputs.items()):
        if not Path(path).exists() or file_sha256(path) != expected:
            mismatched.append(path)
    return mismatched


def replay(path: str | Path, runner: Callable[[List[str]], int]) -> Dict[str, Any]:
    """
    Re-run a manifest's command line through `runner` and compare output digests.

    Returns:
        dict with the runner's exit code, matched and mismatched files
    """
    manifest = load_manifest(path)
    logger.info(f"Replaying run {manifest.id}: {' '.join(manifest.command)}")
    code = runner(list(manifest.command))
    mismatched = verify_outputs(manifest)
    matched = [p for p in sorted(manifest.outputs) if p not in mismatched]
    if mismatched:
        logger.error(f"Replay produced different outputs: {mismatched}")
    return {"exit_code": code, "matched": matched, "mismatched": mismatched, "id": manifest.id}


# ---------------------------------------------------------------------------
# Parallel work
# ---------------------------------------------------------------------------

def parallel_map(fn: Callable, items: list, jobs: int = 1, label: str = "task") -> list:
    """
    Apply fn to every item on up to `jobs` threads. Results keep the input order, so
    output never depends on scheduling.
    """
    total = len(items)

    def run(indexed):
        i, item = indexed
        result = fn(item)
        logger.info(f"[{i + 1}/{total}] {label} done")
        return result

    if jobs <= 1:
        return [run(x) for x in enumerate(items)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, enumerate(items)))
