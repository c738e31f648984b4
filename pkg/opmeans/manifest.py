"""Run manifests and solver defaults.

Every command that writes a file also writes `<out>.manifest.json` with
the command, its inputs, the effective configuration, the seed, the tool
version and a timestamp. Solver defaults live in
config/solver_defaults.yaml and are resolved per barycenter kind.
"""

import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import yaml
from tzlocal import get_localzone

from opmeans.config import MANIFEST_SUFFIX, SOLVER_DEFAULTS_PATH, TOOL_VERSION
from opmeans.formats import write_json


@dataclass
class RunManifest:
    command: str
    inputs: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = TOOL_VERSION
    timestamp: str = ""

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunManifest":
        return cls(**{key: obj[key] for key in cls.__dataclass_fields__ if key in obj})


def timestamp_now() -> str:
    """ISO timestamp in the local zone, or from SOURCE_DATE_EPOCH when set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now(get_localzone()).isoformat(timespec="seconds")


def write_manifest(out_path: str, manifest: RunManifest) -> str:
    """Write the manifest next to `out_path` and return its path."""
    if not manifest.timestamp:
        manifest.timestamp = timestamp_now()
    manifest_path = str(out_path) + MANIFEST_SUFFIX
    write_json(manifest_path, manifest.to_json())
    return manifest_path


def load_solver_defaults(path: Optional[str] = None) -> dict:
    """Parse the solver defaults YAML file.

    Args:
        path: Optional path override. Defaults to config/solver_defaults.yaml.

    Returns:
        Parsed defaults dict.

    Raises:
        FileNotFoundError: If the file doesn't exist.
        ValueError: If the file version is unsupported.
    """
    defaults_path = Path(path) if path else Path(SOLVER_DEFAULTS_PATH)
    if not defaults_path.exists():
        raise FileNotFoundError(f"Solver defaults not found: {defaults_path}")

    with open(defaults_path) as f:
        parsed = yaml.safe_load(f) or {}

    version = parsed.get("version", "")
    if version != "1":
        raise ValueError(f"Unsupported solver defaults version: {version!r} (expected '1')")

    return parsed


def resolve_solver_settings(defaults: dict, kind: str, overrides: Optional[dict] = None) -> dict:
    """Merge file defaults, per-kind settings and explicit overrides (later wins).

    Overrides whose value is None are ignored, so unset CLI flags fall through.
    """
    merged = dict(defaults.get("defaults", {}))
    merged.update(defaults.get("kinds", {}).get(kind) or {})
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return merged
