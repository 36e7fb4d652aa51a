"""Run manifests: every CLI run records what went in and what came out."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence


def file_checksum(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    manifest_path: str | Path,
    command: str,
    config_path: str | None,
    seeds: Sequence[int],
    inputs: Sequence[str | Path],
    outputs: Sequence[str | Path],
    extra: Mapping | None = None,
) -> dict:
    from . import __version__

    manifest = {
        "tool": "lexcomp",
        "tool_version": __version__,
        "command": command,
        "config": config_path,
        "seeds": [int(s) for s in seeds],
        "inputs": {str(p): file_checksum(p) for p in inputs if Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest["extra"] = dict(extra)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
