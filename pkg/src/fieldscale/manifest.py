"""Run manifests: a machine-readable record of what produced which bytes.

Every CLI command writes one next to its artifacts. The manifest pins
input digests, parameters, seeds, library versions, and output digests,
and contains no timestamps, so re-running a command with identical
inputs yields an identical manifest.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import numpy
import scipy

from . import __version__

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def tree_digest(root: str | Path, skip: tuple[str, ...] = (MANIFEST_NAME,)) -> dict[str, str]:
    """Digest of every file under root, keyed by posix-style relative path."""
    root = Path(root)
    out: dict[str, str] = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(root).as_posix()
        if rel in skip:
            continue
        out[rel] = file_digest(path)
    return out


def collect_versions() -> dict[str, str]:
    return {
        "fieldscale": __version__,
        "python": "%d.%d.%d" % sys.version_info[:3],
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
    }


def digest_inputs(inputs: dict[str, str | Path]) -> dict[str, dict]:
    """Digest each named input; directories digest to their file tree."""
    out: dict[str, dict] = {}
    for name in sorted(inputs):
        path = Path(inputs[name])
        entry: dict = {"path": str(inputs[name])}
        if path.is_dir():
            entry["tree"] = tree_digest(path, skip=())
        else:
            entry["digest"] = file_digest(path)
        out[name] = entry
    return out


def write_manifest(
    out_dir: str | Path,
    command: str,
    inputs: dict[str, str | Path],
    params: dict,
    seeds: dict[str, int],
) -> Path:
    """Digest out_dir's artifacts and write the manifest beside them."""
    out_dir = Path(out_dir)
    payload = {
        "command": command,
        "inputs": digest_inputs(inputs),
        "params": params,
        "seeds": seeds,
        "versions": collect_versions(),
        "outputs": tree_digest(out_dir),
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")
    return path


def write_file_manifest(
    out_file: str | Path,
    command: str,
    inputs: dict[str, str | Path],
    params: dict,
    seeds: dict[str, int],
) -> Path:
    """Manifest for a single-file artifact, written as <file>.manifest.json."""
    out_file = Path(out_file)
    payload = {
        "command": command,
        "inputs": digest_inputs(inputs),
        "params": params,
        "seeds": seeds,
        "versions": collect_versions(),
        "outputs": {out_file.name: file_digest(out_file)},
    }
    path = out_file.parent / (out_file.name + ".manifest.json")
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")
    return path


def read_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text("utf-8"))


def verify_outputs(manifest_path: str | Path) -> list[str]:
    """Paths whose current digest disagrees with the manifest (empty = clean)."""
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    stale = []
    for rel, digest in sorted(manifest.get("outputs", {}).items()):
        target = root / rel
        if not target.is_file() or file_digest(target) != digest:
            stale.append(rel)
    return stale
