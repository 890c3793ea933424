"""Durable review state: append-only decision log, snapshots, queues.

Layout under the data directory, one subdirectory per project:

    <data_dir>/<project>/decisions.log   append-only JSON lines
    <data_dir>/<project>/snapshot.json   accelerator, never authoritative
    <data_dir>/<project>/queue.json      current review queue (versioned)
    <data_dir>/<project>/project.json    free-form project metadata

Every decision line carries a strictly increasing seq. The log is the
source of truth: state is whatever a full replay yields, and the snapshot
is only trusted as a starting point when its seq is present in the log's
range. A torn final line (crash mid-append) is dropped along with anything
after it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Mapping

from ..errors import FormatError, NotFound

UnitKey = tuple[str, int]

DECISIONS = ("accept", "reject", "pending")
SNAPSHOT_EVERY = 50


@dataclass(frozen=True)
class DecisionRecord:
    seq: int
    unit: UnitKey
    code: str
    decision: str
    reviewer: str
    timestamp: str = ""

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "unit": [self.unit[0], self.unit[1]],
            "code": self.code,
            "decision": self.decision,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_json(payload: Mapping) -> "DecisionRecord":
        unit = payload["unit"]
        return DecisionRecord(
            seq=int(payload["seq"]),
            unit=(str(unit[0]), int(unit[1])),
            code=str(payload["code"]),
            decision=str(payload["decision"]),
            reviewer=str(payload["reviewer"]),
            timestamp=str(payload.get("timestamp", "")),
        )


@dataclass
class ReviewState:
    """Latest decision per (unit, code), as derived by replaying the log."""

    latest: dict[tuple[UnitKey, str], DecisionRecord] = field(default_factory=dict)
    max_seq: int = 0
    dropped_lines: int = 0

    def apply(self, record: DecisionRecord) -> None:
        self.latest[(record.unit, record.code)] = record
        self.max_seq = max(self.max_seq, record.seq)

    def decision_for(self, unit: UnitKey, code: str) -> DecisionRecord | None:
        return self.latest.get((unit, code))

    def decided(self, code: str) -> dict[UnitKey, str]:
        """Units whose latest decision for the code is accept or reject."""
        return {
            unit: rec.decision
            for (unit, c), rec in self.latest.items()
            if c == code and rec.decision in ("accept", "reject")
        }


class ProjectStore:
    """Filesystem-backed review state for one project."""

    def __init__(self, data_dir: str | Path, project: str):
        self.root = Path(data_dir) / project
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / "decisions.log"
        self.snapshot_path = self.root / "snapshot.json"
        self.queue_path = self.root / "queue.json"
        self.project_path = self.root / "project.json"
        records, dropped = _read_records(self.log_path)
        if dropped:
            # truncate to the valid prefix so the next append starts clean
            self._atomic_write(
                self.log_path,
                "\n".join(json.dumps(r.to_json(), sort_keys=True) for r in records),
            )
        self.state = self._build_state(records, dropped)

    # ------------------------------------------------------------- the log

    def load_state(self) -> ReviewState:
        records, dropped = _read_records(self.log_path)
        return self._build_state(records, dropped)

    def _build_state(self, records: list[DecisionRecord], dropped: int) -> ReviewState:
        """Replay the log; use the snapshot as a base only when it is safe."""
        max_seq = records[-1].seq if records else 0
        state = ReviewState(dropped_lines=dropped)
        start_after = 0
        if self.snapshot_path.exists():
            try:
                snap = json.loads(self.snapshot_path.read_text("utf-8"))
                snap_seq = int(snap["seq"])
                if snap_seq <= max_seq:
                    for payload in snap["decisions"]:
                        state.apply(DecisionRecord.from_json(payload))
                    state.max_seq = snap_seq
                    start_after = snap_seq
                # a snapshot claiming more than the log holds is distrusted
            except (ValueError, KeyError, TypeError):
                pass
        for record in records:
            if record.seq > start_after:
                state.apply(record)
        return state

    def append_decision(
        self, unit: UnitKey, code: str, decision: str, reviewer: str
    ) -> tuple[DecisionRecord, bool]:
        """Persist a decision; returns (record, appended).

        Posting the decision the log already shows as latest for this unit,
        code, and reviewer is a no-op that returns the existing record, so
        retries are safe. A different decision (including "pending" to undo)
        appends a superseding record.
        """
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
        current = self.state.decision_for(unit, code)
        if (
            current is not None
            and current.decision == decision
            and current.reviewer == reviewer
        ):
            return current, False
        record = DecisionRecord(
            seq=self.state.max_seq + 1,
            unit=unit,
            code=code,
            decision=decision,
            reviewer=reviewer,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        line = json.dumps(record.to_json(), sort_keys=True) + "\n"
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())
        self.state.apply(record)
        if record.seq % SNAPSHOT_EVERY == 0:
            self.write_snapshot()
        return record, True

    def write_snapshot(self) -> None:
        payload = {
            "seq": self.state.max_seq,
            "decisions": [
                rec.to_json()
                for key, rec in sorted(
                    self.state.latest.items(), key=lambda kv: kv[1].seq
                )
            ],
        }
        self._atomic_write(self.snapshot_path, json.dumps(payload, sort_keys=True))

    # ------------------------------------------------------------ the queue

    def write_queue(self, code: str, items: list[dict]) -> int:
        """Install a new queue; the version increments atomically."""
        version = self.queue_version() + 1
        payload = {"version": version, "code": code, "items": items}
        self._atomic_write(self.queue_path, json.dumps(payload, sort_keys=True))
        return version

    def read_queue(self) -> dict:
        if not self.queue_path.exists():
            raise NotFound(f"project {self.root.name!r} has no review queue")
        return json.loads(self.queue_path.read_text("utf-8"))

    def queue_version(self) -> int:
        if not self.queue_path.exists():
            return 0
        return int(self.read_queue().get("version", 0))

    def pending_items(self, code: str) -> list[dict]:
        """Queue items whose latest decision is absent or 'pending'."""
        queue = self.read_queue()
        if queue.get("code") != code:
            raise NotFound(f"no queue for code {code!r}")
        out = []
        for item in queue["items"]:
            unit = (str(item["unit"][0]), int(item["unit"][1]))
            latest = self.state.decision_for(unit, code)
            if latest is None or latest.decision == "pending":
                out.append(item)
        return out

    # ---------------------------------------------------------------- misc

    def write_project_meta(self, meta: dict) -> None:
        self._atomic_write(self.project_path, json.dumps(meta, sort_keys=True))

    def read_project_meta(self) -> dict:
        if not self.project_path.exists():
            return {}
        return json.loads(self.project_path.read_text("utf-8"))

    @staticmethod
    def _atomic_write(path: Path, text: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)


def _read_records(log_path: Path) -> tuple[list[DecisionRecord], int]:
    """Parse a decision log; a torn tail is dropped, not fatal.

    Returns the valid records and how many trailing lines were dropped.
    Out-of-order seq values mean the file was edited by hand, which is
    an error worth surfacing rather than repairing.
    """
    records: list[DecisionRecord] = []
    dropped = 0
    if not log_path.exists():
        return records, dropped
    raw = log_path.read_bytes().decode("utf-8", errors="replace")
    lines = raw.split("\n")
    prev_seq = 0
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
            record = DecisionRecord.from_json(payload)
        except (ValueError, KeyError, TypeError, IndexError):
            dropped = sum(1 for rest in lines[i:] if rest.strip())
            break
        if record.seq <= prev_seq:
            raise FormatError(
                f"{log_path}: seq {record.seq} after {prev_seq} breaks monotonicity"
            )
        prev_seq = record.seq
        records.append(record)
    return records, dropped


def list_projects(data_dir: str | Path) -> list[str]:
    root = Path(data_dir)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if p.is_dir())


def iter_log(data_dir: str | Path, project: str) -> Iterator[DecisionRecord]:
    """Read-only pass over a project's decision log (for tooling/tests)."""
    records, _ = _read_records(Path(data_dir) / project / "decisions.log")
    yield from records
