"""HTTP service for second-pass review.

All JSON endpoints live under /api/v1. A built review UI bundle, when
present, is served from the root path. Decision writes for a project are
serialized through a lock (one writer); reads take no lock. Retraining
runs on a background thread and swaps in a new queue version atomically
when it finishes.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException, Request
from fastapi.staticfiles import StaticFiles

from ..coder import ReliabilityReport, evaluate
from ..errors import EmptyEval, NotFound
from .store import DECISIONS, ProjectStore, UnitKey, list_projects

DEFAULT_LEASE_TTL = 900.0

RetrainFn = Callable[[ProjectStore, str], dict]


def _http_error(status: int, error: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"error": error, "message": message})


@dataclass
class Lease:
    reviewer: str
    token: str
    expires_at: float


class LeaseTable:
    """In-memory leases keyed by (project, code); expiry by a monotonic clock."""

    def __init__(self, ttl: float, clock: Callable[[], float]):
        self.ttl = ttl
        self.clock = clock
        self._held: dict[tuple[str, str], Lease] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def acquire(self, project: str, code: str, reviewer: str) -> Lease:
        with self._lock:
            now = self.clock()
            key = (project, code)
            current = self._held.get(key)
            if current is not None and current.expires_at > now and current.reviewer != reviewer:
                raise _http_error(
                    409, "LeaseHeld",
                    f"code {code!r} is being reviewed by {current.reviewer!r}",
                )
            self._counter += 1
            lease = Lease(
                reviewer=reviewer,
                token=f"lease-{self._counter}",
                expires_at=now + self.ttl,
            )
            self._held[key] = lease
            return lease

    def release(self, project: str, code: str, token: str) -> bool:
        with self._lock:
            key = (project, code)
            current = self._held.get(key)
            if current is not None and current.token == token:
                del self._held[key]
                return True
            return False

    def holder(self, project: str, code: str) -> Lease | None:
        with self._lock:
            current = self._held.get((project, code))
            if current is None or current.expires_at <= self.clock():
                return None
            return current


def default_retrain(store: ProjectStore, code: str) -> dict:
    """Fallback retrain: drop decided items and publish a new queue version.

    Real pipelines pass a retrain_fn that refits the classifier with review
    decisions folded in; this default only realizes the queue-version swap.
    """
    kept = store.pending_items(code)
    version = store.write_queue(code, kept)
    return {"queue_version": version, "kept": len(kept)}


def _report_payload(report: ReliabilityReport | None) -> dict | None:
    if report is None:
        return None
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "alpha": report.alpha,
        "tp": report.tp,
        "fp": report.fp,
        "fn": report.fn,
        "tn": report.tn,
        "notes": list(report.notes),
    }


def create_app(
    data_dir: str | Path,
    static_dir: str | Path | None = None,
    retrain_fn: RetrainFn | None = None,
    lease_ttl: float = DEFAULT_LEASE_TTL,
    clock: Callable[[], float] = time.monotonic,
) -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="fieldscale review service", docs_url=None, redoc_url=None)

    stores: dict[str, ProjectStore] = {}
    stores_lock = threading.Lock()
    write_locks: dict[str, threading.Lock] = {}
    leases = LeaseTable(ttl=lease_ttl, clock=clock)
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    job_counter = [0]
    retrain = retrain_fn if retrain_fn is not None else default_retrain

    def get_store(project: str) -> ProjectStore:
        if not (data_dir / project).is_dir():
            raise _http_error(404, "NotFound", f"no project {project!r}")
        with stores_lock:
            if project not in stores:
                stores[project] = ProjectStore(data_dir, project)
                write_locks[project] = threading.Lock()
            return stores[project]

    def get_queue(store: ProjectStore, code: str) -> dict:
        try:
            queue = store.read_queue()
        except NotFound as exc:
            raise _http_error(404, "NotFound", str(exc))
        if queue.get("code") != code:
            raise _http_error(404, "NotFound", f"no queue for code {code!r}")
        return queue

    async def read_body(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception:
            raise _http_error(400, "SchemaError", "body must be a JSON object")
        if not isinstance(payload, dict):
            raise _http_error(400, "SchemaError", "body must be a JSON object")
        return payload

    def body_str(payload: dict, name: str) -> str:
        value = payload.get(name)
        if not isinstance(value, str) or not value:
            raise _http_error(400, "SchemaError", f"field {name!r} must be a non-empty string")
        return value

    def body_unit(payload: dict) -> UnitKey:
        unit = payload.get("unit")
        if (
            not isinstance(unit, (list, tuple))
            or len(unit) != 2
            or not isinstance(unit[0], str)
            or not isinstance(unit[1], int)
            or isinstance(unit[1], bool)
        ):
            raise _http_error(400, "SchemaError", "field 'unit' must be [doc_id, reference]")
        return (unit[0], unit[1])

    # ------------------------------------------------------------- projects

    @app.get("/api/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/v1/projects")
    def projects_index() -> dict:
        return {"projects": list_projects(data_dir)}

    @app.get("/api/v1/projects/{project}")
    def project_info(project: str) -> dict:
        store = get_store(project)
        try:
            queue = store.read_queue()
            queue_info = {"code": queue.get("code"), "version": queue.get("version")}
        except NotFound:
            queue_info = None
        return {
            "project": project,
            "meta": store.read_project_meta(),
            "queue": queue_info,
            "decisions": store.state.max_seq,
        }

    # ---------------------------------------------------------------- queue

    @app.get("/api/v1/projects/{project}/queue")
    def queue_page(project: str, code: str, limit: int | None = None) -> dict:
        store = get_store(project)
        queue = get_queue(store, code)
        pending = store.pending_items(code)
        page = pending if limit is None else pending[: max(limit, 0)]
        return {
            "code": code,
            "version": queue["version"],
            "total": len(queue["items"]),
            "pending": len(pending),
            "items": page,
        }

    # ------------------------------------------------------------ decisions

    @app.post("/api/v1/projects/{project}/decisions")
    async def post_decision(project: str, request: Request) -> dict:
        payload = await read_body(request)
        store = get_store(project)
        code = body_str(payload, "code")
        reviewer = body_str(payload, "reviewer")
        decision = body_str(payload, "decision")
        if decision not in DECISIONS:
            raise _http_error(
                400, "SchemaError", f"decision must be one of {list(DECISIONS)}"
            )
        unit = body_unit(payload)
        queue = get_queue(store, code)
        queued = {(item["unit"][0], item["unit"][1]) for item in queue["items"]}
        if unit not in queued:
            raise _http_error(
                409, "NotQueued", f"unit {list(unit)} is not in the review queue"
            )
        holder = leases.holder(project, code)
        if holder is not None and holder.reviewer != reviewer:
            raise _http_error(
                409, "LeaseHeld",
                f"code {code!r} is being reviewed by {holder.reviewer!r}",
            )
        with write_locks[project]:
            record, appended = store.append_decision(unit, code, decision, reviewer)
        return {
            "seq": record.seq,
            "unit": list(record.unit),
            "code": record.code,
            "decision": record.decision,
            "reviewer": record.reviewer,
            "appended": appended,
        }

    # -------------------------------------------------------------- metrics

    @app.get("/api/v1/projects/{project}/metrics")
    def metrics(project: str, code: str) -> dict:
        store = get_store(project)
        queue = get_queue(store, code)
        decided = store.state.decided(code)
        queued_units = [(item["unit"][0], item["unit"][1]) for item in queue["items"]]
        accepted = sum(1 for u in queued_units if decided.get(u) == "accept")
        rejected = sum(1 for u in queued_units if decided.get(u) == "reject")
        pending = len(queued_units) - accepted - rejected
        # every queued item is a machine-predicted positive; the reviewer is
        # the second rater, so agreement is machine=True versus accept/reject
        verdicts = [decided[u] == "accept" for u in queued_units if u in decided]
        try:
            report = evaluate([True] * len(verdicts), verdicts)
        except EmptyEval:
            report = None
        return {
            "code": code,
            "queue_version": queue["version"],
            "progress": {
                "total": len(queued_units),
                "accepted": accepted,
                "rejected": rejected,
                "pending": pending,
            },
            "report": _report_payload(report),
        }

    # --------------------------------------------------------------- leases

    @app.post("/api/v1/projects/{project}/lease")
    async def acquire_lease(project: str, request: Request) -> dict:
        payload = await read_body(request)
        get_store(project)
        code = body_str(payload, "code")
        reviewer = body_str(payload, "reviewer")
        lease = leases.acquire(project, code, reviewer)
        return {
            "token": lease.token,
            "reviewer": lease.reviewer,
            "ttl": leases.ttl,
        }

    @app.delete("/api/v1/projects/{project}/lease")
    def release_lease(project: str, code: str, token: str) -> dict:
        get_store(project)
        return {"released": leases.release(project, code, token)}

    # -------------------------------------------------------------- retrain

    @app.post("/api/v1/projects/{project}/retrain")
    async def start_retrain(project: str, request: Request) -> dict:
        payload = await read_body(request)
        store = get_store(project)
        code = body_str(payload, "code")
        get_queue(store, code)
        with jobs_lock:
            job_counter[0] += 1
            job_id = f"job-{job_counter[0]}"
            jobs[job_id] = {"id": job_id, "status": "running", "code": code}

        def run() -> None:
            try:
                with write_locks[project]:
                    result = retrain(store, code)
                with jobs_lock:
                    jobs[job_id].update(status="done", result=result)
            except Exception as exc:  # job errors are reported, not raised
                with jobs_lock:
                    jobs[job_id].update(status="error", error=str(exc))

        threading.Thread(target=run, name=job_id, daemon=True).start()
        return {"job": job_id}

    @app.get("/api/v1/projects/{project}/jobs/{job_id}")
    def job_status(project: str, job_id: str) -> dict:
        get_store(project)
        with jobs_lock:
            job = jobs.get(job_id)
            if job is None:
                raise _http_error(404, "NotFound", f"no job {job_id!r}")
            return dict(job)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
