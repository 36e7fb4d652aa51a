"""HTTP annotation service: serves instances, collects judgments, reviews batches.

State is a task queue over the instances TSV plus an append-only JSON-lines
log. Annotation lines in the log use the same schema as the annotations
module; control events (register/serve/release/reject) carry an `event` key
so the analysis pipeline can consume the same file directly. A restart
replays the log and reconstructs identical queue state.

Endpoints (all JSON, every response carries `schema_version`):

    POST /api/register {name?}                 -> {token}
    GET  /api/next?token=...                   -> instance payload | {done: true}
    POST /api/submit {token, instance_id, likert, elapsed_ms}
    GET  /api/progress
    POST /api/release/{batch}                  -> reviewer: open a batch
    POST /api/review/{batch} {force?, reject?} -> reviewer: QC report / apply rejections
    GET  /api/export                           -> JSONL of valid annotation records
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping, Sequence
from urllib.parse import parse_qs, urlparse

from .annotations import (
    LIKERT_SCALE,
    AnnotationRecord,
    QcConfig,
    filter_annotators,
)
from .corpus import InstanceRow, read_instances_tsv

__all__ = [
    "SCHEMA_VERSION",
    "AuthError",
    "ValidationFailure",
    "Conflict",
    "TaskQueueEntry",
    "AnnotationService",
    "make_http_server",
    "run_server",
]

SCHEMA_VERSION = "annot-v1"


class AuthError(Exception):
    http_status = 401


class ValidationFailure(Exception):
    http_status = 400


class Conflict(Exception):
    http_status = 409


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class TaskQueueEntry:
    instance_id: str
    batch: int
    annotations_collected: int = 0
    annotations_target: int = 20


@dataclass
class _ServeState:
    """Serve-time bookkeeping for one (annotator, instance) pair."""

    wall_time: float
    submitted: bool = False


class AnnotationService:
    """Task queue + log; all mutating calls are serialized by one lock."""

    def __init__(
        self,
        instances: Sequence[InstanceRow],
        log_path: str | Path,
        annotations_target: int = 20,
        batch_size: int = 1200,
        seed: int = 0,
        qc: QcConfig | None = None,
        instance_freq: Mapping[str, int] | None = None,
    ):
        self._lock = threading.Lock()
        self._rng = random.Random(seed)
        self._log_path = Path(log_path)
        self._qc = qc or QcConfig()
        self._instance_freq = instance_freq

        self.instances: dict[str, InstanceRow] = {r.id: r for r in instances}
        self.entries: dict[str, TaskQueueEntry] = {}
        self.entry_order: list[str] = []
        for i, row in enumerate(instances):
            self.entries[row.id] = TaskQueueEntry(
                instance_id=row.id,
                batch=i // batch_size,
                annotations_target=annotations_target,
            )
            self.entry_order.append(row.id)

        self.tokens: set[str] = set()
        self.released_batches: set[int] = {0} if self.entries else set()
        self.rejected_annotators: set[str] = set()
        self.records: list[AnnotationRecord] = []
        self._serves: dict[tuple[str, str], _ServeState] = {}

        self._replaying = False
        if self._log_path.exists():
            self._replay()

    # -- log ---------------------------------------------------------------

    def _append_log(self, payload: dict) -> None:
        if self._replaying:
            return
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True) + "\n")

    def _replay(self) -> None:
        self._replaying = True
        try:
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    d = json.loads(line)
                    event = d.get("event")
                    if event is None:
                        record = AnnotationRecord.from_dict(d)
                        self._apply_submit(record)
                    elif event == "register":
                        self.tokens.add(d["token"])
                    elif event == "serve":
                        self._apply_serve(d["token"], d["instance_id"], d["wall_time"])
                    elif event == "release_batch":
                        self.released_batches.add(int(d["batch"]))
                    elif event == "reject_annotator":
                        self._apply_reject(d["annotator_id"])
                    else:
                        raise ValueError(f"unknown log event {event!r}")
        finally:
            self._replaying = False

    # -- state fingerprint (for restart-identity checks) --------------------

    def state_fingerprint(self) -> dict:
        return {
            "entries": {
                iid: [e.annotations_collected, e.annotations_target, e.batch]
                for iid, e in self.entries.items()
            },
            "tokens": sorted(self.tokens),
            "released": sorted(self.released_batches),
            "rejected": sorted(self.rejected_annotators),
            "records": [r.to_dict() for r in self.records],
            "serves": sorted(
                f"{a}|{i}|{s.wall_time!r}|{int(s.submitted)}"
                for (a, i), s in self._serves.items()
            ),
        }

    # -- annotator API -------------------------------------------------------

    def register(self, name: str | None = None) -> str:
        with self._lock:
            token = uuid.uuid4().hex
            self.tokens.add(token)
            self._append_log({"event": "register", "token": token, "name": name or "", "time": _utcnow()})
            return token

    def _require_token(self, token: str) -> None:
        if token not in self.tokens:
            raise AuthError("unknown annotator token")

    def _entry_open(self, entry: TaskQueueEntry) -> bool:
        return (
            entry.batch in self.released_batches
            and entry.annotations_collected < entry.annotations_target
        )

    def next_instance(self, token: str) -> dict | None:
        """A uniformly random open instance this annotator has not seen yet."""
        with self._lock:
            self._require_token(token)
            if token in self.rejected_annotators:
                raise AuthError("annotator was rejected by review")
            candidates = [
                iid
                for iid in self.entry_order
                if self._entry_open(self.entries[iid]) and (token, iid) not in self._serves
            ]
            if not candidates:
                return None
            iid = candidates[self._rng.randrange(len(candidates))]
            wall = time.time()
            self._apply_serve(token, iid, wall)
            self._append_log(
                {"event": "serve", "token": token, "instance_id": iid, "wall_time": wall, "time": _utcnow()}
            )
            return self._payload(iid)

    def _apply_serve(self, token: str, instance_id: str, wall: float) -> None:
        self.tokens.add(token)
        self._serves[(token, instance_id)] = _ServeState(wall_time=wall)

    def _payload(self, instance_id: str) -> dict:
        row = self.instances[instance_id]
        start, end = row.char_span
        return {
            "schema_version": SCHEMA_VERSION,
            "instance_id": row.id,
            "genre": row.genre,
            "sentence": row.sentence,
            "target_start": start,
            "target_end": end,
            "surface": row.surface,
            "is_mwe": row.is_mwe,
            "batch": self.entries[instance_id].batch,
            "options": [
                {"value": value, "label": label, "description": description}
                for value, label, description in LIKERT_SCALE
            ],
        }

    def submit(self, token: str, instance_id: str, likert: int, elapsed_ms: float) -> AnnotationRecord:
        """Record one judgment; closes the entry when the target is reached."""
        with self._lock:
            self._require_token(token)
            entry = self.entries.get(instance_id)
            if entry is None:
                raise ValidationFailure(f"unknown instance {instance_id!r}")
            if not isinstance(likert, int) or likert < 1 or likert > 5:
                raise ValidationFailure(f"likert must be an integer in 1..5, got {likert!r}")
            if elapsed_ms is None or elapsed_ms < 0:
                raise ValidationFailure("elapsed_ms must be non-negative")
            serve = self._serves.get((token, instance_id))
            if serve is None:
                raise ValidationFailure("instance was not served to this annotator")
            if serve.submitted:
                raise Conflict("duplicate submission for this instance")
            if not self._entry_open(entry):
                raise Conflict("instance is no longer open")

            # Client-reported time, bounded by the serve-to-submit wall time.
            wall_elapsed = max(0.0, time.time() - serve.wall_time)
            elapsed = min(elapsed_ms / 1000.0, wall_elapsed)
            record = AnnotationRecord(
                instance_id=instance_id,
                annotator_id=token,
                likert=likert,
                elapsed=round(elapsed, 3),
                batch=entry.batch,
                timestamp=_utcnow(),
            )
            self._apply_submit(record)
            self._append_log(record.to_dict())
            return record

    def _apply_submit(self, record: AnnotationRecord) -> None:
        entry = self.entries[record.instance_id]
        serve = self._serves.setdefault(
            (record.annotator_id, record.instance_id), _ServeState(wall_time=0.0)
        )
        serve.submitted = True
        self.records.append(record)
        entry.annotations_collected += 1

    # -- reviewer API ---------------------------------------------------------

    def progress(self) -> dict:
        with self._lock:
            per_batch: dict[int, dict] = {}
            for e in self.entries.values():
                b = per_batch.setdefault(
                    e.batch, {"batch": e.batch, "instances": 0, "collected": 0, "closed": 0}
                )
                b["instances"] += 1
                b["collected"] += e.annotations_collected
                if e.annotations_collected >= e.annotations_target:
                    b["closed"] += 1
            return {
                "schema_version": SCHEMA_VERSION,
                "instances": len(self.entries),
                "records": len(self.records),
                "annotators": len(self.tokens),
                "released_batches": sorted(self.released_batches),
                "batches": [per_batch[b] for b in sorted(per_batch)],
            }

    def release_batch(self, batch: int) -> None:
        with self._lock:
            known = {e.batch for e in self.entries.values()}
            if batch not in known:
                raise ValidationFailure(f"no such batch {batch}")
            self.released_batches.add(batch)
            self._append_log({"event": "release_batch", "batch": batch, "time": _utcnow()})

    def review_batch(self, batch: int, force: bool = False) -> dict:
        """QC verdicts for one batch's annotators; errors if still open unless forced."""
        with self._lock:
            entries = [e for e in self.entries.values() if e.batch == batch]
            if not entries:
                raise ValidationFailure(f"no such batch {batch}")
            open_entries = sum(1 for e in entries if self._entry_open(e))
            if open_entries and not force:
                raise Conflict(
                    f"batch {batch} still has {open_entries} open instances; pass force to review anyway"
                )
            batch_records = [r for r in self.records if r.batch == batch]
            _, report = filter_annotators(batch_records, self._qc, self._instance_freq)
            histograms: dict[str, list[int]] = {}
            for r in batch_records:
                histograms.setdefault(r.annotator_id, [0] * 5)[r.likert - 1] += 1
            frequency_rho: dict[str, float | None] = {}
            if self._instance_freq is not None:
                import math

                from .evaluate import spearman

                by_annotator: dict[str, list[AnnotationRecord]] = {}
                for r in batch_records:
                    by_annotator.setdefault(r.annotator_id, []).append(r)
                for annotator, recs in by_annotator.items():
                    pairs = [
                        (r.score, math.log(self._instance_freq[r.instance_id]))
                        for r in recs
                        if self._instance_freq.get(r.instance_id, 0) > 0
                    ]
                    if len(pairs) >= 3:
                        frequency_rho[annotator] = spearman(
                            [p[0] for p in pairs], [p[1] for p in pairs]
                        )
                    else:
                        frequency_rho[annotator] = None
            return {
                "schema_version": SCHEMA_VERSION,
                "batch": batch,
                "records": len(batch_records),
                "flagged": {a: reasons for a, reasons in sorted(report.rejected.items())},
                "label_histograms": histograms,
                "frequency_correlation": frequency_rho,
                "already_rejected": sorted(
                    self.rejected_annotators & {r.annotator_id for r in batch_records}
                ),
            }

    def reject_annotator(self, annotator_id: str) -> int:
        """Void all records by the annotator, reopening affected entries."""
        with self._lock:
            if annotator_id not in self.tokens:
                raise ValidationFailure(f"unknown annotator {annotator_id!r}")
            voided = self._apply_reject(annotator_id)
            self._append_log(
                {"event": "reject_annotator", "annotator_id": annotator_id, "time": _utcnow()}
            )
            return voided

    def _apply_reject(self, annotator_id: str) -> int:
        self.tokens.add(annotator_id)
        self.rejected_annotators.add(annotator_id)
        voided = [r for r in self.records if r.annotator_id == annotator_id]
        self.records = [r for r in self.records if r.annotator_id != annotator_id]
        for r in voided:
            self.entries[r.instance_id].annotations_collected -= 1
        return len(voided)

    def export_records(self) -> list[AnnotationRecord]:
        """Currently valid (non-voided) records, in submission order."""
        with self._lock:
            return list(self.records)


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

def _make_handler(service: AnnotationService, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default; stderr stays for errors
            pass

        def _send_json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, status: int, message: str) -> None:
            self._send_json(status, {"schema_version": SCHEMA_VERSION, "error": message})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if not length:
                return {}
            try:
                return json.loads(self.rfile.read(length).decode("utf-8"))
            except json.JSONDecodeError:
                raise ValidationFailure("request body is not valid JSON")

        def _dispatch(self) -> None:
            url = urlparse(self.path)
            try:
                if self.command == "GET" and url.path == "/api/next":
                    token = (parse_qs(url.query).get("token") or [""])[0]
                    payload = service.next_instance(token)
                    if payload is None:
                        self._send_json(200, {"schema_version": SCHEMA_VERSION, "done": True})
                    else:
                        self._send_json(200, payload)
                elif self.command == "GET" and url.path == "/api/progress":
                    self._send_json(200, service.progress())
                elif self.command == "GET" and url.path == "/api/export":
                    records = service.export_records()
                    body = "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)
                    data = body.encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "application/x-ndjson")
                    # Record lines keep the plain annotation schema; the
                    # envelope's version travels in a header instead.
                    self.send_header("X-Schema-Version", SCHEMA_VERSION)
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                elif self.command == "GET":
                    self._serve_static(url.path)
                elif self.command == "POST" and url.path == "/api/register":
                    body = self._read_body()
                    token = service.register(body.get("name"))
                    self._send_json(200, {"schema_version": SCHEMA_VERSION, "token": token})
                elif self.command == "POST" and url.path == "/api/submit":
                    body = self._read_body()
                    for key in ("token", "instance_id", "likert", "elapsed_ms"):
                        if key not in body:
                            raise ValidationFailure(f"missing field {key!r}")
                    record = service.submit(
                        body["token"], body["instance_id"], body["likert"], body["elapsed_ms"]
                    )
                    self._send_json(
                        200,
                        {
                            "schema_version": SCHEMA_VERSION,
                            "accepted": True,
                            "instance_id": record.instance_id,
                            "collected": service.entries[record.instance_id].annotations_collected,
                        },
                    )
                elif self.command == "POST" and url.path.startswith("/api/release/"):
                    batch = self._batch_from_path(url.path, "/api/release/")
                    service.release_batch(batch)
                    self._send_json(200, {"schema_version": SCHEMA_VERSION, "released": batch})
                elif self.command == "POST" and url.path.startswith("/api/review/"):
                    batch = self._batch_from_path(url.path, "/api/review/")
                    body = self._read_body()
                    rejected = {}
                    for annotator in body.get("reject", []):
                        rejected[annotator] = service.reject_annotator(annotator)
                    # Applying a rejection reopens entries; the follow-up report
                    # must not bounce off the still-open guard it just caused.
                    force = bool(body.get("force")) or bool(rejected)
                    report = service.review_batch(batch, force=force)
                    if rejected:
                        report["voided_records"] = rejected
                    self._send_json(200, report)
                else:
                    self._send_error_json(404, f"no such endpoint {url.path}")
            except AuthError as e:
                self._send_error_json(401, str(e))
            except ValidationFailure as e:
                self._send_error_json(400, str(e))
            except Conflict as e:
                self._send_error_json(409, str(e))

        @staticmethod
        def _batch_from_path(path: str, prefix: str) -> int:
            raw = path[len(prefix):]
            try:
                return int(raw)
            except ValueError:
                raise ValidationFailure(f"batch must be an integer, got {raw!r}") from None

        def _serve_static(self, path: str) -> None:
            if static_dir is None:
                self._send_error_json(404, f"no such endpoint {path}")
                return
            rel = path.lstrip("/") or "index.html"
            target = (static_dir / rel).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._send_error_json(404, f"no such file {path}")
                return
            content_types = {
                ".html": "text/html", ".js": "text/javascript",
                ".css": "text/css", ".json": "application/json",
            }
            data = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", content_types.get(target.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            self._dispatch()

        def do_POST(self):
            self._dispatch()

    return Handler


def make_http_server(
    service: AnnotationService,
    host: str = "127.0.0.1",
    port: int = 0,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    handler = _make_handler(service, Path(static_dir) if static_dir else None)
    return ThreadingHTTPServer((host, port), handler)


def run_server(
    instances_path: str | Path,
    log_path: str | Path,
    host: str = "127.0.0.1",
    port: int = 8080,
    annotations_target: int = 20,
    batch_size: int = 1200,
    seed: int = 0,
    static_dir: str | Path | None = None,
    qc: QcConfig | None = None,
    frequency_table: Mapping[str, int] | None = None,
) -> None:
    import sys

    instances = read_instances_tsv(instances_path)
    instance_freq = None
    if frequency_table is not None:
        instance_freq = {
            r.id: min(frequency_table.get(p, 0) for p in r.surface.casefold().split(" "))
            for r in instances
        }
    service = AnnotationService(
        instances,
        log_path,
        annotations_target=annotations_target,
        batch_size=batch_size,
        seed=seed,
        qc=qc,
        instance_freq=instance_freq,
    )
    server = make_http_server(service, host=host, port=port, static_dir=static_dir)
    bound_host, bound_port = server.server_address[:2]
    # Announce the *bound* address: with port 0 the OS picks one.
    print(f"listening on http://{bound_host}:{bound_port}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
