"""Hash-chained audit log: an append-only JSONL file where every event
carries a SHA-256 over its own fields plus the previous event's hash.

Flipping any byte of the file either breaks a line's JSON, changes a
recomputed digest, or breaks the linkage; in every case verification
names the first bad sequence number.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .errors import AuditIntegrityError

GENESIS_HASH = "0" * 64

# JSONL field order; task_id/actor_id are omitted when absent.
_FIELD_ORDER = ("seq", "timestamp", "run_id", "type", "task_id", "actor_id", "payload", "prev_hash", "hash")


class EventType(str, Enum):
    RUN_STARTED = "RunStarted"
    TASK_READY = "TaskReady"
    CONSULT_RECORDED = "ConsultRecorded"
    EXECUTION_STARTED = "ExecutionStarted"
    ARTIFACT_PRODUCED = "ArtifactProduced"
    VALIDATION_REQUESTED = "ValidationRequested"
    VERDICT_RECORDED = "VerdictRecorded"
    NOTIFIED = "Notified"
    TASK_COMPLETED = "TaskCompleted"
    TASK_FAILED = "TaskFailed"


def canonical_json(value) -> str:
    """The one serialization used for digests: sorted keys, no spaces."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    timestamp: str
    run_id: str
    type: EventType
    payload: dict
    prev_hash: str
    hash: str
    task_id: Optional[str] = None
    actor_id: Optional[str] = None

    def body(self) -> dict:
        """Every field that the hash covers."""
        doc = {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "run_id": self.run_id,
            "type": self.type.value,
            "payload": self.payload,
        }
        if self.task_id is not None:
            doc["task_id"] = self.task_id
        if self.actor_id is not None:
            doc["actor_id"] = self.actor_id
        return doc

    def expected_hash(self) -> str:
        return sha256_hex(self.prev_hash + canonical_json(self.body()))

    def to_line(self) -> str:
        doc = self.body()
        doc["prev_hash"] = self.prev_hash
        doc["hash"] = self.hash
        ordered = {key: doc[key] for key in _FIELD_ORDER if key in doc}
        return json.dumps(ordered, separators=(",", ":"), ensure_ascii=False)


def make_event(
    seq: int,
    timestamp: str,
    run_id: str,
    type: EventType,
    payload: dict,
    prev_hash: str,
    task_id: Optional[str] = None,
    actor_id: Optional[str] = None,
) -> AuditEvent:
    event = AuditEvent(
        seq=seq,
        timestamp=timestamp,
        run_id=run_id,
        type=type,
        payload=payload,
        prev_hash=prev_hash,
        hash="",
        task_id=task_id,
        actor_id=actor_id,
    )
    return replace(event, hash=event.expected_hash())


def event_from_doc(doc: dict, seq_hint: int) -> AuditEvent:
    """Strict reconstruction of one JSONL entry. Any structural anomaly
    marks the entry corrupt at its line index."""
    if not isinstance(doc, dict):
        raise AuditIntegrityError(seq_hint, "entry is not an object")
    keys = set(doc)
    required = {"seq", "timestamp", "run_id", "type", "payload", "prev_hash", "hash"}
    if not required <= keys or not keys <= set(_FIELD_ORDER):
        raise AuditIntegrityError(seq_hint, "entry fields do not match the event schema")
    if not isinstance(doc["seq"], int) or isinstance(doc["seq"], bool):
        raise AuditIntegrityError(seq_hint, "seq is not an integer")
    for key in ("timestamp", "run_id", "type", "prev_hash", "hash"):
        if not isinstance(doc[key], str):
            raise AuditIntegrityError(seq_hint, f"{key} is not a string")
    for key in ("task_id", "actor_id"):
        if key in doc and not isinstance(doc[key], str):
            raise AuditIntegrityError(seq_hint, f"{key} is not a string")
    if not isinstance(doc["payload"], dict):
        raise AuditIntegrityError(seq_hint, "payload is not an object")
    try:
        event_type = EventType(doc["type"])
    except ValueError:
        raise AuditIntegrityError(seq_hint, f"unknown event type {doc['type']!r}") from None
    return AuditEvent(
        seq=doc["seq"],
        timestamp=doc["timestamp"],
        run_id=doc["run_id"],
        type=event_type,
        payload=doc["payload"],
        prev_hash=doc["prev_hash"],
        hash=doc["hash"],
        task_id=doc.get("task_id"),
        actor_id=doc.get("actor_id"),
    )


def verify_audit_chain(events: Iterable[AuditEvent]) -> Optional[int]:
    """None when the chain holds; otherwise the seq of the first event
    whose content, linkage, or position fails recomputation."""
    prev_hash = GENESIS_HASH
    for position, event in enumerate(events):
        if event.seq != position:
            return position
        if event.prev_hash != prev_hash:
            return position
        if event.hash != event.expected_hash():
            return position
        prev_hash = event.hash
    return None


def read_audit_file(path) -> list:
    """Parse a JSONL audit log. A line that cannot be decoded, does not
    match the event schema, or is not byte-identical to its canonical
    rendering raises AuditIntegrityError carrying its index; chain
    verification is the caller's separate step.

    The byte-identity check matters: without it, a cosmetic rewrite
    (say, whitespace) would survive content hashing.
    """
    data = Path(path).read_bytes()
    if data == b"":
        return []
    chunks = data.split(b"\n")
    if chunks[-1] == b"":
        chunks.pop()  # the writer terminates every line with a newline
    events = []
    for index, raw_line in enumerate(chunks):
        try:
            line = raw_line.decode("utf-8")
        except UnicodeDecodeError:
            raise AuditIntegrityError(index, "line is not valid UTF-8") from None
        if not line.strip():
            raise AuditIntegrityError(index, "blank line inside the log")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError:
            raise AuditIntegrityError(index, "line is not valid JSON") from None
        event = event_from_doc(doc, index)
        if event.to_line() != line:
            raise AuditIntegrityError(index, "line is not in canonical form")
        events.append(event)
    return events


def verify_audit_file(path) -> Optional[int]:
    """Read and verify in one step; unreadable lines count as corrupt at
    their own index."""
    try:
        events = read_audit_file(path)
    except AuditIntegrityError as exc:
        return exc.seq
    return verify_audit_chain(events)


def write_audit_file(path, events: Iterable[AuditEvent]) -> None:
    text = "".join(event.to_line() + "\n" for event in events)
    Path(path).write_text(text, encoding="utf-8")


class Clock:
    """Timestamp source; swap in a LogicalClock for reproducible logs."""

    def now(self) -> str:
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class LogicalClock(Clock):
    """Deterministic clock: a fixed epoch advanced one second per call."""

    def __init__(self, start: str = "2000-01-01T00:00:00Z") -> None:
        self._current = datetime.strptime(start, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)

    def now(self) -> str:
        stamp = self._current.strftime("%Y-%m-%dT%H:%M:%SZ")
        self._current += timedelta(seconds=1)
        return stamp


class AuditLog:
    """Per-run event sink: assigns sequence numbers, links hashes, and
    mirrors every event to a JSONL file when given a path."""

    def __init__(self, run_id: str, clock: Optional[Clock] = None, path=None) -> None:
        self.run_id = run_id
        self.clock = clock or Clock()
        self.path = Path(path) if path is not None else None
        self.events: list = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    @property
    def last_hash(self) -> str:
        return self.events[-1].hash if self.events else GENESIS_HASH

    def record(
        self,
        type: EventType,
        payload: dict,
        task_id: Optional[str] = None,
        actor_id: Optional[str] = None,
    ) -> AuditEvent:
        # snapshot through JSON so later caller-side mutation cannot
        # diverge from the hash, and tuples land as they will re-read
        payload = json.loads(json.dumps(payload, ensure_ascii=False))
        event = make_event(
            seq=len(self.events),
            timestamp=self.clock.now(),
            run_id=self.run_id,
            type=type,
            payload=payload,
            prev_hash=self.last_hash,
            task_id=task_id,
            actor_id=actor_id,
        )
        self.events.append(event)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as sink:
                sink.write(event.to_line() + "\n")
        return event
