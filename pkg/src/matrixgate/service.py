"""Local HTTP API over bundles, validation, the pipeline, and runs.

IDENTITY IS DECLARED, NOT AUTHENTICATED. The acting human names
themselves via the X-Actor-Id header or an actor_id body field, and the
server believes them. Role checks (who may approve what) are enforced
against the workflow, but nothing stops a caller from claiming another
identity. Put a real authentication layer in front before exposing this
beyond localhost.

Every state change routes through the run engine's commands, so the
audit log remains a complete account of what the API did.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse

from .audit import verify_audit_chain, verify_audit_file
from .bundle_io import parse_bundle, parse_json, report_to_doc, serialize_bundle
from .engine import RunEngine
from .errors import (
    BundleParseError,
    IllegalTransitionError,
    InvalidMatrixError,
    MatrixGateError,
    MaxIterationsExceededError,
    MissingConsultationError,
    UnauthorizedVerdictError,
    UnknownPackError,
    UnresolvedCellError,
)
from .example_bundle import example_bundle
from .model import MatrixBundle, ResolutionPolicy, TrustworthyRequirement, ValidationMode
from .packs import ALL_PACKS, applicable_packs
from .pipeline import PipelineConfig, outcome_to_doc, run_pipeline
from .validation import validate_matrix
from .workflow import parse_workflow

DEFAULT_POLL_SECONDS = 25.0
MAX_POLL_SECONDS = 60.0


class ApiError(Exception):
    """Carries an HTTP status for errors raised by endpoint bodies."""

    def __init__(self, status_code: int, kind: str, message: str) -> None:
        super().__init__(message)
        self.status_code = status_code
        self.kind = kind


# Domain errors -> HTTP status. Anything unlisted is a caller mistake (400).
_STATUS_BY_ERROR = (
    (UnauthorizedVerdictError, 403),
    (IllegalTransitionError, 409),
    (MissingConsultationError, 409),
    (BundleParseError, 400),
    (UnknownPackError, 400),
    (UnresolvedCellError, 400),
    (InvalidMatrixError, 400),
)


def _error_body(kind: str, message: str) -> dict:
    return {"error": {"type": kind, "message": message}}


async def _raw_body(request: Request) -> bytes:
    """Hands endpoints the unparsed request body. Parsing stays with
    parse_json so duplicate keys and locations are reported the same
    way everywhere; endpoints stay sync (threadpool) so they may block."""
    return await request.body()


@dataclass
class _RunHandle:
    engine: RunEngine
    cond: threading.Condition


@dataclass
class _Store:
    data_dir: Optional[Path]
    clock_factory: Optional[Callable]
    lock: threading.Lock = field(default_factory=threading.Lock)
    bundles: dict = field(default_factory=dict)
    runs: dict = field(default_factory=dict)

    def add_bundle(self, bundle: MatrixBundle) -> str:
        text = serialize_bundle(bundle)
        bundle_id = hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
        with self.lock:
            self.bundles[bundle_id] = bundle
        return bundle_id

    def get_bundle(self, bundle_id: str) -> MatrixBundle:
        with self.lock:
            bundle = self.bundles.get(bundle_id)
        if bundle is None:
            raise ApiError(404, "UnknownBundleError", f"no bundle with id {bundle_id!r}")
        return bundle

    def add_run(self, engine: RunEngine) -> _RunHandle:
        cond = engine.new_condition()
        handle = _RunHandle(engine=engine, cond=cond)

        def _wake(_event) -> None:
            with cond:
                cond.notify_all()

        engine.add_observer(_wake)
        with self.lock:
            self.runs[engine.run_id] = handle
        return handle

    def get_run(self, run_id: str) -> _RunHandle:
        with self.lock:
            handle = self.runs.get(run_id)
        if handle is None:
            raise ApiError(404, "UnknownRunError", f"no run with id {run_id!r}")
        return handle

    def all_runs(self) -> list:
        with self.lock:
            return list(self.runs.values())


def _bundle_doc(bundle: MatrixBundle) -> dict:
    return json.loads(serialize_bundle(bundle))


def _parse_mode(raw: str) -> ValidationMode:
    try:
        return ValidationMode(raw)
    except ValueError:
        choices = ", ".join(sorted(m.value for m in ValidationMode))
        raise ApiError(400, "UnknownModeError", f"mode must be one of {choices}, got {raw!r}") from None


def _parse_policy(raw: Optional[str]) -> Optional[ResolutionPolicy]:
    if raw is None:
        return None
    try:
        return ResolutionPolicy(raw)
    except ValueError:
        choices = ", ".join(sorted(p.value for p in ResolutionPolicy))
        raise ApiError(400, "UnknownPolicyError", f"policy must be one of {choices}, got {raw!r}") from None


def _audit_doc(engine: RunEngine) -> dict:
    """The server-side chain verdict the UI displays instead of doing
    crypto client-side. Prefers the on-disk file so external tampering
    is observable through the API."""
    path = engine.log.path
    if path is not None and path.exists():
        bad_seq = verify_audit_file(path)
    else:
        bad_seq = verify_audit_chain(engine.log.events)
    return {
        "enabled": engine.spec.audit_enabled,
        "ok": bad_seq is None,
        "first_corrupt_seq": bad_seq,
    }


def _run_doc(engine: RunEngine) -> dict:
    doc = engine.state_doc()
    doc["audit"] = _audit_doc(engine)
    return doc


def _event_doc(event) -> dict:
    return json.loads(event.to_line())


def _pipeline_config(doc: dict) -> PipelineConfig:
    known = {"mode", "threshold", "max_iterations", "policy", "audit_enabled"}
    unexpected = doc.keys() - known
    if unexpected:
        raise ApiError(400, "BundleParseError", f"unexpected config field(s): {', '.join(sorted(unexpected))}")
    kwargs: dict = {}
    if "mode" in doc:
        kwargs["mode"] = _parse_mode(doc["mode"]) if isinstance(doc["mode"], str) else _bad_config("mode", "a string")
    if "threshold" in doc:
        value = doc["threshold"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _bad_config("threshold", "a number")
        kwargs["threshold"] = float(value)
    if "max_iterations" in doc:
        value = doc["max_iterations"]
        if isinstance(value, bool) or not isinstance(value, int):
            _bad_config("max_iterations", "an integer")
        kwargs["max_iterations"] = value
    if "policy" in doc:
        if not isinstance(doc["policy"], str):
            _bad_config("policy", "a string")
        kwargs["policy"] = _parse_policy(doc["policy"])
    if "audit_enabled" in doc:
        if not isinstance(doc["audit_enabled"], bool):
            _bad_config("audit_enabled", "a boolean")
        kwargs["audit_enabled"] = doc["audit_enabled"]
    try:
        return PipelineConfig(**kwargs)
    except ValueError as exc:
        raise ApiError(400, "BundleParseError", str(exc)) from exc


def _bad_config(name: str, expected: str) -> None:
    raise ApiError(400, "BundleParseError", f"config field {name} must be {expected}")


def create_app(
    data_dir=None,
    clock_factory: Optional[Callable] = None,
    long_poll_default: float = DEFAULT_POLL_SECONDS,
) -> FastAPI:
    """Build the API with its own isolated store. The example bundle is
    preloaded so a fresh server is immediately explorable."""
    app = FastAPI(title="matrixgate", docs_url=None, redoc_url=None)
    store = _Store(
        data_dir=Path(data_dir) if data_dir is not None else None,
        clock_factory=clock_factory,
    )
    app.state.store = store
    store.add_bundle(example_bundle())

    def _api_error_handler(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(_error_body(exc.kind, str(exc)), status_code=exc.status_code)

    def _domain_error_handler(_request: Request, exc: MatrixGateError) -> JSONResponse:
        if isinstance(exc, MaxIterationsExceededError):
            body = _error_body(type(exc).__name__, str(exc))
            if exc.outcome is not None:
                body["outcome"] = outcome_to_doc(exc.outcome)
            return JSONResponse(body, status_code=422)
        for error_type, status in _STATUS_BY_ERROR:
            if isinstance(exc, error_type):
                return JSONResponse(_error_body(type(exc).__name__, str(exc)), status_code=status)
        return JSONResponse(_error_body(type(exc).__name__, str(exc)), status_code=400)

    def _value_error_handler(_request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(_error_body("ValueError", str(exc)), status_code=400)

    def _key_error_handler(_request: Request, exc: KeyError) -> JSONResponse:
        return JSONResponse(_error_body("NotFoundError", str(exc)), status_code=404)

    app.add_exception_handler(ApiError, _api_error_handler)
    app.add_exception_handler(MatrixGateError, _domain_error_handler)
    app.add_exception_handler(ValueError, _value_error_handler)
    app.add_exception_handler(KeyError, _key_error_handler)

    @app.get("/packs")
    def list_packs() -> dict:
        packs = []
        for pack in ALL_PACKS:
            packs.append({
                "id": pack.id,
                "description": pack.description,
                "rules": [
                    {
                        "id": rule.id,
                        "severity": rule.severity.value,
                        "scope": rule.scope.value,
                        "description": rule.description,
                        "requirements": [
                            r.value for r in TrustworthyRequirement if r in rule.requirements
                        ],
                    }
                    for rule in pack.rules
                ],
            })
        return {"packs": packs}

    @app.get("/bundles")
    def list_bundles() -> dict:
        with store.lock:
            items = list(store.bundles.items())
        return {
            "bundles": [
                {
                    "id": bundle_id,
                    "phase": bundle.phase_name,
                    "actors": len(bundle.actors),
                    "tasks": len(bundle.tasks),
                }
                for bundle_id, bundle in items
            ]
        }

    @app.post("/bundles")
    def upload_bundle(body: bytes = Depends(_raw_body)) -> dict:
        bundle = parse_bundle(body)
        bundle_id = store.add_bundle(bundle)
        return {"id": bundle_id, "bundle": _bundle_doc(bundle)}

    @app.get("/bundles/{bundle_id}")
    def get_bundle(bundle_id: str) -> dict:
        bundle = store.get_bundle(bundle_id)
        return {"id": bundle_id, "bundle": _bundle_doc(bundle)}

    @app.post("/bundles/{bundle_id}/validate")
    def validate_bundle(
        bundle_id: str,
        mode: str = Query(ValidationMode.COMPAT.value),
        packs: Optional[str] = Query(None),
        policy: Optional[str] = Query(None),
    ) -> dict:
        bundle = store.get_bundle(bundle_id)
        if packs is None:
            pack_ids = applicable_packs(bundle.actors)
        else:
            pack_ids = [p for p in packs.split(",") if p]
        report = validate_matrix(
            bundle,
            mode=_parse_mode(mode),
            packs=pack_ids,
            policy=_parse_policy(policy),
        )
        return report_to_doc(report)

    @app.post("/bundles/{bundle_id}/pipeline")
    def pipeline_bundle(bundle_id: str, body: bytes = Depends(_raw_body)) -> dict:
        bundle = store.get_bundle(bundle_id)
        doc = parse_json(body) if body else {}
        if not isinstance(doc, dict):
            raise ApiError(400, "BundleParseError", "pipeline config must be a JSON object")
        outcome = run_pipeline(bundle, _pipeline_config(doc))
        return outcome_to_doc(outcome)

    @app.post("/runs")
    def create_run(body: bytes = Depends(_raw_body)) -> dict:
        doc = parse_json(body)
        if isinstance(doc, dict) and "workflow" in doc:
            workflow_doc = doc["workflow"]
        elif isinstance(doc, dict) and "chains" in doc:
            workflow_doc = doc
        else:
            raise ApiError(
                400, "BundleParseError",
                'body must be a workflow document or an object with a "workflow" field',
            )
        spec = parse_workflow(json.dumps(workflow_doc))
        engine = RunEngine(
            spec,
            clock=store.clock_factory() if store.clock_factory else None,
            data_dir=store.data_dir,
        )
        store.add_run(engine)
        engine.advance_until_blocked()
        return _run_doc(engine)

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        return _run_doc(store.get_run(run_id).engine)

    @app.get("/runs/{run_id}/events")
    def get_events(
        run_id: str,
        since_seq: int = Query(-1),
        timeout: Optional[float] = Query(None, ge=0.0),
    ) -> dict:
        handle = store.get_run(run_id)
        # since_seq <= 0 means "from the beginning"; delivery is
        # at-least-once and clients dedupe by seq.
        floor = -1 if since_seq <= 0 else since_seq
        wait = min(timeout if timeout is not None else long_poll_default, MAX_POLL_SECONDS)
        deadline = time.monotonic() + wait
        with handle.cond:
            events = handle.engine.events_since(floor)
            while not events:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                handle.cond.wait(remaining)
                events = handle.engine.events_since(floor)
        return {
            "run_id": run_id,
            "events": [_event_doc(e) for e in events],
            "last_seq": events[-1].seq if events else since_seq,
        }

    @app.get("/approvals")
    def list_approvals(actor: Optional[str] = Query(None)) -> dict:
        approvals = []
        for handle in store.all_runs():
            approvals.extend(handle.engine.pending_approvals(actor))
        return {"approvals": approvals}

    @app.post("/approvals/{run_id}/{task_id}")
    def post_verdict(
        run_id: str,
        task_id: str,
        body: bytes = Depends(_raw_body),
        x_actor_id: Optional[str] = Header(None),
    ) -> dict:
        doc = parse_json(body)
        if not isinstance(doc, dict):
            raise ApiError(400, "BundleParseError", "verdict body must be a JSON object")
        unexpected = doc.keys() - {"actor_id", "verdict", "comment"}
        if unexpected:
            raise ApiError(400, "BundleParseError", f"unexpected field(s): {', '.join(sorted(unexpected))}")
        actor_id = doc.get("actor_id")
        if actor_id is not None and x_actor_id is not None and actor_id != x_actor_id:
            raise ApiError(400, "BundleParseError", "actor_id and X-Actor-Id disagree")
        actor_id = actor_id or x_actor_id
        if not isinstance(actor_id, str) or not actor_id:
            raise ApiError(400, "BundleParseError", "an actor identity is required (actor_id or X-Actor-Id)")
        verdict = doc.get("verdict")
        if verdict not in ("approve", "reject"):
            raise ApiError(400, "BundleParseError", f"verdict must be approve or reject, got {verdict!r}")
        comment = doc.get("comment")
        if comment is not None and not isinstance(comment, str):
            raise ApiError(400, "BundleParseError", "comment must be a string")
        handle = store.get_run(run_id)
        handle.engine.record_verdict(task_id, actor_id, verdict, comment)
        handle.engine.advance_until_blocked()
        return _run_doc(handle.engine)

    return app
