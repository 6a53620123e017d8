"""Event-sourced execution of a WorkflowSpec.

The audit log is the source of truth: commands validate against current
state, append events, and the state advances only by folding those
events. Replaying a log through the same fold reconstructs the exact
final state, which is what makes the trail auditable rather than
decorative.

One lock serializes all events of a run; separate runs are independent.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from .agents import AgentAdapter, ArtifactDraft, MockAgent
from .audit import AuditEvent, AuditLog, Clock, EventType, sha256_hex
from .errors import (
    AdapterFailureError,
    IllegalTransitionError,
    MissingConsultationError,
    UnauthorizedVerdictError,
)
from .workflow import TaskChain, WorkflowSpec
from .model import Quorum


class TaskStatus(str, Enum):
    PENDING = "pending"
    READY = "ready"
    CONSULTING = "consulting"
    EXECUTING = "executing"
    AWAITING_VALIDATION = "awaiting_validation"
    COMPLETE = "complete"
    FAILED = "failed"


@dataclass(frozen=True)
class ConsultationEntry:
    actor_id: str
    content: str
    mandatory: bool

    @property
    def digest(self) -> str:
        return sha256_hex(self.content)


@dataclass(frozen=True)
class ArtifactVersion:
    version: int
    content: str
    digest: str
    metadata: dict


@dataclass
class TaskRunState:
    status: TaskStatus = TaskStatus.PENDING
    revision: int = 0
    artifacts: list = field(default_factory=list)
    consultation: list = field(default_factory=list)
    approvals: list = field(default_factory=list)
    notified: list = field(default_factory=list)
    requested_at: Optional[str] = None
    failure: Optional[str] = None

    @property
    def latest_artifact(self) -> Optional[ArtifactVersion]:
        return self.artifacts[-1] if self.artifacts else None


@dataclass
class RunState:
    run_id: str
    started: bool = False
    tasks: dict = field(default_factory=dict)


def new_run_state(spec: WorkflowSpec, run_id: str) -> RunState:
    return RunState(
        run_id=run_id,
        tasks={chain.task_id: TaskRunState() for chain in spec.chains},
    )


def _illegal(task_id: str, status: TaskStatus, attempted: str) -> IllegalTransitionError:
    return IllegalTransitionError(task_id, status, attempted)


def apply_event(spec: WorkflowSpec, state: RunState, event: AuditEvent) -> RunState:
    """Fold one event into the state, in place. Only legal transitions
    are accepted; an illegal fold means the log contradicts the workflow."""
    kind = event.type
    if kind is EventType.RUN_STARTED:
        if state.started:
            raise _illegal("-", TaskStatus.PENDING, "start an already-started run")
        state.started = True
        return state

    task = state.tasks.get(event.task_id)
    if task is None:
        raise IllegalTransitionError(event.task_id or "-", TaskStatus.PENDING, "apply an event for an unknown task")

    if kind is EventType.TASK_READY:
        if task.status is not TaskStatus.PENDING:
            raise _illegal(event.task_id, task.status, "mark ready")
        task.status = TaskStatus.READY
    elif kind is EventType.CONSULT_RECORDED:
        if task.status not in (TaskStatus.READY, TaskStatus.CONSULTING):
            raise _illegal(event.task_id, task.status, "record a consultation")
        task.status = TaskStatus.CONSULTING
        task.consultation.append(ConsultationEntry(
            actor_id=event.actor_id,
            content=event.payload["content"],
            mandatory=event.payload["mandatory"],
        ))
    elif kind is EventType.EXECUTION_STARTED:
        if task.status not in (TaskStatus.READY, TaskStatus.CONSULTING, TaskStatus.EXECUTING):
            raise _illegal(event.task_id, task.status, "start execution")
        task.status = TaskStatus.EXECUTING
    elif kind is EventType.ARTIFACT_PRODUCED:
        if task.status is not TaskStatus.EXECUTING:
            raise _illegal(event.task_id, task.status, "produce an artifact")
        task.artifacts.append(ArtifactVersion(
            version=event.payload["version"],
            content=event.payload["content"],
            digest=event.payload["digest"],
            metadata=event.payload["metadata"],
        ))
    elif kind is EventType.VALIDATION_REQUESTED:
        if task.status is not TaskStatus.EXECUTING:
            raise _illegal(event.task_id, task.status, "request validation")
        task.status = TaskStatus.AWAITING_VALIDATION
        task.requested_at = event.timestamp
    elif kind is EventType.VERDICT_RECORDED:
        if task.status not in (TaskStatus.AWAITING_VALIDATION, TaskStatus.EXECUTING):
            raise _illegal(event.task_id, task.status, "record a verdict")
        if event.payload["verdict"] == "approve":
            task.approvals.append(event.actor_id)
        else:
            task.revision += 1
            task.approvals = []
            if spec.re_consult_on_reject:
                task.status = TaskStatus.CONSULTING
                task.consultation = []
            else:
                task.status = TaskStatus.EXECUTING
    elif kind is EventType.NOTIFIED:
        task.notified.append(event.actor_id)
    elif kind is EventType.TASK_COMPLETED:
        if task.status not in (TaskStatus.AWAITING_VALIDATION, TaskStatus.EXECUTING):
            raise _illegal(event.task_id, task.status, "complete")
        task.status = TaskStatus.COMPLETE
    elif kind is EventType.TASK_FAILED:
        task.status = TaskStatus.FAILED
        task.failure = event.payload.get("reason", "")
    else:  # pragma: no cover - the enum is closed
        raise IllegalTransitionError(event.task_id, task.status, f"apply unknown event {kind}")
    return state


def replay_events(spec: WorkflowSpec, events: Iterable[AuditEvent], run_id: Optional[str] = None) -> RunState:
    """Rebuild the state a log describes, from nothing but the log."""
    events = list(events)
    if run_id is None:
        run_id = events[0].run_id if events else ""
    state = new_run_state(spec, run_id)
    for event in events:
        apply_event(spec, state, event)
    return state


def default_consult_content(task_id: str, actor_id: str, revision: int) -> str:
    return f"consultation from {actor_id} on {task_id} (revision {revision})"


def default_operator_content(task_id: str, actor_id: str, revision: int) -> str:
    return f"artifact for {task_id} prepared by {actor_id} (revision {revision})"


class RunEngine:
    """Drives one run of a workflow spec.

    All mutations happen under the run's lock, including adapter calls:
    an Execute gate in flight blocks other events of the same run, which
    keeps the log a serial record rather than a best-effort interleaving.
    """

    def __init__(
        self,
        spec: WorkflowSpec,
        adapter: Optional[AgentAdapter] = None,
        clock: Optional[Clock] = None,
        data_dir=None,
        run_id: Optional[str] = None,
        retry_budget: int = 2,
    ) -> None:
        self.spec = spec
        self.adapter = adapter if adapter is not None else MockAgent()
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.retry_budget = retry_budget
        path = None
        if data_dir is not None and spec.audit_enabled:
            path = Path(data_dir) / f"{self.run_id}.audit.jsonl"
        self.log = AuditLog(self.run_id, clock=clock, path=path)
        self.state = new_run_state(spec, self.run_id)
        self._lock = threading.RLock()
        self._observers: list = []

    # -- plumbing -----------------------------------------------------

    def add_observer(self, callback: Callable) -> None:
        """callback(event) fires after each event is appended and folded."""
        self._observers.append(callback)

    def new_condition(self) -> threading.Condition:
        """A condition variable sharing this run's lock. Waiters and
        observer callbacks then cannot deadlock on lock order."""
        return threading.Condition(self._lock)

    def _emit(self, type: EventType, payload: dict, task_id=None, actor_id=None) -> AuditEvent:
        event = self.log.record(type, payload, task_id=task_id, actor_id=actor_id)
        apply_event(self.spec, self.state, event)
        for callback in self._observers:
            callback(event)
        return event

    def _task(self, task_id: str) -> TaskRunState:
        try:
            return self.state.tasks[task_id]
        except KeyError:
            raise KeyError(f"unknown task {task_id!r}") from None

    def _complete(self, task_id: str) -> None:
        """Completion ripple: the task completes, Informed actors hear
        about it, and dependents whose prerequisites are all complete
        become ready, in chain declaration order."""
        chain = self.spec.chain(task_id)
        self._emit(EventType.TASK_COMPLETED, {"revision": self._task(task_id).revision}, task_id=task_id)
        for actor_id in chain.notify_actors:
            self._emit(EventType.NOTIFIED, {}, task_id=task_id, actor_id=actor_id)
        for dependent_chain in self.spec.chains:
            dependent = dependent_chain.task_id
            if dependent == task_id or self._task(dependent).status is not TaskStatus.PENDING:
                continue
            if dependent not in self.spec.dependents(task_id):
                continue
            if all(
                self._task(prerequisite).status is TaskStatus.COMPLETE
                for prerequisite in self.spec.prerequisites(dependent)
            ):
                self._emit(EventType.TASK_READY, {}, task_id=dependent)

    # -- commands -----------------------------------------------------

    def start(self) -> None:
        with self._lock:
            if self.state.started:
                raise _illegal("-", TaskStatus.PENDING, "start an already-started run")
            self._emit(EventType.RUN_STARTED, {
                "phase": self.spec.phase_name,
                "audit_enabled": self.spec.audit_enabled,
                "tasks": [chain.task_id for chain in self.spec.chains],
            })
            for task_id in self.spec.root_tasks():
                self._emit(EventType.TASK_READY, {}, task_id=task_id)

    def record_consult(self, task_id: str, actor_id: str, content: str) -> AuditEvent:
        with self._lock:
            chain = self.spec.chain(task_id)
            task = self._task(task_id)
            if task.status not in (TaskStatus.READY, TaskStatus.CONSULTING):
                raise _illegal(task_id, task.status, "record a consultation")
            if actor_id not in chain.consult_actors:
                raise UnauthorizedVerdictError(task_id, actor_id)
            if any(entry.actor_id == actor_id for entry in task.consultation):
                raise _illegal(task_id, task.status, f"record a second consultation from {actor_id}")
            mandatory = not self.spec.actor(chain.execute_actor).is_human
            return self._emit(
                EventType.CONSULT_RECORDED,
                {"content": content, "digest": sha256_hex(content), "mandatory": mandatory},
                task_id=task_id,
                actor_id=actor_id,
            )

    def start_execution(self, task_id: str) -> AuditEvent:
        with self._lock:
            chain = self.spec.chain(task_id)
            task = self._task(task_id)
            if task.status not in (TaskStatus.READY, TaskStatus.CONSULTING):
                raise _illegal(task_id, task.status, "start execution")
            executor = self.spec.actor(chain.execute_actor)
            if not executor.is_human:
                recorded = {entry.actor_id for entry in task.consultation}
                missing = [a for a in chain.consult_actors if a not in recorded]
                if missing:
                    raise MissingConsultationError(task_id, missing)
            return self._emit(
                EventType.EXECUTION_STARTED,
                {"revision": task.revision},
                task_id=task_id,
                actor_id=executor.id,
            )

    def execute_responsible(self, task_id: str, content: Optional[str] = None) -> list:
        """Produce the task's artifact: via the adapter for LLM
        executors, from operator-supplied content for humans. Returns
        the emitted events; raises AdapterFailureError after the retry
        budget is spent (the TaskFailed event is already recorded)."""
        with self._lock:
            chain = self.spec.chain(task_id)
            task = self._task(task_id)
            if task.status is not TaskStatus.EXECUTING:
                raise _illegal(task_id, task.status, "produce an artifact")
            executor = self.spec.actor(chain.execute_actor)
            before = len(self.log.events)
            if executor.is_human:
                if content is None:
                    raise ValueError(f"task {task_id}: a human Responsible needs operator-supplied content")
                draft = ArtifactDraft(content=content, metadata={"agent": "operator"})
            else:
                draft = self._invoke_adapter(chain, task)
            self._emit(
                EventType.ARTIFACT_PRODUCED,
                {
                    "version": task.revision,
                    "content": draft.content,
                    "digest": sha256_hex(draft.content),
                    "metadata": draft.metadata,
                },
                task_id=task_id,
                actor_id=executor.id,
            )
            if chain.auto_validates:
                # No Validate gates: synthesis only allows this for tasks a
                # human owns, and that human vouches for their own artifact.
                self._emit(
                    EventType.VERDICT_RECORDED,
                    {"verdict": "approve", "revision": task.revision, "auto": True},
                    task_id=task_id,
                    actor_id=executor.id,
                )
                self._complete(task_id)
            else:
                self._emit(
                    EventType.VALIDATION_REQUESTED,
                    {"validators": list(chain.validate_actors)},
                    task_id=task_id,
                )
            return self.log.events[before:]

    def _invoke_adapter(self, chain, task: TaskRunState) -> ArtifactDraft:
        context = {
            "task": {
                "id": chain.task_id,
                "name": chain.task_name,
                "artifact_type": chain.output_artifact_type,
                "revision": task.revision,
            },
            "consultation": [
                {"actor_id": entry.actor_id, "content": entry.content, "mandatory": entry.mandatory}
                for entry in task.consultation
            ],
            "prior_versions": [version.digest for version in task.artifacts],
        }
        attempts = 1 + self.retry_budget
        last_error: Optional[BaseException] = None
        for _ in range(attempts):
            try:
                return self.adapter.invoke(context)
            except Exception as exc:  # adapters may fail arbitrarily
                last_error = exc
        self._emit(
            EventType.TASK_FAILED,
            {"reason": f"adapter failed after {attempts} attempts: {last_error}"},
            task_id=chain.task_id,
            actor_id=chain.execute_actor,
        )
        raise AdapterFailureError(chain.task_id, attempts, last_error)

    def record_verdict(self, task_id: str, actor_id: str, verdict: str, comment: Optional[str] = None) -> list:
        with self._lock:
            if verdict not in ("approve", "reject"):
                raise ValueError(f"verdict must be approve or reject, got {verdict!r}")
            chain = self.spec.chain(task_id)
            task = self._task(task_id)
            if task.status is not TaskStatus.AWAITING_VALIDATION:
                raise _illegal(task_id, task.status, f"record a {verdict} verdict")
            if actor_id not in chain.validate_actors:
                raise UnauthorizedVerdictError(task_id, actor_id)
            if actor_id in task.approvals:
                raise _illegal(task_id, task.status, f"record a second verdict from {actor_id}")
            before = len(self.log.events)
            payload = {"verdict": verdict, "revision": task.revision}
            if comment:
                payload["comment"] = comment
            self._emit(EventType.VERDICT_RECORDED, payload, task_id=task_id, actor_id=actor_id)
            if verdict == "approve":
                quorum_met = (
                    self.spec.quorum is Quorum.ANY
                    or set(chain.validate_actors) <= set(task.approvals)
                )
                if quorum_met and not self._awaits_human_approval(chain, task):
                    self._complete(task_id)
            elif not self.spec.re_consult_on_reject:
                # straight back to the same Responsible actor
                self._emit(
                    EventType.EXECUTION_STARTED,
                    {"revision": task.revision},
                    task_id=task_id,
                    actor_id=chain.execute_actor,
                )
            return self.log.events[before:]

    def _awaits_human_approval(self, chain: TaskChain, task: TaskRunState) -> bool:
        # quorum alone cannot close an agent-executed task: if any human
        # holds a validate gate, one of them must be among the approvers
        if self.spec.actor(chain.execute_actor).is_human:
            return False
        if not any(self.spec.actor(a).is_human for a in chain.validate_actors):
            return False
        return not any(self.spec.actor(a).is_human for a in task.approvals)

    # -- drivers ------------------------------------------------------

    def advance_until_blocked(
        self,
        consult_content: Callable = default_consult_content,
        operator_content: Callable = default_operator_content,
    ) -> list:
        """Push every task as far as it can go without a verdict:
        record outstanding consultations, start execution, produce
        artifacts. Stops at approval gates, failures, and unmet
        dependencies. Returns the tasks that failed on the way."""
        failed = []
        with self._lock:
            if not self.state.started:
                self.start()
            progressed = True
            while progressed:
                progressed = False
                for chain in self.spec.chains:
                    task_id = chain.task_id
                    task = self._task(task_id)
                    if task.status in (TaskStatus.READY, TaskStatus.CONSULTING):
                        recorded = {entry.actor_id for entry in task.consultation}
                        for actor_id in chain.consult_actors:
                            if actor_id not in recorded:
                                self.record_consult(
                                    task_id, actor_id,
                                    consult_content(task_id, actor_id, task.revision),
                                )
                        self.start_execution(task_id)
                        progressed = True
                    if task.status is TaskStatus.EXECUTING:
                        executor = self.spec.actor(chain.execute_actor)
                        content = None
                        if executor.is_human:
                            content = operator_content(task_id, executor.id, task.revision)
                        try:
                            self.execute_responsible(task_id, content)
                        except AdapterFailureError:
                            failed.append(task_id)
                        progressed = True
        return failed

    # -- queries ------------------------------------------------------

    def pending_approvals(self, actor_id: Optional[str] = None) -> list:
        """Approval inbox entries, one per (task, remaining validator)
        question mark; filtered to one actor when given."""
        entries = []
        with self._lock:
            for chain in self.spec.chains:
                task = self._task(chain.task_id)
                if task.status is not TaskStatus.AWAITING_VALIDATION:
                    continue
                remaining = [a for a in chain.validate_actors if a not in task.approvals]
                if actor_id is not None and actor_id not in remaining:
                    continue
                artifact = task.latest_artifact
                entries.append({
                    "run_id": self.run_id,
                    "task_id": chain.task_id,
                    "task_name": chain.task_name,
                    "artifact_version": {
                        "version": artifact.version,
                        "digest": artifact.digest,
                        "content": artifact.content,
                        "metadata": artifact.metadata,
                    },
                    "consultation": [
                        {"actor_id": e.actor_id, "content": e.content, "mandatory": e.mandatory}
                        for e in task.consultation
                    ],
                    "responsible_actor": chain.execute_actor,
                    "accountable_actors": remaining,
                    "requested_at": task.requested_at,
                })
        return entries

    def events_since(self, since_seq: int) -> list:
        with self._lock:
            return [event for event in self.log.events if event.seq > since_seq]

    def is_finished(self) -> bool:
        with self._lock:
            return all(
                task.status in (TaskStatus.COMPLETE, TaskStatus.FAILED)
                for task in self.state.tasks.values()
            )

    def state_doc(self) -> dict:
        """JSON view of the run for the API and CLI."""
        with self._lock:
            tasks = {}
            for chain in self.spec.chains:
                task = self._task(chain.task_id)
                tasks[chain.task_id] = {
                    "status": task.status.value,
                    "revision": task.revision,
                    "artifacts": [
                        {
                            "version": a.version,
                            "digest": a.digest,
                            "content": a.content,
                            "metadata": a.metadata,
                        }
                        for a in task.artifacts
                    ],
                    "consultation": [
                        {"actor_id": e.actor_id, "content": e.content, "mandatory": e.mandatory}
                        for e in task.consultation
                    ],
                    "approvals": list(task.approvals),
                    "notified": list(task.notified),
                }
                if task.failure is not None:
                    tasks[chain.task_id]["failure"] = task.failure
            return {
                "run_id": self.run_id,
                "phase": self.spec.phase_name,
                "started": self.state.started,
                "finished": self.is_finished(),
                "tasks": tasks,
                "last_seq": len(self.log.events) - 1,
            }
