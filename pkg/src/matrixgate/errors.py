"""Exception types shared across the package.

Every error that crosses a module boundary is one of these, so callers
(CLI, HTTP service, tests) can map failures to exit codes and status
codes without string matching.
"""

from __future__ import annotations

from typing import Optional


class MatrixGateError(Exception):
    """Base class for all package errors."""


class BundleParseError(MatrixGateError):
    """Raised when bundle JSON is malformed or violates the schema.

    The message starts with a dotted path into the document (for
    example ``tasks[2].depends_on``) whenever one is determinable, so
    users can locate the offending field without a stack trace.
    """


class UnresolvedCellError(MatrixGateError):
    """Raised when a matrix cell holds roles the policy cannot reduce."""

    def __init__(self, roles, task_id: Optional[str] = None, actor_id: Optional[str] = None) -> None:
        self.roles = frozenset(roles)
        self.task_id = task_id
        self.actor_id = actor_id
        listed = "/".join(sorted(r.value for r in self.roles))
        where = f" ({task_id}, {actor_id})" if task_id is not None else ""
        super().__init__(
            f"cell{where} holds {{{listed}}} and the resolution policy "
            "does not reduce it to a single role"
        )


class CyclicDependencyError(MatrixGateError):
    """Raised when task depends_on edges contain a cycle."""

    def __init__(self, cycle) -> None:
        self.cycle = list(cycle)
        super().__init__("dependency cycle: " + " -> ".join(self.cycle))


class UnknownPackError(MatrixGateError):
    """Raised when a requested rule pack id is not registered."""

    def __init__(self, pack_id: str, known) -> None:
        self.pack_id = pack_id
        super().__init__(f"unknown rule pack {pack_id!r}; known packs: {', '.join(known)}")


class MissingWorkflowError(MatrixGateError):
    """Raised when a workflow-scoped rule is evaluated without a workflow."""

    def __init__(self, rule_id: str) -> None:
        self.rule_id = rule_id
        super().__init__(f"rule {rule_id} is workflow-scoped but no workflow was supplied")


class InvalidMatrixError(MatrixGateError):
    """Raised when workflow synthesis is attempted over an invalid matrix."""


class IllegalTransitionError(MatrixGateError):
    """Raised when a run command is not legal in the task's current status."""

    def __init__(self, task_id: str, status, attempted: str) -> None:
        self.task_id = task_id
        self.status = status
        self.attempted = attempted
        super().__init__(f"task {task_id} is {status.value}; cannot {attempted}")


class UnauthorizedVerdictError(MatrixGateError):
    """Raised when a verdict comes from an actor without the A role."""

    def __init__(self, task_id: str, actor_id: str) -> None:
        self.task_id = task_id
        self.actor_id = actor_id
        super().__init__(f"actor {actor_id} is not accountable for task {task_id}")


class MissingConsultationError(MatrixGateError):
    """Raised when an LLM-responsible task starts executing before every
    mandatory consultation entry is recorded."""

    def __init__(self, task_id: str, missing) -> None:
        self.task_id = task_id
        self.missing = list(missing)
        super().__init__(
            f"task {task_id}: mandatory consultation missing from {', '.join(self.missing)}"
        )


class AdapterFailureError(MatrixGateError):
    """Raised when an agent adapter keeps failing after its retry budget."""

    def __init__(self, task_id: str, attempts: int, cause: Optional[BaseException] = None) -> None:
        self.task_id = task_id
        self.attempts = attempts
        self.cause = cause
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"task {task_id}: adapter failed after {attempts} attempts{detail}")


class AuditIntegrityError(MatrixGateError):
    """Raised when an audit log fails structural checks while being read.

    ``seq`` is the line index (= expected event sequence number) of the
    earliest unreadable or malformed entry.
    """

    def __init__(self, seq: int, reason: str) -> None:
        self.seq = seq
        super().__init__(f"audit log corrupt at seq {seq}: {reason}")


class MaxIterationsExceededError(MatrixGateError):
    """Raised when automated workflow strengthening fails to converge.

    Carries the last outcome so callers can inspect what was attempted.
    """

    def __init__(self, iterations: int, outcome=None) -> None:
        self.iterations = iterations
        self.outcome = outcome
        super().__init__(
            f"workflow still non-compliant after {iterations} strengthening iterations"
        )
