"""The three framework constraints over a resolved matrix.

C1  every task has at least one Responsible actor.
C2  every task has at least one Accountable actor, with a narrow
    exception for tasks a human already owns (see ValidationMode).
C3  no LLM agent is Responsible unless a human is Accountable.

These guard the division of labour between humans and LLM agents: work
may be delegated, accountability may not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    RaciMatrix,
    Role,
    Severity,
    TrustworthyRequirement,
    ValidationMode,
    actors_with_role,
)

_REQ = TrustworthyRequirement

C1_REQUIREMENTS = frozenset({_REQ.ACCOUNTABILITY})
C2_REQUIREMENTS = frozenset({_REQ.ACCOUNTABILITY, _REQ.HUMAN_AGENCY_OVERSIGHT})
C3_REQUIREMENTS = frozenset({_REQ.HUMAN_AGENCY_OVERSIGHT, _REQ.ACCOUNTABILITY})


@dataclass(frozen=True)
class Finding:
    """One rule violation (or advisory) tied to a matrix or workflow."""

    rule_id: str
    severity: Severity
    message: str
    task_id: Optional[str] = None
    actor_id: Optional[str] = None
    requirements: frozenset = frozenset()

    def __post_init__(self) -> None:
        if not self.rule_id:
            raise ValueError("finding needs a non-empty rule id")
        if not self.message:
            raise ValueError(f"finding {self.rule_id}: message must be non-empty")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of evaluating rule packs against one bundle."""

    mode: ValidationMode
    packs: tuple
    findings: tuple

    @property
    def is_valid(self) -> bool:
        return not any(f.severity is Severity.ERROR for f in self.findings)

    @property
    def status(self) -> str:
        return "valid" if self.is_valid else "invalid"

    def errors(self) -> tuple:
        return tuple(f for f in self.findings if f.severity is Severity.ERROR)


def check_c1(matrix: RaciMatrix) -> list:
    """One C1 error per task nobody is Responsible for."""
    findings = []
    for task_id in matrix.task_ids:
        if not actors_with_role(matrix, task_id, Role.RESPONSIBLE):
            findings.append(Finding(
                rule_id="C1",
                severity=Severity.ERROR,
                message="no actor is Responsible for this task",
                task_id=task_id,
                requirements=C1_REQUIREMENTS,
            ))
    return findings


def check_c2(matrix: RaciMatrix, actors, mode: ValidationMode) -> list:
    """One C2 error per task with no Accountable actor and no exception.

    The exception always needs a Responsible human; in strict mode it
    additionally needs every LLM-agent cell on the task to be Informed
    or empty.
    """
    by_id = {a.id: a for a in actors}
    findings = []
    for task_id in matrix.task_ids:
        if actors_with_role(matrix, task_id, Role.ACCOUNTABLE):
            continue
        human_r = any(
            by_id[actor_id].is_human
            for actor_id in actors_with_role(matrix, task_id, Role.RESPONSIBLE)
        )
        if human_r and mode is ValidationMode.STRICT:
            exempt = all(
                matrix.role_set(task_id, actor.id) <= {Role.INFORMED}
                for actor in actors
                if not actor.is_human
            )
        else:
            exempt = human_r
        if exempt:
            continue
        if human_r:
            message = ("no actor is Accountable; the exception needs every "
                       "LLM-agent cell on this task to be Informed or empty")
        else:
            message = "no actor is Accountable and no Responsible human can stand in"
        findings.append(Finding(
            rule_id="C2",
            severity=Severity.ERROR,
            message=message,
            task_id=task_id,
            requirements=C2_REQUIREMENTS,
        ))
    return findings


def check_c3(matrix: RaciMatrix, actors) -> list:
    """One C3 error per task where an LLM agent is Responsible and no
    human is Accountable. The finding points at the first such agent in
    actor declaration order."""
    by_id = {a.id: a for a in actors}
    findings = []
    for task_id in matrix.task_ids:
        llm_responsible = [
            actor_id
            for actor_id in actors_with_role(matrix, task_id, Role.RESPONSIBLE)
            if not by_id[actor_id].is_human
        ]
        if not llm_responsible:
            continue
        if any(
            by_id[actor_id].is_human
            for actor_id in actors_with_role(matrix, task_id, Role.ACCOUNTABLE)
        ):
            continue
        findings.append(Finding(
            rule_id="C3",
            severity=Severity.ERROR,
            message="an LLM agent is Responsible but no human is Accountable",
            task_id=task_id,
            actor_id=llm_responsible[0],
            requirements=C3_REQUIREMENTS,
        ))
    return findings
