"""Domain model: actors, tasks, roles, and the responsibility matrix.

Pure data shared by every other module. Nothing here does I/O; parsing
and serialization live in bundle_io.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import CyclicDependencyError, UnresolvedCellError

_SLUG = re.compile(r"^[a-z][a-z0-9_]*$")


class Role(str, Enum):
    """Responsibility one actor holds for one task."""

    RESPONSIBLE = "R"
    ACCOUNTABLE = "A"
    CONSULTED = "C"
    INFORMED = "I"


class ActorKind(str, Enum):
    HUMAN = "human"
    LLM_AGENT = "llm_agent"


class Provenance(str, Enum):
    """Where an LLM agent comes from; humans carry NOT_APPLICABLE."""

    NOT_APPLICABLE = "not_applicable"
    IN_HOUSE = "in_house"
    THIRD_PARTY = "third_party"


class TrustworthyRequirement(str, Enum):
    """The seven high-level trustworthy-AI requirements used as rule tags."""

    HUMAN_AGENCY_OVERSIGHT = "human_agency_oversight"
    TECHNICAL_ROBUSTNESS_SAFETY = "technical_robustness_safety"
    PRIVACY_DATA_GOVERNANCE = "privacy_data_governance"
    TRANSPARENCY = "transparency"
    DIVERSITY_NON_DISCRIMINATION_FAIRNESS = "diversity_non_discrimination_fairness"
    SOCIETAL_ENVIRONMENTAL_WELLBEING = "societal_environmental_wellbeing"
    ACCOUNTABILITY = "accountability"


class ResolutionPolicy(str, Enum):
    """How dual-role authoring cells (I/C) reduce to a single role."""

    STRICT = "strict"
    PREFER_CONSULTED = "prefer-consulted"
    PREFER_INFORMED = "prefer-informed"


class ValidationMode(str, Enum):
    """How the missing-accountable exception of constraint C2 is read.

    STRICT grants the exception only when a human holds R and every
    LLM-agent cell on the task is Informed or empty. COMPAT grants it
    whenever a human holds R, treating that human as implicitly
    accountable. COMPAT is the default.
    """

    STRICT = "strict"
    COMPAT = "paper-compat"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class Quorum(str, Enum):
    """How many accountable approvals complete a validated task."""

    ALL = "all"
    ANY = "any"


def _check_slug(value: str, what: str) -> None:
    if not isinstance(value, str) or not _SLUG.match(value):
        raise ValueError(f"{what} {value!r} is not slug-case (expected e.g. 'create_product_backlog')")


@dataclass(frozen=True)
class Actor:
    """A human or an LLM agent that can hold roles in the matrix.

    Capability scores model what an agent can do and how well, on a
    [0, 1] scale. Humans carry no scores; their competence is not the
    engine's business.
    """

    id: str
    name: str
    kind: ActorKind
    provenance: Provenance = Provenance.NOT_APPLICABLE
    capabilities: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_slug(self.id, "actor id")
        if not self.name:
            raise ValueError(f"actor {self.id}: name must be non-empty")
        if self.kind is ActorKind.HUMAN:
            if self.provenance is not Provenance.NOT_APPLICABLE:
                raise ValueError(f"actor {self.id}: humans carry no provenance")
            if self.capabilities:
                raise ValueError(f"actor {self.id}: capability scores apply to LLM agents only")
        elif self.provenance is Provenance.NOT_APPLICABLE:
            raise ValueError(f"actor {self.id}: LLM agents need a provenance (in_house or third_party)")
        for cap, score in self.capabilities.items():
            _check_slug(cap, f"actor {self.id}: capability id")
            if not isinstance(score, (int, float)) or isinstance(score, bool) or not 0.0 <= score <= 1.0:
                raise ValueError(f"actor {self.id}: proficiency for {cap} must be in [0, 1], got {score!r}")

    @property
    def is_human(self) -> bool:
        return self.kind is ActorKind.HUMAN


@dataclass(frozen=True)
class Task:
    """One unit of work in the phase.

    Only artefact-based tasks are admitted to a bundle: completion must
    yield a concrete output someone can inspect and approve.
    """

    id: str
    name: str
    artefact_based: bool = True
    stakeholder_facing: bool = False
    required_capabilities: frozenset = frozenset()
    depends_on: tuple = ()
    output_artifact_type: str = "document"

    def __post_init__(self) -> None:
        _check_slug(self.id, "task id")
        if not self.name:
            raise ValueError(f"task {self.id}: name must be non-empty")
        if not self.output_artifact_type:
            raise ValueError(f"task {self.id}: output_artifact_type must be non-empty")
        for cap in self.required_capabilities:
            _check_slug(cap, f"task {self.id}: required capability")
        seen = set()
        for dep in self.depends_on:
            _check_slug(dep, f"task {self.id}: dependency")
            if dep == self.id:
                raise ValueError(f"task {self.id}: depends on itself")
            if dep in seen:
                raise ValueError(f"task {self.id}: duplicate dependency {dep!r}")
            seen.add(dep)


@dataclass(frozen=True)
class RaciMatrix:
    """Role assignments keyed by (task id, actor id).

    Cells hold role sets: an authored matrix may keep the dual I/C
    form, a resolved matrix has exactly one role per populated cell.
    Absent keys mean the cell is empty; empty sets are not stored.
    """

    task_ids: tuple
    actor_ids: tuple
    cells: Mapping

    def __post_init__(self) -> None:
        tasks = set(self.task_ids)
        actors = set(self.actor_ids)
        for (task_id, actor_id), roles in self.cells.items():
            if task_id not in tasks:
                raise ValueError(f"matrix cell references unknown task {task_id!r}")
            if actor_id not in actors:
                raise ValueError(f"matrix cell references unknown actor {actor_id!r}")
            if not roles:
                raise ValueError(f"matrix cell ({task_id}, {actor_id}) holds an empty role set; drop the cell instead")
            for role in roles:
                if not isinstance(role, Role):
                    raise ValueError(f"matrix cell ({task_id}, {actor_id}) holds a non-role value {role!r}")

    def role_set(self, task_id: str, actor_id: str) -> frozenset:
        return self.cells.get((task_id, actor_id), frozenset())

    def is_resolved(self) -> bool:
        return all(len(roles) == 1 for roles in self.cells.values())


def resolve_cell(
    roles: Iterable,
    policy: ResolutionPolicy,
    *,
    task_id: Optional[str] = None,
    actor_id: Optional[str] = None,
) -> Optional[Role]:
    """Reduce an authoring cell to at most one role.

    Empty cells and singletons pass through under every policy. The
    preference policies settle only the Informed/Consulted pair; any
    other multi-role cell is an authoring error, as is any multi-role
    cell under the strict policy.
    """
    current = frozenset(roles)
    if len(current) <= 1:
        return next(iter(current), None)
    if policy is not ResolutionPolicy.STRICT and current == {Role.INFORMED, Role.CONSULTED}:
        if policy is ResolutionPolicy.PREFER_CONSULTED:
            return Role.CONSULTED
        return Role.INFORMED
    raise UnresolvedCellError(current, task_id, actor_id)


def resolve_matrix(matrix: RaciMatrix, policy: ResolutionPolicy) -> RaciMatrix:
    """Resolve every cell, walking tasks then actors in declaration order
    so the first offending cell reported is deterministic."""
    cells = {}
    for task_id in matrix.task_ids:
        for actor_id in matrix.actor_ids:
            roles = matrix.role_set(task_id, actor_id)
            if not roles:
                continue
            role = resolve_cell(roles, policy, task_id=task_id, actor_id=actor_id)
            cells[(task_id, actor_id)] = frozenset({role})
    return RaciMatrix(matrix.task_ids, matrix.actor_ids, cells)


def actors_with_role(matrix: RaciMatrix, task_id: str, role: Role) -> list:
    """Actors holding `role` for `task_id`, in actor declaration order.

    Works on any matrix by set membership; callers that need single-role
    semantics resolve the matrix first.
    """
    if task_id not in matrix.task_ids:
        raise KeyError(f"unknown task {task_id!r}")
    return [actor_id for actor_id in matrix.actor_ids if role in matrix.role_set(task_id, actor_id)]


def topological_order(tasks: Iterable[Task]) -> tuple:
    """Dependency-first task order; cycles are rejected with a witness path."""
    by_id = {task.id: task for task in tasks}
    order: list = []
    state: dict = {}  # 1 = on the current path, 2 = done

    def visit(task_id: str, path: list) -> None:
        mark = state.get(task_id)
        if mark == 2:
            return
        if mark == 1:
            raise CyclicDependencyError(path[path.index(task_id):] + [task_id])
        state[task_id] = 1
        path.append(task_id)
        for dep in by_id[task_id].depends_on:
            if dep not in by_id:
                raise ValueError(f"task {task_id}: depends on unknown task {dep!r}")
            visit(dep, path)
        path.pop()
        state[task_id] = 2
        order.append(task_id)

    for task in by_id.values():
        visit(task.id, [])
    return tuple(order)


@dataclass(frozen=True)
class BundleConfig:
    """Validation and run options carried inside a bundle file."""

    policy: ResolutionPolicy = ResolutionPolicy.STRICT
    quorum: Quorum = Quorum.ALL
    re_consult_on_reject: bool = False


@dataclass(frozen=True)
class MatrixBundle:
    """Everything needed to validate one phase: actors, tasks, matrix, options."""

    phase_name: str
    actors: tuple
    tasks: tuple
    matrix: RaciMatrix
    config: BundleConfig = BundleConfig()

    def __post_init__(self) -> None:
        if not self.phase_name:
            raise ValueError("phase name must be non-empty")
        if not self.actors:
            raise ValueError("bundle needs at least one actor")
        if not self.tasks:
            raise ValueError("bundle needs at least one task")
        actor_ids = [a.id for a in self.actors]
        task_ids = [t.id for t in self.tasks]
        for ids, what in ((actor_ids, "actor"), (task_ids, "task")):
            seen = set()
            for item in ids:
                if item in seen:
                    raise ValueError(f"duplicate {what} id {item!r}")
                seen.add(item)
        if self.matrix.task_ids != tuple(task_ids) or self.matrix.actor_ids != tuple(actor_ids):
            raise ValueError("matrix axes must list the bundle's task and actor ids in declaration order")
        known_tasks = set(task_ids)
        for task in self.tasks:
            if not task.artefact_based:
                raise ValueError(f"task {task.id}: bundles admit artefact-based tasks only")
            for dep in task.depends_on:
                if dep not in known_tasks:
                    raise ValueError(f"task {task.id}: depends on unknown task {dep!r}")
        topological_order(self.tasks)  # raises CyclicDependencyError on a cycle

    def actor(self, actor_id: str) -> Actor:
        for actor in self.actors:
            if actor.id == actor_id:
                return actor
        raise KeyError(f"unknown actor {actor_id!r}")

    def task(self, task_id: str) -> Task:
        for task in self.tasks:
            if task.id == task_id:
                return task
        raise KeyError(f"unknown task {task_id!r}")

    @property
    def humans(self) -> tuple:
        return tuple(a for a in self.actors if a.is_human)

    @property
    def llm_agents(self) -> tuple:
        return tuple(a for a in self.actors if not a.is_human)

    def resolved_matrix(self, policy: Optional[ResolutionPolicy] = None) -> RaciMatrix:
        return resolve_matrix(self.matrix, policy or self.config.policy)
