"""Compiled run templates: per-task gate chains plus cross-task edges.

A task chain is always Consult* -> Execute -> Validate* -> Notify*.
Chains without Validate gates auto-complete on artifact production;
synthesis only omits Validate gates for tasks a human already owns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import BundleParseError
from .model import Actor, Provenance, Quorum, Task, topological_order


class GateKind(str, Enum):
    CONSULT = "consult"
    EXECUTE = "execute"
    VALIDATE = "validate"
    NOTIFY = "notify"


# Legal position of each gate kind within a chain, in order.
_CHAIN_PHASES = (GateKind.CONSULT, GateKind.EXECUTE, GateKind.VALIDATE, GateKind.NOTIFY)


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    actor_id: str

    def __post_init__(self) -> None:
        if not self.actor_id:
            raise ValueError("gate needs an actor id")


@dataclass(frozen=True)
class TaskChain:
    """The gates one task passes through, in execution order."""

    task_id: str
    task_name: str
    output_artifact_type: str
    gates: tuple

    def __post_init__(self) -> None:
        phase = 0
        executes = 0
        for gate in self.gates:
            while phase < len(_CHAIN_PHASES) and gate.kind is not _CHAIN_PHASES[phase]:
                phase += 1
            if phase >= len(_CHAIN_PHASES):
                kinds = " -> ".join(g.kind.value for g in self.gates)
                raise ValueError(f"chain {self.task_id}: gate order must be consult* -> execute -> validate* -> notify*, got {kinds}")
            if gate.kind is GateKind.EXECUTE:
                executes += 1
                phase += 1  # at most one execute gate
        if executes != 1:
            raise ValueError(f"chain {self.task_id}: exactly one execute gate required, got {executes}")
        seen = set()
        for gate in self.gates:
            key = (gate.kind, gate.actor_id)
            if key in seen:
                raise ValueError(f"chain {self.task_id}: duplicate {gate.kind.value} gate for {gate.actor_id}")
            seen.add(key)

    def _actors(self, kind: GateKind) -> tuple:
        return tuple(g.actor_id for g in self.gates if g.kind is kind)

    @property
    def execute_actor(self) -> str:
        return self._actors(GateKind.EXECUTE)[0]

    @property
    def consult_actors(self) -> tuple:
        return self._actors(GateKind.CONSULT)

    @property
    def validate_actors(self) -> tuple:
        return self._actors(GateKind.VALIDATE)

    @property
    def notify_actors(self) -> tuple:
        return self._actors(GateKind.NOTIFY)

    @property
    def auto_validates(self) -> bool:
        return not self.validate_actors


@dataclass(frozen=True)
class WorkflowSpec:
    """A runnable template: who does what, in what order, under which flags.

    Carries its own actor roster so a written spec file can be executed
    without the bundle it came from. Edges are (prerequisite, dependent)
    pairs between task ids.
    """

    phase_name: str
    actors: tuple
    chains: tuple
    edges: tuple = ()
    audit_enabled: bool = True
    quorum: Quorum = Quorum.ALL
    re_consult_on_reject: bool = False

    def __post_init__(self) -> None:
        if not self.phase_name:
            raise ValueError("workflow needs a phase name")
        if not self.chains:
            raise ValueError("workflow needs at least one task chain")
        actor_ids = {a.id for a in self.actors}
        if len(actor_ids) != len(self.actors):
            raise ValueError("duplicate actor ids in workflow roster")
        task_ids = [c.task_id for c in self.chains]
        if len(set(task_ids)) != len(task_ids):
            raise ValueError("duplicate task chains in workflow")
        known = set(task_ids)
        for chain in self.chains:
            for gate in chain.gates:
                if gate.actor_id not in actor_ids:
                    raise ValueError(f"chain {chain.task_id}: gate references unknown actor {gate.actor_id!r}")
        deps: dict = {tid: [] for tid in task_ids}
        for edge in self.edges:
            before, after = edge
            if before not in known or after not in known:
                raise ValueError(f"edge {before!r} -> {after!r} references an unknown task")
            deps[after].append(before)
        # reuse the task-graph cycle check over synthetic tasks
        topological_order(
            Task(id=tid, name=tid, depends_on=tuple(deps[tid])) for tid in task_ids
        )

    def chain(self, task_id: str) -> TaskChain:
        for chain in self.chains:
            if chain.task_id == task_id:
                return chain
        raise KeyError(f"unknown task {task_id!r}")

    def actor(self, actor_id: str) -> Actor:
        for actor in self.actors:
            if actor.id == actor_id:
                return actor
        raise KeyError(f"unknown actor {actor_id!r}")

    def prerequisites(self, task_id: str) -> tuple:
        return tuple(before for before, after in self.edges if after == task_id)

    def dependents(self, task_id: str) -> tuple:
        return tuple(after for before, after in self.edges if before == task_id)

    def root_tasks(self) -> tuple:
        blocked = {after for _, after in self.edges}
        return tuple(c.task_id for c in self.chains if c.task_id not in blocked)


def serialize_workflow(spec: WorkflowSpec) -> str:
    """Stable JSON form; omits fields at their defaults."""
    return json.dumps(workflow_to_doc(spec), indent=2, ensure_ascii=False) + "\n"


def workflow_to_doc(spec: WorkflowSpec) -> dict:
    doc: dict = {"phase": spec.phase_name}
    if not spec.audit_enabled:
        doc["audit_enabled"] = False
    if spec.quorum is not Quorum.ALL:
        doc["quorum"] = spec.quorum.value
    if spec.re_consult_on_reject:
        doc["re_consult_on_reject"] = True
    doc["actors"] = [_actor_to_doc(a) for a in spec.actors]
    doc["chains"] = [
        {
            "task": c.task_id,
            "name": c.task_name,
            "artifact_type": c.output_artifact_type,
            "gates": [{"kind": g.kind.value, "actor": g.actor_id} for g in c.gates],
        }
        for c in spec.chains
    ]
    if spec.edges:
        doc["edges"] = [[before, after] for before, after in spec.edges]
    return doc


def _actor_to_doc(actor: Actor) -> dict:
    doc: dict = {"id": actor.id, "name": actor.name, "kind": actor.kind.value}
    if actor.provenance is not Provenance.NOT_APPLICABLE:
        doc["provenance"] = actor.provenance.value
    if actor.capabilities:
        doc["capabilities"] = {cap: actor.capabilities[cap] for cap in sorted(actor.capabilities)}
    return doc


def parse_workflow(text: str) -> WorkflowSpec:
    """Inverse of serialize_workflow; raises BundleParseError on any defect."""
    from .bundle_io import expect_object, parse_actor_doc, parse_json  # local import: bundle_io imports this module's peers

    raw = parse_json(text)
    doc = expect_object(
        raw, "$",
        required={"phase", "actors", "chains"},
        optional={"audit_enabled", "quorum", "re_consult_on_reject", "edges"},
    )
    try:
        actors = tuple(
            parse_actor_doc(entry, f"actors[{i}]")
            for i, entry in enumerate(_expect_list(doc["actors"], "actors"))
        )
        chains = tuple(
            _parse_chain(entry, f"chains[{i}]")
            for i, entry in enumerate(_expect_list(doc["chains"], "chains"))
        )
        edges = []
        for i, entry in enumerate(_expect_list(doc.get("edges", []), "edges")):
            if not isinstance(entry, list) or len(entry) != 2 or not all(isinstance(x, str) for x in entry):
                raise BundleParseError(f"edges[{i}]: expected a [before, after] pair of task ids")
            edges.append((entry[0], entry[1]))
        quorum_raw = doc.get("quorum", Quorum.ALL.value)
        if quorum_raw not in {q.value for q in Quorum}:
            raise BundleParseError(f"quorum: expected one of {sorted(q.value for q in Quorum)}, got {quorum_raw!r}")
        for flag in ("audit_enabled", "re_consult_on_reject"):
            if flag in doc and not isinstance(doc[flag], bool):
                raise BundleParseError(f"{flag}: expected a boolean")
        if not isinstance(doc["phase"], str):
            raise BundleParseError("phase: expected a string")
        return WorkflowSpec(
            phase_name=doc["phase"],
            actors=actors,
            chains=chains,
            edges=tuple(edges),
            audit_enabled=doc.get("audit_enabled", True),
            quorum=Quorum(quorum_raw),
            re_consult_on_reject=doc.get("re_consult_on_reject", False),
        )
    except BundleParseError:
        raise
    except ValueError as exc:
        raise BundleParseError(str(exc)) from exc


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise BundleParseError(f"{path}: expected a list")
    return value


def _parse_chain(entry, path: str) -> TaskChain:
    from .bundle_io import expect_object

    doc = expect_object(entry, path, required={"task", "name", "artifact_type", "gates"}, optional=set())
    for key in ("task", "name", "artifact_type"):
        if not isinstance(doc[key], str):
            raise BundleParseError(f"{path}.{key}: expected a string")
    gates = []
    for i, gate_entry in enumerate(_expect_list(doc["gates"], f"{path}.gates")):
        gate_doc = expect_object(gate_entry, f"{path}.gates[{i}]", required={"kind", "actor"}, optional=set())
        kind_raw = gate_doc["kind"]
        if kind_raw not in {k.value for k in GateKind}:
            raise BundleParseError(f"{path}.gates[{i}].kind: expected one of {sorted(k.value for k in GateKind)}, got {kind_raw!r}")
        if not isinstance(gate_doc["actor"], str):
            raise BundleParseError(f"{path}.gates[{i}].actor: expected a string")
        gates.append(Gate(kind=GateKind(kind_raw), actor_id=gate_doc["actor"]))
    return TaskChain(
        task_id=doc["task"],
        task_name=doc["name"],
        output_artifact_type=doc["artifact_type"],
        gates=tuple(gates),
    )
