"""On-disk formats: bundle JSON in, bundle JSON out, rendered reports.

The parser is strict: unknown keys, duplicate keys, bad role strings,
and dangling references are all rejected with a dotted path into the
document. Serialization is canonical (declaration order, defaults and
empty fields omitted) so that parse(serialize(b)) is a fixpoint after
one pass.
"""

from __future__ import annotations

import json

from .constraints import Finding, ValidationReport
from .errors import BundleParseError
from .model import (
    Actor,
    ActorKind,
    BundleConfig,
    MatrixBundle,
    Provenance,
    Quorum,
    RaciMatrix,
    ResolutionPolicy,
    Role,
    Severity,
    Task,
    TrustworthyRequirement,
    ValidationMode,
)

# Matrix cell spellings. The dual forms are equivalent; "I/C" is canonical.
_ROLE_STRINGS = {
    "R": frozenset({Role.RESPONSIBLE}),
    "A": frozenset({Role.ACCOUNTABLE}),
    "C": frozenset({Role.CONSULTED}),
    "I": frozenset({Role.INFORMED}),
    "I/C": frozenset({Role.INFORMED, Role.CONSULTED}),
    "C/I": frozenset({Role.INFORMED, Role.CONSULTED}),
}

# A task that produces no reviewable artefact cannot be gated or
# approved, so such tasks are turned away at the door.
STEP1_ARTEFACT_RULE = "STEP1-ARTEFACT"


def _fail(path: str, message: str) -> None:
    raise BundleParseError(f"{path}: {message}")


def _reject_duplicate_keys(pairs):
    seen = set()
    result = {}
    for key, value in pairs:
        if key in seen:
            raise BundleParseError(f"duplicate key {key!r} in the same object")
        seen.add(key)
        result[key] = value
    return result


def parse_json(text: str) -> object:
    """json.loads with duplicate-key rejection and located syntax errors."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BundleParseError(f"document is not valid UTF-8: {exc}") from exc
    if not isinstance(text, str):
        raise BundleParseError(f"expected a JSON document as text, got {type(text).__name__}")
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except BundleParseError:
        raise
    except json.JSONDecodeError as exc:
        raise BundleParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def expect_object(value, path: str, required: set, optional: set) -> dict:
    """The value must be an object with exactly the given keys."""
    if not isinstance(value, dict):
        _fail(path, f"expected an object, got {type(value).__name__}")
    missing = required - value.keys()
    if missing:
        _fail(path, f"missing required field(s): {', '.join(sorted(missing))}")
    unexpected = value.keys() - required - optional
    if unexpected:
        _fail(path, f"unexpected field(s): {', '.join(sorted(unexpected))}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {type(value).__name__}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected a boolean, got {type(value).__name__}")
    return value


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        _fail(path, f"expected a list, got {type(value).__name__}")
    return value


def _as_enum(value, path: str, enum_type):
    value = _as_str(value, path)
    try:
        return enum_type(value)
    except ValueError:
        choices = ", ".join(sorted(member.value for member in enum_type))
        _fail(path, f"expected one of {choices}, got {value!r}")


def parse_actor_doc(entry, path: str) -> Actor:
    doc = expect_object(entry, path, required={"id", "name", "kind"}, optional={"provenance", "capabilities"})
    kind = _as_enum(doc["kind"], f"{path}.kind", ActorKind)
    provenance = Provenance.NOT_APPLICABLE
    if "provenance" in doc:
        provenance = _as_enum(doc["provenance"], f"{path}.provenance", Provenance)
    capabilities = {}
    if "capabilities" in doc:
        raw = doc["capabilities"]
        if not isinstance(raw, dict):
            _fail(f"{path}.capabilities", "expected an object of capability -> proficiency")
        for cap, score in raw.items():
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                _fail(f"{path}.capabilities.{cap}", f"expected a number in [0, 1], got {score!r}")
            capabilities[cap] = float(score)
    try:
        return Actor(
            id=_as_str(doc["id"], f"{path}.id"),
            name=_as_str(doc["name"], f"{path}.name"),
            kind=kind,
            provenance=provenance,
            capabilities=capabilities,
        )
    except ValueError as exc:
        raise BundleParseError(f"{path}: {exc}") from exc


def _parse_task(entry, path: str) -> Task:
    doc = expect_object(
        entry, path,
        required={"id", "name"},
        optional={"artefact_based", "stakeholder_facing", "required_capabilities", "depends_on", "output_artifact_type"},
    )
    task_id = _as_str(doc["id"], f"{path}.id")
    if "artefact_based" in doc and _as_bool(doc["artefact_based"], f"{path}.artefact_based") is False:
        _fail(
            f"{path}.artefact_based",
            f"{STEP1_ARTEFACT_RULE}: task {task_id!r} does not produce a verifiable artefact and cannot be admitted",
        )
    capabilities = [
        _as_str(cap, f"{path}.required_capabilities[{i}]")
        for i, cap in enumerate(_as_list(doc.get("required_capabilities", []), f"{path}.required_capabilities"))
    ]
    depends_on = [
        _as_str(dep, f"{path}.depends_on[{i}]")
        for i, dep in enumerate(_as_list(doc.get("depends_on", []), f"{path}.depends_on"))
    ]
    try:
        return Task(
            id=task_id,
            name=_as_str(doc["name"], f"{path}.name"),
            artefact_based=True,
            stakeholder_facing=_as_bool(doc.get("stakeholder_facing", False), f"{path}.stakeholder_facing"),
            required_capabilities=frozenset(capabilities),
            depends_on=tuple(depends_on),
            output_artifact_type=_as_str(doc.get("output_artifact_type", "document"), f"{path}.output_artifact_type"),
        )
    except ValueError as exc:
        raise BundleParseError(f"{path}: {exc}") from exc


def _parse_config(entry, path: str) -> BundleConfig:
    doc = expect_object(entry, path, required=set(), optional={"policy", "quorum", "re_consult_on_reject"})
    policy = ResolutionPolicy.STRICT
    if "policy" in doc:
        policy = _as_enum(doc["policy"], f"{path}.policy", ResolutionPolicy)
    quorum = Quorum.ALL
    if "quorum" in doc:
        quorum = _as_enum(doc["quorum"], f"{path}.quorum", Quorum)
    re_consult = False
    if "re_consult_on_reject" in doc:
        re_consult = _as_bool(doc["re_consult_on_reject"], f"{path}.re_consult_on_reject")
    return BundleConfig(policy=policy, quorum=quorum, re_consult_on_reject=re_consult)


def parse_bundle(text) -> MatrixBundle:
    """Parse a bundle document. All referential integrity is checked here
    so that a returned bundle is structurally sound by construction."""
    raw = parse_json(text)
    doc = expect_object(raw, "$", required={"phase", "actors", "tasks", "matrix"}, optional={"config"})
    phase = _as_str(doc["phase"], "phase")
    actors = tuple(
        parse_actor_doc(entry, f"actors[{i}]")
        for i, entry in enumerate(_as_list(doc["actors"], "actors"))
    )
    tasks = tuple(
        _parse_task(entry, f"tasks[{i}]")
        for i, entry in enumerate(_as_list(doc["tasks"], "tasks"))
    )
    actor_ids = tuple(a.id for a in actors)
    task_ids = tuple(t.id for t in tasks)
    known_actors = set(actor_ids)
    known_tasks = set(task_ids)

    matrix_doc = doc["matrix"]
    if not isinstance(matrix_doc, dict):
        _fail("matrix", f"expected an object of task id -> row, got {type(matrix_doc).__name__}")
    cells = {}
    for task_id, row in matrix_doc.items():
        if task_id not in known_tasks:
            _fail(f"matrix.{task_id}", "row names an undeclared task")
        if not isinstance(row, dict):
            _fail(f"matrix.{task_id}", f"expected an object of actor id -> role, got {type(row).__name__}")
        for actor_id, role_string in row.items():
            if actor_id not in known_actors:
                _fail(f"matrix.{task_id}.{actor_id}", "cell names an undeclared actor")
            role_string = _as_str(role_string, f"matrix.{task_id}.{actor_id}")
            roles = _ROLE_STRINGS.get(role_string)
            if roles is None:
                _fail(
                    f"matrix.{task_id}.{actor_id}",
                    f"unknown role {role_string!r}; expected one of {', '.join(sorted(_ROLE_STRINGS))}",
                )
            cells[(task_id, actor_id)] = roles

    config = _parse_config(doc["config"], "config") if "config" in doc else BundleConfig()
    try:
        return MatrixBundle(
            phase_name=phase,
            actors=actors,
            tasks=tasks,
            matrix=RaciMatrix(task_ids=task_ids, actor_ids=actor_ids, cells=cells),
            config=config,
        )
    except ValueError as exc:
        raise BundleParseError(str(exc)) from exc


def serialize_bundle(bundle: MatrixBundle) -> str:
    """Canonical document: declaration order, defaults omitted, dual
    cells written as "I/C"."""
    doc: dict = {"phase": bundle.phase_name}
    doc["actors"] = [_actor_doc(actor) for actor in bundle.actors]
    doc["tasks"] = [_task_doc(task) for task in bundle.tasks]
    matrix: dict = {}
    for task in bundle.tasks:
        row = {}
        for actor in bundle.actors:
            roles = bundle.matrix.role_set(task.id, actor.id)
            if roles:
                row[actor.id] = _role_string(roles, task.id, actor.id)
        if row:
            matrix[task.id] = row
    doc["matrix"] = matrix
    config = _config_doc(bundle.config)
    if config:
        doc["config"] = config
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _role_string(roles, task_id: str, actor_id: str) -> str:
    if roles == frozenset({Role.INFORMED, Role.CONSULTED}):
        return "I/C"
    if len(roles) == 1:
        return next(iter(roles)).value
    listed = "/".join(sorted(r.value for r in roles))
    raise ValueError(f"cell ({task_id}, {actor_id}) holds {{{listed}}}, which has no document form")


def _actor_doc(actor: Actor) -> dict:
    doc: dict = {"id": actor.id, "name": actor.name, "kind": actor.kind.value}
    if actor.provenance is not Provenance.NOT_APPLICABLE:
        doc["provenance"] = actor.provenance.value
    if actor.capabilities:
        doc["capabilities"] = {cap: actor.capabilities[cap] for cap in sorted(actor.capabilities)}
    return doc


def _task_doc(task: Task) -> dict:
    doc: dict = {"id": task.id, "name": task.name}
    if task.stakeholder_facing:
        doc["stakeholder_facing"] = True
    if task.required_capabilities:
        doc["required_capabilities"] = sorted(task.required_capabilities)
    if task.depends_on:
        doc["depends_on"] = list(task.depends_on)
    if task.output_artifact_type != "document":
        doc["output_artifact_type"] = task.output_artifact_type
    return doc


def _config_doc(config: BundleConfig) -> dict:
    doc: dict = {}
    if config.policy is not ResolutionPolicy.STRICT:
        doc["policy"] = config.policy.value
    if config.quorum is not Quorum.ALL:
        doc["quorum"] = config.quorum.value
    if config.re_consult_on_reject:
        doc["re_consult_on_reject"] = True
    return doc


def finding_to_doc(finding: Finding) -> dict:
    doc: dict = {"rule_id": finding.rule_id, "severity": finding.severity.value}
    if finding.task_id is not None:
        doc["task_id"] = finding.task_id
    if finding.actor_id is not None:
        doc["actor_id"] = finding.actor_id
    doc["message"] = finding.message
    doc["requirements"] = [req.value for req in TrustworthyRequirement if req in finding.requirements]
    return doc


def report_to_doc(report: ValidationReport) -> dict:
    return {
        "mode": report.mode.value,
        "packs": list(report.packs),
        "status": report.status,
        "findings": [finding_to_doc(f) for f in report.findings],
    }


def finding_from_doc(doc: dict) -> Finding:
    requirements = frozenset(TrustworthyRequirement(tag) for tag in doc.get("requirements", []))
    return Finding(
        rule_id=doc["rule_id"],
        severity=Severity(doc["severity"]),
        message=doc["message"],
        task_id=doc.get("task_id"),
        actor_id=doc.get("actor_id"),
        requirements=requirements,
    )


def report_from_doc(doc: dict) -> ValidationReport:
    return ValidationReport(
        mode=ValidationMode(doc["mode"]),
        packs=tuple(doc["packs"]),
        findings=tuple(finding_from_doc(f) for f in doc["findings"]),
    )


class ReportFormat:
    TEXT = "text"
    JSON = "json"


def render_report(report: ValidationReport, fmt: str = ReportFormat.TEXT) -> str:
    """Text: one finding per line as
    "RULE-ID severity task actor message [requirement-tags]", findings
    already grouped by task through the report's canonical order, plus a
    closing status line. Json: the stable machine schema."""
    if fmt == ReportFormat.JSON:
        return json.dumps(report_to_doc(report), indent=2, ensure_ascii=False)
    if fmt != ReportFormat.TEXT:
        raise ValueError(f"unknown report format {fmt!r}")
    if not report.findings:
        return "OK: 0 findings"
    lines = []
    for finding in report.findings:
        tags = ", ".join(req.value for req in TrustworthyRequirement if req in finding.requirements)
        lines.append(
            f"{finding.rule_id} {finding.severity.value} "
            f"{finding.task_id or '-'} {finding.actor_id or '-'} "
            f"{finding.message} [{tags}]"
        )
    errors = sum(1 for f in report.findings if f.severity is Severity.ERROR)
    warnings = sum(1 for f in report.findings if f.severity is Severity.WARNING)
    lines.append(f"{report.status.upper()}: {errors} error(s), {warnings} warning(s)")
    return "\n".join(lines)
