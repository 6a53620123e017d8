"""Compliance rule packs evaluated over matrices and workflows.

Three packs ship in v1:

  framework-core  the C1-C3 constraints; always evaluated.
  aia-deployer    obligations when third-party LLM agents are deployed.
  aia-provider    obligations when agents were developed in-house.

Rules are fixed predicates in code, not a user-authored DSL: every
claim a report makes must be traceable to a reviewable function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .constraints import Finding, ValidationReport, check_c1, check_c2, check_c3
from .errors import MissingWorkflowError, UnknownPackError
from .model import (
    ActorKind,
    MatrixBundle,
    Provenance,
    RaciMatrix,
    Role,
    Severity,
    TrustworthyRequirement,
    ValidationMode,
    actors_with_role,
)
from .workflow import WorkflowSpec

_REQ = TrustworthyRequirement

# Verbatim on every coverage rendering. "Satisfied" is a statement about
# the encoded rules, not a legal determination.
COVERAGE_DISCLAIMER = (
    "Satisfied means no encoded rule found a violation; "
    "it is not a determination of legal compliance."
)


class RuleScope(str, Enum):
    MATRIX = "matrix"
    WORKFLOW = "workflow"


class CoverageVerdict(str, Enum):
    NOT_EXERCISED = "not_exercised"
    SATISFIED = "satisfied"
    VIOLATED = "violated"


@dataclass(frozen=True)
class EvalContext:
    """Everything a rule predicate may look at. The matrix is resolved."""

    bundle: MatrixBundle
    matrix: RaciMatrix
    mode: ValidationMode
    workflow: Optional[WorkflowSpec] = None


@dataclass(frozen=True)
class Rule:
    """One compliance predicate. ``check`` returns fully formed findings
    whose rule_id/severity/requirements must match this rule's."""

    id: str
    description: str
    scope: RuleScope
    severity: Severity
    requirements: frozenset
    check: Callable

    def __post_init__(self) -> None:
        if not self.requirements:
            raise ValueError(f"rule {self.id}: needs at least one requirement tag")

    def finding(self, message: str, task_id: Optional[str] = None, actor_id: Optional[str] = None) -> Finding:
        return Finding(
            rule_id=self.id,
            severity=self.severity,
            message=message,
            task_id=task_id,
            actor_id=actor_id,
            requirements=self.requirements,
        )


@dataclass(frozen=True)
class RulePack:
    id: str
    description: str
    rules: tuple = ()

    def __post_init__(self) -> None:
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError(f"pack {self.id}: duplicate rule ids")


def _human_accountable(ctx: EvalContext, task_id: str) -> bool:
    return any(
        ctx.bundle.actor(actor_id).is_human
        for actor_id in actors_with_role(ctx.matrix, task_id, Role.ACCOUNTABLE)
    )


def _llm_holds(ctx: EvalContext, task_id: str, role: Role) -> list:
    return [
        actor_id
        for actor_id in actors_with_role(ctx.matrix, task_id, role)
        if not ctx.bundle.actor(actor_id).is_human
    ]


def _check_llm_without_human_accountable(rule: Rule, ctx: EvalContext) -> list:
    """An LLM agent holds R or A on a task that has no human Accountable."""
    findings = []
    for task_id in ctx.matrix.task_ids:
        offenders = _llm_holds(ctx, task_id, Role.RESPONSIBLE) + _llm_holds(ctx, task_id, Role.ACCOUNTABLE)
        if not offenders or _human_accountable(ctx, task_id):
            continue
        findings.append(rule.finding(
            "an LLM agent holds R or A on this task but no human is Accountable",
            task_id=task_id,
            actor_id=offenders[0],
        ))
    return findings


def _check_llm_accountable(rule: Rule, ctx: EvalContext) -> list:
    """Flag every cell that makes an LLM agent Accountable."""
    findings = []
    for task_id in ctx.matrix.task_ids:
        for actor_id in _llm_holds(ctx, task_id, Role.ACCOUNTABLE):
            findings.append(rule.finding(
                "an LLM agent is Accountable; accountability should rest with a human",
                task_id=task_id,
                actor_id=actor_id,
            ))
    return findings


def _check_unvalidated_llm_execution(rule: Rule, ctx: EvalContext) -> list:
    """An LLM agent executes a task whose chain has no human Validate gate."""
    findings = []
    for chain in ctx.workflow.chains:
        executor = ctx.workflow.actor(chain.execute_actor)
        if executor.is_human:
            continue
        if any(ctx.workflow.actor(v).is_human for v in chain.validate_actors):
            continue
        findings.append(rule.finding(
            "an LLM agent executes this task without a human validation gate before completion",
            task_id=chain.task_id,
            actor_id=executor.id,
        ))
    return findings


def _check_audit_disabled(rule: Rule, ctx: EvalContext) -> list:
    if ctx.workflow.audit_enabled:
        return []
    return [rule.finding("audit logging is disabled for this workflow")]


def _check_undocumented_capabilities(rule: Rule, ctx: EvalContext) -> list:
    """In-house agents must ship a capability map; an empty one means the
    builder has not documented what the system is for."""
    findings = []
    for actor in ctx.bundle.actors:
        if actor.kind is ActorKind.LLM_AGENT and actor.provenance is Provenance.IN_HOUSE and not actor.capabilities:
            findings.append(rule.finding(
                "an in-house LLM agent declares no capabilities; document what it is built to do",
                actor_id=actor.id,
            ))
    return findings


def _rule(rule_id: str, description: str, scope: RuleScope, severity: Severity, requirements, check) -> Rule:
    return Rule(
        id=rule_id,
        description=description,
        scope=scope,
        severity=severity,
        requirements=frozenset(requirements),
        check=check,
    )


FRAMEWORK_CORE = RulePack(
    id="framework-core",
    description="The three constraints every matrix must satisfy.",
    rules=(
        _rule(
            "C1", "Every task has at least one Responsible actor.",
            RuleScope.MATRIX, Severity.ERROR,
            {_REQ.ACCOUNTABILITY},
            lambda rule, ctx: check_c1(ctx.matrix),
        ),
        _rule(
            "C2", "Every task has at least one Accountable actor, unless a human Responsible stands in.",
            RuleScope.MATRIX, Severity.ERROR,
            {_REQ.ACCOUNTABILITY, _REQ.HUMAN_AGENCY_OVERSIGHT},
            lambda rule, ctx: check_c2(ctx.matrix, ctx.bundle.actors, ctx.mode),
        ),
        _rule(
            "C3", "No LLM agent is Responsible without a human Accountable.",
            RuleScope.MATRIX, Severity.ERROR,
            {_REQ.HUMAN_AGENCY_OVERSIGHT, _REQ.ACCOUNTABILITY},
            lambda rule, ctx: check_c3(ctx.matrix, ctx.bundle.actors),
        ),
    ),
)

AIA_DEPLOYER = RulePack(
    id="aia-deployer",
    description="Obligations when deploying third-party LLM agents.",
    rules=(
        _rule(
            "AIA-D1", "No LLM agent holds R or A on a task without a human Accountable.",
            RuleScope.MATRIX, Severity.ERROR,
            {_REQ.HUMAN_AGENCY_OVERSIGHT},
            _check_llm_without_human_accountable,
        ),
        _rule(
            "AIA-D2", "LLM agents should not be Accountable at all.",
            RuleScope.MATRIX, Severity.WARNING,
            {_REQ.ACCOUNTABILITY},
            _check_llm_accountable,
        ),
        _rule(
            "AIA-D3", "Every LLM-executed task passes a human Validate gate before completion.",
            RuleScope.WORKFLOW, Severity.ERROR,
            {_REQ.HUMAN_AGENCY_OVERSIGHT, _REQ.TRANSPARENCY},
            _check_unvalidated_llm_execution,
        ),
        _rule(
            "AIA-D4", "Audit logging stays enabled for workflows involving LLM agents.",
            RuleScope.WORKFLOW, Severity.ERROR,
            {_REQ.ACCOUNTABILITY, _REQ.TRANSPARENCY},
            _check_audit_disabled,
        ),
    ),
)

AIA_PROVIDER = RulePack(
    id="aia-provider",
    description="Obligations when the LLM agents were developed in-house.",
    rules=(
        _rule(
            "AIA-P1", "No LLM agent holds R or A on a task without a human Accountable.",
            RuleScope.MATRIX, Severity.ERROR,
            {_REQ.HUMAN_AGENCY_OVERSIGHT},
            _check_llm_without_human_accountable,
        ),
        _rule(
            "AIA-P2", "LLM agents should not be Accountable at all.",
            RuleScope.MATRIX, Severity.WARNING,
            {_REQ.ACCOUNTABILITY},
            _check_llm_accountable,
        ),
        _rule(
            "AIA-P3", "Every LLM-executed task passes a human Validate gate before completion.",
            RuleScope.WORKFLOW, Severity.ERROR,
            {_REQ.HUMAN_AGENCY_OVERSIGHT, _REQ.TECHNICAL_ROBUSTNESS_SAFETY},
            _check_unvalidated_llm_execution,
        ),
        _rule(
            "AIA-P4", "Audit logging stays enabled for workflows involving LLM agents.",
            RuleScope.WORKFLOW, Severity.ERROR,
            {_REQ.ACCOUNTABILITY, _REQ.TRANSPARENCY},
            _check_audit_disabled,
        ),
        _rule(
            "AIA-P5", "In-house LLM agents document their capabilities.",
            RuleScope.MATRIX, Severity.WARNING,
            {_REQ.TECHNICAL_ROBUSTNESS_SAFETY, _REQ.TRANSPARENCY},
            _check_undocumented_capabilities,
        ),
    ),
)

ALL_PACKS = (FRAMEWORK_CORE, AIA_DEPLOYER, AIA_PROVIDER)
_PACKS_BY_ID = {pack.id: pack for pack in ALL_PACKS}

_all_rule_ids = [rule.id for pack in ALL_PACKS for rule in pack.rules]
if len(set(_all_rule_ids)) != len(_all_rule_ids):
    raise RuntimeError("rule ids must be unique across packs")


def get_pack(pack_id: str) -> RulePack:
    try:
        return _PACKS_BY_ID[pack_id]
    except KeyError:
        raise UnknownPackError(pack_id, sorted(_PACKS_BY_ID)) from None


def applicable_packs(actors) -> list:
    """Pack ids warranted by the actor roster. framework-core always
    applies; the deployment packs follow agent provenance, and both may
    apply to a mixed roster."""
    provenances = {a.provenance for a in actors if a.kind is ActorKind.LLM_AGENT}
    packs = [FRAMEWORK_CORE.id]
    if Provenance.IN_HOUSE in provenances:
        packs.append(AIA_PROVIDER.id)
    if Provenance.THIRD_PARTY in provenances:
        packs.append(AIA_DEPLOYER.id)
    return packs


def evaluate_pack(pack: RulePack, ctx: EvalContext, scopes=None) -> list:
    """Run the pack's rules whose scope is in ``scopes``.

    By default matrix rules always run and workflow rules run iff the
    context carries a workflow. Explicitly requesting workflow scope
    without a workflow is an error.
    """
    if scopes is None:
        scopes = {RuleScope.MATRIX}
        if ctx.workflow is not None:
            scopes.add(RuleScope.WORKFLOW)
    findings = []
    for rule in pack.rules:
        if rule.scope not in scopes:
            continue
        if rule.scope is RuleScope.WORKFLOW and ctx.workflow is None:
            raise MissingWorkflowError(rule.id)
        findings.extend(rule.check(rule, ctx))
    return findings


def requirement_coverage(report: ValidationReport) -> dict:
    """Per-requirement verdict derived from a report.

    Violated if any error finding carries the tag; otherwise satisfied
    if any rule in the report's packs carries it; otherwise the
    requirement was not exercised. Unknown pack ids are skipped so
    reports from newer rule sets still render.
    """
    active_tags = set()
    for pack_id in report.packs:
        pack = _PACKS_BY_ID.get(pack_id)
        if pack is None:
            continue
        for rule in pack.rules:
            active_tags.update(rule.requirements)
    violated_tags = set()
    for finding in report.findings:
        if finding.severity is Severity.ERROR:
            violated_tags.update(finding.requirements)
    coverage = {}
    for requirement in TrustworthyRequirement:
        if requirement in violated_tags:
            coverage[requirement] = CoverageVerdict.VIOLATED
        elif requirement in active_tags:
            coverage[requirement] = CoverageVerdict.SATISFIED
        else:
            coverage[requirement] = CoverageVerdict.NOT_EXERCISED
    return coverage
