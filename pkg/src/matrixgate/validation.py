"""validate_matrix: resolve a bundle's matrix and evaluate rule packs."""

from __future__ import annotations

from typing import Optional

from .constraints import ValidationReport
from .model import MatrixBundle, ResolutionPolicy, ValidationMode
from .packs import EvalContext, FRAMEWORK_CORE, RuleScope, evaluate_pack, get_pack
from .workflow import WorkflowSpec


def effective_packs(requested) -> list:
    """framework-core always runs, listed first; the rest keep request
    order with duplicates dropped. Unknown ids raise UnknownPackError."""
    packs = [FRAMEWORK_CORE.id]
    for pack_id in requested:
        get_pack(pack_id)
        if pack_id not in packs:
            packs.append(pack_id)
    return packs


def sort_findings(findings, task_ids) -> tuple:
    """Canonical report order: task declaration order (findings without a
    task last), then rule id, then actor id."""
    index = {task_id: i for i, task_id in enumerate(task_ids)}

    def key(finding):
        return (
            index.get(finding.task_id, len(index)),
            finding.rule_id,
            finding.actor_id or "",
            finding.message,
        )

    return tuple(sorted(findings, key=key))


def validate_matrix(
    bundle: MatrixBundle,
    mode: ValidationMode = ValidationMode.COMPAT,
    packs=(),
    *,
    policy: Optional[ResolutionPolicy] = None,
    workflow: Optional[WorkflowSpec] = None,
) -> ValidationReport:
    """Evaluate the bundle against the named packs plus framework-core.

    Matrix-scoped rules always run; workflow-scoped rules run only when
    a workflow is supplied. Resolution failures propagate as
    UnresolvedCellError rather than findings: an unresolvable matrix is
    an authoring defect, not a constraint violation.
    """
    resolved = bundle.resolved_matrix(policy)
    pack_ids = effective_packs(packs)
    ctx = EvalContext(bundle=bundle, matrix=resolved, mode=mode, workflow=workflow)
    scopes = {RuleScope.MATRIX}
    if workflow is not None:
        scopes.add(RuleScope.WORKFLOW)
    findings = []
    for pack_id in pack_ids:
        findings.extend(evaluate_pack(get_pack(pack_id), ctx, scopes=scopes))
    return ValidationReport(
        mode=mode,
        packs=tuple(pack_ids),
        findings=sort_findings(findings, bundle.matrix.task_ids),
    )
