"""Staged pipeline from an authored bundle to a validated workflow.

Nine steps: admit tasks, take the actor roster, select rule packs,
propose automation candidates, screen proficiency, cross-check the
authored assignments, validate the matrix, synthesize the workflow,
validate the workflow. Matrix-level failures halt for human
reassignment; workflow-level failures trigger bounded mechanical
strengthening (enable audit, add human validation gates).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

from .bundle_io import finding_to_doc, report_to_doc
from .constraints import Finding, ValidationReport
from .errors import InvalidMatrixError, MaxIterationsExceededError
from .model import (
    Actor,
    MatrixBundle,
    ResolutionPolicy,
    Role,
    Severity,
    Task,
    TrustworthyRequirement,
    ValidationMode,
    actors_with_role,
)
from .packs import EvalContext, RuleScope, applicable_packs, evaluate_pack, get_pack
from .validation import sort_findings, validate_matrix
from .workflow import Gate, GateKind, TaskChain, WorkflowSpec, workflow_to_doc

PROFICIENCY_RULE = "STEP5-PROFICIENCY"
MISMATCH_RULE = "STEP6-MISMATCH"

# Mechanical risk flags, not legal determinations: both warn that the
# analyzed capabilities and the authored assignments disagree.
_SCREENING_TAGS = frozenset({TrustworthyRequirement.TECHNICAL_ROBUSTNESS_SAFETY})


class Automation(str, Enum):
    AUTOMATABLE = "Automatable"
    ASSIST_ONLY = "AssistOnly"
    HUMAN_ONLY = "HumanOnly"


@dataclass(frozen=True)
class AutomationDecision:
    """Per-task verdict on whether an agent may do the work."""

    task_id: str
    decision: Automation
    rationale: str
    candidate_agent: Optional[str] = None

    def __post_init__(self) -> None:
        if self.decision is Automation.AUTOMATABLE and self.candidate_agent is None:
            raise ValueError(f"task {self.task_id}: Automatable requires a candidate agent")
        if self.decision is Automation.HUMAN_ONLY and self.candidate_agent is not None:
            raise ValueError(f"task {self.task_id}: HumanOnly forbids a candidate agent")


class StepStatus(str, Enum):
    OK = "ok"
    WARNINGS = "warnings"
    ERRORS = "errors"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class StepRecord:
    step: int
    name: str
    status: StepStatus
    summary: str
    findings: Tuple[Finding, ...] = ()


@dataclass(frozen=True)
class PipelineOutcome:
    steps: Tuple[StepRecord, ...]
    decisions: Tuple[AutomationDecision, ...]
    report: ValidationReport
    workflow: Optional[WorkflowSpec]
    iterations_used: Mapping[str, int]

    def __post_init__(self) -> None:
        # a workflow ships only with a clean bill of health
        if (self.workflow is not None) != self.report.is_valid:
            raise ValueError("workflow must be present exactly when the report is valid")


@dataclass(frozen=True)
class PipelineConfig:
    mode: ValidationMode = ValidationMode.COMPAT
    threshold: float = 0.7
    max_iterations: int = 3
    policy: Optional[ResolutionPolicy] = None
    audit_enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")


def agent_task_proficiency(agent: Actor, task: Task) -> float:
    """Weakest-link score: the agent is only as proficient at the task
    as its least-developed required capability."""
    if not task.required_capabilities:
        return 1.0
    return min(agent.capabilities.get(cap, 0.0) for cap in task.required_capabilities)


def _covers(agent: Actor, task: Task) -> bool:
    return task.required_capabilities <= frozenset(agent.capabilities)


def identify_automation_candidates(
    tasks: Sequence[Task], agents: Sequence[Actor]
) -> Tuple[AutomationDecision, ...]:
    """One decision per task, in declaration order. Candidate agent is
    the highest-proficiency covering agent; ties go to the earliest
    declared."""
    for agent in agents:
        if agent.is_human:
            raise ValueError(f"actor {agent.id!r} is human; expected llm agents only")
    decisions = []
    for task in tasks:
        if not task.artefact_based:
            # unreachable for parsed bundles; kept for directly built tasks
            decisions.append(AutomationDecision(
                task_id=task.id,
                decision=Automation.HUMAN_ONLY,
                rationale="does not produce a verifiable artefact",
            ))
            continue
        if task.stakeholder_facing:
            decisions.append(AutomationDecision(
                task_id=task.id,
                decision=Automation.ASSIST_ONLY,
                rationale="stakeholder-facing; the output must originate with humans",
            ))
            continue
        best: Optional[Actor] = None
        best_score = -1.0
        for agent in agents:
            if not _covers(agent, task):
                continue
            score = agent_task_proficiency(agent, task)
            if score > best_score:
                best, best_score = agent, score
        if best is None:
            decisions.append(AutomationDecision(
                task_id=task.id,
                decision=Automation.ASSIST_ONLY,
                rationale="no capable agent",
            ))
        else:
            caps = ", ".join(sorted(task.required_capabilities)) or "none"
            decisions.append(AutomationDecision(
                task_id=task.id,
                decision=Automation.AUTOMATABLE,
                rationale=f"agent {best.id} covers required capabilities: {caps}",
                candidate_agent=best.id,
            ))
    return tuple(decisions)


def proficiency_check(
    decision: AutomationDecision,
    agents: Sequence[Actor],
    tasks: Sequence[Task],
    threshold: float,
) -> Tuple[AutomationDecision, Optional[Finding]]:
    """Screen one Automatable decision against the threshold. Below it,
    the decision is demoted to AssistOnly and a Warning explains why."""
    if decision.decision is not Automation.AUTOMATABLE:
        raise ValueError(f"task {decision.task_id}: proficiency_check takes Automatable decisions only")
    agent = next(a for a in agents if a.id == decision.candidate_agent)
    task = next(t for t in tasks if t.id == decision.task_id)
    score = agent_task_proficiency(agent, task)
    if score >= threshold:
        return decision, None
    finding = Finding(
        rule_id=PROFICIENCY_RULE,
        severity=Severity.WARNING,
        task_id=task.id,
        actor_id=agent.id,
        message=(
            f"agent {agent.id} covers task {task.id} but proficiency "
            f"{score:g} is below threshold {threshold:g}; demoted to AssistOnly"
        ),
        requirements=_SCREENING_TAGS,
    )
    demoted = AutomationDecision(
        task_id=task.id,
        decision=Automation.ASSIST_ONLY,
        rationale=f"proficiency {score:g} below threshold {threshold:g}",
    )
    return demoted, finding


def cross_check_assignments(
    bundle: MatrixBundle, decisions: Sequence[AutomationDecision]
) -> Tuple[Finding, ...]:
    """The matrix is authored by humans; the capability analysis only
    cross-checks it. A candidate agent without R on its task is worth a
    warning, never an auto-reassignment."""
    findings = []
    for decision in decisions:
        if decision.decision is not Automation.AUTOMATABLE:
            continue
        roles = bundle.matrix.role_set(decision.task_id, decision.candidate_agent)
        if Role.RESPONSIBLE not in roles:
            findings.append(Finding(
                rule_id=MISMATCH_RULE,
                severity=Severity.WARNING,
                task_id=decision.task_id,
                actor_id=decision.candidate_agent,
                message=(
                    f"capability analysis picks {decision.candidate_agent} for "
                    f"{decision.task_id} but the matrix does not assign it R"
                ),
                requirements=_SCREENING_TAGS,
            ))
    return tuple(findings)


def _execute_actor(
    task: Task,
    responsible: Sequence[str],
    decisions_by_task: Mapping[str, AutomationDecision],
) -> str:
    decision = decisions_by_task.get(task.id)
    if (
        decision is not None
        and decision.decision is Automation.AUTOMATABLE
        and decision.candidate_agent in responsible
    ):
        return decision.candidate_agent
    return responsible[0]


def synthesize_workflow(
    bundle: MatrixBundle,
    decisions: Sequence[AutomationDecision] = (),
    *,
    mode: ValidationMode = ValidationMode.COMPAT,
    policy: Optional[ResolutionPolicy] = None,
    audit_enabled: bool = True,
) -> WorkflowSpec:
    """Turn each matrix row into a gate chain: Consulted actors feed in,
    one Responsible actor executes, Accountable actors validate,
    Informed actors are notified. Tasks with no Accountable actor (the
    human-R exception) auto-validate. Edges follow task dependencies."""
    report = validate_matrix(bundle, mode=mode, policy=policy)
    if not report.is_valid:
        broken = sorted({f.rule_id for f in report.errors()})
        raise InvalidMatrixError(
            f"cannot synthesize a workflow from an invalid matrix: {', '.join(broken)}"
        )
    resolved = bundle.resolved_matrix(policy=policy)
    decisions_by_task = {d.task_id: d for d in decisions}
    chains = []
    for task in bundle.tasks:
        consulted = actors_with_role(resolved, task.id, Role.CONSULTED)
        responsible = actors_with_role(resolved, task.id, Role.RESPONSIBLE)
        accountable = actors_with_role(resolved, task.id, Role.ACCOUNTABLE)
        informed = actors_with_role(resolved, task.id, Role.INFORMED)
        gates = [Gate(GateKind.CONSULT, a) for a in consulted]
        gates.append(Gate(GateKind.EXECUTE, _execute_actor(task, responsible, decisions_by_task)))
        gates.extend(Gate(GateKind.VALIDATE, a) for a in accountable)
        gates.extend(Gate(GateKind.NOTIFY, a) for a in informed)
        chains.append(TaskChain(
            task_id=task.id,
            task_name=task.name,
            output_artifact_type=task.output_artifact_type,
            gates=tuple(gates),
        ))
    edges = tuple((dep, task.id) for task in bundle.tasks for dep in task.depends_on)
    return WorkflowSpec(
        phase_name=bundle.phase_name,
        actors=bundle.actors,
        chains=tuple(chains),
        edges=edges,
        audit_enabled=audit_enabled,
        quorum=bundle.config.quorum,
        re_consult_on_reject=bundle.config.re_consult_on_reject,
    )


def _strengthen(spec: WorkflowSpec, findings: Sequence[Finding]) -> WorkflowSpec:
    """Mechanical gate-strengthening: re-enable audit logging, and put a
    human validation gate behind any agent-executed task that lacks one.
    Anything beyond that needs a human to reassign the matrix."""
    audit_enabled = spec.audit_enabled
    need_validation = set()
    for finding in findings:
        if "audit" in finding.message or finding.rule_id in ("AIA-D4", "AIA-P4"):
            audit_enabled = True
        elif finding.task_id is not None:
            need_validation.add(finding.task_id)
    first_human = next((a.id for a in spec.actors if a.is_human), None)
    chains = []
    for chain in spec.chains:
        if chain.task_id in need_validation and first_human is not None:
            gates = [g for g in chain.gates if g.kind is not GateKind.NOTIFY]
            if not any(
                g.kind is GateKind.VALIDATE and spec.actor(g.actor_id).is_human
                for g in gates
            ):
                gates.append(Gate(GateKind.VALIDATE, first_human))
            gates.extend(g for g in chain.gates if g.kind is GateKind.NOTIFY)
            chains.append(replace(chain, gates=tuple(gates)))
        else:
            chains.append(chain)
    return replace(spec, chains=tuple(chains), audit_enabled=audit_enabled)


def _workflow_findings(
    bundle: MatrixBundle,
    pack_ids: Sequence[str],
    mode: ValidationMode,
    policy: Optional[ResolutionPolicy],
    workflow: WorkflowSpec,
) -> list:
    ctx = EvalContext(
        bundle=bundle,
        matrix=bundle.resolved_matrix(policy=policy),
        mode=mode,
        workflow=workflow,
    )
    findings = []
    for pack_id in pack_ids:
        findings.extend(evaluate_pack(get_pack(pack_id), ctx, scopes=frozenset({RuleScope.WORKFLOW})))
    return findings


def run_pipeline(
    bundle: MatrixBundle,
    config: Optional[PipelineConfig] = None,
    prior: Optional[PipelineOutcome] = None,
) -> PipelineOutcome:
    """Run all nine steps. Deterministic for a fixed bundle and config.

    Matrix errors at step 7 halt with the findings recorded; pass the
    halted outcome back as `prior` when re-running an amended bundle so
    the step-7 loop counter carries forward. Workflow errors at step 9
    are strengthened away mechanically, at most max_iterations times.
    """
    config = config or PipelineConfig()
    step7_loop = 0
    if prior is not None:
        step7_loop = prior.iterations_used["step7_loop"] + 1
        if step7_loop > config.max_iterations:
            raise MaxIterationsExceededError(
                {"step7_loop": step7_loop, "step9_loop": 0}, outcome=prior
            )
    steps = []
    task_order = [task.id for task in bundle.tasks]

    steps.append(StepRecord(
        1, "task admission", StepStatus.OK,
        f"{len(bundle.tasks)} tasks admitted; every one yields a verifiable artefact",
    ))
    humans, agents = bundle.humans, bundle.llm_agents
    steps.append(StepRecord(
        2, "actor roster", StepStatus.OK,
        f"{len(humans)} human(s), {len(agents)} llm agent(s)",
    ))
    pack_ids = applicable_packs(bundle.actors)
    steps.append(StepRecord(
        3, "rule pack selection", StepStatus.OK, ", ".join(pack_ids),
    ))

    decisions = identify_automation_candidates(bundle.tasks, agents)
    automatable = sum(1 for d in decisions if d.decision is Automation.AUTOMATABLE)
    steps.append(StepRecord(
        4, "automation candidates", StepStatus.OK,
        f"{automatable} automatable of {len(decisions)} task(s)",
    ))

    screened, screen_findings = [], []
    for decision in decisions:
        if decision.decision is Automation.AUTOMATABLE:
            decision, finding = proficiency_check(decision, bundle.actors, bundle.tasks, config.threshold)
            if finding is not None:
                screen_findings.append(finding)
        screened.append(decision)
    decisions = tuple(screened)
    steps.append(StepRecord(
        5, "proficiency screening",
        StepStatus.WARNINGS if screen_findings else StepStatus.OK,
        f"threshold {config.threshold:g}; {len(screen_findings)} demotion(s)",
        tuple(screen_findings),
    ))

    mismatch_findings = cross_check_assignments(bundle, decisions)
    steps.append(StepRecord(
        6, "assignment cross-check",
        StepStatus.WARNINGS if mismatch_findings else StepStatus.OK,
        f"{len(mismatch_findings)} mismatch(es) between matrix and capability analysis",
        mismatch_findings,
    ))

    advisory = list(screen_findings) + list(mismatch_findings)
    matrix_report = validate_matrix(bundle, mode=config.mode, packs=pack_ids, policy=config.policy)
    iterations = {"step7_loop": step7_loop, "step9_loop": 0}
    if not matrix_report.is_valid:
        steps.append(StepRecord(
            7, "matrix validation", StepStatus.ERRORS,
            f"{len(matrix_report.errors())} error finding(s); reassignment required",
            tuple(matrix_report.findings),
        ))
        steps.append(StepRecord(8, "workflow synthesis", StepStatus.SKIPPED, "matrix validation failed"))
        steps.append(StepRecord(9, "workflow validation", StepStatus.SKIPPED, "matrix validation failed"))
        report = ValidationReport(
            mode=config.mode,
            packs=matrix_report.packs,
            findings=tuple(sort_findings(advisory + list(matrix_report.findings), task_order)),
        )
        return PipelineOutcome(tuple(steps), decisions, report, None, iterations)
    steps.append(StepRecord(
        7, "matrix validation",
        StepStatus.WARNINGS if matrix_report.findings else StepStatus.OK,
        f"{len(matrix_report.findings)} finding(s), none blocking",
        tuple(matrix_report.findings),
    ))

    workflow = synthesize_workflow(
        bundle, decisions, mode=config.mode, policy=config.policy,
        audit_enabled=config.audit_enabled,
    )
    steps.append(StepRecord(
        8, "workflow synthesis", StepStatus.OK,
        f"{len(workflow.chains)} task chain(s), {len(workflow.edges)} edge(s)",
    ))

    while True:
        workflow_findings = _workflow_findings(bundle, pack_ids, config.mode, config.policy, workflow)
        errors = [f for f in workflow_findings if f.severity is Severity.ERROR]
        if not errors:
            steps.append(StepRecord(
                9, "workflow validation",
                StepStatus.WARNINGS if workflow_findings else StepStatus.OK,
                f"{len(workflow_findings)} finding(s), none blocking",
                tuple(workflow_findings),
            ))
            break
        steps.append(StepRecord(
            9, "workflow validation", StepStatus.ERRORS,
            f"{len(errors)} error finding(s)",
            tuple(workflow_findings),
        ))
        if iterations["step9_loop"] >= config.max_iterations:
            report = ValidationReport(
                mode=config.mode,
                packs=matrix_report.packs,
                findings=tuple(sort_findings(
                    advisory + list(matrix_report.findings) + workflow_findings, task_order,
                )),
            )
            outcome = PipelineOutcome(tuple(steps), decisions, report, None, iterations)
            raise MaxIterationsExceededError(dict(iterations), outcome=outcome)
        workflow = _strengthen(workflow, errors)
        iterations["step9_loop"] += 1
        steps.append(StepRecord(
            8, "workflow synthesis", StepStatus.OK,
            f"gates strengthened (iteration {iterations['step9_loop']})",
        ))

    report = ValidationReport(
        mode=config.mode,
        packs=matrix_report.packs,
        findings=tuple(sort_findings(
            advisory + list(matrix_report.findings) + workflow_findings, task_order,
        )),
    )
    return PipelineOutcome(tuple(steps), decisions, report, workflow, iterations)


def decision_to_doc(decision: AutomationDecision) -> dict:
    doc = {
        "task_id": decision.task_id,
        "decision": decision.decision.value,
        "rationale": decision.rationale,
    }
    if decision.candidate_agent is not None:
        doc["candidate_agent"] = decision.candidate_agent
    return doc


def step_to_doc(record: StepRecord) -> dict:
    doc = {
        "step": record.step,
        "name": record.name,
        "status": record.status.value,
        "summary": record.summary,
    }
    if record.findings:
        doc["findings"] = [finding_to_doc(f) for f in record.findings]
    return doc


def outcome_to_doc(outcome: PipelineOutcome) -> dict:
    doc = {
        "steps": [step_to_doc(s) for s in outcome.steps],
        "decisions": [decision_to_doc(d) for d in outcome.decisions],
        "report": report_to_doc(outcome.report),
        "iterations_used": dict(outcome.iterations_used),
    }
    if outcome.workflow is not None:
        doc["workflow"] = workflow_to_doc(outcome.workflow)
    return doc
