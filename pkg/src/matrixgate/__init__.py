"""Responsibility matrices for mixed human/LLM-agent teams.

Parse a bundle, validate its matrix against the core constraints and
any applicable rule packs, derive an executable workflow, and drive
runs where humans hold the approval gates and every event lands in a
hash-chained audit log.
"""

from .agents import AgentAdapter, ArtifactDraft, HttpAgent, MockAgent
from .audit import (
    AuditEvent,
    AuditLog,
    EventType,
    GENESIS_HASH,
    LogicalClock,
    canonical_json,
    read_audit_file,
    verify_audit_chain,
    verify_audit_file,
    write_audit_file,
)
from .bundle_io import (
    ReportFormat,
    parse_bundle,
    parse_json,
    render_report,
    report_from_doc,
    report_to_doc,
    serialize_bundle,
)
from .constraints import Finding, ValidationReport, check_c1, check_c2, check_c3
from .engine import RunEngine, RunState, TaskStatus, apply_event, replay_events
from .errors import (
    AdapterFailureError,
    AuditIntegrityError,
    BundleParseError,
    CyclicDependencyError,
    IllegalTransitionError,
    InvalidMatrixError,
    MatrixGateError,
    MaxIterationsExceededError,
    MissingConsultationError,
    MissingWorkflowError,
    UnauthorizedVerdictError,
    UnknownPackError,
    UnresolvedCellError,
)
from .example_bundle import EXAMPLE_FILENAME, example_bundle
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
    actors_with_role,
    resolve_cell,
    resolve_matrix,
    topological_order,
)
from .packs import (
    ALL_PACKS,
    COVERAGE_DISCLAIMER,
    CoverageVerdict,
    EvalContext,
    Rule,
    RulePack,
    RuleScope,
    applicable_packs,
    evaluate_pack,
    get_pack,
    requirement_coverage,
)
from .pipeline import (
    Automation,
    AutomationDecision,
    PipelineConfig,
    PipelineOutcome,
    StepRecord,
    StepStatus,
    agent_task_proficiency,
    cross_check_assignments,
    identify_automation_candidates,
    outcome_to_doc,
    proficiency_check,
    run_pipeline,
    synthesize_workflow,
)
from .validation import effective_packs, validate_matrix
from .workflow import (
    Gate,
    GateKind,
    TaskChain,
    WorkflowSpec,
    parse_workflow,
    serialize_workflow,
    workflow_to_doc,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_PACKS",
    "Actor",
    "ActorKind",
    "AdapterFailureError",
    "AgentAdapter",
    "ArtifactDraft",
    "AuditEvent",
    "AuditIntegrityError",
    "AuditLog",
    "Automation",
    "AutomationDecision",
    "BundleConfig",
    "BundleParseError",
    "COVERAGE_DISCLAIMER",
    "CoverageVerdict",
    "CyclicDependencyError",
    "EXAMPLE_FILENAME",
    "EvalContext",
    "EventType",
    "Finding",
    "GENESIS_HASH",
    "Gate",
    "GateKind",
    "HttpAgent",
    "IllegalTransitionError",
    "InvalidMatrixError",
    "LogicalClock",
    "MatrixBundle",
    "MatrixGateError",
    "MaxIterationsExceededError",
    "MissingConsultationError",
    "MissingWorkflowError",
    "MockAgent",
    "PipelineConfig",
    "PipelineOutcome",
    "Provenance",
    "Quorum",
    "RaciMatrix",
    "ReportFormat",
    "ResolutionPolicy",
    "Role",
    "Rule",
    "RulePack",
    "RuleScope",
    "RunEngine",
    "RunState",
    "Severity",
    "StepRecord",
    "StepStatus",
    "Task",
    "TaskChain",
    "TaskStatus",
    "TrustworthyRequirement",
    "UnauthorizedVerdictError",
    "UnknownPackError",
    "UnresolvedCellError",
    "ValidationMode",
    "ValidationReport",
    "WorkflowSpec",
    "actors_with_role",
    "agent_task_proficiency",
    "applicable_packs",
    "apply_event",
    "canonical_json",
    "check_c1",
    "check_c2",
    "check_c3",
    "cross_check_assignments",
    "effective_packs",
    "evaluate_pack",
    "example_bundle",
    "get_pack",
    "identify_automation_candidates",
    "outcome_to_doc",
    "parse_bundle",
    "parse_workflow",
    "parse_json",
    "proficiency_check",
    "read_audit_file",
    "render_report",
    "replay_events",
    "report_from_doc",
    "report_to_doc",
    "requirement_coverage",
    "resolve_cell",
    "resolve_matrix",
    "run_pipeline",
    "serialize_bundle",
    "serialize_workflow",
    "synthesize_workflow",
    "topological_order",
    "validate_matrix",
    "verify_audit_chain",
    "verify_audit_file",
    "workflow_to_doc",
    "write_audit_file",
]
