// Wire types mirroring the matrixgate HTTP API. The UI treats all of
// these as opaque server data: it never derives findings or verdicts
// from them locally.

export type ActorKind = 'human' | 'llm_agent';

// The only values a matrix cell may hold in document form. 'I/C' is the
// single permitted dual marking; '' stands for an empty cell.
export type CellValue = '' | 'R' | 'A' | 'C' | 'I' | 'I/C';

export interface ActorDoc {
    id: string;
    name: string;
    kind: ActorKind;
    provenance?: string;
    capabilities?: Record<string, number>;
}

export interface TaskDoc {
    id: string;
    name: string;
    stakeholder_facing?: boolean;
    required_capabilities?: string[];
    depends_on?: string[];
    output_artifact_type?: string;
}

export interface BundleConfigDoc {
    policy?: string;
    quorum?: string;
    re_consult_on_reject?: boolean;
}

export interface BundleDoc {
    phase: string;
    actors: ActorDoc[];
    tasks: TaskDoc[];
    matrix: Record<string, Record<string, string>>;
    config?: BundleConfigDoc;
}

export interface BundleRow {
    id: string;
    phase: string;
    actors: number;
    tasks: number;
}

export interface FindingDoc {
    rule_id: string;
    severity: 'error' | 'warning';
    task_id?: string;
    actor_id?: string;
    message: string;
    requirements: string[];
}

export interface ValidationReportDoc {
    mode: string;
    packs: string[];
    status: 'valid' | 'invalid';
    findings: FindingDoc[];
}

export interface PackRuleDoc {
    id: string;
    severity: string;
    scope: string;
    description: string;
    requirements: string[];
}

export interface PackDoc {
    id: string;
    description: string;
    rules: PackRuleDoc[];
}

export interface GateDoc {
    kind: string;
    actor: string;
}

export interface ChainDoc {
    task: string;
    name: string;
    artifact_type: string;
    gates: GateDoc[];
}

export interface WorkflowDoc {
    phase: string;
    audit_enabled?: boolean;
    quorum?: string;
    re_consult_on_reject?: boolean;
    actors: ActorDoc[];
    chains: ChainDoc[];
    edges?: [string, string][];
}

export interface DecisionDoc {
    task_id: string;
    decision: string;
    rationale: string;
    candidate_agent?: string;
}

export interface StepDoc {
    step: number;
    name: string;
    status: string;
    summary: string;
    findings?: FindingDoc[];
}

export interface PipelineOutcomeDoc {
    steps: StepDoc[];
    decisions: DecisionDoc[];
    report: ValidationReportDoc;
    iterations_used: Record<string, number>;
    workflow?: WorkflowDoc;
}

export interface ArtifactVersionDoc {
    version: number;
    digest: string;
    content: string;
    metadata: Record<string, unknown>;
}

export interface ConsultationEntryDoc {
    actor_id: string;
    content: string;
    mandatory: boolean;
}

export interface TaskRunDoc {
    status: string;
    revision: number;
    artifacts: ArtifactVersionDoc[];
    consultation: ConsultationEntryDoc[];
    approvals: string[];
    notified: string[];
    failure?: string;
}

// Server-side chain verdict; the UI displays it and runs no crypto.
export interface AuditStatusDoc {
    enabled: boolean;
    ok: boolean;
    first_corrupt_seq: number | null;
}

export interface RunDoc {
    run_id: string;
    phase: string;
    started: boolean;
    finished: boolean;
    tasks: Record<string, TaskRunDoc>;
    last_seq: number;
    audit: AuditStatusDoc;
}

export interface EventDoc {
    seq: number;
    timestamp: string;
    run_id: string;
    type: string;
    payload: Record<string, unknown>;
    task_id?: string;
    actor_id?: string;
    prev_hash: string;
    hash: string;
}

export interface EventBatchDoc {
    run_id: string;
    events: EventDoc[];
    last_seq: number;
}

export interface PendingApprovalDoc {
    run_id: string;
    task_id: string;
    task_name: string;
    artifact_version: ArtifactVersionDoc;
    consultation: ConsultationEntryDoc[];
    responsible_actor: string;
    accountable_actors: string[];
    requested_at: string | null;
}

// Snapshot of what a timeline view currently holds, for wiring and tests.
export interface TimelineModelState {
    runId: string | null;
    lastSeq: number;
    eventCount: number;
    error: string | null;
}

// Role-play identity and connection state; everything else is fetched
// from the server on demand.
export interface UiSessionState {
    serverBaseUrl: string;
    actorId: string | null;
    bundleId: string | null;
    runId: string | null;
}
