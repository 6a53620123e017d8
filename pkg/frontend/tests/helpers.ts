// Shared fixtures: a tiny two-task bundle, an event factory, and a stub
// API client whose unset methods fail loudly.

import type { ApiClient } from '../src/client.js';
import type {
    BundleDoc,
    EventDoc,
    FindingDoc,
    PendingApprovalDoc,
    RunDoc,
    ValidationReportDoc,
} from '../src/types.js';

export function fixtureBundle(): BundleDoc {
    return {
        phase: 'Fixture phase',
        actors: [
            { id: 'owner', name: 'Owner', kind: 'human' },
            {
                id: 'bot',
                name: 'Bot',
                kind: 'llm_agent',
                provenance: 'third_party',
                capabilities: { writing: 0.9 },
            },
        ],
        tasks: [
            { id: 'draft', name: 'Draft', required_capabilities: ['writing'] },
            { id: 'review', name: 'Review', depends_on: ['draft'] },
        ],
        matrix: {
            draft: { owner: 'A', bot: 'R' },
            review: { owner: 'R', bot: 'I' },
        },
    };
}

export function makeReport(
    findings: FindingDoc[] = [],
    mode = 'paper-compat',
): ValidationReportDoc {
    return {
        mode,
        packs: ['framework-core'],
        status: findings.some((f) => f.severity === 'error') ? 'invalid' : 'valid',
        findings,
    };
}

export function makeFinding(overrides: Partial<FindingDoc> = {}): FindingDoc {
    return {
        rule_id: 'C3',
        severity: 'error',
        task_id: 'draft',
        message: 'an agent is responsible without a human accountable',
        requirements: ['human_agency_oversight'],
        ...overrides,
    };
}

export function makeEvent(seq: number, overrides: Partial<EventDoc> = {}): EventDoc {
    return {
        seq,
        timestamp: `2026-01-01T00:00:${String(seq).padStart(2, '0')}Z`,
        run_id: 'run-fixture',
        type: 'TaskReady',
        payload: {},
        prev_hash: 'prev',
        hash: 'hash',
        ...overrides,
    };
}

export function makeRunDoc(overrides: Partial<RunDoc> = {}): RunDoc {
    return {
        run_id: 'run-fixture',
        phase: 'Fixture phase',
        started: true,
        finished: false,
        tasks: {},
        last_seq: 0,
        audit: { enabled: true, ok: true, first_corrupt_seq: null },
        ...overrides,
    };
}

export function makeApproval(overrides: Partial<PendingApprovalDoc> = {}): PendingApprovalDoc {
    return {
        run_id: 'run-fixture',
        task_id: 'draft',
        task_name: 'Draft',
        artifact_version: {
            version: 0,
            digest: 'abcdef0123456789',
            content: 'drafted text for review',
            metadata: {},
        },
        consultation: [{ actor_id: 'bot', content: 'background notes', mandatory: true }],
        responsible_actor: 'bot',
        accountable_actors: ['owner'],
        requested_at: '2026-01-01T00:00:00Z',
        ...overrides,
    };
}

function unimplemented(name: string): () => Promise<never> {
    return async () => {
        throw new Error(`stub method not implemented: ${name}`);
    };
}

export function stubClient(overrides: Partial<ApiClient> = {}): ApiClient {
    const base: ApiClient = {
        listPacks: unimplemented('listPacks'),
        listBundles: unimplemented('listBundles'),
        uploadBundle: unimplemented('uploadBundle'),
        getBundle: unimplemented('getBundle'),
        validateBundle: unimplemented('validateBundle'),
        runPipeline: unimplemented('runPipeline'),
        createRun: unimplemented('createRun'),
        getRun: unimplemented('getRun'),
        getEvents: unimplemented('getEvents'),
        listApprovals: unimplemented('listApprovals'),
        postVerdict: unimplemented('postVerdict'),
    };
    return { ...base, ...overrides };
}
