// Thin fetch wrapper over the matrixgate HTTP API. Every method returns
// the server's JSON untouched; errors surface as ApiRequestError with
// the server's error type and message when one was given.

import type {
    BundleDoc,
    BundleRow,
    EventBatchDoc,
    PackDoc,
    PendingApprovalDoc,
    PipelineOutcomeDoc,
    RunDoc,
    ValidationReportDoc,
    WorkflowDoc,
} from './types.js';

export class ApiRequestError extends Error {
    readonly status: number;
    readonly kind: string;

    constructor(status: number, kind: string, message: string) {
        super(message);
        this.name = 'ApiRequestError';
        this.status = status;
        this.kind = kind;
    }
}

export interface ValidateOptions {
    mode?: string;
    packs?: string[];
    policy?: string;
}

export interface PipelineConfigDoc {
    mode?: string;
    threshold?: number;
    max_iterations?: number;
    policy?: string;
    audit_enabled?: boolean;
}

export interface VerdictInput {
    verdict: 'approve' | 'reject';
    comment?: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

// fetch must be called through a closure: an unbound reference loses
// its window binding in browsers.
const defaultFetch: FetchLike = (input, init) => fetch(input, init);

export function createApiClient(baseUrl: string, fetchImpl: FetchLike = defaultFetch) {
    const root = baseUrl.replace(/\/+$/, '');

    const request = async <T>(
        method: string,
        path: string,
        body?: unknown,
        headers?: Record<string, string>,
    ): Promise<T> => {
        let response: Response;
        try {
            response = await fetchImpl(`${root}${path}`, {
                method,
                headers: {
                    ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
                    ...headers,
                },
                body: body !== undefined ? JSON.stringify(body) : undefined,
            });
        } catch {
            throw new ApiRequestError(0, 'ConnectionError', `cannot reach server at ${root}`);
        }
        const text = await response.text();
        if (!response.ok) {
            let kind = 'HttpError';
            let message = text || `request failed with status ${response.status}`;
            try {
                const doc = JSON.parse(text) as { error?: { type?: string; message?: string } };
                if (doc.error) {
                    kind = doc.error.type ?? kind;
                    message = doc.error.message ?? message;
                }
            } catch {
                // non-JSON error body: keep the raw text
            }
            throw new ApiRequestError(response.status, kind, message);
        }
        return JSON.parse(text) as T;
    };

    return {
        listPacks: async (): Promise<PackDoc[]> => {
            const doc = await request<{ packs: PackDoc[] }>('GET', '/packs');
            return doc.packs;
        },

        listBundles: async (): Promise<BundleRow[]> => {
            const doc = await request<{ bundles: BundleRow[] }>('GET', '/bundles');
            return doc.bundles;
        },

        uploadBundle: async (bundle: BundleDoc): Promise<{ id: string; bundle: BundleDoc }> => {
            return request('POST', '/bundles', bundle);
        },

        getBundle: async (bundleId: string): Promise<{ id: string; bundle: BundleDoc }> => {
            return request('GET', `/bundles/${encodeURIComponent(bundleId)}`);
        },

        validateBundle: async (bundleId: string, options: ValidateOptions = {}): Promise<ValidationReportDoc> => {
            const query = new URLSearchParams();
            if (options.mode !== undefined) {
                query.set('mode', options.mode);
            }
            if (options.packs !== undefined) {
                query.set('packs', options.packs.join(','));
            }
            if (options.policy !== undefined) {
                query.set('policy', options.policy);
            }
            const suffix = query.size > 0 ? `?${query.toString()}` : '';
            return request('POST', `/bundles/${encodeURIComponent(bundleId)}/validate${suffix}`);
        },

        runPipeline: async (bundleId: string, config: PipelineConfigDoc = {}): Promise<PipelineOutcomeDoc> => {
            return request('POST', `/bundles/${encodeURIComponent(bundleId)}/pipeline`, config);
        },

        createRun: async (workflow: WorkflowDoc | PipelineOutcomeDoc): Promise<RunDoc> => {
            return request('POST', '/runs', workflow);
        },

        getRun: async (runId: string): Promise<RunDoc> => {
            return request('GET', `/runs/${encodeURIComponent(runId)}`);
        },

        getEvents: async (runId: string, sinceSeq: number, timeoutSeconds: number): Promise<EventBatchDoc> => {
            const query = new URLSearchParams({
                since_seq: String(sinceSeq),
                timeout: String(timeoutSeconds),
            });
            return request('GET', `/runs/${encodeURIComponent(runId)}/events?${query.toString()}`);
        },

        listApprovals: async (actorId?: string): Promise<PendingApprovalDoc[]> => {
            const suffix = actorId !== undefined ? `?actor=${encodeURIComponent(actorId)}` : '';
            const doc = await request<{ approvals: PendingApprovalDoc[] }>('GET', `/approvals${suffix}`);
            return doc.approvals;
        },

        postVerdict: async (
            runId: string,
            taskId: string,
            actorId: string,
            input: VerdictInput,
        ): Promise<RunDoc> => {
            const path = `/approvals/${encodeURIComponent(runId)}/${encodeURIComponent(taskId)}`;
            return request('POST', path, input, { 'X-Actor-Id': actorId });
        },
    };
}

export type ApiClient = ReturnType<typeof createApiClient>;
