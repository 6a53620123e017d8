// Run timeline: one long-poll consumer per open run view, rendering
// audit events in seq order. Chain integrity is whatever the server
// says it is; no hashing happens in the browser.

import { type ApiClient } from './client.js';
import type { AuditStatusDoc, EventDoc, TimelineModelState } from './types.js';

export interface TimelineModel {
    events: EventDoc[];
    lastSeq: number;
}

export interface MergeResult {
    model: TimelineModel;
    added: EventDoc[];
    gap: boolean;
    refetchFrom: number;
}

export function emptyTimeline(): TimelineModel {
    return { events: [], lastSeq: -1 };
}

// Delivery is at-least-once: batches may overlap or, after a dropped
// response, leave a hole. Dedupe by seq; report the last contiguous
// seq so the caller can refetch from there when a hole exists.
export function mergeEvents(model: TimelineModel, incoming: EventDoc[]): MergeResult {
    const bySeq = new Map<number, EventDoc>();
    for (const event of model.events) {
        bySeq.set(event.seq, event);
    }
    const added: EventDoc[] = [];
    for (const event of incoming) {
        if (!bySeq.has(event.seq)) {
            bySeq.set(event.seq, event);
            added.push(event);
        }
    }
    const events = [...bySeq.values()].sort((a, b) => a.seq - b.seq);
    let lastContiguous = -1;
    for (const event of events) {
        if (event.seq !== lastContiguous + 1) {
            break;
        }
        lastContiguous = event.seq;
    }
    const lastSeq = events.length > 0 ? events[events.length - 1]!.seq : -1;
    return {
        model: { events, lastSeq },
        added,
        gap: lastContiguous !== lastSeq,
        refetchFrom: lastContiguous,
    };
}

export interface RunTimelineOptions {
    client: ApiClient;
    pollSeconds?: number;
    backoffMs?: number;
    onEvents?: (added: EventDoc[]) => void;
}

export function createRunTimeline(root: HTMLElement, options: RunTimelineOptions) {
    const client = options.client;
    const pollSeconds = options.pollSeconds ?? 25;
    const backoffMs = options.backoffMs ?? 1000;

    let runId: string | null = null;
    let model = emptyTimeline();
    let auditStatus: AuditStatusDoc | null = null;
    let error: string | null = null;
    let generation = 0;

    const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

    const render = (): void => {
        root.textContent = '';
        const heading = document.createElement('h2');
        heading.textContent = runId === null ? 'Timeline' : `Timeline: ${runId}`;
        root.appendChild(heading);

        const status = document.createElement('div');
        status.className = 'chain-status';
        if (error !== null) {
            status.classList.add('error');
            status.textContent = `server unreachable: ${error}`;
        } else if (auditStatus === null) {
            status.textContent = runId === null ? 'no run selected' : 'waiting for events';
        } else if (!auditStatus.enabled) {
            status.textContent = 'audit disabled for this run';
        } else if (auditStatus.ok) {
            status.classList.add('ok');
            status.textContent = 'chain ok';
        } else {
            status.classList.add('invalid');
            status.textContent = `chain invalid at seq ${auditStatus.first_corrupt_seq}`;
        }
        root.appendChild(status);

        const list = document.createElement('ol');
        list.className = 'events';
        for (const event of model.events) {
            const item = document.createElement('li');
            item.className = `event event-${event.type}`;
            item.dataset['seq'] = String(event.seq);
            const parts = [`[${event.seq}]`, event.type];
            if (event.task_id !== undefined) {
                parts.push(event.task_id);
            }
            if (event.actor_id !== undefined) {
                parts.push(`by ${event.actor_id}`);
            }
            item.textContent = parts.join(' ');
            list.appendChild(item);
        }
        root.appendChild(list);
    };

    // One poll round: fetch what follows the newest held event, refill
    // any hole from the last contiguous seq, then refresh the server's
    // chain verdict. Errors park the view in an explicit error state;
    // the previous verdict is dropped rather than left looking current.
    const pollOnce = async (): Promise<void> => {
        if (runId === null) {
            return;
        }
        const id = runId;
        try {
            const batch = await client.getEvents(id, model.lastSeq, pollSeconds);
            let result = mergeEvents(model, batch.events);
            let added = result.added;
            if (result.gap) {
                const refill = await client.getEvents(id, result.refetchFrom, 0);
                result = mergeEvents(result.model, refill.events);
                added = [...added, ...result.added];
            }
            model = result.model;
            const run = await client.getRun(id);
            auditStatus = run.audit;
            error = null;
            render();
            if (added.length > 0 && options.onEvents) {
                options.onEvents(added);
            }
        } catch (failure) {
            auditStatus = null;
            error = failure instanceof Error ? failure.message : String(failure);
            render();
        }
    };

    const runLoop = async (mine: number): Promise<void> => {
        while (mine === generation) {
            await pollOnce();
            if (mine !== generation) {
                return;
            }
            if (error !== null) {
                await sleep(backoffMs);
            }
        }
    };

    const attach = (nextRunId: string): void => {
        generation += 1;
        runId = nextRunId;
        model = emptyTimeline();
        auditStatus = null;
        error = null;
        render();
    };

    render();

    return {
        // point the view at a run without consuming the stream; callers
        // then drive pollOnce themselves
        attach,

        start: (nextRunId: string): void => {
            attach(nextRunId);
            void runLoop(generation);
        },

        stop: (): void => {
            generation += 1;
        },

        pollOnce,

        state: (): TimelineModelState => ({
            runId,
            lastSeq: model.lastSeq,
            eventCount: model.events.length,
            error,
        }),
    };
}

export type RunTimeline = ReturnType<typeof createRunTimeline>;
