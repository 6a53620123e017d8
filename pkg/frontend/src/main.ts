// Page bootstrap: wires the session, the API client, and the three
// views together. Business rules live on the server; this file only
// moves ids around.

import { createApiClient, type ApiClient } from './client.js';
import { createMatrixEditor, type MatrixEditor } from './editor.js';
import { createApprovalInbox, type ApprovalInbox } from './inbox.js';
import { createSession } from './session.js';
import { createRunTimeline, type RunTimeline } from './timeline.js';

function byId(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (node === null) {
        throw new Error(`missing mount point #${id}`);
    }
    return node;
}

function option(value: string, text: string): HTMLOptionElement {
    const node = document.createElement('option');
    node.value = value;
    node.textContent = text;
    return node;
}

export function bootstrap(): void {
    const session = createSession();
    const banner = byId('banner');
    const serverInput = byId('server-url') as HTMLInputElement;
    const connectButton = byId('connect') as HTMLButtonElement;
    const bundleSelect = byId('bundle-select') as HTMLSelectElement;
    const actorSelect = byId('actor-select') as HTMLSelectElement;
    const runButton = byId('start-run') as HTMLButtonElement;

    serverInput.value = session.get().serverBaseUrl;

    let client: ApiClient | null = null;
    let editor: MatrixEditor | null = null;
    let inbox: ApprovalInbox | null = null;
    let timeline: RunTimeline | null = null;

    const showError = (message: string): void => {
        banner.textContent = message;
        banner.classList.add('visible');
    };
    const clearError = (): void => {
        banner.textContent = '';
        banner.classList.remove('visible');
    };

    const rebuildActorPicker = (): void => {
        actorSelect.textContent = '';
        const bundle = editor?.state().bundle ?? null;
        if (bundle === null) {
            session.update({ actorId: null });
            return;
        }
        const humans = bundle.actors.filter((a) => a.kind === 'human');
        const agents = bundle.actors.filter((a) => a.kind !== 'human');
        for (const actor of [...humans, ...agents]) {
            const kind = actor.kind === 'human' ? 'human' : 'agent';
            actorSelect.appendChild(option(actor.id, `${actor.name} (${kind})`));
        }
        const current = session.get().actorId;
        const fallback = humans[0]?.id ?? bundle.actors[0]?.id ?? null;
        const chosen = current !== null && bundle.actors.some((a) => a.id === current) ? current : fallback;
        if (chosen !== null) {
            actorSelect.value = chosen;
        }
        session.update({ actorId: chosen });
        void inbox?.refresh();
    };

    const loadBundle = async (bundleId: string): Promise<void> => {
        if (editor === null) {
            return;
        }
        await editor.load(bundleId);
        rebuildActorPicker();
    };

    const connect = async (): Promise<void> => {
        clearError();
        timeline?.stop();
        session.update({ serverBaseUrl: serverInput.value.trim(), bundleId: null, runId: null });
        client = createApiClient(session.get().serverBaseUrl);
        editor = createMatrixEditor(byId('editor'), { client, session });
        inbox = createApprovalInbox(byId('inbox'), { client, session });
        const wiredInbox = inbox;
        timeline = createRunTimeline(byId('timeline'), {
            client,
            onEvents: () => {
                void wiredInbox.refresh();
            },
        });
        bundleSelect.textContent = '';
        try {
            const bundles = await client.listBundles();
            for (const row of bundles) {
                bundleSelect.appendChild(option(row.id, `${row.phase} (${row.id})`));
            }
            const first = bundles[0];
            if (first !== undefined) {
                bundleSelect.value = first.id;
                await loadBundle(first.id);
            }
        } catch (failure) {
            showError(failure instanceof Error ? failure.message : String(failure));
        }
    };

    connectButton.addEventListener('click', () => {
        void connect();
    });

    bundleSelect.addEventListener('change', () => {
        void loadBundle(bundleSelect.value);
    });

    actorSelect.addEventListener('change', () => {
        session.update({ actorId: actorSelect.value });
        void inbox?.refresh();
    });

    runButton.addEventListener('click', () => {
        void (async () => {
            clearError();
            const bundleId = session.get().bundleId;
            if (client === null || bundleId === null || editor === null) {
                showError('connect and pick a bundle first');
                return;
            }
            try {
                const outcome = await client.runPipeline(bundleId, { mode: editor.state().mode });
                if (outcome.workflow === undefined) {
                    showError('the matrix is invalid; the pipeline produced no workflow');
                    return;
                }
                const run = await client.createRun(outcome);
                session.update({ runId: run.run_id });
                timeline?.start(run.run_id);
                void inbox?.refresh();
            } catch (failure) {
                showError(failure instanceof Error ? failure.message : String(failure));
            }
        })();
    });

    void connect();
}

bootstrap();
