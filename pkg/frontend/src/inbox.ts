// Approval inbox: the pending validation questions addressed to the
// session's actor, with the artifact and the consultation record that
// produced it. Verdicts are server-confirmed only; a card never updates
// until the server's response comes back.

import { ApiRequestError, type ApiClient } from './client.js';
import type { UiSession } from './session.js';
import type { PendingApprovalDoc } from './types.js';

const PREVIEW_LIMIT = 240;

export interface ApprovalInboxOptions {
    client: ApiClient;
    session: UiSession;
    onVerdict?: () => void;
}

function preview(content: string): string {
    if (content.length <= PREVIEW_LIMIT) {
        return content;
    }
    return `${content.slice(0, PREVIEW_LIMIT)}…`;
}

export function createApprovalInbox(root: HTMLElement, options: ApprovalInboxOptions) {
    const { client, session } = options;

    let entries: PendingApprovalDoc[] = [];
    let error: string | null = null;
    // verdict failures render on the card they belong to
    const cardErrors = new Map<string, string>();
    let busy: Promise<void> = Promise.resolve();

    const enqueue = (op: () => Promise<void>): Promise<void> => {
        busy = busy.then(op);
        return busy;
    };

    const cardKey = (entry: PendingApprovalDoc): string => `${entry.run_id}/${entry.task_id}`;

    const refreshNow = async (): Promise<void> => {
        const actorId = session.get().actorId;
        if (actorId === null) {
            entries = [];
            error = null;
            render();
            return;
        }
        try {
            entries = await client.listApprovals(actorId);
            error = null;
        } catch (failure) {
            entries = [];
            error = failure instanceof Error ? failure.message : String(failure);
        }
        render();
    };

    const sendVerdict = async (
        entry: PendingApprovalDoc,
        verdict: 'approve' | 'reject',
        comment: string,
    ): Promise<void> => {
        const actorId = session.get().actorId;
        if (actorId === null) {
            return;
        }
        try {
            await client.postVerdict(entry.run_id, entry.task_id, actorId, {
                verdict,
                ...(comment !== '' ? { comment } : {}),
            });
            cardErrors.delete(cardKey(entry));
        } catch (failure) {
            if (failure instanceof ApiRequestError && failure.status === 403) {
                cardErrors.set(cardKey(entry), 'not accountable for this task');
            } else {
                const message = failure instanceof Error ? failure.message : String(failure);
                cardErrors.set(cardKey(entry), message);
            }
            render();
            return;
        }
        await refreshNow();
        if (options.onVerdict) {
            options.onVerdict();
        }
    };

    const renderCard = (entry: PendingApprovalDoc): HTMLElement => {
        const card = document.createElement('div');
        card.className = 'approval-card';
        card.dataset['task'] = entry.task_id;
        card.dataset['run'] = entry.run_id;

        const title = document.createElement('h3');
        title.textContent = `${entry.task_name} (run ${entry.run_id})`;
        card.appendChild(title);

        const meta = document.createElement('div');
        meta.className = 'card-meta';
        meta.textContent =
            `responsible: ${entry.responsible_actor}` +
            ` | artifact v${entry.artifact_version.version}` +
            ` | digest ${entry.artifact_version.digest.slice(0, 12)}`;
        card.appendChild(meta);

        const artifact = document.createElement('pre');
        artifact.className = 'artifact-preview';
        artifact.textContent = preview(entry.artifact_version.content);
        card.appendChild(artifact);

        const consultation = document.createElement('ul');
        consultation.className = 'consultation';
        for (const item of entry.consultation) {
            const line = document.createElement('li');
            const mandatory = item.mandatory ? ' (mandatory)' : '';
            line.textContent = `${item.actor_id}${mandatory}: ${preview(item.content)}`;
            consultation.appendChild(line);
        }
        card.appendChild(consultation);

        const comment = document.createElement('textarea');
        comment.className = 'comment';
        comment.placeholder = 'comment (kept in the audit log)';
        card.appendChild(comment);

        const actions = document.createElement('div');
        actions.className = 'card-actions';
        for (const verdict of ['approve', 'reject'] as const) {
            const button = document.createElement('button');
            button.className = `verdict verdict-${verdict}`;
            button.textContent = verdict;
            button.addEventListener('click', () => {
                void enqueue(() => sendVerdict(entry, verdict, comment.value.trim()));
            });
            actions.appendChild(button);
        }
        card.appendChild(actions);

        const cardError = cardErrors.get(cardKey(entry));
        if (cardError !== undefined) {
            const note = document.createElement('div');
            note.className = 'card-error';
            note.textContent = cardError;
            card.appendChild(note);
        }
        return card;
    };

    const render = (): void => {
        root.textContent = '';
        const heading = document.createElement('h2');
        const actorId = session.get().actorId;
        heading.textContent = actorId === null ? 'Approvals' : `Approvals for ${actorId}`;
        root.appendChild(heading);

        if (actorId === null) {
            const hint = document.createElement('div');
            hint.className = 'placeholder';
            hint.textContent = 'select an actor to see their inbox';
            root.appendChild(hint);
            return;
        }
        if (error !== null) {
            const note = document.createElement('div');
            note.className = 'inbox-error';
            note.textContent = `inbox unavailable: ${error}`;
            root.appendChild(note);
            return;
        }
        if (entries.length === 0) {
            const empty = document.createElement('div');
            empty.className = 'placeholder';
            empty.textContent = 'nothing waiting on this actor';
            root.appendChild(empty);
            return;
        }
        for (const entry of entries) {
            root.appendChild(renderCard(entry));
        }
    };

    render();

    return {
        refresh: (): Promise<void> => enqueue(refreshNow),

        idle: (): Promise<void> => busy,

        entryCount: (): number => entries.length,
    };
}

export type ApprovalInbox = ReturnType<typeof createApprovalInbox>;
