// Matrix editor: a tasks-by-actors grid whose cells cycle through the
// document cell values. Every edit re-uploads the bundle and asks the
// server to validate it; findings land inline on the offending rows.
// The browser renders verdicts, it never computes them. When the server
// is unreachable the findings area goes to an explicit error state so a
// stale "valid" can never be mistaken for a current one.

import { ApiRequestError, type ApiClient } from './client.js';
import { cellValue, nextCellValue, withCell } from './cells.js';
import type { UiSession } from './session.js';
import type { BundleDoc, FindingDoc, ValidationReportDoc } from './types.js';

export const MODES = ['paper-compat', 'strict'] as const;
export type EditorMode = (typeof MODES)[number];

export interface MatrixEditorOptions {
    client: ApiClient;
    session: UiSession;
}

export interface MatrixEditorState {
    mode: EditorMode;
    bundle: BundleDoc | null;
    report: ValidationReportDoc | null;
    error: string | null;
}

export function createMatrixEditor(root: HTMLElement, options: MatrixEditorOptions) {
    const { client, session } = options;

    let bundle: BundleDoc | null = null;
    let mode: EditorMode = 'paper-compat';
    let report: ValidationReportDoc | null = null;
    let error: string | null = null;
    let busy: Promise<void> = Promise.resolve();

    // Edits queue behind each other so every one gets its own upload
    // and validate round-trip, in order.
    const enqueue = (op: () => Promise<void>): Promise<void> => {
        busy = busy.then(op);
        return busy;
    };

    const describe = (failure: unknown): string => {
        if (failure instanceof ApiRequestError) {
            return `${failure.kind}: ${failure.message}`;
        }
        return failure instanceof Error ? failure.message : String(failure);
    };

    const revalidate = async (): Promise<void> => {
        const bundleId = session.get().bundleId;
        if (bundleId === null) {
            report = null;
            return;
        }
        try {
            report = await client.validateBundle(bundleId, { mode });
            error = null;
        } catch (failure) {
            report = null;
            error = describe(failure);
        }
    };

    const commit = async (edited: BundleDoc): Promise<void> => {
        bundle = edited;
        try {
            const uploaded = await client.uploadBundle(edited);
            session.update({ bundleId: uploaded.id });
            report = await client.validateBundle(uploaded.id, { mode });
            error = null;
        } catch (failure) {
            report = null;
            error = describe(failure);
        }
        render();
    };

    const cycleCell = async (taskId: string, actorId: string): Promise<void> => {
        if (bundle === null) {
            return;
        }
        const next = nextCellValue(cellValue(bundle, taskId, actorId));
        await commit(withCell(bundle, taskId, actorId, next));
    };

    const badgeFor = (finding: FindingDoc): HTMLElement => {
        const badge = document.createElement('span');
        badge.className = `badge badge-${finding.severity}`;
        badge.title = finding.message;
        badge.appendChild(document.createTextNode(finding.rule_id));
        for (const requirement of finding.requirements) {
            const tag = document.createElement('span');
            tag.className = 'req-tag';
            tag.textContent = requirement;
            badge.appendChild(tag);
        }
        return badge;
    };

    const renderFindingsPanel = (): HTMLElement => {
        const panel = document.createElement('div');
        panel.className = 'findings';
        if (error !== null) {
            panel.classList.add('error-state');
            panel.textContent = `validation unavailable: ${error}`;
            return panel;
        }
        if (report === null) {
            panel.textContent = 'no validation report yet';
            return panel;
        }
        const summary = document.createElement('div');
        summary.className = `report-status report-${report.status}`;
        summary.textContent =
            `mode ${report.mode} (packs: ${report.packs.join(', ')}): ` +
            `${report.status}, ${report.findings.length} finding(s)`;
        panel.appendChild(summary);
        const list = document.createElement('ul');
        for (const finding of report.findings) {
            const item = document.createElement('li');
            item.className = `finding finding-${finding.severity}`;
            const where = [finding.task_id, finding.actor_id].filter((v) => v !== undefined);
            const prefix = where.length > 0 ? ` on ${where.join(' / ')}` : '';
            item.appendChild(document.createTextNode(`${finding.rule_id} ${finding.severity}${prefix}: ${finding.message}`));
            for (const requirement of finding.requirements) {
                const tag = document.createElement('span');
                tag.className = 'req-tag';
                tag.textContent = requirement;
                item.appendChild(tag);
            }
            list.appendChild(item);
        }
        panel.appendChild(list);
        return panel;
    };

    const render = (): void => {
        root.textContent = '';
        if (bundle === null) {
            const empty = document.createElement('div');
            empty.className = 'placeholder';
            empty.textContent = error === null ? 'no bundle loaded' : `cannot load bundle: ${error}`;
            root.appendChild(empty);
            return;
        }

        const header = document.createElement('div');
        header.className = 'editor-header';
        const title = document.createElement('h2');
        title.textContent = bundle.phase;
        header.appendChild(title);

        const toggle = document.createElement('div');
        toggle.className = 'mode-toggle';
        for (const choice of MODES) {
            const label = document.createElement('label');
            const radio = document.createElement('input');
            radio.type = 'radio';
            radio.name = 'validation-mode';
            radio.value = choice;
            radio.checked = choice === mode;
            radio.addEventListener('change', () => {
                void enqueue(async () => {
                    mode = choice;
                    await revalidate();
                    render();
                });
            });
            label.appendChild(radio);
            label.appendChild(document.createTextNode(` ${choice}`));
            toggle.appendChild(label);
        }
        header.appendChild(toggle);
        root.appendChild(header);

        const table = document.createElement('table');
        table.className = 'matrix';
        const head = document.createElement('tr');
        head.appendChild(document.createElement('th'));
        for (const actor of bundle.actors) {
            const th = document.createElement('th');
            th.textContent = actor.name;
            const kind = document.createElement('small');
            kind.textContent = actor.kind === 'human' ? 'human' : 'agent';
            th.appendChild(document.createElement('br'));
            th.appendChild(kind);
            head.appendChild(th);
        }
        head.appendChild(document.createElement('th'));
        table.appendChild(head);

        for (const task of bundle.tasks) {
            const row = document.createElement('tr');
            row.dataset['task'] = task.id;
            const name = document.createElement('th');
            name.textContent = task.name;
            row.appendChild(name);
            for (const actor of bundle.actors) {
                const td = document.createElement('td');
                const button = document.createElement('button');
                button.className = 'cell';
                button.dataset['task'] = task.id;
                button.dataset['actor'] = actor.id;
                const value = cellValue(bundle, task.id, actor.id);
                button.textContent = value === '' ? '·' : value;
                button.addEventListener('click', () => {
                    void enqueue(() => cycleCell(task.id, actor.id));
                });
                td.appendChild(button);
                row.appendChild(td);
            }
            const flags = document.createElement('td');
            flags.className = 'row-findings';
            if (error === null && report !== null) {
                for (const finding of report.findings) {
                    if (finding.task_id === task.id) {
                        flags.appendChild(badgeFor(finding));
                    }
                }
            }
            row.appendChild(flags);
            table.appendChild(row);
        }
        root.appendChild(table);
        root.appendChild(renderFindingsPanel());
    };

    render();

    return {
        load: (bundleId: string): Promise<void> =>
            enqueue(async () => {
                try {
                    const fetched = await client.getBundle(bundleId);
                    bundle = fetched.bundle;
                    session.update({ bundleId: fetched.id });
                    error = null;
                } catch (failure) {
                    // keep whatever grid is on screen; only the report dies
                    report = null;
                    error = describe(failure);
                    render();
                    return;
                }
                await revalidate();
                render();
            }),

        setMode: (next: EditorMode): Promise<void> =>
            enqueue(async () => {
                mode = next;
                await revalidate();
                render();
            }),

        cycleCell: (taskId: string, actorId: string): Promise<void> =>
            enqueue(() => cycleCell(taskId, actorId)),

        idle: (): Promise<void> => busy,

        state: (): MatrixEditorState => ({ mode, bundle, report, error }),
    };
}

export type MatrixEditor = ReturnType<typeof createMatrixEditor>;
