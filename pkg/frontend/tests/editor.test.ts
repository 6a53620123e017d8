import { beforeEach, describe, expect, it } from 'vitest';

import { createMatrixEditor } from '../src/editor.js';
import { createSession } from '../src/session.js';
import { ApiRequestError } from '../src/client.js';
import type { BundleDoc, ValidationReportDoc } from '../src/types.js';
import type { ValidateOptions } from '../src/client.js';
import { fixtureBundle, makeFinding, makeReport, stubClient } from './helpers.js';

interface Recorded {
    uploads: BundleDoc[];
    validations: { id: string; options: ValidateOptions }[];
}

function setup(reportFor: (call: number) => ValidationReportDoc | Error) {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const session = createSession();
    const recorded: Recorded = { uploads: [], validations: [] };
    let validateCalls = 0;
    const client = stubClient({
        getBundle: async (bundleId) => ({ id: bundleId, bundle: fixtureBundle() }),
        uploadBundle: async (bundle) => {
            recorded.uploads.push(bundle);
            return { id: `upload-${recorded.uploads.length}`, bundle };
        },
        validateBundle: async (bundleId, options = {}) => {
            recorded.validations.push({ id: bundleId, options });
            validateCalls += 1;
            const outcome = reportFor(validateCalls);
            if (outcome instanceof Error) {
                throw outcome;
            }
            return outcome;
        },
    });
    const editor = createMatrixEditor(root, { client, session });
    return { root, session, editor, recorded };
}

function cellButton(root: HTMLElement, taskId: string, actorId: string): HTMLButtonElement {
    const button = root.querySelector<HTMLButtonElement>(
        `button.cell[data-task="${taskId}"][data-actor="${actorId}"]`,
    );
    if (button === null) {
        throw new Error(`no cell button for (${taskId}, ${actorId})`);
    }
    return button;
}

beforeEach(() => {
    document.body.textContent = '';
});

describe('matrix editor', () => {
    it('renders the grid from the loaded bundle and validates once', async () => {
        const { root, editor, recorded } = setup(() => makeReport());
        await editor.load('b0');
        expect(cellButton(root, 'draft', 'owner').textContent).toBe('A');
        expect(cellButton(root, 'draft', 'bot').textContent).toBe('R');
        expect(cellButton(root, 'review', 'owner').textContent).toBe('R');
        expect(root.querySelectorAll('tr[data-task]')).toHaveLength(2);
        expect(recorded.validations).toEqual([{ id: 'b0', options: { mode: 'paper-compat' } }]);
        expect(root.querySelector('.report-status')?.textContent).toContain('valid, 0 finding(s)');
    });

    it('cycles a cell on click and re-uploads plus re-validates exactly once per edit', async () => {
        const { root, editor, session, recorded } = setup(() => makeReport());
        await editor.load('b0');
        cellButton(root, 'draft', 'bot').click();
        await editor.idle();
        // R advances to A in the cycle
        expect(recorded.uploads).toHaveLength(1);
        expect(recorded.uploads[0]?.matrix['draft']).toEqual({ owner: 'A', bot: 'A' });
        expect(recorded.validations).toHaveLength(2);
        expect(recorded.validations[1]).toEqual({ id: 'upload-1', options: { mode: 'paper-compat' } });
        expect(session.get().bundleId).toBe('upload-1');
        expect(cellButton(root, 'draft', 'bot').textContent).toBe('A');

        cellButton(root, 'draft', 'bot').click();
        await editor.idle();
        expect(recorded.uploads).toHaveLength(2);
        expect(recorded.validations).toHaveLength(3);
        expect(cellButton(root, 'draft', 'bot').textContent).toBe('C');
    });

    it('shows findings inline on the offending row with rule id and requirement tags', async () => {
        const finding = makeFinding({ task_id: 'draft' });
        const { root, editor } = setup(() => makeReport([finding]));
        await editor.load('b0');
        const draftBadges = root.querySelectorAll('tr[data-task="draft"] .badge');
        expect(draftBadges).toHaveLength(1);
        expect(draftBadges[0]?.textContent).toContain('C3');
        expect(draftBadges[0]?.querySelector('.req-tag')?.textContent).toBe('human_agency_oversight');
        expect(root.querySelectorAll('tr[data-task="review"] .badge')).toHaveLength(0);
        expect(root.querySelector('.findings')?.textContent).toContain('C3 error on draft');
    });

    it('clears the badge once a later report comes back clean', async () => {
        const { root, editor } = setup((call) =>
            call === 1 ? makeReport([makeFinding({ task_id: 'draft' })]) : makeReport(),
        );
        await editor.load('b0');
        expect(root.querySelectorAll('.badge')).toHaveLength(1);
        cellButton(root, 'draft', 'owner').click();
        await editor.idle();
        expect(root.querySelectorAll('.badge')).toHaveLength(0);
        expect(root.querySelector('.report-status')?.textContent).toContain('valid');
    });

    it('switches validation mode from the toggle and re-validates', async () => {
        const { root, editor, recorded } = setup(() => makeReport());
        await editor.load('b0');
        const strict = root.querySelector<HTMLInputElement>('input[value="strict"]');
        expect(strict).not.toBeNull();
        strict?.click();
        await editor.idle();
        expect(editor.state().mode).toBe('strict');
        expect(recorded.validations[1]).toEqual({ id: 'b0', options: { mode: 'strict' } });
    });

    it('parks the findings panel in an error state when the server fails, never stale', async () => {
        const { root, editor } = setup((call) => {
            if (call === 1) {
                return makeReport([makeFinding({ task_id: 'draft' })]);
            }
            if (call === 2) {
                return new ApiRequestError(0, 'ConnectionError', 'cannot reach server');
            }
            return makeReport();
        });
        await editor.load('b0');
        expect(root.querySelectorAll('.badge')).toHaveLength(1);

        cellButton(root, 'review', 'bot').click();
        await editor.idle();
        const panel = root.querySelector('.findings');
        expect(panel?.classList.contains('error-state')).toBe(true);
        expect(panel?.textContent).toContain('validation unavailable');
        // the stale invalid report is gone, and so is any stale verdict
        expect(root.querySelectorAll('.badge')).toHaveLength(0);
        expect(root.querySelector('.report-status')).toBeNull();
        // the grid itself survives and still shows the edit
        expect(cellButton(root, 'review', 'bot').textContent).toBe('I/C');

        cellButton(root, 'review', 'bot').click();
        await editor.idle();
        expect(root.querySelector('.findings')?.classList.contains('error-state')).toBe(false);
        expect(root.querySelector('.report-status')?.textContent).toContain('valid');
    });

    it('keeps matrix-level findings in the panel even without a task anchor', async () => {
        const finding = makeFinding({ task_id: undefined, actor_id: undefined, rule_id: 'AIA-D2' });
        const { root, editor } = setup(() => makeReport([finding]));
        await editor.load('b0');
        expect(root.querySelectorAll('.badge')).toHaveLength(0);
        expect(root.querySelector('.findings')?.textContent).toContain('AIA-D2');
    });
});
