// Cell editing as pure data transformation. Clicking a cell walks the
// cycle below; the edited document is re-uploaded and the server says
// what the change means. Nothing here interprets role letters.

import type { BundleDoc, CellValue } from './types.js';

export const CELL_CYCLE: readonly CellValue[] = ['', 'R', 'A', 'C', 'I', 'I/C'];

export function isCellValue(value: string): value is CellValue {
    return (CELL_CYCLE as readonly string[]).includes(value);
}

export function nextCellValue(current: CellValue): CellValue {
    const index = CELL_CYCLE.indexOf(current);
    if (index < 0) {
        throw new Error(`not a cell value: ${JSON.stringify(current)}`);
    }
    const next = CELL_CYCLE[(index + 1) % CELL_CYCLE.length];
    return next as CellValue;
}

export function cellValue(bundle: BundleDoc, taskId: string, actorId: string): CellValue {
    const raw = bundle.matrix[taskId]?.[actorId] ?? '';
    if (!isCellValue(raw)) {
        throw new Error(`cell (${taskId}, ${actorId}) holds ${JSON.stringify(raw)}`);
    }
    return raw;
}

// Returns a new document with one cell changed; the input is never
// mutated. Empty cells and empty rows are dropped to match the
// canonical form the server emits.
export function withCell(
    bundle: BundleDoc,
    taskId: string,
    actorId: string,
    value: CellValue,
): BundleDoc {
    const matrix: Record<string, Record<string, string>> = {};
    for (const [rowTask, row] of Object.entries(bundle.matrix)) {
        matrix[rowTask] = { ...row };
    }
    const row = matrix[taskId] ?? {};
    matrix[taskId] = row;
    if (value === '') {
        delete row[actorId];
    } else {
        row[actorId] = value;
    }
    if (Object.keys(row).length === 0) {
        delete matrix[taskId];
    }
    return { ...bundle, matrix };
}
