// Role-play session: who the user claims to be, which server to talk
// to, and which bundle/run the views are pointed at. The actor picker
// stands in for a login, matching the server's declared-identity model.

import type { UiSessionState } from './types.js';

export type SessionListener = (state: UiSessionState) => void;

const DEFAULT_SERVER = 'http://127.0.0.1:8000';

export function createSession(initial: Partial<UiSessionState> = {}) {
    const state: UiSessionState = {
        serverBaseUrl: DEFAULT_SERVER,
        actorId: null,
        bundleId: null,
        runId: null,
        ...initial,
    };
    const listeners = new Set<SessionListener>();

    return {
        get: (): UiSessionState => ({ ...state }),

        update: (patch: Partial<UiSessionState>): void => {
            Object.assign(state, patch);
            for (const listener of [...listeners]) {
                listener({ ...state });
            }
        },

        subscribe: (listener: SessionListener): (() => void) => {
            listeners.add(listener);
            return () => {
                listeners.delete(listener);
            };
        },
    };
}

export type UiSession = ReturnType<typeof createSession>;
