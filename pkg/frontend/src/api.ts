import type { SessionForm, SessionRecord } from "./types";

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(path, {
        method,
        headers: { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
        // surfaced verbatim so the operator sees exactly what the service said
        throw new ApiError(response.status, (payload as { error?: string }).error ?? response.statusText);
    }
    return payload as T;
}

export function submitSession(form: SessionForm): Promise<SessionRecord> {
    return request<SessionRecord>("POST", "/sessions", form);
}

export function getSession(sessionId: string): Promise<SessionRecord> {
    return request<SessionRecord>("GET", `/sessions/${encodeURIComponent(sessionId)}`);
}

export function health(): Promise<{ status: string }> {
    return request<{ status: string }>("GET", "/health");
}
