/** Typed client for the review service HTTP API. */

export type Mode = "grade" | "compare";
export type Bucket = "all" | "most" | "some" | "none";

export const ALL_GOOD = "all_good";
export const NONE_GOOD = "none_good";

export interface TurnPayload {
  speaker: "DR" | "PT";
  text: string;
}

export interface ArmPayload {
  arm_id: string;
  summary: string;
}

export interface ItemPayload {
  item_id: string;
  snippet: { id: string; turns: TurnPayload[] };
  arms: ArmPayload[];
}

export type NextResponse =
  | { done: true; items: number; mode: Mode }
  | { done: false; mode: Mode; cursor: number; items: number; item: ItemPayload };

export interface SubmitAck {
  ok: boolean;
  cursor: number;
}

export type EventBody =
  | { type: "grade"; arm_id: string; bucket: Bucket }
  | { type: "choice"; winner: string }
  | { type: "edit"; arm_id: string; edited_text: string };

/** Server-reported failure; message carries the server's own words. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly code: string | null,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`, 0, null);
    }
    const text = await response.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!response.ok) {
      const error = (body as { error?: { code?: string; message?: string } } | null)?.error;
      throw new ApiError(
        error?.message ?? `HTTP ${response.status}`,
        response.status,
        error?.code ?? null,
      );
    }
    return body as T;
  }

  next(sessionId: string): Promise<NextResponse> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitEvent(sessionId: string, itemId: string, event: EventBody): Promise<SubmitAck> {
    return this.request(
      `/sessions/${encodeURIComponent(sessionId)}/items/${encodeURIComponent(itemId)}/events`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(event),
      },
    );
  }

  reportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/report`;
  }
}
