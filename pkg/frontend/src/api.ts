import type { ApiError, AskResponse } from "./types.js";

/** Error carrying the server's structured {code, message} body. */
export class RequestFailed extends Error {
  readonly code: string;
  readonly status: number;
  readonly retriable: boolean;

  constructor(status: number, body: ApiError | null) {
    super(body?.message ?? `request failed with status ${status}`);
    this.status = status;
    this.code = body?.code ?? "http_error";
    // network-level and server-side failures are worth retrying; client
    // errors are not
    this.retriable = status === 0 || status >= 500;
  }
}

async function parseError(resp: Response): Promise<RequestFailed> {
  let body: ApiError | null = null;
  try {
    body = (await resp.json()) as ApiError;
  } catch {
    body = null;
  }
  return new RequestFailed(resp.status, body);
}

export async function askQuestion(
  baseUrl: string,
  question: string,
  topK: number,
  signal?: AbortSignal,
): Promise<AskResponse> {
  let resp: Response;
  try {
    resp = await fetch(`${baseUrl}/ask`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, top_k: topK }),
      signal,
    });
  } catch (err) {
    if ((err as Error).name === "AbortError") throw err;
    throw new RequestFailed(0, { code: "network", message: String(err) });
  }
  if (!resp.ok) throw await parseError(resp);
  return (await resp.json()) as AskResponse;
}

export async function sendFeedback(
  baseUrl: string,
  historyId: string,
  verdict: "helpful" | "unhelpful",
  comment = "",
): Promise<void> {
  let resp: Response;
  try {
    resp = await fetch(`${baseUrl}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ history_id: historyId, verdict, comment }),
    });
  } catch (err) {
    throw new RequestFailed(0, { code: "network", message: String(err) });
  }
  if (!resp.ok) throw await parseError(resp);
}
