import { afterEach, describe, expect, it, vi } from "vitest";

import { canSendFeedback, canSubmit, initialState, Store } from "../src/state.js";
import type { AskResponse } from "../src/types.js";

const CONFIG = { baseUrl: "http://api.test", viewerTemplate: null, topK: 5 };

const RESPONSE: AskResponse = {
  candidates: [
    { question: "怎么计算安全阀的排放面积?", answer: "按E.6.3节", score: 0.97,
      source: { doc: "JB4732", section: "E.6.3" } },
    { question: "另一个问题?", answer: "另一个答案", score: 0.41,
      source: { doc: "JB4732", section: "1.1" } },
  ],
  history_id: "h-1",
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("canSubmit", () => {
  it("requires nonempty trimmed query", () => {
    const state = initialState();
    expect(canSubmit(state)).toBe(false);
    expect(canSubmit({ ...state, query: "   " })).toBe(false);
    expect(canSubmit({ ...state, query: "问题" })).toBe(true);
  });

  it("blocks while a request is in flight", () => {
    expect(canSubmit({ ...initialState(), query: "q", status: "loading" })).toBe(false);
  });
});

describe("Store.submit", () => {
  it("renders candidates in server order on success", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(RESPONSE));
    vi.stubGlobal("fetch", fetchMock);
    const store = new Store(CONFIG);
    store.setQuery("  安全阀的排放面积如何计算?  ");
    await store.submit();
    const state = store.getState();
    expect(state.status).toBe("done");
    expect(state.candidates).toEqual(RESPONSE.candidates);
    expect(state.historyId).toBe("h-1");
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://api.test/ask");
    expect(JSON.parse(init.body).question).toBe("安全阀的排放面积如何计算?");
  });

  it("does nothing when the query is blank", async () => {
    const fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
    const store = new Store(CONFIG);
    store.setQuery("   ");
    await store.submit();
    expect(fetchMock).not.toHaveBeenCalled();
    expect(store.getState().status).toBe("idle");
  });

  it("marks server failures as retriable", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(
      jsonResponse({ code: "kb_error", message: "boom" }, 500)));
    const store = new Store(CONFIG);
    store.setQuery("q");
    await store.submit();
    const state = store.getState();
    expect(state.status).toBe("error");
    expect(state.error).toBe("boom");
    expect(state.errorRetriable).toBe(true);
  });

  it("marks network failures as retriable", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("offline")));
    const store = new Store(CONFIG);
    store.setQuery("q");
    await store.submit();
    expect(store.getState().status).toBe("error");
    expect(store.getState().errorRetriable).toBe(true);
  });

  it("cancels the in-flight request when a new one starts", async () => {
    let firstAborted = false;
    const fetchMock = vi.fn().mockImplementation(
      (_url: string, init: RequestInit) =>
        new Promise<Response>((resolve, reject) => {
          const signal = init.signal as AbortSignal;
          if (fetchMock.mock.calls.length === 1) {
            signal.addEventListener("abort", () => {
              firstAborted = true;
              reject(Object.assign(new Error("aborted"), { name: "AbortError" }));
            });
          } else {
            resolve(jsonResponse(RESPONSE));
          }
        }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const store = new Store(CONFIG);
    store.setQuery("第一问");
    const first = store.submit();
    store.setQuery("第二问");
    const second = store.submit();
    await Promise.all([first, second]);
    expect(firstAborted).toBe(true);
    expect(store.getState().candidates).toEqual(RESPONSE.candidates);
    expect(store.getState().status).toBe("done");
  });
});

describe("Store.feedback", () => {
  async function storeWithResults(): Promise<Store> {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(jsonResponse(RESPONSE)));
    const store = new Store(CONFIG);
    store.setQuery("q");
    await store.submit();
    return store;
  }

  it("sends feedback once per result set", async () => {
    const store = await storeWithResults();
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ ok: true }));
    vi.stubGlobal("fetch", fetchMock);
    expect(canSendFeedback(store.getState())).toBe(true);
    await store.feedback("helpful");
    expect(store.getState().feedbackSent).toBe(true);
    expect(store.getState().feedbackConfirmed).toBe("helpful");
    await store.feedback("unhelpful");
    expect(fetchMock).toHaveBeenCalledTimes(1);
  });

  it("stale history ids raise the stale-result banner", async () => {
    const store = await storeWithResults();
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(
      jsonResponse({ code: "not_found", message: "gone" }, 404)));
    await store.feedback("helpful");
    expect(store.getState().staleResult).toBe(true);
    expect(store.getState().feedbackConfirmed).toBeNull();
  });

  it("requires a completed ask", async () => {
    const fetchMock = vi.fn();
    vi.stubGlobal("fetch", fetchMock);
    const store = new Store(CONFIG);
    await store.feedback("helpful");
    expect(fetchMock).not.toHaveBeenCalled();
  });
});
