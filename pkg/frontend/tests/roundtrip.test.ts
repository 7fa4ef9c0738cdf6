/**
 * Round trip against the live service started by tests/service.setup.ts.
 * The document URL must match the service origin (fixed port 8732 in the
 * setup) or happy-dom's same-origin policy blocks the requests.
 *
 * @vitest-environment happy-dom
 * @vitest-environment-options {"url": "http://127.0.0.1:8732"}
 */
import { existsSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeEach, describe, expect, it } from "vitest";

import { mountApp } from "../src/main.js";

const VALVE_QUESTION = "安全阀的排放面积如何计算?";
const urlFile = join(dirname(dirname(fileURLToPath(import.meta.url))), ".e2e", "service-url.txt");

const maybeDescribe = existsSync(urlFile) ? describe : describe.skip;

maybeDescribe("round trip against the running service", () => {
  const baseUrl = readFileSync(urlFile, "utf-8").trim();
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.append(root);
  });

  async function waitFor(predicate: () => boolean, what: string): Promise<void> {
    const deadline = Date.now() + 20_000;
    while (!predicate()) {
      if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
      await new Promise((resolve) => setTimeout(resolve, 50));
    }
  }

  it("empty input cannot submit", async () => {
    const store = mountApp(root, { baseUrl });
    const button = root.querySelector("button.ask-submit") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    await store.submit();
    expect(store.getState().status).toBe("idle");
    store.setQuery("  　 ");
    await store.submit();
    expect(store.getState().status).toBe("idle");
  });

  it("the safety-valve question renders a jump link into the standard", async () => {
    const store = mountApp(root, { baseUrl, topK: 3 });
    const input = root.querySelector("input.ask-input") as HTMLInputElement;
    input.value = VALVE_QUESTION;
    input.dispatchEvent(new Event("input"));
    const form = root.querySelector("form.ask-form") as HTMLFormElement;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await waitFor(() => store.getState().status === "done", "ask response");

    const first = root.querySelector("li.candidate");
    expect(first).toBeTruthy();
    expect(first!.querySelector(".variant")!.textContent).toBe("怎么计算安全阀的排放面积?");
    const link = first!.querySelector("a.jump") as HTMLAnchorElement;
    expect(link.getAttribute("href")).toBe("/docs/JB4732.html#E.6.3");

    // the jump target actually resolves on the service
    const page = await fetch(`${baseUrl}/docs/JB4732.html`);
    expect(page.status).toBe(200);
    expect(await page.text()).toContain("E.6.3");

    const scores = [...root.querySelectorAll(".score")].map((n) => Number(n.textContent));
    for (const score of scores) {
      expect(score).toBeGreaterThanOrEqual(0);
      expect(score).toBeLessThanOrEqual(1);
    }
  });

  it("a feedback click persists a feedback entry", async () => {
    const store = mountApp(root, { baseUrl, topK: 3 });
    store.setQuery(VALVE_QUESTION);
    await store.submit();
    expect(store.getState().status).toBe("done");

    const before = (await (await fetch(`${baseUrl}/kb/stats`)).json()).feedback as number;
    (root.querySelector("button.fb-helpful") as HTMLButtonElement).click();
    await waitFor(() => store.getState().feedbackSent, "feedback acknowledgment");
    const after = (await (await fetch(`${baseUrl}/kb/stats`)).json()).feedback as number;
    expect(after).toBe(before + 1);

    // one submission per result set: buttons give way to the confirmation
    expect(root.querySelector("button.fb-helpful")).toBeNull();
    expect(root.querySelector(".confirmation")).toBeTruthy();
  });
});
