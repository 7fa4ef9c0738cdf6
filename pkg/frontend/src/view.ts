import { urlForSource } from "./jump.js";
import { canSendFeedback, canSubmit, Store, type ViewState } from "./state.js";
import type { AppConfig } from "./types.js";

/** Scores render clamped to [0.00, 1.00] with two decimals. */
export function formatScore(score: number): string {
  return Math.min(1, Math.max(0, score)).toFixed(2);
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, state: ViewState, store: Store, config: AppConfig): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const form = el(doc, "form", "ask-form");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void store.submit();
  });
  const input = el(doc, "input", "ask-input");
  input.type = "text";
  input.placeholder = "输入问题，例如：安全阀的排放面积如何计算?";
  input.value = state.query;
  input.addEventListener("input", () => store.setQuery(input.value));
  const button = el(doc, "button", "ask-submit", state.status === "loading" ? "查询中…" : "提问");
  button.type = "submit";
  button.disabled = !canSubmit(state);
  form.append(input, button);
  root.append(form);

  if (state.error !== null) {
    const banner = el(doc, "div", "banner error", state.error);
    if (state.errorRetriable) {
      banner.append(el(doc, "span", "hint", "（可重试）"));
    }
    root.append(banner);
  }
  if (state.staleResult) {
    root.append(el(doc, "div", "banner stale", "结果已过期，请重新提问后再反馈。"));
  }

  if (state.status === "done" && state.candidates.length === 0) {
    root.append(el(doc, "div", "empty", "没有找到匹配的问题。"));
    return;
  }
  if (state.candidates.length === 0) return;

  const list = el(doc, "ol", "candidates");
  for (const candidate of state.candidates) {
    const item = el(doc, "li", "candidate");
    item.append(el(doc, "div", "variant", candidate.question));
    item.append(el(doc, "div", "answer", candidate.answer));
    const meta = el(doc, "div", "meta");
    meta.append(el(doc, "span", "score", formatScore(candidate.score)));
    const url = urlForSource(config.viewerTemplate, candidate.source);
    if (url !== null) {
      const jump = el(doc, "a", "jump", `跳转 ${candidate.source.section}`);
      jump.href = url;
      jump.target = "_blank";
      meta.append(jump);
    } else {
      const disabled = el(doc, "span", "jump disabled", "跳转不可用");
      disabled.title = "未配置文档查看地址或缺少章节信息";
      meta.append(disabled);
    }
    item.append(meta);
    list.append(item);
  }
  root.append(list);

  const feedback = el(doc, "div", "feedback");
  if (state.feedbackConfirmed !== null) {
    feedback.append(el(doc, "span", "confirmation",
      state.feedbackConfirmed === "helpful" ? "感谢反馈：有帮助" : "感谢反馈：没有帮助"));
  } else {
    const helpful = el(doc, "button", "fb-helpful", "有帮助");
    const unhelpful = el(doc, "button", "fb-unhelpful", "没有帮助");
    for (const [node, verdict] of [[helpful, "helpful"], [unhelpful, "unhelpful"]] as const) {
      node.type = "button";
      node.disabled = !canSendFeedback(state);
      node.addEventListener("click", () => void store.feedback(verdict));
      feedback.append(node);
    }
  }
  root.append(feedback);
}
