import { mountApp } from "./main.js";
import type { AppConfig } from "./types.js";

declare global {
  interface Window {
    STDQA_CONFIG?: Partial<AppConfig>;
  }
}

const root = document.getElementById("app");
if (root) {
  mountApp(root, window.STDQA_CONFIG ?? {});
}
