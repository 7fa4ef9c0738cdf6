import { Store } from "./state.js";
import { DEFAULT_CONFIG, type AppConfig } from "./types.js";
import { render } from "./view.js";

/** Mount the app into `root`; returns the store for tests and tooling. */
export function mountApp(root: HTMLElement, overrides: Partial<AppConfig> = {}): Store {
  const config: AppConfig = { ...DEFAULT_CONFIG, ...overrides };
  const store = new Store(config);
  store.subscribe((state) => render(root, state, store, config));
  return store;
}
