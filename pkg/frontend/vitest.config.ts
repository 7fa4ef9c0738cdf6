import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    globalSetup: ["tests/service.setup.ts"],
    testTimeout: 30000,
    hookTimeout: 120000,
  },
});
