import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the end-to-end file boots the real service once per run
    testTimeout: 90_000,
    hookTimeout: 120_000,
  },
});
