import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // zoo forwards run on the pure-JS tfjs backend and parameter seeding
    // walks millions of BigInt draws; both are slow but deterministic
    testTimeout: 180_000,
  },
});
