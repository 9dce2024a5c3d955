import { fileURLToPath } from "node:url";
import path from "node:path";
import { defineConfig } from "vitest/config";

const here = path.dirname(fileURLToPath(import.meta.url));

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 30_000,
    poolOptions: {
      // Expose globalThis.gc so the finalization test can nudge the
      // collector instead of skipping.
      threads: { execArgv: ["--expose-gc"] },
      forks: { execArgv: ["--expose-gc"] },
    },
    env: {
      // Let the spawned native process import the core package straight
      // from the repository checkout, installed or not.
      PYTHONPATH: path.resolve(here, "..", "src"),
    },
  },
});
