import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // the failmap service; start it with `failmap serve --artifacts ...`
      "/api": "http://127.0.0.1:8330",
    },
  },
  build: {
    outDir: "dist",
  },
  test: {
    globals: true,
    environment: "node",
    testTimeout: 20000,
  },
});
