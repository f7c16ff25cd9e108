import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    testTimeout: 60000,
    hookTimeout: 60000,
    // Each test spawns its own review server; serial execution keeps ports
    // and log assertions independent.
    fileParallelism: false,
  },
});
