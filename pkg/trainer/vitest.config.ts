import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // dataset generation and the desk-scale training runs are slow by
    // nature; individual heavy tests set their own longer timeouts
    testTimeout: 180_000,
    hookTimeout: 900_000,
  },
});
