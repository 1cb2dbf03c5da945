import { spawnSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

export interface RunResult {
  status: number;
  stdout: string;
  stderr: string;
}

/** Run the estimator package's python entry points. */
export function runPython(args: string[]): RunResult {
  const res = spawnSync('python3', args, { encoding: 'utf-8' });
  if (res.error) {
    throw res.error;
  }
  return { status: res.status ?? -1, stdout: res.stdout, stderr: res.stderr };
}

export function mkTmpDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

/**
 * Generate a channel dataset through the estimator CLI. The spec object
 * uses the dataset JSON schema (n_channels, fixed_order, seed, ...).
 */
export function generateDataset(outDir: string, spec: Record<string, unknown>): void {
  const specPath = path.join(outDir, 'spec.json');
  fs.writeFileSync(specPath, JSON.stringify(spec));
  const res = runPython(['-m', 'mpcprof', 'generate', specPath,
                         '--out-dir', outDir, '--force']);
  if (res.status !== 0) {
    throw new Error(`dataset generation failed (${res.status}): ${res.stderr}`);
  }
}

export const HELPER_DIR = path.dirname(new URL(import.meta.url).pathname);

/** Median of a numeric array; throws on empty input. */
export function median(values: number[]): number {
  if (values.length === 0) {
    throw new Error('median of empty array');
  }
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}
