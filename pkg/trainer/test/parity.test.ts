import { readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, test } from 'vitest';
import { ARCH_CONV_INIT } from '../src/config.js';
import { Bundle, BundleTensor, writeBundle } from '../src/bundle.js';
import { GridInfo, mulberry32 } from '../src/dataset.js';
import { buildStartModel, modelTensors } from '../src/model.js';
import { decodeParams, forwardOne } from '../src/infer.js';
import { HELPER_DIR, mkTmpDir, runPython } from './helpers.js';

const WINDOW = 256;
const ORDER = 2;
const N_INPUTS = 100;

// Consumer-side system timing: 10 MHz bandwidth, 50-tap delay span.
const GRID: GridInfo = {
  bandwidthHz: 1e7,
  samplePeriodS: 1e-7,
  gridStepS: 1e-7 / 6,
  maxDelayS: 50 * 1e-7,
};

function circularDiff(a: number, b: number): number {
  const d = Math.abs(a - b) % (2 * Math.PI);
  return Math.min(d, 2 * Math.PI - d);
}

describe('cross-component parity', () => {
  let model: tf.LayersModel;
  let inputs: Float32Array[];
  let reference: {
    raw: number[][]; delays: number[][]; amps: number[][]; phases: number[][];
  };

  beforeAll(() => {
    const dir = mkTmpDir('parity-');
    model = buildStartModel(WINDOW, ORDER, 424242);

    const tensors = new Map<string, BundleTensor>();
    for (const [name, t] of modelTensors(model)) {
      tensors.set(name, { shape: t.shape.slice(), data: t.dataSync() as Float32Array });
    }
    const bundle: Bundle = {
      architectureId: ARCH_CONV_INIT, modelOrder: ORDER, inputWindow: WINDOW,
      tensors, extra: {},
    };
    const bundlePath = join(dir, 'parity.bin');
    writeBundle(bundle, bundlePath);

    const rand = mulberry32(1357);
    inputs = [];
    const flat = new Float32Array(N_INPUTS * WINDOW * 2);
    for (let i = 0; i < N_INPUTS; i += 1) {
      const x = new Float32Array(WINDOW * 2);
      for (let k = 0; k < WINDOW; k += 1) {
        x[2 * k] = rand() * 2;
        x[2 * k + 1] = (rand() * 2 - 1) * Math.PI;
      }
      inputs.push(x);
      flat.set(x, i * WINDOW * 2);
    }
    const inputsPath = join(dir, 'inputs.bin');
    writeFileSync(inputsPath, Buffer.from(flat.buffer, 0, flat.byteLength));

    const outPath = join(dir, 'reference.json');
    const res = runPython([
      join(HELPER_DIR, 'helpers', 'forward_driver.py'),
      bundlePath, inputsPath, String(N_INPUTS), String(WINDOW), outPath,
    ]);
    if (res.status !== 0) {
      throw new Error(`reference forward pass failed: ${res.stderr}`);
    }
    reference = JSON.parse(readFileSync(outPath, 'utf-8'));
  }, 300_000);

  test('raw head outputs agree within 1e-5 on 100 random inputs', () => {
    let worst = 0;
    for (let i = 0; i < N_INPUTS; i += 1) {
      const here = forwardOne(model, inputs[i], WINDOW);
      const there = reference.raw[i];
      expect(here).toHaveLength(there.length);
      for (let j = 0; j < here.length; j += 1) {
        worst = Math.max(worst, Math.abs(here[j] - there[j]));
      }
    }
    const ok = worst <= 1e-5;
    console.log(`[secondary 1] cross-component parity: ${ok ? 'PASS' : 'FAIL'} `
      + `(max abs raw diff ${worst.toExponential(3)} over ${N_INPUTS} inputs)`);
    expect(worst).toBeLessThanOrEqual(1e-5);
  });

  test('decoded parameter sets agree within 1e-5', () => {
    for (let i = 0; i < N_INPUTS; i += 1) {
      const here = decodeParams(forwardOne(model, inputs[i], WINDOW), GRID);
      for (let l = 0; l < ORDER; l += 1) {
        const dTs = Math.abs(here.delays[l] - reference.delays[i][l])
          / GRID.samplePeriodS;
        expect(dTs, `input ${i} delay ${l}`).toBeLessThanOrEqual(1e-5);
        expect(Math.abs(here.amps[l] - reference.amps[i][l]),
               `input ${i} amp ${l}`).toBeLessThanOrEqual(1e-5);
        expect(circularDiff(here.phases[l], reference.phases[i][l]),
               `input ${i} phase ${l}`).toBeLessThanOrEqual(1e-5);
      }
    }
  });
});
