import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { beforeAll, describe, expect, test } from 'vitest';
import { ConfigurationError } from '../src/errors.js';
import { makeTrainConfig } from '../src/config.js';
import { ChannelRecord, DatasetMetadata, readDataset } from '../src/dataset.js';
import { modelTensors } from '../src/model.js';
import {
  trainOnDataset, trainOnRecords, writeLossCsv,
} from '../src/train.js';
import { generateDataset, mkTmpDir } from './helpers.js';

let dir: string;
let meta: DatasetMetadata;
let records: ChannelRecord[];

beforeAll(() => {
  dir = mkTmpDir('train-');
  generateDataset(dir, {
    n_channels: 48, window: 256, seed: 21,
    fixed_order: 2, l_max: 2,
    delay_min_ts: 0.5, delay_max_ts: 4.5, min_separation_ts: 1.0,
  });
  ({ meta, records } = readDataset(dir));
}, 180_000);

describe('training loop', () => {
  test('epoch loss strictly decreases over the first 5 epochs', () => {
    const cfg = makeTrainConfig({ epochs: 6, batchSize: 16, rngSeed: 3 });
    const res = trainOnRecords(records, meta, cfg);
    expect(res.log).toHaveLength(6);
    for (let i = 1; i < 5; i += 1) {
      expect(res.log[i].trainLoss, `epoch ${i + 1}`).toBeLessThan(res.log[i - 1].trainLoss);
    }
    expect(res.heldIndices.length).toBe(5); // round(48 * 0.1)
    expect(res.log[0].valLoss).not.toBeNull();
  }, 300_000);

  test('loss trajectory is reproducible to 1e-4 relative', () => {
    const cfg = makeTrainConfig({ epochs: 4, batchSize: 16, rngSeed: 8 });
    const a = trainOnRecords(records, meta, cfg);
    const b = trainOnRecords(records, meta, cfg);
    expect(a.trainIndices).toEqual(b.trainIndices);
    for (let i = 0; i < a.log.length; i += 1) {
      const rel = Math.abs(a.log[i].trainLoss - b.log[i].trainLoss)
        / Math.abs(a.log[i].trainLoss);
      expect(rel, `epoch ${i + 1}`).toBeLessThanOrEqual(1e-4);
    }
  }, 300_000);

  test('beta changes the objective from the first update on', () => {
    const base = { epochs: 1, batchSize: 48, rngSeed: 5, heldFraction: 0 };
    const plain = trainOnRecords(records, meta, makeTrainConfig({ ...base, beta: 0 }));
    const shaped = trainOnRecords(records, meta, makeTrainConfig({ ...base, beta: 10 }));
    const wa = modelTensors(plain.model).get('head/kernel')!.dataSync();
    const wb = modelTensors(shaped.model).get('head/kernel')!.dataSync();
    let maxDiff = 0;
    for (let i = 0; i < wa.length; i += 1) {
      maxDiff = Math.max(maxDiff, Math.abs(wa[i] - wb[i]));
    }
    expect(maxDiff).toBeGreaterThan(0);
    expect(plain.log[0].trainLoss).not.toBe(shaped.log[0].trainLoss);
  }, 300_000);

  test('memorizes a one-sample dataset', () => {
    const cfg = makeTrainConfig({
      epochs: 600, batchSize: 1, rngSeed: 2, heldFraction: 0, beta: 0,
      learningRate: 1e-3,
    });
    const res = trainOnRecords(records.slice(0, 1), meta, cfg);
    const first = res.log[0].trainLoss;
    const floor = Math.min(...res.log.map((e) => e.trainLoss));
    // fixed-rate Adam on an L1 objective oscillates at the step scale
    // once the sample is fit, so the reachable floor is set by the
    // learning rate rather than arithmetic precision; capacity shows as
    // the loss collapsing by orders of magnitude
    expect(floor).toBeLessThan(5e-3);
    expect(first / floor).toBeGreaterThan(100);
  }, 300_000);
});

describe('configuration failures', () => {
  test('path-count mismatch with the head is rejected', () => {
    const cfg = makeTrainConfig({ epochs: 1 });
    expect(() => trainOnRecords(records, meta, cfg, 3)).toThrow(ConfigurationError);
  });

  test('mixed path counts are rejected', () => {
    const mixed = records.slice(0, 2).map((r, i) => ({ ...r, order: 2 - i }));
    mixed[1].delays = new Float64Array([1e-7]);
    mixed[1].amps = new Float64Array([1]);
    mixed[1].phases = new Float64Array([0]);
    const cfg = makeTrainConfig({ epochs: 1 });
    expect(() => trainOnRecords(mixed, meta, cfg)).toThrow(ConfigurationError);
  });

  test('an empty dataset is rejected', () => {
    const cfg = makeTrainConfig({ epochs: 1 });
    expect(() => trainOnRecords([], meta, cfg)).toThrow(ConfigurationError);
  });
});

describe('artifacts', () => {
  test('loss CSV has one row per epoch', () => {
    const out = mkTmpDir('csv-');
    const cfg = makeTrainConfig({ epochs: 3, batchSize: 16, rngSeed: 4 });
    const res = trainOnDataset(dir, cfg);
    const csvPath = join(out, 'loss.csv');
    writeLossCsv(res.log, csvPath);
    const lines = readFileSync(csvPath, 'utf-8').trimEnd().split('\n');
    expect(lines[0]).toBe('epoch,train_loss,val_loss');
    expect(lines).toHaveLength(4);
    for (let i = 1; i < lines.length; i += 1) {
      const [epoch, trainLoss, valLoss] = lines[i].split(',');
      expect(Number(epoch)).toBe(i);
      expect(Number.isFinite(Number(trainLoss))).toBe(true);
      expect(Number.isFinite(Number(valLoss))).toBe(true);
    }
  }, 300_000);

  test('no-validation runs leave the val column empty', () => {
    const cfg = makeTrainConfig({
      epochs: 1, batchSize: 16, rngSeed: 4, heldFraction: 0,
    });
    const res = trainOnRecords(records.slice(0, 8), meta, cfg);
    const out = mkTmpDir('csv-noval-');
    const csvPath = join(out, 'loss.csv');
    writeLossCsv(res.log, csvPath);
    const lines = readFileSync(csvPath, 'utf-8').trimEnd().split('\n');
    expect(lines[1].endsWith(',')).toBe(true);
  }, 300_000);
});
