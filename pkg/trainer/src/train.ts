import * as fs from 'node:fs';
import * as tf from '@tensorflow/tfjs';
import { TrainConfig, validateTrainConfig } from './config.js';
import {
  ChannelRecord, DatasetMetadata, encodeTargets, magnitudeProfile,
  mulberry32, prepareInput, readDataset, shuffled, splitIndices,
} from './dataset.js';
import { Bundle, writeBundle } from './bundle.js';
import { compositeLoss, gridTimes } from './loss.js';
import { buildStartModel, modelTensors } from './model.js';
import { ConfigurationError, NumericError } from './errors.js';

export interface EpochEntry {
  epoch: number;
  trainLoss: number;
  valLoss: number | null;
}

export interface TrainResult {
  model: tf.Sequential;
  log: EpochEntry[];
  trainIndices: number[];
  heldIndices: number[];
  meta: DatasetMetadata;
  modelOrder: number;
  inputWindow: number;
}

function inferOrder(records: ChannelRecord[], expected?: number): number {
  if (records.length === 0) {
    throw new ConfigurationError('cannot train on an empty dataset');
  }
  const order = expected ?? records[0].order;
  for (const rec of records) {
    if (rec.order !== order) {
      throw new ConfigurationError(
        `dataset and network disagree on the path count: record ${rec.index} ` +
        `has ${rec.order} paths, the head is sized for ${order}`);
    }
  }
  return order;
}

/** Stack per-record encodings into the three training tensors. */
function buildTensors(records: ChannelRecord[], window: number,
                      samplePeriodS: number,
                      order: number): { x: tf.Tensor3D; y: tf.Tensor2D; p: tf.Tensor2D } {
  const n = records.length;
  const xs = new Float32Array(n * window * 2);
  const ys = new Float32Array(n * 3 * order);
  const ps = new Float32Array(n * window);
  for (let i = 0; i < n; i++) {
    xs.set(prepareInput(records[i], window), i * window * 2);
    ys.set(encodeTargets(records[i], samplePeriodS), i * 3 * order);
    ps.set(magnitudeProfile(records[i], window), i * window);
  }
  return {
    x: tf.tensor3d(xs, [n, window, 2]),
    y: tf.tensor2d(ys, [n, 3 * order]),
    p: tf.tensor2d(ps, [n, window]),
  };
}

/**
 * Train the starting-point network on decoded channel records.
 *
 * Deterministic for a given config: the model initialization, the
 * train/held split and every shuffle derive from cfg.rngSeed.
 */
export function trainOnRecords(records: ChannelRecord[], meta: DatasetMetadata,
                               cfg: TrainConfig,
                               expectedOrder?: number): TrainResult {
  validateTrainConfig(cfg);
  const order = inferOrder(records, expectedOrder);
  const window = meta.window;
  const { train, held } = splitIndices(records.length, cfg.heldFraction, cfg.rngSeed);
  if (train.length === 0) {
    throw new ConfigurationError('held-out split leaves no training channels');
  }
  const trainRecs = train.map((i) => records[i]);
  const heldRecs = held.map((i) => records[i]);

  const model = buildStartModel(window, order, cfg.rngSeed);
  const optimizer = tf.train.adam(cfg.learningRate);
  const tGrid = gridTimes(meta.grid, window);
  const t = buildTensors(trainRecs, window, meta.grid.samplePeriodS, order);
  const v = heldRecs.length > 0
    ? buildTensors(heldRecs, window, meta.grid.samplePeriodS, order)
    : null;

  const log: EpochEntry[] = [];
  const shuffleRand = mulberry32(cfg.rngSeed ^ 0x7a31);
  try {
    for (let epoch = 1; epoch <= cfg.epochs; epoch++) {
      const perm = shuffled(trainRecs.length, shuffleRand);
      let lossSum = 0;
      for (let start = 0; start < perm.length; start += cfg.batchSize) {
        const ids = perm.slice(start, start + cfg.batchSize);
        const cost = optimizer.minimize(() => {
          const sel = tf.tensor1d(ids, 'int32');
          const xb = tf.gather(t.x, sel);
          const yb = tf.gather(t.y, sel);
          const pb = tf.gather(t.p, sel);
          const pred = model.apply(xb, { training: true }) as tf.Tensor2D;
          return compositeLoss(pred, yb, pb, tGrid, meta.grid, cfg.beta);
        }, true);
        const value = cost!.dataSync()[0];
        cost!.dispose();
        if (!Number.isFinite(value)) {
          throw new NumericError(`training loss diverged at epoch ${epoch}`);
        }
        lossSum += value * ids.length;
      }
      const trainLoss = lossSum / trainRecs.length;
      let valLoss: number | null = null;
      if (v !== null) {
        valLoss = tf.tidy(() => {
          const pred = model.apply(v.x) as tf.Tensor2D;
          return compositeLoss(pred, v.y, v.p, tGrid, meta.grid, cfg.beta).dataSync()[0];
        });
      }
      log.push({ epoch, trainLoss, valLoss });
    }
  } finally {
    t.x.dispose(); t.y.dispose(); t.p.dispose();
    if (v !== null) { v.x.dispose(); v.y.dispose(); v.p.dispose(); }
    tGrid.dispose();
    optimizer.dispose();
  }
  return {
    model, log, trainIndices: train, heldIndices: held, meta,
    modelOrder: order, inputWindow: window,
  };
}

/** File-level entry point: read a generated dataset directory and train. */
export function trainOnDataset(datasetDir: string, cfg: TrainConfig,
                               maxChannels?: number,
                               expectedOrder?: number): TrainResult {
  const { meta, records } = readDataset(datasetDir, maxChannels);
  return trainOnRecords(records, meta, cfg, expectedOrder);
}

/** Per-epoch loss log as CSV. */
export function writeLossCsv(log: EpochEntry[], filePath: string): void {
  const lines = ['epoch,train_loss,val_loss'];
  for (const entry of log) {
    const val = entry.valLoss === null ? '' : entry.valLoss.toPrecision(9);
    lines.push(`${entry.epoch},${entry.trainLoss.toPrecision(9)},${val}`);
  }
  fs.writeFileSync(filePath, lines.join('\n') + '\n');
}

/** Export the trained weights as a consumer-ready bundle file. */
export function exportTrained(result: TrainResult, filePath: string,
                              extra: Record<string, unknown> = {}): void {
  const tensors = new Map<string, { shape: number[]; data: Float32Array }>();
  for (const [name, tensor] of modelTensors(result.model)) {
    tensors.set(name, {
      shape: tensor.shape.slice(),
      data: tensor.dataSync() as Float32Array,
    });
  }
  const bundle: Bundle = {
    architectureId: 'mpc-start-v1',
    modelOrder: result.modelOrder,
    inputWindow: result.inputWindow,
    tensors,
    extra,
  };
  writeBundle(bundle, filePath);
}
