import * as fs from 'node:fs';
import * as path from 'node:path';
import { ConfigurationError, FormatError } from './errors.js';

export const DATASET_FORMAT_VERSION = 1;
export const METADATA_NAME = 'metadata.json';
export const CHANNELS_NAME = 'channels.bin';

/** Timing facts the loss needs, derived from the dataset's config echo. */
export interface GridInfo {
  /** Channel bandwidth in Hz; the sinc pulse argument is B*(t - tau). */
  bandwidthHz: number;
  /** Tap period 1/B in seconds. */
  samplePeriodS: number;
  /** Delay-grid spacing in seconds; grid time k is (k+1) steps. */
  gridStepS: number;
  /** Largest representable delay in seconds. */
  maxDelayS: number;
}

export interface DatasetMetadata {
  nChannels: number;
  window: number;
  spec: Record<string, unknown>;
  config: Record<string, unknown>;
  grid: GridInfo;
}

/** One decoded channel: ground-truth paths plus the complex response. */
export interface ChannelRecord {
  index: number;
  order: number;
  delays: Float64Array;
  amps: Float64Array;
  phases: Float64Array;
  re: Float64Array;
  im: Float64Array;
}

// Path counts beyond this are not a plausible record header; treat as
// corruption rather than trying to allocate from a garbage length.
const MAX_PLAUSIBLE_ORDER = 64;

function requireNumber(obj: Record<string, unknown>, key: string): number {
  const v = obj[key];
  if (typeof v !== 'number' || !Number.isFinite(v)) {
    throw new FormatError(`dataset config lacks numeric ${JSON.stringify(key)}`);
  }
  return v;
}

export function readMetadata(datasetDir: string): DatasetMetadata {
  const metaPath = path.join(datasetDir, METADATA_NAME);
  let raw: string;
  try {
    raw = fs.readFileSync(metaPath, 'utf-8');
  } catch {
    throw new FormatError(`${datasetDir} holds no dataset metadata`);
  }
  let meta: Record<string, unknown>;
  try {
    meta = JSON.parse(raw) as Record<string, unknown>;
  } catch (exc) {
    throw new FormatError(`dataset metadata is not valid JSON: ${exc}`);
  }
  for (const key of ['format_version', 'n_channels', 'window', 'spec', 'config']) {
    if (!(key in meta)) {
      throw new FormatError(`dataset metadata lacks ${JSON.stringify(key)}`);
    }
  }
  if (meta['format_version'] !== DATASET_FORMAT_VERSION) {
    throw new FormatError(`unsupported dataset format version ${meta['format_version']}`);
  }
  const config = meta['config'] as Record<string, unknown>;
  const bandwidthHz = requireNumber(config, 'bandwidth_hz');
  const nSt = requireNumber(config, 'n_st');
  const mPrb = requireNumber(config, 'm_prb');
  const samplePeriodS = 1 / bandwidthHz;
  return {
    nChannels: requireNumber(meta as Record<string, unknown>, 'n_channels'),
    window: requireNumber(meta as Record<string, unknown>, 'window'),
    spec: meta['spec'] as Record<string, unknown>,
    config,
    grid: {
      bandwidthHz,
      samplePeriodS,
      gridStepS: samplePeriodS / nSt,
      maxDelayS: mPrb * samplePeriodS,
    },
  };
}

/**
 * Decode channel records from the binary layout: per channel a uint32
 * path count L, then L little-endian float64 triples (delay_s, amp,
 * phase_rad), then window*2 interleaved float64 re/im samples.
 *
 * The float64 runs start 4 bytes past alignment, so values go through
 * DataView rather than typed-array views.
 */
export function decodeChannels(buf: ArrayBuffer, window: number,
                               expected: number, maxChannels?: number): ChannelRecord[] {
  const view = new DataView(buf);
  const records: ChannelRecord[] = [];
  const limit = maxChannels === undefined ? expected : Math.min(expected, maxChannels);
  let off = 0;
  while (records.length < limit) {
    if (off + 4 > buf.byteLength) {
      throw new FormatError(
        `channel file ends after ${records.length} of ${expected} records`);
    }
    const order = view.getUint32(off, true);
    off += 4;
    if (order < 1 || order > MAX_PLAUSIBLE_ORDER) {
      throw new FormatError(`record ${records.length} has implausible path count ${order}`);
    }
    const need = 8 * (3 * order + 2 * window);
    if (off + need > buf.byteLength) {
      throw new FormatError(`record ${records.length} is truncated`);
    }
    const delays = new Float64Array(order);
    const amps = new Float64Array(order);
    const phases = new Float64Array(order);
    for (let l = 0; l < order; l++) {
      delays[l] = view.getFloat64(off, true);
      amps[l] = view.getFloat64(off + 8, true);
      phases[l] = view.getFloat64(off + 16, true);
      off += 24;
    }
    const re = new Float64Array(window);
    const im = new Float64Array(window);
    for (let k = 0; k < window; k++) {
      re[k] = view.getFloat64(off, true);
      im[k] = view.getFloat64(off + 8, true);
      off += 16;
    }
    records.push({ index: records.length, order, delays, amps, phases, re, im });
  }
  return records;
}

export function readDataset(datasetDir: string,
                            maxChannels?: number): { meta: DatasetMetadata; records: ChannelRecord[] } {
  const meta = readMetadata(datasetDir);
  const binPath = path.join(datasetDir, CHANNELS_NAME);
  let buf: Buffer;
  try {
    buf = fs.readFileSync(binPath);
  } catch {
    throw new FormatError(`${datasetDir} holds no channel records`);
  }
  const ab = new ArrayBuffer(buf.byteLength);
  new Uint8Array(ab).set(buf);
  const records = decodeChannels(ab, meta.window, meta.nChannels, maxChannels);
  return { meta, records };
}

/**
 * Network input encoding: (window, 2) rows of (magnitude, phase), phase
 * of an exactly zero sample defined as zero. Row-major Float32Array.
 */
export function prepareInput(rec: ChannelRecord, window: number): Float32Array {
  if (rec.re.length < window) {
    throw new ConfigurationError(
      `record has ${rec.re.length} taps, input window needs ${window}`);
  }
  const out = new Float32Array(window * 2);
  for (let k = 0; k < window; k++) {
    const mag = Math.hypot(rec.re[k], rec.im[k]);
    out[2 * k] = mag;
    out[2 * k + 1] = mag > 0 ? Math.atan2(rec.im[k], rec.re[k]) : 0;
  }
  return out;
}

/**
 * Training targets: delay-sorted (tau/T_s, alpha, phi/pi) triples.
 * Phases are stored in [0, 2pi), so phi/pi lands in [0, 2).
 */
export function encodeTargets(rec: ChannelRecord, samplePeriodS: number): Float32Array {
  const order = rec.order;
  const idx = Array.from({ length: order }, (_, i) => i);
  idx.sort((a, b) => rec.delays[a] - rec.delays[b]);
  const out = new Float32Array(3 * order);
  for (let i = 0; i < order; i++) {
    const l = idx[i];
    out[3 * i] = rec.delays[l] / samplePeriodS;
    out[3 * i + 1] = rec.amps[l];
    out[3 * i + 2] = rec.phases[l] / Math.PI;
  }
  return out;
}

/** Magnitude profile of the stored response, the reconstruction target. */
export function magnitudeProfile(rec: ChannelRecord, window: number): Float32Array {
  const out = new Float32Array(window);
  for (let k = 0; k < window; k++) {
    out[k] = Math.hypot(rec.re[k], rec.im[k]);
  }
  return out;
}

/** Deterministic 32-bit PRNG for shuffles and synthetic inputs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function shuffled(n: number, rand: () => number): number[] {
  const idx = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [idx[i], idx[j]] = [idx[j], idx[i]];
  }
  return idx;
}

/** Seed-deterministic train/held-out split over channel indices. */
export function splitIndices(n: number, heldFraction: number,
                             seed: number): { train: number[]; held: number[] } {
  const idx = shuffled(n, mulberry32(seed ^ 0x5eed));
  const nHeld = Math.round(n * heldFraction);
  return { held: idx.slice(0, nHeld).sort((a, b) => a - b),
           train: idx.slice(nHeld).sort((a, b) => a - b) };
}
