import * as fs from 'node:fs';
import * as path from 'node:path';
import { FormatError } from './errors.js';
import { ARCH_CONV_INIT } from './config.js';
import { archShapes } from './model.js';

export const MAGIC = 'MPCWGT01';
export const BUNDLE_FORMAT_VERSION = 1;

export interface BundleTensor {
  shape: number[];
  data: Float32Array;
}

export interface Bundle {
  architectureId: string;
  modelOrder: number;
  inputWindow: number;
  /** Insertion order is the blob layout order. */
  tensors: Map<string, BundleTensor>;
  extra: Record<string, unknown>;
}

function shapeCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/**
 * Refuse export unless every tensor in the architecture's shape chain is
 * present with exactly the declared shape. A bundle that fails here
 * would be rejected by the consumer anyway; failing early keeps the
 * broken state out of the artifact directory.
 */
export function validateBundle(bundle: Bundle): void {
  if (bundle.architectureId !== ARCH_CONV_INIT) {
    throw new FormatError(`unknown architecture ${JSON.stringify(bundle.architectureId)}`);
  }
  for (const [name, shape] of archShapes(bundle.inputWindow, bundle.modelOrder)) {
    const t = bundle.tensors.get(name);
    if (t === undefined) {
      throw new FormatError(`bundle is missing tensor ${JSON.stringify(name)}`);
    }
    if (t.shape.length !== shape.length || t.shape.some((v, i) => v !== shape[i])) {
      throw new FormatError(
        `tensor ${JSON.stringify(name)} has shape [${t.shape}], expected [${shape}]`);
    }
    if (t.data.length !== shapeCount(shape)) {
      throw new FormatError(
        `tensor ${JSON.stringify(name)} holds ${t.data.length} values, ` +
        `shape [${shape}] needs ${shapeCount(shape)}`);
    }
  }
}

/** Serialize a validated bundle: magic, header length, JSON, f32 blob. */
export function encodeBundle(bundle: Bundle): Buffer {
  validateBundle(bundle);
  const layers: Array<Record<string, unknown>> = [];
  const chunks: Buffer[] = [];
  let offset = 0;
  for (const [name, t] of bundle.tensors) {
    const bytes = Buffer.from(t.data.buffer, t.data.byteOffset, t.data.byteLength);
    layers.push({ name, shape: t.shape, offset, size: t.data.byteLength });
    chunks.push(bytes);
    offset += t.data.byteLength;
  }
  const header = Buffer.from(JSON.stringify({
    format_version: BUNDLE_FORMAT_VERSION,
    architecture_id: bundle.architectureId,
    model_order: bundle.modelOrder,
    input_window: bundle.inputWindow,
    layers,
    ...bundle.extra,
  }), 'utf-8');
  const prefix = Buffer.alloc(16);
  prefix.write(MAGIC, 0, 'ascii');
  prefix.writeBigUInt64LE(BigInt(header.length), 8);
  return Buffer.concat([prefix, header, ...chunks]);
}

/** Atomic write: temp file in the target directory, then rename. */
export function writeBundle(bundle: Bundle, filePath: string): void {
  const payload = encodeBundle(bundle);
  const dir = path.dirname(path.resolve(filePath));
  const tmp = path.join(dir, `.bundle-${process.pid}-${Date.now()}.tmp`);
  fs.writeFileSync(tmp, payload);
  try {
    fs.renameSync(tmp, filePath);
  } catch (exc) {
    fs.rmSync(tmp, { force: true });
    throw exc;
  }
}

export function readBundle(filePath: string): Bundle {
  const raw = fs.readFileSync(filePath);
  if (raw.length < 16 || raw.toString('ascii', 0, 8) !== MAGIC) {
    throw new FormatError(`${filePath} is not a weight bundle (bad magic)`);
  }
  const headerLen = Number(raw.readBigUInt64LE(8));
  if (16 + headerLen > raw.length) {
    throw new FormatError('weight bundle header overruns the file');
  }
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(raw.toString('utf-8', 16, 16 + headerLen)) as Record<string, unknown>;
  } catch (exc) {
    throw new FormatError(`weight bundle header is not valid JSON: ${exc}`);
  }
  for (const key of ['format_version', 'architecture_id', 'model_order',
                     'input_window', 'layers']) {
    if (!(key in header)) {
      throw new FormatError(`weight bundle header lacks ${JSON.stringify(key)}`);
    }
  }
  if (header['format_version'] !== BUNDLE_FORMAT_VERSION) {
    throw new FormatError(`unsupported bundle format version ${header['format_version']}`);
  }
  const blobStart = 16 + headerLen;
  const tensors = new Map<string, BundleTensor>();
  for (const layer of header['layers'] as Array<Record<string, unknown>>) {
    const name = String(layer['name']);
    const shape = (layer['shape'] as number[]).map((v) => Number(v));
    const offset = Number(layer['offset']);
    const count = shapeCount(shape);
    if (offset < 0 || blobStart + offset + 4 * count > raw.length) {
      throw new FormatError(`tensor ${JSON.stringify(name)} overruns the weight blob`);
    }
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = raw.readFloatLE(blobStart + offset + 4 * i);
    }
    tensors.set(name, { shape, data });
  }
  const known = new Set(['format_version', 'architecture_id', 'model_order',
                         'input_window', 'layers']);
  const extra: Record<string, unknown> = {};
  for (const [k, v] of Object.entries(header)) {
    if (!known.has(k)) extra[k] = v;
  }
  return {
    architectureId: String(header['architecture_id']),
    modelOrder: Number(header['model_order']),
    inputWindow: Number(header['input_window']),
    tensors,
    extra,
  };
}
