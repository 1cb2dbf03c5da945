import * as tf from '@tensorflow/tfjs';
import { NumericError } from './errors.js';
import { GridInfo } from './dataset.js';

export interface DecodedParams {
  delays: Float64Array;
  amps: Float64Array;
  phases: Float64Array;
}

const TWO_PI = 2 * Math.PI;

function wrapPhase(x: number): number {
  return ((x % TWO_PI) + TWO_PI) % TWO_PI;
}

// Largest double strictly below x (positive x): one bit down.
function nextBelow(x: number): number {
  const view = new DataView(new ArrayBuffer(8));
  view.setFloat64(0, x);
  view.setBigUint64(0, view.getBigUint64(0) - 1n);
  return view.getFloat64(0);
}

/**
 * Decode raw head outputs the same way the consumer does: per path
 * (tau/T_s, alpha, phi/pi), delays clamped into the representable span,
 * amplitudes floored at zero, phases wrapped, paths sorted by delay.
 */
export function decodeParams(raw: Float32Array | number[],
                             grid: GridInfo): DecodedParams {
  const values = Array.from(raw, Number);
  if (values.some((v) => !Number.isFinite(v))) {
    throw new NumericError('network produced non-finite outputs');
  }
  if (values.length % 3 !== 0) {
    throw new NumericError('network output length is not a multiple of 3');
  }
  const order = values.length / 3;
  const delayCap = nextBelow(grid.maxDelayS);
  const rows: Array<[number, number, number]> = [];
  for (let l = 0; l < order; l++) {
    const delay = Math.min(Math.max(values[3 * l] * grid.samplePeriodS, 0), delayCap);
    const amp = Math.max(values[3 * l + 1], 0);
    const phase = wrapPhase(values[3 * l + 2] * Math.PI);
    rows.push([delay, amp, phase]);
  }
  rows.sort((a, b) => a[0] - b[0]);
  return {
    delays: Float64Array.from(rows, (r) => r[0]),
    amps: Float64Array.from(rows, (r) => r[1]),
    phases: Float64Array.from(rows, (r) => r[2]),
  };
}

/** Forward pass for one encoded input window; returns the raw triples. */
export function forwardOne(model: tf.LayersModel, input: Float32Array,
                           window: number): Float32Array {
  return tf.tidy(() => {
    const x = tf.tensor3d(input, [1, window, 2]);
    const y = model.apply(x) as tf.Tensor2D;
    return y.dataSync() as Float32Array;
  });
}
