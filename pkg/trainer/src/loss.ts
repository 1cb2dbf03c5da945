import * as tf from '@tensorflow/tfjs';
import { GridInfo } from './dataset.js';

// Smoothing inside the magnitude so the loss stays differentiable where
// the complex field crosses zero.
export const MAG_EPSILON = 1e-12;

/**
 * sin(pi x)/(pi x) with the removable singularity filled in.
 *
 * Branchless on purpose: comparison ops have no registered gradient, so
 * the zero mask comes from 1 - |sign(px)| (exactly 1 where px == 0 and
 * differentiable with zero gradient everywhere).
 */
export function sinc(x: tf.Tensor): tf.Tensor {
  return tf.tidy(() => {
    const px = tf.mul(x, Math.PI);
    const mask = tf.sub(1, tf.abs(tf.sign(px)));
    const safe = tf.add(px, mask);
    const ratio = tf.div(tf.sin(safe), safe);
    return tf.add(tf.mul(tf.sub(1, mask), ratio), mask);
  });
}

/** Delay-grid sample times (k+1)*gridStep for the first `window` taps. */
export function gridTimes(grid: GridInfo, window: number): tf.Tensor1D {
  const t = new Float32Array(window);
  for (let k = 0; k < window; k++) {
    t[k] = (k + 1) * grid.gridStepS;
  }
  return tf.tensor1d(t);
}

/**
 * Magnitude profile synthesized from encoded network outputs.
 *
 * Unlike the consumer's lattice reconstruction this one is unquantized
 * and smooth: parameters feed band-limited pulses directly and the
 * modulus is sqrt(re^2 + im^2 + eps), so every output has a gradient.
 *
 * The consumer's decoder clamps amplitudes at zero and delays into the
 * representable span, so the same clamps apply here (as relu/clip, with
 * the mean-absolute parameter term still pulling clamped outputs back
 * toward their targets). Without them the head drifts into the
 * (-alpha, phi+pi) mirror parameterization, which synthesizes the same
 * field in training and a missing path after decode.
 *
 * `pred` is (batch, 3L) of (tau/T_s, alpha, phi/pi) triples; the result
 * is (batch, window).
 */
export function reconstructMagnitude(pred: tf.Tensor2D, tGrid: tf.Tensor1D,
                                     grid: GridInfo): tf.Tensor2D {
  return tf.tidy(() => {
    const batch = pred.shape[0];
    const order = Math.floor(pred.shape[1] / 3);
    const trip = tf.reshape(pred, [batch, order, 3]);
    const tau = tf.clipByValue(
      tf.mul(tf.slice(trip, [0, 0, 0], [batch, order, 1]), grid.samplePeriodS),
      0, grid.maxDelayS);
    const alpha = tf.relu(tf.slice(trip, [0, 0, 1], [batch, order, 1]));
    const phi = tf.mul(tf.slice(trip, [0, 0, 2], [batch, order, 1]), Math.PI);
    const t = tf.reshape(tGrid, [1, 1, -1]);
    const pulse = sinc(tf.mul(tf.sub(t, tau), grid.bandwidthHz));
    const re = tf.sum(tf.mul(tf.mul(alpha, tf.cos(phi)), pulse), 1);
    const im = tf.sum(tf.mul(tf.mul(alpha, tf.sin(phi)), pulse), 1);
    const power = tf.add(tf.add(tf.square(re), tf.square(im)), MAG_EPSILON);
    return tf.sqrt(power) as tf.Tensor2D;
  });
}

/** Mean absolute error over all encoded outputs in the batch. */
export function parameterTerm(pred: tf.Tensor2D, target: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => tf.mean(tf.abs(tf.sub(pred, target))) as tf.Scalar);
}

/**
 * Batch-mean normalized squared profile error: per sample the windowed
 * squared difference divided by the true profile energy. This is the
 * training-time counterpart of the consumer's profiling loss.
 */
export function profileTerm(predMag: tf.Tensor2D, truthMag: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const err = tf.sum(tf.square(tf.sub(truthMag, predMag)), 1);
    const energy = tf.sum(tf.square(truthMag), 1);
    return tf.mean(tf.div(err, energy)) as tf.Scalar;
  });
}

/** Composite objective: parameter MAE plus beta times the profile term. */
export function compositeLoss(pred: tf.Tensor2D, target: tf.Tensor2D,
                              truthMag: tf.Tensor2D, tGrid: tf.Tensor1D,
                              grid: GridInfo, beta: number): tf.Scalar {
  return tf.tidy(() => {
    const mae = parameterTerm(pred, target);
    if (beta === 0) {
      return mae;
    }
    const recon = reconstructMagnitude(pred, tGrid, grid);
    return tf.add(mae, tf.mul(profileTerm(recon, truthMag), beta)) as tf.Scalar;
  });
}
