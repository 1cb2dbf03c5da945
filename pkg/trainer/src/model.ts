import * as tf from '@tensorflow/tfjs';
import { ConfigurationError } from './errors.js';

export const CONV_FILTERS = 12;
export const CONV_WIDTH = 3;
export const POOL_1 = 2;
export const POOL_2 = 4;
export const DENSE_WIDTH = 50;

/**
 * Expected tensor names and shapes, in bundle order. Convolution kernels
 * are (width, in_channels, out_channels); dense kernels (in, out).
 */
export function archShapes(inputWindow: number,
                           modelOrder: number): Array<[string, number[]]> {
  const pooled = Math.floor(Math.floor(inputWindow / POOL_1) / POOL_2);
  if (pooled < 1) {
    throw new ConfigurationError(
      `input window ${inputWindow} collapses to nothing after pooling`);
  }
  const flat = pooled * CONV_FILTERS;
  return [
    ['conv1/kernel', [CONV_WIDTH, 2, CONV_FILTERS]],
    ['conv1/bias', [CONV_FILTERS]],
    ['conv2/kernel', [CONV_WIDTH, CONV_FILTERS, CONV_FILTERS]],
    ['conv2/bias', [CONV_FILTERS]],
    ['dense1/kernel', [flat, DENSE_WIDTH]],
    ['dense1/bias', [DENSE_WIDTH]],
    ['dense2/kernel', [DENSE_WIDTH, DENSE_WIDTH]],
    ['dense2/bias', [DENSE_WIDTH]],
    ['head/kernel', [DENSE_WIDTH, 3 * modelOrder]],
    ['head/bias', [3 * modelOrder]],
  ];
}

/**
 * The starting-point network: two same-padded width-3 convolutions with
 * non-overlapping pooling, two dense layers, and a linear head emitting
 * (tau/T_s, alpha, phi/pi) per path. Initialization is seeded so runs
 * are reproducible.
 */
export function buildStartModel(inputWindow: number, modelOrder: number,
                                seed: number): tf.Sequential {
  archShapes(inputWindow, modelOrder); // validates the pooling chain
  const model = tf.sequential();
  model.add(tf.layers.conv1d({
    name: 'conv1', filters: CONV_FILTERS, kernelSize: CONV_WIDTH,
    padding: 'same', activation: 'relu', inputShape: [inputWindow, 2],
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed }),
  }));
  model.add(tf.layers.maxPooling1d({ poolSize: POOL_1, strides: POOL_1 }));
  model.add(tf.layers.conv1d({
    name: 'conv2', filters: CONV_FILTERS, kernelSize: CONV_WIDTH,
    padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
  }));
  model.add(tf.layers.maxPooling1d({ poolSize: POOL_2, strides: POOL_2 }));
  model.add(tf.layers.flatten());
  model.add(tf.layers.dense({
    name: 'dense1', units: DENSE_WIDTH, activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 2 }),
  }));
  model.add(tf.layers.dense({
    name: 'dense2', units: DENSE_WIDTH, activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 3 }),
  }));
  model.add(tf.layers.dense({
    name: 'head', units: 3 * modelOrder,
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 4 }),
  }));
  return model;
}

const LAYER_NAMES = ['conv1', 'conv2', 'dense1', 'dense2', 'head'];

/** Named weight tensors in bundle order (kernel then bias per layer). */
export function modelTensors(model: tf.LayersModel): Map<string, tf.Tensor> {
  const out = new Map<string, tf.Tensor>();
  for (const name of LAYER_NAMES) {
    const layer = model.getLayer(name);
    const [kernel, bias] = layer.getWeights();
    out.set(`${name}/kernel`, kernel);
    out.set(`${name}/bias`, bias);
  }
  return out;
}

/** Load bundle-order tensors back into a freshly built model. */
export function setModelTensors(model: tf.LayersModel,
                                tensors: Map<string, tf.Tensor>): void {
  for (const name of LAYER_NAMES) {
    const kernel = tensors.get(`${name}/kernel`);
    const bias = tensors.get(`${name}/bias`);
    if (kernel === undefined || bias === undefined) {
      throw new ConfigurationError(`tensor set lacks ${name} kernel or bias`);
    }
    model.getLayer(name).setWeights([kernel, bias]);
  }
}
