import { ConfigurationError } from './errors.js';

export const ARCH_CONV_INIT = 'mpc-start-v1';

/** Training hyperparameters. Defaults follow the published setup. */
export interface TrainConfig {
  learningRate: number;
  /** Weight of the profile-reconstruction term in the composite loss. */
  beta: number;
  epochs: number;
  batchSize: number;
  rngSeed: number;
  architectureId: string;
  /** Fraction of channels held out of training for validation. */
  heldFraction: number;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  learningRate: 2e-3,
  beta: 10,
  epochs: 40,
  batchSize: 32,
  rngSeed: 1,
  architectureId: ARCH_CONV_INIT,
  heldFraction: 0.1,
};

export function makeTrainConfig(overrides: Partial<TrainConfig> = {}): TrainConfig {
  const cfg = { ...DEFAULT_TRAIN_CONFIG };
  for (const [key, value] of Object.entries(overrides)) {
    if (value !== undefined) {
      (cfg as unknown as Record<string, unknown>)[key] = value;
    }
  }
  validateTrainConfig(cfg);
  return cfg;
}

export function validateTrainConfig(cfg: TrainConfig): void {
  if (!(cfg.learningRate > 0)) {
    throw new ConfigurationError(`learningRate must be > 0, got ${cfg.learningRate}`);
  }
  if (!(cfg.beta >= 0)) {
    throw new ConfigurationError(`beta must be >= 0, got ${cfg.beta}`);
  }
  if (!Number.isInteger(cfg.epochs) || cfg.epochs < 1) {
    throw new ConfigurationError(`epochs must be a positive integer, got ${cfg.epochs}`);
  }
  if (!Number.isInteger(cfg.batchSize) || cfg.batchSize < 1) {
    throw new ConfigurationError(`batchSize must be a positive integer, got ${cfg.batchSize}`);
  }
  if (!Number.isInteger(cfg.rngSeed)) {
    throw new ConfigurationError(`rngSeed must be an integer, got ${cfg.rngSeed}`);
  }
  if (cfg.architectureId !== ARCH_CONV_INIT) {
    throw new ConfigurationError(
      `unsupported architecture ${JSON.stringify(cfg.architectureId)}`);
  }
  if (!(cfg.heldFraction >= 0 && cfg.heldFraction < 1)) {
    throw new ConfigurationError(`heldFraction must be in [0, 1), got ${cfg.heldFraction}`);
  }
}
