/** Error taxonomy mirroring the estimator package's split. */

/** Malformed or truncated files: datasets, weight bundles, CSV logs. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'FormatError';
  }
}

/** Inconsistent or out-of-range configuration and shape mismatches. */
export class ConfigurationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'ConfigurationError';
  }
}

/** Non-finite values where finite numbers are required. */
export class NumericError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'NumericError';
  }
}
