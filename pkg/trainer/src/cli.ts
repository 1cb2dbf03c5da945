import * as fs from 'node:fs';
import { pathToFileURL } from 'node:url';
import { parseArgs } from 'node:util';
import { makeTrainConfig } from './config.js';
import { ConfigurationError, FormatError, NumericError } from './errors.js';
import { exportTrained, trainOnDataset, writeLossCsv } from './train.js';

const USAGE = `usage: trainer train --dataset DIR --out BUNDLE [options]

options:
  --loss-csv PATH       per-epoch loss log (default: alongside the bundle)
  --epochs N            training epochs (default 40)
  --batch-size N        minibatch size (default 32)
  --learning-rate X     Adam step size (default 2e-3)
  --beta X              profile-term weight (default 10)
  --seed N              RNG seed for init, split and shuffles (default 1)
  --held-fraction X     held-out validation fraction (default 0.1)
  --limit N             train on the first N channels only
  --order L             require this path count (refuse mismatched data)
  --force               overwrite existing outputs
`;

function fail(code: number, message: string): never {
  process.stderr.write(message.endsWith('\n') ? message : message + '\n');
  process.exit(code);
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] === '-h' || argv[0] === '--help') {
    process.stdout.write(USAGE);
    return argv.length === 0 ? 2 : 0;
  }
  if (argv[0] !== 'train') {
    fail(2, `unknown command ${JSON.stringify(argv[0])}\n${USAGE}`);
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        dataset: { type: 'string' },
        out: { type: 'string' },
        'loss-csv': { type: 'string' },
        epochs: { type: 'string' },
        'batch-size': { type: 'string' },
        'learning-rate': { type: 'string' },
        beta: { type: 'string' },
        seed: { type: 'string' },
        'held-fraction': { type: 'string' },
        limit: { type: 'string' },
        order: { type: 'string' },
        force: { type: 'boolean', default: false },
      },
      allowPositionals: false,
    });
  } catch (exc) {
    fail(2, `${exc}\n${USAGE}`);
  }
  const opts = parsed.values;
  if (!opts.dataset || !opts.out) {
    fail(2, `train needs --dataset and --out\n${USAGE}`);
  }
  const num = (name: string, value: string | undefined): number | undefined => {
    if (value === undefined) return undefined;
    const v = Number(value);
    if (!Number.isFinite(v)) fail(2, `--${name} expects a number, got ${value}`);
    return v;
  };

  const lossCsv = opts['loss-csv'] ?? opts.out.replace(/(\.[^./\\]*)?$/, '') + '-loss.csv';
  if (!opts.force) {
    for (const p of [opts.out, lossCsv]) {
      if (fs.existsSync(p)) {
        fail(2, `${p} exists (use --force to overwrite)`);
      }
    }
  }

  try {
    const cfg = makeTrainConfig({
      epochs: num('epochs', opts.epochs),
      batchSize: num('batch-size', opts['batch-size']),
      learningRate: num('learning-rate', opts['learning-rate']),
      beta: num('beta', opts.beta),
      rngSeed: num('seed', opts.seed),
      heldFraction: num('held-fraction', opts['held-fraction']),
    });
    const limit = num('limit', opts.limit);
    const order = num('order', opts.order);
    const result = trainOnDataset(opts.dataset, cfg, limit, order);
    exportTrained(result, opts.out, {
      trained_epochs: cfg.epochs,
      held_indices: result.heldIndices,
      rng_seed: cfg.rngSeed,
    });
    writeLossCsv(result.log, lossCsv);
    const last = result.log[result.log.length - 1];
    process.stdout.write(
      `trained ${result.trainIndices.length} channels for ${cfg.epochs} epochs, ` +
      `final loss ${last.trainLoss.toPrecision(6)}` +
      (last.valLoss === null ? '' : ` (val ${last.valLoss.toPrecision(6)})`) +
      `\nwrote ${opts.out} and ${lossCsv}\n`);
    result.model.dispose();
    return 0;
  } catch (exc) {
    if (exc instanceof ConfigurationError) fail(2, `error: ${exc.message}`);
    if (exc instanceof FormatError || exc instanceof NumericError) {
      fail(3, `error: ${exc.message}`);
    }
    throw exc;
  }
}

if (process.argv[1] !== undefined
    && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
