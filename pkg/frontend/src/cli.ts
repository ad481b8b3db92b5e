/**
 * Export CLI.
 *
 *   node dist/cli.js weights       --config nano|b0 --out weights.cqwa [--seed N]
 *   node dist/cli.js fixture       --config nano|b0 --out DIR [--input-size N] [--seed N]
 *   node dist/cli.js feature-cache --model efficientnet-b0|resnet18|mobilenet-v2
 *                                  --manifest manifest.csv --out cache.cqwa [--seed N]
 */

import {
  DEFAULT_SEED,
  ModelName,
  exportFeatureCache,
  exportFixture,
  exportWeights,
} from "./export";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got ${key}`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (!value) {
    throw new Error(`missing required flag --${name}`);
  }
  return value;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  const flags = parseFlags(rest);
  const seed = flags.has("seed") ? BigInt(flags.get("seed")!) : DEFAULT_SEED;

  if (command === "weights") {
    exportWeights(flags.get("config") ?? "b0", required(flags, "out"), seed);
    console.log(`wrote ${flags.get("out")}`);
    return 0;
  }
  if (command === "fixture") {
    const inputSize = flags.has("input-size") ? Number(flags.get("input-size")) : 64;
    exportFixture(flags.get("config") ?? "nano", required(flags, "out"), inputSize, seed);
    console.log(`wrote fixture (config.json, weights.cqwa, input.cqwa, reference.cqwa) to ${flags.get("out")}`);
    return 0;
  }
  if (command === "feature-cache") {
    const model = required(flags, "model") as ModelName;
    if (!["efficientnet-b0", "resnet18", "mobilenet-v2"].includes(model)) {
      throw new Error(`unknown model ${model}`);
    }
    const { rows, dim } = exportFeatureCache(model, required(flags, "manifest"), required(flags, "out"), seed);
    console.log(`wrote ${rows} rows (dim ${dim}) to ${flags.get("out")}`);
    return 0;
  }
  console.error("usage: cli.js weights|fixture|feature-cache --flags ... (see source header)");
  return 2;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err.message ?? err}`);
    process.exit(1);
  },
);
