/**
 * The three export jobs: backbone weight archives (batch norm folded),
 * forward-parity fixtures, and per-manifest feature caches, all written in
 * the consumer package's CQWA container.
 */

import * as crypto from "crypto";
import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { WeightArchive } from "./archive";
import { SeededRng } from "./rng";
import { evalTransform, loadPng } from "./transform";
import {
  B0,
  BackboneConfig,
  EFFNET_BN_EPS,
  NANO,
  ParamMap,
  configJson,
  effnetForward,
  foldBatchNorm,
  mobilenetV2Forward,
  resnet18Forward,
  seedEffnetParams,
  seedMobilenetV2Params,
  seedResnet18Params,
} from "./zoo";

export const ZOO_VERSION = "seeded-zoo-1";
export const DEFAULT_SEED = 20240915n;

export type ModelName = "efficientnet-b0" | "resnet18" | "mobilenet-v2";

export const EFFNET_CONFIGS: Record<string, BackboneConfig> = {
  nano: NANO,
  b0: B0,
};

export interface ManifestRecord {
  imagePath: string;
  mos: number;
}

/** Shortest round-trip float formatting, python-repr compatible.
 *
 * Python renders fixed notation for decimal exponents in [-4, 16) and
 * scientific (two-digit exponent, no forced ".0" mantissa) outside; JS uses
 * a wider fixed range, so the scientific branch is rebuilt explicitly.
 */
export function pythonFloatRepr(x: number): string {
  if (!Number.isFinite(x)) {
    return Number.isNaN(x) ? "nan" : x > 0 ? "inf" : "-inf";
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0.0" : "0.0";
  }
  const exponent = parseInt(x.toExponential().split("e")[1], 10);
  if (exponent < -4 || exponent >= 16) {
    const [mantissa, exp] = x.toExponential().split("e");
    const sign = exp[0] === "-" ? "-" : "+";
    return `${mantissa}e${sign}${exp.replace(/[+-]/, "").padStart(2, "0")}`;
  }
  let s = String(x);
  if (!s.includes(".")) {
    s += ".0";
  }
  return s;
}

export function loadManifest(manifestPath: string): ManifestRecord[] {
  const text = fs.readFileSync(manifestPath, "utf-8");
  const lines = text.split("\n").filter((line) => line.length > 0);
  const header = lines[0];
  if (header !== "path,mos" && header !== "path,mos,split") {
    throw new Error(`unexpected manifest header: ${header}`);
  }
  return lines.slice(1).map((line) => {
    const parts = line.split(",");
    return { imagePath: parts[0], mos: Number(parts[1]) };
  });
}

/** sha256 over (path, mos-repr) rows; matches the consumer's digest. */
export function manifestDigest(records: ManifestRecord[]): string {
  const hash = crypto.createHash("sha256");
  for (const record of records) {
    hash.update(`${record.imagePath},${pythonFloatRepr(record.mos)}\n`, "utf-8");
  }
  return hash.digest("hex");
}

function toNhwc(chw: Float32Array, size: number): tf.Tensor4D {
  // input archives store CHW; tfjs wants NHWC
  const nhwc = new Float32Array(chw.length);
  const plane = size * size;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      for (let c = 0; c < 3; c++) {
        nhwc[(y * size + x) * 3 + c] = chw[c * plane + y * size + x];
      }
    }
  }
  return tf.tensor4d(nhwc, [1, size, size, 3]);
}

function hwcToChw(hwc: Float32Array, size: number): Float32Array {
  const chw = new Float32Array(hwc.length);
  const plane = size * size;
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      for (let c = 0; c < 3; c++) {
        chw[c * plane + y * size + x] = hwc[(y * size + x) * 3 + c];
      }
    }
  }
  return chw;
}

/**
 * Verify folding before anything is written: the folded graph must reproduce
 * the batch-norm graph on a random input within `tolerance` (max abs).
 */
export function verifyFolding(
  cfg: BackboneConfig,
  params: ParamMap,
  folded: ParamMap,
  checkSize = 64,
  tolerance = 1e-5,
): number {
  const rng = new SeededRng(7n).derive("fold-check");
  const input = tf.tensor4d(
    rng.uniformArray(checkSize * checkSize * 3, -1.5, 1.5),
    [1, checkSize, checkSize, 3],
  );
  const checkCfg = { ...cfg, inputSize: checkSize };
  const withBn = effnetForward(input, checkCfg, params);
  const withFold = effnetForward(input, checkCfg, folded);
  input.dispose();
  let worst = 0;
  for (let i = 0; i < withBn.length; i++) {
    worst = Math.max(worst, Math.abs(withBn[i] - withFold[i]));
  }
  if (worst > tolerance) {
    throw new Error(`batch-norm folding check failed: max abs diff ${worst}`);
  }
  return worst;
}

function foldedArchive(cfg: BackboneConfig, seed: bigint): { archive: WeightArchive; folded: ParamMap } {
  const params = seedEffnetParams(cfg, seed);
  const folded = foldBatchNorm(params, EFFNET_BN_EPS);
  verifyFolding(cfg, params, folded);
  const archive = new WeightArchive();
  for (const [name, tensor] of folded) {
    archive.add(name, tensor.shape, tensor.values);
  }
  archive.metadata.set("source", `${ZOO_VERSION}:efficientnet-b0:${seed}`);
  archive.metadata.set("bn_eps", String(EFFNET_BN_EPS));
  return { archive, folded };
}

/** Weight export (efficientnet-b0 only: the one graph the consumer implements). */
export function exportWeights(configName: string, outPath: string, seed = DEFAULT_SEED): void {
  const cfg = EFFNET_CONFIGS[configName];
  if (!cfg) {
    throw new Error(`unknown config ${configName} (use nano or b0)`);
  }
  const { archive } = foldedArchive(cfg, seed);
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, archive.toBuffer());
}

/** Deterministic test pattern in the u8 image domain. */
export function fixtureImage(size: number): Uint8Array {
  const data = new Uint8Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 3;
      data[i] = Math.round(127.5 + 127.5 * Math.sin((2 * Math.PI * x) / 17));
      data[i + 1] = Math.round((255 * (x + y)) / (2 * size - 2));
      data[i + 2] = Math.round(127.5 + 127.5 * Math.cos((2 * Math.PI * (x + 2 * y)) / 29));
    }
  }
  return data;
}

/**
 * Fixture export: config JSON, folded weights, a fixed eval-transformed input
 * tensor, and the reference features of this implementation's forward pass.
 */
export function exportFixture(
  configName: string,
  outDir: string,
  inputSize = 64,
  seed = DEFAULT_SEED,
): void {
  const base = EFFNET_CONFIGS[configName];
  if (!base) {
    throw new Error(`unknown config ${configName} (use nano or b0)`);
  }
  const cfg: BackboneConfig = { ...base, inputSize };
  fs.mkdirSync(outDir, { recursive: true });

  const { archive, folded } = foldedArchive(cfg, seed);
  fs.writeFileSync(path.join(outDir, "weights.cqwa"), archive.toBuffer());
  fs.writeFileSync(path.join(outDir, "config.json"), configJson(cfg), "utf-8");

  const raster = { width: inputSize, height: inputSize, data: fixtureImage(inputSize) };
  const nhwc = evalTransform(raster, inputSize);
  const inputArchive = new WeightArchive();
  inputArchive.add("input", [3, inputSize, inputSize], hwcToChw(nhwc, inputSize));
  inputArchive.metadata.set("source", `${ZOO_VERSION}:fixture-input`);
  fs.writeFileSync(path.join(outDir, "input.cqwa"), inputArchive.toBuffer());

  const tensor = tf.tensor4d(nhwc, [1, inputSize, inputSize, 3]);
  const features = effnetForward(tensor, cfg, folded);
  tensor.dispose();
  const refArchive = new WeightArchive();
  refArchive.add("features", [features.length], features);
  refArchive.metadata.set("source", `${ZOO_VERSION}:fixture-reference`);
  fs.writeFileSync(path.join(outDir, "reference.cqwa"), refArchive.toBuffer());
}

function modelForward(model: ModelName, seed: bigint): { dim: number; run: (x: tf.Tensor4D) => Float32Array } {
  if (model === "efficientnet-b0") {
    const folded = foldBatchNorm(seedEffnetParams(B0, seed), EFFNET_BN_EPS);
    return { dim: B0.headChannels, run: (x) => effnetForward(x, B0, folded) };
  }
  if (model === "resnet18") {
    const params = seedResnet18Params(seed);
    return { dim: 512, run: (x) => resnet18Forward(x, params) };
  }
  const params = seedMobilenetV2Params(seed);
  return { dim: 1280, run: (x) => mobilenetV2Forward(x, params) };
}

/** Feature cache export: eval transform at 224, penultimate pooled features. */
export function exportFeatureCache(
  model: ModelName,
  manifestPath: string,
  outPath: string,
  seed = DEFAULT_SEED,
): { rows: number; dim: number } {
  const records = loadManifest(manifestPath);
  const root = path.dirname(path.resolve(manifestPath));
  const { dim, run } = modelForward(model, seed);

  const archive = new WeightArchive();
  records.forEach((record, i) => {
    const imagePath = path.isAbsolute(record.imagePath)
      ? record.imagePath
      : path.join(root, record.imagePath);
    const nhwc = evalTransform(loadPng(imagePath), 224);
    const tensor = tf.tensor4d(nhwc, [1, 224, 224, 3]);
    const features = run(tensor);
    tensor.dispose();
    if (features.length !== dim) {
      throw new Error(`${model}: expected dim ${dim}, forward produced ${features.length}`);
    }
    archive.add(String(i), [dim], features);
  });
  archive.metadata.set("kind", "feature-cache");
  archive.metadata.set("extractor_tag", `zoo:${model}`);
  archive.metadata.set("dim", String(dim));
  archive.metadata.set("paths", JSON.stringify(records.map((r) => r.imagePath)));
  archive.metadata.set("manifest_sha256", manifestDigest(records));
  archive.metadata.set("source", `${ZOO_VERSION}:${model}:${seed}`);
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, archive.toBuffer());
  return { rows: records.length, dim };
}
