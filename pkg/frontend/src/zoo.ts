/**
 * The local model zoo: seeded constructions of three backbone architectures
 * with full batch-norm state, their forward passes (tfjs ops, explicit
 * padding), and batch-norm folding into conv weight/bias pairs.
 *
 * EfficientNet-style parameters use the consumer package's naming scheme
 * (stem.conv, stage{i}.block{j}.{expand,depthwise,se.reduce,se.expand,project},
 * head.conv) with OIHW weight layout, so folded archives drop straight into
 * its forward pass.  ResNet-18 and MobileNetV2 exist for feature caches only.
 */

import * as tf from "@tensorflow/tfjs";

import { SeededRng } from "./rng";

export interface StageSpec {
  blocks: number;
  channels: number;
  stride: number;
  expansion: number;
  kernel: number;
  seRatio: number;
}

export interface BackboneConfig {
  stages: StageSpec[];
  stemChannels: number;
  headChannels: number;
  inputSize: number;
}

export const NANO: BackboneConfig = {
  stages: [
    { blocks: 1, channels: 8, stride: 1, expansion: 4, kernel: 3, seRatio: 0.25 },
    { blocks: 2, channels: 16, stride: 2, expansion: 4, kernel: 3, seRatio: 0.25 },
    { blocks: 2, channels: 24, stride: 2, expansion: 4, kernel: 5, seRatio: 0.25 },
  ],
  stemChannels: 8,
  headChannels: 1280,
  inputSize: 224,
};

export const B0: BackboneConfig = {
  stages: [
    { blocks: 1, channels: 16, stride: 1, expansion: 1, kernel: 3, seRatio: 0.25 },
    { blocks: 2, channels: 24, stride: 2, expansion: 6, kernel: 3, seRatio: 0.25 },
    { blocks: 2, channels: 40, stride: 2, expansion: 6, kernel: 5, seRatio: 0.25 },
    { blocks: 3, channels: 80, stride: 2, expansion: 6, kernel: 3, seRatio: 0.25 },
    { blocks: 3, channels: 112, stride: 1, expansion: 6, kernel: 5, seRatio: 0.25 },
    { blocks: 4, channels: 192, stride: 2, expansion: 6, kernel: 5, seRatio: 0.25 },
    { blocks: 1, channels: 320, stride: 1, expansion: 6, kernel: 3, seRatio: 0.25 },
  ],
  stemChannels: 32,
  headChannels: 1280,
  inputSize: 224,
};

export function configJson(cfg: BackboneConfig): string {
  return (
    JSON.stringify(
      {
        stem_channels: cfg.stemChannels,
        head_channels: cfg.headChannels,
        input_size: cfg.inputSize,
        stages: cfg.stages.map((s) => ({
          blocks: s.blocks,
          channels: s.channels,
          stride: s.stride,
          expansion: s.expansion,
          kernel: s.kernel,
          se_ratio: s.seRatio,
        })),
      },
      null,
      2,
    ) + "\n"
  );
}

export interface ParamTensor {
  shape: number[];
  values: Float32Array;
}

export type ParamMap = Map<string, ParamTensor>;

export const EFFNET_BN_EPS = 1e-3;
export const TORCH_BN_EPS = 1e-5;

function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

// --- seeded parameter construction -----------------------------------------

function seedConvWeight(rng: SeededRng, name: string, shape: number[]): ParamTensor {
  const fanIn = numel(shape.slice(1));
  const limit = Math.sqrt(3.0 / fanIn);
  return { shape, values: rng.derive(name).uniformArray(numel(shape), -limit, limit) };
}

function seedBn(rng: SeededRng, base: string, channels: number, params: ParamMap): void {
  const draw = (tag: string, lo: number, hi: number) => ({
    shape: [channels],
    values: rng.derive(`${base}.bn.${tag}`).uniformArray(channels, lo, hi),
  });
  params.set(`${base}.bn.gamma`, draw("gamma", 0.8, 1.2));
  params.set(`${base}.bn.beta`, draw("beta", -0.1, 0.1));
  params.set(`${base}.bn.mean`, draw("mean", -0.1, 0.1));
  params.set(`${base}.bn.var`, draw("var", 0.5, 1.5));
}

function seedBnConv(rng: SeededRng, base: string, shape: number[], params: ParamMap): void {
  params.set(`${base}.weight`, seedConvWeight(rng, `${base}.weight`, shape));
  seedBn(rng, base, shape[0], params);
}

function seedBiasConv(rng: SeededRng, base: string, shape: number[], params: ParamMap): void {
  params.set(`${base}.weight`, seedConvWeight(rng, `${base}.weight`, shape));
  params.set(`${base}.bias`, {
    shape: [shape[0]],
    values: rng.derive(`${base}.bias`).uniformArray(shape[0], -0.05, 0.05),
  });
}

function seChannels(inChannels: number, seRatio: number): number {
  return Math.max(1, Math.floor(inChannels * seRatio));
}

/** Seeded EfficientNet-style parameters with unfolded batch-norm state. */
export function seedEffnetParams(cfg: BackboneConfig, seed: bigint): ParamMap {
  const rng = new SeededRng(seed).derive("effnet");
  const params: ParamMap = new Map();
  seedBnConv(rng, "stem.conv", [cfg.stemChannels, 3, 3, 3], params);
  let inC = cfg.stemChannels;
  cfg.stages.forEach((stage, i) => {
    for (let j = 0; j < stage.blocks; j++) {
      const base = `stage${i}.block${j}`;
      const hidden = inC * stage.expansion;
      const se = seChannels(inC, stage.seRatio);
      if (stage.expansion !== 1) {
        seedBnConv(rng, `${base}.expand`, [hidden, inC, 1, 1], params);
      }
      seedBnConv(rng, `${base}.depthwise`, [hidden, 1, stage.kernel, stage.kernel], params);
      seedBiasConv(rng, `${base}.se.reduce`, [se, hidden, 1, 1], params);
      seedBiasConv(rng, `${base}.se.expand`, [hidden, se, 1, 1], params);
      seedBnConv(rng, `${base}.project`, [stage.channels, hidden, 1, 1], params);
      inC = stage.channels;
    }
  });
  seedBnConv(rng, "head.conv", [cfg.headChannels, inC, 1, 1], params);
  return params;
}

// --- batch-norm folding -----------------------------------------------------

/**
 * Fold y = gamma*(conv(x)-mean)/sqrt(var+eps)+beta into conv weight and bias:
 * w' = w * gamma/sqrt(var+eps), b' = beta - mean * gamma/sqrt(var+eps).
 * Bias convs (the SE pair) pass through unchanged.
 */
export function foldBatchNorm(params: ParamMap, eps: number): ParamMap {
  const folded: ParamMap = new Map();
  for (const [name, tensor] of params) {
    if (!name.endsWith(".weight") || !params.has(`${name.slice(0, -7)}.bn.gamma`)) {
      if (!name.includes(".bn.")) {
        folded.set(name, tensor);
      }
      continue;
    }
    const base = name.slice(0, -7);
    const gamma = params.get(`${base}.bn.gamma`)!.values;
    const beta = params.get(`${base}.bn.beta`)!.values;
    const mean = params.get(`${base}.bn.mean`)!.values;
    const variance = params.get(`${base}.bn.var`)!.values;
    const outC = tensor.shape[0];
    const perOut = numel(tensor.shape) / outC;
    const weight = new Float32Array(tensor.values.length);
    const bias = new Float32Array(outC);
    for (let o = 0; o < outC; o++) {
      const scale = gamma[o] / Math.sqrt(variance[o] + eps);
      for (let k = 0; k < perOut; k++) {
        weight[o * perOut + k] = Math.fround(tensor.values[o * perOut + k] * scale);
      }
      bias[o] = Math.fround(beta[o] - mean[o] * scale);
    }
    folded.set(name, { shape: tensor.shape, values: weight });
    folded.set(`${base}.bias`, { shape: [outC], values: bias });
  }
  return folded;
}

// --- forward passes ---------------------------------------------------------

function toFilter(t: ParamTensor, depthwise: boolean): tf.Tensor4D {
  const oihw = tf.tensor4d(t.values, t.shape as [number, number, number, number]);
  // OIHW -> HWIO for conv2d, or [k, k, C, 1] for depthwiseConv2d
  const filter = depthwise ? tf.transpose(oihw, [2, 3, 0, 1]) : tf.transpose(oihw, [2, 3, 1, 0]);
  oihw.dispose();
  return filter as tf.Tensor4D;
}

interface ConvOptions {
  stride?: number;
  padding?: number;
  depthwise?: boolean;
}

function makeConvApplier(params: ParamMap, eps: number) {
  return (base: string, x: tf.Tensor4D, opts: ConvOptions = {}): tf.Tensor4D => {
    const { stride = 1, padding = 0, depthwise = false } = opts;
    const weight = params.get(`${base}.weight`);
    if (!weight) {
      throw new Error(`zoo model missing layer ${base}`);
    }
    return tf.tidy(() => {
      const padded =
        padding > 0
          ? tf.pad(x, [[0, 0], [padding, padding], [padding, padding], [0, 0]])
          : x;
      const filter = toFilter(weight, depthwise);
      let y = depthwise
        ? tf.depthwiseConv2d(padded as tf.Tensor4D, filter, [stride, stride], "valid")
        : tf.conv2d(padded as tf.Tensor4D, filter, [stride, stride], "valid");
      if (params.has(`${base}.bn.gamma`)) {
        const gamma = tf.tensor1d(params.get(`${base}.bn.gamma`)!.values);
        const beta = tf.tensor1d(params.get(`${base}.bn.beta`)!.values);
        const mean = tf.tensor1d(params.get(`${base}.bn.mean`)!.values);
        const variance = tf.tensor1d(params.get(`${base}.bn.var`)!.values);
        y = tf.add(tf.mul(tf.sub(y, mean), tf.mul(gamma, tf.rsqrt(tf.add(variance, eps)))), beta);
      } else {
        y = tf.add(y, tf.tensor1d(params.get(`${base}.bias`)!.values));
      }
      return y as tf.Tensor4D;
    });
  };
}

function swish(x: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => tf.mul(x, tf.sigmoid(x))) as tf.Tensor4D;
}

/** Pooled feature vector (length cfg.headChannels) for one NHWC input. */
export function effnetForward(
  input: tf.Tensor4D,
  cfg: BackboneConfig,
  params: ParamMap,
): Float32Array {
  const conv = makeConvApplier(params, EFFNET_BN_EPS);
  const out = tf.tidy(() => {
    let x = swish(conv("stem.conv", input, { stride: 2, padding: 1 }));
    let inC = cfg.stemChannels;
    cfg.stages.forEach((stage, i) => {
      for (let j = 0; j < stage.blocks; j++) {
        const base = `stage${i}.block${j}`;
        const stride = j === 0 ? stage.stride : 1;
        const shortcut = x;
        let h = x;
        if (stage.expansion !== 1) {
          h = swish(conv(`${base}.expand`, h));
        }
        h = swish(
          conv(`${base}.depthwise`, h, {
            stride,
            padding: Math.floor(stage.kernel / 2),
            depthwise: true,
          }),
        );
        // squeeze-excitation over the pooled descriptor
        const pooled = tf.mean(h, [1, 2]) as tf.Tensor2D; // [1, hidden]
        const rw = params.get(`${base}.se.reduce.weight`)!;
        const ew = params.get(`${base}.se.expand.weight`)!;
        const reduceMat = tf.tensor2d(rw.values, [rw.shape[0], rw.shape[1]]);
        const expandMat = tf.tensor2d(ew.values, [ew.shape[0], ew.shape[1]]);
        const rb = tf.tensor1d(params.get(`${base}.se.reduce.bias`)!.values);
        const eb = tf.tensor1d(params.get(`${base}.se.expand.bias`)!.values);
        let s = tf.add(tf.matMul(pooled, reduceMat, false, true), rb);
        s = tf.mul(s, tf.sigmoid(s)); // swish
        const gate = tf.sigmoid(tf.add(tf.matMul(s as tf.Tensor2D, expandMat, false, true), eb));
        h = tf.mul(h, tf.reshape(gate, [1, 1, 1, -1])) as tf.Tensor4D;
        h = conv(`${base}.project`, h);
        if (stride === 1 && inC === stage.channels) {
          h = tf.add(h, shortcut) as tf.Tensor4D;
        }
        x = h;
        inC = stage.channels;
      }
    });
    x = swish(conv("head.conv", x));
    return tf.mean(x, [1, 2]) as tf.Tensor2D;
  });
  const values = out.dataSync() as Float32Array;
  out.dispose();
  return new Float32Array(values);
}

// --- ResNet-18 (feature caches only) ----------------------------------------

const RESNET_LAYERS = [
  { channels: 64, stride: 1 },
  { channels: 128, stride: 2 },
  { channels: 256, stride: 2 },
  { channels: 512, stride: 2 },
];

export function seedResnet18Params(seed: bigint): ParamMap {
  const rng = new SeededRng(seed).derive("resnet18");
  const params: ParamMap = new Map();
  seedBnConv(rng, "stem.conv", [64, 3, 7, 7], params);
  let inC = 64;
  RESNET_LAYERS.forEach((layer, i) => {
    for (let j = 0; j < 2; j++) {
      const base = `layer${i}.block${j}`;
      const stride = j === 0 ? layer.stride : 1;
      seedBnConv(rng, `${base}.conv1`, [layer.channels, inC, 3, 3], params);
      seedBnConv(rng, `${base}.conv2`, [layer.channels, layer.channels, 3, 3], params);
      if (stride !== 1 || inC !== layer.channels) {
        seedBnConv(rng, `${base}.downsample`, [layer.channels, inC, 1, 1], params);
      }
      inC = layer.channels;
    }
  });
  return params;
}

export function resnet18Forward(input: tf.Tensor4D, params: ParamMap): Float32Array {
  const conv = makeConvApplier(params, TORCH_BN_EPS);
  const out = tf.tidy(() => {
    let x = tf.relu(conv("stem.conv", input, { stride: 2, padding: 3 })) as tf.Tensor4D;
    x = tf.maxPool(tf.pad(x, [[0, 0], [1, 1], [1, 1], [0, 0]], -1e30), [3, 3], [2, 2], "valid");
    RESNET_LAYERS.forEach((layer, i) => {
      for (let j = 0; j < 2; j++) {
        const base = `layer${i}.block${j}`;
        const stride = j === 0 ? layer.stride : 1;
        let shortcut = x;
        if (params.has(`${base}.downsample.weight`)) {
          shortcut = conv(`${base}.downsample`, x, { stride });
        }
        let h = tf.relu(conv(`${base}.conv1`, x, { stride, padding: 1 })) as tf.Tensor4D;
        h = conv(`${base}.conv2`, h, { padding: 1 });
        x = tf.relu(tf.add(h, shortcut)) as tf.Tensor4D;
      }
    });
    return tf.mean(x, [1, 2]) as tf.Tensor2D;
  });
  const values = out.dataSync() as Float32Array;
  out.dispose();
  return new Float32Array(values);
}

// --- MobileNetV2 (feature caches only) ---------------------------------------

const MBV2_BLOCKS = [
  { t: 1, c: 16, n: 1, s: 1 },
  { t: 6, c: 24, n: 2, s: 2 },
  { t: 6, c: 32, n: 3, s: 2 },
  { t: 6, c: 64, n: 4, s: 2 },
  { t: 6, c: 96, n: 3, s: 1 },
  { t: 6, c: 160, n: 3, s: 2 },
  { t: 6, c: 320, n: 1, s: 1 },
];

export function seedMobilenetV2Params(seed: bigint): ParamMap {
  const rng = new SeededRng(seed).derive("mobilenet-v2");
  const params: ParamMap = new Map();
  seedBnConv(rng, "stem.conv", [32, 3, 3, 3], params);
  let inC = 32;
  MBV2_BLOCKS.forEach((blockCfg, i) => {
    for (let j = 0; j < blockCfg.n; j++) {
      const base = `block${i}.unit${j}`;
      const hidden = inC * blockCfg.t;
      if (blockCfg.t !== 1) {
        seedBnConv(rng, `${base}.expand`, [hidden, inC, 1, 1], params);
      }
      seedBnConv(rng, `${base}.depthwise`, [hidden, 1, 3, 3], params);
      seedBnConv(rng, `${base}.project`, [blockCfg.c, hidden, 1, 1], params);
      inC = blockCfg.c;
    }
  });
  seedBnConv(rng, "head.conv", [1280, inC, 1, 1], params);
  return params;
}

export function mobilenetV2Forward(input: tf.Tensor4D, params: ParamMap): Float32Array {
  const conv = makeConvApplier(params, TORCH_BN_EPS);
  const relu6 = (x: tf.Tensor4D) => tf.clipByValue(x, 0, 6) as tf.Tensor4D;
  const out = tf.tidy(() => {
    let x = relu6(conv("stem.conv", input, { stride: 2, padding: 1 }));
    let inC = 32;
    MBV2_BLOCKS.forEach((blockCfg, i) => {
      for (let j = 0; j < blockCfg.n; j++) {
        const base = `block${i}.unit${j}`;
        const stride = j === 0 ? blockCfg.s : 1;
        const shortcut = x;
        let h = x;
        if (blockCfg.t !== 1) {
          h = relu6(conv(`${base}.expand`, h));
        }
        h = relu6(conv(`${base}.depthwise`, h, { stride, padding: 1, depthwise: true }));
        h = conv(`${base}.project`, h);
        if (stride === 1 && inC === blockCfg.c) {
          h = tf.add(h, shortcut) as tf.Tensor4D;
        }
        x = h;
        inC = blockCfg.c;
      }
    });
    x = relu6(conv("head.conv", x));
    return tf.mean(x, [1, 2]) as tf.Tensor2D;
  });
  const values = out.dataSync() as Float32Array;
  out.dispose();
  return new Float32Array(values);
}
