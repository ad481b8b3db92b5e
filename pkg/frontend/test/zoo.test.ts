import * as tf from "@tensorflow/tfjs";
import { describe, expect, it } from "vitest";

import { SeededRng } from "../src/rng";
import {
  EFFNET_BN_EPS,
  NANO,
  effnetForward,
  foldBatchNorm,
  mobilenetV2Forward,
  resnet18Forward,
  seedEffnetParams,
  seedMobilenetV2Params,
  seedResnet18Params,
} from "../src/zoo";
import { verifyFolding } from "../src/export";

function randomInput(size: number, seed: bigint): tf.Tensor4D {
  const rng = new SeededRng(seed).derive("input");
  return tf.tensor4d(rng.uniformArray(size * size * 3, -1.5, 1.5), [1, size, size, 3]);
}

describe("seeded parameters", () => {
  it("are reproducible per seed", () => {
    const a = seedEffnetParams(NANO, 11n);
    const b = seedEffnetParams(NANO, 11n);
    const c = seedEffnetParams(NANO, 12n);
    expect([...a.get("stem.conv.weight")!.values]).toEqual([...b.get("stem.conv.weight")!.values]);
    expect([...a.get("stem.conv.weight")!.values]).not.toEqual([
      ...c.get("stem.conv.weight")!.values,
    ]);
  });

  it("cover the expected layer names", () => {
    const params = seedEffnetParams(NANO, 1n);
    for (const name of [
      "stem.conv.weight",
      "stage0.block0.expand.weight",
      "stage0.block0.depthwise.weight",
      "stage0.block0.se.reduce.bias",
      "stage2.block1.project.weight",
      "head.conv.weight",
    ]) {
      expect(params.has(name), name).toBe(true);
    }
    // batch-norm state rides alongside every foldable conv
    expect(params.has("stem.conv.bn.gamma")).toBe(true);
    expect(params.has("stage0.block0.se.reduce.bn.gamma")).toBe(false);
  });
});

describe("batch-norm folding", () => {
  it("identity statistics leave conv weights unchanged", () => {
    const params = seedEffnetParams(NANO, 2n);
    const gamma = params.get("stem.conv.bn.gamma")!;
    gamma.values.fill(1);
    params.get("stem.conv.bn.beta")!.values.fill(0);
    params.get("stem.conv.bn.mean")!.values.fill(0);
    params.get("stem.conv.bn.var")!.values.fill(1 - EFFNET_BN_EPS);
    const folded = foldBatchNorm(params, EFFNET_BN_EPS);
    expect([...folded.get("stem.conv.weight")!.values]).toEqual([
      ...params.get("stem.conv.weight")!.values,
    ]);
    expect([...folded.get("stem.conv.bias")!.values]).toEqual(
      new Array(NANO.stemChannels).fill(0),
    );
  });

  it("drops batch-norm state and passes bias convs through", () => {
    const params = seedEffnetParams(NANO, 3n);
    const folded = foldBatchNorm(params, EFFNET_BN_EPS);
    expect([...folded.keys()].some((k) => k.includes(".bn."))).toBe(false);
    expect([...folded.get("stage0.block0.se.reduce.bias")!.values]).toEqual([
      ...params.get("stage0.block0.se.reduce.bias")!.values,
    ]);
  });

  it("folded forward matches the batch-norm forward within 1e-5", () => {
    const params = seedEffnetParams(NANO, 4n);
    const folded = foldBatchNorm(params, EFFNET_BN_EPS);
    const worst = verifyFolding(NANO, params, folded, 32);
    expect(worst).toBeLessThan(1e-5);
  });
});

describe("forward passes", () => {
  it("efficientnet produces the configured feature width", () => {
    const params = foldBatchNorm(seedEffnetParams(NANO, 5n), EFFNET_BN_EPS);
    const input = randomInput(32, 6n);
    const out = effnetForward(input, { ...NANO, inputSize: 32 }, params);
    input.dispose();
    expect(out.length).toBe(NANO.headChannels);
    expect([...out].every(Number.isFinite)).toBe(true);
  });

  it("efficientnet forward is deterministic", () => {
    const params = foldBatchNorm(seedEffnetParams(NANO, 7n), EFFNET_BN_EPS);
    const run = () => {
      const input = randomInput(32, 8n);
      const out = effnetForward(input, { ...NANO, inputSize: 32 }, params);
      input.dispose();
      return [...out];
    };
    expect(run()).toEqual(run());
  });

  it("resnet18 pools 512 features", () => {
    const params = seedResnet18Params(9n);
    const input = randomInput(64, 10n);
    const out = resnet18Forward(input, params);
    input.dispose();
    expect(out.length).toBe(512);
    expect([...out].every(Number.isFinite)).toBe(true);
  });

  it("mobilenet-v2 pools 1280 features", () => {
    const params = seedMobilenetV2Params(11n);
    const input = randomInput(64, 12n);
    const out = mobilenetV2Forward(input, params);
    input.dispose();
    expect(out.length).toBe(1280);
    expect([...out].every(Number.isFinite)).toBe(true);
  });
});
