import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { PNG } from "pngjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { WeightArchive } from "../src/archive";
import {
  exportFeatureCache,
  exportFixture,
  exportWeights,
  fixtureImage,
  loadManifest,
  manifestDigest,
  pythonFloatRepr,
} from "../src/export";
import { evalTransform, loadPng, resizeBilinear } from "../src/transform";

let workDir: string;

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-test-"));
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

function writePng(filePath: string, size: number, paint: (x: number, y: number) => [number, number, number]): void {
  const png = new PNG({ width: size, height: size });
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 4;
      const [r, g, b] = paint(x, y);
      png.data[i] = r;
      png.data[i + 1] = g;
      png.data[i + 2] = b;
      png.data[i + 3] = 255;
    }
  }
  fs.writeFileSync(filePath, PNG.sync.write(png));
}

function writeManifest(dir: string, rows: Array<[string, number]>): string {
  const manifestPath = path.join(dir, "manifest.csv");
  const lines = ["path,mos", ...rows.map(([p, mos]) => `${p},${pythonFloatRepr(mos)}`)];
  fs.writeFileSync(manifestPath, lines.join("\n") + "\n");
  return manifestPath;
}

describe("python float repr", () => {
  it("matches python for integer-valued floats", () => {
    expect(pythonFloatRepr(5)).toBe("5.0");
    expect(pythonFloatRepr(3.25)).toBe("3.25");
    expect(pythonFloatRepr(4.109640474436812)).toBe("4.109640474436812");
  });

  it("pads single-digit exponents like python", () => {
    expect(pythonFloatRepr(1e-5)).toBe("1e-05");
    expect(pythonFloatRepr(2.5e21)).toBe("2.5e+21");
  });
});

describe("transform", () => {
  it("resize to the same size copies bytes", () => {
    const img = { width: 3, height: 2, data: new Uint8Array([...Array(18).keys()].map((v) => v * 7 % 256)) };
    const out = resizeBilinear(img, 3, 2);
    expect([...out.data]).toEqual([...img.data]);
  });

  it("constant images stay constant through resize", () => {
    const img = { width: 4, height: 4, data: new Uint8Array(48).fill(128) };
    const out = resizeBilinear(img, 9, 7);
    expect(new Set(out.data).size).toBe(1);
    expect(out.data[0]).toBe(128);
  });

  it("eval transform output is normalized and finite", () => {
    const img = { width: 8, height: 8, data: fixtureImage(8) as Uint8Array };
    const out = evalTransform({ ...img }, 16);
    expect(out.length).toBe(16 * 16 * 3);
    for (const v of out) {
      expect(Number.isFinite(v)).toBe(true);
      expect(v).toBeGreaterThan(-2.2);
      expect(v).toBeLessThan(2.7);
    }
  });
});

describe("weights export", () => {
  it("writes a CRC-valid archive with the consumer's layer names", () => {
    const out = path.join(workDir, "nano.cqwa");
    exportWeights("nano", out, 5n);
    const archive = WeightArchive.fromBuffer(fs.readFileSync(out));
    for (const name of [
      "stem.conv.weight", "stem.conv.bias",
      "stage0.block0.depthwise.weight", "stage0.block0.se.expand.bias",
      "stage2.block1.project.bias", "head.conv.weight", "head.conv.bias",
    ]) {
      expect(archive.entries.has(name), name).toBe(true);
    }
    expect([...archive.entries.keys()].some((k) => k.includes(".bn."))).toBe(false);
    expect(archive.metadata.get("bn_eps")).toBe("0.001");
  });

  it("re-export is byte-identical", () => {
    const a = path.join(workDir, "a.cqwa");
    const b = path.join(workDir, "b.cqwa");
    exportWeights("nano", a, 9n);
    exportWeights("nano", b, 9n);
    expect(fs.readFileSync(a).equals(fs.readFileSync(b))).toBe(true);
  });

  it("rejects unknown configs", () => {
    expect(() => exportWeights("resnet18", path.join(workDir, "x.cqwa"))).toThrow(/unknown config/);
  });
});

describe("fixture export", () => {
  it("writes the four files and regenerates identically", () => {
    const dir1 = path.join(workDir, "fix1");
    const dir2 = path.join(workDir, "fix2");
    exportFixture("nano", dir1, 32, 3n);
    exportFixture("nano", dir2, 32, 3n);
    for (const name of ["config.json", "weights.cqwa", "input.cqwa", "reference.cqwa"]) {
      expect(fs.existsSync(path.join(dir1, name)), name).toBe(true);
      expect(fs.readFileSync(path.join(dir1, name)).equals(fs.readFileSync(path.join(dir2, name)))).toBe(true);
    }
    const reference = WeightArchive.fromBuffer(fs.readFileSync(path.join(dir1, "reference.cqwa")));
    expect(reference.get("features").shape).toEqual([1280]);
  });
});

describe("feature cache export", () => {
  it("writes rows in manifest order with matching metadata", () => {
    const dir = path.join(workDir, "cachedata");
    fs.mkdirSync(dir, { recursive: true });
    writePng(path.join(dir, "one.png"), 32, (x, y) => [x * 8, y * 8, 128]);
    writePng(path.join(dir, "two.png"), 32, (x, y) => [255 - x * 8, 64, y * 8]);
    const manifestPath = writeManifest(dir, [["one.png", 4.5], ["two.png", 2]]);

    const out = path.join(workDir, "cache.cqwa");
    const { rows, dim } = exportFeatureCache("mobilenet-v2", manifestPath, out, 7n);
    expect(rows).toBe(2);
    expect(dim).toBe(1280);

    const archive = WeightArchive.fromBuffer(fs.readFileSync(out));
    expect(archive.metadata.get("kind")).toBe("feature-cache");
    expect(archive.metadata.get("dim")).toBe("1280");
    expect(JSON.parse(archive.metadata.get("paths")!)).toEqual(["one.png", "two.png"]);
    expect(archive.metadata.get("manifest_sha256")).toBe(manifestDigest(loadManifest(manifestPath)));
    expect(archive.get("0").shape).toEqual([1280]);
    expect(archive.get("1").shape).toEqual([1280]);
  }, 120_000);

  it("decodes png pixel data faithfully", () => {
    const dir = path.join(workDir, "pngcheck");
    fs.mkdirSync(dir, { recursive: true });
    const file = path.join(dir, "p.png");
    writePng(file, 4, (x, y) => [x * 10, y * 20, 77]);
    const img = loadPng(file);
    expect(img.width).toBe(4);
    expect(img.data[(2 * 4 + 3) * 3]).toBe(30); // x=3 -> r=30
    expect(img.data[(2 * 4 + 3) * 3 + 1]).toBe(40); // y=2 -> g=40
    expect(img.data[(2 * 4 + 3) * 3 + 2]).toBe(77);
  });
});
