/**
 * Image loading and the deterministic eval transform used for feature caches:
 * decode PNG -> half-pixel bilinear resize (quantized back to u8, matching the
 * consumer's pipeline) -> scale to [0,1] -> per-channel normalization.
 */

import * as fs from "fs";
import { PNG } from "pngjs";

export const CHANNEL_MEAN = [0.485, 0.456, 0.406];
export const CHANNEL_STD = [0.229, 0.224, 0.225];

export interface RasterImage {
  width: number;
  height: number;
  data: Uint8Array; // HWC RGB
}

export function loadPng(path: string): RasterImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const pixels = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[i * 3] = png.data[i * 4];
    pixels[i * 3 + 1] = png.data[i * 4 + 1];
    pixels[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data: pixels };
}

function roundHalfAway(x: number): number {
  return Math.floor(Math.min(Math.max(x, 0), 255) + 0.5);
}

/** Half-pixel-centered bilinear resize with u8 re-quantization. */
export function resizeBilinear(img: RasterImage, width: number, height: number): RasterImage {
  if (width === img.width && height === img.height) {
    return { width, height, data: new Uint8Array(img.data) };
  }
  const out = new Uint8Array(width * height * 3);
  const scaleY = img.height / height;
  const scaleX = img.width / width;
  for (let oy = 0; oy < height; oy++) {
    let sy = (oy + 0.5) * scaleY - 0.5;
    sy = Math.min(Math.max(sy, 0), img.height - 1);
    const y0 = Math.floor(sy);
    const fy = sy - y0;
    const y1 = Math.min(y0 + 1, img.height - 1);
    for (let ox = 0; ox < width; ox++) {
      let sx = (ox + 0.5) * scaleX - 0.5;
      sx = Math.min(Math.max(sx, 0), img.width - 1);
      const x0 = Math.floor(sx);
      const fx = sx - x0;
      const x1 = Math.min(x0 + 1, img.width - 1);
      for (let c = 0; c < 3; c++) {
        const v00 = img.data[(y0 * img.width + x0) * 3 + c];
        const v01 = img.data[(y0 * img.width + x1) * 3 + c];
        const v10 = img.data[(y1 * img.width + x0) * 3 + c];
        const v11 = img.data[(y1 * img.width + x1) * 3 + c];
        const top = v00 + fx * (v01 - v00);
        const bot = v10 + fx * (v11 - v10);
        out[(oy * width + ox) * 3 + c] = roundHalfAway(top + fy * (bot - top));
      }
    }
  }
  return { width, height, data: out };
}

/** NHWC float32 network input: resize -> /255 -> (x - mean) / std. */
export function evalTransform(img: RasterImage, size: number): Float32Array {
  const resized = resizeBilinear(img, size, size);
  const out = new Float32Array(size * size * 3);
  for (let i = 0; i < size * size; i++) {
    for (let c = 0; c < 3; c++) {
      const unit = resized.data[i * 3 + c] / 255.0;
      out[i * 3 + c] = Math.fround((unit - CHANNEL_MEAN[c]) / CHANNEL_STD[c]);
    }
  }
  return out;
}
