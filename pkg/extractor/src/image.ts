import * as fs from "fs";
import { PNG } from "pngjs";

import { fnv1a, hashVector } from "./rand";

export const IMAGE_DIM = 2048;
export const MAX_REGIONS = 36;

// Fallback region encoder: the image is cut into a grid of up to 6x6
// regions (the usual detector budget) and each region becomes a 2048-d
// vector derived from its pixel statistics. Same file bytes, same blob.

interface Region {
  meanR: number;
  meanG: number;
  meanB: number;
  varLuma: number;
  index: number;
}

function regionStats(png: PNG, x0: number, y0: number, x1: number, y1: number, index: number): Region {
  let r = 0;
  let g = 0;
  let b = 0;
  let luma = 0;
  let luma2 = 0;
  let n = 0;
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      const at = (png.width * y + x) << 2;
      const pr = png.data[at];
      const pg = png.data[at + 1];
      const pb = png.data[at + 2];
      const l = 0.299 * pr + 0.587 * pg + 0.114 * pb;
      r += pr;
      g += pg;
      b += pb;
      luma += l;
      luma2 += l * l;
      n += 1;
    }
  }
  const meanLuma = luma / n;
  return {
    meanR: r / n,
    meanG: g / n,
    meanB: b / n,
    varLuma: luma2 / n - meanLuma * meanLuma,
    index,
  };
}

function regionVector(region: Region): Float32Array {
  const key = [
    "r",
    region.index,
    Math.round(region.meanR * 16),
    Math.round(region.meanG * 16),
    Math.round(region.meanB * 16),
    Math.round(region.varLuma * 4),
  ].join(":");
  const out = hashVector(fnv1a(key), IMAGE_DIM);
  // Keep the raw statistics readable in the leading coordinates.
  out[0] = region.meanR / 255;
  out[1] = region.meanG / 255;
  out[2] = region.meanB / 255;
  out[3] = Math.sqrt(Math.max(region.varLuma, 0)) / 255;
  return out;
}

export function encodeImage(path: string): Float32Array[] {
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(path));
  } catch (err) {
    throw new Error(`cannot decode image ${path}: ${(err as Error).message}`);
  }
  const gw = Math.min(6, png.width);
  const gh = Math.min(6, png.height);
  const regions: Float32Array[] = [];
  for (let gy = 0; gy < gh; gy++) {
    for (let gx = 0; gx < gw; gx++) {
      const x0 = Math.floor((gx * png.width) / gw);
      const x1 = Math.floor(((gx + 1) * png.width) / gw);
      const y0 = Math.floor((gy * png.height) / gh);
      const y1 = Math.floor(((gy + 1) * png.height) / gh);
      regions.push(regionVector(regionStats(png, x0, y0, x1, y1, gy * gw + gx)));
    }
  }
  if (regions.length < 1 || regions.length > MAX_REGIONS) {
    throw new Error(`unexpected region count ${regions.length} for ${path}`);
  }
  return regions;
}
