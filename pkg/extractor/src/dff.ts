import * as fs from "fs";

// Binary feature blob: magic "DFF1", u32 LE rank, u32 LE dims,
// float32 LE row-major payload. This is the wire format consumed by the
// detector's manifest loader, so it must round-trip bit-exactly.

const MAGIC = Buffer.from("DFF1", "ascii");

export function writeFeatureBlob(path: string, rows: Float32Array[], width: number): void {
  if (rows.length < 1 || width < 1) {
    throw new Error(`refusing to write empty blob to ${path}`);
  }
  for (const row of rows) {
    if (row.length !== width) {
      throw new Error(`row width ${row.length} != ${width} in blob ${path}`);
    }
    for (const x of row) {
      if (!Number.isFinite(x)) {
        throw new Error(`non-finite value in blob ${path}`);
      }
    }
  }
  const header = Buffer.alloc(4 + 4 + 2 * 4);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(2, 4);
  header.writeUInt32LE(rows.length, 8);
  header.writeUInt32LE(width, 12);
  const payload = Buffer.alloc(rows.length * width * 4);
  rows.forEach((row, i) => {
    for (let j = 0; j < width; j++) {
      payload.writeFloatLE(row[j], (i * width + j) * 4);
    }
  });
  fs.writeFileSync(path, Buffer.concat([header, payload]));
}

export interface BlobShape {
  rows: number;
  cols: number;
}

export function readBlobShape(path: string): BlobShape {
  const buf = fs.readFileSync(path);
  if (buf.length < 8 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new Error(`${path}: not a feature blob`);
  }
  const rank = buf.readUInt32LE(4);
  if (rank !== 2 || buf.length < 16) {
    throw new Error(`${path}: expected a rank-2 blob, got rank ${rank}`);
  }
  const rows = buf.readUInt32LE(8);
  const cols = buf.readUInt32LE(12);
  if (buf.length !== 16 + rows * cols * 4) {
    throw new Error(`${path}: payload size does not match header`);
  }
  return { rows, cols };
}
