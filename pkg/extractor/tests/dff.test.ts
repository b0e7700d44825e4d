import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, describe, expect, it } from "vitest";

import { readBlobShape, writeFeatureBlob } from "../src/dff";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "extractor-dff-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

describe("feature blob writer", () => {
  it("emits the documented byte layout", () => {
    const p = path.join(tmp, "x.dff");
    writeFeatureBlob(p, [Float32Array.from([3.5])], 1);
    const buf = fs.readFileSync(p);
    expect(buf.subarray(0, 4).toString("ascii")).toBe("DFF1");
    expect(buf.readUInt32LE(4)).toBe(2); // rank
    expect(buf.readUInt32LE(8)).toBe(1); // rows
    expect(buf.readUInt32LE(12)).toBe(1); // cols
    expect(Array.from(buf.subarray(16))).toEqual([0x00, 0x00, 0x60, 0x40]);
  });

  it("round-trips shapes through the header reader", () => {
    const p = path.join(tmp, "m.dff");
    const rows = [Float32Array.from([1, 2, 3]), Float32Array.from([4, 5, 6])];
    writeFeatureBlob(p, rows, 3);
    expect(readBlobShape(p)).toEqual({ rows: 2, cols: 3 });
  });

  it("refuses ragged rows and non-finite values", () => {
    const p = path.join(tmp, "bad.dff");
    expect(() => writeFeatureBlob(p, [Float32Array.from([1, 2])], 3)).toThrow(/width/);
    expect(() => writeFeatureBlob(p, [Float32Array.from([NaN])], 1)).toThrow(/non-finite/);
    expect(() => writeFeatureBlob(p, [], 4)).toThrow(/empty/);
  });

  it("rejects truncated files on read", () => {
    const p = path.join(tmp, "trunc.dff");
    writeFeatureBlob(p, [Float32Array.from([1, 2, 3])], 3);
    fs.writeFileSync(p, fs.readFileSync(p).subarray(0, 20));
    expect(() => readBlobShape(p)).toThrow(/size/);
  });
});
