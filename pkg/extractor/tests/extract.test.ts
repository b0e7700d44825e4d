import { execFileSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, describe, expect, it } from "vitest";

import { readBlobShape } from "../src/dff";
import { discoverArticles, emitManifest } from "../src/extract";
import { TWO_ARTICLES, writeFixture } from "./fixture";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "extractor-e2e-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

function runPipeline(name: string, articles = TWO_ARTICLES, warn?: (m: string) => void) {
  const input = path.join(tmp, name, "input");
  const out = path.join(tmp, name, "out");
  fs.mkdirSync(input, { recursive: true });
  writeFixture(input, articles);
  const manifest = emitManifest(discoverArticles(input), out, { split: "test", warn });
  return { input, out, manifest };
}

describe("end-to-end extraction", () => {
  it("writes a manifest with one record per article", () => {
    const { manifest } = runPipeline("basic");
    const lines = fs.readFileSync(manifest, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(3);
    const header = JSON.parse(lines[0]);
    expect(header).toMatchObject({ version: 1, d_text: 768, d_image: 2048, split: "test" });
    const rec = JSON.parse(lines[1]);
    expect(rec.article_id).toBe("a0");
    expect(rec.label).toBe(1);
    expect(rec.pairs).toHaveLength(2);
    expect(rec.body_entities).toContain("Mrs Betram");
    expect(rec.body_entity_types["Mrs Betram"]).toBe("PERSON");
    expect(JSON.parse(lines[2]).label).toBe(0);
  });

  it("emits blobs with the declared dimensions", () => {
    const { out, manifest } = runPipeline("dims");
    const rec = JSON.parse(fs.readFileSync(manifest, "utf-8").trim().split("\n")[1]);
    for (const rel of rec.sentences) {
      expect(readBlobShape(path.join(out, rel)).cols).toBe(768);
    }
    for (const pair of rec.pairs) {
      expect(readBlobShape(path.join(out, pair.caption_blob)).cols).toBe(768);
      const objects = readBlobShape(path.join(out, pair.objects_blob));
      expect(objects.cols).toBe(2048);
      expect(objects.rows).toBeGreaterThanOrEqual(1);
      expect(objects.rows).toBeLessThanOrEqual(36);
    }
  });

  it("truncates beyond three pairs with a warning", () => {
    const warnings: string[] = [];
    const crowded = [
      {
        ...TWO_ARTICLES[0],
        id: "b0",
        captions: [
          { caption: "First photo of the day." },
          { caption: "Second photo of the day." },
          { caption: "Third photo of the day." },
          { caption: "Fourth photo of the day." },
        ],
      },
    ];
    const { manifest } = runPipeline("truncate", crowded, (m) => warnings.push(m));
    const rec = JSON.parse(fs.readFileSync(manifest, "utf-8").trim().split("\n")[1]);
    expect(rec.pairs).toHaveLength(3);
    expect(warnings.some((w) => w.includes("keeping the first 3"))).toBe(true);
  });

  it("is deterministic run to run", () => {
    const a = runPipeline("det1");
    const b = runPipeline("det2");
    expect(fs.readFileSync(a.manifest, "utf-8")).toBe(fs.readFileSync(b.manifest, "utf-8"));
    const blobsA = fs.readdirSync(path.join(a.out, "blobs")).sort();
    const blobsB = fs.readdirSync(path.join(b.out, "blobs")).sort();
    expect(blobsA).toEqual(blobsB);
    for (const name of blobsA) {
      expect(
        fs.readFileSync(path.join(a.out, "blobs", name)).equals(
          fs.readFileSync(path.join(b.out, "blobs", name))
        )
      ).toBe(true);
    }
  });

  it("fails loudly when the input directory has no articles", () => {
    const empty = path.join(tmp, "empty");
    fs.mkdirSync(empty, { recursive: true });
    expect(() => discoverArticles(empty)).toThrow(/no article directories/);
  });

  it("output passes the detector's manifest validation", () => {
    const { manifest } = runPipeline("contract");
    // Golden contract check: the consumer package (installed in the same
    // workspace) must load the manifest and every referenced blob with
    // zero validation errors.
    const script = [
      "import sys",
      "from didan.data import load_manifest",
      "m = load_manifest(sys.argv[1])",
      "assert (m.d_text, m.d_image) == (768, 2048), (m.d_text, m.d_image)",
      "records = m.load_all()",
      "assert len(records) == 2",
      "assert any('mrs betram' in r.body_entities for r in records)",
      "print('ok', len(records))",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script, manifest], { encoding: "utf-8" });
    expect(out.trim()).toBe("ok 2");
  });
});
