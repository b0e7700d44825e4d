import * as fs from "fs";
import * as path from "path";

import { readBlobShape, writeFeatureBlob } from "./dff";
import { TaggedEntity, extractEntities } from "./entities";
import { IMAGE_DIM, encodeImage } from "./image";
import { TEXT_DIM, encodeSentences } from "./text";

export const MAX_PAIRS = 3;

export interface RawPair {
  id: string;
  caption: string;
  image: string; // path relative to the article directory
}

export interface RawArticle {
  id: string;
  textFile: string;
  captionsFile: string;
  baseDir: string;
  label: 0 | 1;
}

export interface ExtractOptions {
  split?: string;
  warn?: (message: string) => void;
}

interface ManifestRecord {
  article_id: string;
  label: number;
  sentences: string[];
  body_entities: string[];
  body_entity_types: Record<string, string>;
  pairs: Array<{
    pair_id: string;
    caption_blob: string;
    objects_blob: string;
    caption_entities: string[];
    caption_entity_types: Record<string, string>;
  }>;
}

function typeMap(entities: TaggedEntity[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (const e of entities) {
    out[e.text] = e.type;
  }
  return out;
}

function readPairs(article: RawArticle, warn: (m: string) => void): RawPair[] {
  const raw = JSON.parse(fs.readFileSync(article.captionsFile, "utf-8"));
  if (!Array.isArray(raw) || raw.length === 0) {
    throw new Error(`${article.captionsFile}: expected a non-empty array of pairs`);
  }
  const pairs: RawPair[] = raw.map((p, i) => {
    if (typeof p.caption !== "string" || typeof p.image !== "string") {
      throw new Error(`${article.captionsFile}: pair ${i} needs "caption" and "image"`);
    }
    return { id: p.id ?? `${article.id}_p${i}`, caption: p.caption, image: p.image };
  });
  if (pairs.length > MAX_PAIRS) {
    warn(
      `article ${article.id}: ${pairs.length} image-caption pairs, keeping the first ${MAX_PAIRS}`
    );
    return pairs.slice(0, MAX_PAIRS);
  }
  return pairs;
}

function extractArticle(
  article: RawArticle,
  outDir: string,
  warn: (m: string) => void
): ManifestRecord {
  const text = fs.readFileSync(article.textFile, "utf-8");
  const sentences = encodeSentences(text);
  const sentencePaths: string[] = [];
  sentences.forEach((rows, i) => {
    const rel = path.join("blobs", `${article.id}_s${i}.dff`);
    writeFeatureBlob(path.join(outDir, rel), rows, TEXT_DIM);
    sentencePaths.push(rel);
  });
  const bodyEntities = extractEntities(text);

  const record: ManifestRecord = {
    article_id: article.id,
    label: article.label,
    sentences: sentencePaths,
    body_entities: bodyEntities.map((e) => e.text),
    body_entity_types: typeMap(bodyEntities),
    pairs: [],
  };
  for (const pair of readPairs(article, warn)) {
    const capRel = path.join("blobs", `${pair.id}_cap.dff`);
    const objRel = path.join("blobs", `${pair.id}_obj.dff`);
    const capSentences = encodeSentences(pair.caption);
    const capRows = capSentences.flat();
    writeFeatureBlob(path.join(outDir, capRel), capRows, TEXT_DIM);
    const regions = encodeImage(path.join(article.baseDir, pair.image));
    writeFeatureBlob(path.join(outDir, objRel), regions, IMAGE_DIM);
    const capEntities = extractEntities(pair.caption);
    record.pairs.push({
      pair_id: pair.id,
      caption_blob: capRel,
      objects_blob: objRel,
      caption_entities: capEntities.map((e) => e.text),
      caption_entity_types: typeMap(capEntities),
    });
  }
  return record;
}

function selfCheck(record: ManifestRecord, outDir: string): void {
  const expect = (rel: string, cols: number) => {
    const shape = readBlobShape(path.join(outDir, rel));
    if (shape.cols !== cols || shape.rows < 1) {
      throw new Error(
        `emit self-check failed: ${rel} has shape [${shape.rows}, ${shape.cols}], expected [n, ${cols}]`
      );
    }
  };
  record.sentences.forEach((rel) => expect(rel, TEXT_DIM));
  record.pairs.forEach((p) => {
    expect(p.caption_blob, TEXT_DIM);
    expect(p.objects_blob, IMAGE_DIM);
  });
}

export function discoverArticles(inputDir: string): RawArticle[] {
  const articles: RawArticle[] = [];
  for (const entry of fs.readdirSync(inputDir, { withFileTypes: true }).sort((a, b) => a.name.localeCompare(b.name))) {
    if (!entry.isDirectory()) {
      continue;
    }
    const base = path.join(inputDir, entry.name);
    const textFile = path.join(base, "article.txt");
    const captionsFile = path.join(base, "captions.json");
    if (!fs.existsSync(textFile) || !fs.existsSync(captionsFile)) {
      continue;
    }
    let label: 0 | 1 = 1;
    const labelFile = path.join(base, "label.txt");
    if (fs.existsSync(labelFile)) {
      const raw = fs.readFileSync(labelFile, "utf-8").trim();
      if (raw !== "0" && raw !== "1") {
        throw new Error(`${labelFile}: label must be 0 or 1, got "${raw}"`);
      }
      label = Number(raw) as 0 | 1;
    }
    articles.push({ id: entry.name, textFile, captionsFile, baseDir: base, label });
  }
  if (articles.length === 0) {
    throw new Error(`no article directories found under ${inputDir}`);
  }
  return articles;
}

export function emitManifest(
  articles: RawArticle[],
  outDir: string,
  options: ExtractOptions = {}
): string {
  const warn = options.warn ?? ((m) => console.warn(m));
  fs.mkdirSync(path.join(outDir, "blobs"), { recursive: true });
  const lines: string[] = [
    JSON.stringify({
      version: 1,
      d_text: TEXT_DIM,
      d_image: IMAGE_DIM,
      split: options.split ?? "extracted",
    }),
  ];
  for (const article of articles) {
    const record = extractArticle(article, outDir, warn);
    selfCheck(record, outDir);
    lines.push(JSON.stringify(record));
  }
  const manifestPath = path.join(outDir, "manifest.jsonl");
  fs.writeFileSync(manifestPath, lines.join("\n") + "\n");
  return manifestPath;
}
