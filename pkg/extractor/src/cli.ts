#!/usr/bin/env node
import { parseArgs } from "node:util";

import { discoverArticles, emitManifest } from "./extract";

function main(): number {
  const { values } = parseArgs({
    options: {
      input: { type: "string", short: "i" },
      out: { type: "string", short: "o" },
      split: { type: "string", default: "extracted" },
    },
  });
  if (!values.input || !values.out) {
    console.error("usage: didan-extract --input <articles-dir> --out <dataset-dir> [--split name]");
    return 1;
  }
  try {
    const articles = discoverArticles(values.input);
    const manifest = emitManifest(articles, values.out, { split: values.split });
    console.log(JSON.stringify({ manifest, articles: articles.length }));
    return 0;
  } catch (err) {
    console.error(`extraction failed: ${(err as Error).message}`);
    return 2;
  }
}

process.exit(main());
