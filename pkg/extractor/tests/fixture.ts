import * as fs from "fs";
import * as path from "path";
import { PNG } from "pngjs";

export function makePng(width: number, height: number, seed: number): Buffer {
  const png = new PNG({ width, height });
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const at = (width * y + x) << 2;
      png.data[at] = (x * 7 + seed * 13) % 256;
      png.data[at + 1] = (y * 11 + seed * 29) % 256;
      png.data[at + 2] = (x * y + seed) % 256;
      png.data[at + 3] = 255;
    }
  }
  return PNG.sync.write(png);
}

export interface FixtureArticle {
  id: string;
  text: string;
  label?: 0 | 1;
  captions: Array<{ caption: string; image?: Buffer }>;
}

export function writeFixture(root: string, articles: FixtureArticle[]): void {
  articles.forEach((article, ai) => {
    const dir = path.join(root, article.id);
    fs.mkdirSync(path.join(dir, "images"), { recursive: true });
    fs.writeFileSync(path.join(dir, "article.txt"), article.text);
    if (article.label !== undefined) {
      fs.writeFileSync(path.join(dir, "label.txt"), String(article.label));
    }
    const entries = article.captions.map((cap, ci) => {
      const image = cap.image ?? makePng(24, 16, ai * 10 + ci);
      const rel = path.join("images", `img${ci}.png`);
      fs.writeFileSync(path.join(dir, rel), image);
      return { id: `${article.id}_p${ci}`, caption: cap.caption, image: rel };
    });
    fs.writeFileSync(path.join(dir, "captions.json"), JSON.stringify(entries));
  });
}

export const TWO_ARTICLES: FixtureArticle[] = [
  {
    id: "a0",
    label: 1,
    text:
      "Mrs Betram visited London on Tuesday. She praised the new bridge " +
      "across the river. Officials from Acme Corp attended the opening.",
    captions: [
      { caption: "Mrs Betram waves near the bridge in London." },
      { caption: "Crowds gather at the opening ceremony." },
    ],
  },
  {
    id: "a1",
    label: 0,
    text:
      "Scientists in Berlin announced a breakthrough in battery storage. " +
      "The results were published after a decade of research.",
    captions: [{ caption: "A laboratory bench with prototype cells in Berlin." }],
  },
];
