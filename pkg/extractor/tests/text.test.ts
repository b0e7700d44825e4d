import { describe, expect, it } from "vitest";

import { TEXT_DIM, encodeSentences, splitSentences, tokenize } from "../src/text";

describe("sentence segmentation", () => {
  it("splits on terminal punctuation", () => {
    expect(splitSentences("One here. Two there! Three?")).toEqual([
      "One here.",
      "Two there!",
      "Three?",
    ]);
  });

  it("keeps abbreviating periods inside a sentence together with it", () => {
    expect(splitSentences("Just one sentence")).toEqual(["Just one sentence"]);
  });
});

describe("tokenization", () => {
  it("strips outer punctuation only", () => {
    expect(tokenize('He said "hello," then left.')).toEqual([
      "He",
      "said",
      "hello",
      "then",
      "left",
    ]);
  });
});

describe("text encoder", () => {
  it("yields one matrix per sentence with 768 columns", () => {
    const out = encodeSentences("First sentence here. Second one now.");
    expect(out).toHaveLength(2);
    expect(out[0]).toHaveLength(3);
    for (const row of out[0]) {
      expect(row).toHaveLength(TEXT_DIM);
    }
  });

  it("rejects empty input", () => {
    expect(() => encodeSentences("")).toThrow(/empty/);
    expect(() => encodeSentences("   ")).toThrow();
  });

  it("is deterministic", () => {
    const a = encodeSentences("Mrs Betram visited London.");
    const b = encodeSentences("Mrs Betram visited London.");
    expect(a).toHaveLength(b.length);
    for (let s = 0; s < a.length; s++) {
      for (let w = 0; w < a[s].length; w++) {
        expect(Array.from(a[s][w])).toEqual(Array.from(b[s][w]));
      }
    }
  });

  it("gives different words different vectors", () => {
    const [rows] = encodeSentences("alpha omega");
    const dot = rows[0].reduce((acc, x, i) => acc + x * rows[1][i], 0);
    expect(Math.abs(dot)).toBeLessThan(0.9);
  });

  it("mixes context so the same word differs between neighborhoods", () => {
    const [a] = encodeSentences("bridge over water");
    const [b] = encodeSentences("bridge under construction");
    const same = Array.from(a[0]).every((x, i) => x === b[0][i]);
    expect(same).toBe(false);
  });
});
