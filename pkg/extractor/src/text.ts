import { fnv1a, hashVector } from "./rand";

export const TEXT_DIM = 768;

// Fallback word encoder. Each word is split into sub-word chunks, each
// chunk hashed into a unit vector, and the chunks averaged back into one
// word vector; a light mix of the neighboring words makes the embedding
// context-sensitive. Deterministic by construction.

const CHUNK = 6;
const CONTEXT_WEIGHT = 0.15;

export function splitSentences(text: string): string[] {
  const out: string[] = [];
  for (const piece of text.split(/(?<=[.!?])\s+/)) {
    const trimmed = piece.trim();
    if (trimmed.length > 0) {
      out.push(trimmed);
    }
  }
  return out;
}

export function tokenize(sentence: string): string[] {
  return sentence
    .split(/\s+/)
    .map((t) => t.replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, ""))
    .filter((t) => t.length > 0);
}

function subwordPieces(word: string): string[] {
  const lower = word.toLowerCase();
  if (lower.length <= CHUNK) {
    return [lower];
  }
  const pieces: string[] = [];
  for (let i = 0; i < lower.length; i += CHUNK) {
    pieces.push(lower.slice(i, i + CHUNK));
  }
  return pieces;
}

function wordVector(word: string): Float32Array {
  const pieces = subwordPieces(word);
  const acc = new Float32Array(TEXT_DIM);
  for (const piece of pieces) {
    const v = hashVector(fnv1a("w:" + piece), TEXT_DIM);
    for (let i = 0; i < TEXT_DIM; i++) {
      acc[i] += v[i] / pieces.length;
    }
  }
  return acc;
}

/** One [n_words, 768] matrix per sentence; empty input is an error. */
export function encodeSentences(text: string): Float32Array[][] {
  const sentences = splitSentences(text);
  if (sentences.length === 0) {
    throw new Error("cannot encode empty text");
  }
  const encoded: Float32Array[][] = [];
  for (const sentence of sentences) {
    const words = tokenize(sentence);
    if (words.length === 0) {
      continue;
    }
    const base = words.map(wordVector);
    const rows = base.map((v, idx) => {
      const out = new Float32Array(v);
      for (const j of [idx - 1, idx + 1]) {
        if (j >= 0 && j < base.length) {
          for (let i = 0; i < TEXT_DIM; i++) {
            out[i] += CONTEXT_WEIGHT * base[j][i];
          }
        }
      }
      return out;
    });
    encoded.push(rows);
  }
  if (encoded.length === 0) {
    throw new Error("text contains no encodable words");
  }
  return encoded;
}
