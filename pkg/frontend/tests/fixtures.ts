/**
 * Test fixtures: reviews with independently derived token boundaries.
 *
 * The fixture tokenizer works in CHARACTER space and converts to byte
 * offsets separately, so tests can cross-check the client's byte
 * arithmetic against plain string slicing.
 */

import type { ReviewPayload, TokenBoundary } from "../src/api.js";

export interface FixtureToken {
  charStart: number;
  charEnd: number;
  byteStart: number;
  byteEnd: number;
}

const encoder = new TextEncoder();

export function fixtureTokenize(text: string): FixtureToken[] {
  // cumulative UTF-8 byte length per character position
  const byteAt: number[] = [0];
  for (const ch of Array.from(text)) {
    byteAt.push(byteAt[byteAt.length - 1] + encoder.encode(ch).length);
  }
  // char index -> code point index mapping (JS strings are UTF-16)
  const chars = Array.from(text);
  const tokens: FixtureToken[] = [];
  let i = 0;
  while (i < chars.length) {
    if (/\s/.test(chars[i])) {
      i += 1;
      continue;
    }
    let j = i;
    if (/[\p{L}\p{N}_]/u.test(chars[i])) {
      while (j < chars.length && /[\p{L}\p{N}_]/u.test(chars[j])) j += 1;
    } else {
      j = i + 1;
    }
    tokens.push({
      charStart: i,
      charEnd: j,
      byteStart: byteAt[i],
      byteEnd: byteAt[j],
    });
    i = j;
  }
  return tokens;
}

export const FIXTURE_TEXTS = [
  "Amazing selection of wines, perfect for a date night.",
  "The café was “great” — but the wifi kept dropping!",
  "Battery lasts 12 hours; screen is bright. No complaints at all.",
  "Süper säubere Räume, freundliches Personal, tolles Frühstück.",
  "Plot twist after plot twist … I could not put the book down ☺.",
];

export function fixtureReview(index: number): {
  payload: ReviewPayload;
  tokens: FixtureToken[];
} {
  const text = FIXTURE_TEXTS[index % FIXTURE_TEXTS.length];
  const tokens = fixtureTokenize(text);
  const boundaries: TokenBoundary[] = tokens.map((t) => [t.byteStart, t.byteEnd]);
  return {
    payload: {
      version: 1,
      review_id: `r${index}`,
      domain: "fixture",
      text,
      tokens: boundaries,
    },
    tokens,
  };
}

/** Deterministic linear-congruential RNG so test runs are reproducible. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
