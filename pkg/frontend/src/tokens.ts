/**
 * Byte-exact token model for span selection.
 *
 * The server serves review text together with the byte boundaries of
 * its tokens; all selection happens on whole tokens, so the submitted
 * offsets are guaranteed to slice the served bytes to exactly the
 * highlighted text. The client never re-tokenizes.
 */

import type { TokenBoundary } from "./api.js";

const encoder = new TextEncoder();
const decoder = new TextDecoder("utf-8", { fatal: false });

export interface Selection {
  startToken: number;
  endToken: number; // inclusive
}

export class TokenizedReview {
  readonly bytes: Uint8Array;

  constructor(
    readonly text: string,
    readonly tokens: TokenBoundary[],
  ) {
    this.bytes = encoder.encode(text);
    for (const [start, end] of tokens) {
      if (start < 0 || end <= start || end > this.bytes.length) {
        throw new RangeError(`token boundary (${start}, ${end}) outside review bytes`);
      }
    }
  }

  get tokenCount(): number {
    return this.tokens.length;
  }

  /** Decoded text of the byte range [start, end). */
  sliceBytes(start: number, end: number): string {
    return decoder.decode(this.bytes.subarray(start, end));
  }

  tokenText(index: number): string {
    const [start, end] = this.tokens[index];
    return this.sliceBytes(start, end);
  }

  /** Bytes between token `index` and the next one (gap text). */
  gapText(index: number): string {
    if (index < 0) {
      return this.sliceBytes(0, this.tokens.length ? this.tokens[0][0] : this.bytes.length);
    }
    const end = this.tokens[index][1];
    const nextStart =
      index + 1 < this.tokens.length ? this.tokens[index + 1][0] : this.bytes.length;
    return this.sliceBytes(end, nextStart);
  }

  /** Byte span covered by an inclusive token selection. */
  selectionBytes(selection: Selection): { byteStart: number; byteEnd: number } {
    const { startToken, endToken } = selection;
    if (
      startToken < 0 ||
      endToken < startToken ||
      endToken >= this.tokens.length
    ) {
      throw new RangeError(
        `selection (${startToken}, ${endToken}) outside token range`,
      );
    }
    return {
      byteStart: this.tokens[startToken][0],
      byteEnd: this.tokens[endToken][1],
    };
  }

  /** The exact text a selection highlights (tokens plus inner gaps). */
  selectionText(selection: Selection): string {
    const { byteStart, byteEnd } = this.selectionBytes(selection);
    return this.sliceBytes(byteStart, byteEnd);
  }
}

/** Clicking a token then shift-clicking another yields an ordered span. */
export function normalizeSelection(a: number, b: number): Selection {
  return { startToken: Math.min(a, b), endToken: Math.max(a, b) };
}
