import { describe, expect, it } from "vitest";

import { loadEncoder, resolveModel, EncoderLoadError } from "../src/encoder.js";
import { tokenize } from "../src/corpus.js";

function cosine(a: Float64Array | number[], b: Float64Array | number[]): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
  return dot;
}

function norm(v: Float64Array | number[]): number {
  return Math.sqrt(cosine(v, v));
}

describe("model resolution", () => {
  it("accepts the default alias and explicit ids", () => {
    expect(resolveModel("default")).toEqual({ id: "rft-256-2", dim: 256, layers: 2 });
    expect(resolveModel("rft-64-1")).toEqual({ id: "rft-64-1", dim: 64, layers: 1 });
  });

  it("rejects unknown identifiers", () => {
    expect(() => resolveModel("bert-base-uncased")).toThrow(EncoderLoadError);
    expect(() => resolveModel("rft-4-1")).toThrow(EncoderLoadError);
    expect(() => resolveModel("rft-64-99")).toThrow(EncoderLoadError);
  });
});

describe("contextual encoder", () => {
  const encoder = loadEncoder("rft-64-2");

  it("produces unit vectors", () => {
    const vec = encoder.encodeSentence(tokenize("The cat sat on the mat."));
    expect(norm(vec)).toBeCloseTo(1.0, 9);
  });

  it("is deterministic across encoder instances", () => {
    const again = loadEncoder("rft-64-2");
    const tokens = tokenize("Numbers like 42 survive tokenization.");
    const a = encoder.encodeSentence(tokens);
    const b = again.encodeSentence(tokens);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("gives duplicate sentences cosine >= 0.99", () => {
    const a = encoder.encodeSentence(tokenize("Officials confirmed the result on Monday."));
    const b = encoder.encodeSentence(tokenize("Officials confirmed the result on Monday."));
    expect(cosine(a, b)).toBeGreaterThanOrEqual(0.99);
  });

  it("separates unrelated sentences", () => {
    const a = encoder.encodeSentence(tokenize("quantum flux harmonics"));
    const b = encoder.encodeSentence(tokenize("municipal water budget"));
    expect(Math.abs(cosine(a, b))).toBeLessThan(0.9);
  });

  it("is contextual: a token's representation depends on its sentence", () => {
    const inRiver = encoder.encodeTokens(tokenize("bank of the river"));
    const inMoney = encoder.encodeTokens(tokenize("bank of the money"));
    // token 0 is "bank" in both; context differs only at the last position
    const drift = cosine(inRiver[0], inMoney[0]);
    expect(drift).toBeLessThan(0.9999);
    expect(drift).toBeGreaterThan(0.5); // still recognizably the same token
  });

  it("different model ids give different weights", () => {
    const other = loadEncoder("rft-64-1");
    const tokens = tokenize("same input different model");
    const a = encoder.encodeSentence(tokens);
    const b = other.encodeSentence(tokens);
    expect(Math.abs(cosine(a, b))).toBeLessThan(0.999);
  });

  it("rejects empty sentences", () => {
    expect(() => encoder.encodeSentence([])).toThrow();
  });
});

describe("tokenizer", () => {
  it("lowercases and splits punctuation", () => {
    expect(tokenize("The cat sat.")).toEqual(["the", "cat", "sat", "."]);
    expect(tokenize("don't stop")).toEqual(["don", "'", "t", "stop"]);
    expect(tokenize("")).toEqual([]);
  });
});
