/**
 * Deterministic contextual sentence encoder.
 *
 * A frozen random-feature transformer: token vectors are derived by hashing
 * the token string, a sinusoidal position signal is added, and a fixed
 * stack of self-attention layers (weights seeded from the model identifier)
 * lets each token attend over its sentence before mean pooling. No network
 * access and no stored weights: the identifier fully determines the model,
 * so runs are reproducible and duplicate sentences encode identically.
 *
 * Model identifiers follow `rft-<dim>-<layers>`, e.g. `rft-256-2` (the
 * default, aliased as `default`). Anything else fails to load.
 */

import { gaussian, seededRng } from "./rng.js";

export interface EncoderSpec {
  id: string;
  dim: number;
  layers: number;
}

export class EncoderLoadError extends Error {}

const ALIASES: Record<string, string> = { default: "rft-256-2" };
const MODEL_PATTERN = /^rft-(\d+)-(\d+)$/;
const MIN_DIM = 16;
const MAX_DIM = 2048;
const MAX_LAYERS = 8;

export function resolveModel(identifier: string): EncoderSpec {
  const id = ALIASES[identifier] ?? identifier;
  const match = MODEL_PATTERN.exec(id);
  if (!match) {
    throw new EncoderLoadError(
      `unknown encoder model '${identifier}': expected 'rft-<dim>-<layers>' (e.g. rft-256-2) or 'default'`,
    );
  }
  const dim = Number(match[1]);
  const layers = Number(match[2]);
  if (!Number.isInteger(dim) || dim < MIN_DIM || dim > MAX_DIM) {
    throw new EncoderLoadError(`encoder dim ${dim} outside [${MIN_DIM}, ${MAX_DIM}]`);
  }
  if (!Number.isInteger(layers) || layers < 1 || layers > MAX_LAYERS) {
    throw new EncoderLoadError(`encoder layer count ${layers} outside [1, ${MAX_LAYERS}]`);
  }
  return { id, dim, layers };
}

type Matrix = Float64Array; // row-major dim x dim

interface LayerWeights {
  wq: Matrix;
  wk: Matrix;
  wv: Matrix;
  wo: Matrix;
}

function seededMatrix(modelId: string, layer: number, name: string, dim: number): Matrix {
  const rng = seededRng("rft-weights", modelId, layer, name);
  const scale = 1.0 / Math.sqrt(dim);
  const out = new Float64Array(dim * dim);
  for (let i = 0; i < out.length; i++) {
    out[i] = gaussian(rng) * scale;
  }
  return out;
}

function normalize(vec: Float64Array): Float64Array {
  let sq = 0;
  for (let i = 0; i < vec.length; i++) sq += vec[i] * vec[i];
  const norm = Math.sqrt(sq);
  if (norm < 1e-12) {
    vec.fill(1.0 / Math.sqrt(vec.length));
    return vec;
  }
  for (let i = 0; i < vec.length; i++) vec[i] /= norm;
  return vec;
}

/** y = x W for a row vector x and row-major square W. */
function matVec(x: Float64Array, w: Matrix, dim: number, out: Float64Array): void {
  out.fill(0);
  for (let i = 0; i < dim; i++) {
    const xi = x[i];
    if (xi === 0) continue;
    const row = i * dim;
    for (let j = 0; j < dim; j++) {
      out[j] += xi * w[row + j];
    }
  }
}

export class ContextualEncoder {
  readonly spec: EncoderSpec;
  private readonly layerWeights: LayerWeights[];
  private readonly tokenCache = new Map<string, Float64Array>();

  constructor(spec: EncoderSpec) {
    this.spec = spec;
    this.layerWeights = [];
    for (let layer = 0; layer < spec.layers; layer++) {
      this.layerWeights.push({
        wq: seededMatrix(spec.id, layer, "wq", spec.dim),
        wk: seededMatrix(spec.id, layer, "wk", spec.dim),
        wv: seededMatrix(spec.id, layer, "wv", spec.dim),
        wo: seededMatrix(spec.id, layer, "wo", spec.dim),
      });
    }
  }

  private tokenVector(token: string): Float64Array {
    let vec = this.tokenCache.get(token);
    if (!vec) {
      const rng = seededRng("rft-token", this.spec.id, token);
      vec = new Float64Array(this.spec.dim);
      for (let i = 0; i < vec.length; i++) vec[i] = gaussian(rng);
      normalize(vec);
      this.tokenCache.set(token, vec);
    }
    return vec;
  }

  private positionSignal(position: number): Float64Array {
    const { dim } = this.spec;
    const out = new Float64Array(dim);
    for (let i = 0; i < dim; i += 2) {
      const freq = Math.pow(10000, -i / dim);
      out[i] = Math.sin(position * freq);
      if (i + 1 < dim) out[i + 1] = Math.cos(position * freq);
    }
    return out;
  }

  /**
   * Token representations after the attention stack, one row per token.
   * Positions are sentence-internal, so identical sentences encode
   * identically wherever they appear in a document.
   */
  encodeTokens(tokens: string[]): Float64Array[] {
    const { dim, layers } = this.spec;
    const n = tokens.length;
    let rows: Float64Array[] = tokens.map((token, position) => {
      const base = this.tokenVector(token);
      const pos = this.positionSignal(position);
      const row = new Float64Array(dim);
      for (let i = 0; i < dim; i++) row[i] = base[i] + 0.3 * pos[i];
      return normalize(row);
    });

    const q = new Float64Array(dim);
    const scores = new Float64Array(n);
    for (let layer = 0; layer < layers; layer++) {
      const { wq, wk, wv, wo } = this.layerWeights[layer];
      const keys = rows.map((row) => {
        const k = new Float64Array(dim);
        matVec(row, wk, dim, k);
        return k;
      });
      const values = rows.map((row) => {
        const v = new Float64Array(dim);
        matVec(row, wv, dim, v);
        return v;
      });
      const next: Float64Array[] = [];
      const invSqrt = 1.0 / Math.sqrt(dim);
      for (let i = 0; i < n; i++) {
        matVec(rows[i], wq, dim, q);
        let max = -Infinity;
        for (let j = 0; j < n; j++) {
          let dot = 0;
          for (let c = 0; c < dim; c++) dot += q[c] * keys[j][c];
          scores[j] = dot * invSqrt;
          if (scores[j] > max) max = scores[j];
        }
        let total = 0;
        for (let j = 0; j < n; j++) {
          scores[j] = Math.exp(scores[j] - max);
          total += scores[j];
        }
        const mixed = new Float64Array(dim);
        for (let j = 0; j < n; j++) {
          const weight = scores[j] / total;
          const value = values[j];
          for (let c = 0; c < dim; c++) mixed[c] += weight * value[c];
        }
        const projected = new Float64Array(dim);
        matVec(mixed, wo, dim, projected);
        const row = new Float64Array(dim);
        for (let c = 0; c < dim; c++) row[c] = rows[i][c] + projected[c];
        next.push(normalize(row));
      }
      rows = next;
    }
    return rows;
  }

  /** Mean-pooled, L2-normalized sentence vector. */
  encodeSentence(tokens: string[]): Float64Array {
    const { dim } = this.spec;
    if (tokens.length === 0) {
      throw new Error("cannot encode an empty sentence");
    }
    const rows = this.encodeTokens(tokens);
    const pooled = new Float64Array(dim);
    for (const row of rows) {
      for (let i = 0; i < dim; i++) pooled[i] += row[i];
    }
    for (let i = 0; i < dim; i++) pooled[i] /= rows.length;
    return normalize(pooled);
  }
}

export function loadEncoder(identifier: string): ContextualEncoder {
  return new ContextualEncoder(resolveModel(identifier));
}
