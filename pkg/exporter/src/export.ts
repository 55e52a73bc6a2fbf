/**
 * Export pipeline: corpus JSONL in, embedding JSONL out.
 *
 * Output schema, one line per document:
 *   {"id": string, "dim": number, "vectors": number[][]}
 * with one L2-normalized vector per surviving corpus sentence.
 */

import { createInterface } from "node:readline";
import { createReadStream, createWriteStream } from "node:fs";
import { once } from "node:events";

import { ContextualEncoder, loadEncoder } from "./encoder.js";
import { parseDocument } from "./corpus.js";

export interface ExportConfig {
  corpusPath: string;
  outputPath: string;
  model: string;
  maxTokens: number;
  batchSize: number;
  device: string;
}

export const DEFAULT_CONFIG = {
  model: "default",
  maxTokens: 512,
  batchSize: 32,
  device: "cpu",
};

export interface ExportStats {
  documents: number;
  sentences: number;
  truncated: number;
  skipped: number;
  dim: number;
}

export interface ExportLogger {
  warn(message: string): void;
  info(message: string): void;
}

function encodeDocument(encoder: ContextualEncoder, sentences: string[][], batchSize: number): number[][] {
  const vectors: number[][] = [];
  for (let start = 0; start < sentences.length; start += batchSize) {
    for (const tokens of sentences.slice(start, start + batchSize)) {
      vectors.push(Array.from(encoder.encodeSentence(tokens)));
    }
  }
  return vectors;
}

export async function exportEmbeddings(config: ExportConfig, log: ExportLogger = console): Promise<ExportStats> {
  const encoder = loadEncoder(config.model);
  if (config.device !== "cpu") {
    log.warn(`device '${config.device}' not available; encoding on cpu`);
  }
  const stats: ExportStats = { documents: 0, sentences: 0, truncated: 0, skipped: 0, dim: encoder.spec.dim };

  const reader = createInterface({ input: createReadStream(config.corpusPath, "utf-8"), crlfDelay: Infinity });
  const writer = createWriteStream(config.outputPath, "utf-8");
  let lineNumber = 0;
  for await (const line of reader) {
    lineNumber++;
    if (line.trim() === "") continue;
    let doc;
    try {
      doc = parseDocument(line, config.maxTokens);
    } catch (err) {
      log.warn(`corpus line ${lineNumber}: skipped (${err instanceof Error ? err.message : err})`);
      stats.skipped++;
      continue;
    }
    if (doc === null) {
      log.warn(`corpus line ${lineNumber}: no surviving sentences, skipped`);
      stats.skipped++;
      continue;
    }
    if (doc.truncated) {
      log.warn(`document ${doc.id}: exceeds ${config.maxTokens} tokens, truncated to ${doc.sentences.length} sentences`);
      stats.truncated++;
    }
    const vectors = encodeDocument(encoder, doc.sentences, config.batchSize);
    const record = JSON.stringify({ id: doc.id, dim: encoder.spec.dim, vectors });
    if (!writer.write(record + "\n")) {
      await once(writer, "drain");
    }
    stats.documents++;
    stats.sentences += vectors.length;
  }
  writer.end();
  await once(writer, "finish");
  return stats;
}
