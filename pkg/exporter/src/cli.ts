#!/usr/bin/env node
/**
 * redsum-export: encode a corpus JSONL file into embedding JSONL.
 *
 * Exit codes: 0 success, 1 usage error, 2 data or encoder failure.
 */

import { existsSync, realpathSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { EncoderLoadError } from "./encoder.js";
import { DEFAULT_CONFIG, exportEmbeddings, type ExportConfig } from "./export.js";

const USAGE = `usage: redsum-export --corpus <corpus.jsonl> --out <embeddings.jsonl>
                     [--model rft-<dim>-<layers>] [--max-tokens 512]
                     [--batch-size 32] [--device cpu]`;

class UsageError extends Error {}

export function parseArgs(argv: string[]): ExportConfig {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    if (!flag.startsWith("--")) {
      throw new UsageError(`unexpected argument '${flag}'`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new UsageError(`flag '${flag}' needs a value`);
    }
    values.set(flag.slice(2), value);
    i++;
  }
  const known = new Set(["corpus", "out", "model", "max-tokens", "batch-size", "device"]);
  for (const key of values.keys()) {
    if (!known.has(key)) {
      throw new UsageError(`unknown flag '--${key}'`);
    }
  }
  const corpusPath = values.get("corpus");
  const outputPath = values.get("out");
  if (!corpusPath || !outputPath) {
    throw new UsageError("--corpus and --out are required");
  }
  const maxTokens = Number(values.get("max-tokens") ?? DEFAULT_CONFIG.maxTokens);
  const batchSize = Number(values.get("batch-size") ?? DEFAULT_CONFIG.batchSize);
  if (!Number.isInteger(maxTokens) || maxTokens < 1) {
    throw new UsageError("--max-tokens must be a positive integer");
  }
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new UsageError("--batch-size must be a positive integer");
  }
  return {
    corpusPath,
    outputPath,
    model: values.get("model") ?? DEFAULT_CONFIG.model,
    maxTokens,
    batchSize,
    device: values.get("device") ?? DEFAULT_CONFIG.device,
  };
}

export async function main(argv: string[]): Promise<number> {
  let config: ExportConfig;
  try {
    config = parseArgs(argv);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 1;
  }
  if (!existsSync(config.corpusPath)) {
    console.error(`corpus file not found: ${config.corpusPath}`);
    return 2;
  }
  try {
    const stats = await exportEmbeddings(config, console);
    console.error(
      `exported ${stats.documents} documents (${stats.sentences} sentences, dim ${stats.dim})` +
        `${stats.truncated ? `, ${stats.truncated} truncated` : ""}` +
        `${stats.skipped ? `, ${stats.skipped} skipped` : ""} -> ${config.outputPath}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof EncoderLoadError) {
      console.error(`encoder load failure: ${err.message}`);
    } else {
      console.error(err instanceof Error ? err.message : String(err));
    }
    return 2;
  }
}

let isDirectRun = false;
if (process.argv[1] !== undefined) {
  try {
    isDirectRun = realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    isDirectRun = false;
  }
}
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
