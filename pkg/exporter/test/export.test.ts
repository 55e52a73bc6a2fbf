import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { exportEmbeddings } from "../src/export.js";
import { main } from "../src/cli.js";

const quiet = { warn: () => {}, info: () => {} };

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "redsum-export-"));
}

function writeCorpus(path: string, docs: object[]): void {
  writeFileSync(path, docs.map((d) => JSON.stringify(d)).join("\n") + "\n");
}

function tenDocCorpus(): object[] {
  const docs: object[] = [];
  for (let d = 0; d < 10; d++) {
    docs.push({
      id: `doc-${d}`,
      sentences: [
        `Sentence one of document ${d}.`,
        "A duplicate appears here.",
        "A duplicate appears here.",
        `Closing line number ${d} with detail.`,
      ],
      abstract: [`Summary of document ${d}.`],
    });
  }
  return docs;
}

async function runExport(docs: object[], overrides: Partial<Parameters<typeof exportEmbeddings>[0]> = {}) {
  const dir = tempDir();
  const corpusPath = join(dir, "corpus.jsonl");
  const outputPath = join(dir, "embeddings.jsonl");
  writeCorpus(corpusPath, docs as object[]);
  const stats = await exportEmbeddings(
    { corpusPath, outputPath, model: "rft-64-1", maxTokens: 512, batchSize: 8, device: "cpu", ...overrides },
    quiet,
  );
  const records = readFileSync(outputPath, "utf-8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
  return { stats, records, outputPath, corpusPath };
}

describe("exportEmbeddings", () => {
  it("writes one schema-conformant line per document", async () => {
    const { stats, records } = await runExport(tenDocCorpus());
    expect(stats.documents).toBe(10);
    expect(records).toHaveLength(10);
    for (const record of records) {
      expect(Object.keys(record).sort()).toEqual(["dim", "id", "vectors"]);
      expect(record.dim).toBe(64);
      expect(record.vectors).toHaveLength(4);
      for (const vec of record.vectors) {
        expect(vec).toHaveLength(64);
        const norm = Math.sqrt(vec.reduce((s: number, x: number) => s + x * x, 0));
        expect(norm).toBeCloseTo(1.0, 6);
      }
    }
  });

  it("encodes duplicate sentences identically", async () => {
    const { records } = await runExport(tenDocCorpus());
    for (const record of records) {
      const [, dup1, dup2] = record.vectors;
      const dot = dup1.reduce((s: number, x: number, i: number) => s + x * dup2[i], 0);
      expect(dot).toBeGreaterThanOrEqual(0.99);
    }
  });

  it("is deterministic across runs", async () => {
    const a = await runExport(tenDocCorpus());
    const b = await runExport(tenDocCorpus());
    expect(readFileSync(a.outputPath, "utf-8")).toBe(readFileSync(b.outputPath, "utf-8"));
  });

  it("truncates over-budget documents by whole sentences with a warning", async () => {
    const long = {
      id: "long",
      sentences: ["alpha ".repeat(8).trim() + " .", "beta ".repeat(8).trim() + " .", "gamma end ."],
    };
    const warnings: string[] = [];
    const dir = tempDir();
    const corpusPath = join(dir, "c.jsonl");
    const outputPath = join(dir, "e.jsonl");
    writeCorpus(corpusPath, [long]);
    const stats = await exportEmbeddings(
      { corpusPath, outputPath, model: "rft-64-1", maxTokens: 10, batchSize: 8, device: "cpu" },
      { warn: (m) => warnings.push(m), info: () => {} },
    );
    const records = readFileSync(outputPath, "utf-8").trim().split("\n").map((l) => JSON.parse(l));
    expect(stats.truncated).toBe(1);
    expect(records[0].vectors).toHaveLength(1); // only the first sentence fits the budget
    expect(warnings.some((w) => w.includes("truncated"))).toBe(true);
  });

  it("skips malformed and empty records, keeps going", async () => {
    const dir = tempDir();
    const corpusPath = join(dir, "c.jsonl");
    const outputPath = join(dir, "e.jsonl");
    writeFileSync(
      corpusPath,
      ['{"id": "ok", "sentences": ["fine here ."]}', "{broken", '{"id": "empty", "sentences": [""]}'].join("\n") + "\n",
    );
    const stats = await exportEmbeddings(
      { corpusPath, outputPath, model: "rft-64-1", maxTokens: 512, batchSize: 8, device: "cpu" },
      quiet,
    );
    expect(stats.documents).toBe(1);
    expect(stats.skipped).toBe(2);
  });
});

describe("cli", () => {
  it("usage errors exit 1", async () => {
    expect(await main([])).toBe(1);
    expect(await main(["--corpus", "x", "--out", "y", "--bogus", "z"])).toBe(1);
  });

  it("missing corpus exits 2", async () => {
    expect(await main(["--corpus", "/nonexistent/c.jsonl", "--out", "/tmp/e.jsonl"])).toBe(2);
  });

  it("unknown encoder model exits 2 with a message", async () => {
    const dir = tempDir();
    const corpusPath = join(dir, "c.jsonl");
    writeCorpus(corpusPath, [{ id: "a", sentences: ["hello there ."] }]);
    expect(await main(["--corpus", corpusPath, "--out", join(dir, "e.jsonl"), "--model", "nope-7b"])).toBe(2);
  });

  it("happy path exits 0", async () => {
    const dir = tempDir();
    const corpusPath = join(dir, "c.jsonl");
    writeCorpus(corpusPath, tenDocCorpus());
    expect(await main(["--corpus", corpusPath, "--out", join(dir, "e.jsonl"), "--model", "rft-64-1"])).toBe(0);
  });
});

describe("consumer conformance", () => {
  const probe = spawnSync("python3", ["-c", "import redsum"], { encoding: "utf-8" });
  const available = probe.status === 0;

  it.skipIf(!available)("exporter output loads through the consumer embedding reader", async () => {
    const { outputPath, corpusPath } = await runExport(tenDocCorpus());
    const script = `
import json, sys
import numpy as np
from redsum.corpus import load_corpus
from redsum.embed import EmbeddingSet, load_embeddings

by_doc = load_embeddings(sys.argv[1])
docs = load_corpus(sys.argv[2])
emb = EmbeddingSet.from_file(sys.argv[1], docs)
dup_cos = [float(np.dot(emb.matrix(d)[1], emb.matrix(d)[2])) for d in docs]
print(json.dumps({"docs": len(by_doc), "dim": emb.dim, "min_dup_cos": min(dup_cos)}))
`;
    const out = execFileSync("python3", ["-c", script, outputPath, corpusPath], { encoding: "utf-8" });
    const result = JSON.parse(out.trim().split("\n").pop()!);
    expect(result.docs).toBe(10);
    expect(result.dim).toBe(64);
    expect(result.min_dup_cos).toBeGreaterThanOrEqual(0.99);
  });
});
