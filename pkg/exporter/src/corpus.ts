/**
 * Corpus JSONL reading, tokenization and truncation.
 *
 * The rules mirror the consumer pipeline exactly (lowercase, punctuation
 * split from words, empty sentences dropped, documents truncated to the
 * token budget by whole sentences with the first sentence always kept) so
 * the exported vector count always matches what the consumer parses.
 */

export interface CorpusDocument {
  id: string;
  /** Token lists of the surviving sentences, in document order. */
  sentences: string[][];
  /** True when the token budget dropped at least one sentence. */
  truncated: boolean;
}

const TOKEN_PATTERN = /[\p{L}\p{N}_]+|[^\p{L}\p{N}_\s]/gu;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_PATTERN) ?? [];
}

export function parseDocument(line: string, maxTokens: number): CorpusDocument | null {
  const record = JSON.parse(line) as { id?: unknown; sentences?: unknown };
  if (typeof record.id !== "string" || !Array.isArray(record.sentences)) {
    throw new Error("record must have string 'id' and array 'sentences'");
  }
  const tokenized = record.sentences
    .map((sentence) => {
      if (typeof sentence !== "string") {
        throw new Error("'sentences' entries must be strings");
      }
      return tokenize(sentence);
    })
    .filter((tokens) => tokens.length > 0);
  if (tokenized.length === 0) {
    return null;
  }
  const kept: string[][] = [];
  let total = 0;
  for (const tokens of tokenized) {
    if (kept.length > 0 && total + tokens.length > maxTokens) break;
    kept.push(tokens);
    total += tokens.length;
  }
  return { id: record.id, sentences: kept, truncated: kept.length < tokenized.length };
}
