"""Command-line pipeline: ingest -> label -> embed -> train -> summarize ->
evaluate/analyze, plus the synthetic benchmark generator.

Exit codes: 0 success, 1 usage error, 2 data/processing error. All
randomness is controlled by --seed; per-document work parallelizes under
--threads (or REDSUM_THREADS), and any thread count gives byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from redsum import corpus as corpus_mod
from redsum import evaluate as eval_mod
from redsum import synth as synth_mod
from redsum.embed import DEFAULT_DIM, EmbeddingSet, save_embeddings
from redsum.grad import load_checkpoint
from redsum.oracle import greedy_oracle_labels
from redsum.rankers import CtxRankerParams, CtxTrainConfig, SeqRankerParams, SeqTrainConfig, train_ctx, train_seq
from redsum.rouge import MEASURES
from redsum.salience import SalienceModel, SalienceTrainConfig, train_salience
from redsum.select import DEFAULT_MMR_LAMBDA, STRATEGIES, StrategyContext, run_strategy

logger = logging.getLogger("redsum")

DEFAULTS = {
    "l": 3,
    "tau": 20.0,
    "m": 10,
    "d": 20,
    "epochs": 2,
    "adam_beta1": 0.9,
    "adam_beta2": 0.999,
    "init_lr": 2e-3,
    "warmup": 100,
    "mmr_lambda": DEFAULT_MMR_LAMBDA,
    "dim": DEFAULT_DIM,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise UsageError(message)


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("REDSUM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("ignoring non-integer REDSUM_THREADS=%r", env)
    return max(1, os.cpu_count() or 1)


def _parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load_corpus(path, max_tokens: int = corpus_mod.DEFAULT_MAX_TOKENS):
    docs = corpus_mod.load_corpus(path, corpus_mod.CorpusConfig(max_tokens=max_tokens))
    if not docs:
        raise corpus_mod.CorpusError(f"no usable documents in {path}")
    return docs


def _embeddings_for(docs, args) -> EmbeddingSet:
    if getattr(args, "embeddings", None):
        return EmbeddingSet.from_file(args.embeddings, docs)
    return EmbeddingSet.native(docs, dim=args.dim)


def _check_dims(embeddings: EmbeddingSet, *checkpoints) -> None:
    for ckpt in checkpoints:
        if ckpt is not None and ckpt.dim != embeddings.dim:
            raise ValueError(
                f"checkpoint dim {ckpt.dim} does not match embedding dim {embeddings.dim}"
            )


# --- subcommands ---------------------------------------------------------


def cmd_ingest(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    corpus_mod.save_corpus(docs, args.out)
    logger.info("ingested %d documents -> %s", len(docs), args.out)
    return 0


def cmd_label(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    missing = [doc.id for doc in docs if doc.abstract is None]
    if missing:
        raise corpus_mod.CorpusError(f"{len(missing)} documents without abstract (first: {missing[0]})")

    def label_one(doc):
        return doc.with_labels(greedy_oracle_labels(doc, args.max_sents, args.measure))

    labeled = _parallel_map(label_one, docs, _threads(args.threads))
    corpus_mod.save_corpus(labeled, args.out)
    logger.info("labeled %d documents -> %s", len(labeled), args.out)
    return 0


def cmd_embed(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    embeddings = EmbeddingSet.native(docs, dim=args.dim)
    save_embeddings({doc.id: embeddings.matrix(doc) for doc in docs}, args.out)
    logger.info("embedded %d documents at dim %d -> %s", len(docs), args.dim, args.out)
    return 0


def cmd_train_salience(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    embeddings = _embeddings_for(docs, args)
    config = SalienceTrainConfig(
        dim=embeddings.dim, epochs=args.epochs, seed=args.seed, init_lr=args.lr, warmup=args.warmup
    )
    model = train_salience(docs, embeddings, config)
    model.save(args.out)
    logger.info("salience model trained (final loss %.4f) -> %s", model.final_loss or 0.0, args.out)
    return 0


def cmd_train_ctx(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    embeddings = _embeddings_for(docs, args)
    salience_model = SalienceModel.load(args.salience)
    _check_dims(embeddings, salience_model)
    config = CtxTrainConfig(
        m=args.m,
        d=args.d,
        tau=args.tau,
        epochs=args.epochs,
        seed=args.seed,
        init_lr=args.lr,
        warmup=args.warmup,
        max_summary_sentences=args.max_sents,
        measure=args.measure,
        sem_norm_scope=args.sem_norm_scope,
    )
    params = train_ctx(docs, salience_model, embeddings, config)
    params.save(args.out)
    logger.info("ctx ranker trained (m=%d, d=%d, tau=%g) -> %s", args.m, args.d, args.tau, args.out)
    return 0


def cmd_train_seq(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    embeddings = _embeddings_for(docs, args)
    config = SeqTrainConfig(
        tau=args.tau,
        epochs=args.epochs,
        seed=args.seed,
        replace_prob=args.replace_prob,
        init_lr=args.lr,
        warmup=args.warmup,
        max_summary_sentences=args.max_sents,
        measure=args.measure,
    )
    params = train_seq(docs, embeddings, config)
    params.save(args.out)
    logger.info("seq ranker trained (tau=%g) -> %s", args.tau, args.out)
    return 0


def cmd_summarize(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    context = StrategyContext(mmr_lambda=args.mmr_lambda)
    if args.strategy != "lead":
        context.embeddings = _embeddings_for(docs, args)
    if args.strategy in ("topk", "triblk", "mmr", "ctx"):
        if not args.salience:
            raise UsageError(f"strategy {args.strategy!r} requires --salience")
        context.salience_model = SalienceModel.load(args.salience)
    if args.strategy == "ctx":
        if not args.ctx:
            raise UsageError("strategy 'ctx' requires --ctx")
        context.ctx_params = CtxRankerParams.load(args.ctx)
    if args.strategy == "seq":
        if not args.seq:
            raise UsageError("strategy 'seq' requires --seq")
        context.seq_params = SeqRankerParams.load(args.seq)
    if context.embeddings is not None:
        _check_dims(context.embeddings, context.salience_model, context.ctx_params, context.seq_params)

    def summarize_one(doc):
        result = run_strategy(args.strategy, doc, args.l, context)
        return {
            "id": doc.id,
            "selected": [int(i) for i in result.chosen],
            "summary": [doc.sentences[i].text for i in result.chosen],
        }

    records = _parallel_map(summarize_one, docs, _threads(args.threads))
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    logger.info("summarized %d documents with %s -> %s", len(records), args.strategy, args.out)
    return 0


def _load_selections(path) -> dict[str, list[int]]:
    selections: dict[str, list[int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                selections[record["id"]] = [int(i) for i in record["selected"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"selections line {lineno}: {exc}") from exc
    return selections


def cmd_evaluate(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    selections = _load_selections(args.selections)
    report = eval_mod.evaluate_rouge(selections, docs)
    payload = {"config": {**DEFAULTS, "l": args.l}, **report.as_dict()}
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.per_doc:
        with open(args.per_doc, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "rouge1_f1", "rouge2_f1", "rougeL_f1"])
            for score in report.per_doc:
                writer.writerow([score.doc_id, f"{score.r1:.6f}", f"{score.r2:.6f}", f"{score.rl:.6f}"])
    logger.info(
        "evaluated %d documents: R1 %.2f R2 %.2f RL %.2f -> %s",
        len(report.per_doc),
        100 * report.mean_r1,
        100 * report.mean_r2,
        100 * report.mean_rl,
        args.report,
    )
    return 0


def cmd_analyze(args) -> int:
    docs = _load_corpus(args.corpus, args.max_tokens)
    selections = _load_selections(args.selections)
    p_at_k = eval_mod.mean_precision_at_k(selections, docs, args.l)
    histogram = eval_mod.position_histogram(selections)
    with open(f"{args.out_prefix}_p_at_k.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "precision"])
        for k, value in sorted(p_at_k.items()):
            writer.writerow([k, f"{value:.6f}"])
    with open(f"{args.out_prefix}_positions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket", "proportion"])
        for (lo, hi), value in zip(eval_mod.DEFAULT_POSITION_BUCKETS, histogram):
            label = str(lo) if hi == lo else (f"{lo}-{hi}" if hi is not None else f"{lo}+")
            writer.writerow([label, f"{value:.6f}"])
    logger.info("analysis tables -> %s_p_at_k.csv, %s_positions.csv", args.out_prefix, args.out_prefix)
    return 0


def cmd_synth(args) -> int:
    train_docs, train_roles = synth_mod.generate("train", synth_mod.SynthConfig(n_docs=args.train_docs, seed=args.seed))
    test_docs, test_roles = synth_mod.generate("test", synth_mod.SynthConfig(n_docs=args.test_docs, seed=args.seed + 1))
    corpus_mod.save_corpus(train_docs, args.out_train)
    corpus_mod.save_corpus(test_docs, args.out_test)
    if args.roles:
        payload = {
            doc_id: dataclasses.asdict(roles)
            for doc_id, roles in {**train_roles, **test_roles}.items()
        }
        with open(args.roles, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    logger.info("synthetic corpus: %d train -> %s, %d test -> %s", len(train_docs), args.out_train, len(test_docs), args.out_test)
    return 0


# --- argument wiring ------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, threads: bool = True) -> None:
    p.add_argument("--max-tokens", type=int, default=corpus_mod.DEFAULT_MAX_TOKENS)
    if threads:
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: cores, or REDSUM_THREADS)")


def _add_embedding_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", default=None, help="external embedding JSONL (overrides the native provider)")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM, help="native embedding dimension")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=DEFAULTS["epochs"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=DEFAULTS["init_lr"])
    p.add_argument("--warmup", type=int, default=DEFAULTS["warmup"])


def build_parser() -> _Parser:
    parser = _Parser(prog="redsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize and truncate a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="greedy oracle labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-sents", type=int, default=DEFAULTS["l"])
    p.add_argument("--measure", choices=MEASURES, default="mean12")
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("embed", help="native hashed TF-IDF embeddings")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train-salience", help="train the salience ranker")
    p.add_argument("--corpus", required=True, help="labeled corpus JSONL")
    p.add_argument("--out", required=True, help="checkpoint path")
    _add_embedding_args(p)
    _add_train_args(p)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_train_salience)

    p = sub.add_parser("train-ctx", help="train the selection ranker")
    p.add_argument("--corpus", required=True)
    p.add_argument("--salience", required=True, help="frozen salience checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=int, default=DEFAULTS["m"])
    p.add_argument("--d", type=int, default=DEFAULTS["d"])
    p.add_argument("--tau", type=float, default=DEFAULTS["tau"])
    p.add_argument("--max-sents", type=int, default=DEFAULTS["l"])
    p.add_argument("--measure", choices=MEASURES, default="mean12")
    p.add_argument("--sem-norm-scope", choices=("step", "document"), default="step")
    _add_embedding_args(p)
    _add_train_args(p)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_train_ctx)

    p = sub.add_parser("train-seq", help="train the sequence ranker")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=DEFAULTS["tau"])
    p.add_argument("--replace-prob", type=float, default=0.2)
    p.add_argument("--max-sents", type=int, default=DEFAULTS["l"])
    p.add_argument("--measure", choices=MEASURES, default="mean12")
    _add_embedding_args(p)
    _add_train_args(p)
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_train_seq)

    p = sub.add_parser("summarize", help="select summary sentences")
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--l", type=int, default=DEFAULTS["l"], help="summary sentence count")
    p.add_argument("--salience", default=None)
    p.add_argument("--ctx", default=None)
    p.add_argument("--seq", default=None)
    p.add_argument("--mmr-lambda", dest="mmr_lambda", type=float, default=DEFAULT_MMR_LAMBDA)
    _add_embedding_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="corpus-level ROUGE report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--selections", required=True)
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--per-doc", default=None, help="optional per-document CSV")
    p.add_argument("--l", type=int, default=DEFAULTS["l"])
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="P@k and position-histogram tables")
    p.add_argument("--corpus", required=True, help="labeled corpus JSONL")
    p.add_argument("--selections", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--l", type=int, default=DEFAULTS["l"])
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="generate the synthetic redundancy benchmark")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--train-docs", type=int, default=500)
    p.add_argument("--test-docs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--roles", default=None, help="optional JSON sidecar with planted sentence roles")
    p.set_defaults(func=cmd_synth)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        logger.error("%s", exc)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
