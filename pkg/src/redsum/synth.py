"""Synthetic redundancy benchmark corpus.

Each document contains a salient sentence A, a near-duplicate A' (two of A's
tokens swapped for rare noise tokens), a complementary sentence B, and
low-salience noise fillers; the reference abstract is exactly [A, B].
Pure-salience selection is drawn to both A and A', so strategies only win by
demoting the near-duplicate and finding B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from redsum.corpus import Document, Sentence

A_LEN = 7
B_LEN = 5
FILLER_LEN = 4
REPLACE_POSITIONS = (1, 5)  # interior swaps keep shared bigrams and a trigram


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 500
    seed: int = 0
    n_fillers: int = 6
    topic_vocab: int = 50
    complement_vocab: int = 30
    noise_vocab: int = 300


@dataclass(frozen=True)
class DocRoles:
    """Post-shuffle sentence positions of the planted roles."""

    a: int
    a_prime: int
    b: int


def _sentence(index: int, tokens: list[str]) -> Sentence:
    return Sentence(index=index, text=" ".join(tokens), tokens=tuple(tokens))


def generate(prefix: str, config: SynthConfig) -> tuple[list[Document], dict[str, DocRoles]]:
    """Generate documents plus a map from document id to planted roles."""
    rng = np.random.default_rng(config.seed)
    topics = [f"topic{i:02d}" for i in range(config.topic_vocab)]
    facts = [f"fact{i:02d}" for i in range(config.complement_vocab)]
    noise = [f"noise{i:03d}" for i in range(config.noise_vocab)]

    docs: list[Document] = []
    roles: dict[str, DocRoles] = {}
    for d in range(config.n_docs):
        a_tokens = [topics[i] for i in rng.choice(config.topic_vocab, size=A_LEN, replace=False)]
        a_prime_tokens = list(a_tokens)
        for pos, noise_idx in zip(REPLACE_POSITIONS, rng.choice(config.noise_vocab, size=len(REPLACE_POSITIONS), replace=False)):
            a_prime_tokens[pos] = noise[noise_idx]
        b_tokens = [facts[i] for i in rng.choice(config.complement_vocab, size=B_LEN, replace=False)]
        fillers = [
            [noise[i] for i in rng.choice(config.noise_vocab, size=FILLER_LEN, replace=False)]
            for _ in range(config.n_fillers)
        ]

        token_lists = [a_tokens, a_prime_tokens, b_tokens] + fillers
        order = rng.permutation(len(token_lists))
        positions = {int(src): dst for dst, src in enumerate(order)}
        sentences = tuple(_sentence(dst, token_lists[int(src)]) for dst, src in enumerate(order))

        doc_id = f"{prefix}-{d:04d}"
        abstract_text = (" ".join(a_tokens), " ".join(b_tokens))
        docs.append(
            Document(
                id=doc_id,
                sentences=sentences,
                abstract=(tuple(a_tokens), tuple(b_tokens)),
                abstract_text=abstract_text,
            )
        )
        roles[doc_id] = DocRoles(a=positions[0], a_prime=positions[1], b=positions[2])
    return docs, roles
