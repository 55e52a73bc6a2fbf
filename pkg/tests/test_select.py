import itertools

import numpy as np
import pytest

from redsum.embed import EmbeddingSet
from redsum.rankers import init_ctx_params, init_seq_params
from redsum.redundancy import ngram_set
from redsum.select import (
    SelectionError,
    select_ctx,
    select_lead,
    select_mmr,
    select_seq,
    select_topk,
    select_trigram_blocking,
    trigram_blocking_scan,
)

from .test_corpus import make_doc


def random_doc(rng, doc_id="r", vocab_size=10, max_sents=8):
    vocab = [f"w{i}" for i in range(vocab_size)]
    n = int(rng.integers(2, max_sents + 1))
    return make_doc(
        [[vocab[i] for i in rng.integers(0, vocab_size, size=rng.integers(2, 7))] for _ in range(n)],
        doc_id=doc_id,
    )


class TestLead:
    def test_standard(self):
        assert select_lead(make_doc([["a"]] * 5), 3).chosen == (0, 1, 2)

    def test_short_document(self):
        assert select_lead(make_doc([["a"], ["b"]]), 3).chosen == (0, 1)

    def test_single(self):
        assert select_lead(make_doc([["a"]]), 3).chosen == (0,)


class TestTopk:
    def test_example(self):
        assert select_topk(np.array([0.1, 0.5, 0.4]), 2).chosen == (1, 2)

    def test_uniform_ties_lowest_first(self):
        assert select_topk(np.full(5, 0.2), 3).chosen == (0, 1, 2)

    def test_l_at_least_length(self):
        assert select_topk(np.array([0.2, 0.3, 0.5]), 7).chosen == (2, 1, 0)

    def test_descending_order(self):
        sal = np.array([0.05, 0.4, 0.15, 0.4])
        assert select_topk(sal, 4).chosen == (1, 3, 2, 0)


class TestTrigramBlocking:
    def test_overlapping_runner_up_blocked(self):
        doc = make_doc(
            [
                ["the", "cat", "sat", "down"],
                ["the", "cat", "sat", "up"],  # shares trigram with sentence 0
                ["a", "dog", "ran", "far"],
            ]
        )
        sal = np.array([0.9, 0.8, 0.1])
        kept, blocked = trigram_blocking_scan(sal, doc, 2)
        assert kept == [0, 2]
        assert blocked == [1]
        # l=3 pads with the blocked sentence
        assert select_trigram_blocking(sal, doc, 3).chosen == (0, 2, 1)

    def test_no_overlap_equals_topk(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            n = int(rng.integers(2, 7))
            doc = make_doc([[f"s{i}a{trial}", f"s{i}b", f"s{i}c", f"s{i}d"] for i in range(n)])
            sal = rng.random(n)
            assert select_trigram_blocking(sal, doc, 3).chosen == select_topk(sal, 3).chosen

    def test_short_sentences_never_block(self):
        doc = make_doc([["x", "y"], ["x", "y"], ["x", "y"]])
        sal = np.array([0.5, 0.4, 0.3])
        assert select_trigram_blocking(sal, doc, 3).chosen == (0, 1, 2)

    def test_prepad_set_trigram_free_random(self):
        rng = np.random.default_rng(1)
        for trial in range(200):
            doc = random_doc(rng, doc_id=f"t{trial}", vocab_size=6)
            sal = rng.random(len(doc.sentences))
            kept, _ = trigram_blocking_scan(sal, doc, 3)
            for i, j in itertools.combinations(kept, 2):
                assert not (ngram_set(doc.sentences[i].tokens, 3) & ngram_set(doc.sentences[j].tokens, 3))


class TestMmr:
    def test_lambda_one_equals_topk(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            n = int(rng.integers(2, 9))
            sal = rng.random(n).round(1)  # rounding forces ties
            emb = rng.normal(size=(n, 8))
            emb /= np.linalg.norm(emb, axis=1, keepdims=True)
            assert select_mmr(sal, emb, 1.0, 3).chosen == select_topk(sal, 3).chosen

    def test_duplicate_embedding_demoted(self):
        # identical top-2 embeddings; third orthogonal with lower salience
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        sal = np.array([0.5, 0.45, 0.1])
        result = select_mmr(sal, emb, 0.5, 2)
        assert result.chosen == (0, 2)

    def test_l_one_is_pure_salience(self):
        emb = np.eye(3)
        sal = np.array([0.2, 0.7, 0.1])
        for lam in (0.0, 0.3, 1.0):
            assert select_mmr(sal, emb, lam, 1).chosen == (1,)

    def test_lambda_out_of_range(self):
        with pytest.raises(SelectionError):
            select_mmr(np.array([0.5]), np.eye(1), 1.5, 1)

    def test_hand_computed_objective(self):
        emb = np.array([[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]])
        sal = np.array([0.6, 0.5, 0.2])
        lam = 0.7
        # first pick: argmax salience = 0; then obj_i = lam*sal_i - 0.3*cos(i, 0)
        obj1 = lam * 0.5 - 0.3 * 0.8
        obj2 = lam * 0.2 - 0.3 * 0.0
        expected_second = 1 if obj1 > obj2 else 2
        assert select_mmr(sal, emb, lam, 2).chosen == (0, expected_second)


class TestCtxSelect:
    def test_l_one_is_salience_argmax(self):
        rng = np.random.default_rng(3)
        doc = random_doc(rng)
        emb = EmbeddingSet.native([doc], dim=16)
        params = init_ctx_params(4, 3, dim=16, tau=20.0, rng=rng)
        sal = rng.random(len(doc.sentences))
        assert select_ctx(sal, doc, emb.matrix(doc), params, 1).chosen == (int(np.argmax(sal)),)

    def test_zero_params_tie_picks_lowest_remaining(self):
        rng = np.random.default_rng(4)
        doc = make_doc([["a", "b"], ["c", "d"], ["e", "f"], ["g", "h"]])
        emb = EmbeddingSet.native([doc], dim=16)
        params = init_ctx_params(4, 3, dim=16, tau=20.0, rng=rng)
        params.w_bilinear.data[:] = 0.0
        params.w_out.data[:] = 0.0
        sal = np.array([0.1, 0.2, 0.5, 0.2])
        result = select_ctx(sal, doc, emb.matrix(doc), params, 3)
        assert result.chosen == (2, 0, 1)  # argmax salience, then lowest remaining indices

    def test_dim_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        doc = make_doc([["a", "b"], ["c", "d"]])
        emb = EmbeddingSet.native([doc], dim=16)
        params = init_ctx_params(4, 3, dim=32, tau=20.0, rng=rng)
        with pytest.raises(SelectionError):
            select_ctx(np.array([0.5, 0.5]), doc, emb.matrix(doc), params, 2)


class TestSeqSelect:
    def test_deterministic(self):
        rng = np.random.default_rng(6)
        doc = random_doc(rng)
        emb = EmbeddingSet.native([doc], dim=16)
        params = init_seq_params(16, 20.0, rng)
        r1 = select_seq(params, doc, emb.matrix(doc), emb.doc_vector(doc), 3)
        r2 = select_seq(params, doc, emb.matrix(doc), emb.doc_vector(doc), 3)
        assert r1.chosen == r2.chosen

    def test_zero_params_picks_lowest_indices(self):
        rng = np.random.default_rng(7)
        doc = make_doc([["a", "b"], ["c", "d"], ["e", "f"]])
        emb = EmbeddingSet.native([doc], dim=16)
        params = init_seq_params(16, 20.0, rng)
        for w in params.trainable:
            w.data[:] = 0.0
        assert select_seq(params, doc, emb.matrix(doc), emb.doc_vector(doc), 1).chosen == (0,)


class TestSharedInvariants:
    def test_lengths_and_uniqueness(self):
        rng = np.random.default_rng(8)
        for trial in range(30):
            doc = random_doc(rng, doc_id=f"i{trial}")
            n = len(doc.sentences)
            emb = EmbeddingSet.native([doc], dim=16)
            sal = rng.random(n)
            ctx_params = init_ctx_params(4, 3, dim=16, tau=20.0, rng=rng)
            seq_params = init_seq_params(16, 20.0, rng)
            for l in (1, 2, 3, n + 2):
                results = [
                    select_lead(doc, l),
                    select_topk(sal, l),
                    select_trigram_blocking(sal, doc, l),
                    select_mmr(sal, emb.matrix(doc), 0.6, l),
                    select_ctx(sal, doc, emb.matrix(doc), ctx_params, l),
                    select_seq(seq_params, doc, emb.matrix(doc), emb.doc_vector(doc), l),
                ]
                for result in results:
                    assert len(result.chosen) == min(l, n)
                    assert len(set(result.chosen)) == len(result.chosen)
                    assert all(0 <= i < n for i in result.chosen)

    def test_first_pick_is_salience_argmax_for_salience_strategies(self):
        rng = np.random.default_rng(9)
        for trial in range(30):
            doc = random_doc(rng, doc_id=f"f{trial}")
            n = len(doc.sentences)
            emb = EmbeddingSet.native([doc], dim=16)
            sal = rng.random(n)
            ctx_params = init_ctx_params(4, 3, dim=16, tau=20.0, rng=rng)
            first = int(np.argmax(sal))
            assert select_topk(sal, 3).chosen[0] == first
            assert select_trigram_blocking(sal, doc, 3).chosen[0] == first
            assert select_mmr(sal, emb.matrix(doc), 0.6, 3).chosen[0] == first
            assert select_ctx(sal, doc, emb.matrix(doc), ctx_params, 3).chosen[0] == first
