import logging

import numpy as np
import pytest

from redsum.corpus import Sentence
from redsum.redundancy import (
    RawRedundancy,
    bin_index,
    bin_onehot,
    binned_features,
    minmax_normalize,
    ngram_overlap_ratio,
    semantic_match,
    step_feature_matrix,
)


def sent(index, tokens):
    return Sentence(index=index, text=" ".join(tokens), tokens=tuple(tokens))


class TestNgramOverlapRatio:
    def test_empty_selection(self):
        assert ngram_overlap_ratio(sent(0, ["a", "b"]), [], 1) == 0.0

    def test_partial_unigram(self):
        cand = sent(0, ["a", "b", "c"])
        chosen = [sent(1, ["a", "b", "x"])]
        assert ngram_overlap_ratio(cand, chosen, 1) == pytest.approx(2 / 3)

    def test_duplicate_sentence_all_orders(self):
        tokens = ["the", "cat", "sat", "down"]
        cand, chosen = sent(0, tokens), [sent(1, tokens)]
        for n in (1, 2, 3):
            assert ngram_overlap_ratio(cand, chosen, n) == 1.0

    def test_short_candidate_no_ngrams(self):
        assert ngram_overlap_ratio(sent(0, ["a", "b"]), [sent(1, ["a", "b"])], 3) == 0.0

    def test_distinct_semantics(self):
        # duplicated candidate n-grams count once
        cand = sent(0, ["a", "a", "b"])
        chosen = [sent(1, ["a"])]
        assert ngram_overlap_ratio(cand, chosen, 1) == pytest.approx(1 / 2)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            ngram_overlap_ratio(sent(0, ["a"]), [], 4)

    def test_monotone_in_selection(self):
        rng = np.random.default_rng(0)
        vocab = [f"w{i}" for i in range(8)]
        for _ in range(100):
            cand = sent(0, [vocab[i] for i in rng.integers(0, 8, size=5)])
            small = [sent(1, [vocab[i] for i in rng.integers(0, 8, size=4)])]
            large = small + [sent(2, [vocab[i] for i in rng.integers(0, 8, size=4)])]
            for n in (1, 2, 3):
                assert ngram_overlap_ratio(cand, large, n) >= ngram_overlap_ratio(cand, small, n)


class TestSemanticMatch:
    def test_identical_vector(self):
        v = np.array([1.0, 0.0])
        assert semantic_match(v, [np.array([0.0, 1.0]), v]) == pytest.approx(1.0)

    def test_empty_selection_convention(self):
        assert semantic_match(np.array([1.0, 0.0]), []) == 0.0

    def test_analytic_max(self):
        cand = np.array([1.0, 0.0])
        chosen = [np.array([0.0, 1.0]), np.array([np.sqrt(0.5), np.sqrt(0.5)])]
        assert semantic_match(cand, chosen) == pytest.approx(np.sqrt(0.5))

    def test_monotone_in_selection(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            vecs = rng.normal(size=(4, 8))
            vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
            cand = vecs[0]
            assert semantic_match(cand, list(vecs[1:3])) <= semantic_match(cand, list(vecs[1:4]))


class TestMinmax:
    def test_example(self):
        np.testing.assert_allclose(minmax_normalize([0.9, 0.95, 1.0]), [0.0, 0.5, 1.0])

    def test_all_equal(self):
        np.testing.assert_allclose(minmax_normalize([0.7, 0.7, 0.7]), [0.0, 0.0, 0.0])

    def test_endpoints_unchanged(self):
        np.testing.assert_allclose(minmax_normalize([0.0, 0.25, 1.0]), [0.0, 0.25, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            minmax_normalize([])


class TestBinning:
    def test_example_037(self):
        assert bin_index(0.37, 10) == 3

    def test_top_edge_clamped(self):
        assert bin_index(1.0, 10) == 9

    def test_zero(self):
        assert bin_index(0.0, 10) == 0

    def test_out_of_range_clamps_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert bin_index(1.2, 10) == 9
            assert bin_index(-0.1, 10) == 0
        assert len([r for r in caplog.records if "clamped" in r.message]) == 2

    def test_order_preserving(self):
        rng = np.random.default_rng(2)
        for m in (2, 10, 30):
            values = np.sort(rng.uniform(0, 1, size=50))
            indices = [bin_index(float(v), m) for v in values]
            assert indices == sorted(indices)

    def test_onehot(self):
        vec = bin_onehot(0.55, 10)
        assert vec.sum() == 1.0 and vec[5] == 1.0

    def test_m_too_small(self):
        with pytest.raises(ValueError):
            bin_index(0.5, 1)


class TestBinnedFeatures:
    def test_empty_selection_all_zero_bins(self):
        vec = binned_features(RawRedundancy(0.0, 0.0, 0.0, 0.0, 0.0), 10)
        assert vec.shape == (40,)
        assert vec.sum() == 4.0
        for block in range(4):
            assert vec[block * 10] == 1.0

    def test_duplicate_candidate_top_bins(self):
        vec = binned_features(RawRedundancy(1.0, 1.0, 1.0, 0.9, 0.4), 10)
        for block in range(3):
            assert vec[block * 10 + 9] == 1.0
        assert vec[30 + 4] == 1.0

    def test_hand_computed_three_candidate_step(self):
        chosen = [sent(0, ["the", "cat", "sat", "down"])]
        candidates = [
            sent(1, ["the", "cat", "sat", "here"]),  # heavy overlap
            sent(2, ["a", "dog", "ran", "far"]),  # no overlap
            sent(3, ["the", "dog", "sat", "down"]),  # partial
        ]
        emb = np.array(
            [
                [1.0, 0.0, 0.0],
                [np.sqrt(0.5), np.sqrt(0.5), 0.0],  # cos to chosen = 0.7071
                [0.0, 1.0, 0.0],  # cos 0
                [0.6, 0.8, 0.0],  # cos 0.6
            ]
        )
        mat = step_feature_matrix(candidates, chosen, emb, m=10)
        # candidate 1: unigrams {the,cat,sat,here} -> 3/4; bigrams {the-cat,cat-sat,sat-here} -> 2/3;
        # trigrams {the-cat-sat, cat-sat-here} -> 1/2; sem minmax over (0.7071, 0, 0.6) -> 1.0
        expected1 = np.concatenate([bin_onehot(0.75, 10), bin_onehot(2 / 3, 10), bin_onehot(0.5, 10), bin_onehot(1.0, 10)])
        np.testing.assert_array_equal(mat[:, 0], expected1)
        # candidate 2: all zero overlap, sem normalized to 0
        expected2 = np.concatenate([bin_onehot(0.0, 10)] * 4)
        np.testing.assert_array_equal(mat[:, 1], expected2)
        # candidate 3: unigrams {the,dog,sat,down} -> 3/4; bigrams -> 1/3 ({sat-down}); trigrams 0;
        # sem (0.6 - 0)/(0.7071) = 0.8485 -> bin 8
        expected3 = np.concatenate([bin_onehot(0.75, 10), bin_onehot(1 / 3, 10), bin_onehot(0.0, 10), bin_onehot(0.8485, 10)])
        np.testing.assert_array_equal(mat[:, 2], expected3)

    def test_exactly_four_ones_random(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            m = int(rng.choice([2, 10, 20, 30]))
            raw = RawRedundancy(*rng.uniform(0, 1, size=3), rng.uniform(-1, 1), rng.uniform(0, 1))
            vec = binned_features(raw, m)
            assert vec.shape == (4 * m,)
            assert (vec == 1.0).sum() == 4
            assert (vec == 0.0).sum() == 4 * m - 4

    def test_document_scope_normalization(self):
        chosen = [sent(0, ["a", "b"])]
        candidates = [sent(1, ["c", "d"]), sent(2, ["e", "f"])]
        emb = np.array([[1.0, 0.0], [0.8, 0.6], [0.0, 1.0]])
        step = step_feature_matrix(candidates, chosen, emb, m=10, sem_norm_scope="step")
        doc = step_feature_matrix(candidates, chosen, emb, m=10, sem_norm_scope="document")
        # step scope: minmax over (0.8, 0.0) -> candidate 1 normalizes to 1.0
        assert step[30 + 9, 0] == 1.0
        # document scope includes the chosen sentence's own value 1.0 -> cand 1 maps to 0.8
        assert doc[30 + 8, 0] == 1.0
