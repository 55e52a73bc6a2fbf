import numpy as np
import pytest

from redsum.embed import EmbeddingSet
from redsum.grad import Tape, Tensor, finite_diff_check
from redsum.salience import (
    SalienceError,
    SalienceModel,
    SalienceTrainConfig,
    document_salience,
    init_salience_model,
    nll_loss,
    salience_scores,
    train_salience,
)

from .test_corpus import make_doc


def model_from(w):
    w = np.asarray(w, dtype=np.float64)
    return SalienceModel(w_ds=Tensor(w, requires_grad=True), dim=w.shape[0])


def unit_rows(rows):
    mat = np.asarray(rows, dtype=np.float64)
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


class TestSalienceScores:
    def test_zero_weights_uniform(self):
        emb = unit_rows(np.eye(4)[:3])
        probs = salience_scores(np.ones(4) / 2.0, emb, model_from(np.zeros((4, 4))))
        np.testing.assert_allclose(probs, [1 / 3] * 3, atol=1e-12)

    def test_identity_weights_pick_aligned_sentence(self):
        doc_vec = np.array([1.0, 0.0, 0.0, 0.0])
        emb = unit_rows([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
        probs = salience_scores(doc_vec, emb, model_from(np.eye(4)))
        assert int(np.argmax(probs)) == 0

    def test_single_sentence(self):
        emb = unit_rows([[0.0, 1.0]])
        probs = salience_scores(np.array([1.0, 0.0]), emb, model_from(np.ones((2, 2))))
        np.testing.assert_allclose(probs, [1.0])

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            dim, n = 6, int(rng.integers(1, 9))
            emb = unit_rows(rng.normal(size=(n, dim)))
            doc_vec = emb.mean(axis=0)
            doc_vec /= np.linalg.norm(doc_vec)
            probs = salience_scores(doc_vec, emb, model_from(rng.normal(size=(dim, dim))))
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert (probs > 0).all()

    def test_dim_mismatch(self):
        with pytest.raises(SalienceError):
            salience_scores(np.ones(3), unit_rows([[1.0, 0.0]]), model_from(np.zeros((2, 2))))

    def test_logit_shift_invariance(self):
        # sentences share first coordinate a, so adding (c/a) * outer(h_D, e1)
        # to W shifts every logit by exactly c
        a = 0.5
        emb = unit_rows([[a, 1.0, 0.2, 0.0], [a, -0.3, 0.9, 0.1], [a, 0.0, -0.5, 0.8]])
        emb = np.array([row * (a / row[0]) for row in emb])  # renormalize first coord to a
        doc_vec = np.array([1.0, 0.0, 0.0, 0.0])
        w = np.random.default_rng(1).normal(size=(4, 4))
        shift = np.outer(doc_vec, np.array([1.0, 0.0, 0.0, 0.0])) * (7.3 / a)
        p1 = salience_scores(doc_vec, emb, model_from(w))
        p2 = salience_scores(doc_vec, emb, model_from(w + shift))
        np.testing.assert_allclose(p1, p2, atol=1e-9)

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            dim = 6
            emb = unit_rows(rng.normal(size=(5, dim)))
            doc_vec = emb.mean(axis=0)
            doc_vec /= np.linalg.norm(doc_vec)
            w = rng.normal(size=(dim, dim))
            q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
            p_orig = salience_scores(doc_vec, emb, model_from(w))
            p_rot = salience_scores(doc_vec @ q.T, emb @ q.T, model_from(q @ w @ q.T))
            assert int(np.argmax(p_orig)) == int(np.argmax(p_rot))
            np.testing.assert_allclose(p_orig, p_rot, atol=1e-8)


def separable_corpus(n_docs=40, seed=0):
    """Labeled sentences carry marker tokens; the rest is noise."""
    rng = np.random.default_rng(seed)
    noise = [f"n{i}" for i in range(40)]
    docs = []
    for d in range(n_docs):
        sents = []
        label = int(rng.integers(0, 5))
        for i in range(5):
            if i == label:
                toks = ["signal", "alpha", noise[rng.integers(40)]]
            else:
                toks = [noise[rng.integers(40)] for _ in range(3)]
            sents.append(toks)
        docs.append(make_doc(sents, doc_id=f"s{d}", abstract=[["signal", "alpha"]], labels=[label]))
    return docs


class TestTraining:
    def test_loss_improves_and_rank_improves(self):
        docs = separable_corpus()
        emb = EmbeddingSet.native(docs, dim=32)
        config = SalienceTrainConfig(dim=32, epochs=5, seed=0)
        model = train_salience(docs, emb, config)

        zero = model_from(np.zeros((32, 32)))
        init = init_salience_model(32, np.random.default_rng(config.seed))

        def mean_label_rank(m):
            ranks = []
            for doc in docs:
                probs = document_salience(doc, emb, m)
                order = list(np.argsort(-probs))
                label = next(iter(doc.oracle_labels))
                ranks.append(order.index(label))
            return float(np.mean(ranks))

        assert mean_label_rank(model) < mean_label_rank(zero)

        def mean_nll(m):
            losses = []
            for doc in docs:
                probs = document_salience(doc, emb, m)
                losses.append(-sum(np.log(probs[i]) for i in doc.oracle_labels))
            return float(np.mean(losses))

        assert model.final_loss < mean_nll(init)

    def test_loss_non_increasing_over_epochs(self):
        docs = separable_corpus()
        emb = EmbeddingSet.native(docs, dim=32)
        model = train_salience(docs, emb, SalienceTrainConfig(dim=32, epochs=6, seed=1))
        losses = model.epoch_losses
        assert len(losses) == 6
        for a, b in zip(losses, losses[1:]):
            assert b <= a * 1.02  # Adam transients allowed up to 2%

    def test_zero_epochs_equals_initialization(self):
        docs = separable_corpus(n_docs=5)
        emb = EmbeddingSet.native(docs, dim=16)
        config = SalienceTrainConfig(dim=16, epochs=0, seed=7)
        model = train_salience(docs, emb, config)
        init = init_salience_model(16, np.random.default_rng(7))
        np.testing.assert_array_equal(model.w_ds.data, init.w_ds.data)

    def test_unlabeled_document_rejected(self):
        docs = separable_corpus(n_docs=3)
        docs[1] = make_doc([["a", "b"]], doc_id="plain")
        emb = EmbeddingSet.native(docs, dim=16)
        with pytest.raises(SalienceError):
            train_salience(docs, emb, SalienceTrainConfig(dim=16))

    def test_deterministic_given_seed(self):
        docs = separable_corpus(n_docs=10)
        emb = EmbeddingSet.native(docs, dim=16)
        config = SalienceTrainConfig(dim=16, epochs=2, seed=3)
        m1 = train_salience(docs, emb, config)
        m2 = train_salience(docs, emb, config)
        np.testing.assert_array_equal(m1.w_ds.data, m2.w_ds.data)


class TestGradients:
    def test_nll_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            dim, n = 6, int(rng.integers(2, 6))
            emb = unit_rows(rng.normal(size=(n, dim)))
            doc_vec = emb.mean(axis=0)
            doc_vec /= np.linalg.norm(doc_vec)
            model = init_salience_model(dim, rng)
            labels = sorted(set(rng.integers(0, n, size=2).tolist()))

            def f():
                tape = Tape()
                return tape, nll_loss(tape, model, doc_vec, emb, labels)

            assert finite_diff_check(f, [model.w_ds]) < 1e-4


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = init_salience_model(8, np.random.default_rng(5))
        path = tmp_path / "sal.json"
        model.save(path)
        loaded = SalienceModel.load(path)
        assert loaded.dim == 8
        np.testing.assert_array_equal(loaded.w_ds.data, model.w_ds.data)

    def test_wrong_kind_rejected(self, tmp_path):
        from redsum.grad import save_checkpoint

        path = tmp_path / "other.json"
        save_checkpoint(path, kind="ctx", dim=4, tensors={}, config={})
        with pytest.raises(SalienceError):
            SalienceModel.load(path)
