import numpy as np
import pytest

from zsx.errors import (
    DimensionMismatchError,
    EmbeddingFormatError,
    EmptyIntersectionError,
    SingularSystemError,
)
from zsx.mapper import (
    ProjectionMatrix,
    apply,
    common_vocab,
    fit,
    fit_sentence_to_word,
    load_matrix,
    save_matrix,
)
from zsx.vectors import VectorTable


def table_from(matrix: np.ndarray, prefix: str = "w", name: str = "t") -> VectorTable:
    entries = {"%s%03d" % (prefix, i): row for i, row in enumerate(matrix)}
    return VectorTable(dim=matrix.shape[1], entries=entries, name=name)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


class TestCommonVocab:
    def test_intersection_sorted(self):
        src = table_from(np.eye(3))  # w000..w002
        tgt_entries = {"w001": np.ones(3), "w002": np.ones(3), "zzz": np.ones(3)}
        tgt = VectorTable(dim=3, entries=tgt_entries)
        assert common_vocab(src, tgt).tokens == ("w001", "w002")

    def test_disjoint_errors(self):
        a = VectorTable(dim=1, entries={"a": [1.0]})
        b = VectorTable(dim=1, entries={"b": [1.0]})
        with pytest.raises(EmptyIntersectionError):
            common_vocab(a, b)

    def test_identical_tables(self):
        t = table_from(np.eye(4))
        assert common_vocab(t, t).tokens == tuple(sorted(t.entries))


class TestFit:
    def test_self_map_is_identity(self, rng):
        X = rng.normal(size=(30, 5))
        t = table_from(X)
        vocab = common_vocab(t, t)
        m = fit(t, t, vocab, ridge_lambda=0.0)
        np.testing.assert_allclose(m.values, np.eye(5), atol=1e-6)

    def test_recovers_known_matrix(self, rng):
        A = rng.normal(size=(5, 4))
        X = rng.normal(size=(50, 5))
        src = table_from(X, name="src")
        tgt = table_from(X @ A, name="tgt")
        vocab = common_vocab(src, tgt)
        m = fit(src, tgt, vocab, ridge_lambda=0.0)
        assert np.max(np.abs(m.values - A)) < 1e-6

    def test_rank_deficient_at_zero_lambda_errors(self, rng):
        # two vocabulary rows cannot determine a 4-d source space
        X = rng.normal(size=(2, 4))
        src = table_from(X, name="src")
        tgt = table_from(rng.normal(size=(2, 3)), name="tgt")
        vocab = common_vocab(src, tgt)
        with pytest.raises(SingularSystemError, match="ridge"):
            fit(src, tgt, vocab, ridge_lambda=0.0)

    def test_rank_deficient_with_ridge_succeeds(self, rng):
        X = rng.normal(size=(2, 4))
        src = table_from(X, name="src")
        tgt = table_from(rng.normal(size=(2, 3)), name="tgt")
        m = fit(src, tgt, common_vocab(src, tgt), ridge_lambda=1e-3)
        assert m.values.shape == (4, 3)

    def test_deterministic(self, rng):
        X = rng.normal(size=(40, 6))
        Y = rng.normal(size=(40, 3))
        src, tgt = table_from(X, name="s"), table_from(Y, name="t")
        vocab = common_vocab(src, tgt)
        m1 = fit(src, tgt, vocab, 1e-3)
        m2 = fit(src, tgt, vocab, 1e-3)
        assert np.array_equal(m1.values, m2.values)

    def test_local_minimum_probe(self, rng):
        X = rng.normal(size=(50, 5))
        Y = rng.normal(size=(50, 4))
        src, tgt = table_from(X, name="s"), table_from(Y, name="t")
        m = fit(src, tgt, common_vocab(src, tgt), ridge_lambda=0.0).values
        base = np.linalg.norm(X @ m - Y) ** 2
        probe_rng = np.random.default_rng(0)
        for _ in range(20):
            i = probe_rng.integers(0, m.shape[0])
            j = probe_rng.integers(0, m.shape[1])
            for delta in (1e-3, -1e-3):
                bumped = m.copy()
                bumped[i, j] += delta
                assert np.linalg.norm(X @ bumped - Y) ** 2 >= base - 1e-12

    def test_apply_maps_vocab_back(self, rng):
        X = rng.normal(size=(30, 5))
        t = table_from(X)
        vocab = common_vocab(t, t)
        m = fit(t, t, vocab, ridge_lambda=0.0)
        for tok in vocab:
            np.testing.assert_allclose(apply(m, t.vector(tok)), t.vector(tok), atol=1e-5)


class TestSentenceToWord:
    def test_same_table_identity(self, rng):
        X = rng.normal(size=(30, 5))
        t = table_from(X)
        m = fit_sentence_to_word(t, t, common_vocab(t, t), ridge_lambda=0.0)
        np.testing.assert_allclose(m.values, np.eye(5), atol=1e-6)

    def test_inverts_known_mixing(self, rng):
        # sentence vectors are a fixed invertible mix of the word vectors
        B = rng.normal(size=(6, 6)) + 6 * np.eye(6)
        W = rng.normal(size=(60, 6))
        word = table_from(W, name="word")
        sent = table_from(W @ B, name="sent")
        vocab = common_vocab(sent, word)
        m = fit_sentence_to_word(sent, word, vocab, ridge_lambda=0.0)
        X = np.stack([sent.vector(t) for t in vocab])
        Y = np.stack([word.vector(t) for t in vocab])
        assert np.max(np.abs(X @ m.values - Y)) < 1e-5
        np.testing.assert_allclose(m.values, np.linalg.inv(B), atol=1e-5)


class TestApply:
    def test_identity(self):
        m = ProjectionMatrix(values=np.eye(3), ridge_lambda=0.0)
        v = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(apply(m, v), v)

    def test_zero_matrix(self):
        m = ProjectionMatrix(values=np.zeros((2, 4)), ridge_lambda=0.0)
        np.testing.assert_allclose(apply(m, np.array([1.0, 2.0])), np.zeros(4))

    def test_hand_multiply(self):
        m = ProjectionMatrix(values=np.array([[1.0, 0.0], [0.0, 3.0]]), ridge_lambda=0.0)
        np.testing.assert_allclose(apply(m, np.array([1.0, 2.0])), [1.0, 6.0])

    def test_dimension_mismatch(self):
        m = ProjectionMatrix(values=np.eye(3), ridge_lambda=0.0)
        with pytest.raises(DimensionMismatchError):
            apply(m, np.array([1.0, 2.0]))


class TestPersistence:
    def test_round_trip(self, tmp_path, rng):
        m = ProjectionMatrix(values=rng.normal(size=(5, 4)), ridge_lambda=0.25)
        path = tmp_path / "m.txt"
        save_matrix(m, path)
        loaded = load_matrix(path)
        assert loaded.ridge_lambda == m.ridge_lambda
        np.testing.assert_allclose(loaded.values, m.values, atol=1e-9)

    def test_malformed_header(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("2 2\n1 0\n0 1\n")
        with pytest.raises(EmbeddingFormatError):
            load_matrix(f)

    def test_wrong_row_count(self, tmp_path):
        f = tmp_path / "m.txt"
        f.write_text("3 2 0.0\n1 0\n0 1\n")
        with pytest.raises(EmbeddingFormatError):
            load_matrix(f)
