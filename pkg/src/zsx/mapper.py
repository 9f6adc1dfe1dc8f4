"""Least-squares projection between vector spaces.

Learns a matrix M minimizing ||XM - Y||_F^2 + lambda ||M||_F^2, where X
stacks source vectors of a shared vocabulary row-wise and Y the matching
target vectors. Solved by ridge normal equations with a dense symmetric
positive-definite solve; plain least squares is the lambda = 0 case.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmbeddingFormatError,
    EmptyIntersectionError,
    SingularSystemError,
)
from .vectors import VectorTable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommonVocab:
    """Tokens present in both the source and target tables, sorted."""

    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class ProjectionMatrix:
    values: np.ndarray
    ridge_lambda: float
    source_name: str = ""
    target_name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatchError("projection matrix must be 2-D")
        if not np.all(np.isfinite(arr)):
            raise EmbeddingFormatError("projection matrix has non-finite entries")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def common_vocab(src: VectorTable, tgt: VectorTable) -> CommonVocab:
    """Lexicographically sorted intersection of the two vocabularies."""
    shared = sorted(set(src.entries) & set(tgt.entries))
    if not shared:
        raise EmptyIntersectionError(
            "tables %r and %r share no vocabulary" % (src.name, tgt.name)
        )
    return CommonVocab(tuple(shared))


def _stack(table: VectorTable, vocab: CommonVocab) -> np.ndarray:
    return np.stack([table.entries[t] for t in vocab.tokens])


def fit(
    src: VectorTable,
    tgt: VectorTable,
    vocab: CommonVocab,
    ridge_lambda: float = 1e-3,
) -> ProjectionMatrix:
    """Fit the ridge least-squares map from ``src`` space into ``tgt`` space.

    Solves (X^T X + lambda I) M = X^T Y by Cholesky. At lambda = 0 a
    rank-deficient X raises :class:`SingularSystemError` suggesting a
    positive ridge term.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    if not len(vocab):
        raise EmptyIntersectionError("empty vocabulary")
    X = _stack(src, vocab)
    Y = _stack(tgt, vocab)
    n, d_src = X.shape
    if n < d_src:
        log.warning(
            "vocabulary size %d below source dimension %d; fit may be ill-posed",
            n,
            d_src,
        )
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(X) < d_src:
        raise SingularSystemError(
            "source matrix is rank-deficient at lambda=0; rerun with ridge_lambda > 0"
        )
    gram = X.T @ X + ridge_lambda * np.eye(d_src)
    rhs = X.T @ Y
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise SingularSystemError(
            "normal equations not positive definite; rerun with ridge_lambda > 0"
        ) from None
    m = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    return ProjectionMatrix(
        values=m,
        ridge_lambda=float(ridge_lambda),
        source_name=src.name,
        target_name=tgt.name,
    )


def fit_sentence_to_word(
    sent_table: VectorTable,
    word_table: VectorTable,
    vocab: CommonVocab,
    ridge_lambda: float = 1e-3,
) -> ProjectionMatrix:
    """Fit the map from sentence-encoder vectors of single words to word vectors.

    Identical math to :func:`fit`; the source rows are sentence-encoder
    outputs for vocabulary words instead of word vectors.
    """
    return fit(sent_table, word_table, vocab, ridge_lambda)


def apply(matrix: ProjectionMatrix, v: np.ndarray) -> np.ndarray:
    """Project a vector: v -> v M."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (matrix.rows,):
        raise DimensionMismatchError(
            "vector of length %d cannot be projected by a %dx%d matrix"
            % (v.size, matrix.rows, matrix.cols)
        )
    return v @ matrix.values


def save_matrix(matrix: ProjectionMatrix, path: str | Path) -> None:
    """Persist as text: ``rows cols lambda`` then one line per matrix row."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(
            "%d %d %s\n" % (matrix.rows, matrix.cols, repr(float(matrix.ridge_lambda)))
        )
        for row in matrix.values:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_matrix(path: str | Path) -> ProjectionMatrix:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise EmbeddingFormatError("%s: bad matrix header" % path)
        try:
            rows, cols, lam = int(header[0]), int(header[1]), float(header[2])
        except ValueError:
            raise EmbeddingFormatError("%s: bad matrix header" % path) from None
        values = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != cols:
                raise EmbeddingFormatError(
                    "%s:%d: expected %d columns, got %d" % (path, lineno, cols, len(parts))
                )
            values.append([float(p) for p in parts])
    if len(values) != rows:
        raise EmbeddingFormatError(
            "%s: expected %d rows, got %d" % (path, rows, len(values))
        )
    return ProjectionMatrix(values=np.array(values, dtype=np.float64), ridge_lambda=lam)
