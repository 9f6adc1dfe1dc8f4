"""Vector tables, tokenization, and averaged text representations.

A :class:`VectorTable` maps tokens to dense vectors loaded from a flat text
file. Texts are represented as the arithmetic mean of their in-vocabulary
token vectors; similarity between representations is cosine.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DegenerateVectorError,
    DimensionMismatchError,
    EmbeddingFormatError,
    EmptyInputError,
    OutOfVocabularyError,
)

log = logging.getLogger(__name__)


def strip_edge_punctuation(token: str) -> str:
    """Strip Unicode punctuation from both ends of a token.

    Interior punctuation (apostrophes, hyphens) is preserved, so "don't"
    and "self-harm" survive intact while "'quoted'" becomes "quoted".
    """
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


@dataclass(frozen=True)
class TokenSequence:
    """Ordered lowercase tokens of a text."""

    tokens: tuple[str, ...]

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def text(self) -> str:
        return " ".join(self.tokens)


def tokenize(text: str) -> TokenSequence:
    """Lowercase, whitespace-split, and strip punctuation off token edges.

    Tokens that are empty after stripping are dropped. Raises
    :class:`EmptyInputError` when nothing remains (blank input, or input
    made of punctuation only).
    """
    if text is None or not text.strip():
        raise EmptyInputError("cannot tokenize blank input")
    tokens = []
    for raw in text.lower().split():
        tok = strip_edge_punctuation(raw)
        if tok:
            tokens.append(tok)
    if not tokens:
        raise EmptyInputError("no tokens remain after normalization: %r" % text)
    return TokenSequence(tuple(tokens))


@dataclass(frozen=True)
class VectorTable:
    """Immutable token -> dense vector map.

    Every vector has exactly ``dim`` finite components. Safe for concurrent
    reads once constructed; treat ``entries`` as read-only.
    """

    dim: int
    entries: Mapping[str, np.ndarray]
    name: str = ""

    def __post_init__(self):
        if self.dim <= 0:
            raise EmbeddingFormatError("vector dimension must be positive")
        coerced = {}
        for token, vec in self.entries.items():
            if not token or token.split()[0] != token:
                raise EmbeddingFormatError(
                    "token %r is empty or contains whitespace" % token
                )
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise DimensionMismatchError(
                    "vector for %r has length %d, expected %d"
                    % (token, arr.size, self.dim)
                )
            if not np.all(np.isfinite(arr)):
                raise EmbeddingFormatError("non-finite component for token %r" % token)
            coerced[token] = arr
        object.__setattr__(self, "entries", coerced)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def vector(self, token: str) -> np.ndarray:
        return self.entries[token]

    def tokens(self) -> list[str]:
        return list(self.entries)


def _is_header(parts: list[str]) -> bool:
    if len(parts) != 2:
        return False
    try:
        int(parts[0]), int(parts[1])
    except ValueError:
        return False
    return True


def load_table(path: str | Path, name: str | None = None) -> VectorTable:
    """Load a vector table from a flat text file.

    Format: optional first line ``<count> <dim>``; every other line
    ``<token> <f1> ... <f_dim>`` separated by spaces. Lines starting with
    ``#`` are ignored.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    declared_count: int | None = None
    first_data_line = True
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if first_data_line and _is_header(parts):
                declared_count, dim = int(parts[0]), int(parts[1])
                if dim <= 0:
                    raise EmbeddingFormatError(
                        "%s:%d: header dimension must be positive" % (path, lineno)
                    )
                first_data_line = False
                continue
            first_data_line = False
            token, raw_values = parts[0], parts[1:]
            if not raw_values:
                raise EmbeddingFormatError("%s:%d: row has no vector" % (path, lineno))
            try:
                vec = np.array(raw_values, dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(
                    "%s:%d: bad float value (%s)" % (path, lineno, exc)
                ) from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingFormatError(
                    "%s:%d: row has %d components, expected %d"
                    % (path, lineno, vec.size, dim)
                )
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(
                    "%s:%d: non-finite value for token %r" % (path, lineno, token)
                )
            if token in entries:
                raise EmbeddingFormatError(
                    "%s:%d: duplicate token %r" % (path, lineno, token)
                )
            entries[token] = vec
    if not entries or dim is None:
        raise EmbeddingFormatError("%s: no vector rows found" % path)
    if declared_count is not None and declared_count != len(entries):
        log.warning(
            "%s: header declared %d rows, parsed %d", path, declared_count, len(entries)
        )
    return VectorTable(dim=dim, entries=entries, name=name or path.stem)


def save_table(table: VectorTable, path: str | Path, header: bool = True) -> None:
    """Write a table back to the flat text format (round-trip safe)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header:
            fh.write("%d %d\n" % (len(table), table.dim))
        for token, vec in table.entries.items():
            fh.write(token)
            for v in vec:
                fh.write(" " + repr(float(v)))
            fh.write("\n")


def avg_vector(tokens: TokenSequence | Iterable[str], table: VectorTable) -> np.ndarray:
    """Arithmetic mean of the in-vocabulary token vectors.

    Out-of-vocabulary tokens are skipped; raises
    :class:`OutOfVocabularyError` when no token is covered.
    """
    hits = [table.entries[t] for t in tokens if t in table.entries]
    if not hits:
        raise OutOfVocabularyError(
            "no in-vocabulary token among %r" % (list(tokens),)
        )
    return np.mean(hits, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clipped into [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(
            "cosine over lengths %s and %s" % (u.shape, v.shape)
        )
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
