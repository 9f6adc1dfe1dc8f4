"""Membership scoring between texts and label descriptors.

Three providers produce the raw scores: cosine over embedding averages,
a precomputed score file, or a remote scoring service. On top of them sit
the ranking operations: sort all descriptors by membership, cut the top k
to predict labels, and the two centroid variants that rank labels directly
by their descriptor centroids.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from . import mapper as mapper_mod
from .catalog import LabelCatalog
from .errors import (
    ConfigError,
    EmptyCatalogError,
    EmptyInputError,
    MissingScoreError,
    OutOfVocabularyError,
    RemoteProviderError,
    ScoreRangeError,
)
from .mapper import ProjectionMatrix
from .vectors import VectorTable, avg_vector, cosine, tokenize

log = logging.getLogger(__name__)

NLI_URL_ENV = "ZSX_NLI_URL"

STRATEGIES = ("direct", "centroid", "centroid-topk")


@dataclass(frozen=True)
class RankedItem:
    descriptor: str
    label_id: str
    score: float


@dataclass(frozen=True)
class MembershipRanking:
    """Descriptors (or labels) sorted non-increasing by membership score."""

    items: tuple[RankedItem, ...]
    text_ref: str
    score_kind: str  # "cosine" or "probability"

    def __post_init__(self):
        lo, hi = (-1.0, 1.0) if self.score_kind == "cosine" else (0.0, 1.0)
        prev = None
        for it in self.items:
            if not np.isfinite(it.score):
                raise ScoreRangeError("non-finite score for %r" % it.descriptor)
            if it.score < lo or it.score > hi:
                raise ScoreRangeError(
                    "score %g for %r outside [%g, %g]" % (it.score, it.descriptor, lo, hi)
                )
            if prev is not None and it.score > prev:
                raise ValueError("ranking is not sorted non-increasing")
            prev = it.score

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class LabelPrediction:
    label_ids: tuple[str, ...]
    k: int
    strategy: str
    per_label_best_score: dict[str, float] = field(compare=False)


class ScoreProvider:
    """Base for membership-score providers.

    ``scores`` returns one finite score per descriptor, aligned by index,
    or raises a typed error. ``score_kind`` drives the valid score range.
    """

    kind = "abstract"
    score_kind = "probability"

    def scores(
        self, text: str, descriptors: Sequence[str], text_id: str | None = None
    ) -> list[float]:
        raise NotImplementedError


class EmbeddingCosineProvider(ScoreProvider):
    """Cosine similarity between averaged word vectors.

    An optional projection matrix moves every representation into a mapped
    space before comparison. Descriptor vectors are cached.
    """

    kind = "embedding-cosine"
    score_kind = "cosine"

    def __init__(self, table: VectorTable, matrix: ProjectionMatrix | None = None):
        self.table = table
        self.matrix = matrix
        self._cache: dict[str, np.ndarray] = {}

    def text_vector(self, text: str) -> np.ndarray:
        vec = avg_vector(tokenize(text), self.table)
        if self.matrix is not None:
            vec = mapper_mod.apply(self.matrix, vec)
        return vec

    def _descriptor_vector(self, descriptor: str) -> np.ndarray:
        cached = self._cache.get(descriptor)
        if cached is None:
            cached = self.text_vector(descriptor)
            self._cache[descriptor] = cached
        return cached

    def scores(self, text, descriptors, text_id=None):
        tvec = self.text_vector(text)
        return [cosine(tvec, self._descriptor_vector(d)) for d in descriptors]


class NliFileProvider(ScoreProvider):
    """Entailment probabilities read from a precomputed TSV.

    Rows are ``text_id<TAB>descriptor_text<TAB>prob``. Lookups fall back to
    the raw text when no ``text_id`` is passed, which is how explanation
    spans are keyed.
    """

    kind = "nli-file"
    score_kind = "probability"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._scores: dict[tuple[str, str], float] = {}
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise MissingScoreError(
                        "%s:%d: expected 3 fields, got %d" % (self.path, lineno, len(parts))
                    )
                text_id, descriptor, raw = parts
                try:
                    prob = float(raw)
                except ValueError:
                    raise ScoreRangeError(
                        "%s:%d: bad probability %r" % (self.path, lineno, raw)
                    ) from None
                if not np.isfinite(prob) or not 0.0 <= prob <= 1.0:
                    raise ScoreRangeError(
                        "%s:%d: probability %g outside [0, 1]" % (self.path, lineno, prob)
                    )
                key = (text_id, descriptor)
                if key in self._scores:
                    raise MissingScoreError(
                        "%s:%d: duplicate pair %r" % (self.path, lineno, key)
                    )
                self._scores[key] = prob

    def scores(self, text, descriptors, text_id=None):
        key_id = text_id if text_id is not None else text
        out = []
        for d in descriptors:
            try:
                out.append(self._scores[(key_id, d)])
            except KeyError:
                raise MissingScoreError(
                    "no score for text_id=%r descriptor=%r in %s" % (key_id, d, self.path)
                ) from None
        return out


class NliRemoteProvider(ScoreProvider):
    """Entailment probabilities from a scoring service.

    POSTs ``{"premise", "hypotheses"}`` to ``<base_url>/score`` and expects
    ``{"scores": [...]}`` aligned by index. The base URL falls back to the
    ``ZSX_NLI_URL`` environment variable.
    """

    kind = "nli-remote"
    score_kind = "probability"

    def __init__(
        self,
        base_url: str | None = None,
        timeout: float = 30.0,
        session=None,
    ):
        base_url = base_url or os.environ.get(NLI_URL_ENV)
        if not base_url:
            raise ConfigError(
                "remote provider needs a base URL (flag or %s)" % NLI_URL_ENV
            )
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        # default to the module API: safe under concurrent worker threads
        self._session = session if session is not None else requests

    def scores(self, text, descriptors, text_id=None):
        body = {"premise": text, "hypotheses": list(descriptors)}
        try:
            resp = self._session.post(
                self.base_url + "/score", json=body, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise RemoteProviderError("scoring request failed: %s" % exc) from None
        if resp.status_code != 200:
            raise RemoteProviderError(
                "scoring endpoint returned HTTP %d" % resp.status_code
            )
        try:
            payload = resp.json()
            scores = payload["scores"]
        except (ValueError, KeyError, TypeError):
            raise RemoteProviderError("malformed scoring response body") from None
        if not isinstance(scores, list) or len(scores) != len(descriptors):
            raise RemoteProviderError(
                "response carries %s scores for %d hypotheses"
                % (len(scores) if isinstance(scores, list) else "no", len(descriptors))
            )
        out = []
        for d, s in zip(descriptors, scores):
            if not isinstance(s, (int, float)) or not np.isfinite(s):
                raise RemoteProviderError("non-numeric score for %r" % d)
            if not 0.0 <= s <= 1.0:
                raise ScoreRangeError("remote score %g for %r outside [0, 1]" % (s, d))
            out.append(float(s))
        return out


def sorted_descriptors(
    text: str,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    text_id: str | None = None,
) -> MembershipRanking:
    """Score every descriptor against the text and sort descending.

    Ties break by (label_id, descriptor text) so the order is deterministic.
    Any provider failure aborts the whole ranking.
    """
    if not catalog.descriptors:
        raise EmptyCatalogError("catalog has no descriptors")
    texts = [d.text for d in catalog.descriptors]
    raw = provider.scores(text, texts, text_id=text_id)
    items = [
        RankedItem(descriptor=d.text, label_id=d.label_id, score=float(s))
        for d, s in zip(catalog.descriptors, raw)
    ]
    items.sort(key=lambda it: (-it.score, it.label_id, it.descriptor))
    return MembershipRanking(
        items=tuple(items),
        text_ref=text_id if text_id is not None else text,
        score_kind=provider.score_kind,
    )


def predict_labels(
    ranking: MembershipRanking, k: int, strategy: str = "direct"
) -> LabelPrediction:
    """Labels of the top-k ranking items, first-occurrence order, deduplicated."""
    if not ranking.items:
        raise EmptyInputError("cannot predict from an empty ranking")
    if k < 1:
        raise ConfigError("k must be >= 1, got %d" % k)
    window = ranking.items[: min(k, len(ranking.items))]
    ordered: list[str] = []
    best: dict[str, float] = {}
    for it in window:
        if it.label_id not in best:
            ordered.append(it.label_id)
            best[it.label_id] = it.score
        else:
            best[it.label_id] = max(best[it.label_id], it.score)
    return LabelPrediction(
        label_ids=tuple(ordered), k=k, strategy=strategy, per_label_best_score=best
    )


def _label_vectors(
    catalog: LabelCatalog, table: VectorTable, matrix: ProjectionMatrix | None
) -> dict[str, list[tuple[str, np.ndarray]]]:
    """Representable descriptor vectors grouped by label."""
    by_label: dict[str, list[tuple[str, np.ndarray]]] = {}
    for d in catalog.descriptors:
        try:
            vec = avg_vector(tokenize(d.text), table)
        except (OutOfVocabularyError, EmptyInputError):
            continue
        if matrix is not None:
            vec = mapper_mod.apply(matrix, vec)
        by_label.setdefault(d.label_id, []).append((d.text, vec))
    return by_label


def _rank_labels(
    scored: list[tuple[str, float]], text_ref: str
) -> MembershipRanking:
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    items = tuple(
        RankedItem(descriptor=label_id, label_id=label_id, score=s)
        for label_id, s in scored
    )
    return MembershipRanking(items=items, text_ref=text_ref, score_kind="cosine")


def centroid_ranking(
    text: str,
    catalog: LabelCatalog,
    table: VectorTable,
    matrix: ProjectionMatrix | None = None,
    text_id: str | None = None,
) -> MembershipRanking:
    """Rank labels by cosine between the text and each label's descriptor centroid.

    Labels whose descriptors are all out of vocabulary are dropped with a
    warning; an empty result raises.
    """
    tvec = avg_vector(tokenize(text), table)
    if matrix is not None:
        tvec = mapper_mod.apply(matrix, tvec)
    by_label = _label_vectors(catalog, table, matrix)
    scored: list[tuple[str, float]] = []
    for label_id in catalog.label_ids():
        vecs = [v for _, v in by_label.get(label_id, [])]
        if not vecs:
            log.warning("label %r has no representable descriptor; dropped", label_id)
            continue
        centroid = np.mean(vecs, axis=0)
        scored.append((label_id, cosine(tvec, centroid)))
    if not scored:
        raise EmptyCatalogError("every label lost all descriptors to the vocabulary")
    return _rank_labels(scored, text_id if text_id is not None else text)


def topk_centroid_ranking(
    text: str,
    catalog: LabelCatalog,
    table: VectorTable,
    k_desc: int,
    matrix: ProjectionMatrix | None = None,
    text_id: str | None = None,
) -> MembershipRanking:
    """Centroid ranking over only each label's k_desc descriptors nearest the text."""
    if k_desc < 1:
        raise ConfigError("k_desc must be >= 1, got %d" % k_desc)
    tvec = avg_vector(tokenize(text), table)
    if matrix is not None:
        tvec = mapper_mod.apply(matrix, tvec)
    by_label = _label_vectors(catalog, table, matrix)
    scored: list[tuple[str, float]] = []
    for label_id in catalog.label_ids():
        pairs = by_label.get(label_id, [])
        if not pairs:
            log.warning("label %r has no representable descriptor; dropped", label_id)
            continue
        pairs = sorted(
            pairs, key=lambda pv: (-cosine(tvec, pv[1]), pv[0])
        )[:k_desc]
        centroid = np.mean([v for _, v in pairs], axis=0)
        scored.append((label_id, cosine(tvec, centroid)))
    if not scored:
        raise EmptyCatalogError("every label lost all descriptors to the vocabulary")
    return _rank_labels(scored, text_id if text_id is not None else text)


def nli_scores(
    text: str,
    descriptors: Sequence[str],
    provider: ScoreProvider,
    text_id: str | None = None,
) -> dict[str, float]:
    """Entailment probability per descriptor, keyed by descriptor text."""
    raw = provider.scores(text, descriptors, text_id=text_id)
    return {d: s for d, s in zip(descriptors, raw)}


def rank_text(
    text: str,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    strategy: str = "direct",
    k_desc: int | None = None,
    text_id: str | None = None,
) -> MembershipRanking:
    """Strategy dispatch: descriptor ranking or one of the centroid rankings."""
    if strategy == "direct":
        return sorted_descriptors(text, catalog, provider, text_id=text_id)
    if strategy in ("centroid", "centroid-topk"):
        if not isinstance(provider, EmbeddingCosineProvider):
            raise ConfigError(
                "strategy %r needs the embedding-cosine provider" % strategy
            )
        if strategy == "centroid":
            return centroid_ranking(
                text, catalog, provider.table, provider.matrix, text_id=text_id
            )
        if k_desc is None:
            raise ConfigError("strategy centroid-topk needs k_desc")
        return topk_centroid_ranking(
            text, catalog, provider.table, k_desc, provider.matrix, text_id=text_id
        )
    raise ConfigError("unknown strategy %r" % strategy)
