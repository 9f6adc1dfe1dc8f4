"""Phrase explanations for a predicted label, and their quality index.

Two extractors produce candidate phrases: a tree-guided walk over
constituency-node spans and a flat sliding-window n-gram baseline. Both
keep only phrases whose own top label matches the text's label, then rank
them by membership score. The explainability index rewards sets of many
short, highly ranked, relevant phrases; a lone full-text explanation
scores zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .catalog import LabelCatalog
from .errors import EmptyInputError, OutOfVocabularyError
from .scoring import MembershipRanking, ScoreProvider, predict_labels, sorted_descriptors
from .trees import SyntaxTree, bfs_spans, validate_against
from .vectors import tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Explanation:
    tokens: tuple[str, ...]
    source: str  # "step" or "ngramex"
    node_tag: str | None
    membership_score: float
    rank: int
    label_id: str


@dataclass(frozen=True)
class ExplanationSet:
    """Ranked explanations for one text, with the aggregate index attached."""

    tweet_tokens: tuple[str, ...]
    tweet_label: str
    items: tuple[Explanation, ...]
    ei_score: float

    def __post_init__(self):
        prev = None
        for i, item in enumerate(self.items):
            if item.rank != i:
                raise ValueError("ranks must be 0..n-1 in order")
            if len(item.tokens) < 1 or len(item.tokens) > len(self.tweet_tokens):
                raise ValueError("explanation length outside [1, len(tweet)]")
            if prev is not None and item.membership_score > prev:
                raise ValueError("items must be sorted non-increasing by score")
            prev = item.membership_score

    def phrases(self) -> list[str]:
        return [" ".join(e.tokens) for e in self.items]


@dataclass(frozen=True)
class ExplainerComparison:
    ei_step: float
    ei_ngramex: float
    agreement_flag: str  # "step_wins" | "ngramex_wins" | "tie"


def compute_ei(items, tweet_len: int, tweet_label: str) -> float:
    """Mean over items of length * rank * relevance factors.

    length factor: 1 - |e|/|tweet| (token counts); rank factor: 1 - rank/n
    with 0-based ranks; relevance: 1 iff the item's label matches the
    text's. Empty sets score 0.
    """
    n = len(items)
    if n == 0:
        return 0.0
    total = 0.0
    for e in items:
        length_score = 1.0 - len(e.tokens) / tweet_len
        rank_score = 1.0 - e.rank / n
        relevance = 1.0 if e.label_id == tweet_label else 0.0
        total += length_score * rank_score * relevance
    return total / n


def ei_score(explanation_set: ExplanationSet) -> float:
    return compute_ei(
        explanation_set.items,
        len(explanation_set.tweet_tokens),
        explanation_set.tweet_label,
    )


def ei_components(explanation_set: ExplanationSet) -> list[float]:
    """The per-item factor products that average into the set's index."""
    n = len(explanation_set.items)
    tweet_len = len(explanation_set.tweet_tokens)
    out = []
    for e in explanation_set.items:
        length_score = 1.0 - len(e.tokens) / tweet_len
        rank_score = 1.0 - e.rank / n
        relevance = 1.0 if e.label_id == explanation_set.tweet_label else 0.0
        out.append(length_score * rank_score * relevance)
    return out


def dedupe_candidates(
    candidates: list[tuple[tuple[str, ...], str | None, float]],
) -> list[tuple[tuple[str, ...], str | None, float]]:
    """Collapse duplicate token sequences, keeping the max score per sequence."""
    best: dict[tuple[str, ...], tuple[str | None, float]] = {}
    order: list[tuple[str, ...]] = []
    for toks, tag, score in candidates:
        if toks not in best:
            best[toks] = (tag, score)
            order.append(toks)
        elif score > best[toks][1]:
            best[toks] = (tag, score)
    return [(toks, best[toks][0], best[toks][1]) for toks in order]


def _tweet_label(
    text: str,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    k_label: int,
    text_id: str | None,
) -> str:
    ranking = sorted_descriptors(text, catalog, provider, text_id=text_id)
    return predict_labels(ranking, k_label).label_ids[0]


def _span_label(ranking: MembershipRanking) -> tuple[str, float]:
    top = ranking.items[0]
    return top.label_id, top.score


def _build_set(
    source: str,
    tweet_tokens: tuple[str, ...],
    tweet_label: str,
    candidates: list[tuple[tuple[str, ...], str | None, float]],
) -> ExplanationSet:
    kept = dedupe_candidates(candidates)
    kept.sort(key=lambda c: (-c[2], " ".join(c[0])))
    items = tuple(
        Explanation(
            tokens=toks,
            source=source,
            node_tag=tag,
            membership_score=score,
            rank=rank,
            label_id=tweet_label,
        )
        for rank, (toks, tag, score) in enumerate(kept)
    )
    ei = compute_ei(items, len(tweet_tokens), tweet_label)
    return ExplanationSet(
        tweet_tokens=tweet_tokens, tweet_label=tweet_label, items=items, ei_score=ei
    )


def step(
    text: str,
    tree: SyntaxTree,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    k_label: int = 1,
    text_id: str | None = None,
) -> ExplanationSet:
    """Tree-guided explanations: keep node spans whose top label matches the text's.

    Every breadth-first node span is labeled on its own (top-1); spans
    agreeing with the text's label survive, scored by that label's
    membership score. Unscoreable spans (fully out of vocabulary) are
    skipped with a warning.
    """
    tokens = tokenize(text)
    validate_against(tree, tokens)
    tweet_label = _tweet_label(text, catalog, provider, k_label, text_id)
    candidates: list[tuple[tuple[str, ...], str | None, float]] = []
    for span in bfs_spans(tree):
        span_text = span.text()
        try:
            ranking = sorted_descriptors(span_text, catalog, provider)
        except (OutOfVocabularyError, EmptyInputError) as exc:
            log.warning("span %r skipped: %s", span_text, exc)
            continue
        label_id, score = _span_label(ranking)
        if label_id == tweet_label:
            candidates.append((span.tokens, span.tag or None, score))
    return _build_set("step", tokens.tokens, tweet_label, candidates)


def ngramex(
    text: str,
    n: int,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    k_label: int = 1,
    text_id: str | None = None,
) -> ExplanationSet:
    """Sliding-window n-gram explanations (stride 1).

    Texts shorter than ``n`` yield the whole text as the single candidate.
    """
    if n < 1:
        raise ValueError("n must be >= 1, got %d" % n)
    tokens = tokenize(text)
    tweet_label = _tweet_label(text, catalog, provider, k_label, text_id)
    toks = tokens.tokens
    if len(toks) < n:
        windows = [toks]
    else:
        windows = [toks[i : i + n] for i in range(len(toks) - n + 1)]
    candidates: list[tuple[tuple[str, ...], str | None, float]] = []
    for window in windows:
        window_text = " ".join(window)
        try:
            ranking = sorted_descriptors(window_text, catalog, provider)
        except (OutOfVocabularyError, EmptyInputError) as exc:
            log.warning("n-gram %r skipped: %s", window_text, exc)
            continue
        label_id, score = _span_label(ranking)
        if label_id == tweet_label:
            candidates.append((window, None, score))
    return _build_set("ngramex", toks, tweet_label, candidates)


def compare_explainers(
    text: str,
    tree: SyntaxTree,
    n: int,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    k_label: int = 1,
    text_id: str | None = None,
) -> ExplainerComparison:
    """Run both explainers and flag which one scores higher."""
    set_step = step(text, tree, catalog, provider, k_label, text_id)
    set_ngram = ngramex(text, n, catalog, provider, k_label, text_id)
    if set_step.ei_score > set_ngram.ei_score:
        flag = "step_wins"
    elif set_step.ei_score < set_ngram.ei_score:
        flag = "ngramex_wins"
    else:
        flag = "tie"
    return ExplainerComparison(
        ei_step=set_step.ei_score, ei_ngramex=set_ngram.ei_score, agreement_flag=flag
    )
