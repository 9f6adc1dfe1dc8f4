"""Entailment scorers behind the service.

The stub scorer is pure and deterministic: the score for (premise,
hypothesis) is the normalized token overlap

    |tokens(premise) & tokens(hypothesis)| / |tokens(hypothesis)|

over lowercase, punctuation-stripped token sets. The pretrained scorer
wraps an entailment model when its weights and libraries are available;
the probability is the entailment component of the softmax over the
model's entailment/neutral/contradiction logits.
"""

from __future__ import annotations

import threading
import unicodedata


class UnscorableHypothesis(ValueError):
    """Hypothesis has no scoreable tokens."""


def _strip_edges(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def token_set(text: str) -> set[str]:
    out = set()
    for raw in text.lower().split():
        tok = _strip_edges(raw)
        if tok:
            out.add(tok)
    return out


def overlap_score(premise: str, hypothesis: str) -> float:
    hyp_tokens = token_set(hypothesis)
    if not hyp_tokens:
        raise UnscorableHypothesis("hypothesis %r has no tokens" % hypothesis)
    return len(token_set(premise) & hyp_tokens) / len(hyp_tokens)


class StubScorer:
    mode = "stub"

    def ready(self) -> bool:
        return True

    def score(self, premise: str, hypotheses: list[str]) -> list[float]:
        return [overlap_score(premise, h) for h in hypotheses]


class PretrainedScorer:
    """Loads an entailment model in the background; 503s until ready."""

    mode = "pretrained"

    def __init__(self, model_name: str = "facebook/bart-large-mnli"):
        self.model_name = model_name
        self._ready = threading.Event()
        self._lock = threading.Lock()
        self._pipeline = None
        self._error: Exception | None = None

    def start_loading(self) -> None:
        threading.Thread(target=self._load, daemon=True).start()

    def _load(self) -> None:
        try:
            from transformers import (  # noqa: deferred heavy import
                AutoModelForSequenceClassification,
                AutoTokenizer,
            )

            tokenizer = AutoTokenizer.from_pretrained(self.model_name)
            model = AutoModelForSequenceClassification.from_pretrained(self.model_name)
            model.eval()
            self._pipeline = (tokenizer, model)
        except Exception as exc:  # surface on first request
            self._error = exc
        finally:
            self._ready.set()

    def ready(self) -> bool:
        return self._ready.is_set() and self._error is None

    def score(self, premise: str, hypotheses: list[str]) -> list[float]:
        if self._error is not None:
            raise RuntimeError("model failed to load: %s" % self._error)
        if self._pipeline is None:
            raise RuntimeError("model not loaded yet")
        import torch

        tokenizer, model = self._pipeline
        entail_index = None
        for idx, name in model.config.id2label.items():
            if name.lower().startswith("entail"):
                entail_index = int(idx)
        if entail_index is None:
            raise RuntimeError("model labels carry no entailment class")
        with self._lock:
            batch = tokenizer(
                [premise] * len(hypotheses),
                hypotheses,
                return_tensors="pt",
                padding=True,
                truncation=True,
            )
            with torch.no_grad():
                logits = model(**batch).logits
            probs = torch.softmax(logits, dim=-1)[:, entail_index]
        return [float(p) for p in probs]


def make_scorer(mode: str, model_name: str | None = None):
    if mode == "stub":
        return StubScorer()
    if mode == "pretrained":
        scorer = PretrainedScorer(model_name or "facebook/bart-large-mnli")
        scorer.start_loading()
        return scorer
    raise ValueError("unknown mode %r" % mode)
