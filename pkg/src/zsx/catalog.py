"""Label catalogs: labels, their descriptors, and questionnaire-mode selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CatalogFormatError, EmptyCatalogError

log = logging.getLogger(__name__)

MODES = ("DH", "MH", "ML", "SSTOT", "ALL")


@dataclass(frozen=True)
class Label:
    id: str
    display_name: str


@dataclass(frozen=True)
class Descriptor:
    text: str
    label_id: str
    mode: str


@dataclass(frozen=True)
class LabelCatalog:
    """Immutable label set with per-mode descriptor rows.

    Invariants enforced at construction: label ids unique, every descriptor
    resolves to a label, (text, label_id, mode) triples unique, and every
    label keeps at least one descriptor.
    """

    labels: tuple[Label, ...]
    descriptors: tuple[Descriptor, ...]
    dropped_labels: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [lab.id for lab in self.labels]
        if len(set(ids)) != len(ids):
            raise CatalogFormatError("duplicate label ids")
        known = set(ids)
        seen = set()
        covered = set()
        for d in self.descriptors:
            if not d.text:
                raise CatalogFormatError("empty descriptor text")
            if d.mode not in MODES:
                raise CatalogFormatError("unknown mode tag %r" % d.mode)
            if d.label_id not in known:
                raise CatalogFormatError(
                    "descriptor %r references unknown label %r" % (d.text, d.label_id)
                )
            triple = (d.text, d.label_id, d.mode)
            if triple in seen:
                raise CatalogFormatError("duplicate descriptor triple %r" % (triple,))
            seen.add(triple)
            covered.add(d.label_id)
        missing = known - covered
        if missing:
            raise CatalogFormatError(
                "labels without any descriptor: %s" % ", ".join(sorted(missing))
            )

    def label_ids(self) -> list[str]:
        return [lab.id for lab in self.labels]

    def get_label(self, label_id: str) -> Label:
        for lab in self.labels:
            if lab.id == label_id:
                return lab
        raise KeyError(label_id)

    def descriptors_for(self, label_id: str) -> list[Descriptor]:
        return [d for d in self.descriptors if d.label_id == label_id]


def _display_name(label_id: str) -> str:
    return label_id.replace("_", " ").strip().capitalize()


def load_catalog(path: str | Path) -> LabelCatalog:
    """Parse a catalog TSV: ``label_id<TAB>mode<TAB>descriptor_text`` per line.

    ``#``-prefixed lines are comments. Labels are derived from the rows in
    first-appearance order; display names from the id.
    """
    path = Path(path)
    label_order: list[str] = []
    descriptors: list[Descriptor] = []
    seen: set[tuple[str, str, str]] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CatalogFormatError(
                    "%s:%d: expected 3 tab-separated fields, got %d"
                    % (path, lineno, len(parts))
                )
            label_id, mode, text = (p.strip() for p in parts)
            if not label_id or not text:
                raise CatalogFormatError("%s:%d: empty label id or descriptor" % (path, lineno))
            if mode not in MODES:
                raise CatalogFormatError("%s:%d: unknown mode tag %r" % (path, lineno, mode))
            triple = (text, label_id, mode)
            if triple in seen:
                raise CatalogFormatError("%s:%d: duplicate row %r" % (path, lineno, triple))
            seen.add(triple)
            if label_id not in label_order:
                label_order.append(label_id)
            descriptors.append(Descriptor(text=text, label_id=label_id, mode=mode))
    if not descriptors:
        raise EmptyCatalogError("%s: no descriptor rows" % path)
    labels = tuple(Label(id=i, display_name=_display_name(i)) for i in label_order)
    return LabelCatalog(labels=labels, descriptors=tuple(descriptors))


def select_mode(catalog: LabelCatalog, modes: Iterable[str]) -> LabelCatalog:
    """Restrict a catalog to descriptors whose mode is in ``modes`` (union).

    Labels left with no descriptor are dropped (recorded on the result and
    logged); an entirely empty result raises :class:`EmptyCatalogError`.
    """
    mode_set = set(modes)
    if not mode_set:
        raise CatalogFormatError("mode selection must name at least one mode")
    unknown = mode_set - set(MODES)
    if unknown:
        raise CatalogFormatError("unknown mode tags: %s" % ", ".join(sorted(unknown)))
    kept = tuple(d for d in catalog.descriptors if d.mode in mode_set)
    covered = {d.label_id for d in kept}
    labels = tuple(lab for lab in catalog.labels if lab.id in covered)
    dropped = tuple(lab.id for lab in catalog.labels if lab.id not in covered)
    if not labels:
        raise EmptyCatalogError(
            "no label keeps a descriptor under modes %s" % sorted(mode_set)
        )
    if dropped:
        log.warning("mode selection %s dropped labels: %s", sorted(mode_set), dropped)
    return LabelCatalog(labels=labels, descriptors=kept, dropped_labels=dropped)
