"""Dataset ingestion, split plans, and the two evaluation pipelines.

The multi-label task scores texts against symptom labels and reports
micro-averaged F1 over repeated train/test splits (predictions are
training-free, so splits only choose the rows evaluated). The binary task
turns per-label membership scores into feature vectors, trains a hinge-loss
linear classifier, and compares against random-uniform and majority-class
baselines.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .catalog import LabelCatalog
from .errors import (
    ConfigError,
    DatasetFormatError,
    DimensionMismatchError,
    EmptyInputError,
    LeafMismatchError,
    OutOfVocabularyError,
    SingleClassError,
    TreeFormatError,
)
from .explain import ngramex, step
from .scoring import ScoreProvider, predict_labels, rank_text
from .trees import fallback_tree, parse_tree, validate_against
from .vectors import tokenize

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# dataset


@dataclass(frozen=True)
class DatasetRow:
    id: str
    text: str
    gold_labels: frozenset[str] = frozenset()
    tree: str | None = None
    binary_label: int | None = None


def load_dataset(path: str | Path, catalog: LabelCatalog | None = None) -> list[DatasetRow]:
    """Parse dataset TSV rows: ``id  text  gold_labels  tree  binary_label``.

    gold_labels are semicolon-separated label ids (may be empty); the tree
    column holds bracketed text or is empty; binary_label is 1, 0, or empty.
    Missing trailing columns are treated as empty. Tree text is checked for
    well-formedness here; the leaf/token match is checked at use.
    """
    path = Path(path)
    rows: list[DatasetRow] = []
    seen_ids: set[str] = set()
    known = set(catalog.label_ids()) if catalog is not None else None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) > 5:
                raise DatasetFormatError(
                    "%s:%d: expected at most 5 fields, got %d" % (path, lineno, len(parts))
                )
            parts += [""] * (5 - len(parts))
            row_id, text, gold_raw, tree_raw, binary_raw = parts
            if not row_id or not text:
                raise DatasetFormatError("%s:%d: empty id or text" % (path, lineno))
            if row_id in seen_ids:
                raise DatasetFormatError("%s:%d: duplicate id %r" % (path, lineno, row_id))
            seen_ids.add(row_id)
            gold = frozenset(g for g in gold_raw.split(";") if g)
            if known is not None:
                bad = gold - known
                if bad:
                    raise DatasetFormatError(
                        "%s:%d: unknown labels %s" % (path, lineno, sorted(bad))
                    )
            tree = tree_raw.strip() or None
            if tree is not None:
                try:
                    parse_tree(tree)
                except TreeFormatError as exc:
                    raise DatasetFormatError(
                        "%s:%d: malformed tree: %s" % (path, lineno, exc)
                    ) from None
            if binary_raw == "":
                binary = None
            elif binary_raw in ("0", "1"):
                binary = int(binary_raw)
            else:
                raise DatasetFormatError(
                    "%s:%d: binary label must be 1, 0, or empty" % (path, lineno)
                )
            rows.append(
                DatasetRow(id=row_id, text=text, gold_labels=gold, tree=tree, binary_label=binary)
            )
    return rows


# ---------------------------------------------------------------------------
# metrics and splits


def micro_f1(gold: Sequence[set], pred: Sequence[set]) -> float:
    """Micro-averaged F1 over pooled label instances; 0 when undefined."""
    if len(gold) != len(pred):
        raise DimensionMismatchError(
            "gold has %d rows, pred has %d" % (len(gold), len(pred))
        )
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        g, p = set(g), set(p)
        tp += len(g & p)
        fp += len(p - g)
        fn += len(g - p)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def binary_f1(gold: np.ndarray, pred: np.ndarray, positive: int = 1) -> float:
    gold = np.asarray(gold)
    pred = np.asarray(pred)
    tp = int(np.sum((pred == positive) & (gold == positive)))
    fp = int(np.sum((pred == positive) & (gold != positive)))
    fn = int(np.sum((pred != positive) & (gold == positive)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


@dataclass(frozen=True)
class SplitPlan:
    seed: int = 0
    train_fraction: float = 0.8
    n_repeats: int = 3
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be >= 1")


def _repeat_rng(seed: int, repeat: int, stream: int = 0) -> np.random.Generator:
    # Per-repeat streams keep parallel execution identical to serial runs.
    return np.random.default_rng([seed, repeat, stream])


def split_indices(
    n: int,
    plan: SplitPlan,
    repeat: int,
    keys: Sequence | None = None,
) -> tuple[list[int], list[int]]:
    """Train/test index lists for one repeat.

    With stratification, rows are grouped by ``keys`` and each group
    contributes round(fraction * group_size) training rows, so per-class
    counts stay within one row of the exact fraction.
    """
    rng = _repeat_rng(plan.seed, repeat)
    if plan.stratified:
        if keys is None:
            raise ConfigError("stratified split needs per-row keys")
        groups: dict = {}
        for i, key in enumerate(keys):
            groups.setdefault(key, []).append(i)
        train: list[int] = []
        test: list[int] = []
        for key in sorted(groups, key=repr):
            idx = np.array(groups[key])
            rng.shuffle(idx)
            n_train = int(round(plan.train_fraction * len(idx)))
            train.extend(idx[:n_train].tolist())
            test.extend(idx[n_train:].tolist())
    else:
        idx = rng.permutation(n)
        n_train = int(round(plan.train_fraction * n))
        n_train = min(max(n_train, 1), n - 1) if n > 1 else n_train
        train = idx[:n_train].tolist()
        test = idx[n_train:].tolist()
    return sorted(train), sorted(test)


def parallel_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map, threaded when jobs > 1."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# multi-label (symptom) evaluation


@dataclass(frozen=True)
class DsdCell:
    k_label: int
    repeat: int
    n_test: int
    micro_f1: float
    ei_step_mean: float | None = None
    ei_step_std: float | None = None
    ei_ngramex_mean: float | None = None
    ei_ngramex_std: float | None = None


@dataclass(frozen=True)
class DsdSummary:
    k_label: int
    mean: float
    std: float
    ei_step_mean: float | None = None
    ei_step_std: float | None = None
    ei_ngramex_mean: float | None = None
    ei_ngramex_std: float | None = None


@dataclass(frozen=True)
class DsdReport:
    cells: tuple[DsdCell, ...]
    summaries: tuple[DsdSummary, ...]


def _spread(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return 0.0, 0.0
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def _row_ei(
    row: DatasetRow,
    catalog: LabelCatalog,
    provider: ScoreProvider,
    ngram_n: int,
) -> tuple[float, float]:
    tokens = tokenize(row.text)
    if row.tree is not None:
        tree = parse_tree(row.tree)
        try:
            validate_against(tree, tokens)
        except LeafMismatchError:
            log.warning("row %r tree disagrees with tokens; using fallback", row.id)
            tree = fallback_tree(tokens)
    else:
        log.warning("row %r has no tree; using fallback", row.id)
        tree = fallback_tree(tokens)
    ei_s = step(row.text, tree, catalog, provider, text_id=row.id).ei_score
    ei_n = ngramex(row.text, ngram_n, catalog, provider, text_id=row.id).ei_score
    return ei_s, ei_n


def evaluate_dsd(
    rows: Sequence[DatasetRow],
    catalog: LabelCatalog,
    provider: ScoreProvider,
    strategy: str = "direct",
    k_labels: Sequence[int] = (1,),
    k_desc: int | None = None,
    plan: SplitPlan = SplitPlan(),
    report_ei: bool = False,
    ngram_n: int = 3,
    jobs: int = 1,
) -> DsdReport:
    """Micro-F1 of top-k label prediction over repeated splits.

    Predictions need no training, so each ranking is computed once per row
    and reused across repeats and across the k sweep. With ``report_ei``
    the mean/std explainability index over correctly predicted test rows is
    attached per cell.
    """
    rows = list(rows)
    if not rows:
        raise EmptyInputError("no rows to evaluate")
    for k in k_labels:
        if k < 1:
            raise ConfigError("k_label values must be >= 1")

    rankings = parallel_map(
        lambda row: rank_text(
            row.text, catalog, provider, strategy, k_desc=k_desc, text_id=row.id
        ),
        rows,
        jobs,
    )
    predictions: dict[int, list] = {
        k: [predict_labels(r, k, strategy) for r in rankings] for k in k_labels
    }

    ei_cache: dict[str, tuple[float, float]] = {}

    def ei_for(i: int) -> tuple[float, float]:
        row = rows[i]
        if row.id not in ei_cache:
            ei_cache[row.id] = _row_ei(row, catalog, provider, ngram_n)
        return ei_cache[row.id]

    cells: list[DsdCell] = []
    summaries: list[DsdSummary] = []
    keys = [tuple(sorted(r.gold_labels)) for r in rows] if plan.stratified else None
    splits = [
        split_indices(len(rows), plan, rep, keys=keys) for rep in range(plan.n_repeats)
    ]
    for k in k_labels:
        preds = predictions[k]
        f1s: list[float] = []
        ei_step_means: list[float] = []
        ei_ng_means: list[float] = []
        for rep, (_, test_idx) in enumerate(splits):
            gold = [rows[i].gold_labels for i in test_idx]
            pred = [set(preds[i].label_ids) for i in test_idx]
            f1 = micro_f1(gold, pred)
            f1s.append(f1)
            cell = DsdCell(k_label=k, repeat=rep, n_test=len(test_idx), micro_f1=f1)
            if report_ei:
                correct = [
                    i for i in test_idx if rows[i].gold_labels & set(preds[i].label_ids)
                ]
                pair_values = [ei_for(i) for i in correct]
                s_mean, s_std = _spread([p[0] for p in pair_values])
                n_mean, n_std = _spread([p[1] for p in pair_values])
                cell = replace(
                    cell,
                    ei_step_mean=s_mean,
                    ei_step_std=s_std,
                    ei_ngramex_mean=n_mean,
                    ei_ngramex_std=n_std,
                )
                ei_step_means.append(s_mean)
                ei_ng_means.append(n_mean)
            cells.append(cell)
        mean, std = _spread(f1s)
        summary = DsdSummary(k_label=k, mean=mean, std=std)
        if report_ei:
            s_mean, s_std = _spread(ei_step_means)
            n_mean, n_std = _spread(ei_ng_means)
            summary = replace(
                summary,
                ei_step_mean=s_mean,
                ei_step_std=s_std,
                ei_ngramex_mean=n_mean,
                ei_ngramex_std=n_std,
            )
        summaries.append(summary)
    return DsdReport(cells=tuple(cells), summaries=tuple(summaries))


# ---------------------------------------------------------------------------
# binary (post-level) pipeline


@dataclass(frozen=True)
class FeatureVector:
    row_id: str
    values: np.ndarray


def featurize_dpd(
    rows: Sequence[DatasetRow],
    catalog: LabelCatalog,
    provider: ScoreProvider,
    strategy: str = "direct",
    k_desc: int | None = None,
    jobs: int = 1,
) -> list[FeatureVector]:
    """One membership score per label, in catalog label order.

    Direct strategy takes each label's best descriptor score; centroid
    strategies take the label's centroid score. Unscoreable rows are
    dropped with a warning.
    """
    label_order = catalog.label_ids()

    def featurize(row: DatasetRow) -> FeatureVector | None:
        try:
            ranking = rank_text(
                row.text, catalog, provider, strategy, k_desc=k_desc, text_id=row.id
            )
        except (EmptyInputError, OutOfVocabularyError) as exc:
            log.warning("row %r dropped from features: %s", row.id, exc)
            return None
        best = predict_labels(ranking, len(ranking), strategy).per_label_best_score
        fill = -1.0 if provider.score_kind == "cosine" else 0.0
        values = np.array([best.get(lab, fill) for lab in label_order])
        return FeatureVector(row_id=row.id, values=values)

    out = parallel_map(featurize, list(rows), jobs)
    return [fv for fv in out if fv is not None]


def feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    return np.stack([fv.values for fv in features])


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    ridge_lambda: float = 1e-3
    epochs: int = 200
    seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig
    loss_history: list[float] = field(default_factory=list)

    def margins(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.margins(X) >= 0).astype(int)


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    return mean, std


def standardize_apply(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (X - mean) / std


def hinge_objective(
    weights: np.ndarray, bias: float, X: np.ndarray, y01: np.ndarray, lam: float
) -> float:
    signs = np.where(np.asarray(y01) > 0, 1.0, -1.0)
    margins = signs * (X @ weights + bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(hinge + 0.5 * lam * np.dot(weights, weights))


def train_linear(
    X: np.ndarray, y01: np.ndarray, config: TrainConfig = TrainConfig()
) -> LinearModel:
    """Hinge-loss + L2 linear classifier trained by seeded per-sample SGD.

    Deterministic given the seed: updates follow a per-epoch shuffled order
    from a dedicated generator. Expects features already standardized.
    """
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01)
    if X.ndim != 2 or len(X) != len(y01):
        raise DimensionMismatchError("feature matrix and labels disagree")
    classes = np.unique(y01)
    if classes.size < 2:
        raise SingleClassError("training data contains a single class")
    signs = np.where(y01 > 0, 1.0, -1.0)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    rng = np.random.default_rng(config.seed)
    history = [hinge_objective(w, b, X, y01, config.ridge_lambda)]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for i in order:
            margin = signs[i] * (X[i] @ w + b)
            w *= 1.0 - config.lr * config.ridge_lambda
            if margin < 1.0:
                w += config.lr * signs[i] * X[i]
                b += config.lr * signs[i]
        history.append(hinge_objective(w, b, X, y01, config.ridge_lambda))
    return LinearModel(weights=w, bias=b, config=config, loss_history=history)


def majority_class_f1(train_y: np.ndarray, test_y: np.ndarray) -> float:
    """F1 of always predicting the training majority class (ties go positive)."""
    train_y = np.asarray(train_y)
    majority = 1 if int(np.sum(train_y == 1)) >= int(np.sum(train_y == 0)) else 0
    pred = np.full(len(test_y), majority)
    return binary_f1(test_y, pred)


def random_uniform_f1(test_y: np.ndarray, rng: np.random.Generator) -> float:
    """F1 of a fair coin-flip predictor."""
    pred = rng.integers(0, 2, size=len(test_y))
    return binary_f1(test_y, pred)


@dataclass(frozen=True)
class DpdCell:
    repeat: int
    n_test: int
    f1_model: float
    f1_random: float
    f1_majority: float


@dataclass(frozen=True)
class DpdReport:
    cells: tuple[DpdCell, ...]
    f1_mean: float
    f1_std: float
    random_mean: float
    random_std: float
    majority_mean: float
    majority_std: float


def evaluate_dpd_features(
    X: np.ndarray,
    y01: np.ndarray,
    plan: SplitPlan = SplitPlan(n_repeats=30, stratified=True),
    config: TrainConfig = TrainConfig(),
) -> DpdReport:
    """Train/evaluate the linear classifier over repeated stratified splits.

    Standardization is fitted on each training side only. Every cell also
    carries the random-uniform and majority-class baseline F1 for its split.
    """
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01)
    cells: list[DpdCell] = []
    for rep in range(plan.n_repeats):
        train_idx, test_idx = split_indices(len(y01), plan, rep, keys=y01.tolist())
        train_y, test_y = y01[train_idx], y01[test_idx]
        if np.unique(train_y).size < 2:
            raise SingleClassError("repeat %d: training side has a single class" % rep)
        mean, std = standardize_fit(X[train_idx])
        model = train_linear(
            standardize_apply(X[train_idx], mean, std),
            train_y,
            replace(config, seed=config.seed + rep),
        )
        pred = model.predict(standardize_apply(X[test_idx], mean, std))
        cells.append(
            DpdCell(
                repeat=rep,
                n_test=len(test_idx),
                f1_model=binary_f1(test_y, pred),
                f1_random=random_uniform_f1(test_y, _repeat_rng(plan.seed, rep, stream=1)),
                f1_majority=majority_class_f1(train_y, test_y),
            )
        )
    f1_mean, f1_std = _spread([c.f1_model for c in cells])
    r_mean, r_std = _spread([c.f1_random for c in cells])
    m_mean, m_std = _spread([c.f1_majority for c in cells])
    return DpdReport(
        cells=tuple(cells),
        f1_mean=f1_mean,
        f1_std=f1_std,
        random_mean=r_mean,
        random_std=r_std,
        majority_mean=m_mean,
        majority_std=m_std,
    )


def evaluate_dpd(
    rows: Sequence[DatasetRow],
    catalog: LabelCatalog,
    provider: ScoreProvider,
    strategy: str = "direct",
    k_desc: int | None = None,
    plan: SplitPlan = SplitPlan(n_repeats=30, stratified=True),
    config: TrainConfig = TrainConfig(),
    jobs: int = 1,
) -> DpdReport:
    """Full pipeline: featurize rows with binary labels, then evaluate."""
    labeled = [r for r in rows if r.binary_label is not None]
    if not labeled:
        raise DatasetFormatError("no rows carry a binary label")
    features = featurize_dpd(labeled, catalog, provider, strategy, k_desc, jobs=jobs)
    by_id = {r.id: r for r in labeled}
    X = feature_matrix(features)
    y01 = np.array([by_id[fv.row_id].binary_label for fv in features])
    return evaluate_dpd_features(X, y01, plan, config)
