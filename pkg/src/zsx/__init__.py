"""Zero-shot symptom classification and explanation engine."""

from .catalog import Descriptor, Label, LabelCatalog, load_catalog, select_mode
from .errors import EngineError
from .evaluation import (
    DatasetRow,
    SplitPlan,
    TrainConfig,
    evaluate_dpd,
    evaluate_dsd,
    featurize_dpd,
    load_dataset,
    micro_f1,
    train_linear,
)
from .explain import ExplanationSet, compare_explainers, ei_score, ngramex, step
from .mapper import CommonVocab, ProjectionMatrix, common_vocab, fit, fit_sentence_to_word
from .scoring import (
    EmbeddingCosineProvider,
    LabelPrediction,
    MembershipRanking,
    NliFileProvider,
    NliRemoteProvider,
    centroid_ranking,
    predict_labels,
    sorted_descriptors,
    topk_centroid_ranking,
)
from .trees import SyntaxTree, bfs_spans, fallback_tree, parse_tree, validate_against
from .vectors import VectorTable, avg_vector, cosine, load_table, tokenize

__version__ = "0.1.0"

__all__ = [
    "CommonVocab",
    "DatasetRow",
    "Descriptor",
    "EmbeddingCosineProvider",
    "EngineError",
    "ExplanationSet",
    "Label",
    "LabelCatalog",
    "LabelPrediction",
    "MembershipRanking",
    "NliFileProvider",
    "NliRemoteProvider",
    "ProjectionMatrix",
    "SplitPlan",
    "SyntaxTree",
    "TrainConfig",
    "VectorTable",
    "avg_vector",
    "bfs_spans",
    "centroid_ranking",
    "common_vocab",
    "compare_explainers",
    "cosine",
    "ei_score",
    "evaluate_dpd",
    "evaluate_dsd",
    "fallback_tree",
    "featurize_dpd",
    "fit",
    "fit_sentence_to_word",
    "load_catalog",
    "load_dataset",
    "load_table",
    "micro_f1",
    "ngramex",
    "parse_tree",
    "predict_labels",
    "select_mode",
    "sorted_descriptors",
    "step",
    "tokenize",
    "topk_centroid_ranking",
    "train_linear",
    "validate_against",
]
