"""Command-line front door.

Commands: predict, explain, evaluate-dsd, evaluate-dpd, train-mapper.
Exit codes: 0 ok, 2 configuration error, 3 data/provider error. Every
report starts with a provenance header echoing the effective settings
(execution-only knobs like --jobs excluded so reruns compare byte-equal).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, mapper
from .catalog import MODES, load_catalog, select_mode
from .errors import ConfigError, EngineError
from .explain import ei_components, ngramex, step
from .scoring import (
    STRATEGIES,
    EmbeddingCosineProvider,
    NliFileProvider,
    NliRemoteProvider,
    NLI_URL_ENV,
    predict_labels,
    rank_text,
)
from .trees import fallback_tree, parse_tree, validate_against
from .vectors import load_table, tokenize

PROVIDERS = ("embedding-cosine", "nli-file", "nli-remote")
EXPLAINERS = ("step", "ngramex", "both")

# Settings that vary between equivalent runs and stay out of report headers.
_EXECUTION_KEYS = {"jobs", "output", "config", "command"}

_COMMON_DEFAULTS = {
    "catalog": None,
    "dataset": None,
    "provider": "embedding-cosine",
    "strategy": "direct",
    "modes": None,
    "embeddings": None,
    "mapper": None,
    "scores": None,
    "nli_url": None,
    "timeout": 30.0,
    "k_label": 1,
    "k_desc": None,
    "seed": 0,
    "output": "-",
    "jobs": None,
    "config": None,
}

_DEFAULTS = {
    "predict": dict(_COMMON_DEFAULTS),
    "explain": dict(_COMMON_DEFAULTS, explainer="step", ngram_n=3),
    "evaluate-dsd": dict(
        _COMMON_DEFAULTS,
        sweep_k=None,
        repeats=3,
        train_fraction=0.8,
        stratified=False,
        report_ei=False,
        ngram_n=3,
    ),
    "evaluate-dpd": dict(
        _COMMON_DEFAULTS,
        repeats=30,
        train_fraction=0.8,
        lr=0.01,
        ridge_lambda=1e-3,
        epochs=200,
    ),
    "train-mapper": {
        "source": None,
        "target": None,
        "ridge_lambda": 1e-3,
        "sentence_source": False,
        "output": None,
        "config": None,
        "seed": 0,
    },
}

_TYPES = {
    "timeout": float,
    "train_fraction": float,
    "lr": float,
    "ridge_lambda": float,
    "k_label": int,
    "k_desc": int,
    "seed": int,
    "jobs": int,
    "repeats": int,
    "epochs": int,
    "ngram_n": int,
    "stratified": bool,
    "report_ei": bool,
    "sentence_source": bool,
}


def _fmt(x: float) -> str:
    return "%.6f" % x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsx",
        description="Zero-shot symptom classification and explanation engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--catalog", help="label catalog TSV")
        p.add_argument("--dataset", help="dataset TSV")
        p.add_argument("--modes", help="comma-separated mode tags (default: all rows)")
        p.add_argument("--provider", choices=PROVIDERS)
        p.add_argument("--strategy", choices=STRATEGIES)
        p.add_argument("--embeddings", help="vector table file")
        p.add_argument("--mapper", help="projection matrix file applied to vectors")
        p.add_argument("--scores", help="precomputed score TSV (nli-file provider)")
        p.add_argument("--nli-url", dest="nli_url", help="scoring service base URL")
        p.add_argument("--timeout", type=float, help="remote request timeout seconds")
        p.add_argument("--k-label", dest="k_label", type=int, help="ranking cut for labels")
        p.add_argument("--k-desc", dest="k_desc", type=int, help="descriptors per centroid")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", help="output path, '-' for stdout")
        p.add_argument("--jobs", type=int, help="worker threads")
        p.add_argument("--config", help="key = value settings file; flags win")

    p = sub.add_parser("predict", help="label each dataset row")
    add_common(p)

    p = sub.add_parser("explain", help="phrase explanations per row")
    add_common(p)
    p.add_argument("--explainer", choices=EXPLAINERS)
    p.add_argument("--ngram-n", dest="ngram_n", type=int)

    p = sub.add_parser("evaluate-dsd", help="multi-label micro-F1 over splits")
    add_common(p)
    p.add_argument("--sweep-k", dest="sweep_k", help="comma-separated k values")
    p.add_argument("--repeats", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--stratified", action="store_true", default=None)
    p.add_argument("--report-ei", dest="report_ei", action="store_true", default=None)
    p.add_argument("--ngram-n", dest="ngram_n", type=int)

    p = sub.add_parser("evaluate-dpd", help="binary-task F1 with baselines")
    add_common(p)
    p.add_argument("--repeats", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("train-mapper", help="fit a least-squares space mapping")
    p.add_argument("--source", help="source vector table")
    p.add_argument("--target", help="target vector table")
    p.add_argument("--ridge-lambda", dest="ridge_lambda", type=float)
    p.add_argument(
        "--sentence-source",
        dest="sentence_source",
        action="store_true",
        default=None,
        help="source rows are sentence-encoder vectors of words",
    )
    p.add_argument("--output", help="matrix file to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="key = value settings file; flags win")

    return parser


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError("cannot read %r as a boolean" % raw)


def _read_config_file(path: str) -> dict[str, str]:
    """Minimal key = value settings file; quotes optional, # comments."""
    out: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError("config file %s does not exist" % path)
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("%s:%d: expected key = value" % (path, lineno))
        key, _, value = stripped.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key] = value
    return out


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge CLI flags, the optional settings file, and built-in defaults."""
    command = args.command
    defaults = _DEFAULTS[command]
    ns = vars(args)
    file_cfg = _read_config_file(ns["config"]) if ns.get("config") else {}
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ConfigError(
            "config keys not valid for %s: %s" % (command, ", ".join(sorted(unknown)))
        )
    cfg: dict = {"command": command}
    for key, default in defaults.items():
        if key == "config":
            continue
        value = ns.get(key)
        if value is None and key in file_cfg:
            typ = _TYPES.get(key, str)
            raw = file_cfg[key]
            if typ is bool:
                value = _parse_bool(raw)
            else:
                try:
                    value = typ(raw)
                except ValueError:
                    raise ConfigError("config key %s: cannot read %r" % (key, raw)) from None
        if value is None:
            value = default
        cfg[key] = value
    if cfg.get("jobs") is None:
        cfg["jobs"] = os.cpu_count() or 1
    return cfg


def _require(cfg: dict, key: str, why: str) -> None:
    if not cfg.get(key):
        raise ConfigError("--%s is required %s" % (key.replace("_", "-"), why))


def validate_settings(cfg: dict) -> None:
    """Full fail-fast validation; never touches the filesystem."""
    command = cfg["command"]
    if command == "train-mapper":
        _require(cfg, "source", "to fit a mapping")
        _require(cfg, "target", "to fit a mapping")
        _require(cfg, "output", "to store the matrix")
        if cfg["ridge_lambda"] < 0:
            raise ConfigError("--ridge-lambda must be >= 0")
        return
    _require(cfg, "catalog", "for every command")
    _require(cfg, "dataset", "for every command")
    if cfg["provider"] not in PROVIDERS:
        raise ConfigError("unknown provider %r" % cfg["provider"])
    if cfg["strategy"] not in STRATEGIES:
        raise ConfigError("unknown strategy %r" % cfg["strategy"])
    if cfg["provider"] == "embedding-cosine":
        _require(cfg, "embeddings", "with the embedding-cosine provider")
    if cfg["provider"] == "nli-file":
        _require(cfg, "scores", "with the nli-file provider")
    if cfg["provider"] == "nli-remote":
        if not (cfg.get("nli_url") or os.environ.get(NLI_URL_ENV)):
            raise ConfigError(
                "--nli-url or %s is required with the nli-remote provider" % NLI_URL_ENV
            )
        if cfg["timeout"] <= 0:
            raise ConfigError("--timeout must be positive")
    if cfg["strategy"] != "direct" and cfg["provider"] != "embedding-cosine":
        raise ConfigError("centroid strategies need the embedding-cosine provider")
    if cfg["strategy"] == "centroid-topk" and not cfg.get("k_desc"):
        raise ConfigError("--k-desc is required with strategy centroid-topk")
    if cfg["k_label"] < 1:
        raise ConfigError("--k-label must be >= 1")
    if cfg.get("k_desc") is not None and cfg["k_desc"] < 1:
        raise ConfigError("--k-desc must be >= 1")
    if cfg["mapper"] and cfg["provider"] != "embedding-cosine":
        raise ConfigError("--mapper only applies to the embedding-cosine provider")
    if cfg.get("modes"):
        tags = [m.strip() for m in cfg["modes"].split(",") if m.strip()]
        bad = [m for m in tags if m not in MODES]
        if bad:
            raise ConfigError("unknown mode tags: %s" % ", ".join(bad))
        if not tags:
            raise ConfigError("--modes must name at least one mode")
    if cfg.get("ngram_n") is not None and cfg["ngram_n"] < 1:
        raise ConfigError("--ngram-n must be >= 1")
    if cfg.get("explainer") is not None and cfg["explainer"] not in EXPLAINERS:
        raise ConfigError("unknown explainer %r" % cfg["explainer"])
    if cfg.get("sweep_k"):
        try:
            ks = [int(k) for k in cfg["sweep_k"].split(",")]
        except ValueError:
            raise ConfigError("--sweep-k must be comma-separated integers") from None
        if not ks or any(k < 1 for k in ks):
            raise ConfigError("--sweep-k values must be >= 1")
    if cfg.get("repeats") is not None and cfg["repeats"] < 1:
        raise ConfigError("--repeats must be >= 1")
    if cfg.get("train_fraction") is not None and not 0 < cfg["train_fraction"] < 1:
        raise ConfigError("--train-fraction must be in (0, 1)")
    if cfg.get("lr") is not None and cfg["lr"] <= 0:
        raise ConfigError("--lr must be positive")
    if cfg.get("epochs") is not None and cfg["epochs"] < 1:
        raise ConfigError("--epochs must be >= 1")
    if cfg["jobs"] < 1:
        raise ConfigError("--jobs must be >= 1")


def _provenance(cfg: dict) -> list[str]:
    lines = ["# zsx %s" % cfg["command"]]
    for key in sorted(cfg):
        if key in _EXECUTION_KEYS or cfg[key] is None:
            continue
        lines.append("# %s=%s" % (key, cfg[key]))
    return lines


def _emit(cfg: dict, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if cfg.get("output", "-") in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(cfg["output"]).write_text(text, encoding="utf-8")


def _load_inputs(cfg: dict):
    cat = load_catalog(cfg["catalog"])
    if cfg.get("modes"):
        tags = [m.strip() for m in cfg["modes"].split(",") if m.strip()]
        cat = select_mode(cat, tags)
    rows = evaluation.load_dataset(cfg["dataset"], catalog=cat)
    return cat, rows


def _build_provider(cfg: dict):
    if cfg["provider"] == "embedding-cosine":
        table = load_table(cfg["embeddings"])
        matrix = mapper.load_matrix(cfg["mapper"]) if cfg.get("mapper") else None
        return EmbeddingCosineProvider(table, matrix)
    if cfg["provider"] == "nli-file":
        return NliFileProvider(cfg["scores"])
    return NliRemoteProvider(cfg.get("nli_url"), timeout=cfg["timeout"])


def cmd_predict(cfg: dict) -> int:
    cat, rows = _load_inputs(cfg)
    provider = _build_provider(cfg)
    rankings = evaluation.parallel_map(
        lambda row: rank_text(
            row.text, cat, provider, cfg["strategy"], cfg.get("k_desc"), text_id=row.id
        ),
        rows,
        cfg["jobs"],
    )
    lines = _provenance(cfg)
    lines.append("id\tlabels\tscores")
    for row, ranking in zip(rows, rankings):
        pred = predict_labels(ranking, cfg["k_label"], cfg["strategy"])
        labels = ";".join(pred.label_ids)
        scores = ";".join(_fmt(pred.per_label_best_score[l]) for l in pred.label_ids)
        lines.append("%s\t%s\t%s" % (row.id, labels, scores))
    _emit(cfg, lines)
    return 0


def _row_tree(row, tokens, warnings: list[str]):
    if row.tree is None:
        warnings.append("# warning: row %s has no tree, fallback used" % row.id)
        return fallback_tree(tokens)
    tree = parse_tree(row.tree)
    try:
        validate_against(tree, tokens)
    except EngineError:
        warnings.append("# warning: row %s tree mismatches tokens, fallback used" % row.id)
        return fallback_tree(tokens)
    return tree


def cmd_explain(cfg: dict) -> int:
    cat, rows = _load_inputs(cfg)
    provider = _build_provider(cfg)
    which = cfg["explainer"]
    lines = _provenance(cfg)
    lines.append("id\texplainer\trank\tphrase\tlabel\tscore\tei_component")

    def emit_set(row_id: str, name: str, eset) -> None:
        comps = ei_components(eset)
        for item, comp in zip(eset.items, comps):
            lines.append(
                "%s\t%s\t%d\t%s\t%s\t%s\t%s"
                % (
                    row_id,
                    name,
                    item.rank,
                    " ".join(item.tokens),
                    item.label_id,
                    _fmt(item.membership_score),
                    _fmt(comp),
                )
            )
        lines.append("%s\t%s\t%s" % (row_id, name, _fmt(eset.ei_score)))

    for row in rows:
        tokens = tokenize(row.text)
        warnings: list[str] = []
        results = {}
        if which in ("step", "both"):
            tree = _row_tree(row, tokens, warnings)
            results["step"] = step(
                row.text, tree, cat, provider, cfg["k_label"], text_id=row.id
            )
        if which in ("ngramex", "both"):
            results["ngramex"] = ngramex(
                row.text, cfg["ngram_n"], cat, provider, cfg["k_label"], text_id=row.id
            )
        lines.extend(warnings)
        for name in ("step", "ngramex"):
            if name in results:
                emit_set(row.id, name, results[name])
        if which == "both":
            ei_s = results["step"].ei_score
            ei_n = results["ngramex"].ei_score
            flag = "tie" if ei_s == ei_n else ("step_wins" if ei_s > ei_n else "ngramex_wins")
            lines.append("%s\tagreement\t%s" % (row.id, flag))
    _emit(cfg, lines)
    return 0


def _report_line(cfg: dict, fields: list[str]) -> str:
    prefix = [
        str(cfg["seed"]),
        cfg["strategy"],
        cfg.get("modes") or "-",
        cfg["provider"],
    ]
    return "\t".join(prefix + fields)


def cmd_evaluate_dsd(cfg: dict) -> int:
    cat, rows = _load_inputs(cfg)
    if not any(row.gold_labels for row in rows):
        raise EngineError("dataset carries no gold labels")
    provider = _build_provider(cfg)
    ks = (
        [int(k) for k in cfg["sweep_k"].split(",")]
        if cfg.get("sweep_k")
        else [cfg["k_label"]]
    )
    plan = evaluation.SplitPlan(
        seed=cfg["seed"],
        train_fraction=cfg["train_fraction"],
        n_repeats=cfg["repeats"],
        stratified=bool(cfg["stratified"]),
    )
    report = evaluation.evaluate_dsd(
        rows,
        cat,
        provider,
        strategy=cfg["strategy"],
        k_labels=ks,
        k_desc=cfg.get("k_desc"),
        plan=plan,
        report_ei=bool(cfg["report_ei"]),
        ngram_n=cfg["ngram_n"],
        jobs=cfg["jobs"],
    )
    lines = _provenance(cfg)
    header = ["seed", "strategy", "modes", "provider", "k_label", "k_desc", "repeat", "n_test", "micro_f1"]
    if cfg["report_ei"]:
        header += ["ei_step_mean", "ei_step_std", "ei_ngramex_mean", "ei_ngramex_std"]
    lines.append("\t".join(header))
    kd = str(cfg.get("k_desc") or "-")
    for cell in report.cells:
        fields = [str(cell.k_label), kd, str(cell.repeat), str(cell.n_test), _fmt(cell.micro_f1)]
        if cfg["report_ei"]:
            fields += [
                _fmt(cell.ei_step_mean),
                _fmt(cell.ei_step_std),
                _fmt(cell.ei_ngramex_mean),
                _fmt(cell.ei_ngramex_std),
            ]
        lines.append(_report_line(cfg, fields))
    for summary in report.summaries:
        for stat, value in (("mean", summary.mean), ("std", summary.std)):
            fields = [str(summary.k_label), kd, stat, str(len(rows)), _fmt(value)]
            if cfg["report_ei"]:
                fields += [
                    _fmt(summary.ei_step_mean),
                    _fmt(summary.ei_step_std),
                    _fmt(summary.ei_ngramex_mean),
                    _fmt(summary.ei_ngramex_std),
                ]
            lines.append(_report_line(cfg, fields))
    _emit(cfg, lines)
    return 0


def cmd_evaluate_dpd(cfg: dict) -> int:
    cat, rows = _load_inputs(cfg)
    if not any(row.binary_label is not None for row in rows):
        raise EngineError("dataset carries no binary labels")
    provider = _build_provider(cfg)
    plan = evaluation.SplitPlan(
        seed=cfg["seed"],
        train_fraction=cfg["train_fraction"],
        n_repeats=cfg["repeats"],
        stratified=True,
    )
    train_cfg = evaluation.TrainConfig(
        lr=cfg["lr"],
        ridge_lambda=cfg["ridge_lambda"],
        epochs=cfg["epochs"],
        seed=cfg["seed"],
    )
    report = evaluation.evaluate_dpd(
        rows,
        cat,
        provider,
        strategy=cfg["strategy"],
        k_desc=cfg.get("k_desc"),
        plan=plan,
        config=train_cfg,
        jobs=cfg["jobs"],
    )
    lines = _provenance(cfg)
    lines.append(
        "\t".join(
            ["seed", "strategy", "modes", "provider", "repeat", "n_test", "f1_model", "f1_random", "f1_majority"]
        )
    )
    for cell in report.cells:
        lines.append(
            _report_line(
                cfg,
                [
                    str(cell.repeat),
                    str(cell.n_test),
                    _fmt(cell.f1_model),
                    _fmt(cell.f1_random),
                    _fmt(cell.f1_majority),
                ],
            )
        )
    for stat, trio in (
        ("mean", (report.f1_mean, report.random_mean, report.majority_mean)),
        ("std", (report.f1_std, report.random_std, report.majority_std)),
    ):
        lines.append(
            _report_line(cfg, [stat, str(len(rows))] + [_fmt(v) for v in trio])
        )
    _emit(cfg, lines)
    return 0


def cmd_train_mapper(cfg: dict) -> int:
    src = load_table(cfg["source"])
    tgt = load_table(cfg["target"])
    vocab = mapper.common_vocab(src, tgt)
    fitter = mapper.fit_sentence_to_word if cfg["sentence_source"] else mapper.fit
    matrix = fitter(src, tgt, vocab, cfg["ridge_lambda"])
    mapper.save_matrix(matrix, cfg["output"])
    X = np.stack([src.entries[t] for t in vocab])
    Y = np.stack([tgt.entries[t] for t in vocab])
    residual = float(np.linalg.norm(X @ matrix.values - Y))
    sys.stdout.write(
        "wrote %s: %dx%d, vocab=%d, lambda=%s, residual=%s\n"
        % (cfg["output"], matrix.rows, matrix.cols, len(vocab), cfg["ridge_lambda"], _fmt(residual))
    )
    return 0


_COMMANDS = {
    "predict": cmd_predict,
    "explain": cmd_explain,
    "evaluate-dsd": cmd_evaluate_dsd,
    "evaluate-dpd": cmd_evaluate_dpd,
    "train-mapper": cmd_train_mapper,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_settings(args)
        validate_settings(cfg)
    except ConfigError as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return 2
    try:
        return _COMMANDS[cfg["command"]](cfg)
    except ConfigError as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return 2
    except EngineError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 3
    except OSError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
