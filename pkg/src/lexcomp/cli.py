"""Command-line entry point wiring the pipeline stages together.

Every experiment is primarily a JSON config file; command-line flags override
individual settings. Each run writes exactly one manifest recording inputs
(with checksums), outputs, seeds, and the tool version, so a run can be
reproduced byte for byte. Diagnostics go to stderr; data goes to files or
stdout. Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .annotations import (
    QcConfig,
    aggregate,
    agreement_histogram,
    annotation_statistics,
    dataset_report,
    filter_annotators,
    read_annotation_log,
    read_labels_tsv,
    subjectivity_correlation,
    write_labels_tsv,
)
from .bins import BIN_ORDER, bin_complexity
from .corpus import (
    Quota,
    load_frequency_table,
    parse_tagged,
    parse_untagged,
    read_instances_tsv,
    select_targets,
    write_instances_tsv,
)
from .evaluate import (
    ablate,
    classification_report,
    pearson,
    rank_features,
    spearman,
    standard_ablation_sets,
)
from .features import read_feature_matrix, write_feature_matrix
from .manifest import write_manifest
from .models import (
    ForestModel,
    ForestParams,
    RegressionModel,
    train_forest,
    train_regression,
)
from .pipeline import (
    build_feature_matrix,
    forest_trainer,
    genre_transfer_table,
    mae_ordinal,
)
from .resources import load_embeddings, load_lexicon
from .service import run_server


class _Parser(argparse.ArgumentParser):
    # Validation failures (bad flags, unknown subcommands) exit 1, not argparse's 2.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _Cfg:
    """Settings resolution: explicit flag > config file entry > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config_path: str | None = getattr(args, "config", None)
        self.data: dict = {}
        if self.config_path:
            with open(self.config_path, encoding="utf-8") as fh:
                self.data = json.load(fh)

    def get(self, name: str, default=None, required: bool = False):
        value = getattr(self.args, name.replace("-", "_"), None)
        if value is None:
            value = self.data.get(name, default)
        if value is None and required:
            raise ValueError(f"missing required setting {name!r} (flag --{name} or config key)")
        return value


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_lexicon_from(cfg: _Cfg):
    resources = cfg.get("resources", [])
    if isinstance(resources, str):
        resources = [resources]
    return load_lexicon(
        resources,
        frequent_path=cfg.get("frequent"),
        archaic_path=cfg.get("archaic"),
    ), [str(p) for p in resources]


def _join_features_labels(features_path: str, labels_path: str):
    ids, X, layout = read_feature_matrix(features_path)
    labels = {l.instance_id: l for l in read_labels_tsv(labels_path)}
    keep = [i for i, iid in enumerate(ids) if iid in labels]
    if len(keep) < len(ids):
        _log(f"{len(ids) - len(keep)} feature rows have no label and were skipped")
    if not keep:
        raise ValueError("no feature rows match the label file")
    joined_ids = [ids[i] for i in keep]
    return joined_ids, X[keep], layout, [labels[iid] for iid in joined_ids]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_build_corpus(args) -> int:
    cfg = _Cfg(args)
    inputs: dict = cfg.get("inputs", required=True)
    out = cfg.get("out", required=True)
    seed = int(cfg.get("seed", 0))
    quota = Quota(singles=int(cfg.get("quota-singles", 3000)), mwes=int(cfg.get("quota-mwes", 600)))
    freq_path = cfg.get("frequency-table", required=True)
    untagged = bool(cfg.get("untagged", False))

    freq_table = load_frequency_table(freq_path)
    sentences = []
    input_paths = []
    for genre, paths in inputs.items():
        if isinstance(paths, str):
            paths = [paths]
        for path in paths:
            input_paths.append(path)
            parse = parse_untagged if untagged else parse_tagged
            sentences.extend(parse(path, genre))
    _log(f"parsed {len(sentences)} sentences across {len(inputs)} genres")

    instances, stats, report = select_targets(sentences, freq_table, quota, seed)
    n = write_instances_tsv(out, instances)
    for w in report.warnings:
        _log(f"warning: {w}")
    for s in report.shortfalls:
        _log(
            f"shortfall: {s['genre']}/{s['kind']} band {s['band']}: "
            f"{s['selected']}/{s['requested']} selected"
        )
    _log(
        f"selected {n} instances, {stats.n_distinct_tokens} distinct tokens, "
        f"{stats.mean_contexts_per_token:.2f} mean contexts per token"
    )
    write_manifest(
        f"{out}.manifest.json",
        "build-corpus",
        cfg.config_path,
        [seed],
        input_paths + [freq_path],
        [out],
        extra={
            "n_instances": n,
            "n_distinct_tokens": stats.n_distinct_tokens,
            "allocations": report.allocations,
            "shortfalls": report.shortfalls,
        },
    )
    return 0


def cmd_featurize(args) -> int:
    cfg = _Cfg(args)
    instances_path = cfg.get("instances", required=True)
    out = cfg.get("out", required=True)
    lexicon, resource_paths = _load_lexicon_from(cfg)
    embeddings_path = cfg.get("embeddings")
    embeddings = load_embeddings(embeddings_path) if embeddings_path else None
    freq_path = cfg.get("frequency-table")
    freq_table = load_frequency_table(freq_path) if freq_path else None

    rows = read_instances_tsv(instances_path)
    ids, X, layout = build_feature_matrix(rows, lexicon, embeddings, freq_table)
    write_feature_matrix(out, ids, X, layout)
    _log(f"featurized {len(ids)} instances into {layout.total} columns ({layout.version})")
    inputs = [instances_path] + resource_paths
    for p in (embeddings_path, freq_path):
        if p:
            inputs.append(p)
    write_manifest(f"{out}.manifest.json", "featurize", cfg.config_path, [], inputs, [out])
    return 0


def cmd_aggregate(args) -> int:
    cfg = _Cfg(args)
    log_path = cfg.get("in", required=True)
    out = cfg.get("out", required=True)
    qc = QcConfig(
        min_valid_annotations=int(cfg.get("min-annotations", 4)),
        uniform_annotator_reject=not bool(cfg.get("keep-uniform", False)),
        min_elapsed=float(cfg.get("min-elapsed", 3.0)),
        frequency_correlation_floor=float(cfg.get("freq-floor", 0.0)),
    )
    records = read_annotation_log(log_path)

    instance_freq = None
    instances_path = cfg.get("instances")
    freq_path = cfg.get("frequency-table")
    rows = read_instances_tsv(instances_path) if instances_path else None
    if rows and freq_path:
        freq_table = load_frequency_table(freq_path)
        instance_freq = {}
        for row in rows:
            parts = row.surface.casefold().split(" ")
            instance_freq[row.id] = min(freq_table.get(p, 0) for p in parts)

    kept, rejections = filter_annotators(records, qc, instance_freq)
    labels, dropped = aggregate(kept, qc)
    write_labels_tsv(out, labels)
    stats = annotation_statistics(kept)
    _log(
        f"collection: {stats['annotators']} annotators, "
        f"{stats['annotations_per_instance']:.2f} annotations/instance, "
        f"{stats['instances_per_annotator']:.2f} instances/annotator, "
        f"{stats['mean_elapsed_seconds']:.2f}s mean per annotation"
    )
    qc_report = {
        "rejected_annotators": rejections.rejected,
        "kept_records": rejections.kept_records,
        "removed_records": rejections.removed_records,
        "dropped_instances": [{"instance_id": i, "reason": r} for i, r in dropped],
        "collection_statistics": stats,
    }
    with open(f"{out}.qc.json", "w", encoding="utf-8") as fh:
        json.dump(qc_report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log(
        f"{len(records)} records -> {rejections.kept_records} kept "
        f"({len(rejections.rejected)} annotators rejected); "
        f"{len(labels)} labels, {len(dropped)} instances dropped"
    )
    if rows:
        info = {r.id: (r.genre, r.is_mwe, r.surface) for r in rows}
        for line in dataset_report(labels, info):
            _log(
                f"  {line['subset']:>6}/{line['genre']:<10} contexts={line['contexts']:<6} "
                f"tokens={line['unique_tokens']:<6} mean={line['mean_complexity']:.3f}"
            )
    inputs = [log_path] + ([instances_path] if instances_path else []) + ([freq_path] if freq_path else [])
    write_manifest(
        f"{out}.manifest.json", "aggregate", cfg.config_path, [], inputs, [out, f"{out}.qc.json"]
    )
    return 0


def cmd_analyze_agreement(args) -> int:
    cfg = _Cfg(args)
    labels_path = cfg.get("labels", required=True)
    out = cfg.get("out", required=True)
    width = float(cfg.get("bin-width", 0.1))
    labels = read_labels_tsv(labels_path)
    table, undefined = agreement_histogram(labels, width)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("bucket_lo\tcount\n")
        for lo, _hi, count in table:
            fh.write(f"{lo:.6g}\t{count}\n")
    _log(f"{len(labels)} labels, {undefined} with undefined W")
    if len(labels) >= 3:
        r = subjectivity_correlation(labels)
        _log(f"subjectivity correlation (mean vs stdev): {r if r is None else round(r, 4)}")
    write_manifest(
        f"{out}.manifest.json",
        "analyze-agreement",
        cfg.config_path,
        [],
        [labels_path],
        [out],
        extra={"undefined_w": undefined},
    )
    return 0


def cmd_train(args) -> int:
    cfg = _Cfg(args)
    task = cfg.get("task", required=True)
    if task not in ("regression", "forest"):
        raise ValueError(f"unknown task {task!r}; expected regression or forest")
    out = cfg.get("out", required=True)
    features_path = cfg.get("features", required=True)
    labels_path = cfg.get("labels", required=True)
    seed = int(cfg.get("seed", 0))
    _ids, X, layout, labels = _join_features_labels(features_path, labels_path)

    if task == "regression":
        y = np.array([l.mean for l in labels])
        model = train_regression(
            X, y, ridge_lambda=float(cfg.get("ridge-lambda", 0.0)), layout_version=layout.version
        )
        payload = model.to_dict()
    else:
        fps = cfg.get("features-per-split")
        depth = cfg.get("max-depth")
        params = ForestParams(
            n_trees=int(cfg.get("n-trees", 100)),
            features_per_split=int(fps) if fps is not None else None,
            max_depth=int(depth) if depth is not None else None,
            min_leaf=int(cfg.get("min-leaf", 1)),
        )
        model = train_forest(
            X,
            [l.bin for l in labels],
            params,
            seed=seed,
            threads=int(cfg.get("threads", 1)),
            layout_version=layout.version,
        )
        payload = model.to_dict()

    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
    _log(f"trained {task} on {X.shape[0]} instances x {X.shape[1]} features")
    write_manifest(
        f"{out}.manifest.json", "train", cfg.config_path, [seed], [features_path, labels_path], [out]
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _Cfg(args)
    model_path = cfg.get("model", required=True)
    features_path = cfg.get("features", required=True)
    labels_path = cfg.get("labels", required=True)
    out = cfg.get("out", required=True)
    with open(model_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    _ids, X, layout, labels = _join_features_labels(features_path, labels_path)

    lines = []
    if payload.get("kind") == "linear_regression":
        model = RegressionModel.from_dict(payload)
        model.check_layout(layout.version)
        y = np.array([l.mean for l in labels])
        raw = model.predict(X)
        clamped = np.clip(raw, 0.0, 1.0)
        report = classification_report(
            [l.bin for l in labels],
            [bin_complexity(float(v)) for v in clamped],
            gold_scores=y,
            pred_scores=raw,
        )
    else:
        model = ForestModel.from_dict(payload)
        model.check_layout(layout.version)
        pred_bins = model.predict(X)
        report = classification_report([l.bin for l in labels], pred_bins)

    lines.append(("n", report.n))
    lines.append(("pearson", report.pearson))
    lines.append(("spearman", report.spearman))
    lines.append(("mae", report.mae))
    lines.append(("weighted_f1", report.weighted_f1))
    for b in BIN_ORDER:
        m = report.per_class[b]
        lines.append((f"{b.value}_precision", m.precision))
        lines.append((f"{b.value}_recall", m.recall))
        lines.append((f"{b.value}_f1", m.f1))
        lines.append((f"{b.value}_support", m.support))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("metric\tvalue\n")
        for name, value in lines:
            fh.write(f"{name}\t{'' if value is None else value}\n")
    _log(f"weighted F1 {report.weighted_f1:.4f}, MAE {report.mae:.4f}")
    write_manifest(
        f"{out}.manifest.json",
        "evaluate",
        cfg.config_path,
        [],
        [model_path, features_path, labels_path],
        [out],
    )
    return 0


def cmd_ablate(args) -> int:
    cfg = _Cfg(args)
    features_path = cfg.get("features", required=True)
    labels_path = cfg.get("labels", required=True)
    out = cfg.get("out", required=True)
    seed = int(cfg.get("seed", 0))
    folds = int(cfg.get("folds", 10))
    fps = cfg.get("features-per-split")
    depth = cfg.get("max-depth")
    params = ForestParams(
        n_trees=int(cfg.get("n-trees", 100)),
        features_per_split=int(fps) if fps is not None else None,
        max_depth=int(depth) if depth is not None else None,
        min_leaf=int(cfg.get("min-leaf", 1)),
    )
    _ids, X, layout, labels = _join_features_labels(features_path, labels_path)
    y_ord = np.array([l.bin.ordinal for l in labels], dtype=float)

    group_columns = {g: list(layout.columns(g)) for g in layout.group_sizes}
    rows = standard_ablation_sets(layout.group_sizes)
    results = ablate(
        X,
        y_ord,
        group_columns,
        rows,
        forest_trainer(params, seed=seed, threads=int(cfg.get("threads", 1))),
        mae_ordinal,
        n_folds=folds,
        seed=seed,
        strata=y_ord,
    )
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("ablated_group\tmae\tbaseline_mae\tdelta_mae\n")
        for r in results:
            fh.write(f"{r.group}\t{r.mae!r}\t{r.baseline_mae!r}\t{r.delta_mae!r}\n")
    _log(f"{len(results)} ablation rows, baseline MAE {results[0].baseline_mae:.4f}")
    write_manifest(
        f"{out}.manifest.json",
        "ablate",
        cfg.config_path,
        [seed],
        [features_path, labels_path],
        [out],
    )
    return 0


def cmd_rank_features(args) -> int:
    cfg = _Cfg(args)
    features_path = cfg.get("features", required=True)
    out = cfg.get("out", required=True)
    n_components = int(cfg.get("components", 10))
    _ids, X, layout = read_feature_matrix(features_path)
    components = rank_features(X, layout.column_groups(), n_components=n_components)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("rank\teigenvalue\ttop_groups\n")
        for c in components:
            fh.write(f"{c.index + 1}\t{c.eigenvalue!r}\t{','.join(c.top_groups)}\n")
    _log(f"extracted {len(components)} components")
    write_manifest(
        f"{out}.manifest.json", "rank-features", cfg.config_path, [], [features_path], [out]
    )
    return 0


def cmd_cross_genre(args) -> int:
    cfg = _Cfg(args)
    features_path = cfg.get("features", required=True)
    labels_path = cfg.get("labels", required=True)
    instances_path = cfg.get("instances", required=True)
    out = cfg.get("out", required=True)
    ridge = float(cfg.get("ridge-lambda", 1e-6))
    ids, X, layout, labels = _join_features_labels(features_path, labels_path)
    rows = {r.id: r for r in read_instances_tsv(instances_path)}
    keep = [i for i, iid in enumerate(ids) if iid in rows and not rows[iid].is_mwe]
    if not keep:
        raise ValueError("no single-word instances with features, labels, and metadata")
    X = X[keep]
    y = np.array([labels[i].mean for i in keep])
    genres = [rows[ids[i]].genre for i in keep]

    table = genre_transfer_table(X, y, genres, ridge_lambda=ridge)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("train\ttest\tpearson\n")
        for row in table:
            r = row["pearson"]
            fh.write(f"{row['train']}\t{row['test']}\t{'' if r is None else repr(r)}\n")
    _log(f"{len(table)} transfer cells over {len(set(genres))} genres")
    write_manifest(
        f"{out}.manifest.json",
        "cross-genre",
        cfg.config_path,
        [],
        [features_path, labels_path, instances_path],
        [out],
    )
    return 0


def cmd_serve(args) -> int:
    cfg = _Cfg(args)
    instances_path = cfg.get("instances", required=True)
    log_path = cfg.get("log", required=True)
    host = cfg.get("host", "127.0.0.1")
    port = int(cfg.get("port", 8080))
    write_manifest(
        f"{log_path}.manifest.json",
        "serve",
        cfg.config_path,
        [int(cfg.get("seed", 0))],
        [instances_path],
        [log_path],
    )
    qc = None
    min_elapsed = cfg.get("qc-min-elapsed")
    if min_elapsed is not None:
        qc = QcConfig(min_elapsed=float(min_elapsed))
    freq_path = cfg.get("frequency-table")
    run_server(
        instances_path,
        log_path,
        host=host,
        port=port,
        annotations_target=int(cfg.get("target", 20)),
        batch_size=int(cfg.get("batch-size", 1200)),
        seed=int(cfg.get("seed", 0)),
        static_dir=cfg.get("static-dir"),
        qc=qc,
        frequency_table=load_frequency_table(freq_path) if freq_path else None,
    )
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def _add(sub, name: str, handler, flags: list[str], help_text: str):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("--config", help="JSON config file; flags override its entries")
    for flag in flags:
        if flag in ("keep-uniform", "untagged"):
            p.add_argument(f"--{flag}", action="store_true", default=None)
        else:
            p.add_argument(f"--{flag}")
    p.set_defaults(handler=handler)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexcomp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lexcomp {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    _add(sub, "build-corpus", cmd_build_corpus,
         ["out", "frequency-table", "quota-singles", "quota-mwes", "seed", "untagged"],
         "sample annotation targets from pre-tagged genre corpora")
    _add(sub, "featurize", cmd_featurize,
         ["instances", "out", "embeddings", "frequent", "archaic", "frequency-table"],
         "build the feature matrix for an instances file")
    _add(sub, "aggregate", cmd_aggregate,
         ["in", "out", "min-annotations", "min-elapsed", "freq-floor", "keep-uniform",
          "instances", "frequency-table"],
         "quality-control and aggregate an annotation log into labels")
    _add(sub, "analyze-agreement", cmd_analyze_agreement,
         ["labels", "out", "bin-width"],
         "per-instance agreement histogram and subjectivity correlation")
    _add(sub, "train", cmd_train,
         ["task", "features", "labels", "out", "ridge-lambda", "n-trees",
          "features-per-split", "max-depth", "min-leaf", "seed", "threads"],
         "train a regression or forest model")
    _add(sub, "evaluate", cmd_evaluate,
         ["model", "features", "labels", "out"],
         "evaluate a trained model against gold labels")
    _add(sub, "ablate", cmd_ablate,
         ["features", "labels", "out", "n-trees", "features-per-split", "max-depth",
          "min-leaf", "folds", "seed", "threads"],
         "cross-validated feature-group ablation (delta MAE)")
    _add(sub, "rank-features", cmd_rank_features,
         ["features", "out", "components"],
         "principal-component ranking of feature groups")
    _add(sub, "cross-genre", cmd_cross_genre,
         ["features", "labels", "instances", "out", "ridge-lambda"],
         "train on some genres, test on a held-out genre")
    _add(sub, "serve", cmd_serve,
         ["instances", "log", "host", "port", "target", "batch-size", "seed",
          "static-dir", "qc-min-elapsed", "frequency-table"],
         "run the annotation collection service")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        return 0
    except FileNotFoundError as e:
        _log(f"error: file not found: {e.filename or e}")
        return 2
    except OSError as e:
        _log(f"error: {e}")
        return 2
    except (ValueError, KeyError) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
