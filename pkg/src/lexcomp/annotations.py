"""Annotator judgments: storage, quality control, aggregation, and agreement.

Judgments arrive on a 5-point Likert scale and are mapped to [0, 1] before
aggregation. Instances keep their label only when enough valid annotations
survive quality control; per-instance agreement is quantified with the
Shapiro-Wilk statistic over the mapped scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .bins import ComplexityBin, bin_complexity
from .evaluate import pearson, spearman
from .shapiro import shapiro_wilk

__all__ = [
    "LIKERT_SCALE",
    "LIKERT_TO_SCORE",
    "AnnotationRecord",
    "ComplexityLabel",
    "QcConfig",
    "map_likert",
    "RejectionReport",
    "filter_annotators",
    "aggregate",
    "agreement_histogram",
    "subjectivity_correlation",
    "annotation_statistics",
    "dataset_report",
    "write_labels_tsv",
    "read_labels_tsv",
    "read_annotation_log",
    "append_annotation_log",
]

# The annotation instrument: value, short label, and the descriptor shown to
# annotators. Clients must render these exactly as served.
LIKERT_SCALE: tuple[tuple[int, str, str], ...] = (
    (1, "Very Easy", "Words which were very familiar to an annotator."),
    (2, "Easy", "Words with which an annotator was aware of the meaning."),
    (3, "Neutral", "A word which was neither difficult nor easy."),
    (4, "Difficult", "Words which an annotator was unclear of the meaning, but may have been able to infer the meaning from the sentence."),
    (5, "Very Difficult", "Words that an annotator had never seen before, or were very unclear."),
)

# The 0-1 normalization key for aggregating Likert labels.
LIKERT_TO_SCORE: dict[int, float] = {1: 0.0, 2: 0.25, 3: 0.5, 4: 0.75, 5: 1.0}


def map_likert(label: int) -> float:
    """Map a 1-5 Likert label onto the 0-1 complexity range."""
    try:
        return LIKERT_TO_SCORE[label]
    except KeyError:
        raise ValueError(f"Likert label must be 1..5, got {label!r}") from None


@dataclass(frozen=True)
class AnnotationRecord:
    instance_id: str
    annotator_id: str
    likert: int
    elapsed: float  # seconds
    batch: int
    timestamp: str  # ISO-8601 UTC instant

    def __post_init__(self) -> None:
        if self.likert not in LIKERT_TO_SCORE:
            raise ValueError(f"Likert label must be 1..5, got {self.likert!r}")
        if self.elapsed < 0:
            raise ValueError("elapsed time must be non-negative")

    @property
    def score(self) -> float:
        return LIKERT_TO_SCORE[self.likert]

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "annotator_id": self.annotator_id,
            "likert": self.likert,
            "elapsed": self.elapsed,
            "batch": self.batch,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AnnotationRecord":
        return cls(
            instance_id=d["instance_id"],
            annotator_id=d["annotator_id"],
            likert=int(d["likert"]),
            elapsed=float(d["elapsed"]),
            batch=int(d["batch"]),
            timestamp=d.get("timestamp", ""),
        )


@dataclass(frozen=True)
class ComplexityLabel:
    instance_id: str
    mean: float
    stdev: float
    n: int
    shapiro_w: float | None
    bin: ComplexityBin


@dataclass(frozen=True)
class QcConfig:
    min_valid_annotations: int = 4
    uniform_annotator_reject: bool = True
    min_elapsed: float = 3.0  # median seconds per judgment below this is suspect
    frequency_correlation_floor: float = 0.0

    def __post_init__(self) -> None:
        if self.min_valid_annotations < 1:
            raise ValueError("min_valid_annotations must be at least 1")


@dataclass
class RejectionReport:
    """Per-annotator QC verdicts; reasons in {uniform, too_fast, frequency}."""

    rejected: dict[str, list[str]]
    kept_records: int
    removed_records: int

    def reasons_for(self, annotator_id: str) -> list[str]:
        return self.rejected.get(annotator_id, [])


def filter_annotators(
    records: Sequence[AnnotationRecord],
    qc: QcConfig,
    instance_freq: Mapping[str, int] | None = None,
) -> tuple[list[AnnotationRecord], RejectionReport]:
    """Drop every record of annotators who fail a quality gate.

    Gates, per annotator: (a) the exact same label on every instance they saw
    (two or more records; one record is no evidence of non-participation);
    (b) median elapsed time below `qc.min_elapsed`; (c) with `instance_freq`
    supplied, a score-vs-log-frequency Spearman correlation above
    `-qc.frequency_correlation_floor`, i.e. failing the expected negative
    frequency-complexity relationship. Idempotent: survivors pass all gates
    on re-filtering by construction.
    """
    by_annotator: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        by_annotator.setdefault(r.annotator_id, []).append(r)

    rejected: dict[str, list[str]] = {}
    for annotator, recs in sorted(by_annotator.items()):
        reasons = []
        if qc.uniform_annotator_reject and len(recs) >= 2:
            if len({r.likert for r in recs}) == 1:
                reasons.append("uniform")
        if qc.min_elapsed is not None:
            elapsed = sorted(r.elapsed for r in recs)
            mid = len(elapsed) // 2
            median = elapsed[mid] if len(elapsed) % 2 else (elapsed[mid - 1] + elapsed[mid]) / 2
            if median < qc.min_elapsed:
                reasons.append("too_fast")
        if instance_freq is not None:
            pairs = [
                (r.score, math.log(instance_freq[r.instance_id]))
                for r in recs
                if instance_freq.get(r.instance_id, 0) > 0
            ]
            if len(pairs) >= 3:
                rho = spearman([p[0] for p in pairs], [p[1] for p in pairs])
                if rho is not None and rho > -qc.frequency_correlation_floor:
                    reasons.append("frequency")
        if reasons:
            rejected[annotator] = reasons

    kept = [r for r in records if r.annotator_id not in rejected]
    report = RejectionReport(
        rejected=rejected,
        kept_records=len(kept),
        removed_records=len(records) - len(kept),
    )
    return kept, report


def aggregate(
    records: Sequence[AnnotationRecord],
    qc: QcConfig,
) -> tuple[list[ComplexityLabel], list[tuple[str, str]]]:
    """Aggregate per-instance scores into labels; under-annotated ones drop.

    Mean and *population* standard deviation over the mapped scores; scores
    are sorted before summation, so the result is exactly permutation
    invariant. Returns (labels sorted by instance id, dropped (id, reason)).
    """
    by_instance: dict[str, list[float]] = {}
    for r in records:
        by_instance.setdefault(r.instance_id, []).append(r.score)

    labels: list[ComplexityLabel] = []
    dropped: list[tuple[str, str]] = []
    for instance_id in sorted(by_instance):
        scores = sorted(by_instance[instance_id])
        n = len(scores)
        if n < qc.min_valid_annotations:
            dropped.append(
                (instance_id, f"only {n} valid annotations (minimum {qc.min_valid_annotations})")
            )
            continue
        mean = math.fsum(scores) / n
        variance = math.fsum((s - mean) ** 2 for s in scores) / n
        labels.append(
            ComplexityLabel(
                instance_id=instance_id,
                mean=mean,
                stdev=math.sqrt(variance),
                n=n,
                shapiro_w=shapiro_wilk(scores),
                bin=bin_complexity(mean),
            )
        )
    return labels, dropped


def agreement_histogram(
    labels: Sequence[ComplexityLabel],
    bin_width: float = 0.1,
) -> tuple[list[tuple[float, float, int]], int]:
    """Counts of defined W values per [lo, hi) bucket over [0, 1].

    The last bucket is closed so W = 1.0 is countable. Returns the bucket
    table and the number of instances whose W is undefined (reported
    separately, never folded into a bucket). Empty input gives an empty table.
    """
    if not 0.0 < bin_width <= 1.0:
        raise ValueError("bin_width must be in (0, 1]")
    if not labels:
        return [], 0
    n_buckets = math.ceil(round(1.0 / bin_width, 9))
    counts = [0] * n_buckets
    undefined = 0
    for label in labels:
        if label.shapiro_w is None:
            undefined += 1
            continue
        bucket = min(int(label.shapiro_w / bin_width), n_buckets - 1)
        counts[bucket] += 1
    table = [
        (i * bin_width, min((i + 1) * bin_width, 1.0), counts[i])
        for i in range(n_buckets)
    ]
    return table, undefined


def subjectivity_correlation(labels: Sequence[ComplexityLabel]) -> float | None:
    """Pearson's r between per-instance mean complexity and its spread."""
    if len(labels) < 3:
        raise ValueError("subjectivity correlation requires at least 3 labels")
    return pearson([l.mean for l in labels], [l.stdev for l in labels])


def annotation_statistics(records: Sequence[AnnotationRecord]) -> dict:
    """Round-level collection statistics over raw annotation records."""
    annotators = {r.annotator_id for r in records}
    instances = {r.instance_id for r in records}
    n = len(records)
    return {
        "annotators": len(annotators),
        "instances": len(instances),
        "annotations": n,
        "annotations_per_instance": n / len(instances) if instances else 0.0,
        "instances_per_annotator": n / len(annotators) if annotators else 0.0,
        "mean_elapsed_seconds": math.fsum(r.elapsed for r in records) / n if n else 0.0,
    }


def dataset_report(
    labels: Sequence[ComplexityLabel],
    instance_info: Mapping[str, tuple[str, bool, str]],
) -> list[dict]:
    """Grouped corpus statistics: contexts, distinct tokens, mean complexity.

    `instance_info` maps instance id to (genre, is_mwe, target surface).
    Rows cover subsets all/single/mwe, each totalled and broken out per genre.
    """
    rows = []
    genres = sorted({info[0] for info in instance_info.values()})
    for subset in ("all", "single", "mwe"):
        for genre in ["total", *genres]:
            selected = []
            for label in labels:
                info = instance_info.get(label.instance_id)
                if info is None:
                    continue
                g, is_mwe, surface = info
                if subset == "single" and is_mwe:
                    continue
                if subset == "mwe" and not is_mwe:
                    continue
                if genre != "total" and g != genre:
                    continue
                selected.append((label, surface))
            if not selected:
                continue
            mean = math.fsum(l.mean for l, _ in selected) / len(selected)
            rows.append(
                {
                    "subset": subset,
                    "genre": genre,
                    "contexts": len(selected),
                    "unique_tokens": len({s.casefold() for _, s in selected}),
                    "mean_complexity": mean,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Label TSV (the aggregation output interface)
# ---------------------------------------------------------------------------

def write_labels_tsv(path: str | Path, labels: Sequence[ComplexityLabel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("instance_id\tmean\tstdev\tn\tshapiro_w\tbin\n")
        for l in labels:
            w = "" if l.shapiro_w is None else repr(l.shapiro_w)
            fh.write(f"{l.instance_id}\t{l.mean!r}\t{l.stdev!r}\t{l.n}\t{w}\t{l.bin.value}\n")


def read_labels_tsv(path: str | Path) -> list[ComplexityLabel]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        expected = ["instance_id", "mean", "stdev", "n", "shapiro_w", "bin"]
        if header != expected:
            raise ValueError(f"{path}: expected columns {expected}, got {header}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            iid, mean, stdev, n, w, bin_name = line.split("\t")
            labels.append(
                ComplexityLabel(
                    instance_id=iid,
                    mean=float(mean),
                    stdev=float(stdev),
                    n=int(n),
                    shapiro_w=float(w) if w else None,
                    bin=ComplexityBin(bin_name),
                )
            )
    return labels


# ---------------------------------------------------------------------------
# JSON-lines annotation log
# ---------------------------------------------------------------------------

def read_annotation_log(path: str | Path) -> list[AnnotationRecord]:
    """Read AnnotationRecords from a JSONL log, skipping control-event lines."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if "event" in d:
                continue
            records.append(AnnotationRecord.from_dict(d))
    return records


def append_annotation_log(path: str | Path, records: Iterable[AnnotationRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")
