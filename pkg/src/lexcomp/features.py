"""Fixed-layout feature vectors for single-word and two-token targets.

The layout concatenates twenty value groups (A through T) with sixteen
presence indicators. Absent resource values are encoded as 0 *plus* a 0
presence flag, so models can distinguish "value is zero" from "value is
unknown". For the standard 300-dimensional embedding table the vector has
exactly 378 components.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Instance, InstanceRow
from .evaluate import spearman
from .resources import (
    INFOBOX_CATEGORIES,
    PLURALITY_CODES,
    STATUS_CATEGORIES,
    STRESS_CODES,
    WTYPE_CATEGORIES,
    EmbeddingTable,
    Lexicon,
)

__all__ = [
    "FeatureLayout",
    "FeatureVector",
    "normalized_length",
    "featurize_word",
    "featurize",
    "featurize_mwe",
    "correlation_report",
    "write_feature_matrix",
    "read_feature_matrix",
]

# Presence-indicator slots, in vector order.
_PRESENCE_SLOTS: tuple[str, ...] = (
    "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O",  # per resource field
    "P", "Q", "R",  # category-set membership
    "FREQLIST",  # coverage in the sampling frequency list
    "EMBEDDING",  # coverage in the embedding table
)

# Groups whose MWE value is the constituents' arithmetic mean; all others
# take the second constituent's value. Presence flags follow their group's
# class, with FREQLIST and EMBEDDING counted as numeric.
NUMERIC_GROUPS: frozenset[str] = frozenset({"C", "E", "F", "G", "H", "I", "J", "K", "L", "M", "T"})
_NUMERIC_PRESENCE: frozenset[str] = frozenset({"E", "F", "G", "H", "I", "J", "K", "L", "M", "FREQLIST", "EMBEDDING"})


@dataclass(frozen=True)
class FeatureLayout:
    """Column layout for a given embedding dimension (378 columns at dim 300)."""

    embedding_dim: int = 300

    @property
    def version(self) -> str:
        return f"lexcomp-feat-v1-d{self.embedding_dim}"

    @property
    def group_sizes(self) -> dict[str, int]:
        return {
            "A": 1, "B": 1, "C": 1,
            "D": len(PLURALITY_CODES),
            "E": 1, "F": 1, "G": 1, "H": 1, "I": 1, "J": 1,
            "K": 1, "L": 1, "M": 1, "N": 1, "O": 1,
            "P": len(WTYPE_CATEGORIES),
            "Q": len(STATUS_CATEGORIES),
            "R": len(STRESS_CODES),
            "S": len(INFOBOX_CATEGORIES),
            "T": self.embedding_dim,
            "MRCPRES": len(_PRESENCE_SLOTS),
        }

    @property
    def group_index(self) -> dict[str, tuple[int, int]]:
        index = {}
        start = 0
        for group, size in self.group_sizes.items():
            index[group] = (start, start + size)
            start += size
        return index

    @property
    def total(self) -> int:
        return sum(self.group_sizes.values())

    def columns(self, group: str) -> range:
        start, end = self.group_index[group]
        return range(start, end)

    def column_groups(self) -> list[str]:
        """Group id of every column, e.g. for principal-component reporting."""
        out = []
        for group, size in self.group_sizes.items():
            out.extend([group] * size)
        return out

    def column_names(self) -> list[str]:
        names: list[str] = []
        slot_labels = {
            "D": PLURALITY_CODES,
            "P": WTYPE_CATEGORIES,
            "Q": STATUS_CATEGORIES,
            "R": STRESS_CODES,
            "S": INFOBOX_CATEGORIES,
            "MRCPRES": _PRESENCE_SLOTS,
        }
        for group, size in self.group_sizes.items():
            if size == 1:
                names.append(group)
            elif group in slot_labels:
                names.extend(f"{group}:{label}" for label in slot_labels[group])
            else:
                names.extend(f"{group}:{i:03d}" for i in range(size))
        return names

    def to_dict(self) -> dict:
        return {
            "layout_version": self.version,
            "embedding_dim": self.embedding_dim,
            "total": self.total,
            "group_index": {g: list(span) for g, span in self.group_index.items()},
        }


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    @property
    def layout_version(self) -> str:
        return self.layout.version

    def group(self, group_id: str) -> np.ndarray:
        start, end = self.layout.group_index[group_id]
        return self.values[start:end]


def normalized_length(word: str) -> float:
    """Character count over 50, clamped to 1.0 for pathological tokens."""
    if not word:
        raise ValueError("cannot compute length of an empty word")
    return min(len(word) / 50.0, 1.0)


def _one_hot(size: int, index: int | None) -> np.ndarray:
    v = np.zeros(size)
    if index is not None:
        v[index] = 1.0
    return v


def _multi_hot(categories: Sequence[str], members: frozenset[str]) -> np.ndarray:
    return np.array([1.0 if c in members else 0.0 for c in categories])


def featurize_word(
    word: str,
    lexicon: Lexicon,
    embeddings: EmbeddingTable | None = None,
    freq_table: Mapping[str, int] | None = None,
    layout: FeatureLayout | None = None,
) -> FeatureVector:
    """Feature vector for one word; absence is data (0 value, 0 presence flag)."""
    if layout is None:
        layout = FeatureLayout(embedding_dim=embeddings.dimension if embeddings else 300)
    record, presence = lexicon.lookup(word)

    def scalar(value) -> float:
        if value is None:
            return 0.0
        if value is True:
            return 1.0
        if value is False:
            return 0.0
        return float(value)

    parts: list[np.ndarray] = [
        np.array([1.0 if record.frequent else 0.0]),  # A
        np.array([1.0 if record.archaic_listed else 0.0]),  # B
        np.array([normalized_length(word)]),  # C
        _one_hot(
            len(PLURALITY_CODES),
            PLURALITY_CODES.index(record.plurality) if record.plurality else None,
        ),  # D
    ]
    for field_name in ("familiarity", "concreteness", "imageability", "brown_freq",
                       "kf_freq", "tl_freq", "meanc", "meanp", "aoa", "tq2q", "tq22"):
        parts.append(np.array([scalar(getattr(record, field_name))]))  # E..O
    parts.append(_multi_hot(WTYPE_CATEGORIES, record.wtype))  # P
    parts.append(_multi_hot(STATUS_CATEGORIES, record.status))  # Q
    parts.append(_one_hot(len(STRESS_CODES), STRESS_CODES.index(record.stress) if record.stress else None))  # R
    parts.append(_one_hot(len(INFOBOX_CATEGORIES), INFOBOX_CATEGORIES.index(record.infobox) if record.infobox else None))  # S

    vec = embeddings.lookup(word) if embeddings is not None else None
    in_embeddings = vec is not None
    if vec is None:
        vec = np.zeros(layout.embedding_dim)
    elif vec.size != layout.embedding_dim:
        raise ValueError(
            f"embedding dimension {vec.size} does not match layout dimension {layout.embedding_dim}"
        )
    parts.append(np.asarray(vec, dtype=float))  # T

    flag_values = dict(presence)
    flag_values["FREQLIST"] = freq_table is not None and word.casefold() in freq_table
    flag_values["EMBEDDING"] = in_embeddings
    parts.append(np.array([1.0 if flag_values[slot] else 0.0 for slot in _PRESENCE_SLOTS]))

    values = np.concatenate(parts)
    assert values.size == layout.total
    return FeatureVector(values=values, layout=layout)


def featurize(
    target: Instance | InstanceRow,
    lexicon: Lexicon,
    embeddings: EmbeddingTable | None = None,
    freq_table: Mapping[str, int] | None = None,
    layout: FeatureLayout | None = None,
) -> FeatureVector:
    """Vector for a single-word target."""
    if target.is_mwe:
        raise ValueError("featurize expects a single-word target; use featurize_mwe")
    return featurize_word(target.surface, lexicon, embeddings, freq_table, layout)


def featurize_mwe(
    target: Instance | InstanceRow,
    lexicon: Lexicon,
    embeddings: EmbeddingTable | None = None,
    freq_table: Mapping[str, int] | None = None,
    layout: FeatureLayout | None = None,
) -> FeatureVector:
    """Vector for a 2-token target.

    Numeric groups average the two constituents; symbolic and one-hot groups
    take the second constituent's values. Presence flags follow the class of
    their group, so numeric-group flags can be 0.5 when exactly one
    constituent is covered.
    """
    if not target.is_mwe:
        raise ValueError("featurize_mwe expects a 2-token target; use featurize")
    parts = target.surface.split(" ")
    if len(parts) != 2:
        raise ValueError(f"MWE surface must contain exactly 2 tokens, got {target.surface!r}")
    first = featurize_word(parts[0], lexicon, embeddings, freq_table, layout)
    second = featurize_word(parts[1], lexicon, embeddings, freq_table, layout)
    layout = first.layout

    values = second.values.copy()
    for group in NUMERIC_GROUPS:
        start, end = layout.group_index[group]
        values[start:end] = (first.values[start:end] + second.values[start:end]) / 2.0
    pres_start, _ = layout.group_index["MRCPRES"]
    for offset, slot in enumerate(_PRESENCE_SLOTS):
        if slot in _NUMERIC_PRESENCE:
            i = pres_start + offset
            values[i] = (first.values[i] + second.values[i]) / 2.0
    return FeatureVector(values=values, layout=layout)


def correlation_report(
    dataset: Sequence[tuple[FeatureVector, float]],
) -> list[tuple[int, str, float | None]]:
    """Spearman's rho of every scalar feature against the complexity score.

    One-hot components are reported individually; constant features get None
    rather than a fabricated value.
    """
    if len(dataset) < 3:
        raise ValueError("correlation report requires at least 3 instances")
    scores = [score for _, score in dataset]
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"complexity score {s} outside [0, 1]")
    layout = dataset[0][0].layout
    X = np.stack([fv.values for fv, _ in dataset])
    names = layout.column_names()
    out = []
    for col in range(X.shape[1]):
        out.append((col, names[col], spearman(X[:, col], scores)))
    return out


# ---------------------------------------------------------------------------
# Feature-matrix file format: headered TSV + JSON layout sidecar
# ---------------------------------------------------------------------------

def write_feature_matrix(
    path: str | Path,
    ids: Sequence[str],
    X: np.ndarray,
    layout: FeatureLayout,
) -> None:
    path = Path(path)
    X = np.asarray(X)
    if X.shape[0] != len(ids):
        raise ValueError("ids and matrix row counts differ")
    if X.shape[1] != layout.total:
        raise ValueError(f"matrix has {X.shape[1]} columns, layout expects {layout.total}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["id"] + layout.column_names())
        for i, row_id in enumerate(ids):
            writer.writerow([row_id] + [repr(float(v)) for v in X[i]])
    sidecar = path.with_suffix(path.suffix + ".layout.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(layout.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_feature_matrix(path: str | Path) -> tuple[list[str], np.ndarray, FeatureLayout]:
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".layout.json")
    with open(sidecar, encoding="utf-8") as fh:
        meta = json.load(fh)
    layout = FeatureLayout(embedding_dim=int(meta["embedding_dim"]))
    if layout.version != meta["layout_version"]:
        raise ValueError(
            f"unsupported layout version {meta['layout_version']!r} (reader supports {layout.version!r})"
        )
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader)
        if header[:1] != ["id"] or len(header) != layout.total + 1:
            raise ValueError(f"feature matrix header does not match layout {layout.version!r}")
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    X = np.array(rows) if rows else np.empty((0, layout.total))
    return ids, X, layout
