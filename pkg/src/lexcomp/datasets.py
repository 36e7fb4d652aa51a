"""Loaders for externally released complexity datasets.

None of these corpora ship with the package (licensing and size); the
loaders read them from a user-supplied directory. `find_data_dir` resolves
the conventional locations so tests and experiment drivers can degrade
gracefully when a corpus is not installed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "ScoredInstance",
    "find_data_dir",
    "load_scored_tsv",
    "load_complex_dataset",
    "load_cwi_dataset",
]

# Environment variable pointing at the root data directory; subdirectories
# `complex/`, `cwi2016/`, `cwi2018/` hold the respective corpora.
DATA_ENV_VAR = "LEXCOMP_DATA"


@dataclass(frozen=True)
class ScoredInstance:
    """One context-target pair with an aggregated complexity score."""

    id: str
    genre: str
    sentence: str
    token: str
    complexity: float
    stdev: float | None = None  # spread of the underlying judgments, if released

    @property
    def is_mwe(self) -> bool:
        return " " in self.token.strip()


def find_data_dir(corpus: str) -> Path | None:
    """Locate an installed corpus directory, or None.

    Checks $LEXCOMP_DATA/<corpus>, then ./data/<corpus> relative to the
    working directory.
    """
    candidates = []
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        candidates.append(Path(env) / corpus)
    candidates.append(Path("data") / corpus)
    for c in candidates:
        if c.is_dir():
            return c.resolve()
    return None


_COLUMN_ALIASES = {
    "id": ("id",),
    "genre": ("corpus", "genre", "subcorpus"),
    "sentence": ("sentence", "context"),
    "token": ("token", "word", "target"),
    "complexity": ("complexity", "mean", "score"),
}

_STDEV_ALIASES = ("stdev", "std", "sd", "std_dev")


def load_scored_tsv(path: str | Path) -> list[ScoredInstance]:
    """Read one headered TSV of scored instances, tolerating column aliases."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        fields = reader.fieldnames or []
        resolved = {}
        for canonical, aliases in _COLUMN_ALIASES.items():
            for alias in aliases:
                if alias in fields:
                    resolved[canonical] = alias
                    break
        missing = set(_COLUMN_ALIASES) - set(resolved)
        if missing:
            raise ValueError(f"{path}: missing columns for {sorted(missing)} (have {fields})")
        stdev_col = next((a for a in _STDEV_ALIASES if a in fields), None)
        for i, row in enumerate(reader):
            raw_complexity = (row[resolved["complexity"]] or "").strip()
            if not raw_complexity:
                continue
            token = (row[resolved["token"]] or "").strip()
            if not token:
                continue
            raw_stdev = (row.get(stdev_col) or "").strip() if stdev_col else ""
            out.append(
                ScoredInstance(
                    id=(row[resolved["id"]] or f"{Path(path).stem}-{i}").strip(),
                    genre=(row[resolved["genre"]] or "").strip().lower(),
                    sentence=(row[resolved["sentence"]] or "").strip(),
                    token=token,
                    complexity=float(raw_complexity),
                    stdev=float(raw_stdev) if raw_stdev else None,
                )
            )
    return out


def load_complex_dataset(data_dir: str | Path | None = None) -> list[ScoredInstance]:
    """Load every scored-instance TSV under the complexity-corpus directory.

    Accepts the released layout (separate single/MWE train/trial/test files)
    or any set of *.tsv files with the expected columns. Instances seen in
    several files (e.g. re-released splits) are deduplicated by id.
    """
    if data_dir is None:
        data_dir = find_data_dir("complex")
    if data_dir is None:
        raise FileNotFoundError(
            f"complexity corpus not found; set ${DATA_ENV_VAR} or create data/complex/"
        )
    data_dir = Path(data_dir)
    files = sorted(p for p in data_dir.rglob("*.tsv") if p.is_file())
    if not files:
        raise FileNotFoundError(f"no .tsv files under {data_dir}")
    by_id: dict[str, ScoredInstance] = {}
    for path in files:
        for inst in load_scored_tsv(path):
            by_id.setdefault(inst.id, inst)
    return list(by_id.values())


def load_cwi_dataset(data_dir: str | Path) -> list[ScoredInstance]:
    """Load a CWI-style release: headerless 11-column TSVs.

    Columns: id, sentence, start, end, target, native-annotator count,
    non-native count, native marks, non-native marks, binary label,
    probabilistic label. The probabilistic label (fraction of annotators
    marking the word complex) becomes the complexity score; the file stem
    is recorded as the genre.
    """
    data_dir = Path(data_dir)
    files = sorted(p for p in data_dir.rglob("*.tsv") if p.is_file())
    if not files:
        raise FileNotFoundError(f"no .tsv files under {data_dir}")
    out: list[ScoredInstance] = []
    for path in files:
        with open(path, encoding="utf-8", newline="") as fh:
            for i, line in enumerate(fh):
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 11:
                    raise ValueError(f"{path}:{i + 1}: expected 11 columns, got {len(cols)}")
                out.append(
                    ScoredInstance(
                        id=cols[0] or f"{path.stem}-{i}",
                        genre=path.stem.lower(),
                        sentence=cols[1],
                        token=cols[4],
                        complexity=float(cols[10]),
                    )
                )
    return out
