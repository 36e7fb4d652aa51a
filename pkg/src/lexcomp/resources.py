"""Loading and indexing of the lexical resources behind the feature groups.

Resource files are headered TSVs merged by their `word` column, plus two
plain word lists (frequent words, archaic words) and a text-format embedding
table. Absence is first-class: a field missing from every source stays
absent (never zero), and lookups report per-group presence flags so that
downstream features can encode missingness explicitly.
"""

from __future__ import annotations

import csv
import json
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "PLURALITY_CODES",
    "WTYPE_CATEGORIES",
    "STATUS_CATEGORIES",
    "STRESS_CODES",
    "INFOBOX_CATEGORIES",
    "NORM_RANGE",
    "PRESENCE_FIELDS",
    "LexicalRecord",
    "LexiconValidationError",
    "Lexicon",
    "load_lexicon",
    "EmbeddingTable",
    "load_embeddings",
    "fetch_infobox_table",
]

# The five singular/plural regularity codes.
PLURALITY_CODES: tuple[str, ...] = (
    "plural",
    "no_plural",
    "singular",
    "singular_and_plural",
    "plural_acts_singular",
)

# The nine broad syntactic categories a dictionary may list for a word.
WTYPE_CATEGORIES: tuple[str, ...] = (
    "adverb",
    "conjunction",
    "interjection",
    "adjective",
    "noun",
    "past_participle",
    "pronoun",
    "verb",
    "other",
)

# The seven usage statuses.
STATUS_CATEGORIES: tuple[str, ...] = (
    "archaic",
    "alien",
    "obsolete",
    "colloquial",
    "rare",
    "standard",
    "dialect",
)

# The fourteen pronunciation stress patterns (2 strong, 1 medium, 0 unstressed).
STRESS_CODES: tuple[str, ...] = (
    "0",
    "01020",
    "010200",
    "02",
    "020",
    "0200",
    "10020",
    "102",
    "1020",
    "10200",
    "20",
    "200",
    "2000",
    "22",
)

# The thirteen encyclopedia infobox categories, NONE meaning "page without one".
INFOBOX_CATEGORIES: tuple[str, ...] = (
    "AMBIGUOUS",
    "BIOGRAPHY_VCARD",
    "BIOTA",
    "BORDERED",
    "COLLAPSIBLE_AUTOCOLLAPSE",
    "DEFAULT",
    "GEOGRAPHY_VCARD",
    "HPRODUCT",
    "NONE",
    "VCARD",
    "VCARD_PLAINLIST",
    "VEVENT",
    "VEVENT_HAUDIO",
)

# Bounded psycholinguistic norms all live on this scale.
NORM_RANGE: tuple[int, int] = (100, 700)

# Field groups that carry presence indicators, keyed by group letter.
PRESENCE_FIELDS: dict[str, str] = {
    "E": "familiarity",
    "F": "concreteness",
    "G": "imageability",
    "H": "brown_freq",
    "I": "kf_freq",
    "J": "tl_freq",
    "K": "meanc",
    "L": "meanp",
    "M": "aoa",
    "N": "tq2q",
    "O": "tq22",
    "P": "wtype",
    "Q": "status",
    "R": "stress",
}

_NORM_FIELDS = ("familiarity", "concreteness", "imageability", "meanc", "meanp", "aoa")
_COUNT_FIELDS = ("brown_freq", "kf_freq", "tl_freq")
_BOOL_FIELDS = ("tq2q", "tq22")
_SET_FIELDS = {"wtype": WTYPE_CATEGORIES, "status": STATUS_CATEGORIES}
_CODE_FIELDS = {"stress": STRESS_CODES, "infobox": INFOBOX_CATEGORIES, "plurality": PLURALITY_CODES}


@dataclass(frozen=True)
class LexicalRecord:
    word: str
    frequent: bool = False
    archaic_listed: bool = False
    plurality: str | None = None
    familiarity: int | None = None
    concreteness: int | None = None
    imageability: int | None = None
    brown_freq: int | None = None
    kf_freq: int | None = None
    tl_freq: int | None = None
    meanc: int | None = None
    meanp: int | None = None
    aoa: int | None = None
    tq2q: bool | None = None
    tq22: bool | None = None
    wtype: frozenset[str] = frozenset()
    status: frozenset[str] = frozenset()
    stress: str | None = None
    infobox: str | None = None


class LexiconValidationError(ValueError):
    def __init__(self, word: str, source: str, message: str):
        self.word = word
        self.source = source
        super().__init__(f"{source}: word {word!r}: {message}")


def _parse_field(name: str, raw: str, word: str, source: str):
    raw = raw.strip()
    if raw == "":
        return None
    if name in _NORM_FIELDS:
        try:
            value = int(raw)
        except ValueError:
            raise LexiconValidationError(word, source, f"{name}={raw!r} is not an integer")
        lo, hi = NORM_RANGE
        if not lo <= value <= hi:
            raise LexiconValidationError(word, source, f"{name}={value} outside range {lo}-{hi}")
        return value
    if name in _COUNT_FIELDS:
        try:
            value = int(raw)
        except ValueError:
            raise LexiconValidationError(word, source, f"{name}={raw!r} is not an integer")
        if value < 0:
            raise LexiconValidationError(word, source, f"{name}={value} is negative")
        return value
    if name in _BOOL_FIELDS:
        if raw not in ("0", "1"):
            raise LexiconValidationError(word, source, f"{name}={raw!r} must be 0 or 1")
        return raw == "1"
    if name in _SET_FIELDS:
        allowed = _SET_FIELDS[name]
        values = frozenset(v.strip() for v in raw.split(",") if v.strip())
        bad = values - set(allowed)
        if bad:
            raise LexiconValidationError(word, source, f"{name} has unknown categories {sorted(bad)}")
        return values
    if name in _CODE_FIELDS:
        if raw not in _CODE_FIELDS[name]:
            raise LexiconValidationError(word, source, f"{name}={raw!r} is not a known code")
        return raw
    raise LexiconValidationError(word, source, f"unknown column {name!r}")


@dataclass
class Lexicon:
    """Immutable-after-load store of merged lexical records."""

    records: dict[str, LexicalRecord]
    frequent_words: frozenset[str]
    archaic_words: frozenset[str]
    coverage: dict[str, int]
    sources: tuple[str, ...]
    _folded: dict[str, str] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._folded:
            # Prefer the all-lowercase form, then the lexicographically first,
            # when several exact-case entries share a folded key.
            for key in sorted(self.records, key=lambda w: (w != w.casefold(), w)):
                self._folded.setdefault(key.casefold(), key)

    def _resolve(self, word: str) -> LexicalRecord | None:
        if word in self.records:
            return self.records[word]
        folded_key = self._folded.get(word.casefold())
        if folded_key is not None:
            return self.records[folded_key]
        return None

    def lookup(self, word: str) -> tuple[LexicalRecord, dict[str, bool]]:
        """Merged record plus one presence flag per indicator field group.

        Unknown words yield an all-absent record with every flag False; no
        value is ever fabricated.
        """
        record = self._resolve(word)
        if record is None:
            record = LexicalRecord(word=word)
        record = replace(
            record,
            frequent=word.casefold() in self.frequent_words,
            archaic_listed=word.casefold() in self.archaic_words,
        )
        presence: dict[str, bool] = {}
        for group, field_name in PRESENCE_FIELDS.items():
            value = getattr(record, field_name)
            if field_name in _SET_FIELDS:
                presence[group] = bool(value)
            else:
                presence[group] = value is not None
        return record, presence

    def __len__(self) -> int:
        return len(self.records)


def _read_word_list(path: str | Path, limit: int | None = None) -> frozenset[str]:
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip()
            if w:
                words.append(w.casefold())
            if limit is not None and len(words) >= limit:
                break
    return frozenset(words)


def load_lexicon(
    tsv_paths: Iterable[str | Path],
    frequent_path: str | Path | None = None,
    archaic_path: str | Path | None = None,
    frequent_limit: int = 10_000,
) -> Lexicon:
    """Merge headered resource TSVs by word; attach the two word lists.

    Every TSV must have a `word` column; all other columns must be known
    field names (see the schema section of the README). When the same field
    appears for the same word in several files, the later file wins. The
    coverage report counts, per field, how many words carry a value.
    """
    merged: dict[str, dict] = {}
    sources = []
    for path in tsv_paths:
        path = Path(path)
        sources.append(str(path))
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter="\t")
            if reader.fieldnames is None or "word" not in reader.fieldnames:
                raise LexiconValidationError("<header>", str(path), "missing required `word` column")
            for row in reader:
                word = (row.get("word") or "").strip()
                if not word:
                    continue
                fields = merged.setdefault(word, {})
                for col, raw in row.items():
                    if col == "word" or raw is None:
                        continue
                    value = _parse_field(col, raw, word, str(path))
                    if value is not None:
                        fields[col] = value

    records = {w: LexicalRecord(word=w, **fields) for w, fields in merged.items()}

    coverage: dict[str, int] = {}
    for f in list(_NORM_FIELDS) + list(_COUNT_FIELDS) + list(_BOOL_FIELDS) + ["plurality", "stress", "infobox"]:
        coverage[f] = sum(1 for r in records.values() if getattr(r, f) is not None)
    for f in _SET_FIELDS:
        coverage[f] = sum(1 for r in records.values() if getattr(r, f))

    return Lexicon(
        records=records,
        frequent_words=_read_word_list(frequent_path, frequent_limit) if frequent_path else frozenset(),
        archaic_words=_read_word_list(archaic_path) if archaic_path else frozenset(),
        coverage=coverage,
        sources=tuple(sources),
    )


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingTable:
    dimension: int
    _exact: dict[str, np.ndarray]
    _folded: dict[str, str]

    def lookup(self, word: str) -> np.ndarray | None:
        """Vector for the word, exact case first, case-folded fallback; None if OOV."""
        vec = self._exact.get(word)
        if vec is not None:
            return vec
        key = self._folded.get(word.casefold())
        return self._exact[key] if key is not None else None

    def __len__(self) -> int:
        return len(self._exact)

    def __contains__(self, word: str) -> bool:
        return self.lookup(word) is not None


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a plain-text word-vector table (word then N floats per line).

    The dimension is inferred from the first entry and enforced thereafter;
    a mismatching line raises with its 1-based line number. The first entry
    wins for duplicated words.
    """
    exact: dict[str, np.ndarray] = {}
    folded: dict[str, str] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, raw_values = parts[0], parts[1:]
            if dimension is None:
                if not raw_values:
                    raise ValueError(f"{path}:{lineno}: entry has no vector components")
                dimension = len(raw_values)
            elif len(raw_values) != dimension:
                raise ValueError(
                    f"{path}:{lineno}: expected {dimension} components, got {len(raw_values)}"
                )
            if word in exact:
                continue
            try:
                vec = np.array([float(v) for v in raw_values])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric vector component") from None
            exact[word] = vec
            folded.setdefault(word.casefold(), word)
    if dimension is None:
        raise ValueError(f"{path}: empty embedding file")
    return EmbeddingTable(dimension=dimension, _exact=exact, _folded=folded)


# ---------------------------------------------------------------------------
# Optional infobox table builder (requires network; not used by any test)
# ---------------------------------------------------------------------------

def fetch_infobox_table(
    words: Sequence[str],
    out_path: str | Path,
    api_url: str = "https://en.wikipedia.org/w/api.php",
    fetch: Callable[[str], str] | None = None,
) -> int:
    """Build a word->infobox TSV by asking a wiki API for each word's page.

    Best-effort convenience for assembling the offline infobox table; the
    pipeline itself only ever reads the TSV. Returns the number of rows
    written. `fetch` may be injected (it receives a URL and returns the
    response body) to avoid real network access.
    """
    if fetch is None:
        def fetch(url: str) -> str:
            with urllib.request.urlopen(url, timeout=30) as resp:
                return resp.read().decode("utf-8", errors="replace")

    known = {c.casefold().replace("_", " "): c for c in INFOBOX_CATEGORIES}
    rows: list[tuple[str, str]] = []
    for word in words:
        query = urllib.parse.urlencode(
            {"action": "parse", "page": word, "prop": "text", "format": "json", "redirects": 1}
        )
        try:
            body = json.loads(fetch(f"{api_url}?{query}"))
        except Exception:
            continue  # unreachable page: leave the word out of the table
        html = body.get("parse", {}).get("text", {}).get("*", "")
        if not html:
            continue
        category = "NONE"
        lowered = html.lower()
        if "infobox" in lowered:
            category = "DEFAULT"
            for marker, cat in known.items():
                if cat in ("NONE", "DEFAULT"):
                    continue
                if marker in lowered:
                    category = cat
                    break
        rows.append((word, category))

    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("word\tinfobox\n")
        for word, category in rows:
            fh.write(f"{word}\t{category}\n")
    return len(rows)
