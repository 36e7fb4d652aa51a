"""Corpus ingestion, MWE candidate mining, and frequency-banded target selection.

Input text arrives pre-tagged (token-per-line TSV); a crude fallback tagger is
provided for raw text but is explicitly approximate. Selection draws noun
targets and 2-token MWE candidates per genre, spread across eight frequency
bands, at most five instances per token per genre, all deterministic under a
fixed seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Token",
    "TaggedSentence",
    "Instance",
    "InstanceRow",
    "FrequencyBand",
    "FREQUENCY_BANDS",
    "CorpusStats",
    "ParseError",
    "parse_tagged",
    "extract_mwe_candidates",
    "assign_frequency_band",
    "Quota",
    "SelectionReport",
    "select_targets",
    "load_frequency_table",
    "write_instances_tsv",
    "read_instances_tsv",
    "FallbackTagger",
    "parse_untagged",
]

class Token(NamedTuple):
    surface: str
    pos: str
    start: int
    end: int


@dataclass(frozen=True)
class TaggedSentence:
    genre: str
    tokens: tuple[Token, ...]
    raw_text: str

    def __post_init__(self) -> None:
        if not self.genre:
            raise ValueError("genre must be non-empty")
        prev_end = -1
        for t in self.tokens:
            if not t.pos:
                raise ValueError(f"token {t.surface!r} has an empty POS tag")
            if t.start <= prev_end or t.end < t.start or t.end > len(self.raw_text):
                raise ValueError(f"token {t.surface!r} has inconsistent offsets")
            if self.raw_text[t.start : t.end] != t.surface:
                raise ValueError(f"token {t.surface!r} does not match raw_text at its offsets")
            prev_end = t.end


@dataclass(frozen=True)
class Instance:
    id: str
    sentence: TaggedSentence
    span: tuple[int, int]  # first and last token index, inclusive
    surface: str
    is_mwe: bool
    genre: str

    def __post_init__(self) -> None:
        length = self.span[1] - self.span[0] + 1
        if length not in (1, 2):
            raise ValueError(f"target span must cover 1 or 2 tokens, got {length}")
        if self.is_mwe != (length == 2):
            raise ValueError("is_mwe must hold exactly for 2-token spans")


class FrequencyBand(NamedTuple):
    index: int
    lo: int
    hi: int


# Sampling bands over the reference frequency list, least to most frequent.
FREQUENCY_BANDS: tuple[FrequencyBand, ...] = tuple(
    FrequencyBand(i, lo, hi)
    for i, (lo, hi) in enumerate(
        [(2, 4), (5, 10), (11, 50), (51, 250), (251, 500), (501, 1400), (1401, 3100), (3101, 10000)]
    )
)


@dataclass(frozen=True)
class CorpusStats:
    n_instances: int
    n_distinct_tokens: int

    @property
    def mean_contexts_per_token(self) -> float:
        if self.n_distinct_tokens == 0:
            return 0.0
        return self.n_instances / self.n_distinct_tokens


class ParseError(ValueError):
    def __init__(self, path: str, lineno: int, message: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def parse_tagged(path: str | Path, genre: str) -> list[TaggedSentence]:
    """Read token-per-line `surface<TAB>POS` text with blank-line sentence breaks.

    Character offsets are reconstructed by joining surfaces with single spaces.
    A line with the wrong column count raises ParseError with its line number.
    """
    sentences: list[TaggedSentence] = []
    pending: list[tuple[str, str]] = []

    def flush() -> None:
        if not pending:
            return
        raw = " ".join(s for s, _ in pending)
        tokens = []
        cursor = 0
        for surface, pos in pending:
            tokens.append(Token(surface, pos, cursor, cursor + len(surface)))
            cursor += len(surface) + 1
        sentences.append(TaggedSentence(genre=genre, tokens=tuple(tokens), raw_text=raw))
        pending.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(str(path), lineno, f"expected 2 tab-separated columns, got {len(cols)}")
            surface, pos = cols[0].strip(), cols[1].strip()
            if not surface or not pos:
                raise ParseError(str(path), lineno, "empty surface or POS column")
            pending.append((surface, pos))
    flush()
    return sentences


def _is_noun(pos: str) -> bool:
    return pos.startswith("N")


def _is_adjective(pos: str) -> bool:
    return pos.startswith("J")


def extract_mwe_candidates(sentence: TaggedSentence) -> list[tuple[int, int]]:
    """All 2-token noun-noun or adjective-noun windows not followed by a noun.

    The follower restriction avoids splitting longer noun compounds; a noun
    before the window does not disqualify it, so overlapping candidates can
    both be returned.
    """
    spans = []
    tokens = sentence.tokens
    for i in range(len(tokens) - 1):
        first, second = tokens[i].pos, tokens[i + 1].pos
        if not ((_is_noun(first) or _is_adjective(first)) and _is_noun(second)):
            continue
        if i + 2 < len(tokens) and _is_noun(tokens[i + 2].pos):
            continue
        spans.append((i, i + 1))
    return spans


def assign_frequency_band(freq: int) -> FrequencyBand | None:
    """Band containing the count; None for hapax/unlisted (<2) or >10000 words."""
    if freq < 0:
        raise ValueError("frequency must be non-negative")
    for band in FREQUENCY_BANDS:
        if band.lo <= freq <= band.hi:
            return band
    return None


@dataclass(frozen=True)
class Quota:
    """Per-genre target counts; the same quota applies to every genre present."""

    singles: int
    mwes: int


@dataclass
class SelectionReport:
    allocations: list[dict] = field(default_factory=list)
    shortfalls: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def load_frequency_table(path: str | Path) -> dict[str, int]:
    """Two-column TSV word<TAB>count; keys are case-folded; header row optional."""
    table: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(str(path), lineno, f"expected 2 columns, got {len(cols)}")
            word, raw_count = cols[0].strip(), cols[1].strip()
            try:
                count = int(raw_count)
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ParseError(str(path), lineno, f"count {raw_count!r} is not an integer") from None
            table[word.casefold()] = count
    return table


def _candidate_frequency(surface_key: str, is_mwe: bool, freq_table: Mapping[str, int]) -> int:
    if not is_mwe:
        return freq_table.get(surface_key, 0)
    # The bigram is banded by its rarer constituent.
    parts = surface_key.split(" ")
    return min(freq_table.get(p, 0) for p in parts)


def select_targets(
    sentences: Sequence[TaggedSentence],
    freq_table: Mapping[str, int],
    quota: Quota,
    seed: int,
) -> tuple[list[Instance], CorpusStats, SelectionReport]:
    """Sample single-noun and MWE targets per genre across the frequency bands.

    Per genre and target kind, candidates are grouped by frequency band and
    the quota is allocated proportionally to per-band capacity (each token
    contributes at most 5 distinct contexts), remainder to the largest bands.
    Bands that cannot fill their allocation are recorded as shortfalls, never
    silently substituted. Fixed (inputs, seed) give identical output.
    """
    report = SelectionReport()
    genres = sorted({s.genre for s in sentences})
    by_genre: dict[str, list[tuple[int, TaggedSentence]]] = {g: [] for g in genres}
    for idx, s in enumerate(sentences):
        by_genre[s.genre].append((idx, s))

    instances: list[Instance] = []
    all_tokens: set[str] = set()

    for genre_pos, genre in enumerate(genres):
        for kind_pos, (kind, kind_quota) in enumerate([("single", quota.singles), ("mwe", quota.mwes)]):
            if kind_quota <= 0:
                continue
            # Canonical candidate order: (sentence index, token index).
            candidates: list[tuple[int, TaggedSentence, tuple[int, int], str]] = []
            for idx, s in by_genre[genre]:
                if kind == "single":
                    for i, t in enumerate(s.tokens):
                        if _is_noun(t.pos):
                            candidates.append((idx, s, (i, i), t.surface))
                else:
                    for span in extract_mwe_candidates(s):
                        surface = f"{s.tokens[span[0]].surface} {s.tokens[span[1]].surface}"
                        candidates.append((idx, s, span, surface))

            banded: dict[int, list[tuple[int, TaggedSentence, tuple[int, int], str]]] = {}
            for cand in candidates:
                key = cand[3].casefold()
                band = assign_frequency_band(_candidate_frequency(key, kind == "mwe", freq_table))
                if band is not None:
                    banded.setdefault(band.index, []).append(cand)

            # Capacity: per token, at most 5 distinct sentence contexts.
            capacity: dict[int, int] = {}
            for b, cands in banded.items():
                contexts: dict[str, set[str]] = {}
                for _, s, _, surface in cands:
                    contexts.setdefault(surface.casefold(), set()).add(s.raw_text)
                capacity[b] = sum(min(5, len(ctx)) for ctx in contexts.values())

            total_capacity = sum(capacity.values())
            if total_capacity < kind_quota:
                report.warnings.append(
                    f"{genre}/{kind}: capacity {total_capacity} below quota {kind_quota}"
                )

            alloc = {b: 0 for b in banded}
            if total_capacity > 0:
                for b in banded:
                    alloc[b] = min(capacity[b], (kind_quota * capacity[b]) // total_capacity)
                remaining = kind_quota - sum(alloc.values())
                # Remainder goes to the largest bands first.
                order = sorted(banded, key=lambda b: (-capacity[b], b))
                while remaining > 0:
                    progressed = False
                    for b in order:
                        if remaining == 0:
                            break
                        if alloc[b] < capacity[b]:
                            alloc[b] += 1
                            remaining -= 1
                            progressed = True
                    if not progressed:
                        break

            rng = np.random.default_rng([seed, genre_pos, kind_pos])
            seq = 0
            total_taken = 0
            for b in sorted(banded):
                want = alloc[b]
                if want == 0:
                    continue
                pool = banded[b]
                order = rng.permutation(len(pool))
                token_counts: dict[str, int] = {}
                used_contexts: set[tuple[str, str]] = set()
                taken = 0
                for j in order.tolist():
                    if taken >= want:
                        break
                    sent_idx, s, span, surface = pool[j]
                    key = surface.casefold()
                    if token_counts.get(key, 0) >= 5:
                        continue
                    if (key, s.raw_text) in used_contexts:
                        continue
                    token_counts[key] = token_counts.get(key, 0) + 1
                    used_contexts.add((key, s.raw_text))
                    instances.append(
                        Instance(
                            id=f"{genre}-{kind}-{seq:05d}",
                            sentence=s,
                            span=span,
                            surface=surface,
                            is_mwe=(kind == "mwe"),
                            genre=genre,
                        )
                    )
                    all_tokens.add(key)
                    seq += 1
                    taken += 1
                total_taken += taken
                report.allocations.append(
                    {"genre": genre, "kind": kind, "band": b, "allocated": want, "selected": taken}
                )
                if taken < want:
                    report.shortfalls.append(
                        {"genre": genre, "kind": kind, "band": b, "requested": want, "selected": taken}
                    )
            if total_taken < kind_quota:
                # The quota itself was not met (band-level capacity shortfall).
                report.shortfalls.append(
                    {"genre": genre, "kind": kind, "band": None, "requested": kind_quota, "selected": total_taken}
                )

    stats = CorpusStats(n_instances=len(instances), n_distinct_tokens=len(all_tokens))
    # Token diversity is a guideline, not a gate: flag datasets whose tokens
    # repeat heavily (distinct-token count not well above contexts-per-token).
    if stats.n_distinct_tokens and stats.n_distinct_tokens < 10 * stats.mean_contexts_per_token:
        report.warnings.append(
            f"low token diversity: {stats.n_distinct_tokens} distinct tokens vs "
            f"{stats.mean_contexts_per_token:.2f} mean contexts per token"
        )
    return instances, stats, report


# ---------------------------------------------------------------------------
# Instances TSV (the corpus module's output interface)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InstanceRow:
    """One selected target as serialized to the instances TSV."""

    id: str
    genre: str
    sentence: str
    start_token: int  # inclusive
    end_token: int  # inclusive
    surface: str
    is_mwe: bool

    @property
    def char_span(self) -> tuple[int, int]:
        """Character offsets of the target within the sentence text.

        Sentences are single-space joined, so offsets are recoverable from
        token positions alone.
        """
        words = self.sentence.split(" ")
        start = sum(len(w) + 1 for w in words[: self.start_token])
        end = start + len(" ".join(words[self.start_token : self.end_token + 1]))
        return start, end


_INSTANCE_COLUMNS = ["id", "genre", "sentence", "start_token", "end_token", "surface", "is_mwe"]


def write_instances_tsv(path: str | Path, instances: Iterable[Instance]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(_INSTANCE_COLUMNS)
        for inst in instances:
            writer.writerow(
                [
                    inst.id,
                    inst.genre,
                    inst.sentence.raw_text,
                    inst.span[0],
                    inst.span[1],
                    inst.surface,
                    int(inst.is_mwe),
                ]
            )
            n += 1
    return n


def read_instances_tsv(path: str | Path) -> list[InstanceRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = set(_INSTANCE_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ParseError(str(path), 1, f"missing columns: {sorted(missing)}")
        for row in reader:
            rows.append(
                InstanceRow(
                    id=row["id"],
                    genre=row["genre"],
                    sentence=row["sentence"],
                    start_token=int(row["start_token"]),
                    end_token=int(row["end_token"]),
                    surface=row["surface"],
                    is_mwe=row["is_mwe"] in ("1", "true", "True"),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Fallback tagging for untagged text (approximate by design)
# ---------------------------------------------------------------------------

class FallbackTagger:
    """Most-frequent-tag lexicon with suffix heuristics.

    A stopgap for untagged input only: accuracy is far below a trained
    tagger, and selection quality degrades accordingly. Downstream code
    treats its output like any other tags.
    """

    _LEXICON = {
        "the": "DT", "a": "DT", "an": "DT", "this": "DT", "that": "DT", "these": "DT",
        "those": "DT", "some": "DT", "any": "DT", "each": "DT", "every": "DT",
        "of": "IN", "in": "IN", "on": "IN", "at": "IN", "by": "IN", "for": "IN",
        "with": "IN", "from": "IN", "to": "TO", "into": "IN", "under": "IN", "over": "IN",
        "and": "CC", "or": "CC", "but": "CC", "nor": "CC",
        "i": "PRP", "you": "PRP", "he": "PRP", "she": "PRP", "it": "PRP", "we": "PRP",
        "they": "PRP", "them": "PRP", "him": "PRP", "her": "PRP$", "his": "PRP$",
        "their": "PRP$", "our": "PRP$", "your": "PRP$", "my": "PRP$", "its": "PRP$",
        "is": "VBZ", "are": "VBP", "was": "VBD", "were": "VBD", "be": "VB", "been": "VBN",
        "have": "VBP", "has": "VBZ", "had": "VBD", "do": "VBP", "does": "VBZ", "did": "VBD",
        "will": "MD", "would": "MD", "can": "MD", "could": "MD", "shall": "MD",
        "should": "MD", "may": "MD", "might": "MD", "must": "MD",
        "not": "RB", "very": "RB", "also": "RB", "there": "EX",
    }

    _SUFFIX_RULES = [
        ("ly", "RB"),
        ("ing", "VBG"),
        ("ed", "VBD"),
        ("ous", "JJ"),
        ("ful", "JJ"),
        ("ive", "JJ"),
        ("ble", "JJ"),
        ("ial", "JJ"),
        ("ical", "JJ"),
        ("less", "JJ"),
        ("ish", "JJ"),
        ("tion", "NN"),
        ("sion", "NN"),
        ("ment", "NN"),
        ("ness", "NN"),
        ("ity", "NN"),
        ("ism", "NN"),
        ("ance", "NN"),
        ("ence", "NN"),
    ]

    def tag(self, surfaces: Sequence[str]) -> list[str]:
        tags = []
        for w in surfaces:
            lower = w.casefold()
            if lower in self._LEXICON:
                tags.append(self._LEXICON[lower])
            elif not any(c.isalpha() for c in w):
                tags.append(".")
            elif w[0].isupper():
                tags.append("NNP")
            else:
                for suffix, tag in self._SUFFIX_RULES:
                    if lower.endswith(suffix) and len(lower) > len(suffix) + 2:
                        tags.append(tag)
                        break
                else:
                    tags.append("NNS" if lower.endswith("s") and not lower.endswith("ss") else "NN")
        return tags


def parse_untagged(path: str | Path, genre: str, tagger: FallbackTagger | None = None) -> list[TaggedSentence]:
    """One sentence per line, whitespace-tokenized, tagged by the fallback tagger."""
    tagger = tagger or FallbackTagger()
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            surfaces = line.split()
            if not surfaces:
                continue
            tags = tagger.tag(surfaces)
            raw = " ".join(surfaces)
            tokens = []
            cursor = 0
            for surface, pos in zip(surfaces, tags):
                tokens.append(Token(surface, pos, cursor, cursor + len(surface)))
                cursor += len(surface) + 1
            sentences.append(TaggedSentence(genre=genre, tokens=tuple(tokens), raw_text=raw))
    return sentences
