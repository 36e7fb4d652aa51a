import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexcomp.resources import (
    INFOBOX_CATEGORIES,
    NORM_RANGE,
    PRESENCE_FIELDS,
    STATUS_CATEGORIES,
    STRESS_CODES,
    WTYPE_CATEGORIES,
    LexiconValidationError,
    fetch_infobox_table,
    load_embeddings,
    load_lexicon,
)


def test_category_inventories_have_declared_sizes():
    assert len(WTYPE_CATEGORIES) == 9
    assert len(STATUS_CATEGORIES) == 7
    assert len(STRESS_CODES) == 14
    assert len(INFOBOX_CATEGORIES) == 13
    assert "NONE" in INFOBOX_CATEGORIES
    assert set(STRESS_CODES) == {
        "0", "01020", "010200", "02", "020", "0200", "10020",
        "102", "1020", "10200", "20", "200", "2000", "22",
    }


def test_direct_field_mapping(lexicon):
    record, presence = lexicon.lookup("cat")
    assert record.familiarity == 617
    assert presence["E"] is True
    assert record.infobox == "BIOTA"
    assert record.frequent is True
    assert record.archaic_listed is False


def test_unknown_word_is_all_absent(lexicon):
    record, presence = lexicon.lookup("zzgrumble")
    assert record.familiarity is None
    assert record.wtype == frozenset()
    assert not any(presence.values())
    assert record.frequent is False


def test_partial_record_presence_flags(lexicon):
    record, presence = lexicon.lookup("cubit")
    assert presence["E"] is True  # familiarity listed
    assert presence["K"] is False  # meanc absent
    assert record.meanc is None
    assert record.archaic_listed is True


def test_infobox_only_word(lexicon):
    record, presence = lexicon.lookup("Gharial")
    assert record.infobox == "BIOTA"
    assert presence["E"] is False


def test_merge_across_files(lexicon):
    # `cat` appears in both the psycholinguistic file and the infobox file.
    record, _ = lexicon.lookup("cat")
    assert record.familiarity == 617 and record.infobox == "BIOTA"


def test_out_of_range_value_rejected(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("word\tfamiliarity\nplume\t750\n", encoding="utf-8")
    with pytest.raises(LexiconValidationError, match="plume") as err:
        load_lexicon([bad])
    assert "bad.tsv" in str(err.value)


def test_unknown_category_rejected(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("word\tstress\nplume\t99\n", encoding="utf-8")
    with pytest.raises(LexiconValidationError):
        load_lexicon([bad])


def test_missing_word_column_rejected(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("term\tfamiliarity\nplume\t300\n", encoding="utf-8")
    with pytest.raises(LexiconValidationError, match="word"):
        load_lexicon([bad])


def test_loading_is_idempotent(resource_files):
    paths = [resource_files["psych"], resource_files["infobox"]]
    a = load_lexicon(paths, resource_files["frequent"], resource_files["archaic"])
    b = load_lexicon(paths, resource_files["frequent"], resource_files["archaic"])
    assert a.records == b.records
    assert a.coverage == b.coverage
    assert a.frequent_words == b.frequent_words


def test_coverage_counts(lexicon):
    assert lexicon.coverage["familiarity"] == 8  # every psych row but Gharial
    assert lexicon.coverage["infobox"] == 4


def test_case_folded_lookup_with_exact_priority(tmp_path):
    tsv = tmp_path / "case.tsv"
    tsv.write_text(
        "word\tfamiliarity\npolish\t300\nPolish\t400\n", encoding="utf-8"
    )
    lex = load_lexicon([tsv])
    assert lex.lookup("Polish")[0].familiarity == 400  # exact wins
    assert lex.lookup("polish")[0].familiarity == 300
    assert lex.lookup("POLISH")[0].familiarity == 300  # folded prefers lowercase form


def test_frequent_list_limit(tmp_path):
    path = tmp_path / "freq.txt"
    path.write_text("\n".join(f"w{i}" for i in range(20)) + "\n", encoding="utf-8")
    lex = load_lexicon([], frequent_path=path, frequent_limit=10)
    assert lex.lookup("w5")[0].frequent is True
    assert lex.lookup("w15")[0].frequent is False


def test_presence_never_fabricates(lexicon):
    # presence flag true iff the underlying field holds a value
    for word in ("cat", "cubit", "Gharial", "unknownword"):
        record, presence = lexicon.lookup(word)
        for group, field_name in PRESENCE_FIELDS.items():
            value = getattr(record, field_name)
            has_value = bool(value) if isinstance(value, frozenset) else value is not None
            assert presence[group] == has_value


_norm_values = st.integers(min_value=NORM_RANGE[0], max_value=NORM_RANGE[1])


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.sampled_from(["alpha", "beta", "gamma", "delta"]), _norm_values, min_size=1))
def test_bounded_fields_respect_ranges_over_whole_store(tmp_path_factory, mapping):
    tmp = tmp_path_factory.mktemp("hyp")
    tsv = tmp / "gen.tsv"
    lines = ["word\tfamiliarity"] + [f"{w}\t{v}" for w, v in mapping.items()]
    tsv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    lex = load_lexicon([tsv])
    for record in lex.records.values():
        assert record.familiarity is None or NORM_RANGE[0] <= record.familiarity <= NORM_RANGE[1]


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------

def test_embedding_dimensions_inferred_and_enforced(tmp_path):
    good = tmp_path / "emb.txt"
    good.write_text("cat 1 2 3\ndog 4 5 6\n", encoding="utf-8")
    table = load_embeddings(good)
    assert table.dimension == 3
    assert len(table) == 2
    assert table.lookup("cat").tolist() == [1.0, 2.0, 3.0]


def test_embedding_dimension_mismatch_names_line(tmp_path):
    bad = tmp_path / "emb.txt"
    bad.write_text("cat 1 2 3\ndog 4 5\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":2"):
        load_embeddings(bad)


def test_embedding_oov_is_absent(tmp_path):
    table_path = tmp_path / "emb.txt"
    table_path.write_text("cat 1 2\n", encoding="utf-8")
    table = load_embeddings(table_path)
    assert table.lookup("zebra") is None
    assert "zebra" not in table


def test_embedding_case_priority(tmp_path):
    table_path = tmp_path / "emb.txt"
    table_path.write_text("Apple 1 1\napple 2 2\n", encoding="utf-8")
    table = load_embeddings(table_path)
    assert table.lookup("Apple").tolist() == [1.0, 1.0]
    assert table.lookup("apple").tolist() == [2.0, 2.0]
    assert table.lookup("APPLE").tolist() == [1.0, 1.0]  # folded falls back to first seen


def test_embedding_empty_file_rejected(tmp_path):
    empty = tmp_path / "emb.txt"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="empty"):
        load_embeddings(empty)


# ---------------------------------------------------------------------------
# Infobox fetch tool (offline, via injected fetcher)
# ---------------------------------------------------------------------------

def test_fetch_infobox_table_with_fake_fetcher(tmp_path):
    pages = {
        "Gharial": '{"parse": {"text": {"*": "<table class=\\"infobox biota\\">"}}}',
        "Paris": '{"parse": {"text": {"*": "<table class=\\"infobox geography vcard\\">"}}}',
        "blandness": '{"parse": {"text": {"*": "<p>plain page</p>"}}}',
    }

    def fake_fetch(url):
        for word, body in pages.items():
            if f"page={word}" in url:
                return body
        raise OSError("no such page")

    out = tmp_path / "infobox.tsv"
    n = fetch_infobox_table(["Gharial", "Paris", "blandness", "missing"], out, fetch=fake_fetch)
    assert n == 3
    content = out.read_text(encoding="utf-8").splitlines()
    assert content[0] == "word\tinfobox"
    table = dict(line.split("\t") for line in content[1:])
    assert table["Gharial"] == "BIOTA"
    assert table["Paris"] == "GEOGRAPHY_VCARD"
    assert table["blandness"] == "NONE"
    assert "missing" not in table
