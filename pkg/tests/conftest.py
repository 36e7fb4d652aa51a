import random

import pytest

import synthdata
from lexcomp.resources import load_lexicon, load_embeddings


@pytest.fixture(scope="session")
def vocab_freq():
    return synthdata.build_vocab()


@pytest.fixture(scope="session")
def resource_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("resources")
    return synthdata.write_resource_files(out)


@pytest.fixture(scope="session")
def lexicon(resource_files):
    return load_lexicon(
        [resource_files["psych"], resource_files["infobox"]],
        frequent_path=resource_files["frequent"],
        archaic_path=resource_files["archaic"],
    )


@pytest.fixture(scope="session")
def embeddings(resource_files):
    return load_embeddings(resource_files["embeddings"])


@pytest.fixture(scope="session")
def tagged_corpus(tmp_path_factory, vocab_freq):
    out = tmp_path_factory.mktemp("corpus")
    paths = synthdata.generate_tagged_corpus(out, vocab_freq, sentences_per_genre=400, seed=29)
    freq_path = synthdata.write_frequency_table(out / "frequency.tsv", vocab_freq)
    return {"genres": paths, "frequency": freq_path}


@pytest.fixture()
def rng():
    return random.Random(99)
