import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from focalmed.engine import SearchEngine
from focalmed.evaluation import load_gold_set
from focalmed.kg import load_kg
from focalmed.lexicon import build_lexicon
from focalmed.parser import IntentPhraseTable
from focalmed.retrieval import build_indexes
from focalmed.tagger import load_corpus, load_manual_tags, tag_corpus

TESTDATA = Path(__file__).resolve().parent.parent / "testdata"


@pytest.fixture(scope="session")
def testdata() -> Path:
    return TESTDATA


@pytest.fixture(scope="session")
def graph():
    return load_kg(TESTDATA / "kg.jsonl")


@pytest.fixture(scope="session")
def lexicon(graph):
    return build_lexicon(graph)


@pytest.fixture(scope="session")
def intents():
    return IntentPhraseTable.default()


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(TESTDATA / "corpus.jsonl")


@pytest.fixture(scope="session")
def tagged(corpus, graph, lexicon, intents):
    return tag_corpus(corpus, graph, lexicon, intents)


@pytest.fixture(scope="session")
def indexes(tagged):
    return build_indexes(tagged)


@pytest.fixture(scope="session")
def engine(graph, indexes):
    return SearchEngine(graph, indexes)


@pytest.fixture(scope="session")
def gold():
    return load_gold_set(TESTDATA / "gold.jsonl")


@pytest.fixture(scope="session")
def manual_tags():
    return load_manual_tags(TESTDATA / "manual_tags.jsonl")
