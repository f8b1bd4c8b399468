import pytest

from mwe.corpus import encode_corpus
from mwe.oracle import SynthSpec, synth_corpus
from mwe.vocab import build_vocab

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Collect one pass/fail line per acceptance criterion for the terminal summary."""
    def _record(name, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def planted(seed=0, **kw):
    """Planted corpus encoded and ready for training: (vocab, rels, corpus, gold rows)."""
    tuples, gold = synth_corpus(SynthSpec(seed=seed, **kw))
    vocab, rels = build_vocab(tuples, min_count=1)
    return vocab, rels, encode_corpus(tuples, vocab, rels), gold


@pytest.fixture(scope="session")
def planted_corpus():
    return planted(0)


@pytest.fixture(scope="session")
def small_planted():
    return planted(0, n_words=10, tuples_per_relation=1500, pairs_per_cell=5)
