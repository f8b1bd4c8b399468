import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mwe.evaluate import (SpRow, WsRow, average_ranks, eval_sp, eval_ws, read_sp_dataset,
                          read_ws_dataset, spearman, word_vectors, write_sp_dataset)
from mwe.model import init_params
from mwe.trainer import TrainConfig, train
from mwe.vocab import RelationRegistry, Vocabulary


def brute_spearman(x, y):
    """Average ranks by counting, then textbook Pearson."""
    def ranks(v):
        return [sum(w < a for w in v) + (sum(w == a for w in v) + 1) / 2 for a in v]
    rx, ry = ranks(x), ranks(y)
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    return cov / math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))


def test_spearman_perfect_and_reversed():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0


def test_spearman_tie_example():
    rho = spearman([1, 2, 2, 3], [1, 2, 3, 4])
    assert rho == pytest.approx(3 / math.sqrt(10), abs=1e-12)
    assert rho == pytest.approx(0.9486832980505138, abs=1e-12)
    assert rho == pytest.approx(brute_spearman([1, 2, 2, 3], [1, 2, 3, 4]), abs=1e-12)


def test_average_ranks():
    assert list(average_ranks([10, 20, 20, 5])) == [2.0, 3.5, 3.5, 1.0]


def test_spearman_errors():
    with pytest.raises(ValueError, match="undefined"):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1], [1])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, float("nan")], [1, 2])


small_ints = st.lists(st.integers(-5, 5), min_size=3, max_size=25)


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_spearman_matches_brute_force_and_scipy(data):
    x = data.draw(small_ints)
    y = data.draw(st.lists(st.integers(-5, 5), min_size=len(x), max_size=len(x)))
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    rho = spearman(x, y)
    assert rho == pytest.approx(brute_spearman(x, y), abs=1e-12)
    assert rho == pytest.approx(stats.spearmanr(x, y)[0], abs=1e-12)
    assert rho == pytest.approx(spearman(y, x), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=20, unique=True),
       st.integers(0, 2**31))
def test_spearman_monotone_invariance(x, seed):
    y = np.random.default_rng(seed).normal(size=len(x))
    x = np.asarray(x, dtype=np.float64)
    base = spearman(x, y)
    assert spearman(np.exp(x / 200), y) == pytest.approx(base, abs=1e-12)
    assert spearman(x ** 3 - 7, y) == pytest.approx(base, abs=1e-12)
    assert spearman(-x, y) == pytest.approx(-base, abs=1e-12)


def perfect_model():
    """Words 0/1 share a direction, word 2 is orthogonal; locals zero."""
    rng = np.random.default_rng(0)
    p = init_params(3, 1, 4, 2, rng)
    basis = np.eye(4)
    p.center_head[:] = basis[[0, 0, 1]]
    p.center_tail[:] = basis[[0, 0, 1]] + 0.5 * basis[[2, 2, 2]]
    vocab = Vocabulary(("x", "y", "z"), (3, 2, 1))
    return p, vocab, RelationRegistry(("r",))


def test_eval_sp_perfect_model():
    p, vocab, rels = perfect_model()
    rows = [SpRow(h, "r", t, 1.0 if (h == "z") == (t == "z") else 0.0)
            for h, t in itertools.product("xyz", repeat=2)]
    res = eval_sp(p, vocab, rels, rows)
    assert res.rho["r"] == pytest.approx(1.0)
    assert res.summary == pytest.approx(1.0)
    assert res.coverage == 1.0


def test_eval_sp_coverage_and_permutation():
    p, vocab, rels = perfect_model()
    rows = [SpRow("x", "r", "y", 1.0), SpRow("x", "r", "z", 0.0), SpRow("z", "r", "x", 0.2),
            SpRow("oov", "r", "x", 0.5), SpRow("z", "r", "z", 0.9)]
    res = eval_sp(p, vocab, rels, rows)
    assert (res.scorable["r"], res.total["r"]) == (4, 5)
    assert res.coverage == pytest.approx(0.8)
    shuffled = [rows[i] for i in (3, 1, 4, 0, 2)]
    assert eval_sp(p, vocab, rels, shuffled).summary == res.summary


def test_eval_sp_errors():
    p, vocab, rels = perfect_model()
    with pytest.raises(ValueError, match="no scorable rows"):
        eval_sp(p, vocab, rels, [SpRow("q", "r", "w", 1.0)])
    with pytest.raises(KeyError, match="dobj"):
        eval_sp(p, vocab, rels, [SpRow("x", "dobj", "y", 1.0)])


def test_eval_ws_combiners():
    p, vocab, rels = perfect_model()
    p.center_tail[:] = p.center_head
    rows = [WsRow("x", "y", "noun", 1.0), WsRow("x", "z", "noun", 0.0), WsRow("y", "z", "verb", 0.1),
            WsRow("x", "z", "verb", 0.3)]
    h = eval_ws(p, vocab, rows, combiner="h")
    t = eval_ws(p, vocab, rows, combiner="t")
    assert h.summary == t.summary
    assert np.array_equal(word_vectors(p, "center", "concat"),
                          np.hstack([p.center_head, p.center_tail]))
    assert list(h.total) == ["noun", "verb"]
    with pytest.raises(ValueError):
        word_vectors(p, "center", "max")


def test_eval_ws_relational_source():
    p, vocab, rels = perfect_model()
    p.local_head[0] = 1.0
    v = word_vectors(p, "r", "h", rels)
    assert np.allclose(v, p.relational_matrix("head", 0))


def test_planted_similarity(small_planted):
    vocab, rels, corpus, _ = small_planted
    params, _ = train(corpus, TrainConfig(d=32, s=4, eta0=0.075, epochs=6, seed=0),
                      rel_names=rels.relations)
    words = list(vocab.words)
    rows = [WsRow(a, b, "noun", float(a[:2] == b[:2])) for a, b in itertools.combinations(words, 2)]
    res = eval_ws(params, vocab, rows, combiner="h+t")
    assert res.summary >= 0.7


def test_sp_readers(tmp_path):
    rows = [SpRow("a", "nsubj", "b", 0.5), SpRow("c", "dobj", "d", 1.25)]
    tsv = tmp_path / "sp.tsv"
    write_sp_dataset(rows, tsv)
    assert read_sp_dataset(tsv) == rows
    jl = tmp_path / "sp.jsonl"
    jl.write_text("\n".join(json.dumps({"head": h, "relation": r, "tail": t, "plausibility": g})
                            for h, r, t, g in rows) + "\n")
    assert read_sp_dataset(jl) == rows
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\tc\n")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        read_sp_dataset(bad)


def test_ws_readers(tmp_path):
    simlex = tmp_path / "simlex.txt"
    simlex.write_text("word1\tword2\tPOS\tSimLex999\tconc(w1)\n"
                      "old\tnew\tA\t1.58\t2.72\nsmart\tintelligent\tA\t9.2\t1.75\nhard\tdifficult\tV\t8.77\t1\n")
    rows = read_ws_dataset(simlex)
    assert rows[0] == WsRow("old", "new", "adjective", 1.58)
    assert rows[2].pos == "verb"
    generic = tmp_path / "ws.tsv"
    generic.write_text("cat\tdog\tn\t7.0\n")
    assert read_ws_dataset(generic) == [WsRow("cat", "dog", "noun", 7.0)]
    generic.write_text("cat\tdog\tq\t7.0\n")
    with pytest.raises(ValueError, match="POS"):
        read_ws_dataset(generic)
