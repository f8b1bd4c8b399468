import os

import numpy as np
import pytest

from mwe.model import compose, init_params, param_count
from mwe.persistence import (HEADER_SIZE, MAGIC, CheckpointError, CheckpointVersionError,
                             checkpoint_size, export_text, load_checkpoint, load_text, read_header,
                             save_checkpoint)
from mwe.vocab import RelationRegistry, Vocabulary


@pytest.fixture
def model():
    rng = np.random.default_rng(7)
    p = init_params(3, 2, 6, 2, rng, a=1.5, k=0.7)
    for t in p.tensors():
        t[...] = rng.normal(size=t.shape)
    vocab = Vocabulary(("cat", "dog", "naïve"), (9, 4, 1))
    return p, vocab, RelationRegistry(("nsubj", "dobj"))


def test_round_trip_bitwise(model, tmp_path):
    p, vocab, rels = model
    path = tmp_path / "m.bin"
    save_checkpoint(p, vocab, rels, path, epoch=5, seed=42)
    q, v2, r2, hdr = load_checkpoint(path, with_header=True)
    assert v2 == vocab and r2 == rels
    assert (hdr.epoch, hdr.seed, hdr.a, hdr.k) == (5, 42, 1.5, 0.7)
    for x, y in zip(p.tensors(), q.tensors()):
        assert x.tobytes() == y.tobytes()
    path2 = tmp_path / "m2.bin"
    save_checkpoint(q, v2, r2, path2, epoch=5, seed=42)
    assert path.read_bytes() == path2.read_bytes()


def test_size_formula(model, tmp_path):
    p, vocab, rels = model
    path = tmp_path / "m.bin"
    save_checkpoint(p, vocab, rels, path)
    strings = sum(16 + len(w.encode()) for w in vocab.words) + sum(8 + len(r) for r in rels.relations)
    expected = HEADER_SIZE + strings + 8 * param_count(3, 2, 6, 2)
    assert HEADER_SIZE == 76
    assert os.path.getsize(path) == expected == checkpoint_size(vocab, rels, 6, 2)
    assert read_header(path).param_count == param_count(3, 2, 6, 2)


def test_unwritable_path(model, tmp_path):
    target = tmp_path / "missing" / "m.bin"
    with pytest.raises(OSError, match="missing"):
        save_checkpoint(*model, target)


def test_mismatched_vocab_rejected(model, tmp_path):
    p, vocab, rels = model
    with pytest.raises(ValueError):
        save_checkpoint(p, Vocabulary(("a",), (1,)), rels, tmp_path / "m.bin")


def test_corruptions(model, tmp_path):
    path = tmp_path / "m.bin"
    save_checkpoint(*model, path)
    good = path.read_bytes()

    path.write_bytes(b"XXXX" + good[4:])
    with pytest.raises(CheckpointError, match="not an MWE checkpoint"):
        load_checkpoint(path)

    path.write_bytes(good[:-1])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)

    path.write_bytes(good + b"\0")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)

    path.write_bytes(good[:4] + (2).to_bytes(8, "little") + good[12:])
    with pytest.raises(CheckpointVersionError, match="version 2"):
        load_checkpoint(path)

    path.write_bytes(good[:40])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    assert good[:4] == MAGIC


def test_export_center_and_concat(model, tmp_path):
    p, vocab, rels = model
    out = tmp_path / "c.txt"
    assert export_text(p, vocab, rels, "center", "h", out) == 6
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "3 6" and len(lines) == 4
    assert all(len(line.split(" ")) == 7 for line in lines[1:])
    assert export_text(p, vocab, rels, "center", "concat", out) == 12


def test_export_relational_matches_compose(model, tmp_path):
    p, vocab, rels = model
    out = tmp_path / "r.txt"
    export_text(p, vocab, rels, "dobj", "t", out)
    tokens, mat = load_text(out)
    assert tokens == ["cat@dobj", "dog@dobj", "naïve@dobj"]
    for w in range(3):
        v = compose(p, w, "tail", 1)
        assert np.abs(mat[w] - v).max() <= 5e-7


def test_relational_export_with_zero_locals_equals_center(model, tmp_path):
    p, vocab, rels = model
    p.local_head[:] = 0
    export_text(p, vocab, rels, "center", "h", tmp_path / "c.txt")
    export_text(p, vocab, rels, "nsubj", "h", tmp_path / "r.txt")
    _, c = load_text(tmp_path / "c.txt")
    _, r = load_text(tmp_path / "r.txt")
    assert np.array_equal(c, r)
