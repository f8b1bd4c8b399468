"""Word vocabulary and relation registry built from relation tuples."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

VOCAB_HEADER = "#MWE-VOCAB v1"
RELS_HEADER = "#MWE-RELS v1"
DEFAULT_MIN_COUNT = 5


@dataclass(frozen=True)
class Vocabulary:
    """Word <-> id bijection, ordered by descending frequency."""

    words: tuple[str, ...]
    freqs: tuple[int, ...]
    ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.words) != len(self.freqs):
            raise ValueError("words and freqs must have the same length")
        ids = {w: i for i, w in enumerate(self.words)}
        if len(ids) != len(self.words):
            raise ValueError("duplicate word in vocabulary")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.words)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.ids

    def word_to_id(self, word: str) -> int:
        return self.ids[word]

    def id_to_word(self, idx: int) -> str:
        if not 0 <= idx < len(self.words):
            raise IndexError(f"word id {idx} out of range [0, {len(self.words)})")
        return self.words[idx]

    def get(self, word: str, default=None):
        return self.ids.get(word, default)

    def freq(self, word: str) -> int:
        return self.freqs[self.ids[word]]


@dataclass(frozen=True)
class RelationRegistry:
    """Relation name <-> id bijection. Closed once built."""

    relations: tuple[str, ...]
    ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = {r: i for i, r in enumerate(self.relations)}
        if len(ids) != len(self.relations):
            raise ValueError("duplicate relation in registry")
        object.__setattr__(self, "ids", ids)

    @property
    def m(self) -> int:
        return len(self.relations)

    def __len__(self):
        return len(self.relations)

    def __contains__(self, name):
        return name in self.ids

    def rel_to_id(self, name: str) -> int:
        try:
            return self.ids[name]
        except KeyError:
            raise KeyError(f"unknown relation {name!r}; known: {', '.join(self.relations)}") from None

    def id_to_rel(self, idx: int) -> str:
        if not 0 <= idx < len(self.relations):
            raise IndexError(f"relation id {idx} out of range [0, {len(self.relations)})")
        return self.relations[idx]


def _valid_record(rec) -> bool:
    if not isinstance(rec, Sequence) or len(rec) != 4:
        return False
    head, rel, tail, count = rec
    if not all(isinstance(x, str) and x for x in (head, rel, tail)):
        return False
    return isinstance(count, int) and not isinstance(count, bool) and count >= 1


def build_vocab(tuples: Iterable, min_count: int = DEFAULT_MIN_COUNT):
    """Count head and tail occurrences (weighted by tuple count) into one vocabulary.

    Words seen at least ``min_count`` times are kept, sorted by descending
    frequency with lexicographic tie-breaking. Every relation name is kept,
    in first-seen order. Malformed records are skipped and logged.

    Returns
    -------
    (Vocabulary, RelationRegistry)
    """
    if min_count < 0:
        raise ValueError("min_count must be non-negative")
    counts: Counter = Counter()
    relations: dict[str, None] = {}
    bad = 0
    for rec in tuples:
        if not _valid_record(rec):
            bad += 1
            continue
        head, rel, tail, count = rec
        counts[head] += count
        counts[tail] += count
        relations.setdefault(rel, None)
    if bad:
        logger.warning("build_vocab: skipped %d malformed record(s)", bad)
    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    vocab = Vocabulary(tuple(kept), tuple(counts[w] for w in kept))
    return vocab, RelationRegistry(tuple(relations))


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{VOCAB_HEADER} n={vocab.n}\n")
        for w, c in zip(vocab.words, vocab.freqs):
            fh.write(f"{w}\t{c}\n")


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    n = _check_header(lines, VOCAB_HEADER, "n", path)
    words, freqs = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>freq'")
        words.append(parts[0])
        freqs.append(int(parts[1]))
    if len(words) != n:
        raise ValueError(f"{path}: header says n={n} but file has {len(words)} entries")
    return Vocabulary(tuple(words), tuple(freqs))


def save_relations(rels: RelationRegistry, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{RELS_HEADER} m={rels.m}\n")
        for r in rels.relations:
            fh.write(f"{r}\n")


def load_relations(path) -> RelationRegistry:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    m = _check_header(lines, RELS_HEADER, "m", path)
    names = [line.split("\t")[0] for line in lines[1:]]
    if len(names) != m:
        raise ValueError(f"{path}: header says m={m} but file has {len(names)} entries")
    return RelationRegistry(tuple(names))


def _check_header(lines, header, key, path) -> int:
    if not lines or not lines[0].startswith(header + " "):
        raise ValueError(f"{path}: missing '{header}' header")
    tail = lines[0][len(header) + 1:]
    if not tail.startswith(key + "="):
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    return int(tail[len(key) + 1:])
