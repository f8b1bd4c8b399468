"""Dependency tuple ingestion: CoNLL-U parsing, tuple extraction, encoding and negative sampling."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .vocab import RelationRegistry, Vocabulary

logger = logging.getLogger(__name__)

TUPLES_HEADER = "#MWE-TUPLES v1"
DEFAULT_RELATIONS = ("nsubj", "dobj", "amod")
HEAD, TAIL = 0, 1
MAX_RESAMPLE = 100


class ConllError(ValueError):
    """Malformed CoNLL-U input."""


class RawTuple(NamedTuple):
    head: str
    relation: str
    tail: str
    count: int = 1


class Token(NamedTuple):
    form: str
    head: int
    deprel: str


# --------------------------------------------------------------------------
# CoNLL-U
# --------------------------------------------------------------------------

def parse_conllu(text: str) -> list[list[Token]]:
    """Parse a CoNLL-U document into sentences of ``(form, head, deprel)``.

    Multiword-token ranges (``3-4``) and empty nodes (``5.1``) are skipped.
    A head of 0 marks the root.
    """
    sentences: list[list[Token]] = []
    current: list[Token] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(f"line {lineno}: expected 10 tab-separated columns, got {len(cols)}")
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        try:
            head = int(cols[6])
        except ValueError:
            raise ConllError(f"line {lineno}: HEAD column is not an integer: {cols[6]!r}") from None
        current.append(Token(cols[1], head, cols[7]))
    if current:
        sentences.append(current)
    return sentences


def read_conllu(path) -> list[list[Token]]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh.read())


def extract_tuples(sentences: Iterable[list[Token]], relation_set=DEFAULT_RELATIONS,
                   lowercase: bool = False) -> Iterator[RawTuple]:
    """Yield ``(governor, deprel, dependent, 1)`` for every edge whose deprel is selected.

    With the usual Stanford/UD attachment, verbs govern their nsubj/dobj
    dependents and nouns govern their amod dependents, so the governor is
    always the predicate (head) slot.
    """
    relation_set = frozenset(relation_set)
    for sent in sentences:
        for tok in sent:
            if tok.head <= 0 or tok.deprel not in relation_set:
                continue
            if tok.head > len(sent):
                raise ConllError(f"head index {tok.head} outside sentence of length {len(sent)}")
            gov = sent[tok.head - 1].form
            dep = tok.form
            if lowercase:
                gov, dep = gov.lower(), dep.lower()
            yield RawTuple(gov, tok.deprel, dep, 1)


# --------------------------------------------------------------------------
# tuple files
# --------------------------------------------------------------------------

def merge_tuples(tuples: Iterable) -> list[RawTuple]:
    """Sum counts of identical (head, relation, tail) triples, keeping first-seen order."""
    acc: dict[tuple[str, str, str], int] = {}
    for h, r, t, c in tuples:
        key = (h, r, t)
        acc[key] = acc.get(key, 0) + c
    return [RawTuple(h, r, t, c) for (h, r, t), c in acc.items()]


def write_tuples(tuples: Iterable, path) -> int:
    merged = merge_tuples(tuples)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TUPLES_HEADER + "\n")
        for h, r, t, c in merged:
            fh.write(f"{h}\t{r}\t{t}\t{c}\n")
    return len(merged)


def read_tuples(path) -> list[RawTuple]:
    """Read a tuple file. Malformed lines are skipped and reported through logging."""
    out = []
    bad = 0
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != TUPLES_HEADER:
            raise ValueError(f"{path}: missing '{TUPLES_HEADER}' header")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4 or not all(parts[:3]):
                bad += 1
                continue
            try:
                count = int(parts[3])
            except ValueError:
                bad += 1
                continue
            if count < 1:
                bad += 1
                continue
            out.append(RawTuple(parts[0], parts[1], parts[2], count))
    if bad:
        logger.warning("%s: skipped %d malformed line(s)", path, bad)
    return out


# --------------------------------------------------------------------------
# encoded corpus
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TupleCorpus:
    """Encoded tuple records sorted by relation.

    ``heads``, ``rels``, ``tails`` and ``counts`` are parallel int64 arrays;
    records of relation ``r`` occupy ``offsets[r]:offsets[r + 1]``.
    ``head_marginal[r, w]`` / ``tail_marginal[r, w]`` hold count-weighted
    slot frequencies.
    """

    heads: np.ndarray
    rels: np.ndarray
    tails: np.ndarray
    counts: np.ndarray
    offsets: np.ndarray
    head_marginal: np.ndarray
    tail_marginal: np.ndarray
    n_words: int
    n_relations: int
    dropped: int = 0

    def __len__(self):
        return len(self.heads)

    def relation_range(self, r: int) -> slice:
        return slice(int(self.offsets[r]), int(self.offsets[r + 1]))

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())


def encode_corpus(raw: Iterable, vocab: Vocabulary, rels: RelationRegistry) -> TupleCorpus:
    """Map raw tuples to ids, dropping OOV tuples and merging duplicates.

    Raises ``KeyError`` for relation names missing from ``rels``.
    """
    acc: dict[tuple[int, int, int], int] = {}
    dropped = 0
    for h, r, t, c in raw:
        rid = rels.rel_to_id(r)
        hid = vocab.get(h)
        tid = vocab.get(t)
        if hid is None or tid is None:
            dropped += 1
            continue
        key = (rid, hid, tid)
        acc[key] = acc.get(key, 0) + c
    if dropped:
        logger.info("encode_corpus: dropped %d tuple(s) with out-of-vocabulary words", dropped)
    n, m = vocab.n, rels.m
    keys = sorted(acc)
    arr = np.array(keys, dtype=np.int64).reshape(-1, 3)
    counts = np.array([acc[k] for k in keys], dtype=np.int64)
    rel_ids, heads, tails = arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(rel_ids, minlength=m), out=offsets[1:])
    head_marginal = np.zeros((m, n), dtype=np.int64)
    tail_marginal = np.zeros((m, n), dtype=np.int64)
    np.add.at(head_marginal, (rel_ids, heads), counts)
    np.add.at(tail_marginal, (rel_ids, tails), counts)
    return TupleCorpus(heads, rel_ids, tails, counts, offsets, head_marginal, tail_marginal,
                       n, m, dropped)


# --------------------------------------------------------------------------
# negative sampling
# --------------------------------------------------------------------------

class NegativeSampler:
    """Per-(relation, slot) corruption distributions over observed words.

    Probabilities are proportional to ``marginal ** exponent`` (or uniform
    over the support when ``uniform`` is set). The support of each
    distribution is exactly the set of words observed in that slot.
    """

    def __init__(self, corpus: TupleCorpus, exponent: float = 0.75, uniform: bool = False,
                 rel_names: tuple[str, ...] | None = None):
        self.exponent = exponent
        self.uniform = uniform
        self.rel_names = rel_names
        self.n_relations = corpus.n_relations
        self._support: list[list[np.ndarray]] = []
        self._cdf: list[list[np.ndarray]] = []
        self._probs: list[list[np.ndarray]] = []
        for r in range(corpus.n_relations):
            sup_r, cdf_r, prob_r = [], [], []
            for marginal in (corpus.head_marginal[r], corpus.tail_marginal[r]):
                support = np.flatnonzero(marginal)
                if uniform:
                    weights = np.ones(len(support))
                else:
                    weights = marginal[support].astype(np.float64) ** exponent
                probs = weights / weights.sum() if len(support) else weights
                cdf = np.cumsum(probs)
                if len(cdf):
                    cdf[-1] = 1.0
                sup_r.append(support)
                cdf_r.append(cdf)
                prob_r.append(probs)
            self._support.append(sup_r)
            self._cdf.append(cdf_r)
            self._probs.append(prob_r)

    def _rel_name(self, r: int) -> str:
        if self.rel_names is not None:
            return self.rel_names[r]
        return f"relation id {r}"

    def distribution(self, r: int, slot: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(support word ids, probabilities)`` for one relation slot."""
        return self._support[r][slot], self._probs[r][slot]

    def check_corruptible(self) -> None:
        for r in range(self.n_relations):
            for slot, name in ((HEAD, "head"), (TAIL, "tail")):
                if len(self._support[r][slot]) < 2:
                    raise ValueError(
                        f"cannot corrupt {name} slot of {self._rel_name(r)}: "
                        f"support has {len(self._support[r][slot])} word(s), need >= 2")

    def corrupt(self, r: int, slot: int, originals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one replacement per original word, never equal to it."""
        support = self._support[r][slot]
        if len(support) < 2:
            name = "head" if slot == HEAD else "tail"
            raise ValueError(f"cannot corrupt {name} slot of {self._rel_name(r)}: "
                             f"support has {len(support)} word(s), need >= 2")
        cdf = self._cdf[r][slot]
        originals = np.asarray(originals, dtype=np.int64)
        out = np.empty(len(originals), dtype=np.int64)
        todo = np.arange(len(originals))
        for _ in range(MAX_RESAMPLE):
            idx = np.searchsorted(cdf, rng.random(len(todo)), side="right")
            out[todo] = support[np.minimum(idx, len(support) - 1)]
            todo = todo[out[todo] == originals[todo]]
            if not len(todo):
                return out
        raise RuntimeError(f"could not draw a distinct negative for {self._rel_name(r)} "
                           f"after {MAX_RESAMPLE} attempts")

    def sample_batch(self, heads, rels, tails, rng: np.random.Generator):
        """Corrupted heads and tails for a batch of tuples, drawn relation by relation."""
        heads = np.asarray(heads, dtype=np.int64)
        tails = np.asarray(tails, dtype=np.int64)
        rels = np.asarray(rels, dtype=np.int64)
        neg_heads = np.empty_like(heads)
        neg_tails = np.empty_like(tails)
        for r in range(self.n_relations):
            sel = np.flatnonzero(rels == r)
            if not len(sel):
                continue
            neg_heads[sel] = self.corrupt(r, HEAD, heads[sel], rng)
            neg_tails[sel] = self.corrupt(r, TAIL, tails[sel], rng)
        return neg_heads, neg_tails


def sample_negatives(t, sampler: NegativeSampler, rng: np.random.Generator):
    """Return ``(corrupted-head tuple, corrupted-tail tuple)`` for one positive tuple."""
    h, r, w = (int(x) for x in t)
    h_neg = int(sampler.corrupt(r, HEAD, np.array([h]), rng)[0])
    t_neg = int(sampler.corrupt(r, TAIL, np.array([w]), rng)[0])
    return (h_neg, r, w), (h, r, t_neg)
