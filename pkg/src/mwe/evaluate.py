"""Selectional-preference and word-similarity evaluation by Spearman correlation."""
from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams
from .vocab import RelationRegistry, Vocabulary


class SpRow(NamedTuple):
    head: str
    relation: str
    tail: str
    gold: float


class WsRow(NamedTuple):
    word1: str
    word2: str
    pos: str
    gold: float


POS_NAMES = {"n": "noun", "v": "verb", "a": "adjective", "adj": "adjective",
             "noun": "noun", "verb": "verb", "adjective": "adjective"}
COMBINERS = ("h", "t", "h+t", "concat")


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they span."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(len(x))
    # boundaries of runs of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], len(x)]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + e - 1) + 1.0
    return ranks


def spearman(xs, ys) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman needs two 1-D sequences of equal length")
    if len(xs) < 2:
        raise ValueError("spearman needs at least two observations")
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("spearman inputs must be finite")
    rx = average_ranks(xs) - (len(xs) + 1) / 2.0
    ry = average_ranks(ys) - (len(ys) + 1) / 2.0
    sxx, syy = rx @ rx, ry @ ry
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("undefined correlation: constant input")
    return float(np.clip(rx @ ry / math.sqrt(sxx * syy), -1.0, 1.0))


# --------------------------------------------------------------------------
# dataset readers
# --------------------------------------------------------------------------

def _rows(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if line.strip() and not line.startswith("#"):
                yield lineno, line


def read_sp_dataset(path, fmt: str = "auto") -> list[SpRow]:
    """Read an SP dataset: generic TSV ``head rel tail score`` or JSON lines.

    JSON objects need ``head``, ``relation`` and ``tail`` keys plus one of
    ``score``, ``plausibility`` or ``gold``.
    """
    out = []
    for lineno, line in _rows(path):
        kind = fmt if fmt != "auto" else ("jsonl" if line.lstrip().startswith("{") else "tsv")
        if kind == "jsonl":
            obj = json.loads(line)
            gold = next((obj[k] for k in ("score", "plausibility", "gold") if k in obj), None)
            if gold is None:
                raise ValueError(f"{path}:{lineno}: no score field")
            out.append(SpRow(obj["head"], obj["relation"], obj["tail"], float(gold)))
        else:
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected head<TAB>relation<TAB>tail<TAB>score")
            out.append(SpRow(parts[0], parts[1], parts[2], float(parts[3])))
    for row in out:
        if not math.isfinite(row.gold):
            raise ValueError(f"{path}: non-finite gold score for {row}")
    return out


def write_sp_dataset(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t, g in rows:
            fh.write(f"{h}\t{r}\t{t}\t{g!r}\n")


def read_ws_dataset(path) -> list[WsRow]:
    """Read SimLex-999 (header ``word1 word2 POS SimLex999 ...``) or generic ``w1 w2 pos score`` TSV."""
    out = []
    simlex = False
    for lineno, line in _rows(path):
        parts = line.split("\t")
        if lineno == 1 and parts[:3] == ["word1", "word2", "POS"]:
            simlex = True
            continue
        if len(parts) < 4 or (not simlex and len(parts) != 4):
            raise ValueError(f"{path}:{lineno}: expected word1<TAB>word2<TAB>pos<TAB>score")
        pos = POS_NAMES.get(parts[2].strip().lower())
        if pos is None:
            raise ValueError(f"{path}:{lineno}: unknown POS tag {parts[2]!r}")
        out.append(WsRow(parts[0], parts[1], pos, float(parts[3])))
    return out


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass
class EvalResult:
    """Per-group correlations plus coverage bookkeeping."""

    rho: "OrderedDict[str, float]"
    scorable: "OrderedDict[str, int]"
    total: "OrderedDict[str, int]"
    summary_name: str
    summary: float

    @property
    def coverage(self) -> float:
        total = sum(self.total.values())
        return sum(self.scorable.values()) / total if total else 0.0

    def to_dict(self) -> dict:
        return {"rho": dict(self.rho), "scorable": dict(self.scorable), "total": dict(self.total),
                self.summary_name: self.summary, "coverage": self.coverage}

    def to_tsv(self) -> str:
        lines = ["group\trho\tscorable\ttotal"]
        for key in self.total:
            rho = self.rho.get(key, float("nan"))
            lines.append(f"{key}\t{rho:.4f}\t{self.scorable[key]}\t{self.total[key]}")
        lines.append(f"{self.summary_name}\t{self.summary:.4f}\t"
                     f"{sum(self.scorable.values())}\t{sum(self.total.values())}")
        return "\n".join(lines)


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    if (norms == 0).any():
        raise ValueError("zero-norm embedding encountered; word looks untrained")
    return mat / norms


def eval_sp(params: ModelParams, vocab: Vocabulary, rels: RelationRegistry, rows) -> EvalResult:
    """Spearman between cosine plausibility and gold, per relation, averaged unweighted."""
    groups: "OrderedDict[str, list]" = OrderedDict()
    for row in rows:
        groups.setdefault(row[1], []).append(row)
    for name in groups:
        if name not in rels:
            raise KeyError(f"relation {name!r} is not part of the model")
    rho, scorable, total = OrderedDict(), OrderedDict(), OrderedDict()
    for name in sorted(groups):
        r = rels.rel_to_id(name)
        pred, gold = [], []
        heads = _unit_rows(params.relational_matrix("head", r))
        tails = _unit_rows(params.relational_matrix("tail", r))
        for h, _, t, g in groups[name]:
            hid, tid = vocab.get(h), vocab.get(t)
            if hid is None or tid is None:
                continue
            pred.append(float(heads[hid] @ tails[tid]))
            gold.append(g)
        total[name] = len(groups[name])
        scorable[name] = len(pred)
        if len(pred) >= 2:
            rho[name] = spearman(pred, gold)
    if not sum(scorable.values()):
        raise ValueError("no scorable rows")
    avg = float(np.mean(list(rho.values()))) if rho else float("nan")
    return EvalResult(rho, scorable, total, "average", avg)


def word_vectors(params: ModelParams, source, combiner: str, rels: RelationRegistry | None = None) -> np.ndarray:
    """Word matrix for one embedding source (``"center"`` or a relation) and combiner."""
    if combiner not in COMBINERS:
        raise ValueError(f"combiner must be one of {COMBINERS}, got {combiner!r}")
    if source == "center":
        h, t = params.center_head, params.center_tail
    else:
        r = source if isinstance(source, (int, np.integer)) else rels.rel_to_id(source)
        h, t = params.relational_matrix("head", r), params.relational_matrix("tail", r)
    if combiner == "h":
        return h
    if combiner == "t":
        return t
    if combiner == "h+t":
        return h + t
    return np.concatenate([h, t], axis=1)


def eval_ws(params: ModelParams, vocab: Vocabulary, rows, source="center", combiner: str = "h",
            rels: RelationRegistry | None = None) -> EvalResult:
    """Spearman between cosine similarity and gold, per POS and overall."""
    vecs = _unit_rows(word_vectors(params, source, combiner, rels))
    by_pos: "OrderedDict[str, tuple[list, list]]" = OrderedDict()
    total: "OrderedDict[str, int]" = OrderedDict()
    all_pred, all_gold = [], []
    for w1, w2, pos, g in rows:
        total[pos] = total.get(pos, 0) + 1
        preds, golds = by_pos.setdefault(pos, ([], []))
        i, j = vocab.get(w1), vocab.get(w2)
        if i is None or j is None:
            continue
        sim = float(vecs[i] @ vecs[j])
        preds.append(sim)
        golds.append(g)
        all_pred.append(sim)
        all_gold.append(g)
    if not all_pred:
        raise ValueError("no scorable rows")
    rho, scorable = OrderedDict(), OrderedDict()
    for pos in sorted(by_pos):
        preds, golds = by_pos[pos]
        scorable[pos] = len(preds)
        if len(preds) >= 2 and len(set(golds)) > 1 and len(set(preds)) > 1:
            rho[pos] = spearman(preds, golds)
    total = OrderedDict((p, total[p]) for p in sorted(total))
    return EvalResult(rho, scorable, total, "overall", spearman(all_pred, all_gold))
