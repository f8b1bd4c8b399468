"""Negative-sampling SGD for multiplex embeddings with alternating center/local phases."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from . import kernels
from .corpus import NegativeSampler, TupleCorpus
from .model import ModelParams, init_params, score

logger = logging.getLogger(__name__)

LambdaMode = Union[str, float]


@dataclass
class TrainConfig:
    d: int = 300
    s: int = 10
    a: float = 1.0
    k: float = 0.8
    eta0: float = 0.025
    epochs: int = 5
    lambda_mode: LambdaMode = "alternating"
    seed: int = 0
    workers: int = 1
    neg_exponent: float = 0.75
    neg_uniform: bool = False
    project_u_only: bool = False
    count_cap: Optional[int] = None
    settle: bool = True

    def __post_init__(self):
        if not 0 < self.k <= 1:
            raise ValueError("k must lie in (0, 1]")
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be a positive integer")
        if self.workers < 1:
            raise ValueError("workers must be a positive integer")
        if self.s < 1 or self.d < 1 or self.s > self.d:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={self.d}")
        if self.count_cap is not None and self.count_cap < 1:
            raise ValueError("count_cap must be a positive integer")
        self.lambda_mode = parse_lambda_mode(self.lambda_mode)


def parse_lambda_mode(mode) -> LambdaMode:
    """Accept ``"alternating"``/``"alt"``, ``"fixed:x"`` or a number in [0, 1]."""
    if isinstance(mode, str):
        text = mode.strip().lower()
        if text in ("alt", "alternating"):
            return "alternating"
        if text.startswith("fixed:"):
            text = text[len("fixed:"):]
        try:
            mode = float(text)
        except ValueError:
            raise ValueError(f"lambda mode must be 'alt' or 'fixed:x', got {mode!r}") from None
    mode = float(mode)
    if not 0.0 <= mode <= 1.0:
        raise ValueError(f"fixed lambda must lie in [0, 1], got {mode}")
    return mode


class TrainingSample(NamedTuple):
    """A positive tuple with its corrupted-head and corrupted-tail negatives."""

    positive: tuple
    neg_head: tuple
    neg_tail: tuple

    @property
    def tuples(self):
        return (self.positive, self.neg_head, self.neg_tail)

    @property
    def targets(self):
        return (1.0, 0.0, 0.0)


def _log_sigmoid(x: float) -> float:
    return math.log(max(kernels.sigmoid(x), kernels.LOG_FLOOR))


def tuple_loss(params: ModelParams, sample: TrainingSample, r: Optional[int] = None) -> float:
    """Logistic loss of one positive against its two negatives."""
    if r is None:
        r = sample.positive[1]
    loss = 0.0
    for (h, _, t), target in zip(sample.tuples, sample.targets):
        f = score(params, h, r, t)
        loss -= _log_sigmoid(f if target else -f)
    return loss


def _new_stats():
    return np.array([0, 0, -1], dtype=np.int64)


def sgd_step(params: ModelParams, sample: TrainingSample, r: Optional[int], lam: float, eta: float,
             u_only: bool = False, stats: Optional[np.ndarray] = None) -> float:
    """Apply the three per-tuple updates of one sample in place and return the loss."""
    if r is None:
        r = sample.positive[1]
    if stats is None:
        stats = _new_stats()
    total = 0.0
    for (h, _, t), target in zip(sample.tuples, sample.targets):
        loss = kernels.tuple_update(*params.tensors(), int(h), int(r), int(t), target, float(lam),
                                    float(eta), params.a, params.k, u_only, stats)
        if math.isnan(loss):
            raise FloatingPointError(f"non-finite gradient at tuple (head={h}, rel={r}, tail={t})")
        total += loss
    return total


def analytic_gradients(params: ModelParams, sample: TrainingSample, r: Optional[int] = None):
    """Gradient of ``tuple_loss`` for every tensor, read off the update kernel.

    Each tuple's update is run from the same starting point with unit step
    size and the projection disabled, once with only the centers active and
    once with only the local parameters active; the parameter change is the
    negated gradient.
    """
    if r is None:
        r = sample.positive[1]
    grads = [np.zeros_like(t) for t in params.tensors()]
    stats = _new_stats()
    for (h, _, t), target in zip(sample.tuples, sample.targets):
        for lam in (1.0, 0.0):
            work = [x.copy() for x in params.tensors()]
            kernels.tuple_update(*work, int(h), int(r), int(t), target, lam, 1.0,
                                 math.inf, params.k, False, stats)
            for g, before, after in zip(grads, params.tensors(), work):
                g += before - after
    return grads


def lambda_at(epoch_index: int, total_epochs: int, mode: LambdaMode = "alternating") -> float:
    """Weight on the center update for a 1-based epoch index."""
    if not 1 <= epoch_index <= total_epochs:
        raise ValueError(f"epoch index {epoch_index} outside [1, {total_epochs}]")
    mode = parse_lambda_mode(mode)
    if mode == "alternating":
        return 1.0 if epoch_index <= math.ceil(total_epochs / 2) else 0.0
    return float(mode)


def lr_at(progress: float, eta0: float) -> float:
    """Linearly decayed learning rate with a floor at ``1e-4 * eta0``."""
    if not 0.0 <= progress <= 1.0:
        raise ValueError("progress must lie in [0, 1]")
    return eta0 * max(kernels.LR_FLOOR, 1.0 - progress)


@dataclass
class EpochStats:
    epoch: int
    lam: float
    eta_start: float
    eta_end: float
    mean_loss: float
    positives: int
    clamps: int
    projections: int
    settled: int
    seconds: float

    @property
    def tuples_per_sec(self) -> float:
        return self.positives / self.seconds if self.seconds > 0 else float("inf")


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)

    @property
    def mean_losses(self) -> list:
        return [e.mean_loss for e in self.epochs]

    @property
    def clamps(self) -> int:
        return sum(e.clamps for e in self.epochs)

    @property
    def projections(self) -> int:
        return sum(e.projections + e.settled for e in self.epochs)

    def to_dict(self) -> dict:
        rows = []
        for e in self.epochs:
            row = asdict(e)
            row["tuples_per_sec"] = e.tuples_per_sec
            rows.append(row)
        return {"epochs": rows, "clamps": self.clamps, "projections": self.projections}


def _phases(schedule):
    """Map each epoch to (epochs of its lambda phase before it, phase length)."""
    out = []
    start = 0
    for i, lam in enumerate(schedule):
        if i and lam != schedule[i - 1]:
            start = i
        out.append(start)
    lengths = []
    for i, st in enumerate(out):
        end = st
        while end < len(schedule) and schedule[end] == schedule[st]:
            end += 1
        lengths.append(end - st)
    return [(i - st, n) for i, (st, n) in enumerate(zip(out, lengths))]


def _run_workers(params, arrays, lam, cfg, done0, total, workers):
    """Lock-free parallel epoch: worker ``w`` takes positions ``w, w + W, ...``."""
    heads, rels, tails, nh, nt = arrays
    stats = [_new_stats() for _ in range(workers)]

    def job(w):
        return kernels.run_epoch(*params.tensors(), heads[w::workers], rels[w::workers],
                                 tails[w::workers], nh[w::workers], nt[w::workers], lam, cfg.eta0,
                                 params.a, params.k, cfg.project_u_only, done0 + w, workers, total,
                                 stats[w])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        losses = list(pool.map(job, range(workers)))
    merged = _new_stats()
    for w, st in enumerate(stats):
        merged[:2] += st[:2]
        if st[2] >= 0 and merged[2] < 0:
            merged[2] = w + st[2] * workers
    return sum(losses), merged


def train(corpus: TupleCorpus, config: TrainConfig, rng: Optional[np.random.Generator] = None,
          on_epoch: Optional[Callable] = None, rel_names=None):
    """Train multiplex embeddings on an encoded corpus.

    Records are visited ``count`` times per epoch (capped by
    ``config.count_cap``) in a fresh shuffle; every visit draws one
    corrupted head and one corrupted tail. ``on_epoch(stats, params)`` is
    called after each epoch.

    Returns
    -------
    (ModelParams, TrainReport)
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    sampler = NegativeSampler(corpus, exponent=config.neg_exponent, uniform=config.neg_uniform,
                              rel_names=rel_names)
    sampler.check_corruptible()
    params = init_params(corpus.n_words, corpus.n_relations, config.d, config.s, rng,
                         a=config.a, k=config.k)

    visits = corpus.counts if config.count_cap is None else np.minimum(corpus.counts, config.count_cap)
    base = np.repeat(np.arange(len(corpus), dtype=np.int64), visits)
    per_epoch = len(base)
    schedule = [lambda_at(i, config.epochs, config.lambda_mode) for i in range(1, config.epochs + 1)]
    phases = _phases(schedule)
    report = TrainReport()
    if config.workers == 1:
        kernels.warmup()

    for epoch, (lam, (before, length)) in enumerate(zip(schedule, phases), start=1):
        t0 = time.perf_counter()
        order = base[rng.permutation(per_epoch)]
        heads = corpus.heads[order]
        rels = corpus.rels[order]
        tails = corpus.tails[order]
        neg_heads, neg_tails = sampler.sample_batch(heads, rels, tails, rng)
        done0 = before * per_epoch
        total = length * per_epoch
        if config.workers == 1:
            stats = _new_stats()
            loss = kernels.run_epoch(*params.tensors(), heads, rels, tails, neg_heads, neg_tails,
                                     lam, config.eta0, params.a, params.k, config.project_u_only,
                                     done0, 1, total, stats)
        else:
            loss, stats = _run_workers(params, (heads, rels, tails, neg_heads, neg_tails), lam,
                                       config, done0, total, config.workers)
        if stats[2] >= 0:
            i = int(stats[2])
            raise FloatingPointError(
                f"non-finite gradient in epoch {epoch} at tuple "
                f"(head={heads[i]}, rel={rels[i]}, tail={tails[i]}); "
                f"try a smaller --eta0")
        settled = 0
        if config.settle:
            for role in ("head", "tail"):
                settled += kernels.settle_drift(params.local(role), params.xform(role), params.a,
                                                params.k, config.project_u_only)
        es = EpochStats(
            epoch=epoch, lam=lam,
            eta_start=lr_at(done0 / total, config.eta0),
            eta_end=lr_at(min(1.0, (done0 + per_epoch - 1) / total), config.eta0),
            mean_loss=loss / per_epoch, positives=per_epoch,
            clamps=int(stats[0]), projections=int(stats[1]), settled=settled,
            seconds=time.perf_counter() - t0)
        report.epochs.append(es)
        logger.info("epoch %d/%d lambda=%.2f eta=%.5f->%.5f loss=%.5f %.0f tuples/s",
                    epoch, config.epochs, lam, es.eta_start, es.eta_end, es.mean_loss,
                    es.tuples_per_sec)
        if on_epoch is not None:
            on_epoch(es, params)
    return params, report
