"""Multiplex embedding parameters and read-side operations.

A word ``w`` in role ``h`` (head) or ``t`` (tail) under relation ``r`` is
represented by

    v = c[w] + X[r].T @ u[r, w]

where ``c`` is the shared d-dimensional center embedding, ``u`` a small
s-dimensional local embedding and ``X[r]`` an ``s x d`` matrix lifting the
local embedding into the center space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

HEAD_ROLES = ("h", "head", 0)
TAIL_ROLES = ("t", "tail", 1)


def role_index(role) -> int:
    if role in HEAD_ROLES:
        return 0
    if role in TAIL_ROLES:
        return 1
    raise ValueError(f"role must be 'head' or 'tail', got {role!r}")


@dataclass
class ModelParams:
    """All trainable tensors, stored as float64.

    Attributes
    ----------
    center_head, center_tail : (n, d)
    local_head, local_tail : (m, n, s)
    xform_head, xform_tail : (m, s, d)
    a : drift bound on ``||X.T @ u||``
    k : rescaling target as a fraction of ``a``
    """

    center_head: np.ndarray
    center_tail: np.ndarray
    local_head: np.ndarray
    local_tail: np.ndarray
    xform_head: np.ndarray
    xform_tail: np.ndarray
    a: float = 1.0
    k: float = 0.8

    def __post_init__(self):
        n, d = self.center_head.shape
        m, _, s = self.local_head.shape
        expected = {
            "center_head": (n, d), "center_tail": (n, d),
            "local_head": (m, n, s), "local_tail": (m, n, s),
            "xform_head": (m, s, d), "xform_tail": (m, s, d),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if arr.dtype != np.float64 or not arr.flags.c_contiguous:
                setattr(self, name, np.ascontiguousarray(arr, dtype=np.float64))
        if s > d:
            raise ValueError(f"local dimension s={s} exceeds center dimension d={d}")
        if not self.a > 0:
            raise ValueError("drift bound a must be positive")
        if not 0 < self.k <= 1:
            raise ValueError("scaling parameter k must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.center_head.shape[0]

    @property
    def d(self) -> int:
        return self.center_head.shape[1]

    @property
    def m(self) -> int:
        return self.local_head.shape[0]

    @property
    def s(self) -> int:
        return self.local_head.shape[2]

    def tensors(self) -> tuple[np.ndarray, ...]:
        """Parameter tensors in checkpoint order."""
        return (self.center_head, self.center_tail, self.local_head,
                self.local_tail, self.xform_head, self.xform_tail)

    def center(self, role) -> np.ndarray:
        return self.center_tail if role_index(role) else self.center_head

    def local(self, role) -> np.ndarray:
        return self.local_tail if role_index(role) else self.local_head

    def xform(self, role) -> np.ndarray:
        return self.xform_tail if role_index(role) else self.xform_head

    def copy(self) -> "ModelParams":
        return ModelParams(*(t.copy() for t in self.tensors()), a=self.a, k=self.k)

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors())

    def relational_matrix(self, role, r: int) -> np.ndarray:
        """Composed vectors of every word for one (role, relation): ``(n, d)``."""
        return self.center(role) + self.local(role)[r] @ self.xform(role)[r]

    def drift_norms(self, role, r: int) -> np.ndarray:
        """``||X[r].T @ u[r, w]||`` for every word."""
        return np.linalg.norm(self.local(role)[r] @ self.xform(role)[r], axis=1)


def init_params(n: int, m: int, d: int, s: int, rng: np.random.Generator,
                a: float = 1.0, k: float = 0.8) -> ModelParams:
    """Random start: small uniform centers, zero locals, small uniform transforms."""
    c_bound = 0.5 / d
    x_bound = 1.0 / math.sqrt(s * d)
    ch = rng.uniform(-c_bound, c_bound, size=(n, d))
    ct = rng.uniform(-c_bound, c_bound, size=(n, d))
    xh = rng.uniform(-x_bound, x_bound, size=(m, s, d))
    xt = rng.uniform(-x_bound, x_bound, size=(m, s, d))
    zeros = np.zeros((m, n, s))
    return ModelParams(ch, ct, zeros, zeros.copy(), xh, xt, a=a, k=k)


def _check_ids(params: ModelParams, w: int, r: int):
    if not 0 <= w < params.n:
        raise IndexError(f"word id {w} out of range [0, {params.n})")
    if not 0 <= r < params.m:
        raise IndexError(f"relation id {r} out of range [0, {params.m})")


def compose(params: ModelParams, w: int, role, r: int) -> np.ndarray:
    """Relation-specific embedding ``c[w] + X[r].T @ u[r, w]`` for one word."""
    _check_ids(params, w, r)
    return params.center(role)[w] + params.xform(role)[r].T @ params.local(role)[r, w]


def score(params: ModelParams, w_h: int, r: int, w_t: int) -> float:
    return float(compose(params, w_h, "head", r) @ compose(params, w_t, "tail", r))


def plausibility(params: ModelParams, w_h: int, r: int, w_t: int) -> float:
    """Cosine between the composed head and tail vectors."""
    vh = compose(params, w_h, "head", r)
    vt = compose(params, w_t, "tail", r)
    nh, nt = np.linalg.norm(vh), np.linalg.norm(vt)
    if nh == 0.0 or nt == 0.0:
        raise ValueError(f"zero-norm composed vector for (head={w_h}, rel={r}, tail={w_t}); "
                         "word looks untrained")
    return float(np.clip(vh @ vt / (nh * nt), -1.0, 1.0))


def project_drift(params: ModelParams, w: int, role, r: int, u_only: bool = False) -> bool:
    """Rescale ``u[r, w]`` and ``X[r]`` so that ``||X.T u||`` drops to ``k * a``.

    Only acts when the norm strictly exceeds ``a``. Returns whether it did.
    """
    _check_ids(params, w, r)
    return bool(kernels.project_pair(params.xform(role)[r], params.local(role)[r, w],
                                     params.a, params.k, u_only))


def param_count(n: int, m: int, d: int, s: int) -> int:
    """Number of stored values: centers + local embeddings + transforms, head and tail."""
    for name, v in (("n", n), ("m", m), ("d", d), ("s", s)):
        if v <= 0:
            raise ValueError(f"{name} must be positive")
    return 2 * n * d + 2 * n * m * s + 2 * m * s * d


def multi_prototype_count(n: int, m: int, d: int) -> int:
    """Values needed by a layout with a separate d-vector per word, relation and role."""
    return 2 * n * m * d
