"""Hot loops of the trainer.

With numba available (the default) the per-tuple update runs as compiled
scalar loops. ``MWE_BACKEND=numpy`` swaps in a vectorised numpy version of
the same update and runs the driver loops uncompiled. Both paths take
contiguous float64 arrays and mutate them in place.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

LOG_FLOOR = 1e-12
LR_FLOOR = 1e-4


@njit(cache=True, nogil=True)
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _project_pair_vec(X, u, a, k, u_only):
    """Shrink ``X`` (s x d) and ``u`` (s,) in place when ``||X.T u|| > a``."""
    p = np.dot(u, X)
    norm = math.sqrt(np.dot(p, p))
    if norm <= a:
        return 0
    factor = norm / (k * a)
    if u_only:
        u /= factor
    else:
        g = math.sqrt(factor)
        X /= g
        u /= g
    return 1


def _tuple_update_vec(ch, ct, uh, ut, Xh, Xt, h, r, t, target, lam, eta, a, k, u_only, stats):
    """One SGD update for a single (head, relation, tail) with label ``target``.

    All six gradients are taken at the pre-update point. Returns the
    logistic loss of the tuple, or NaN when the score is not finite.
    ``stats[0]`` counts log clamps, ``stats[1]`` counts projections.
    """
    Xhr = Xh[r]
    Xtr = Xt[r]
    uhw = uh[r, h]
    utw = ut[r, t]
    vh = ch[h] + np.dot(uhw, Xhr)
    vt = ct[t] + np.dot(utw, Xtr)
    f = np.dot(vh, vt)
    if not (math.isfinite(f) and math.isfinite(vh.sum()) and math.isfinite(vt.sum())):
        return np.nan

    sig = sigmoid(f)
    e = sig - target
    p = sig if target > 0.5 else sigmoid(-f)
    if p < LOG_FLOOR:
        p = LOG_FLOOR
        stats[0] += 1
    loss = -math.log(p)

    if lam > 0.0:
        g = lam * eta * e
        ch[h] -= g * vt
        ct[t] -= g * vh
    if lam < 1.0:
        g = (1.0 - lam) * eta * e
        grad_uh = np.dot(Xhr, vt)
        grad_ut = np.dot(Xtr, vh)
        Xhr -= g * np.outer(uhw, vt)
        Xtr -= g * np.outer(utw, vh)
        uhw -= g * grad_uh
        utw -= g * grad_ut

    stats[1] += _project_pair_vec(Xhr, uhw, a, k, u_only)
    stats[1] += _project_pair_vec(Xtr, utw, a, k, u_only)
    return loss


# Same arithmetic as above, spelled out as scalar loops: at d ~ 32 numba
# spends more time in BLAS dispatch and temporaries than in the math.

@njit(cache=True, nogil=True)
def _lift(X, u, out):
    s, d = X.shape
    for j in range(d):
        out[j] = 0.0
    for i in range(s):
        ui = u[i]
        for j in range(d):
            out[j] += ui * X[i, j]


@njit(cache=True, nogil=True)
def _project_pair_loop(X, u, a, k, u_only):
    s, d = X.shape
    sq = 0.0
    for j in range(d):
        pj = 0.0
        for i in range(s):
            pj += u[i] * X[i, j]
        sq += pj * pj
    norm = math.sqrt(sq)
    if norm <= a:
        return 0
    factor = norm / (k * a)
    if u_only:
        for i in range(s):
            u[i] /= factor
    else:
        g = math.sqrt(factor)
        for i in range(s):
            u[i] /= g
            for j in range(d):
                X[i, j] /= g
    return 1


@njit(cache=True, nogil=True)
def _tuple_update_loop(ch, ct, uh, ut, Xh, Xt, h, r, t, target, lam, eta, a, k, u_only, stats):
    d = ch.shape[1]
    s = uh.shape[2]
    Xhr = Xh[r]
    Xtr = Xt[r]
    uhw = uh[r, h]
    utw = ut[r, t]
    vh = np.empty(d)
    vt = np.empty(d)
    _lift(Xhr, uhw, vh)
    _lift(Xtr, utw, vt)
    f = 0.0
    for j in range(d):
        vh[j] += ch[h, j]
        vt[j] += ct[t, j]
        f += vh[j] * vt[j]
    if not math.isfinite(f):
        return np.nan
    for j in range(d):
        if not (math.isfinite(vh[j]) and math.isfinite(vt[j])):
            return np.nan

    sig = sigmoid(f)
    e = sig - target
    p = sig if target > 0.5 else sigmoid(-f)
    if p < LOG_FLOOR:
        p = LOG_FLOOR
        stats[0] += 1
    loss = -math.log(p)

    if lam > 0.0:
        g = lam * eta * e
        for j in range(d):
            ch[h, j] -= g * vt[j]
            ct[t, j] -= g * vh[j]
    if lam < 1.0:
        g = (1.0 - lam) * eta * e
        for i in range(s):
            gh = 0.0
            gt = 0.0
            uhi = uhw[i]
            uti = utw[i]
            for j in range(d):
                gh += Xhr[i, j] * vt[j]
                gt += Xtr[i, j] * vh[j]
                Xhr[i, j] -= g * uhi * vt[j]
                Xtr[i, j] -= g * uti * vh[j]
            uhw[i] -= g * gh
            utw[i] -= g * gt

    stats[1] += _project_pair_loop(Xhr, uhw, a, k, u_only)
    stats[1] += _project_pair_loop(Xtr, utw, a, k, u_only)
    return loss


if USE_NUMBA:
    tuple_update = _tuple_update_loop
    project_pair = _project_pair_loop
else:
    tuple_update = _tuple_update_vec
    project_pair = _project_pair_vec


@njit(cache=True, nogil=True)
def run_epoch(ch, ct, uh, ut, Xh, Xt, heads, rels, tails, neg_heads, neg_tails,
              lam, eta0, a, k, u_only, done0, stride, total, stats):
    """Train on a sequence of positives, each followed by its two negatives.

    The learning rate decays linearly with ``(done0 + i * stride) / total``.
    On a non-finite score, ``stats[2]`` receives the offending index and the
    loop stops early. Returns the summed loss.
    """
    loss = 0.0
    for i in range(heads.shape[0]):
        progress = (done0 + i * stride) / total
        eta = eta0 * max(LR_FLOOR, 1.0 - progress)
        h = heads[i]
        r = rels[i]
        t = tails[i]
        for j in range(3):
            if j == 0:
                l = tuple_update(ch, ct, uh, ut, Xh, Xt, h, r, t, 1.0, lam, eta, a, k, u_only, stats)
            elif j == 1:
                l = tuple_update(ch, ct, uh, ut, Xh, Xt, neg_heads[i], r, t, 0.0, lam, eta, a, k,
                                 u_only, stats)
            else:
                l = tuple_update(ch, ct, uh, ut, Xh, Xt, h, r, neg_tails[i], 0.0, lam, eta, a, k,
                                 u_only, stats)
            if math.isnan(l):
                stats[2] = i
                return loss
            loss += l
    return loss


@njit(cache=True, nogil=True)
def settle_drift(U, X, a, k, u_only):
    """Project every (relation, word) pair of one role that exceeds the bound."""
    count = 0
    for r in range(U.shape[0]):
        for w in range(U.shape[1]):
            count += project_pair(X[r], U[r, w], a, k, u_only)
    return count


def warmup():
    """Trigger compilation on a tiny problem."""
    ch = np.zeros((2, 2))
    ct = np.zeros((2, 2))
    uh = np.zeros((1, 2, 1))
    ut = np.zeros((1, 2, 1))
    Xh = np.zeros((1, 1, 2))
    Xt = np.zeros((1, 1, 2))
    idx = np.zeros(1, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    run_epoch(ch, ct, uh, ut, Xh, Xt, idx, idx, idx, idx + 1, idx + 1,
              0.5, 0.025, 1.0, 0.8, False, 0, 1, 1, stats)
    settle_drift(uh, Xh, 1.0, 0.8, False)
