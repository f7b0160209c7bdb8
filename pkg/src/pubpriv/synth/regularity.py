"""Literal checks of the sample regularity conditions for a labeled mixture sample."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import InputError

_BLOCK = 2048


@dataclass(frozen=True)
class RegularityReport:
    """Pass/fail and worst-case margin per condition.

    Margins are relative slacks: positive means the condition holds with
    room to spare, negative is the relative size of the worst violation.
    """

    passed: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)

    @property
    def all_passed(self):
        return all(self.passed.values())


def _pair_sq_extremes(a, b=None):
    """Min and max squared distance over pairs (a_i, b_j); pairs i < j when b is None."""
    lo, hi = math.inf, -math.inf
    same = b is None
    b = a if same else b
    bn = np.sum(b * b, axis=1)
    for s in range(0, a.shape[0], _BLOCK):
        blk = a[s:s + _BLOCK]
        sq = np.sum(blk * blk, axis=1)[:, None] + bn[None, :] - 2 * blk @ b.T
        if same:
            rows = np.arange(s, s + blk.shape[0])[:, None]
            mask = np.arange(b.shape[0])[None, :] > rows
            if not mask.any():
                continue
            vals = sq[mask]
        else:
            vals = sq.ravel()
        if vals.size:
            lo = min(lo, float(vals.min()))
            hi = max(hi, float(vals.max()))
    return max(lo, 0.0), max(hi, 0.0)


def _diameter(x):
    if x.shape[0] < 2:
        return 0.0
    if x.shape[1] == 1:
        return float(x.max() - x.min())
    pts = x
    if 2 <= x.shape[1] <= 6 and x.shape[0] > 5 * (x.shape[1] + 1):
        try:
            pts = x[ConvexHull(x).vertices]
        except QhullError:
            pts = x
    return math.sqrt(_pair_sq_extremes(pts)[1])


def _mean_basis(params):
    means = np.array([p.mean for p in params.params])
    if params.k == 1:
        v = means[0]
        if np.linalg.norm(v) == 0:
            v = np.eye(params.dim)[0]
        return (v / np.linalg.norm(v))[:, None]
    q, r = np.linalg.qr(means.T)
    keep = np.abs(np.diag(r)) > 1e-12 * np.abs(r).max()
    return q[:, keep] if keep.any() else q[:, :1]


def check_regularity(data, params, beta, n_total, basis=None):
    """Evaluate Conditions 1-6 and the flatness assumption literally.

    ``basis`` is a d x ell orthonormal basis for the low-dimensional
    conditions; by default the span of the component means is used. The
    count N in the low-dimensional radius and in the assumption is
    ``n_total``.
    """
    if data.labels is None:
        raise InputError("regularity checks need labels")
    x, lab = data.rows, data.labels
    n = x.shape[0]
    k = params.k
    w = params.weights
    passed, margins = {}, {}

    counts = np.bincount(lab, minlength=k)[:k]
    m1 = min(min(c - n * wi / 2, 3 * n * wi / 2 - c) / (n * wi) for c, wi in zip(counts, w))
    passed["condition1"], margins["condition1"] = bool(m1 >= 0), float(m1)

    trs = [float(np.trace(p.cov)) for p in params.params]
    m2 = m3 = math.inf
    for i, p in enumerate(params.params):
        xi = x[lab == i]
        if xi.shape[0] == 0:
            continue
        r2 = np.sum((xi - p.mean) ** 2, axis=1) / trs[i]
        m2 = min(m2, float(np.min(r2)) - 0.75, 1.5 - float(np.max(r2)))
        if xi.shape[0] >= 2:
            lo, hi = _pair_sq_extremes(xi)
            m3 = min(m3, lo / trs[i] - 1.5, 3 - hi / trs[i])
    passed["condition2"], margins["condition2"] = m2 >= 0, m2
    passed["condition3"], margins["condition3"] = m3 >= 0, m3

    m4 = math.inf
    for i in range(k):
        for j in range(i + 1, k):
            xi, xj = x[lab == i], x[lab == j]
            if xi.shape[0] and xj.shape[0]:
                lo, _ = _pair_sq_extremes(xi, xj)
                m4 = min(m4, math.sqrt(lo) / (math.sqrt(max(trs[i], trs[j])) / 4) - 1)
    passed["condition4"], margins["condition4"] = m4 >= 0, m4

    b = _mean_basis(params) if basis is None else np.asarray(basis, dtype=float)
    ell = b.shape[1]
    m5 = m6 = math.inf
    for i, p in enumerate(params.params):
        xi = x[lab == i] @ b
        if xi.shape[0] == 0:
            continue
        sig = math.sqrt(float(np.linalg.eigvalsh(b.T @ p.cov @ b)[-1]))
        bound = sig * math.sqrt(2 * ell * math.log(2 * n_total * ell / beta))
        dev = np.linalg.norm(xi - p.mean @ b, axis=1)
        m5 = min(m5, 1 - float(dev.max()) / bound)
        m6 = min(m6, 1 - _diameter(xi) / (2 * bound))
    passed["condition5"], margins["condition5"] = m5 >= 0, m5
    passed["condition6"], margins["condition6"] = m6 >= 0, m6

    lg = math.log(n_total * k / beta)
    ma = math.inf
    for i, p in enumerate(params.params):
        fro = float(np.linalg.norm(p.cov, "fro"))
        spectral = float(np.linalg.eigvalsh(p.cov)[-1])
        lim = trs[i] / 8
        ma = min(ma, (lim - fro * math.sqrt(lg)) / lim, (lim - spectral * lg * lg) / lim)
    passed["assumption"], margins["assumption"] = ma >= 0, ma
    return RegularityReport(passed, margins)
