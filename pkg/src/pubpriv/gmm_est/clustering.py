"""Queue-driven clustering: the private hard pipeline and the public-only easy pipeline."""

from collections import deque
import math

import numpy as np
from scipy.spatial.distance import pdist

from .. import _linalg as la
from ..dp_core import APPROX, split_budget, spend_group
from ..errors import IncompleteClusteringError, InputError, ParameterError
from .partition import dp_low_dim_partitioner, low_dim_partitioner
from .pca import private_pca
from .supercluster import supercluster
from .types import Partition, PcaConfig


def _as_rows(x, name):
    x = np.asarray(getattr(x, "rows", x), dtype=float)
    if x.ndim != 2:
        raise InputError(f"{name} must be a 2-D array")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite values")
    return x


def _check(k, w_min, beta, d_pub, d_priv):
    if int(k) != k or k < 1:
        raise ParameterError("k must be a positive integer")
    if not 0 < w_min <= 1 / k + 1e-12:
        raise ParameterError("w_min must lie in (0, 1/k]")
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    if d_pub != d_priv:
        raise InputError("public and private rows have different dimensions")


class _Builder:
    """Collects banked clusters and the queue of (public, private, ball) index sets."""

    def __init__(self, m, n):
        self.queue = deque([(np.arange(m), np.arange(n), None)])
        self.part = Partition([])

    def push(self, yi, zi, ball):
        if yi.size or zi.size:
            self.queue.append((yi, zi, ball))

    def bank(self, zi, ball, yi):
        self.part.clusters.append(np.asarray(zi, dtype=np.int64))
        self.part.balls.append(ball)
        self.part.public_clusters.append(np.asarray(yi, dtype=np.int64))


def _event(trace, **kw):
    if trace is not None:
        trace.append(kw)


def _finish(b, k, count):
    if count < k:
        raise IncompleteClusteringError(
            f"found {count} of {k} clusters before the iteration cap", b.part)
    return b.part


def dp_hard_clustering(public, private, k, w_min, beta, budget, rng, accountant=None, trace=None):
    """Private clustering with O(1/w_min) public rows.

    Each of at most 2k iterations pops a (public, private) pair, grows a
    supercluster ball on the public part, queues what falls outside it,
    recentres the inside at the ball's centre, projects both sides onto a
    private rank-k PCA subspace and asks the private partitioner for a
    split. A refusal banks the private part as a cluster.

    ``budget`` is the clustering budget; it is split evenly over the 2k
    iterations, half of each going to PCA and half to the partitioner's
    private check. Approximate-DP iterations are tallied with advanced
    composition.
    """
    y_all, z_all = _as_rows(public, "public"), _as_rows(private, "private")
    _check(k, w_min, beta, y_all.shape[1], z_all.shape[1])
    m, d = y_all.shape
    n = z_all.shape[0]
    k = int(k)
    per_iter = split_budget(budget, 2 * k)[0]
    half = per_iter.scaled(1, 2)
    ell = min(k, d)
    b = _Builder(m, n)
    count, i = 0, 1
    mode, slack = ("adv", budget.delta / 2) if budget.kind == APPROX else ("seq", 0.0)
    with spend_group(accountant, mode, "hard clustering", slack):
        while count < k and i <= 2 * k and b.queue:
            yi, zi, parent = b.queue.popleft()
            if yi.size < 2:
                if zi.size:
                    b.bank(zi, parent, yi)
                    count += 1
                _event(trace, i=i, kind="small-public", banked=bool(zi.size))
                i += 1
                continue
            ball = supercluster(y_all[yi], k)
            in_y = ball.contains(y_all[yi])
            in_z = ball.contains(z_all[zi])
            b.push(yi[~in_y], zi[~in_z], parent)
            yc, zc = yi[in_y], zi[in_z]
            c, R = ball.center, ball.radius
            with spend_group(accountant, "seq", f"iteration {i}"):
                proj = private_pca(z_all[zc] - c, PcaConfig(ell, R), half, rng, accountant)
                yp = (y_all[yc] - c) @ proj
                zp = (z_all[zc] - c) @ proj
                split = dp_low_dim_partitioner(zp, yp, R, R / math.sqrt(d), n, m, w_min, half,
                                               rng, accountant)
            if split is None:
                b.bank(zc, ball, yc)
                count += 1
                _event(trace, i=i, kind="bank", ball=ball, size=int(zc.size))
            else:
                s, t = split.contains(yp), split.contains(zp)
                b.push(yc[s], zc[t], ball)
                b.push(yc[~s], zc[~t], ball)
                _event(trace, i=i, kind="split", ball=ball, split=split)
            i += 1
    return _finish(b, k, count)


def easy_radii(y, n, m, k, beta):
    """(R_i, r_i): 4 x the public diameter and the scaled minimum public distance."""
    dist = pdist(y)
    d = y.shape[1]
    scale = math.sqrt(2 * k * math.log(2 * (n + m) * k / beta)) / (4 * math.sqrt(d))
    return 4.0 * float(dist.max()), scale * float(dist.min())


def easy_clustering(public, private, k, w_min, beta, trace=None):
    """Clustering driven by O(d/w_min) public rows; never reads private values to decide.

    Each iteration projects the popped pair onto the top-k eigenspace of the
    public second-moment matrix and runs the public partitioner there. The
    private rows are only routed by the returned balls, so the output is
    post-processing of the public data and the private row positions.
    """
    y_all, z_all = _as_rows(public, "public"), _as_rows(private, "private")
    _check(k, w_min, beta, y_all.shape[1], z_all.shape[1])
    m, d = y_all.shape
    n = z_all.shape[0]
    k = int(k)
    ell = min(k, d)
    b = _Builder(m, n)
    count, i = 0, 1
    while count < k and i <= 2 * k and b.queue:
        yi, zi, _ = b.queue.popleft()
        y = y_all[yi]
        if yi.size < 2:
            if zi.size:
                b.bank(zi, None, yi)
                count += 1
            _event(trace, i=i, kind="small-public", banked=bool(zi.size))
            i += 1
            continue
        proj = la.top_projector(y.T @ y, ell)
        yp = y @ proj
        zp = z_all[zi] @ proj
        r_max, r_min = easy_radii(y, n, m, k, beta)
        split = None
        if r_min > 0:
            split = low_dim_partitioner(yp, r_max, r_min, m, w_min)
        if split is None:
            b.bank(zi, None, yi)
            count += 1
            _event(trace, i=i, kind="bank", size=int(zi.size))
        else:
            s, t = split.contains(yp), split.contains(zp)
            b.push(yi[s], zi[t], None)
            b.push(yi[~s], zi[~t], None)
            _event(trace, i=i, kind="split", split=split)
        i += 1
    return _finish(b, k, count)
