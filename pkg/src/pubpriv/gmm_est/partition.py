"""Terrific-ball queries and the low-dimensional partitioners."""

import math

import numpy as np
from scipy.spatial.distance import cdist

from ..dp_core import pcount
from ..errors import ParameterError
from .types import Ball


def _dists(points, c):
    x = np.asarray(points, dtype=float)
    if x.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.norm(x - np.asarray(c, dtype=float), axis=1)


def _region_counts(dist, r, outer):
    """(#inside B(c, r), #in B(c, outer r) minus B(c, r), #outside B(c, outer r))."""
    inner = int(np.count_nonzero(dist <= r))
    within = int(np.count_nonzero(dist <= outer * r))
    return inner, within - inner, dist.shape[0] - within


def q_pub(points, c, r, t):
    """At least t points in B(c, r), none in the annulus out to 11 r, at least t beyond it."""
    inner, ann, ext = _region_counts(_dists(points, c), r, 11.0)
    return inner >= t and ann == 0 and ext >= t


def q_priv(points, c, r, t, budget, rng, accountant=None):
    """Noisy version of the three-region test with annulus 5 r and threshold t/320.

    Each of the three counts is released by pcount at a third of the
    budget. All three are always evaluated, so the privacy cost and the
    random stream consumed do not depend on the data.
    """
    inner, ann, ext = _region_counts(_dists(points, c), r, 5.0)
    part = budget.scaled(1, 3)
    a = pcount(inner, part, rng, accountant, "q_priv inner")
    b = pcount(ann, part, rng, accountant, "q_priv annulus")
    e = pcount(ext, part, rng, accountant, "q_priv exterior")
    return a >= t and b < t / 320.0 and e >= t


def radius_schedule(r_max, r_min):
    """r_max / 2^i for i = 0 .. floor(log2(r_max / r_min))."""
    if not (r_min > 0 and math.isfinite(r_min)):
        raise ParameterError(f"r_min must be positive and finite, got {r_min}")
    if not (r_max > 0 and math.isfinite(r_max)):
        raise ParameterError(f"r_max must be positive and finite, got {r_max}")
    if r_max < r_min:
        return []
    top = math.floor(math.log2(r_max / r_min))
    # guard the floor against log2 rounding at exact powers of two
    while r_max / 2.0 ** (top + 1) >= r_min:
        top += 1
    while top > 0 and r_max / 2.0 ** top < r_min:
        top -= 1
    return [r_max / 2.0 ** i for i in range(top + 1)]


def _first_public_hit(yp, radii, t):
    """First (radius, centre index) in scan order where q_pub holds, or None."""
    yp = np.asarray(yp, dtype=float)
    m = yp.shape[0]
    if m == 0:
        return None
    dmat = cdist(yp, yp)
    for r in radii:
        inner = np.count_nonzero(dmat <= r, axis=1)
        within = np.count_nonzero(dmat <= 11.0 * r, axis=1)
        ok = (inner >= t) & (within == inner) & (m - within >= t)
        hits = np.flatnonzero(ok)
        if hits.size:
            return r, int(hits[0])
    return None


def low_dim_partitioner(yp, r_max, r_min, m, w_min):
    """Public-only partitioner: the ball (c, 2r) at the first public terrific hit, else None."""
    radii = radius_schedule(r_max, r_min)
    hit = _first_public_hit(yp, radii, m * w_min / 2.0)
    if hit is None:
        return None
    r, j = hit
    return Ball(np.asarray(yp, dtype=float)[j], 2.0 * r)


def dp_low_dim_partitioner(zp, yp, r_max, r_min, n, m, w_min, budget, rng, accountant=None):
    """Public scan for a candidate ball, confirmed once on the private data.

    The first public hit (c, r) is checked with q_priv at (c, 2r, n w_min/4);
    the ball (c, 2r) is returned if it passes and None otherwise. The
    private data is touched at most once, through that q_priv call.
    """
    radii = radius_schedule(r_max, r_min)
    hit = _first_public_hit(yp, radii, m * w_min / 2.0)
    if hit is None:
        return None
    r, j = hit
    c = np.asarray(yp, dtype=float)[j]
    if q_priv(zp, c, 2.0 * r, n * w_min / 4.0, budget, rng, accountant):
        return Ball(c, 2.0 * r)
    return None
