"""Superclustering on public data."""

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ArityError, DegenerateDataError
from .types import Ball


def _nn_radius(x):
    """(max over x of the distance to its nearest other point, index of the argmax)."""
    dist, _ = cKDTree(x).query(x, k=2)
    nn = dist[:, 1]
    j = int(np.argmax(nn))
    return float(nn[j]), j


def supercluster(public, k, trace=None):
    """Grow a ball around the most isolated public point until it stops picking up points.

    r is 16 times the largest nearest-neighbour distance and the centre is
    the point attaining it. The loop runs at most k times and returns the
    ball (c, R). ``trace``, if a list, receives one (R, branch) entry per
    iteration for control-flow tests.
    """
    x = np.asarray(public, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ArityError("superclustering needs at least 2 public points")
    r_nn, j = _nn_radius(x)
    r = 16.0 * r_nn
    if r <= 0:
        raise DegenerateDataError("all public points coincide with a neighbour")
    c = x[j].copy()
    # counts of closed balls about c via sorted distances
    dist = np.sort(np.linalg.norm(x - c, axis=1))

    def count(rad):
        return int(np.searchsorted(dist, rad, side="right"))

    pure = False
    R = r
    for _ in range(int(k)):
        m_i = count(R)
        if count(R + r) == m_i:
            if pure:
                _log(trace, R, "return-pure")
                return Ball(c, R)
            if count(R + 2 * r) == m_i:
                _log(trace, R, "return-grow")
                return Ball(c, R + r)
            pure = False
            R = R + 3 * r
            _log(trace, R, "jump")
        else:
            pure = count(R + 2 * r) == count(R + r)
            R = R + 2 * r
            _log(trace, R, "grow-pure" if pure else "grow")
    _log(trace, R, "cap")
    return Ball(c, R)


def _log(trace, R, branch):
    if trace is not None:
        trace.append((R, branch))
