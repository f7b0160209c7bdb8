"""Learning-quality evaluation under the best component relabeling."""

from dataclasses import dataclass, field
import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .tv import tv_distance


@dataclass
class LearningReport:
    """Result of matching an estimated mixture against the truth.

    ``perm[i]`` is the estimate component assigned to true component i.
    ``reason`` is empty on a well-formed comparison and names the failure
    otherwise (for example a component-count mismatch).
    """

    passed: bool
    perm: tuple = ()
    tv: list = field(default_factory=list)
    tv_err: list = field(default_factory=list)
    weight_err: list = field(default_factory=list)
    weight_tol: float = math.nan
    alpha: float = math.nan
    reason: str = ""

    @property
    def max_tv(self):
        return max(self.tv) if self.tv else math.nan

    def to_dict(self):
        return {"passed": self.passed, "perm": list(self.perm), "tv": list(self.tv),
                "tv_err": list(self.tv_err), "weight_err": list(self.weight_err),
                "weight_tol": self.weight_tol, "alpha": self.alpha, "reason": self.reason}


def exhaustive_assignment(cost):
    """Permutation minimizing (max cost, total cost) by brute force."""
    k = cost.shape[0]
    best, best_key = None, None
    rows = np.arange(k)
    for perm in itertools.permutations(range(k)):
        c = cost[rows, list(perm)]
        key = (c.max(), c.sum())
        if best_key is None or key < best_key:
            best, best_key = perm, key
    return tuple(int(p) for p in best)


def bottleneck_assignment(cost):
    """Permutation minimizing (max cost, total cost).

    Finds the smallest threshold admitting a perfect matching, then solves a
    min-sum assignment restricted to entries under that threshold.
    """
    k = cost.shape[0]
    vals = np.unique(cost)
    lo, hi = 0, vals.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        match = maximum_bipartite_matching(csr_matrix(cost <= vals[mid]), perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    thr = vals[lo]
    big = cost.sum() + 1.0
    r, c = linear_sum_assignment(np.where(cost <= thr, cost, big))
    perm = np.empty(k, dtype=int)
    perm[r] = c
    return tuple(int(p) for p in perm)


def evaluate_learning(truth, estimate, alpha, weight_tol=None, tv_samples=20000, rng=None,
                      exhaustive_max=8):
    """Check the (alpha)-learning criterion under the best relabeling.

    Passes iff some permutation gives every component TV <= alpha and every
    weight error <= weight_tol (default alpha / k). The permutation
    minimizes the maximum per-component TV; ties broken by the total TV.
    """
    k = truth.k
    tol = alpha / k if weight_tol is None else weight_tol
    if estimate is None or estimate.k != k:
        got = 0 if estimate is None else estimate.k
        return LearningReport(False, weight_tol=tol, alpha=alpha,
                              reason=f"component count mismatch: expected {k}, got {got}")
    if estimate.dim != truth.dim:
        return LearningReport(False, weight_tol=tol, alpha=alpha, reason="dimension mismatch")
    if rng is None:
        rng = np.random.default_rng(0)
    cost = np.zeros((k, k))
    errs = np.zeros((k, k))
    for i, p in enumerate(truth.params):
        for j, q in enumerate(estimate.params):
            cost[i, j], errs[i, j] = tv_distance(p, q, n_samples=tv_samples, rng=rng)
    perm = exhaustive_assignment(cost) if k <= exhaustive_max else bottleneck_assignment(cost)
    tv = [float(cost[i, perm[i]]) for i in range(k)]
    tv_err = [float(errs[i, perm[i]]) for i in range(k)]
    tw, ew = truth.weights, estimate.weights
    werr = [float(abs(tw[i] - ew[perm[i]])) for i in range(k)]
    ok = max(tv) <= alpha and max(werr) <= tol
    return LearningReport(bool(ok), perm, tv, tv_err, werr, tol, alpha)


def clean_partition(partition, labels, k):
    """True iff there are k clusters, each holding exactly one component's full label set."""
    labels = np.asarray(labels)
    if len(partition.clusters) != k:
        return False
    used = set()
    for c in partition.clusters:
        if c.size == 0:
            return False
        lab = np.unique(labels[c])
        if lab.size != 1 or int(lab[0]) in used:
            return False
        if c.size != int(np.sum(labels == lab[0])):
            return False
        used.add(int(lab[0]))
    return True


def pure_ball(ball, data):
    """True iff, for every label, the ball holds all of its points or none."""
    inside = ball.contains(data.rows)
    for lab in np.unique(data.labels):
        sel = inside[data.labels == lab]
        if sel.any() and not sel.all():
            return False
    return True
