"""Per-cluster parameter and weight estimation, and the two end-to-end pipelines."""

import numpy as np

from ..dp_core import pcount, spend_group
from ..errors import ArityError, DegenerateDataError, InputError, ParameterError
from ..gauss_est import (GaussianParams, RangeBounds, bounded_zcdp_gaussian_learner,
                         pub_dp_gaussian_estimator)
from .clustering import _as_rows, dp_hard_clustering, easy_clustering
from .types import MixtureParams

HARD, EASY = "hard", "easy"


def hard_bounds(ball, cov_floor=1.0):
    """Learner range after recentring at the ball's centre: R = radius, K = radius^2 / floor."""
    R = float(ball.radius)
    return RangeBounds(R, max(1.0, R * R / cov_floor))


def weight_rule(noisy_count, n, alpha, k):
    """max(noisy_count / n, alpha / 2k), before renormalization."""
    return max(noisy_count / n, alpha / (2 * k))


def estimate_mixture(private, partition, alpha, beta, budget, mode, rng, public=None,
                     accountant=None, method="iterative", cov_floor=1.0):
    """Estimate (mean, covariance, weight) for each cluster of a partition.

    Half of ``budget`` goes to the per-cluster learners and half to the
    noisy cluster sizes; clusters hold disjoint private rows, so each half
    is spent in parallel. Learners run at failure probability beta/k.

    mode="hard" recentres each cluster at its supercluster ball and uses
    :func:`hard_bounds`; mode="easy" preconditions with the first d+1 rows of
    the matching public cluster. Weights are max(noisy size / n, alpha/2k)
    renormalized over the successful components. A cluster whose estimate
    fails (empty, too few rows, degenerate) is listed in ``failures`` of the
    result and left out.
    """
    z = _as_rows(private, "private")
    n, d = z.shape
    if mode not in (HARD, EASY):
        raise ParameterError(f"mode must be 'hard' or 'easy', got {mode!r}")
    if mode == EASY:
        if public is None:
            raise InputError("easy mode needs the public rows")
        y = _as_rows(public, "public")
    partition.validate(n)
    k = len(partition.clusters)
    if k == 0:
        raise DegenerateDataError("the partition has no clusters")
    half = budget.scaled(1, 2)
    params, failures = [None] * k, []
    with spend_group(accountant, "seq", "mixture estimate"):
        with spend_group(accountant, "par", "component learners"):
            for i, idx in enumerate(partition.clusters):
                try:
                    params[i] = _learn(z[idx], i, partition, mode, alpha, beta / k, half, rng,
                                       y if mode == EASY else None, accountant, method,
                                       cov_floor, d)
                except (InputError, ArityError, DegenerateDataError, np.linalg.LinAlgError) as exc:
                    failures.append((i, str(exc)))
        counts = []
        with spend_group(accountant, "par", "component weights"):
            for i, idx in enumerate(partition.clusters):
                counts.append(pcount(idx.size, half, rng, accountant, f"weight {i}"))
    raw = np.array([weight_rule(c, n, alpha, k) for c in counts])
    keep = [i for i in range(k) if params[i] is not None]
    if not keep:
        raise DegenerateDataError(f"every component estimate failed: {failures}")
    w = raw[keep] / raw[keep].sum()
    return MixtureParams(tuple((params[i], float(wi)) for i, wi in zip(keep, w)),
                         failures=tuple(failures))


def _learn(rows, i, partition, mode, alpha, beta, budget, rng, y, accountant, method,
           cov_floor, d):
    if rows.shape[0] < 2:
        raise InputError(f"cluster {i} has {rows.shape[0]} rows")
    if mode == HARD:
        ball = partition.balls[i] if i < len(partition.balls) else None
        if ball is None:
            raise InputError(f"cluster {i} has no enclosing ball")
        c = ball.center
        est = bounded_zcdp_gaussian_learner(rows - c, hard_bounds(ball, cov_floor), alpha, beta,
                                            budget, rng, method, accountant)
        return GaussianParams(est.mean + c, est.cov)
    pub_idx = partition.public_clusters[i]
    if pub_idx.size < d + 1:
        raise InputError(f"cluster {i} has {pub_idx.size} public rows, needs {d + 1}")
    return pub_dp_gaussian_estimator(y[pub_idx[:d + 1]], rows, alpha, beta, budget, 0.0, rng,
                                     method, accountant)


def estimate_gmm_hard(public, private, k, w_min, alpha, beta, budget, rng, accountant=None,
                      method="iterative", cov_floor=1.0):
    """Hard-case pipeline: half the budget clusters, a quarter learns, a quarter weighs.

    Returns (MixtureParams, Partition).
    """
    half = budget.scaled(1, 2)
    with spend_group(accountant, "seq", "gmm hard"):
        part = dp_hard_clustering(public, private, k, w_min, beta, half, rng, accountant)
        est = estimate_mixture(private, part, alpha, beta, half, HARD, rng,
                               accountant=accountant, method=method, cov_floor=cov_floor)
    return est, part


def estimate_gmm_easy(public, private, k, w_min, alpha, beta, budget, rng, accountant=None,
                      method="iterative"):
    """Easy-case pipeline: public-only clustering, then the whole budget on estimation.

    Returns (MixtureParams, Partition).
    """
    part = easy_clustering(public, private, k, w_min, beta)
    est = estimate_mixture(private, part, alpha, beta, budget, EASY, rng, public=public,
                           accountant=accountant, method=method)
    return est, part
