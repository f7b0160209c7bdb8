"""Total-variation distance between Gaussians, and gamma-far constructions."""

import math

import numpy as np
from scipy import optimize, stats
from scipy.linalg import solve_triangular

from ..errors import ParameterError
from ..gauss_est import GaussianParams


def _tv_1d(m1, s1, m2, s2):
    """Exact TV between N(m1, s1^2) and N(m2, s2^2)."""
    if s1 == s2:
        if m1 == m2:
            return 0.0
        return float(2 * stats.norm.cdf(abs(m1 - m2) / (2 * s1)) - 1)
    v1, v2 = s1 * s1, s2 * s2
    # log p - log q = a x^2 + b x + c
    a = 1 / (2 * v2) - 1 / (2 * v1)
    b = m1 / v1 - m2 / v2
    c = m2 * m2 / (2 * v2) - m1 * m1 / (2 * v1) - math.log(s1 / s2)
    disc = b * b - 4 * a * c
    root = math.sqrt(max(disc, 0.0))
    q = -0.5 * (b + math.copysign(root, b))
    x1, x2 = sorted((q / a, c / q) if q != 0 else (-root / (2 * a), root / (2 * a)))
    p_in = stats.norm.cdf(x2, m1, s1) - stats.norm.cdf(x1, m1, s1)
    q_in = stats.norm.cdf(x2, m2, s2) - stats.norm.cdf(x1, m2, s2)
    # the narrower density wins between the crossings
    return float(abs(p_in - q_in))


class _Gauss:
    def __init__(self, p):
        self.mean = p.mean
        self.chol = np.linalg.cholesky(p.cov)
        self.logdet = 2 * float(np.sum(np.log(np.diag(self.chol))))

    def sample(self, n, rng):
        return self.mean + rng.standard_normal((n, self.mean.shape[0])) @ self.chol.T

    def logpdf(self, x):
        z = solve_triangular(self.chol, (x - self.mean).T, lower=True)
        d = self.mean.shape[0]
        return -0.5 * np.sum(z * z, axis=0) - 0.5 * self.logdet - 0.5 * d * math.log(2 * math.pi)


def tv_monte_carlo(p, q, n_samples=20000, rng=None):
    """Likelihood-ratio Monte-Carlo TV estimate and its standard error.

    Uses TV = E_p[(1 - q/p)_+] = E_q[(1 - p/q)_+], averaging both halves.
    The summands lie in [0, 1], unlike |1 - q/p| whose upper tail is
    unbounded when the two laws are far apart.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    gp, gq = _Gauss(p), _Gauss(q)
    half = max(n_samples // 2, 2)
    x = gp.sample(half, rng)
    a = -np.expm1(np.minimum(gq.logpdf(x) - gp.logpdf(x), 0.0))
    y = gq.sample(half, rng)
    b = -np.expm1(np.minimum(gp.logpdf(y) - gq.logpdf(y), 0.0))
    est = 0.5 * (a.mean() + b.mean())
    se = 0.5 * math.sqrt(a.var(ddof=1) / half + b.var(ddof=1) / half)
    return float(est), float(se)


def tv_distance(p, q, method="auto", n_samples=20000, rng=None):
    """TV distance as (estimate, error_bound).

    ``closed_1d`` is exact (error bound 0) and needs d = 1. ``monte_carlo``
    reports three standard errors as the bound. ``auto`` picks closed_1d in
    one dimension.
    """
    if p.dim != q.dim:
        raise ParameterError("dimension mismatch")
    if method == "auto":
        method = "closed_1d" if p.dim == 1 else "monte_carlo"
    if method == "closed_1d":
        if p.dim != 1:
            raise ParameterError("closed_1d needs d = 1")
        return _tv_1d(float(p.mean[0]), math.sqrt(p.cov[0, 0]),
                      float(q.mean[0]), math.sqrt(q.cov[0, 0])), 0.0
    if method == "monte_carlo":
        if np.array_equal(p.mean, q.mean) and np.array_equal(p.cov, q.cov):
            return 0.0, 0.0
        est, se = tv_monte_carlo(p, q, n_samples, rng)
        return est, 3 * se
    raise ParameterError(f"unknown TV method {method!r}")


def tv_param_bounds(gamma):
    """Parameter bounds implied by TV <= gamma.

    Returns (mean_bound, cond_bound, loewner_lo, loewner_hi) =
    (8 gamma/(1-gamma), 2/(1-gamma)^2, (1-gamma)^4/4, 4/(1-gamma)^4).
    """
    if not 0 <= gamma < 1:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    g = 1.0 - gamma
    return 8 * gamma / g, 2 / g ** 2, g ** 4 / 4, 4 / g ** 4


def gamma_far_gaussian(p, gamma, rng, scale=2.0):
    """A Gaussian at TV distance gamma from p.

    Along one random direction (in p's whitened coordinates) the variance is
    multiplied by ``scale`` and the mean shifted, so the TV distance equals
    the one-dimensional TV between N(0, 1) and N(shift, scale), which is
    solved for exactly. If the variance change alone already exceeds gamma,
    the scale is reduced first.
    """
    if not 0 <= gamma < 1:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    if gamma == 0:
        return GaussianParams(p.mean.copy(), p.cov.copy())
    sd = math.sqrt(scale)
    if _tv_1d(0.0, 1.0, 0.0, sd) > gamma / 2:
        sd = optimize.brentq(lambda s: _tv_1d(0.0, 1.0, 0.0, s) - gamma / 2, 1.0, sd, xtol=1e-14)
    hi = 1.0
    while _tv_1d(0.0, 1.0, hi, sd) < gamma:
        hi *= 2
    shift = optimize.brentq(lambda t: _tv_1d(0.0, 1.0, t, sd) - gamma, 0.0, hi, xtol=1e-14)
    d = p.dim
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    w, e = np.linalg.eigh(p.cov)
    root = (e * np.sqrt(w)) @ e.T
    inner = np.eye(d) + (sd * sd - 1) * np.outer(v, v)
    cov = root @ inner @ root
    return GaussianParams(p.mean + shift * (root @ v), (cov + cov.T) / 2)
