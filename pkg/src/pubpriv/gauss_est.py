"""Public-data preconditioning and public-private Gaussian estimation.

A handful of public samples (d+1 of them) give a crude affine map that puts
the private distribution in a known range: mean norm at most R and
covariance between I and K*I. A private learner that needs such range
bounds then runs on the transformed private data, and its output is mapped
back.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _linalg as la
from .dp_core import PrivacyBudget, gaussian_mechanism, gaussian_sigma, spend_group
from .errors import ArityError, InputError, ParameterError


@dataclass(frozen=True)
class GaussianParams:
    """Mean vector and symmetric positive-definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise InputError(f"mean of shape {mean.shape} does not match cov of shape {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InputError("Gaussian parameters must be finite")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-9 * scale:
            raise InputError("covariance is not symmetric")
        if float(np.linalg.eigvalsh(la.symmetrize(cov))[0]) <= 0:
            raise InputError("covariance is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]

    def to_dict(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass(frozen=True)
class RangeBounds:
    """A priori range: ||mu|| <= R and I <= Sigma <= K*I."""

    R: float
    K: float

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise ParameterError(f"R must be positive and finite, got {self.R}")
        if not (np.isfinite(self.K) and self.K >= 1):
            raise ParameterError(f"K must be finite and >= 1, got {self.K}")


def precondition_constants(d, beta):
    """L = d / (4d + 4 sqrt(2d ln(3/beta)) + 2 ln(3/beta)) and U = 9 d^2 / beta^2."""
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    lg = math.log(3.0 / beta)
    L = d / (4 * d + 4 * math.sqrt(2 * d * lg) + 2 * lg)
    U = 9.0 * d * d / beta ** 2
    return L, U


@dataclass(frozen=True)
class PreconditionTransform:
    """Affine map Y = (1/sqrt(L)) sigma_hat^{-1/2} (X - mu_hat) with its range constants.

    ``gamma`` records the trust parameter when the constants were widened by
    :func:`robust_bounds`; it is 0 for a plain transform.
    """

    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    L: float
    U: float
    gamma: float = 0.0
    _root: np.ndarray = field(default=None, repr=False, compare=False)
    _inv_root: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (0 < self.L < self.U):
            raise ParameterError("need 0 < L < U")
        mu = np.atleast_1d(np.asarray(self.mu_hat, dtype=float))
        sig = la.symmetrize(np.atleast_2d(np.asarray(self.sigma_hat, dtype=float)))
        root, inv_root = la.sqrt_and_inv_sqrt(sig, "public covariance")
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_hat", sig)
        object.__setattr__(self, "_root", root)
        object.__setattr__(self, "_inv_root", inv_root)

    @property
    def ratio(self):
        """U / L, the condition-number bound K."""
        return self.U / self.L


def public_precondition(public, beta):
    """Empirical mean and (1/d)-normalized covariance of exactly d+1 public rows."""
    x = np.asarray(public, dtype=float)
    if x.ndim != 2:
        raise InputError("public data must be a 2-D array")
    n, d = x.shape
    if d < 1 or n != d + 1:
        raise ArityError(f"preconditioning needs exactly d+1={d + 1} public rows, got {n}")
    if not np.all(np.isfinite(x)):
        raise InputError("public data contains non-finite values")
    mu = x.mean(axis=0)
    c = x - mu
    sigma = c.T @ c / d
    L, U = precondition_constants(d, beta)
    return PreconditionTransform(mu, sigma, L, U)


def robust_bounds(t, gamma):
    """Widen (L, U) for public data up to TV distance gamma from the private law.

    L_gamma = (1-gamma)^4/4 * L and U_gamma = 4/(1-gamma)^4 * U.
    """
    if not 0 <= gamma < 1:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    f = (1.0 - gamma) ** 4
    return PreconditionTransform(t.mu_hat, t.sigma_hat, f / 4 * t.L, 4 / f * t.U, gamma)


def mean_norm_bound(t, beta):
    """Bound on ||mu_Y|| after the transform, at preconditioning failure beta.

    sqrt(U/L) * sqrt(5 ln(3/beta)), plus sqrt(U/L) * sqrt(10 gamma/(1-gamma))
    for a robust transform.
    """
    base = math.sqrt(5.0 * math.log(3.0 / beta))
    if t.gamma > 0:
        base += math.sqrt(10.0 * t.gamma / (1.0 - t.gamma))
    return math.sqrt(t.ratio) * base


def apply_transform(x, t):
    """Rows mapped to (1/sqrt(L)) sigma_hat^{-1/2} (x - mu_hat)."""
    x = np.asarray(x, dtype=float)
    return (x - t.mu_hat) @ t._inv_root / math.sqrt(t.L)


def transform_params(p, t):
    """Parameters of the transformed distribution."""
    a = t._inv_root / math.sqrt(t.L)
    return GaussianParams(a @ (p.mean - t.mu_hat), la.symmetrize(a @ p.cov @ a))


def invert_params(p, t):
    """Map parameters estimated in transformed space back to data space."""
    s = math.sqrt(t.L)
    mean = s * (t._root @ p.mean) + t.mu_hat
    cov = t.L * (t._root @ p.cov @ t._root)
    return GaussianParams(mean, la.symmetrize(cov))


# ---------------------------------------------------------------------------
# Inner learner


def gaussian_norm_radius(d, beta):
    """sqrt(d + 2 sqrt(d ln(1/beta)) + 2 ln(1/beta)): a N(0, I_d) draw has norm
    at most this with probability >= 1 - beta."""
    lg = math.log(1.0 / beta)
    return math.sqrt(d + 2 * math.sqrt(d * lg) + 2 * lg)


def clip_mean_sensitivity(radius, n):
    """L2 sensitivity 2B/n of the mean of n rows clipped to radius B."""
    return 2.0 * radius / n


def _as_budget(rho):
    return rho if isinstance(rho, PrivacyBudget) else PrivacyBudget.zcdp(rho)


def single_shot_clip_radius(n, d, bounds, beta):
    """B = R + sqrt(K) (sqrt(d) + sqrt(2 ln(4n/beta)))."""
    return bounds.R + math.sqrt(bounds.K) * (math.sqrt(d) + math.sqrt(2 * math.log(4 * n / beta)))


def _single_shot(y, bounds, beta, budget, rng, accountant):
    n, d = y.shape
    B = single_shot_clip_radius(n, d, bounds, beta)
    half = budget.scaled(1, 2)
    mean = la.clip_rows(y, B).mean(axis=0)
    mean = gaussian_mechanism(mean, clip_mean_sensitivity(B, n), half, rng, accountant, "mean")
    z = la.clip_rows(y - mean, 2 * B)
    second = z.T @ z / n
    second = gaussian_mechanism(la.symmetrize(second), 2 * (2 * B) ** 2 / n, half, rng,
                                accountant, "second moment")
    return GaussianParams(mean, la.psd_floor(second))


def private_norm_quantile(norms, hi, budget, rng, frac=0.02, bins=80, accountant=None):
    """Smallest edge of a log-spaced grid below which all but about ``frac``
    of the norms fall, found from a noisy histogram.

    The grid has quarter-octave spacing and ends at ``hi``; values above hi
    land in an overflow bin. Changing one row moves at most one unit of count
    between two bins, so the histogram has L2 sensitivity sqrt(2).
    """
    m = norms.shape[0]
    edges = hi * 2.0 ** (-(bins - np.arange(bins + 1)) / 4.0)
    counts = np.bincount(np.searchsorted(edges, norms, side="left"), minlength=bins + 2)
    noisy = gaussian_mechanism(counts.astype(float), math.sqrt(2.0), budget, rng,
                               accountant, "norm histogram")
    tails = np.cumsum(noisy[::-1])[::-1]  # tails[i] = noisy count in bins >= i
    ok = np.nonzero(tails[1:bins + 2] <= frac * m)[0]
    return float(edges[ok[0]]) if ok.size else float(hi)


def _mean_schedule(r0, gam, n, d, budget, beta):
    """Pick the number of clip-and-noise mean rounds from public quantities only."""
    lg = math.sqrt(d) + math.sqrt(2 * math.log(8.0 / beta))
    best = None
    for rounds in range(1, 9):
        f = gaussian_sigma(1.0, budget.scaled(1, rounds))
        r = r0
        for _ in range(rounds):
            sigma = clip_mean_sensitivity(r + gam, n) * f
            r = 1.5 * (sigma * lg + 1.25 * lg / math.sqrt(n))
        if best is None or r < best[1] * 0.98:
            best = (rounds, r)
    return best[0]


def _iterative(y, bounds, beta, budget, rng, accountant):
    """Private preconditioning rounds, then mean, then the final covariance."""
    n, d = y.shape
    pre_budget = budget.scaled(3, 8)
    mean_budget = budget.scaled(1, 8)
    cov_budget = budget.scaled(1, 2)

    # Rounds that learn a whitening map A from mean-free paired differences.
    pairs = n // 2
    diff = (y[0:2 * pairs:2] - y[1:2 * pairs:2]) / math.sqrt(2.0)
    rounds = min(4, max(1, math.ceil(math.log10(bounds.K) / 2)))
    beta_r = beta / (4 * rounds)
    gam = gaussian_norm_radius(d, beta_r / max(pairs, 1))
    a = np.eye(d)
    for t in range(rounds):
        part = pre_budget.scaled(1, rounds)
        w = diff @ a.T
        hi = gam * (math.sqrt(bounds.K) if t == 0 else 4.0)
        c = private_norm_quantile(la.row_norms(w), hi, part.scaled(1, 4), rng,
                                  accountant=accountant)
        wc = la.clip_rows(w, c)
        cov_part = part.scaled(3, 4)
        z = gaussian_mechanism(la.symmetrize(wc.T @ wc / pairs), 2 * c * c / pairs, cov_part,
                               rng, accountant, "covariance round")
        sigma = gaussian_sigma(2 * c * c / pairs, cov_part)
        z = la.psd_floor(z)
        eta = sigma * (2 * math.sqrt(d) + math.sqrt(2 * math.log(1 / beta_r)))
        a = la.inv_sqrt_floored(z + eta * np.eye(d)) @ a

    # Mean in whitened coordinates, shrinking the search ball each round.
    w = y @ a.T
    gam = 1.25 * gaussian_norm_radius(d, beta / (4 * n))
    r = float(np.linalg.norm(a, 2)) * bounds.R
    mean_rounds = _mean_schedule(r, gam, n, d, mean_budget, beta)
    lg = math.sqrt(d) + math.sqrt(2 * math.log(8.0 * mean_rounds / beta))
    center = np.zeros(d)
    for _ in range(mean_rounds):
        part = mean_budget.scaled(1, mean_rounds)
        rad = r + gam
        est = la.clip_rows(w, rad, center).mean(axis=0)
        center = gaussian_mechanism(est, clip_mean_sensitivity(rad, n), part, rng,
                                    accountant, "mean round")
        sigma = gaussian_sigma(clip_mean_sensitivity(rad, n), part)
        r = 1.5 * (sigma * lg + 1.25 * lg / math.sqrt(n))

    # Final second moment about the released mean.
    v = la.clip_rows(w - center, gam)
    z = gaussian_mechanism(la.symmetrize(v.T @ v / n), 2 * gam * gam / n, cov_budget, rng,
                           accountant, "covariance")
    a_inv = np.linalg.inv(a)
    mean = a_inv @ center
    cov = la.psd_floor(a_inv @ la.psd_floor(z) @ a_inv.T)
    return GaussianParams(mean, cov)


def bounded_zcdp_gaussian_learner(y, bounds, alpha, beta, rho, rng, method="iterative",
                                  accountant=None):
    """Private Gaussian estimate from rows with ||mu|| <= R and I <= Sigma <= K I.

    ``rho`` is a zCDP parameter or any :class:`PrivacyBudget`; the whole call
    spends exactly that budget.

    ``method="single_shot"`` clips once at the worst-case radius B, releases
    a noisy mean at half the budget and a noisy second moment about it at the
    other half. The default ``"iterative"`` method first learns a whitening
    map over a few private rounds (noisy histogram of row norms to choose a
    clip radius, then a noisy covariance), so that the final clip radius
    tracks the data rather than the worst case; this is what makes the
    learner usable when K is in the tens of thousands or more.

    ``alpha`` is accepted for interface symmetry; accuracy is governed by n.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError("data must be a 2-D array")
    n, d = y.shape
    if n < 2:
        raise ArityError("the learner needs at least 2 rows")
    if not np.all(np.isfinite(y)):
        raise InputError("data contains non-finite values")
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    budget = _as_budget(rho)
    with spend_group(accountant, "seq", "gaussian learner"):
        if method == "single_shot":
            return _single_shot(y, bounds, beta, budget, rng, accountant)
        if method == "iterative":
            return _iterative(y, bounds, beta, budget, rng, accountant)
    raise ParameterError(f"unknown learner method {method!r}")


def pub_dp_gaussian_estimator(public, private, alpha, beta, budget, gamma=0.0, rng=None,
                              method="iterative", accountant=None):
    """Estimate N(mu, Sigma) from d+1 public rows and n private rows.

    The public rows build the preconditioner at failure beta/2 (widened by
    :func:`robust_bounds` when gamma > 0), the learner runs at beta/2 on the
    transformed private rows, and its output is mapped back. Only the
    private rows are protected.
    """
    if not 0 <= gamma < 1:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    t = public_precondition(public, beta / 2)
    if gamma > 0:
        t = robust_bounds(t, gamma)
    bounds = RangeBounds(mean_norm_bound(t, beta / 2), t.ratio)
    y = apply_transform(private, t)
    est = bounded_zcdp_gaussian_learner(y, bounds, alpha, beta / 2, budget, rng, method,
                                        accountant)
    return invert_params(est, t)


def one_sample_mean_estimator(public_sample, private, alpha, beta, rho, rng, accountant=None):
    """Mean of N(mu, I) from one public draw and n private rows.

    The public draw is within R = radius(d, beta/2) of mu, so after shifting
    by it every private row is within R + radius(d, beta/(2n)) of the origin
    with high probability; rows are clipped there and their mean released
    with the Gaussian mechanism.
    """
    x0 = np.atleast_1d(np.asarray(public_sample, dtype=float))
    x = np.asarray(private, dtype=float)
    if x.ndim != 2 or x.shape[1] != x0.shape[0]:
        raise ArityError("private rows must match the public sample's dimension")
    n, d = x.shape
    if n < 1:
        raise ArityError("need at least one private row")
    R = gaussian_norm_radius(d, beta / 2)
    lam = R + gaussian_norm_radius(d, beta / (2 * n))
    shifted = la.clip_rows(x - x0, lam)
    noisy = gaussian_mechanism(shifted.mean(axis=0), clip_mean_sensitivity(lam, n),
                               _as_budget(rho), rng, accountant, "mean")
    return noisy + x0
