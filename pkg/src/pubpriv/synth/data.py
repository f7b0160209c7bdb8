"""Synthetic Gaussian and mixture data with hidden labels."""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.stats import ortho_group

from ..errors import InputError, ParameterError
from ..gauss_est import GaussianParams
from ..gmm_est.types import MixtureParams


@dataclass(frozen=True)
class LabeledDataset:
    """Sample rows plus optional component labels (for test oracles only)."""

    rows: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise InputError("rows must be a 2-D array")
        if not np.all(np.isfinite(rows)):
            raise InputError("rows must be finite")
        object.__setattr__(self, "rows", rows)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (rows.shape[0],) or np.any(labels < 0):
                raise InputError("labels must be nonnegative, one per row")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    @property
    def dim(self):
        return self.rows.shape[1]


def _sqrt_cov(cov):
    w, v = np.linalg.eigh(cov)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


def sample_gaussian(params, n, rng):
    """n iid draws mu + Sigma^{1/2} z using the symmetric square root."""
    z = rng.standard_normal((int(n), params.dim))
    return LabeledDataset(z @ _sqrt_cov(params.cov) + params.mean, np.zeros(int(n), dtype=np.int64))


def random_gaussian(d, spread, mean_scale, rng):
    """Random N(mu, Sigma): mu ~ N(0, mean_scale^2 I), Sigma = Q diag(lambda) Q^T, lambda ~ U[1, spread]."""
    if spread < 1:
        raise ParameterError("spread must be >= 1")
    q = ortho_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1))
    cov = (q * rng.uniform(1.0, spread, size=d)) @ q.T
    return GaussianParams(mean_scale * rng.standard_normal(d), (cov + cov.T) / 2)


def separation_bound(w_i, w_j, sigma_i, sigma_j, s):
    """(s + 10/sqrt(w_i) + 10/sqrt(w_j)) * max(sigma_i, sigma_j)."""
    return (s + 10 / math.sqrt(w_i) + 10 / math.sqrt(w_j)) * max(sigma_i, sigma_j)


def _component_sigmas(params):
    return [math.sqrt(float(np.linalg.eigvalsh(p.cov)[-1])) for p in params.params]


def _separated(means, sig, w, s):
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            dist = float(np.linalg.norm(means[i] - means[j]))
            if dist < separation_bound(w[i], w[j], sig[i], sig[j], s):
                return False
    return True


def is_separated(params, s):
    """Exact pairwise check of the separation requirement; sigma_i^2 = ||Sigma_i||_2."""
    return _separated([p.mean for p in params.params], _component_sigmas(params),
                      params.weights, s)


def assumption_dimension(n_total, k, beta):
    """8 ln^2(N k / beta), the dimension a spherical mixture needs for the flatness assumption."""
    return 8 * math.log(n_total * k / beta) ** 2


def make_separated_mixture(d, k, separation_multiplier, w_min, spread, rng, n_total=None,
                           beta=None, scale=1.0, offset_scale=0.0):
    """Random mixture whose means satisfy the pairwise separation requirement.

    Weights are w_min plus a Dirichlet share of the remaining mass.
    Covariances are scale * Q diag(lambda) Q^T with lambda uniform on
    [1, spread], so each has condition number at most ``spread``. Means sit
    on random orthonormal directions (collinear when d < k) at a common
    pairwise distance equal to the largest required bound.
    """
    if k < 1 or d < 1:
        raise ParameterError("need d >= 1 and k >= 1")
    if not 0 < w_min or k * w_min > 1 + 1e-12:
        raise ParameterError(f"infeasible weights: k * w_min = {k * w_min} > 1")
    if spread < 1:
        raise ParameterError("spread must be >= 1")
    if n_total is not None and beta is not None and d < assumption_dimension(n_total, k, beta):
        warnings.warn(f"d={d} is below 8 ln^2(Nk/beta) = {assumption_dimension(n_total, k, beta):.0f}; "
                      "the flatness assumption will not hold", stacklevel=2)
    extra = max(0.0, 1.0 - k * w_min)
    w = w_min + extra * rng.dirichlet(np.ones(k))
    w = w / w.sum()
    covs, sig = [], []
    for _ in range(k):
        q = ortho_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1))
        lam = scale * rng.uniform(1.0, spread, size=d)
        c = (q * lam) @ q.T
        covs.append((c + c.T) / 2)
        sig.append(math.sqrt(float(np.linalg.eigvalsh(covs[-1])[-1])))
    need = max((separation_bound(w[i], w[j], sig[i], sig[j], separation_multiplier)
                for i in range(k) for j in range(i + 1, k)), default=0.0)
    offset = offset_scale * rng.standard_normal(d)
    if d >= k:
        basis = np.linalg.qr(rng.standard_normal((d, k)))[0]
        means = [offset + need / math.sqrt(2) * basis[:, i] for i in range(k)]
    else:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        means = [offset + i * need * u for i in range(k)]
    grow = 1.0
    moved = means
    while not _separated(moved, sig, w, separation_multiplier):
        grow *= 1 + 1e-9
        moved = [offset + grow * (mu - offset) for mu in means]
    params = MixtureParams(tuple((GaussianParams(mu, c), wi) for mu, c, wi in zip(moved, covs, w)),
                           w_min=w_min)
    if not is_separated(params, separation_multiplier):
        raise ParameterError("could not place separated means")
    return params


def sample_mixture(params, n, rng):
    """n draws: component labels by the weights, then a Gaussian draw per row."""
    n = int(n)
    labels = rng.choice(params.k, size=n, p=params.weights)
    rows = np.empty((n, params.dim))
    for i, p in enumerate(params.params):
        idx = np.nonzero(labels == i)[0]
        rows[idx] = sample_gaussian(p, idx.size, rng).rows
    return LabeledDataset(rows, labels)
