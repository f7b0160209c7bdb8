"""Private PCA by noisy second-moment matrix."""

import numpy as np

from .. import _linalg as la
from ..dp_core import symmetric_gaussian
from ..errors import InputError, ParameterError


def clipped_moment(z, radius):
    """Y^T Y for the rows of z truncated to the ball B(0, radius)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise InputError("data must be a 2-D array")
    y = la.clip_rows(z, radius)
    return y.T @ y


def private_pca(z, cfg, budget, rng, accountant=None, label="pca"):
    """Projector onto the top-ell eigenspace of Y^T Y + E.

    Rows are clipped to radius cfg.radius, so replacing one row moves
    Y^T Y by at most 2 r^2 in Frobenius norm; E is symmetric Gaussian noise
    with per-entry scale cfg.sigma(budget).
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise InputError("data must be a 2-D array")
    d = z.shape[1]
    if cfg.ell > d:
        raise ParameterError(f"ell={cfg.ell} exceeds the dimension {d}")
    moment = clipped_moment(z, cfg.radius)
    noisy = moment + symmetric_gaussian(d, cfg.sigma(budget), rng)
    if accountant is not None:
        accountant.spend(budget, label)
    return la.top_projector(noisy, int(cfg.ell))
