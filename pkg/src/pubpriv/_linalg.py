"""Small symmetric-matrix helpers shared by the estimators."""

import numpy as np

from .errors import DegenerateDataError


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2


def eigh_sym(a):
    return np.linalg.eigh(symmetrize(a))


def check_nonsingular(w, what="covariance"):
    top = float(np.max(w)) if w.size else 0.0
    if not (top > 0 and float(np.min(w)) >= 1e-12 * top):
        raise DegenerateDataError(f"{what} is numerically singular")


def sqrt_and_inv_sqrt(a, what="covariance"):
    """Symmetric square root and inverse square root via eigendecomposition."""
    w, v = eigh_sym(a)
    check_nonsingular(w, what)
    s = np.sqrt(w)
    return (v * s) @ v.T, (v / s) @ v.T


def psd_floor(a):
    """Symmetrize and project onto the PSD cone, flooring eigenvalues at
    max(1e-12 * lambda_max, 1e-12)."""
    w, v = eigh_sym(a)
    floor = max(1e-12 * float(np.max(w, initial=0.0)), 1e-12)
    w = np.maximum(w, floor)
    return symmetrize((v * w) @ v.T)


def inv_sqrt_floored(a):
    """Inverse square root with eigenvalues floored as in :func:`psd_floor`."""
    w, v = eigh_sym(a)
    floor = max(1e-12 * float(np.max(w, initial=0.0)), 1e-12)
    w = np.maximum(w, floor)
    return (v / np.sqrt(w)) @ v.T


def row_norms(x):
    """Euclidean row norms that do not overflow for huge finite entries."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.zeros(x.shape[0])
    m = np.max(np.abs(x), axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.linalg.norm(x / safe[:, None], axis=1)


def clip_rows(x, radius, center=None):
    """Project each row onto the closed ball of ``radius`` about ``center``.

    Rows already inside are returned unchanged (bit for bit). Clipped rows
    end up with norm <= radius exactly.
    """
    x = np.asarray(x, dtype=float)
    y = x if center is None else x - center
    if y.shape[0] == 0:
        return y.copy() if center is None else y + center
    m = np.max(np.abs(y), axis=1)
    safe = np.where(m > 0, m, 1.0)
    unit = y / safe[:, None]
    un = np.linalg.norm(unit, axis=1)
    norms = m * un
    out = y.copy()
    over = norms > radius
    if np.any(over):
        scale = radius / un[over]
        z = unit[over] * scale[:, None]
        zn = np.linalg.norm(z, axis=1)
        # rounding can leave a norm one ulp above the radius
        while np.any(zn > radius):
            bad = zn > radius
            z[bad] *= 1.0 - 4 * np.finfo(float).eps
            zn = np.linalg.norm(z, axis=1)
        out[over] = z
    if center is None:
        return out
    return np.where(over[:, None], out + center, x)


def top_projector(a, ell):
    """Orthogonal projector onto the top-ell eigenspace of a symmetric matrix."""
    w, v = eigh_sym(a)
    top = v[:, np.argsort(w)[::-1][:ell]]
    return symmetrize(top @ top.T)
