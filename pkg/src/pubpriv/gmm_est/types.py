"""Data types for mixture clustering and estimation."""

from dataclasses import dataclass, field

import numpy as np

from ..dp_core import gaussian_sigma
from ..errors import InputError, ParameterError
from ..gauss_est import GaussianParams


@dataclass(frozen=True)
class Ball:
    """Closed ball {x : ||x - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ParameterError(f"ball radius must be positive and finite, got {self.radius}")

    def contains(self, x):
        """Boolean mask of the rows of x inside the ball."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        return np.linalg.norm(x - self.center, axis=1) <= self.radius


@dataclass(frozen=True)
class MixtureParams:
    """Mixture components as (GaussianParams, weight) pairs.

    ``failures`` lists (cluster index, reason) for components an estimator
    could not produce; it is empty for ground-truth mixtures.
    """

    components: tuple
    w_min: float = None
    failures: tuple = field(default=(), compare=False)

    def __post_init__(self):
        comps = tuple((p, float(w)) for p, w in self.components)
        if not comps:
            raise ParameterError("a mixture needs at least one component")
        dims = {p.dim for p, _ in comps}
        if len(dims) != 1:
            raise InputError("components have different dimensions")
        ws = np.array([w for _, w in comps])
        if np.any(ws <= 0) or np.any(ws > 1) or abs(ws.sum() - 1) > 1e-9:
            raise ParameterError("weights must lie in (0, 1] and sum to 1")
        if self.w_min is not None and np.any(ws < self.w_min - 1e-12):
            raise ParameterError("a weight is below w_min")
        object.__setattr__(self, "components", comps)

    @property
    def k(self):
        return len(self.components)

    @property
    def dim(self):
        return self.components[0][0].dim

    @property
    def weights(self):
        return np.array([w for _, w in self.components])

    @property
    def params(self):
        return [p for p, _ in self.components]

    def to_dict(self):
        return {"components": [{"mean": p.mean.tolist(), "cov": p.cov.tolist(), "weight": w}
                               for p, w in self.components]}

    @classmethod
    def from_dict(cls, obj):
        comps = [(GaussianParams(c["mean"], c["cov"]), c["weight"]) for c in obj["components"]]
        return cls(tuple(comps))


@dataclass
class Partition:
    """Index sets into the private dataset, one per found cluster.

    ``balls`` holds, for each cluster, the superclustering ball it was banked
    from (hard pipeline; the cluster points lie inside it) and
    ``public_clusters`` the matching public indices.
    """

    clusters: list
    balls: list = field(default_factory=list)
    public_clusters: list = field(default_factory=list)

    def __post_init__(self):
        self.clusters = [np.asarray(c, dtype=np.int64) for c in self.clusters]
        self.public_clusters = [np.asarray(c, dtype=np.int64) for c in self.public_clusters]

    def validate(self, n):
        """Raise unless clusters are disjoint subsets of range(n)."""
        seen = np.zeros(n, dtype=bool)
        for c in self.clusters:
            if c.size and (c.min() < 0 or c.max() >= n):
                raise InputError("cluster index out of range")
            if np.any(seen[c]) or np.unique(c).size != c.size:
                raise InputError("clusters overlap")
            seen[c] = True
        return True


def f_pca(budget):
    """Per-unit-sensitivity noise multiplier: 1/sqrt(2 rho) or sqrt(2 ln(2/delta))/eps."""
    return gaussian_sigma(1.0, budget)


@dataclass(frozen=True)
class PcaConfig:
    """Target dimension ell and clip radius r for private PCA."""

    ell: int
    radius: float
    noise_fn: object = f_pca

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ParameterError("ell must be a positive integer")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ParameterError("PCA clip radius must be positive and finite")

    def sigma(self, budget):
        """sigma_P = 2 r^2 f_PCA(budget)."""
        return 2.0 * self.radius ** 2 * self.noise_fn(budget)

