"""Differentially private Gaussian and Gaussian-mixture estimation assisted by public data."""

from .dp_core import (Accountant, PrivacyBudget, ZeroNoise, compose, gaussian_mechanism,
                      laplace_mechanism, pcount, split_budget, stream)
from .gauss_est import (GaussianParams, PreconditionTransform, RangeBounds,
                        bounded_zcdp_gaussian_learner, one_sample_mean_estimator,
                        pub_dp_gaussian_estimator, public_precondition)
from .gmm_est import (MixtureParams, Partition, dp_hard_clustering, easy_clustering,
                      estimate_gmm_easy, estimate_gmm_hard, estimate_mixture)

__version__ = "0.1.0"

__all__ = [
    "Accountant", "PrivacyBudget", "ZeroNoise", "compose", "gaussian_mechanism",
    "laplace_mechanism", "pcount", "split_budget", "stream",
    "GaussianParams", "PreconditionTransform", "RangeBounds", "bounded_zcdp_gaussian_learner",
    "one_sample_mean_estimator", "pub_dp_gaussian_estimator", "public_precondition",
    "MixtureParams", "Partition", "dp_hard_clustering", "easy_clustering",
    "estimate_gmm_easy", "estimate_gmm_hard", "estimate_mixture",
]
