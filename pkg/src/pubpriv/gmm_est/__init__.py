"""Clustering and estimation for separated Gaussian mixtures with public data."""

from .clustering import dp_hard_clustering, easy_clustering, easy_radii
from .estimate import (EASY, HARD, estimate_gmm_easy, estimate_gmm_hard, estimate_mixture,
                       hard_bounds, weight_rule)
from .partition import dp_low_dim_partitioner, low_dim_partitioner, q_priv, q_pub, radius_schedule
from .pca import clipped_moment, private_pca
from .supercluster import supercluster
from .types import Ball, MixtureParams, Partition, PcaConfig, f_pca

__all__ = [
    "dp_hard_clustering", "easy_clustering", "easy_radii",
    "EASY", "HARD", "estimate_gmm_easy", "estimate_gmm_hard", "estimate_mixture", "hard_bounds",
    "weight_rule",
    "dp_low_dim_partitioner", "low_dim_partitioner", "q_priv", "q_pub", "radius_schedule",
    "clipped_moment", "private_pca", "supercluster",
    "Ball", "MixtureParams", "Partition", "PcaConfig", "f_pca",
]
