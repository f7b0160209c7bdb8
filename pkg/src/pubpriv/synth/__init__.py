"""Synthetic data, regularity checks, TV oracle and learning evaluation."""

from .data import (LabeledDataset, assumption_dimension, is_separated, make_separated_mixture,
                   random_gaussian, sample_gaussian, sample_mixture, separation_bound)
from .evaluate import (LearningReport, bottleneck_assignment, clean_partition, evaluate_learning,
                       exhaustive_assignment, pure_ball)
from .io import load_dataset, load_mixture, save_dataset, save_mixture
from .regularity import RegularityReport, check_regularity
from .tv import gamma_far_gaussian, tv_distance, tv_monte_carlo, tv_param_bounds

__all__ = [
    "LabeledDataset", "assumption_dimension", "is_separated", "make_separated_mixture", "random_gaussian",
    "sample_gaussian", "sample_mixture", "separation_bound",
    "LearningReport", "bottleneck_assignment", "clean_partition", "evaluate_learning",
    "exhaustive_assignment", "pure_ball",
    "load_dataset", "load_mixture", "save_dataset", "save_mixture",
    "RegularityReport", "check_regularity",
    "gamma_far_gaussian", "tv_distance", "tv_monte_carlo", "tv_param_bounds",
]
