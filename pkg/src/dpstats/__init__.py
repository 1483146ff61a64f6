"""Differentially private mean and CDF estimation, with tracing-attack
diagnostics and a reproducible experiment harness."""

from dpstats.cdf import (DyadicTree, IntervalRef, build_tree_counts,
                         dyadic_decompose, noisy_tree, postprocess_monotone,
                         private_cdf, reconstruct_cdf, tree_sensitivity)
from dpstats.distributions import (DiscreteDistribution, ProductDistribution,
                                   empirical_cdf, empirical_mean, l2sq_error,
                                   linf_distance, load_dataset, sample_discrete,
                                   sample_product, sample_uniform_mean,
                                   save_dataset, true_cdf)
from dpstats.mean import mean_error_bound, mean_sensitivity, private_mean
from dpstats.privacy import (PrivacyParams, RandomSource, Sensitivity,
                             gaussian_mechanism, gaussian_noise_scale)

__version__ = "0.1.0"
