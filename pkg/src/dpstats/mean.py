"""Private mean estimation over [-1, 1]^d: noisy empirical mean, then clamp."""

from __future__ import annotations

import math

import numpy as np

from dpstats.distributions import check_mean_dataset
from dpstats.privacy import (PrivacyParams, RngLike, Sensitivity,
                             gaussian_mechanism, gaussian_noise_scale)


def mean_sensitivity(d: int, n: int) -> Sensitivity:
  """l2-sensitivity of the empirical mean of n rows in [-1, 1]^d.

  Replacing one row moves every coordinate of the mean by at most 2/n, so
  the bound is 2 sqrt(d) / n.
  """
  if d < 1 or n < 1:
    raise ValueError(f"d and n must be >= 1, got d={d}, n={n}")
  return Sensitivity(2.0 * math.sqrt(d) / n)


def mean_noise_scale(d: int, n: int, p: PrivacyParams) -> float:
  """Per-coordinate noise std used by :func:`private_mean`."""
  return gaussian_noise_scale(mean_sensitivity(d, n), p)


def mean_error_bound(d: int, n: int, p: PrivacyParams) -> float:
  """Closed-form bound d/n + 8 d^2 ln(2/delta) / (eps^2 n^2) on the expected
  squared error of :func:`private_mean`."""
  return d / n + 8.0 * d**2 * math.log(2.0 / p.delta) / (p.epsilon**2 * n**2)


def private_mean(data, p: PrivacyParams, rng: RngLike,
                 clamp: bool = True) -> np.ndarray:
  """(epsilon, delta)-DP estimate of the mean of a {-1, +1}^d dataset.

  Args:
    data: ``(n, d)`` array with entries in {-1, +1}.
    p: Privacy budget.
    rng: Random source or integer seed.
    clamp: Project the noisy mean onto [-1, 1]^d. This is post-processing
      and can only shrink the l2 error to any mean in the cube; disable it
      only to study the raw Gaussian mechanism.

  Returns:
    Length-d float array.
  """
  data = check_mean_dataset(data)
  n, d = data.shape
  noisy = gaussian_mechanism(data.mean(axis=0, dtype=np.float64),
                             mean_sensitivity(d, n), p, rng)
  return np.clip(noisy, -1.0, 1.0) if clamp else noisy
