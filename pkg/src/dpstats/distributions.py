"""Data generation, empirical statistics and error metrics.

Datasets are plain numpy arrays:

* mean tasks: an ``(n, d)`` int8 array with entries in {-1, +1};
* CDF tasks: an ``(n,)`` int64 array with entries in {1, ..., D}.

CDFs over {1, ..., D} are length-D float arrays with ``cdf[j - 1] = Phi(j)``.
"""

from __future__ import annotations

import dataclasses
import os

import numpy as np

from dpstats.privacy import RngLike, as_random_source


@dataclasses.dataclass(frozen=True, eq=False)
class ProductDistribution:
  """Product distribution on {-1, +1}^d with coordinate means ``mu``."""

  mu: np.ndarray

  def __post_init__(self):
    mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
    if mu.ndim != 1 or mu.size < 1:
      raise ValueError("mu must be a non-empty vector")
    if not np.all(np.isfinite(mu)) or np.any(np.abs(mu) > 1):
      raise ValueError("every coordinate of mu must lie in [-1, 1]")
    object.__setattr__(self, "mu", mu)

  @property
  def d(self) -> int:
    return self.mu.size


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteDistribution:
  """Distribution on the ordered domain {1, ..., D}."""

  probs: np.ndarray

  def __post_init__(self):
    probs = np.atleast_1d(np.asarray(self.probs, dtype=np.float64))
    if probs.ndim != 1 or probs.size < 1:
      raise ValueError("probs must be a non-empty vector")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
      raise ValueError("probs must be finite and non-negative")
    if abs(probs.sum() - 1.0) > 1e-12:
      raise ValueError(f"probs must sum to 1 (got {probs.sum()!r})")
    object.__setattr__(self, "probs", probs)

  @property
  def D(self) -> int:
    return self.probs.size

  @classmethod
  def uniform(cls, D: int) -> DiscreteDistribution:
    return cls(np.full(D, 1.0 / D))

  @classmethod
  def point_mass(cls, D: int, at: int) -> DiscreteDistribution:
    if not 1 <= at <= D:
      raise ValueError(f"point mass location {at} outside 1..{D}")
    probs = np.zeros(D)
    probs[at - 1] = 1.0
    return cls(probs)

  @classmethod
  def geometric(cls, D: int, ratio: float = 0.9) -> DiscreteDistribution:
    """Truncated geometric: P(j) proportional to ratio**(j-1)."""
    w = ratio ** np.arange(D, dtype=np.float64)
    return cls(w / w.sum())


def sample_uniform_mean(d: int, rng: RngLike) -> ProductDistribution:
  """Draws mu uniformly from [-1, 1]^d (the hard prior for the lower bound)."""
  if d < 1:
    raise ValueError(f"d must be >= 1, got {d}")
  return ProductDistribution(as_random_source(rng).uniform(-1.0, 1.0, d))


def sample_product(dist: ProductDistribution, n: int, rng: RngLike) -> np.ndarray:
  """Draws n rows i.i.d. from ``dist``; Pr[+1] = (1 + mu_j) / 2 per coordinate."""
  if n < 1:
    raise ValueError(f"n must be >= 1, got {n}")
  u = as_random_source(rng).random((n, dist.d))
  return np.where(u < (1.0 + dist.mu) / 2.0, 1, -1).astype(np.int8)


def sample_discrete(dist: DiscreteDistribution, n: int, rng: RngLike) -> np.ndarray:
  """Draws n points from ``dist`` by inverse-CDF lookup."""
  if n < 1:
    raise ValueError(f"n must be >= 1, got {n}")
  cdf = np.cumsum(dist.probs)
  cdf[-1] = 1.0
  u = as_random_source(rng).random(n)
  idx = np.searchsorted(cdf, u, side="right")
  return np.minimum(idx, dist.D - 1).astype(np.int64) + 1


def check_mean_dataset(data) -> np.ndarray:
  data = np.asarray(data)
  if data.ndim == 1:
    data = data[None, :]
  if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
    raise ValueError("mean-task dataset must be a non-empty (n, d) array")
  if not np.all((data == 1) | (data == -1)):
    raise ValueError("mean-task entries must be in {-1, +1}")
  return data


def check_cdf_dataset(data, D: int) -> np.ndarray:
  data = np.asarray(data)
  if data.ndim != 1 or data.size < 1:
    raise ValueError("CDF-task dataset must be a non-empty 1-D array")
  if not np.issubdtype(data.dtype, np.integer):
    if not np.all(data == np.round(data)):
      raise ValueError("CDF-task entries must be integers")
    data = data.astype(np.int64)
  if data.min() < 1 or data.max() > D:
    raise ValueError(f"CDF-task entries must lie in 1..{D}")
  return data


def empirical_mean(data) -> np.ndarray:
  """Coordinate-wise average of a {-1, +1}^d dataset."""
  return check_mean_dataset(data).mean(axis=0, dtype=np.float64)


def empirical_cdf(data, D: int) -> np.ndarray:
  """Phi_X(j) = #{i : X_i <= j} / n for j = 1..D."""
  data = check_cdf_dataset(data, D)
  counts = np.bincount(data - 1, minlength=D).astype(np.float64)
  return np.cumsum(counts) / data.size


def true_cdf(dist: DiscreteDistribution) -> np.ndarray:
  return np.cumsum(dist.probs)


def linf_distance(a, b) -> float:
  a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
  if a.shape != b.shape:
    raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
  return float(np.max(np.abs(a - b))) if a.size else 0.0


def l2sq_error(a, b) -> float:
  a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
  if a.shape != b.shape:
    raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
  return float(np.sum((a - b) ** 2))


def save_dataset(path: str | os.PathLike, data) -> None:
  """Writes one row per line, entries separated by single spaces."""
  data = np.asarray(data)
  rows = data[:, None] if data.ndim == 1 else data
  with open(path, "w") as f:
    for row in rows:
      f.write(" ".join(str(int(v)) for v in row) + "\n")


def load_dataset(path: str | os.PathLike, kind: str = "auto") -> np.ndarray:
  """Reads a file written by :func:`save_dataset`.

  ``kind`` is "mean", "cdf" or "auto"; with "auto" a single-column file is
  read as a CDF-task dataset.
  """
  if kind not in ("auto", "mean", "cdf"):
    raise ValueError(f"unknown dataset kind {kind!r}")
  with open(path) as f:
    rows = [[int(tok) for tok in line.split()] for line in f if line.strip()]
  if not rows:
    raise ValueError(f"{path}: empty dataset")
  if len({len(r) for r in rows}) != 1:
    raise ValueError(f"{path}: ragged rows")
  arr = np.array(rows, dtype=np.int64)
  if kind == "cdf" or (kind == "auto" and arr.shape[1] == 1):
    if arr.shape[1] != 1:
      raise ValueError(f"{path}: CDF-task files have one entry per line")
    return arr[:, 0]
  return check_mean_dataset(arr.astype(np.int8))
