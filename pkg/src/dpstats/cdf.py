"""Private CDF estimation on {1, ..., D} with the binary-tree mechanism.

For a domain padded to D = 2^L, level ``l`` (0 <= l < L) holds a histogram
of the sample with 2^(L-l) consecutive bins of width 2^l; bin ``j`` (1-based)
covers {(j-1) 2^l + 1, ..., j 2^l}. That is 2D - 2 counts in total. Any
prefix {1, ..., j} is a disjoint union of a few of these bins, so the CDF is
a sparse linear function of the tree and noisy trees give noisy CDFs whose
per-point variance grows only with the number of parts.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import NamedTuple

import numpy as np

from dpstats.distributions import check_cdf_dataset
from dpstats.privacy import (PrivacyParams, RngLike, Sensitivity,
                             as_random_source, gaussian_noise_scale)


class IntervalRef(NamedTuple):
  """Tree bin ``index`` (1-based) at ``level``: {(index-1) 2^level + 1, ..., index 2^level}."""

  level: int
  index: int

  @property
  def lo(self) -> int:
    return (self.index - 1) * 2**self.level + 1

  @property
  def hi(self) -> int:
    return self.index * 2**self.level


def padded_size(D: int) -> int:
  """Smallest power of two >= max(D, 2)."""
  if D < 1:
    raise ValueError(f"D must be >= 1, got {D}")
  return max(2, 1 << (D - 1).bit_length())


def num_levels(D: int) -> int:
  return padded_size(D).bit_length() - 1


@dataclasses.dataclass(eq=False)
class DyadicTree:
  """Per-level interval counts of a sample.

  ``counts[l][j-1]`` is the number of sample points in bin ``(l, j)``; the
  normalized statistic f_{l,j} is that count divided by ``n``. Exact trees
  hold integer-valued counts, which keeps CDF reconstruction bit-exact.

  Attributes:
    counts: One array per level; level l has ``2**(depth - l)`` entries.
    n: Sample size.
  """

  counts: list[np.ndarray]
  n: int

  def __post_init__(self):
    if not self.counts:
      raise ValueError("tree needs at least one level")
    depth = len(self.counts)
    for lvl, c in enumerate(self.counts):
      if np.shape(c) != (2**(depth - lvl),):
        raise ValueError(f"level {lvl} should have {2**(depth - lvl)} entries, "
                         f"got shape {np.shape(c)}")
    if self.n < 1:
      raise ValueError(f"n must be >= 1, got {self.n}")
    self.counts = [np.asarray(c, dtype=np.float64) for c in self.counts]

  @property
  def depth(self) -> int:
    return len(self.counts)

  @property
  def domain_size(self) -> int:
    return 2**self.depth

  @property
  def levels(self) -> list[np.ndarray]:
    """Normalized statistics f_{l, .} for every level."""
    return [c / self.n for c in self.counts]

  def f(self, level: int, index: int) -> float:
    return float(self.counts[level][index - 1] / self.n)

  def flat(self) -> np.ndarray:
    """All 2D - 2 normalized entries, level 0 first."""
    return np.concatenate(self.levels)

  def is_consistent(self, atol: float = 0.0) -> bool:
    """Checks parent = left child + right child at every level."""
    for lvl in range(self.depth - 1):
      pairs = self.counts[lvl].reshape(-1, 2).sum(axis=1)
      if not np.allclose(pairs, self.counts[lvl + 1], rtol=0.0, atol=atol):
        return False
    return True

  def to_dict(self) -> dict:
    return {"n": self.n, "levels": [lv.tolist() for lv in self.levels]}


def build_tree_counts(data, D: int) -> DyadicTree:
  """Exact tree of interval counts; D is padded up to a power of two."""
  data = check_cdf_dataset(data, D)
  size = padded_size(D)
  leaf = np.bincount(data - 1, minlength=size).astype(np.float64)
  counts = [leaf]
  while counts[-1].size > 2:
    counts.append(counts[-1].reshape(-1, 2).sum(axis=1))
  return DyadicTree(counts, int(data.size))


def tree_sensitivity(D: int, n: int) -> Sensitivity:
  """l2-sensitivity of the normalized tree: sqrt(2 log2(D)) / n.

  Moving one point changes at most two bins per level, each by 1/n.
  """
  if n < 1:
    raise ValueError(f"n must be >= 1, got {n}")
  return Sensitivity(math.sqrt(2.0 * num_levels(D)) / n)


def noisy_tree(tree: DyadicTree, p: PrivacyParams, rng: RngLike) -> DyadicTree:
  """Gaussian mechanism on every normalized tree entry.

  Noise for level ``l`` comes from substream ``l`` of ``rng``, so the result
  does not depend on the order in which levels are processed.
  """
  sigma = gaussian_noise_scale(tree_sensitivity(tree.domain_size, tree.n), p)
  rng = as_random_source(rng)
  noisy = []
  for lvl, c in enumerate(tree.counts):
    z = rng.substream(lvl).standard_normal(c.size)
    # Noise is added on the count scale: f + sigma z == (c + n sigma z) / n.
    noisy.append(c + (tree.n * sigma) * z if sigma > 0 else c.copy())
  return DyadicTree(noisy, tree.n)


def dyadic_decompose(j: int, D: int) -> list[IntervalRef]:
  """Splits {1, ..., j} into disjoint tree bins, widest first.

  Follows the binary expansion of j. The full domain j = 2^L is not a stored
  bin, so it comes back as the two top-level halves.
  """
  size = padded_size(D)
  if not 1 <= j <= size:
    raise ValueError(f"j={j} outside 1..{D}")
  depth = num_levels(D)
  if j == size:
    return [IntervalRef(depth - 1, 1), IntervalRef(depth - 1, 2)]
  parts = []
  start = 0
  for lvl in range(depth - 1, -1, -1):
    width = 1 << lvl
    if j & width:
      parts.append(IntervalRef(lvl, start // width + 1))
      start += width
  return parts


@functools.lru_cache(maxsize=None)
def _prefix_plan(depth: int):
  """Vectorized dyadic_decompose for all j = 1..2^depth.

  Returns, per level, ``(idx, used, idx[used])`` where ``idx`` is the
  0-based bin index each prefix uses at that level, or -1 where unused. The last prefix (the whole domain) is
  left to the caller.
  """
  size = 2**depth
  j = np.arange(1, size + 1)
  plan = []
  for lvl in range(depth):
    width = 1 << lvl
    use = (j & width) != 0
    # The bin starts after the higher bits of j: (j >> (lvl+1)) << (lvl+1).
    idx = np.where(use, ((j >> (lvl + 1)) << (lvl + 1)) // width, -1)
    idx.flags.writeable = False
    used = idx >= 0
    used.flags.writeable = False
    plan.append((idx, used, idx[used]))
  return tuple(plan)


def reconstruct_cdf(tree: DyadicTree, D: int | None = None) -> np.ndarray:
  """CDF implied by a (possibly noisy) tree, as sparse sums of tree bins.

  On an exact tree this equals the empirical CDF bit-for-bit. Returns the
  first ``D`` points (default: the whole padded domain).
  """
  size = tree.domain_size
  if D is None:
    D = size
  if padded_size(D) != size:
    raise ValueError(f"tree covers a domain of {size}, incompatible with D={D}")
  plan = _prefix_plan(tree.depth)
  total = np.zeros(size)
  # Widest bins first, matching dyadic_decompose's summation order.
  for lvl in range(tree.depth - 1, -1, -1):
    _, used, bins = plan[lvl]
    total[used] += tree.counts[lvl][bins]
  # j = 2^depth: the two top-level halves stand in for the missing root.
  total[-1] = tree.counts[-1][0] + tree.counts[-1][1]
  return (total / tree.n)[:D]


def postprocess_monotone(raw) -> np.ndarray:
  """Clamps to [0, 1] then takes the running maximum.

  Never increases the l-infinity distance to any non-decreasing,
  [0, 1]-valued target.
  """
  raw = np.asarray(raw, dtype=np.float64)
  return np.maximum.accumulate(np.clip(raw, 0.0, 1.0)) if raw.size else raw


def private_cdf(data, D: int, p: PrivacyParams, rng: RngLike) -> np.ndarray:
  """(epsilon, delta)-DP estimate of the CDF of a sample on {1, ..., D}."""
  tree = build_tree_counts(data, D)
  return postprocess_monotone(reconstruct_cdf(noisy_tree(tree, p, rng), D))


def cdf_error_bound(D: int, n: int, p: PrivacyParams,
                    sampling_const: float = 1.0,
                    noise_const: float = 3.0) -> float:
  """c1 sqrt(1/n) + c2 log2(D)^{3/2} sqrt(ln(1/delta)) / (eps n)."""
  return (sampling_const * math.sqrt(1.0 / n) + noise_const *
          num_levels(D)**1.5 * math.sqrt(math.log(1.0 / p.delta)) /
          (p.epsilon * n))
