"""Privacy budgets, noise calibration and the Gaussian mechanism.

This module is deliberately policy-free: callers supply the l2-sensitivity
of whatever statistic they release. All randomness in the package flows
through :class:`RandomSource`, a seeded counter-based generator that can be
split into independent, reproducible substreams.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Union

import numpy as np

_U64_MAX = 2**64 - 1


@dataclasses.dataclass(frozen=True)
class PrivacyParams:
  """An (epsilon, delta) privacy budget.

  Attributes:
    epsilon: Privacy loss bound, strictly positive.
    delta: Failure probability, in the open interval (0, 1).
  """

  epsilon: float
  delta: float

  def __post_init__(self):
    if not math.isfinite(self.epsilon) or self.epsilon <= 0:
      raise ValueError(f"epsilon must be finite and > 0, got {self.epsilon}")
    if not math.isfinite(self.delta) or not 0 < self.delta < 1:
      raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclasses.dataclass(frozen=True)
class Sensitivity:
  """l2-sensitivity of a statistic: sup over adjacent X, X' of |f(X)-f(X')|_2."""

  l2: float

  def __post_init__(self):
    if not math.isfinite(self.l2) or self.l2 < 0:
      raise ValueError(f"l2 sensitivity must be finite and >= 0, got {self.l2}")


class RandomSource:
  """Deterministic, splittable random stream.

  Backed by numpy's Philox counter-based bit generator keyed through a
  ``SeedSequence``, so the output depends only on ``(seed, key)`` and the
  sequence of draw requests, never on platform or scheduling.
  """

  def __init__(self, seed: int, key: tuple[int, ...] = ()):
    if not 0 <= int(seed) <= _U64_MAX:
      raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    self._seed = int(seed)
    self._key = tuple(int(k) for k in key)
    seq = np.random.SeedSequence(entropy=self._seed, spawn_key=self._key)
    self._gen = np.random.Generator(np.random.Philox(seq))

  @property
  def seed(self) -> int:
    return self._seed

  @property
  def key(self) -> tuple[int, ...]:
    return self._key

  @property
  def generator(self) -> np.random.Generator:
    """Underlying numpy generator, for draws not wrapped here."""
    return self._gen

  def substream(self, *key: int) -> RandomSource:
    """Returns an independent stream identified by ``key`` below this one.

    Substreams are a pure function of (seed, parent key, key); drawing from
    the parent does not change them.
    """
    return RandomSource(self._seed, self._key + tuple(int(k) for k in key))

  def standard_normal(self, size=None) -> np.ndarray:
    return self._gen.standard_normal(size)

  def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
    return self._gen.uniform(low, high, size)

  def random(self, size=None) -> np.ndarray:
    return self._gen.random(size)

  def integers(self, low, high=None, size=None) -> np.ndarray:
    return self._gen.integers(low, high, size)

  def __repr__(self):
    return f"RandomSource(seed={self._seed}, key={self._key})"


RngLike = Union[RandomSource, int, None]


def as_random_source(rng: RngLike) -> RandomSource:
  """Coerces an int seed (or None, meaning seed 0) into a RandomSource."""
  if isinstance(rng, RandomSource):
    return rng
  if rng is None:
    return RandomSource(0)
  return RandomSource(int(rng))


def gaussian_noise_scale(sens: Sensitivity, p: PrivacyParams) -> float:
  """Standard deviation of Gaussian noise giving (epsilon, delta)-DP.

  sigma = sqrt(2 ln(2 / delta)) * l2 / epsilon, with the natural log.

  Raises:
    ValueError: if the log argument is non-positive or any input is not
      finite.
  """
  l2, eps, delta = float(sens.l2), float(p.epsilon), float(p.delta)
  if not all(math.isfinite(x) for x in (l2, eps, delta)):
    raise ValueError("noise scale inputs must be finite")
  if delta <= 0 or delta >= 2:
    raise ValueError(f"delta={delta} makes ln(2/delta) non-positive or undefined")
  if eps <= 0:
    raise ValueError(f"epsilon must be > 0, got {eps}")
  return math.sqrt(2.0 * math.log(2.0 / delta)) * l2 / eps


def gaussian_mechanism(value, sens: Sensitivity, p: PrivacyParams,
                       rng: RngLike) -> np.ndarray:
  """Releases ``value`` plus i.i.d. N(0, sigma^2) noise per coordinate.

  The caller is responsible for ``sens`` being a true upper bound on the
  sensitivity of the statistic that produced ``value``.

  Args:
    value: Real vector (or scalar) to privatize.
    sens: l2-sensitivity of the statistic.
    p: Privacy budget.
    rng: Random source or integer seed.

  Returns:
    Float array with the same shape as ``value``.
  """
  value = np.asarray(value, dtype=np.float64)
  if not np.all(np.isfinite(value)):
    raise ValueError("value must be finite")
  sigma = gaussian_noise_scale(sens, p)
  noise = as_random_source(rng).standard_normal(value.shape)
  if sigma == 0.0:
    return value.copy()
  return value + sigma * noise
