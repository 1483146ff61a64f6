import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpstats.privacy import (PrivacyParams, RandomSource, Sensitivity,
                             as_random_source, gaussian_mechanism,
                             gaussian_noise_scale)

from conftest import GOLDEN_SEED

SIGMA_SQ_40 = 2 * math.log(40)  # Delta=1, eps=1, delta=0.05


class TestParams:

  @pytest.mark.parametrize("eps,delta", [(0, 0.1), (-1, 0.1), (1, 0), (1, 1),
                                         (1, 1.5), (math.inf, 0.1), (1, math.nan)])
  def test_invalid_budget(self, eps, delta):
    with pytest.raises(ValueError):
      PrivacyParams(eps, delta)

  @pytest.mark.parametrize("l2", [-1.0, math.inf, math.nan])
  def test_invalid_sensitivity(self, l2):
    with pytest.raises(ValueError):
      Sensitivity(l2)


class TestNoiseScale:

  def test_zero_sensitivity(self):
    assert gaussian_noise_scale(Sensitivity(0), PrivacyParams(1, 0.05)) == 0

  def test_unit_case(self):
    sigma = gaussian_noise_scale(Sensitivity(1), PrivacyParams(1, 0.05))
    assert sigma**2 == pytest.approx(7.3778, abs=1e-4)
    assert sigma**2 == pytest.approx(SIGMA_SQ_40, rel=1e-15)

  def test_scale_invariance(self):
    a = gaussian_noise_scale(Sensitivity(2), PrivacyParams(2, 0.05))
    assert a**2 == pytest.approx(SIGMA_SQ_40, rel=1e-12)

  def test_rejects_bad_delta_even_when_unchecked(self):
    # Bypass the dataclass checks to reach the formula guard directly.
    p = object.__new__(PrivacyParams)
    object.__setattr__(p, "epsilon", 1.0)
    object.__setattr__(p, "delta", 2.0)
    with pytest.raises(ValueError):
      gaussian_noise_scale(Sensitivity(1), p)

  @given(st.floats(0, 100), st.floats(0.01, 50), st.floats(1e-9, 0.99))
  def test_formula(self, l2, eps, delta):
    sigma = gaussian_noise_scale(Sensitivity(l2), PrivacyParams(eps, delta))
    assert sigma == pytest.approx(math.sqrt(2 * math.log(2 / delta)) * l2 / eps)


class TestRandomSource:

  def test_determinism(self):
    a = RandomSource(7).standard_normal(5)
    b = RandomSource(7).standard_normal(5)
    assert a.tobytes() == b.tobytes()

  def test_substreams_independent_of_parent_draws(self):
    root = RandomSource(7)
    before = root.substream(3, 1).random(4)
    root.random(100)
    after = root.substream(3, 1).random(4)
    np.testing.assert_array_equal(before, after)

  def test_substreams_differ(self):
    root = RandomSource(7)
    assert not np.array_equal(root.substream(0).random(4), root.substream(1).random(4))
    assert not np.array_equal(RandomSource(7).random(4), RandomSource(8).random(4))

  def test_seed_range(self):
    RandomSource(2**64 - 1)
    with pytest.raises(ValueError):
      RandomSource(2**64)
    with pytest.raises(ValueError):
      RandomSource(-1)

  def test_coercion(self):
    r = RandomSource(3)
    assert as_random_source(r) is r
    assert as_random_source(3).seed == 3
    assert as_random_source(None).seed == 0


class TestGaussianMechanism:

  def test_zero_noise(self):
    out = gaussian_mechanism([0.0, 0.0], Sensitivity(0), PrivacyParams(1, 0.05), 1)
    np.testing.assert_array_equal(out, [0.0, 0.0])

  def test_shape_preserved(self, rng):
    assert gaussian_mechanism(np.zeros(7), Sensitivity(1), PrivacyParams(1, 0.1), rng).shape == (7,)

  def test_golden(self):
    out = gaussian_mechanism([0.5, -1.0, 2.0], Sensitivity(1), PrivacyParams(1, 0.05),
                             RandomSource(GOLDEN_SEED))
    np.testing.assert_array_equal(
        out, [-2.967223804154683, -3.7950911367440985, 3.72279258216482])

  def test_rejects_nonfinite(self, rng):
    with pytest.raises(ValueError):
      gaussian_mechanism([np.nan], Sensitivity(1), PrivacyParams(1, 0.1), rng)

  def test_noise_distribution(self):
    n = 100_000
    p = PrivacyParams(1, 0.05)
    out = gaussian_mechanism(np.zeros(n), Sensitivity(1), p, RandomSource(99))
    z = out / gaussian_noise_scale(Sensitivity(1), p)
    assert abs(z.mean()) < 4 / math.sqrt(n)
    assert z.var(ddof=1) == pytest.approx(1.0, rel=0.03)
    assert np.var(out, ddof=1) == pytest.approx(SIGMA_SQ_40, rel=0.03)
