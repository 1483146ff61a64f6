import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpstats.cdf import (DyadicTree, IntervalRef, build_tree_counts,
                         cdf_error_bound, dyadic_decompose, noisy_tree,
                         padded_size, postprocess_monotone, private_cdf,
                         reconstruct_cdf, tree_sensitivity)
from dpstats.distributions import (DiscreteDistribution, empirical_cdf,
                                   linf_distance, sample_discrete)
from dpstats.privacy import PrivacyParams, RandomSource, gaussian_noise_scale

from conftest import GOLDEN_SEED


def direct_count(data, level, index):
  lo, hi = (index - 1) * 2**level + 1, index * 2**level
  return np.mean((np.asarray(data) >= lo) & (np.asarray(data) <= hi))


class TestTree:

  def test_uniform_one_per_bucket(self):
    t = build_tree_counts(np.arange(1, 9), 8)
    for lvl, val in enumerate([1 / 8, 1 / 4, 1 / 2]):
      np.testing.assert_array_equal(t.levels[lvl], val)
    assert t.flat().size == 2 * 8 - 2

  def test_point_mass(self):
    t = build_tree_counts([1, 1, 1], 4)
    np.testing.assert_array_equal(t.levels[0], [1, 0, 0, 0])
    np.testing.assert_array_equal(t.levels[1], [1, 0])

  def test_against_direct_counting(self, rng):
    data = sample_discrete(DiscreteDistribution.uniform(16), 37, rng)
    t = build_tree_counts(data, 16)
    for lvl in range(4):
      for j in range(1, 2**(4 - lvl) + 1):
        assert t.f(lvl, j) == pytest.approx(direct_count(data, lvl, j), abs=1e-15)

  @given(st.lists(st.integers(1, 32), min_size=1, max_size=40))
  def test_consistency(self, xs):
    t = build_tree_counts(xs, 32)
    assert t.is_consistent()
    assert t.levels[0].sum() == pytest.approx(1.0)

  def test_padding(self):
    t = build_tree_counts([1, 5, 6], 6)
    assert t.domain_size == 8
    assert reconstruct_cdf(t, 6).size == 6
    np.testing.assert_array_equal(reconstruct_cdf(t, 6), empirical_cdf([1, 5, 6], 6))

  def test_rejects_bad_shapes_and_data(self):
    with pytest.raises(ValueError):
      DyadicTree([np.zeros(4), np.zeros(3)], 1)
    with pytest.raises(ValueError):
      build_tree_counts([0, 2], 4)


class TestSensitivity:

  def test_values(self):
    assert tree_sensitivity(2, 1).l2**2 == pytest.approx(2)
    assert tree_sensitivity(8, 10).l2**2 == pytest.approx(6 / 100)

  @pytest.mark.parametrize("D,n", [(4, 2), (8, 2), (4, 3), (2, 3)])
  def test_exhaustive(self, D, n):
    best = 0.0
    for data in itertools.product(range(1, D + 1), repeat=n):
      base = build_tree_counts(data, D).flat()
      for i, v in itertools.product(range(n), range(1, D + 1)):
        other = list(data)
        other[i] = v
        best = max(best, np.sum((base - build_tree_counts(other, D).flat())**2))
    assert best <= tree_sensitivity(D, n).l2**2 + 1e-12
    # The bound is attained: move a point across the top split.
    assert best == pytest.approx(tree_sensitivity(D, n).l2**2)


class TestNoisyTree:

  def test_zero_noise(self):
    t = build_tree_counts(np.arange(1, 9), 8)
    nt = noisy_tree(t, PrivacyParams(1e15, 0.5), 1)
    for a, b in zip(t.levels, nt.levels):
      np.testing.assert_allclose(a, b, atol=1e-12)

  def test_golden(self):
    t = noisy_tree(build_tree_counts(np.arange(1, 9), 8), PrivacyParams(1, 0.01),
                   RandomSource(GOLDEN_SEED))
    expected = [
        [-1.5557706241042144, -0.5910706275759212, -0.000993040640464099,
         1.4832610510973447, -0.06420247024877968, 1.4774338559890847,
         0.8092636680170311, 1.5789886593338647],
        [0.39173773156761826, -1.444778835339608, 0.48114818180644947, 0.8653869394185523],
        [0.135397447481923, -0.5103035206552498]]
    for got, want in zip(t.levels, expected):
      np.testing.assert_array_equal(got, want)

  def test_noise_variance(self):
    t = build_tree_counts([1, 2, 2, 4], 4)
    p = PrivacyParams(1, 0.05)
    sigma = gaussian_noise_scale(tree_sensitivity(4, 4), p)
    root = RandomSource(21)
    flat = t.flat()
    noise = np.array([noisy_tree(t, p, root.substream(r)).flat() - flat
                      for r in range(100_000)])
    np.testing.assert_allclose(noise.var(axis=0, ddof=1), sigma**2, rtol=0.03)
    np.testing.assert_allclose(noise.mean(axis=0), 0, atol=4 * sigma / math.sqrt(1e5))

  def test_query_variance_counts_parts(self):
    D = 16
    t = build_tree_counts(np.arange(1, 17), D)
    p = PrivacyParams(1, 0.05)
    sigma = gaussian_noise_scale(tree_sensitivity(D, 16), p)
    root = RandomSource(5)
    cdfs = np.array([reconstruct_cdf(noisy_tree(t, p, root.substream(r)), D)
                     for r in range(20_000)])
    parts = np.array([len(dyadic_decompose(j, D)) for j in range(1, D + 1)])
    np.testing.assert_allclose(cdfs.var(axis=0, ddof=1), parts * sigma**2, rtol=0.06)


class TestDecompose:

  def test_paper_example(self):
    assert dyadic_decompose(7, 8) == [IntervalRef(2, 1), IntervalRef(1, 3), IntervalRef(0, 7)]

  def test_edges(self):
    assert dyadic_decompose(1, 8) == [IntervalRef(0, 1)]
    assert dyadic_decompose(8, 8) == [IntervalRef(2, 1), IntervalRef(2, 2)]
    with pytest.raises(ValueError):
      dyadic_decompose(0, 8)
    with pytest.raises(ValueError):
      dyadic_decompose(9, 8)

  @pytest.mark.parametrize("D", [4, 8, 16, 64])
  def test_partition(self, D):
    depth = int(math.log2(D))
    for j in range(1, D + 1):
      parts = dyadic_decompose(j, D)
      covered = [x for p in parts for x in range(p.lo, p.hi + 1)]
      assert sorted(covered) == list(range(1, j + 1))
      assert len(parts) <= depth
      assert all(0 <= p.level < depth for p in parts)


class TestReconstruct:

  def test_example_point_seven(self):
    t = build_tree_counts(np.arange(1, 9), 8)
    cdf = reconstruct_cdf(t, 8)
    assert cdf[6] == t.f(2, 1) + t.f(1, 3) + t.f(0, 7) == 7 / 8

  def test_zero_tree(self):
    t = DyadicTree([np.zeros(8), np.zeros(4), np.zeros(2)], 5)
    np.testing.assert_array_equal(reconstruct_cdf(t, 8), 0)

  def test_matches_explicit_decomposition(self, rng):
    # Noisy tree: vectorized reconstruction equals summing decomposition parts.
    t = noisy_tree(build_tree_counts([1, 3, 3, 9, 16], 16), PrivacyParams(1, 0.1), rng)
    cdf = reconstruct_cdf(t, 16)
    for j in range(1, 17):
      assert cdf[j - 1] == pytest.approx(
          sum(t.f(p.level, p.index) for p in dyadic_decompose(j, 16)), abs=1e-12)

  def test_oracle_equivalence_random(self):
    root = RandomSource(77)
    for t in range(200):
      r = root.substream(t)
      D = int(2**r.integers(1, 8))
      n = int(r.integers(1, 200))
      data = r.integers(1, D + 1, size=n)
      np.testing.assert_array_equal(reconstruct_cdf(build_tree_counts(data, D), D),
                                    empirical_cdf(data, D))

  def test_dimension_mismatch(self):
    with pytest.raises(ValueError):
      reconstruct_cdf(build_tree_counts([1], 8), 32)


class TestPostprocess:

  def test_fixed_point(self):
    x = np.array([0.1, 0.1, 0.5, 1.0])
    np.testing.assert_array_equal(postprocess_monotone(x), x)

  def test_example(self):
    np.testing.assert_array_equal(postprocess_monotone([0.5, 0.3, 1.2]), [0.5, 0.5, 1.0])

  def test_never_increases_error(self):
    root = RandomSource(10)
    for t in range(10_000):
      r = root.substream(t)
      D = int(r.integers(1, 40))
      truth = np.sort(r.random(D))
      raw = truth + r.standard_normal(D) * r.uniform(0, 0.5)
      assert (linf_distance(postprocess_monotone(raw), truth)
              <= linf_distance(raw, truth) + 1e-15)

  @given(st.lists(st.floats(-3, 3), min_size=1, max_size=30))
  def test_output_is_monotone_cdf_range(self, xs):
    out = postprocess_monotone(xs)
    assert np.all(np.diff(out) >= 0) and np.all((out >= 0) & (out <= 1))


class TestPrivateCdf:

  def test_zero_noise_limit(self, rng):
    data = sample_discrete(DiscreteDistribution.uniform(8), 50, rng)
    np.testing.assert_allclose(private_cdf(data, 8, PrivacyParams(1e12, 0.1), rng),
                               empirical_cdf(data, 8), atol=1e-9)

  def test_golden(self):
    x = np.array([1, 1, 2, 3, 3, 3, 4, 5, 5, 6, 7, 7, 8, 8, 8, 2])
    np.testing.assert_array_equal(
        private_cdf(x, 8, PrivacyParams(1, 0.01), RandomSource(GOLDEN_SEED)),
        [0.0, 0.32086886578380913, 0.44537234546357707, 0.44537234546357707,
         0.44537234546357707, 0.6207728146441862, 1.0, 1.0])

  def test_non_power_of_two(self, rng):
    data = sample_discrete(DiscreteDistribution.uniform(100), 500, rng)
    out = private_cdf(data, 100, PrivacyParams(1, 1e-3), rng)
    assert out.shape == (100,)

  def test_error_bound_moderate(self):
    D, n, p = 256, 5000, PrivacyParams(1, 1e-5)
    dist = DiscreteDistribution.uniform(D)
    root = RandomSource(3)
    errs = [linf_distance(private_cdf(sample_discrete(dist, n, root.substream(t, 0)), D, p,
                                      root.substream(t, 1)), np.cumsum(dist.probs))
            for t in range(100)]
    assert np.mean(errs) <= cdf_error_bound(D, n, p)


def test_padded_size():
  assert [padded_size(D) for D in (1, 2, 3, 4, 5, 1024, 1025)] == [2, 2, 4, 4, 8, 1024, 2048]
