"""Tracing (membership-inference) statistics behind the mean-estimation
lower bound, and Monte Carlo checks of the inequalities they satisfy.

The population mean mu is drawn uniformly from [-1, 1]^d, a sample X of n
rows is drawn from the product distribution with that mean, and a mechanism
M releases an estimate in [-1, 1]^d. For each row i the attacker scores

    Z_i  = <M(X) - mu, X_i - mu>          (row i was in the sample)
    Z'_i = <M(X~i) - mu, X_i - mu>        (row i replaced by a fresh draw)

Accurate mechanisms force sum_i Z_i up; private ones keep it close to the
(zero-mean) Z'_i.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional, Sequence

import numpy as np

from dpstats.distributions import sample_product, sample_uniform_mean
from dpstats.mean import private_mean
from dpstats.privacy import PrivacyParams, RandomSource, RngLike, as_random_source

# fn(data, rng, mu) -> estimate. Only oracle mechanisms may look at mu.
MechanismFn = Callable[[np.ndarray, RandomSource, np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class MechanismUnderTest:
  """A labelled mean estimator with outputs clamped to [-1, 1]^d.

  Attributes:
    label: Name used in reports.
    fn: Callable ``fn(data, rng, mu)``.
    privacy: Declared (epsilon, delta) budget, or None if the mechanism makes
      no privacy claim.
    data_independent: Output ignores the sample entirely, so the mechanism
      is private under every budget.
  """

  label: str
  fn: MechanismFn
  privacy: Optional[PrivacyParams] = None
  data_independent: bool = False

  def __call__(self, data, rng: RandomSource, mu) -> np.ndarray:
    return np.clip(np.asarray(self.fn(data, rng, mu), dtype=np.float64), -1.0, 1.0)


def constant_mechanism(value: float = 0.0) -> MechanismUnderTest:
  """Ignores the data; (eps, delta)-DP for every budget."""
  return MechanismUnderTest(
      f"constant_{value:g}",
      lambda data, rng, mu: np.full(np.shape(data)[1], value),
      data_independent=True)


def oracle_mechanism() -> MechanismUnderTest:
  """Outputs the true mean. Data-independent given mu, but not an estimator."""
  return MechanismUnderTest("oracle_mu", lambda data, rng, mu: np.array(mu))


def empirical_mean_mechanism() -> MechanismUnderTest:
  return MechanismUnderTest(
      "empirical_mean", lambda data, rng, mu: data.mean(axis=0, dtype=np.float64))


def private_mean_mechanism(p: PrivacyParams) -> MechanismUnderTest:
  return MechanismUnderTest(
      f"private_mean_eps{p.epsilon:g}",
      lambda data, rng, mu: private_mean(data, p, rng), p)


def mechanism_library(epsilons: Sequence[float], delta: float) -> list[MechanismUnderTest]:
  """Constant, oracle, empirical mean, and private means at each epsilon."""
  lib = [constant_mechanism(0.0), oracle_mechanism(), empirical_mean_mechanism()]
  lib += [private_mean_mechanism(PrivacyParams(e, delta)) for e in epsilons]
  return lib


def is_private(m: MechanismUnderTest) -> bool:
  return m.data_independent or m.privacy is not None


def score_in(m_out, row, mu) -> float:
  """Z = <m_out - mu, row - mu>."""
  m_out, row, mu = (np.asarray(v, dtype=np.float64) for v in (m_out, row, mu))
  if not m_out.shape == row.shape == mu.shape:
    raise ValueError(f"dimension mismatch: {m_out.shape}, {row.shape}, {mu.shape}")
  return float(np.dot(m_out - mu, row - mu))


def score_out(mechanism: MechanismUnderTest, data, i: int, fresh_row, mu,
              rng: RngLike) -> float:
  """Z'_i: rerun the mechanism with row i swapped for ``fresh_row``, then
  score the original row i against that output."""
  data = np.asarray(data)
  if not 0 <= i < data.shape[0]:
    raise IndexError(f"row index {i} out of range for n={data.shape[0]}")
  swapped = data.copy()
  swapped[i] = fresh_row
  return score_in(mechanism(swapped, as_random_source(rng), mu), data[i], mu)


@dataclasses.dataclass(eq=False)
class AttackScores:
  """Scores from one attack trial.

  Attributes:
    z_in: Z_i for every row of the sample (length n).
    z_out: Z'_i for the rows listed in ``out_index`` (all n rows unless the
      trial was subsampled).
    alpha_sq_sample: Realized squared error |M(X) - mu|^2.
    out_index: Row indices scored for ``z_out``.
    mu: Population mean drawn for the trial.
  """

  z_in: np.ndarray
  z_out: np.ndarray
  alpha_sq_sample: float
  out_index: np.ndarray
  mu: np.ndarray

  @property
  def d(self) -> int:
    return self.mu.size

  @property
  def sum_z_in(self) -> float:
    return float(self.z_in.sum())

  @property
  def sum_z_out(self) -> float:
    """Sum of Z'_i, rescaled to n rows when subsampled."""
    return float(self.z_out.sum() * self.z_in.size / max(self.z_out.size, 1))


def run_attack_trial(mechanism: MechanismUnderTest, n: int, d: int,
                     rng: RngLike, prior_rng: RngLike = None,
                     subsample: Optional[int] = None) -> AttackScores:
  """One draw of (mu, X, M) with in- and out-of-sample scores.

  Args:
    mechanism: Estimator under attack.
    n: Sample size.
    d: Dimension.
    rng: Randomness for data, fresh rows and the mechanism.
    prior_rng: Randomness for mu; defaults to a substream of ``rng``.
    subsample: If set, compute Z'_i only for this many random rows (each
      costs one extra mechanism run).
  """
  if n < 1 or d < 1:
    raise ValueError(f"n and d must be >= 1, got n={n}, d={d}")
  rng = as_random_source(rng)
  prior_rng = rng.substream(0) if prior_rng is None else as_random_source(prior_rng)
  dist = sample_uniform_mean(d, prior_rng)
  mu = dist.mu
  data = sample_product(dist, n, rng.substream(1))
  out = mechanism(data, rng.substream(2), mu)
  centered = data - mu
  z_in = centered @ (out - mu)

  if subsample is None or subsample >= n:
    idx = np.arange(n)
  else:
    idx = np.sort(rng.substream(3).generator.choice(n, size=subsample, replace=False))
  fresh = sample_product(dist, idx.size, rng.substream(4))
  rerun_rng = rng.substream(5)
  z_out = np.array([score_out(mechanism, data, int(i), fresh[k], mu, rerun_rng)
                    for k, i in enumerate(idx)])
  return AttackScores(z_in, z_out, float(np.sum((out - mu)**2)), idx, mu)


@dataclasses.dataclass
class Rate:
  """Sample mean with its standard error."""

  mean: float
  se: float

  @classmethod
  def of(cls, x) -> Rate:
    x = np.asarray(x, dtype=np.float64)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
    return cls(float(np.mean(x)), se)


@dataclasses.dataclass
class AttackSummary:
  """Aggregates of many attack trials against one mechanism."""

  label: str
  n: int
  d: int
  trials: int
  sum_z_in: Rate
  sum_z_out: Rate
  z_out: Rate
  z_out_var: float
  max_abs_z_out: float
  alpha_sq: float
  threshold: float
  tpr: float
  fpr: float
  advantage: float

  @property
  def alpha(self) -> float:
    return math.sqrt(self.alpha_sq)

  def claim1_ok(self, sigmas: float = 4.0) -> bool:
    """E[Z'] = 0 within ``sigmas`` standard errors, and |Z'| <= 4d always."""
    return (abs(self.z_out.mean) <= sigmas * self.z_out.se and
            self.max_abs_z_out <= 4 * self.d)

  def accuracy_floor(self) -> float:
    """d/3 - alpha^2: lower bound on E[sum Z_i] for any estimator."""
    return self.d / 3.0 - self.alpha_sq

  def privacy_ceiling(self, p: PrivacyParams) -> float:
    """4 n alpha eps + 8 n delta d: upper bound on E[sum Z_i] under (eps, delta)-DP."""
    return 4 * self.n * self.alpha * p.epsilon + 8 * self.n * p.delta * self.d


def trial_scores(mechanism: MechanismUnderTest, n: int, d: int, trials: int,
                 rng: RngLike, subsample: Optional[int] = None) -> list[AttackScores]:
  rng = as_random_source(rng)
  return [run_attack_trial(mechanism, n, d, rng.substream(t), subsample=subsample)
          for t in range(trials)]


def summarize_attack(mechanism: MechanismUnderTest, scores: Sequence[AttackScores],
                     quantile: float = 0.95) -> AttackSummary:
  """Pools trials; the membership threshold is the ``quantile`` of pooled Z'."""
  if not scores:
    raise ValueError("no attack scores to summarize")
  z_out = np.concatenate([s.z_out for s in scores])
  # Trial means of Z' carry the within-trial correlation into the error bar.
  z_out_trial = np.array([s.z_out.mean() for s in scores])
  threshold = float(np.quantile(z_out, quantile))
  adv = membership_advantage(scores, threshold)
  return AttackSummary(
      label=mechanism.label,
      n=scores[0].z_in.size,
      d=scores[0].d,
      trials=len(scores),
      sum_z_in=Rate.of([s.sum_z_in for s in scores]),
      sum_z_out=Rate.of([s.sum_z_out for s in scores]),
      z_out=Rate(float(z_out.mean()), Rate.of(z_out_trial).se),
      z_out_var=float(np.var(z_out, ddof=1)) if z_out.size > 1 else 0.0,
      max_abs_z_out=float(np.max(np.abs(z_out))),
      alpha_sq=float(np.mean([s.alpha_sq_sample for s in scores])),
      threshold=threshold,
      **adv)


def membership_advantage(scores: Sequence[AttackScores], threshold: float) -> dict:
  """Fraction of Z_i above ``threshold`` (tpr), of Z'_i above it (fpr), and
  their difference."""
  if not scores:
    raise ValueError("membership_advantage needs at least one trial")
  z_in = np.concatenate([s.z_in for s in scores])
  z_out = np.concatenate([s.z_out for s in scores])
  tpr = float(np.mean(z_in > threshold))
  fpr = float(np.mean(z_out > threshold))
  return {"tpr": tpr, "fpr": fpr, "advantage": tpr - fpr}


def minimax_alpha_sq_floor(d: int, n: int, epsilon: float) -> float:
  """min(d/6, d^2 / (2304 eps^2 n^2)): the squared error every DP mechanism
  must pay under the uniform prior."""
  return min(d / 6.0, d**2 / (2304.0 * epsilon**2 * n**2))


# Scalar estimators f : {-1, +1}^n -> [-1, 1] for the fingerprinting check.
# Each maps a (trials, n) batch and a generator to a (trials,) array.
ScalarEstimator = Callable[[np.ndarray, np.random.Generator], np.ndarray]


def _noisy_mean(sigma: float) -> ScalarEstimator:
  def f(x, gen):
    return np.clip(x.mean(axis=1) + sigma * gen.standard_normal(x.shape[0]), -1, 1)
  return f


def fingerprint_library() -> dict[str, ScalarEstimator]:
  lib = {
      "empirical_mean": lambda x, gen: x.mean(axis=1),
      "constant_0": lambda x, gen: np.zeros(x.shape[0]),
      "sign_of_sum": lambda x, gen: np.sign(x.sum(axis=1)).astype(np.float64),
  }
  for sigma in (0.1, 0.5, 2.0):
    lib[f"noisy_mean_{sigma:g}"] = _noisy_mean(sigma)
  return lib


@dataclasses.dataclass
class FingerprintReport:
  """Monte Carlo check of E[(f - mu) sum_i (X_i - mu)] >= 1/3 - E[(f - mu)^2].

  ``slack`` is 4 standard errors of the per-trial quantity
  (f - mu) sum_i (X_i - mu) + (f - mu)^2, whose expectation the inequality
  bounds below by 1/3.
  """

  estimator: str
  n: int
  trials: int
  lhs_estimate: float
  mse_estimate: float
  slack: float
  bound_satisfied: bool

  @property
  def margin(self) -> float:
    return self.lhs_estimate - (1.0 / 3.0 - self.mse_estimate)


def fingerprinting_check(n: int, trials: int, rng: RngLike,
                         library: Optional[dict[str, ScalarEstimator]] = None,
                         sigmas: float = 4.0) -> list[FingerprintReport]:
  """Checks the fingerprinting inequality for each scalar estimator.

  Every estimator sees the same (mu, X) draws; its own randomness comes from
  a per-estimator substream.
  """
  if n < 1 or trials < 2:
    raise ValueError(f"need n >= 1 and trials >= 2, got n={n}, trials={trials}")
  rng = as_random_source(rng)
  library = fingerprint_library() if library is None else library
  mu = rng.substream(0).uniform(-1.0, 1.0, trials)
  u = rng.substream(1).random((trials, n))
  x = np.where(u < ((1.0 + mu) / 2.0)[:, None], 1.0, -1.0)
  centered_sum = (x - mu[:, None]).sum(axis=1)

  reports = []
  for k, (name, f) in enumerate(library.items()):
    err = np.clip(f(x, rng.substream(2, k).generator), -1.0, 1.0) - mu
    lhs = err * centered_sum
    sq = err**2
    combined = lhs + sq
    slack = sigmas * float(np.std(combined, ddof=1)) / math.sqrt(trials)
    reports.append(FingerprintReport(
        estimator=name, n=n, trials=trials,
        lhs_estimate=float(lhs.mean()), mse_estimate=float(sq.mean()),
        slack=slack,
        bound_satisfied=bool(combined.mean() >= 1.0 / 3.0 - slack)))
  return reports


@dataclasses.dataclass
class PrivacyGapReport:
  """Per-row check of E[Z_i] <= E[Z'_i] + 2 eps sqrt(Var Z'_i) + 2 delta |Z'_i|_inf.

  Both sides are averaged over rows i (they are exchangeable). The sup norm
  is the largest |Z'_i| observed, which can only understate the true bound
  and so errs toward flagging.
  """

  label: str
  epsilon: float
  delta: float
  lhs: float
  rhs: float
  slack: float
  violated: bool
  mean_sum_z_in: float
  alpha_sq: float
  sum_ceiling: float


def privacy_gap_check(mechanism: MechanismUnderTest, p: PrivacyParams, n: int,
                      d: int, trials: int, rng: RngLike,
                      sigmas: float = 4.0) -> PrivacyGapReport:
  """Looks for evidence that ``mechanism`` is not (p.epsilon, p.delta)-DP.

  A violation (left side above right side by more than ``sigmas`` standard
  errors) means the attack separates in- and out-of-sample rows more than
  the claimed budget allows. Passing is not a proof of privacy.
  """
  if trials < 2:
    raise ValueError("privacy_gap_check needs at least 2 trials")
  scores = trial_scores(mechanism, n, d, trials, rng)
  z_in = np.stack([s.z_in for s in scores])
  z_out = np.stack([s.z_out for s in scores])
  mean_out = z_out.mean(axis=0)
  var_out = z_out.var(axis=0, ddof=1)
  sup_out = np.abs(z_out).max(axis=0)
  lhs = float(z_in.mean())
  rhs = float(np.mean(mean_out + 2 * p.epsilon * np.sqrt(var_out)
                      + 2 * p.delta * sup_out))
  gap = z_in.mean(axis=1) - z_out.mean(axis=1)
  slack = sigmas * float(np.std(gap, ddof=1)) / math.sqrt(trials)
  alpha_sq = float(np.mean([s.alpha_sq_sample for s in scores]))
  ceiling = 4 * n * math.sqrt(alpha_sq) * p.epsilon + 8 * n * p.delta * d
  return PrivacyGapReport(
      label=mechanism.label, epsilon=p.epsilon, delta=p.delta,
      lhs=lhs, rhs=rhs, slack=slack, violated=lhs > rhs + slack,
      mean_sum_z_in=float(z_in.sum(axis=1).mean()), alpha_sq=alpha_sq,
      sum_ceiling=ceiling)
