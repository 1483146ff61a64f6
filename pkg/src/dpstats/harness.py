"""Experiment sweeps over (n, d or D, epsilon, delta) grids.

Every trial draws its randomness from ``RandomSource(seed, key)`` where the
key is built from the grid coordinates and the trial index, so results do
not depend on worker count, scheduling, or which other grid points are in
the sweep. Records are merged in (grid point, trial) order.
"""

from __future__ import annotations

import collections
import concurrent.futures
import csv
import dataclasses
import io
import itertools
import json
import math
import os
import struct
import time
from typing import Any, Optional, Sequence

import numpy as np

from dpstats import cdf, distributions, mean, tracing
from dpstats.privacy import PrivacyParams, RandomSource

TASKS = ("mean-estimate", "cdf-estimate", "attack", "sweep", "fingerprint-check")
MECHANISMS = ("constant", "oracle", "empirical", "private")
DISTRIBUTIONS = ("uniform", "geometric", "point")
_TASK_CODE = {"mean-estimate": 1, "cdf-estimate": 2, "attack": 3,
              "fingerprint-check": 4}


class ConfigError(ValueError):
  """Invalid experiment configuration; ``field`` names the culprit."""

  def __init__(self, field: str, message: str):
    super().__init__(f"{field}: {message}")
    self.field = field


@dataclasses.dataclass
class ExperimentConfig:
  """One experiment. Grid fields are lists; ``delta=None`` means 1/n."""

  task: str = "mean-estimate"
  n: list[int] = dataclasses.field(default_factory=lambda: [1000])
  d: list[int] = dataclasses.field(default_factory=lambda: [10])
  D: list[int] = dataclasses.field(default_factory=lambda: [1024])
  epsilon: list[float] = dataclasses.field(default_factory=lambda: [1.0])
  delta: Optional[list[float]] = None
  trials: int = 100
  seed: int = 0
  out: Optional[str] = None
  format: str = "json"
  workers: int = 1
  mechanisms: list[str] = dataclasses.field(
      default_factory=lambda: ["constant", "empirical", "private"])
  dist: str = "uniform"
  clamp: bool = True
  subsample: Optional[int] = None
  quantile: float = 0.95
  tasks: list[str] = dataclasses.field(
      default_factory=lambda: ["mean-estimate", "cdf-estimate"])

  @classmethod
  def from_dict(cls, raw: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
      raise ConfigError(sorted(unknown)[0], "unknown config field")
    cfg = cls(**raw)
    for grid in ("n", "d", "D", "epsilon", "delta"):
      val = getattr(cfg, grid)
      if val is not None and not isinstance(val, (list, tuple)):
        setattr(cfg, grid, [val])
    return cfg

  @classmethod
  def load(cls, path: str | os.PathLike) -> ExperimentConfig:
    with open(path) as f:
      try:
        raw = json.load(f)
      except json.JSONDecodeError as e:
        raise ConfigError("config", f"{path}: {e}") from e
    if not isinstance(raw, dict):
      raise ConfigError("config", f"{path}: expected a JSON object")
    return cls.from_dict(raw)

  def validate(self) -> ExperimentConfig:
    if self.task not in TASKS:
      raise ConfigError("task", f"must be one of {TASKS}, got {self.task!r}")
    for name in ("n", "d", "D", "epsilon"):
      if not getattr(self, name):
        raise ConfigError(name, "grid must be non-empty")
    if any(int(v) != v or v < 1 for v in self.n):
      raise ConfigError("n", "sample sizes must be positive integers")
    if any(int(v) != v or v < 1 for v in self.d):
      raise ConfigError("d", "dimensions must be positive integers")
    if any(int(v) != v or v < 2 for v in self.D):
      raise ConfigError("D", "domain sizes must be integers >= 2")
    if any(not (math.isfinite(e) and e > 0) for e in self.epsilon):
      raise ConfigError("epsilon", "values must be finite and > 0")
    if self.delta is not None:
      if not self.delta:
        raise ConfigError("delta", "grid must be non-empty (omit it for 1/n)")
      if any(not 0 < v < 1 for v in self.delta):
        raise ConfigError("delta", "values must lie in (0, 1)")
    if int(self.trials) != self.trials or self.trials < 1:
      raise ConfigError("trials", "must be an integer >= 1")
    if not 0 <= int(self.seed) < 2**64:
      raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if self.format not in ("csv", "json"):
      raise ConfigError("format", "must be 'csv' or 'json'")
    if int(self.workers) != self.workers or self.workers < 1:
      raise ConfigError("workers", "must be an integer >= 1")
    bad = [m for m in self.mechanisms if m not in MECHANISMS]
    if bad or not self.mechanisms:
      raise ConfigError("mechanisms", f"choose from {MECHANISMS}, got {self.mechanisms}")
    if self.dist not in DISTRIBUTIONS:
      raise ConfigError("dist", f"must be one of {DISTRIBUTIONS}")
    if self.subsample is not None and self.subsample < 1:
      raise ConfigError("subsample", "must be >= 1")
    if not 0 < self.quantile < 1:
      raise ConfigError("quantile", "must lie in (0, 1)")
    bad = [t for t in self.tasks if t not in _TASK_CODE]
    if self.task == "sweep" and (bad or not self.tasks):
      raise ConfigError("tasks", f"sweep sub-tasks must come from {tuple(_TASK_CODE)}")
    return self

  def deltas_for(self, n: int) -> list[float]:
    return [1.0 / n] if self.delta is None else list(self.delta)


@dataclasses.dataclass
class TrialRecord:
  """One mechanism run at one grid point.

  ``RandomSource(seed, key)`` with ``key`` parsed from ``stream`` (dot
  separated) reproduces the trial. Fields not meaningful for a task are None.
  """

  task: str
  mechanism: str
  n: int
  d: Optional[int]
  D: Optional[int]
  epsilon: float
  delta: float
  seed: int
  stream: str
  trial: int
  l2sq_error: Optional[float] = None
  linf_error: Optional[float] = None
  linf_to_empirical: Optional[float] = None
  alpha_sq: Optional[float] = None
  sum_z_in: Optional[float] = None
  sum_z_out: Optional[float] = None
  max_abs_z_out: Optional[float] = None
  threshold: Optional[float] = None
  advantage: Optional[float] = None
  wall_time: Optional[float] = None


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(TrialRecord))
_INT_FIELDS = {"n", "d", "D", "seed", "trial"}
_STR_FIELDS = {"task", "mechanism", "stream"}


def _float_bits(x: float) -> int:
  return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def grid_key(task: str, n: int, dim: int, epsilon: float, delta: float) -> tuple[int, ...]:
  """Substream key for a grid point, derived from its coordinates only."""
  return (_TASK_CODE[task], int(n), int(dim), _float_bits(epsilon), _float_bits(delta))


def _grid(cfg: ExperimentConfig, task: str):
  dims = cfg.D if task == "cdf-estimate" else cfg.d
  for n, dim, eps in itertools.product(cfg.n, dims, cfg.epsilon):
    for delta in cfg.deltas_for(n):
      yield int(n), int(dim), float(eps), float(delta)


def _base(task, mech, n, dim, eps, delta, seed, key, trial):
  is_cdf = task == "cdf-estimate"
  return dict(task=task, mechanism=mech, n=n, d=None if is_cdf else dim,
              D=dim if is_cdf else None, epsilon=eps, delta=delta, seed=seed,
              stream=".".join(str(k) for k in key), trial=trial)


def _mean_job(job) -> list[TrialRecord]:
  cfg, (n, d, eps, delta), trial = job
  key = grid_key("mean-estimate", n, d, eps, delta) + (trial,)
  rng = RandomSource(cfg.seed, key)
  p = PrivacyParams(eps, delta)
  t0 = time.perf_counter()
  dist = distributions.sample_uniform_mean(d, rng.substream(0))
  data = distributions.sample_product(dist, n, rng.substream(1))
  emp = distributions.empirical_mean(data)
  priv = mean.private_mean(data, p, rng.substream(2), clamp=cfg.clamp)
  elapsed = time.perf_counter() - t0
  base = dict(n=n, dim=d, eps=eps, delta=delta, seed=cfg.seed, key=key, trial=trial)
  return [
      TrialRecord(**_base("mean-estimate", "private_mean", **base),
                  l2sq_error=distributions.l2sq_error(priv, dist.mu), wall_time=elapsed),
      TrialRecord(**_base("mean-estimate", "empirical_mean", **base),
                  l2sq_error=distributions.l2sq_error(emp, dist.mu), wall_time=elapsed),
  ]


def discrete_preset(name: str, D: int) -> distributions.DiscreteDistribution:
  if name == "uniform":
    return distributions.DiscreteDistribution.uniform(D)
  if name == "geometric":
    return distributions.DiscreteDistribution.geometric(D, ratio=1.0 - 4.0 / D)
  if name == "point":
    return distributions.DiscreteDistribution.point_mass(D, (D + 1) // 2)
  raise ConfigError("dist", f"unknown distribution preset {name!r}")


def _cdf_job(job) -> list[TrialRecord]:
  cfg, (n, D, eps, delta), trial = job
  key = grid_key("cdf-estimate", n, D, eps, delta) + (trial,)
  rng = RandomSource(cfg.seed, key)
  p = PrivacyParams(eps, delta)
  truth = discrete_preset(cfg.dist, D)
  t0 = time.perf_counter()
  data = distributions.sample_discrete(truth, n, rng.substream(0))
  emp = distributions.empirical_cdf(data, D)
  priv = cdf.private_cdf(data, D, p, rng.substream(1))
  elapsed = time.perf_counter() - t0
  target = distributions.true_cdf(truth)
  base = dict(n=n, dim=D, eps=eps, delta=delta, seed=cfg.seed, key=key, trial=trial)
  return [
      TrialRecord(**_base("cdf-estimate", "private_cdf", **base),
                  linf_error=distributions.linf_distance(priv, target),
                  linf_to_empirical=distributions.linf_distance(priv, emp),
                  wall_time=elapsed),
      TrialRecord(**_base("cdf-estimate", "empirical_cdf", **base),
                  linf_error=distributions.linf_distance(emp, target),
                  wall_time=elapsed),
  ]


def build_mechanisms(names: Sequence[str], p: PrivacyParams) -> list[tracing.MechanismUnderTest]:
  make = {
      "constant": tracing.constant_mechanism,
      "oracle": tracing.oracle_mechanism,
      "empirical": tracing.empirical_mean_mechanism,
      "private": lambda: tracing.private_mean_mechanism(p),
  }
  return [make[name]() for name in names]


def _attack_job(job):
  cfg, (n, d, eps, delta), trial = job
  key = grid_key("attack", n, d, eps, delta) + (trial,)
  p = PrivacyParams(eps, delta)
  out = []
  for mech in build_mechanisms(cfg.mechanisms, p):
    # Same key for every mechanism: they face identical (mu, X) draws.
    t0 = time.perf_counter()
    scores = tracing.run_attack_trial(mech, n, d, RandomSource(cfg.seed, key),
                                      subsample=cfg.subsample)
    out.append((mech.label, scores, time.perf_counter() - t0))
  return key, out


def _run_jobs(fn, jobs: list, workers: int) -> list:
  if workers <= 1 or len(jobs) <= 1:
    return [fn(job) for job in jobs]
  with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
    chunk = max(1, len(jobs) // (4 * workers))
    return list(pool.map(fn, jobs, chunksize=chunk))


def _jobs(cfg: ExperimentConfig, task: str) -> list:
  return [(cfg, point, t) for point in _grid(cfg, task) for t in range(cfg.trials)]


def run_mean_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
  """Private and empirical mean errors under the uniform prior on mu."""
  cfg.validate()
  return [r for recs in _run_jobs(_mean_job, _jobs(cfg, "mean-estimate"), cfg.workers)
          for r in recs]


def run_cdf_sweep(cfg: ExperimentConfig) -> list[TrialRecord]:
  """Private and empirical CDF l-infinity errors against the true CDF."""
  cfg.validate()
  return [r for recs in _run_jobs(_cdf_job, _jobs(cfg, "cdf-estimate"), cfg.workers)
          for r in recs]


def run_attack_experiment(cfg: ExperimentConfig) -> list[TrialRecord]:
  """Tracing attack against each selected mechanism at every grid point.

  The membership threshold for a (grid point, mechanism) pair is the
  ``cfg.quantile`` of its pooled Z' scores; every record of that pair carries
  it, and the per-trial advantages average to the pooled advantage.
  """
  cfg.validate()
  jobs = _jobs(cfg, "attack")
  results = _run_jobs(_attack_job, jobs, cfg.workers)
  pooled = collections.defaultdict(list)
  for (_, point, _), (_, outs) in zip(jobs, results):
    for label, scores, _ in outs:
      pooled[point, label].append(scores)
  thresholds = {
      k: float(np.quantile(np.concatenate([s.z_out for s in v]), cfg.quantile))
      for k, v in pooled.items()}

  records = []
  for (_, point, trial), (key, outs) in zip(jobs, results):
    n, d, eps, delta = point
    for label, scores, elapsed in outs:
      thr = thresholds[point, label]
      adv = tracing.membership_advantage([scores], thr)
      records.append(TrialRecord(
          **_base("attack", label, n, d, eps, delta, cfg.seed, key, trial),
          alpha_sq=scores.alpha_sq_sample, sum_z_in=scores.sum_z_in,
          sum_z_out=scores.sum_z_out,
          max_abs_z_out=float(np.max(np.abs(scores.z_out))),
          threshold=thr, advantage=adv["advantage"], wall_time=elapsed))
  return records


def run_fingerprint_check(cfg: ExperimentConfig) -> list[tracing.FingerprintReport]:
  cfg.validate()
  reports = []
  for n in cfg.n:
    rng = RandomSource(cfg.seed, (_TASK_CODE["fingerprint-check"], int(n)))
    reports += tracing.fingerprinting_check(int(n), cfg.trials, rng)
  return reports


def run(cfg: ExperimentConfig) -> list:
  """Dispatches on ``cfg.task``; ``sweep`` concatenates ``cfg.tasks``."""
  cfg.validate()
  runners = {"mean-estimate": run_mean_sweep, "cdf-estimate": run_cdf_sweep,
             "attack": run_attack_experiment,
             "fingerprint-check": run_fingerprint_check}
  if cfg.task != "sweep":
    return runners[cfg.task](cfg)
  records = []
  for sub in cfg.tasks:
    records += runners[sub](dataclasses.replace(cfg, task=sub))
  return records


# Aggregation.

def _group_key(r: TrialRecord):
  return (r.task, r.mechanism, r.n, r.d, r.D, r.epsilon, r.delta)


def _stats(values) -> dict:
  v = np.asarray(values, dtype=np.float64)
  std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
  return {"mean": float(v.mean()), "std": std, "se": std / math.sqrt(v.size)}


def summarize(records: Sequence[TrialRecord]) -> list[dict]:
  """Per (task, mechanism, grid point) aggregates plus reference bounds.

  Only fields of the records are used, so every number here can be
  recomputed from the per-trial output.
  """
  groups = collections.OrderedDict()
  for r in records:
    if isinstance(r, TrialRecord):
      groups.setdefault(_group_key(r), []).append(r)
  rows = []
  for (task, mech, n, d, D, eps, delta), recs in groups.items():
    p = PrivacyParams(eps, delta)
    row = {"task": task, "mechanism": mech, "n": n, "d": d, "D": D,
           "epsilon": eps, "delta": delta, "trials": len(recs)}
    if task == "mean-estimate":
      row["l2sq_error"] = _stats([r.l2sq_error for r in recs])
      row["bound"] = (mean.mean_error_bound(d, n, p) if mech == "private_mean"
                      else 2.0 * d / (3.0 * n))
    elif task == "cdf-estimate":
      row["linf_error"] = _stats([r.linf_error for r in recs])
      if mech == "private_cdf":
        row["linf_to_empirical"] = _stats([r.linf_to_empirical for r in recs])
        row["bound"] = cdf.cdf_error_bound(D, n, p)
    elif task == "attack":
      alpha_sq = float(np.mean([r.alpha_sq for r in recs]))
      row.update(
          alpha_sq=alpha_sq,
          sum_z_in=_stats([r.sum_z_in for r in recs]),
          sum_z_out=_stats([r.sum_z_out for r in recs]),
          max_abs_z_out=max(r.max_abs_z_out for r in recs),
          threshold=recs[0].threshold,
          advantage=float(np.mean([r.advantage for r in recs])),
          accuracy_floor=d / 3.0 - alpha_sq,
          privacy_ceiling=4 * n * math.sqrt(alpha_sq) * eps + 8 * n * delta * d,
          minimax_alpha_sq_floor=tracing.minimax_alpha_sq_floor(d, n, eps))
    rows.append(row)
  return rows


# Serialization.

def _fmt(v: Any) -> str:
  """Scalar to JSON text; floats with 17 significant digits."""
  if v is None:
    return "null"
  if isinstance(v, (bool, np.bool_)):
    return "true" if v else "false"
  if isinstance(v, (int, np.integer)):
    return str(int(v))
  if isinstance(v, (float, np.floating)):
    if not math.isfinite(v):
      raise ValueError(f"cannot serialize non-finite value {v!r}")
    return format(float(v), ".17g")
  if isinstance(v, str):
    return json.dumps(v)
  if isinstance(v, dict):
    return "{" + ", ".join(f"{json.dumps(k)}: {_fmt(x)}" for k, x in v.items()) + "}"
  if isinstance(v, (list, tuple)):
    return "[" + ", ".join(_fmt(x) for x in v) + "]"
  raise TypeError(f"cannot serialize {type(v).__name__}")


def _csv_cell(v: Any) -> str:
  if v is None:
    return ""
  return v if isinstance(v, str) else _fmt(v)


def record_fields(records: Sequence, include_timing: bool = False) -> list[str]:
  fields = [f.name for f in dataclasses.fields(records[0])]
  return fields if include_timing else [f for f in fields if f != "wall_time"]


def dumps_records(records: Sequence, format: str = "json",
                  include_timing: bool = False) -> str:
  if not records:
    raise ValueError("no records to write")
  fields = record_fields(records, include_timing)
  if format == "json":
    rows = [_fmt({f: getattr(r, f) for f in fields}) for r in records]
    return "[\n" + ",\n".join("  " + row for row in rows) + "\n]\n"
  if format == "csv":
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
      w.writerow([_csv_cell(getattr(r, f)) for f in fields])
    return buf.getvalue()
  raise ValueError(f"unknown format {format!r}")


def write_records(records: Sequence, path: str | os.PathLike,
                  format: str = "json", include_timing: bool = False) -> None:
  """Writes dataclass records as CSV (header + one row each) or a JSON array.

  Fields appear in declaration order. Wall time is left out unless
  ``include_timing`` is set, which keeps output byte-reproducible.
  """
  text = dumps_records(records, format, include_timing)
  try:
    with open(path, "w", newline="") as f:
      f.write(text)
  except OSError as e:
    raise OSError(f"could not write records to {path}: {e}") from e


def _coerce(field: str, raw: Any):
  if raw is None or raw == "":
    return None
  if field in _STR_FIELDS:
    return str(raw)
  if field in _INT_FIELDS:
    return int(raw)
  return float(raw)


def read_records(path: str | os.PathLike, format: Optional[str] = None) -> list[TrialRecord]:
  """Parses a file written by :func:`write_records` back into TrialRecords."""
  if format is None:
    format = "csv" if str(path).endswith(".csv") else "json"
  with open(path, newline="") as f:
    if format == "json":
      rows = json.load(f)
    else:
      rows = list(csv.DictReader(f))
  return [TrialRecord(**{k: _coerce(k, v) for k, v in row.items()}) for row in rows]
