"""Command-line entry point: ``dpstats <task> [flags]``.

Flags override fields of an optional ``--config`` JSON document. Records go
to ``--out`` (or stdout); aggregates go to ``<out>.summary.json`` and a short
table is printed to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from dpstats import harness


def _int_list(text: str) -> list[int]:
  return [int(float(tok)) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
  return [float(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> list[str]:
  return [tok.strip() for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument("--config", help="JSON config; flags override its fields")
  common.add_argument("--seed", type=int)
  common.add_argument("--trials", type=int)
  common.add_argument("--out", help="output path (default: stdout)")
  common.add_argument("--format", choices=("csv", "json"))
  common.add_argument("--workers", type=int)
  common.add_argument("--n", type=_int_list, help="comma-separated sample sizes")
  common.add_argument("--d", type=_int_list, help="comma-separated dimensions")
  common.add_argument("--D", type=_int_list, help="comma-separated domain sizes")
  common.add_argument("--eps", dest="epsilon", type=_float_list)
  common.add_argument("--delta", type=_float_list, help="default: 1/n per grid point")
  common.add_argument("--mechanisms", type=_str_list,
                      help=f"attack targets from {','.join(harness.MECHANISMS)}")
  common.add_argument("--dist", choices=harness.DISTRIBUTIONS)
  common.add_argument("--no-clamp", dest="clamp", action="store_const", const=False)
  common.add_argument("--subsample", type=int)
  common.add_argument("--tasks", type=_str_list, help="sub-tasks run by 'sweep'")
  common.add_argument("--timing", action="store_true",
                      help="include wall_time (output is then not reproducible)")

  parser = argparse.ArgumentParser(
      prog="dpstats", description="Private mean/CDF estimation experiments.")
  sub = parser.add_subparsers(dest="task", required=True)
  for task in harness.TASKS:
    sub.add_parser(task, parents=[common])
  return parser


def config_from_args(args: argparse.Namespace) -> harness.ExperimentConfig:
  cfg = (harness.ExperimentConfig.load(args.config) if args.config
         else harness.ExperimentConfig())
  overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(cfg)
               if getattr(args, f.name, None) is not None}
  overrides["task"] = args.task
  return dataclasses.replace(cfg, **overrides).validate()


def _print_summary(rows, stream):
  for row in rows:
    head = f"{row['task']:<16} {row['mechanism']:<22} n={row['n']}"
    head += f" d={row['d']}" if row.get("d") is not None else ""
    head += f" D={row['D']}" if row.get("D") is not None else ""
    if "epsilon" in row:
      head += f" eps={row['epsilon']:g} delta={row['delta']:.3g}"
    for metric in ("l2sq_error", "linf_error", "sum_z_in"):
      if metric in row:
        head += f" {metric}={row[metric]['mean']:.4g}"
    for extra in ("bound", "advantage", "alpha_sq"):
      if extra in row:
        head += f" {extra}={row[extra]:.4g}"
    print(head, file=stream)


def main(argv=None) -> int:
  parser = build_parser()
  args = parser.parse_args(argv)
  try:
    cfg = config_from_args(args)
  except harness.ConfigError as e:
    print(f"dpstats: invalid config: {e}", file=sys.stderr)
    return 2
  except (OSError, TypeError) as e:
    print(f"dpstats: {e}", file=sys.stderr)
    return 2

  records = harness.run(cfg)
  text = harness.dumps_records(records, cfg.format, include_timing=args.timing)
  if cfg.out:
    try:
      with open(cfg.out, "w", newline="") as f:
        f.write(text)
    except OSError as e:
      print(f"dpstats: could not write {cfg.out}: {e}", file=sys.stderr)
      return 1
  else:
    sys.stdout.write(text)

  if cfg.task == "fingerprint-check":
    failed = [r for r in records if not r.bound_satisfied]
    for r in records:
      print(f"n={r.n:<4} {r.estimator:<16} lhs={r.lhs_estimate:.4f} "
            f"mse={r.mse_estimate:.4f} ok={r.bound_satisfied}", file=sys.stderr)
    if failed:
      print(f"dpstats: fingerprinting inequality failed for "
            f"{[r.estimator for r in failed]}", file=sys.stderr)
      return 1
    return 0

  rows = harness.summarize(records)
  if cfg.out:
    with open(f"{cfg.out}.summary.json", "w") as f:
      f.write(harness._fmt(rows) + "\n")
  _print_summary(rows, sys.stderr)
  return 0


if __name__ == "__main__":
  sys.exit(main())
