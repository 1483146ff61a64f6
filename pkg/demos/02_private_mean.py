# %% [markdown]
# # Private mean estimation on [-1, 1]^d
#
# The noisy empirical mean pays d/n for sampling plus about
# 8 d^2 ln(2/delta) / (eps^2 n^2) for privacy. The sweep below shows the
# privacy term taking over as epsilon shrinks.

# %%
from dpstats.harness import ExperimentConfig, run_mean_sweep, summarize

cfg = ExperimentConfig(n=[1000], d=[10], epsilon=[0.1, 0.3, 1.0, 3.0], trials=500, seed=1)
for row in summarize(run_mean_sweep(cfg)):
  print(f"{row['mechanism']:<15} eps={row['epsilon']:<4g} "
        f"mse={row['l2sq_error']['mean']:.5f}  reference={row['bound']:.5f}")

# %% [markdown]
# Scaling n at fixed epsilon: the privacy term decays like 1/n^2, the
# sampling term like 1/n.

# %%
cfg = ExperimentConfig(n=[100, 1000, 10_000], d=[10], epsilon=[1.0], trials=300, seed=2)
for row in summarize(run_mean_sweep(cfg)):
  if row["mechanism"] == "private_mean":
    print(f"n={row['n']:<6} mse={row['l2sq_error']['mean']:.6f} bound={row['bound']:.6f}")
