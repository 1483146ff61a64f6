# %% [markdown]
# # CDF estimation with the binary-tree mechanism
#
# Prefix {1..7} of {1..8} splits into the bins {1..4}, {5,6}, {7}.

# %%
import numpy as np

from dpstats import (DiscreteDistribution, PrivacyParams, RandomSource,
                     build_tree_counts, dyadic_decompose, empirical_cdf,
                     linf_distance, private_cdf, reconstruct_cdf,
                     sample_discrete, true_cdf)

for part in dyadic_decompose(7, 8):
  print(part, f"covers {part.lo}..{part.hi}")

# %%
rng = RandomSource(3)
dist = DiscreteDistribution.geometric(1024, ratio=0.995)
data = sample_discrete(dist, 10_000, rng.substream(0))
tree = build_tree_counts(data, 1024)
print("exact reconstruction:", np.array_equal(reconstruct_cdf(tree, 1024),
                                              empirical_cdf(data, 1024)))

# %%
for eps in (0.1, 1.0, 10.0):
  est = private_cdf(data, 1024, PrivacyParams(eps, 1e-6), rng.substream(1))
  print(f"eps={eps:<5g} linf to truth {linf_distance(est, true_cdf(dist)):.4f}, "
        f"to empirical {linf_distance(est, empirical_cdf(data, 1024)):.4f}")
