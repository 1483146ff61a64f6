# %% [markdown]
# # Gaussian mechanism
#
# Noise with standard deviation sqrt(2 ln(2/delta)) * Delta / eps is added to
# a statistic of l2-sensitivity Delta.

# %%
import numpy as np

from dpstats import PrivacyParams, RandomSource, Sensitivity
from dpstats import gaussian_mechanism, gaussian_noise_scale

p = PrivacyParams(epsilon=1.0, delta=0.05)
sigma = gaussian_noise_scale(Sensitivity(1.0), p)
print(f"sigma^2 = {sigma**2:.4f}  (2 ln 40 = {2 * np.log(40):.4f})")

# %% [markdown]
# Randomness is keyed: the same seed and substream give the same noise.

# %%
rng = RandomSource(2024)
a = gaussian_mechanism([0.0, 0.0, 0.0], Sensitivity(1.0), p, rng.substream(0))
b = gaussian_mechanism([0.0, 0.0, 0.0], Sensitivity(1.0), p, RandomSource(2024).substream(0))
print(a, np.array_equal(a, b))

# %%
noise = gaussian_mechanism(np.zeros(100_000), Sensitivity(1.0), p, rng.substream(1))
print(f"empirical variance {noise.var():.4f}")
