"""
Simulating correlated speckle intensities
=========================================

Samples follow the physical construction: a correlated complex Gaussian
pair, its squared magnitudes, and a sum of k such pairs for the Gamma case.
Every sample stream is fixed by a root seed and a stream identifier.
"""

import numpy as np

from ndr_stats import FieldParams, GammaPairParams, SeedSpec, sample_batch
from ndr_stats.validate import empirical_correlation

###############################################################################
# Intensity correlation is the square of the field correlation
# ------------------------------------------------------------

for rho_z in (0.0, 0.5, 0.8, 0.95):
    pairs = sample_batch(FieldParams(0.7, rho_z), 200_000, SeedSpec(1), "intensity")
    print(f"rho_z={rho_z:.2f}  empirical corr={empirical_correlation(pairs):.4f}  rho_z^2={rho_z**2:.4f}")

###############################################################################
# Gamma marginals
# ---------------

p = GammaPairParams(2.88, 0.64, 12)
x = sample_batch(p, 500_000, SeedSpec(2), "gamma")
print("mean", x.x1.mean(), "(k sigma =", p.mean, ")  variance", x.x1.var(), "(k sigma^2 =", p.variance, ")")

###############################################################################
# Reproducibility
# ---------------
# The same seed gives the same numbers whatever the worker count.

a = sample_batch(p, 200_000, SeedSpec(3), "ndr", workers=1)
b = sample_batch(p, 200_000, SeedSpec(3), "ndr", workers=4)
print("identical across worker counts:", np.array_equal(a, b))
