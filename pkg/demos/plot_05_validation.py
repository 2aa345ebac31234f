"""
Goodness of fit against the closed forms
========================================

Histogram the simulated values, compute the probability of each bin by
quadrature of the analytic density, and run a pooled Pearson chi-square
test. A deliberately wrong density is rejected.
"""

from ndr_stats import GammaPairParams, SeedSpec, sample_batch
from ndr_stats.dist import ndr_pdf
from ndr_stats.validate import build_histogram, compare_to_pdf, histogram_fits, joint_density_check

p = GammaPairParams(2.88, 0.64, 12)

###############################################################################
# One-dimensional fits
# --------------------

for name, (h, rep) in histogram_fits(p, 1_000_000, SeedSpec(5)).items():
    print(f"{name:5s} chi2={rep.chi2_stat:8.2f} dof={rep.dof:3d} p={rep.p_value:.3f} pass={rep.passed}")

d = sample_batch(p, 1_000_000, SeedSpec(6))
h = build_histogram(d, 100, (0.0, 1.0))
wrong = compare_to_pdf(h, lambda r: 1.05 * ndr_pdf(p, r))
print("density scaled by 1.05:  p =", wrong.p_value, " pass =", wrong.passed)

###############################################################################
# Joint density on a 50 x 50 grid
# -------------------------------

jc = joint_density_check(p, bins=50, n=2_000_000, seed=SeedSpec(7))
rep = jc.report
print(f"joint chi2={rep.chi2_stat:.1f} dof={rep.dof} p={rep.p_value:.3f} pass={rep.passed}")
