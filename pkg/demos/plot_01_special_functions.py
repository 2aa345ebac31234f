"""
Special functions behind the densities
=======================================

The joint density needs an exponentially scaled modified Bessel function
and every moment formula needs the Gauss hypergeometric function 2F1.
This script shows both, together with the log-Gamma routine they share.
"""

import math

from ndr_stats.specfun import SeriesControl, bessel_i_scaled, hyp2f1, ln_beta, ln_gamma

###############################################################################
# Log-Gamma and Beta
# ------------------
# Integers up to 171 come from an exact factorial table, everything else
# from a Lanczos approximation.

for x in (0.5, 1.0, 10.0, 171.0, 1e5):
    print(f"ln_gamma({x:g}) = {ln_gamma(x):.15g}   math.lgamma: {math.lgamma(x):.15g}")

print("B(2, 3) =", math.exp(ln_beta(2, 3)), "(exact 1/12 =", 1 / 12, ")")

###############################################################################
# Scaled Bessel function
# ----------------------
# exp(-x) I_nu(x) stays bounded, so large arguments do not overflow.

for x in (0.1, 1.0, 50.0, 1e4):
    print(f"exp(-x) I_11({x:g}) = {bessel_i_scaled(11, x):.15g}")

###############################################################################
# Gauss hypergeometric function
# -----------------------------
# Arguments below -1/2 go through the Pfaff map, which turns the slowly
# alternating series into a fast positive one.

z = -0.999
print("2F1(1, 1.5; 2.5; -0.999) =", hyp2f1(1, 1.5, 2.5, z))
print("same, tighter control     =", hyp2f1(1, 1.5, 2.5, z, SeriesControl(rel_tol=1e-15)))

# With a = -2 the series terminates: 1 - 2 b z / c + b (b + 1) z^2 / (c (c + 1))
print("terminating 2F1(-2, 3; 4; 0.3) =", hyp2f1(-2, 3, 4, 0.3),
      " polynomial:", 1 - 2 * 3 * 0.3 / 4 + 3 * 4 * 0.09 / 20)
