"""
Joint, ratio and NDR densities
==============================

Densities for a pair of correlated Gamma intensities with shape k,
scale sigma and correlation rho, and for two derived quantities, the
ratio Z = X / Y and the normalised dissimilarity ratio
D = |X - Y| / (X + Y).
"""

import numpy as np
from scipy import integrate

from ndr_stats import FieldParams, GammaPairParams, joint_pdf_gamma, ndr_pdf, ratio_pdf

###############################################################################
# Parameters
# ----------
# The field-level description (sigma_z, rho_z) of the underlying complex
# Gaussian pair maps to the intensity level by sigma = 2 sigma_z^2 and
# rho = rho_z^2.

p = FieldParams(sigma_z=0.7, rho_z=0.8).to_gamma(12)
print(p, " mean", p.mean, " variance", p.variance)

###############################################################################
# Joint density
# -------------
# A tensor Gauss-Legendre rule over a generous square recovers unit mass.

hi = p.mean + 12 * np.sqrt(p.k) * p.sigma
t, w = np.polynomial.legendre.leggauss(60)
x, w = (t + 1) * hi / 2, w * hi / 2
mass = np.sum(w[:, None] * w[None, :] * joint_pdf_gamma(p, x[:, None], x[None, :]))
print("joint mass:", mass)

###############################################################################
# The ratio and the NDR
# ---------------------
# Z and 1/Z have the same law, and for k = 1 at rho = 0 the NDR is uniform.

z = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
print("f_Z(z)          :", ratio_pdf(p, z))
print("f_Z(1/z) / z^2  :", ratio_pdf(p, 1 / z) / z**2)
print("uniform case    :", ndr_pdf(GammaPairParams(1.0, 0.0, 1), np.linspace(0, 1, 5)))

for k in (1, 2, 5, 12):
    q = GammaPairParams(1.0, 0.64, k)
    total = integrate.quad(lambda r: ndr_pdf(q, r), 0, 1)[0]
    print(f"k={k:2d}: f_D(0)={ndr_pdf(q, 0.0):.4f}  f_D(0.5)={ndr_pdf(q, 0.5):.4f}  mass={total:.12f}")
