"""
Closed-form densities and moments for correlated Gamma intensities.

Two parameterisations are used throughout:

* field level, ``FieldParams(sigma_z, rho_z)``: two circular complex
  Gaussians whose real and imaginary parts have standard deviation
  ``sigma_z`` and whose correlation coefficient is ``rho_z``;
* intensity level, ``GammaPairParams(sigma, rho, k)``: the sum of ``k``
  independent squared-magnitude pairs, with ``sigma = 2 sigma_z**2`` and
  ``rho = rho_z**2``.

All densities are assembled in log space and exponentiated at the end.
Evaluation points may be scalars or arrays; scalars in, floats out.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .specfun import (
    DEFAULT_CONTROL,
    ConvergenceError,
    DomainError,
    SeriesControl,
    bessel_i_scaled,
    hyp2f1,
    ln_beta,
    ln_gamma,
)

__all__ = [
    "FieldParams",
    "GammaPairParams",
    "Formulation",
    "intensity_correlation",
    "gamma_marginal_pdf",
    "joint_pdf_exponential",
    "joint_pdf_gamma",
    "ratio_pdf",
    "ndr_pdf",
    "ndr_transform_pdf",
    "ndr_moment",
    "ndr_moments_all",
    "ndr_mean_band",
]

LN2 = math.log(2.0)
# below this correlation the joint density switches to the independent product
RHO_INDEPENDENT = 1e-12


def _check_rho(name: str, rho: float) -> float:
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise DomainError(f"{name} must lie in [0, 1), got {rho!r}")
    return rho


@dataclass(frozen=True)
class FieldParams:
    """Correlated circular complex Gaussian pair."""

    sigma_z: float = math.sqrt(0.5)
    rho_z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma_z) and self.sigma_z > 0.0):
            raise DomainError(f"sigma_z must be positive, got {self.sigma_z!r}")
        _check_rho("rho_z", self.rho_z)

    def to_gamma(self, k: float = 1) -> GammaPairParams:
        return GammaPairParams(sigma=2.0 * self.sigma_z**2, rho=intensity_correlation(self.rho_z), k=k)


@dataclass(frozen=True)
class GammaPairParams:
    """Correlated Gamma pair with common scale ``sigma`` and shape ``k``.

    ``rho`` is the Pearson correlation of the two intensities. ``k`` may be
    any positive real for the analytic formulas; sampling needs an integer.
    """

    sigma: float = 1.0
    rho: float = 0.0
    k: float = 1

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        _check_rho("rho", self.rho)
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise DomainError(f"k must be positive, got {self.k!r}")

    @classmethod
    def from_field(cls, field: FieldParams, k: float = 1) -> GammaPairParams:
        return field.to_gamma(k)

    def field(self) -> FieldParams:
        """Field-level parameters of one exponential component."""
        return FieldParams(sigma_z=math.sqrt(self.sigma / 2.0), rho_z=math.sqrt(self.rho))

    @property
    def is_integer_shape(self) -> bool:
        return float(self.k).is_integer()

    @property
    def mean(self) -> float:
        return self.k * self.sigma

    @property
    def variance(self) -> float:
        return self.k * self.sigma**2


class Formulation(enum.Enum):
    """Three equivalent hypergeometric forms of the NDR moments.

    F1 evaluates 2F1 at -rho/(1-rho); F2 and F3 evaluate it at rho with
    prefactors (1-rho)^(m/2) and (1-rho)^k respectively.
    """

    F1 = "F1"
    F2 = "F2"
    F3 = "F3"


def intensity_correlation(rho_z: float) -> float:
    """Correlation of |Z1|^2 and |Z2|^2 given the field correlation."""
    rho_z = _check_rho("rho_z", rho_z)
    return rho_z * rho_z


def _require_analytic_shape(p: GammaPairParams):
    if p.k < 1.0:
        raise DomainError(f"densities require k >= 1, got k = {p.k}")


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


def gamma_marginal_pdf(p: GammaPairParams, x):
    """Gamma(k, sigma) marginal density of either intensity."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("gamma_marginal_pdf requires x >= 0")
    k, s = float(p.k), p.sigma
    with np.errstate(divide="ignore"):
        shape_term = (k - 1.0) * np.log(x) if k != 1.0 else np.zeros_like(x)
    return _out(np.exp(shape_term - x / s - ln_gamma(k) - k * math.log(s)), x)


def joint_pdf_gamma(p: GammaPairParams, x1, x2):
    """Joint density of two correlated Gamma intensities (Kibble form).

    f(x1, x2) = (x1 x2)^((k-1)/2) / (G(k) s^(k+1) (1-rho) rho^((k-1)/2))
                * exp(-(x1 + x2)/(s(1-rho))) * I_{k-1}(2 sqrt(rho x1 x2)/(s(1-rho)))

    The Bessel factor is carried as e^-u I_{k-1}(u), which cancels most of
    the exponential and keeps everything finite as rho approaches 1.
    """
    _require_analytic_shape(p)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 < 0.0) or np.any(x2 < 0.0):
        raise DomainError("joint densities require x1, x2 >= 0")
    b1, b2 = np.broadcast_arrays(x1, x2)
    if p.rho < RHO_INDEPENDENT:
        f = gamma_marginal_pdf(p, b1) * gamma_marginal_pdf(p, b2)
        return _out(np.asarray(f, dtype=float), b1)

    k, s, rho = float(p.k), p.sigma, p.rho
    scale = s * (1.0 - rho)
    prod = b1 * b2
    u = 2.0 * np.sqrt(rho * prod) / scale
    log_const = -ln_gamma(k) - (k + 1.0) * math.log(s) - math.log1p(-rho) - 0.5 * (k - 1.0) * math.log(rho)
    with np.errstate(divide="ignore"):
        shape_term = 0.5 * (k - 1.0) * np.log(prod) if k != 1.0 else 0.0
        log_f = (
            log_const
            + shape_term
            - (b1 + b2) / scale
            + u
            + np.log(bessel_i_scaled(k - 1.0, u.ravel()).reshape(u.shape))
        )
    f = np.exp(log_f)
    if k != 1.0:
        f = np.where(prod == 0.0, 0.0, f)
    return _out(f, b1)


def joint_pdf_exponential(p: GammaPairParams, x1, x2):
    """Joint density of two correlated exponential intensities (k = 1)."""
    if p.k != 1:
        raise DomainError(f"joint_pdf_exponential needs k = 1, got k = {p.k}")
    return joint_pdf_gamma(p, x1, x2)


def ratio_pdf(p: GammaPairParams, z):
    """Density of Z = X1 / X2.

    f(z) = (1-rho)^k z^(k-1) (z+1) / (B(k,k) [(z+1)^2 - 4 rho z]^(k+1/2))

    The bracket is evaluated as (z-1)^2 + 4(1-rho) z, which is the same
    quantity without the cancellation near z = 1.
    """
    _require_analytic_shape(p)
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0.0)):
        raise DomainError("ratio_pdf requires z > 0")
    k, rho = float(p.k), p.rho
    bracket = (z - 1.0) ** 2 + 4.0 * (1.0 - rho) * z
    log_f = (
        k * math.log1p(-rho)
        + (k - 1.0) * np.log(z)
        + np.log1p(z)
        - ln_beta(k, k)
        - (k + 0.5) * np.log(bracket)
    )
    return _out(np.exp(log_f), z)


def _ndr_log_core(p: GammaPairParams, r: np.ndarray, two_power: float) -> np.ndarray:
    k, rho = float(p.k), p.rho
    one_minus_r2 = (1.0 - r) * (1.0 + r)
    with np.errstate(divide="ignore"):
        shape_term = (k - 1.0) * np.log(one_minus_r2) if k != 1.0 else np.zeros_like(r)
    return (
        k * math.log1p(-rho)
        + shape_term
        - ln_beta(k, k)
        - two_power * LN2
        - (k + 0.5) * np.log((1.0 - rho) + rho * r * r)
    )


def ndr_pdf(p: GammaPairParams, r):
    """Density of D = |X1 - X2| / (X1 + X2) on [0, 1].

    f(r) = (1-rho)^k (1-r^2)^(k-1) / (B(k,k) 2^(2k-2) (1 - rho + rho r^2)^(k+1/2))
    """
    _require_analytic_shape(p)
    r = np.asarray(r, dtype=float)
    if np.any(~((r >= 0.0) & (r <= 1.0))):
        raise DomainError("ndr_pdf requires 0 <= r <= 1")
    return _out(np.exp(_ndr_log_core(p, r, 2.0 * p.k - 2.0)), r)


def ndr_transform_pdf(p: GammaPairParams, r_prime):
    """Density of the signed variable D' = (Z - 1)/(Z + 1) on (-1, 1).

    Even in r'; D = |D'| so ``ndr_pdf(r) == 2 * ndr_transform_pdf(r)``.
    """
    _require_analytic_shape(p)
    r = np.asarray(r_prime, dtype=float)
    if np.any(~(np.abs(r) < 1.0)):
        raise DomainError("ndr_transform_pdf requires -1 < r' < 1")
    return _out(np.exp(_ndr_log_core(p, np.abs(r), 2.0 * p.k - 1.0)), r)


def _default_formulation(rho: float) -> Formulation:
    return Formulation.F2 if rho <= 0.5 else Formulation.F1


def ndr_moment(
    p: GammaPairParams,
    m: int,
    formulation: Formulation | str | None = None,
    ctl: SeriesControl = DEFAULT_CONTROL,
) -> float:
    """m-th moment <D^m> of the normalised dissimilarity ratio.

    All three forms share the factor B((m+1)/2, k) / (B(k,k) 2^(2k-1)):

    ====  ======================  ===========================================
    F1    (1-rho)^(-1/2)          2F1(k+1/2, (m+1)/2; k+(m+1)/2; -rho/(1-rho))
    F2    (1-rho)^(m/2)           2F1(m/2, (m+1)/2; k+(m+1)/2; rho)
    F3    (1-rho)^k               2F1(k, k+1/2; k+(m+1)/2; rho)
    ====  ======================  ===========================================

    With ``formulation=None`` F2 is used for rho <= 0.5 and F1 above.
    """
    if int(m) != m or m < 0:
        raise DomainError(f"moment order must be a non-negative integer, got {m!r}")
    m = int(m)
    if formulation is None:
        formulation = _default_formulation(p.rho)
    formulation = Formulation(formulation)
    k, rho = float(p.k), p.rho
    h = 0.5 * (m + 1)
    c = k + h
    if formulation is Formulation.F1:
        log_pre = -0.5 * math.log1p(-rho)
        args = (k + 0.5, h, c, -rho / (1.0 - rho))
    elif formulation is Formulation.F2:
        log_pre = 0.5 * m * math.log1p(-rho)
        args = (0.5 * m, h, c, rho)
    else:
        log_pre = k * math.log1p(-rho)
        args = (k, k + 0.5, c, rho)
    try:
        f = hyp2f1(*args, ctl=ctl)
    except ConvergenceError as err:
        raise ConvergenceError(
            f"ndr_moment(k={k}, rho={rho}, m={m}) formulation {formulation.value}, "
            f"2F1 argument z={args[3]!r}",
            err.residual,
            err.terms,
        ) from err
    log_val = ln_beta(h, k) - ln_beta(k, k) - (2.0 * k - 1.0) * LN2 + log_pre
    return math.exp(log_val) * f


def ndr_moments_all(p: GammaPairParams, m: int, ctl: SeriesControl = DEFAULT_CONTROL) -> dict:
    """All three formulations keyed by ``Formulation``."""
    return {f: ndr_moment(p, m, f, ctl) for f in Formulation}


def ndr_mean_band(p: GammaPairParams, ctl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, float]:
    """Mean of D and half its standard deviation."""
    mean = ndr_moment(p, 1, ctl=ctl)
    var = ndr_moment(p, 2, ctl=ctl) - mean * mean
    if var < -1e-12:
        raise ArithmeticError(f"negative NDR variance {var!r} for {p}")
    return mean, 0.5 * math.sqrt(max(var, 0.0))
