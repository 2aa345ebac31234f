import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from ndr_stats import (
    ConvergenceError,
    SeriesControl,
    DomainError,
    FieldParams,
    Formulation,
    GammaPairParams,
    gamma_marginal_pdf,
    intensity_correlation,
    joint_pdf_exponential,
    joint_pdf_gamma,
    ndr_mean_band,
    ndr_moment,
    ndr_pdf,
    ndr_transform_pdf,
    ratio_pdf,
)
from ndr_stats.sampling import SeedSpec, sample_batch

P = GammaPairParams
NORM_GRID = [(k, rho) for k in (1, 2, 5, 12) for rho in (0.0, 0.3, 0.64, 0.9, 0.99)]
RHO_FINE = [round(0.1 * i, 1) for i in range(10)] + [0.95]


def quad01(f):
    return integrate.quad(f, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=400)[0]


def kibble_reference(p, x1, x2):
    """Direct transcription with scipy's unscaled I_nu, usable at moderate arguments."""
    k, s, r = p.k, p.sigma, p.rho
    u = 2 * np.sqrt(r * x1 * x2) / (s * (1 - r))
    return ((x1 * x2) ** ((k - 1) / 2) / (math.gamma(k) * s ** (k + 1) * (1 - r) * r ** ((k - 1) / 2))
            * np.exp(-(x1 + x2) / (s * (1 - r))) * special.iv(k - 1, u))


# --- parameters -------------------------------------------------------------

def test_field_to_gamma_mapping():
    g = FieldParams(0.7, 0.8).to_gamma(12)
    assert g.sigma == pytest.approx(0.98)
    assert g.rho == pytest.approx(0.64)
    back = g.field()
    assert back.sigma_z == pytest.approx(0.7) and back.rho_z == pytest.approx(0.8)
    assert g.mean == pytest.approx(12 * 0.98) and g.variance == pytest.approx(12 * 0.98**2)


@pytest.mark.parametrize("kwargs", [dict(sigma=0), dict(rho=1.0), dict(rho=-0.1), dict(k=0)])
def test_gamma_params_validation(kwargs):
    with pytest.raises(DomainError):
        P(**kwargs)


def test_intensity_correlation():
    assert intensity_correlation(0.0) == 0.0
    assert intensity_correlation(0.8) == pytest.approx(0.64)
    eps = 1e-9
    assert intensity_correlation(1 - eps) == pytest.approx((1 - eps) ** 2)
    with pytest.raises(DomainError):
        intensity_correlation(1.0)


# --- joint densities --------------------------------------------------------

def test_joint_exponential_independent_examples():
    assert joint_pdf_exponential(P(1, 0, 1), 0, 0) == 1.0
    assert joint_pdf_exponential(P(1, 0, 1), 1, 2) == pytest.approx(math.exp(-3), rel=1e-14)


def test_joint_exponential_requires_k1():
    with pytest.raises(DomainError):
        joint_pdf_exponential(P(1, 0.5, 2), 1, 1)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.64, 0.9])
def test_joint_gamma_k1_equals_exponential(rho):
    x = np.linspace(0, 6, 13)
    a = joint_pdf_gamma(P(2.0, rho, 1), x[:, None], x[None, :])
    b = joint_pdf_exponential(P(2.0, rho, 1), x[:, None], x[None, :])
    np.testing.assert_array_equal(a, b)


def test_joint_gamma_independence_limit():
    k = 3
    expected = (2**2 * math.exp(-2) / 2) * (1 * math.exp(-1) / 2)
    assert joint_pdf_gamma(P(1, 0, k), 2, 1) == pytest.approx(expected, rel=1e-14)
    # the rho -> 0 limit of the Bessel form meets the product form
    assert joint_pdf_gamma(P(1, 1e-9, k), 2, 1) == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("p", [P(2.88, 0.64, 12), P(0.98, 0.64, 1), P(1, 0.3, 3), P(1, 0.9, 2.5)])
def test_joint_gamma_matches_direct_formula(p):
    x = np.linspace(0.01, 3 * p.mean, 30)
    a = joint_pdf_gamma(p, x[:, None], x[None, :])
    b = kibble_reference(p, x[:, None], x[None, :])
    mask = b > 1e-250
    assert np.max(np.abs(a[mask] - b[mask]) / b[mask]) <= 1e-11


def test_joint_gamma_axes():
    assert joint_pdf_gamma(P(1, 0.5, 2), 0.0, 1.0) == 0.0
    assert joint_pdf_gamma(P(1, 0.5, 1), 0.0, 1.0) == pytest.approx(2 * math.exp(-2))


def test_joint_gamma_finite_near_unit_correlation():
    v = joint_pdf_gamma(P(1, 0.999999, 12), 12.0, 12.001)
    assert math.isfinite(v) and v > 0


def test_joint_gamma_normalisation_tensor_quadrature(illustration_gamma):
    p = illustration_gamma
    hi = p.k * p.sigma + 12 * math.sqrt(p.k) * p.sigma
    t, w = np.polynomial.legendre.leggauss(50)
    x, w = (t + 1) * hi / 2, w * hi / 2
    total = np.sum(w[:, None] * w[None, :] * joint_pdf_gamma(p, x[:, None], x[None, :]))
    assert total == pytest.approx(1.0, abs=1e-6)


def test_joint_exponential_against_mc_cell():
    p = P(2.88, 0.64, 1)
    n = 4_000_000
    pairs = sample_batch(p, n, SeedSpec(99), "intensity")
    lo, hi = 0.8, 1.2
    inside = np.count_nonzero((pairs.x1 >= lo) & (pairs.x1 < hi) & (pairs.x2 >= lo) & (pairs.x2 < hi))
    prob = integrate.dblquad(lambda y, x: joint_pdf_exponential(p, x, y), lo, hi, lo, hi)[0]
    se = math.sqrt(prob * (1 - prob) / n)
    assert abs(inside / n - prob) <= 4 * se
    # and the centre value matches the cell average to second order
    assert joint_pdf_exponential(p, 1.0, 1.0) == pytest.approx(prob / (hi - lo) ** 2, rel=5e-3)


def test_joint_negative_argument():
    with pytest.raises(DomainError):
        joint_pdf_gamma(P(1, 0.5, 2), -1.0, 1.0)


def test_densities_reject_small_shape():
    with pytest.raises(DomainError):
        ndr_pdf(P(1, 0.5, 0.5), 0.3)


def test_gamma_marginal():
    p = P(2.0, 0.3, 4)
    x = np.linspace(0, 40, 9)
    np.testing.assert_allclose(gamma_marginal_pdf(p, x), special.gammaln(1) * 0 + np.exp(
        3 * np.log(np.where(x > 0, x, 1)) - x / 2 - special.gammaln(4) - 4 * math.log(2)) * (x > 0), rtol=1e-13)


# --- ratio ------------------------------------------------------------------

def test_ratio_examples():
    assert ratio_pdf(P(1, 0, 1), 1.0) == pytest.approx(0.25, rel=1e-14)
    assert ratio_pdf(P(1, 0.5, 1), 1.0) == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-14)


@pytest.mark.parametrize("k", [1, 2, 5, 12, 3.5])
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.64, 0.9])
def test_ratio_reciprocal_symmetry(k, rho):
    p = P(1, rho, k)
    z = np.array([0.1, 0.5, 1, 2, 10])
    np.testing.assert_allclose(ratio_pdf(p, z), ratio_pdf(p, 1 / z) / z**2, rtol=1e-12)


def test_ratio_domain():
    with pytest.raises(DomainError):
        ratio_pdf(P(), 0.0)


@pytest.mark.parametrize("k, rho", NORM_GRID)
def test_ratio_normalisation(k, rho):
    p = P(1, rho, k)
    total = integrate.quad(lambda u: ratio_pdf(p, u / (1 - u)) / (1 - u) ** 2, 0, 1,
                           epsabs=1e-12, limit=400, points=[0.5])[0]
    assert total == pytest.approx(1.0, abs=1e-7)


# --- NDR ----------------------------------------------------------------

def test_ndr_uniform_case():
    r = np.linspace(0, 1, 1001)
    assert np.all(np.abs(ndr_pdf(P(1, 0, 1), r) - 1.0) <= 1e-12)


@pytest.mark.parametrize("k", [2, 3, 12, 2.5])
@pytest.mark.parametrize("rho", [0.0, 0.5, 0.9])
def test_ndr_vanishes_at_one(k, rho):
    assert ndr_pdf(P(1, rho, k), 1.0) == 0.0


def test_ndr_at_zero_k1():
    assert ndr_pdf(P(1, 0.64, 1), 0.0) == pytest.approx(1 / 0.6, rel=1e-14)


def test_ndr_at_zero_k1_against_mc():
    p = P(1, 0.64, 1)
    n = 2_000_000
    d = sample_batch(p, n, SeedSpec(5), "ndr")
    width = 0.01
    prob = integrate.quad(lambda r: ndr_pdf(p, r), 0, width)[0]
    frac = np.count_nonzero(d < width) / n
    assert abs(frac - prob) <= 4 * math.sqrt(prob * (1 - prob) / n)
    assert frac / width == pytest.approx(ndr_pdf(p, 0.0), rel=0.02)


def test_ndr_domain():
    with pytest.raises(DomainError):
        ndr_pdf(P(), 1.01)
    with pytest.raises(DomainError):
        ndr_pdf(P(), -0.01)


@pytest.mark.parametrize("k, rho", NORM_GRID)
def test_ndr_normalisation(k, rho):
    assert quad01(lambda r: ndr_pdf(P(1, rho, k), r)) == pytest.approx(1.0, abs=1e-8)


def test_transform_pdf_examples():
    p = P(1, 0, 1)
    assert ndr_transform_pdf(p, 0.3) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(DomainError):
        ndr_transform_pdf(p, 1.0)


@given(st.floats(-0.999, 0.999), st.sampled_from([1, 2, 5, 12]), st.sampled_from([0.0, 0.3, 0.9]))
def test_transform_pdf_even_and_half_of_ndr(r, k, rho):
    p = P(1, rho, k)
    assert ndr_transform_pdf(p, r) == ndr_transform_pdf(p, -r)
    assert ndr_pdf(p, abs(r)) == pytest.approx(2 * ndr_transform_pdf(p, r), rel=1e-14)


@pytest.mark.parametrize("k, rho", [(1, 0.0), (2, 0.64), (12, 0.9)])
def test_transform_pdf_normalisation(k, rho):
    p = P(1, rho, k)
    total = integrate.quad(lambda r: ndr_transform_pdf(p, r), -1, 1, epsabs=1e-12, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("k", [1, 5, 12])
@pytest.mark.parametrize("rho", [0.0, 0.64, 0.9])
def test_ndr_is_pushforward_of_ratio(k, rho):
    p = P(1, rho, k)
    r = np.arange(1, 20) * 0.05
    push = (ratio_pdf(p, (1 + r) / (1 - r)) * 2 / (1 - r) ** 2
            + ratio_pdf(p, (1 - r) / (1 + r)) * 2 / (1 + r) ** 2)
    np.testing.assert_allclose(ndr_pdf(p, r), push, rtol=1e-10)


# --- moments ----------------------------------------------------------------

@pytest.mark.parametrize("form", list(Formulation))
def test_moment_anchor_uniform(form):
    assert ndr_moment(P(1, 0, 1), 1, form) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5, 12, 0.5, 2.5])
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.9, 0.99])
@pytest.mark.parametrize("form", list(Formulation))
def test_moment_zero_is_one(k, rho, form):
    assert ndr_moment(P(1, rho, k), 0, form) == pytest.approx(1.0, abs=1e-12)


def test_moment_k2_against_quadrature():
    oracle = quad01(lambda r: r * ndr_pdf(P(1, 0, 2), r))
    assert oracle == pytest.approx(0.375, abs=1e-12)
    for form in Formulation:
        assert ndr_moment(P(1, 0, 2), 1, form) == pytest.approx(oracle, abs=1e-12)


def test_moment_formulations_agree():
    worst = 0.0
    for k in range(1, 11):
        for rho in RHO_FINE:
            for m in range(5):
                vals = [ndr_moment(P(1, rho, k), m, f) for f in Formulation]
                worst = max(worst, (max(vals) - min(vals)) / max(vals))
    assert worst <= 1e-9


@pytest.mark.parametrize("k", [1, 3, 7, 10])
@pytest.mark.parametrize("m", range(5))
def test_moment_matches_quadrature(k, m):
    for rho in RHO_FINE:
        p = P(1, rho, k)
        assert ndr_moment(p, m) == pytest.approx(quad01(lambda r: r**m * ndr_pdf(p, r)), abs=1e-7)


def test_moment_in_unit_interval_and_default_choice():
    for rho in (0.2, 0.7):
        p = P(1, rho, 4)
        v = ndr_moment(p, 3)
        assert 0.0 <= v <= 1.0
        expected_form = Formulation.F2 if rho <= 0.5 else Formulation.F1
        assert v == ndr_moment(p, 3, expected_form)
    assert ndr_moment(P(1, 0.3, 2), 1, "F3") == ndr_moment(P(1, 0.3, 2), 1, Formulation.F3)


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_mean_nonincreasing_in_rho(k):
    means = [ndr_moment(P(1, 0.05 * i, k), 1) for i in range(20)]
    assert all(a >= b for a, b in zip(means, means[1:]))


def test_moment_bad_order():
    with pytest.raises(DomainError):
        ndr_moment(P(), -1)
    with pytest.raises(DomainError):
        ndr_moment(P(), 1.5)


def test_mean_band_uniform():
    mean, half = ndr_mean_band(P(1, 0, 1))
    assert mean == pytest.approx(0.5, abs=1e-12)
    assert half == pytest.approx(1 / (2 * math.sqrt(12)), rel=1e-10)


def test_mean_band_degenerates_near_unit_rho():
    long_series = SeriesControl(max_terms=200_000)
    means = [ndr_mean_band(P(1, rho, 3), long_series)[0] for rho in (0.9, 0.99, 0.999, 0.9999)]
    assert all(a > b for a, b in zip(means, means[1:]))
    assert means[-1] < 0.01


def test_moment_reports_convergence_failure_near_unit_rho():
    with pytest.raises(ConvergenceError) as info:
        ndr_moment(P(1, 0.9999, 3), 2)
    assert info.value.residual > 0 and info.value.terms == SeriesControl().max_terms


def test_mean_band_against_mc(illustration_gamma):
    n = 1_000_000
    d = sample_batch(illustration_gamma, n, SeedSpec(17), "ndr")
    mean, half = ndr_mean_band(illustration_gamma)
    assert abs(d.mean() - mean) <= 4 * d.std(ddof=1) / math.sqrt(n)
    assert 2 * half == pytest.approx(d.std(), rel=0.01)
