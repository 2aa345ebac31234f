"""
Monte-Carlo validation of the closed forms and figure-data tables.

Goodness of fit is judged by a Pearson chi-square over histogram cells
whose expected counts come from integrating the analytic density over
each cell (Gauss-Legendre), after pooling cells with expected count < 5.
A per-bin sup-norm check with a statistical allowance is reported
alongside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import dist
from .dist import Formulation, GammaPairParams, FieldParams
from .sampling import IntensityPair, SeedSpec, ndr_from_pairs, sample_batch

__all__ = [
    "Histogram",
    "Histogram2D",
    "FitReport",
    "MomentReport",
    "Table",
    "JointDensityCheck",
    "CheckResult",
    "ValidationReport",
    "empirical_correlation",
    "build_histogram",
    "build_histogram_2d",
    "compare_to_pdf",
    "compare_to_pdf_2d",
    "ratio_range",
    "moment_table",
    "figure_corr_curve",
    "figure_ndr_vs_rho",
    "figure_moments_vs_k",
    "joint_density_check",
    "histogram_fits",
    "formulation_equivalence",
    "run_validation",
]

ALPHA = 0.01
MIN_EXPECTED = 5.0
# per-bin allowance in the sup check: Z_SUP standard errors plus SLACK_COUNTS counts
Z_SUP = 5.0
SLACK_COUNTS = 5.0
GL_NODES_1D = 16
GL_NODES_2D = 8


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    """Density-normalised 1-D histogram.

    ``density`` integrates to one over the in-range samples; samples
    below/above the range are kept in ``underflow``/``overflow``.
    """

    edges: np.ndarray
    counts: np.ndarray
    n_total: int
    underflow: int = 0
    overflow: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def n_in_range(self) -> int:
        return int(self.counts.sum())

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_in_range * self.widths)

    def merge(self, other: Histogram) -> Histogram:
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram(
            self.edges,
            self.counts + other.counts,
            self.n_total + other.n_total,
            self.underflow + other.underflow,
            self.overflow + other.overflow,
        )


@dataclass(frozen=True)
class Histogram2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    n_total: int

    @property
    def n_in_range(self) -> int:
        return int(self.counts.sum())

    @property
    def out_of_range(self) -> int:
        return self.n_total - self.n_in_range

    @property
    def cell_areas(self) -> np.ndarray:
        return np.outer(np.diff(self.x_edges), np.diff(self.y_edges))

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_in_range * self.cell_areas)

    def merge(self, other: Histogram2D) -> Histogram2D:
        if not (np.array_equal(self.x_edges, other.x_edges) and np.array_equal(self.y_edges, other.y_edges)):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram2D(self.x_edges, self.y_edges, self.counts + other.counts, self.n_total + other.n_total)


def build_histogram(samples, bins: int, range: tuple[float, float]) -> Histogram:
    """Histogram ``samples`` into ``bins`` equal bins over ``range``.

    The upper edge is inclusive, matching ``numpy.histogram``.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("cannot build a histogram from an empty sample")
    lo, hi = map(float, range)
    if int(bins) != bins or bins < 1:
        raise ValueError(f"bins must be a positive integer, got {bins!r}")
    if not lo < hi:
        raise ValueError(f"range must satisfy lo < hi, got {range!r}")
    counts, edges = np.histogram(samples, bins=int(bins), range=(lo, hi))
    under = int(np.count_nonzero(samples < lo))
    over = int(np.count_nonzero(samples > hi))
    if counts.sum() == 0:
        raise ValueError("no samples fall inside the histogram range")
    return Histogram(edges, counts, samples.size, under, over)


def build_histogram_2d(x, y, bins: int, x_range, y_range) -> Histogram2D:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot build a histogram from an empty sample")
    counts, xe, ye = np.histogram2d(x, y, bins=int(bins), range=[x_range, y_range])
    return Histogram2D(xe, ye, counts.astype(np.int64), x.size)


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    sup_distance: float
    sup_bound: float
    chi2_stat: float
    dof: int
    p_value: float
    alpha: float
    sup_ok: bool
    passed: bool

    def as_dict(self) -> dict:
        return {
            "sup_distance": self.sup_distance,
            "sup_bound": self.sup_bound,
            "chi2_stat": self.chi2_stat,
            "dof": self.dof,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "sup_ok": self.sup_ok,
            "pass": self.passed,
        }


def _eval_pdf(pdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(pdf(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda v: float(pdf(v)))(x)


def _bin_probabilities(pdf: Callable, edges: np.ndarray, nodes: int = GL_NODES_1D) -> np.ndarray:
    t, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    x = lo + half * (t + 1.0)
    return np.sum(_eval_pdf(pdf, x) * w * half, axis=1)


def _pooled_chi2(observed: np.ndarray, expected: np.ndarray) -> tuple[float, int]:
    """Chi-square after pooling every cell with expected count < 5 into one."""
    observed = np.asarray(observed, dtype=float).ravel()
    expected = np.asarray(expected, dtype=float).ravel()
    small = expected < MIN_EXPECTED
    obs = list(observed[~small])
    exp = list(expected[~small])
    if small.any():
        o_pool, e_pool = observed[small].sum(), expected[small].sum()
        if e_pool >= MIN_EXPECTED or not exp:
            obs.append(o_pool)
            exp.append(e_pool)
        else:
            j = int(np.argmin(exp))
            obs[j] += o_pool
            exp[j] += e_pool
    obs_a, exp_a = np.array(obs), np.array(exp)
    chi2 = float(np.sum((obs_a - exp_a) ** 2 / exp_a))
    return chi2, max(len(obs_a) - 1, 1)


def _sup_check(counts, n_in, areas, expected_counts, ref_centre, ref_average):
    """Per-cell comparison of the empirical density with the analytic one.

    ``ref_centre`` and ``ref_average`` are the analytic densities (at the
    cell centre and averaged over the cell), conditioned on the histogram
    range. Each cell may deviate by Z_SUP standard errors plus
    SLACK_COUNTS counts plus the centre-vs-average discretisation gap.
    """
    scale = n_in * areas
    dev = np.abs(counts / scale - ref_centre)
    allow = (Z_SUP * np.sqrt(expected_counts) + SLACK_COUNTS) / scale + np.abs(ref_centre - ref_average)
    return float(dev.max()), float(allow.max()), bool(np.all(dev <= allow))


def compare_to_pdf(h: Histogram, pdf: Callable, alpha: float = ALPHA) -> FitReport:
    """Chi-square and sup-distance of a 1-D histogram against a density.

    Bin probabilities are integrated with 16-point Gauss-Legendre per bin.
    When the range does not hold the full support the remaining mass forms
    one tail cell matched against ``underflow + overflow``.
    """
    probs = _bin_probabilities(pdf, h.edges)
    n = h.n_total
    expected = n * probs
    tail_p = max(0.0, 1.0 - probs.sum())
    obs = np.append(h.counts, h.underflow + h.overflow)
    exp = np.append(expected, n * tail_p)
    chi2, dof = _pooled_chi2(obs, exp)
    p_value = float(stats.chi2.sf(chi2, dof))
    p_range = max(probs.sum(), 1e-300)
    centre = _eval_pdf(pdf, h.centers) / p_range
    average = probs / (h.widths * p_range)
    sup, bound, sup_ok = _sup_check(h.counts, h.n_in_range, h.widths, expected, centre, average)
    return FitReport(sup, bound, chi2, dof, p_value, alpha, sup_ok, bool(p_value >= alpha and sup_ok))


def _cell_probabilities(pdf2: Callable, xe: np.ndarray, ye: np.ndarray, nodes: int = GL_NODES_2D) -> np.ndarray:
    t, w = np.polynomial.legendre.leggauss(nodes)
    hx = 0.5 * np.diff(xe)
    hy = 0.5 * np.diff(ye)
    xs = (xe[:-1, None] + hx[:, None] * (t + 1.0)).ravel()
    ys = (ye[:-1, None] + hy[:, None] * (t + 1.0)).ravel()
    vals = np.asarray(pdf2(xs[:, None], ys[None, :]), dtype=float)
    vals = vals.reshape(len(hx), nodes, len(hy), nodes)
    return np.einsum("injm,n,m->ij", vals, w, w) * np.outer(hx, hy)


def compare_to_pdf_2d(h: Histogram2D, pdf2: Callable, alpha: float = ALPHA) -> tuple[FitReport, np.ndarray]:
    """Chi-square of a 2-D histogram against a joint density.

    Samples outside the grid are excluded from the statistic. Returns the
    report and the per-cell probabilities.
    """
    probs = _cell_probabilities(pdf2, h.x_edges, h.y_edges)
    n = h.n_total
    expected = n * probs
    chi2, dof = _pooled_chi2(h.counts, expected)
    p_value = float(stats.chi2.sf(chi2, dof))
    xc = 0.5 * (h.x_edges[1:] + h.x_edges[:-1])
    yc = 0.5 * (h.y_edges[1:] + h.y_edges[:-1])
    centre = np.asarray(pdf2(xc[:, None], yc[None, :]), dtype=float)
    areas = h.cell_areas
    p_range = max(probs.sum(), 1e-300)
    sup, bound, sup_ok = _sup_check(h.counts, h.n_in_range, areas, expected, centre / p_range,
                                    probs / (areas * p_range))
    return FitReport(sup, bound, chi2, dof, p_value, alpha, sup_ok, bool(p_value >= alpha and sup_ok)), probs


def empirical_correlation(pairs) -> float:
    """Pearson correlation of an ``IntensityPair`` or an (N, 2) array."""
    if isinstance(pairs, IntensityPair):
        x1, x2 = np.asarray(pairs.x1, dtype=float), np.asarray(pairs.x2, dtype=float)
    else:
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("pairs must be an IntensityPair or an (N, 2) array")
        x1, x2 = arr[:, 0], arr[:, 1]
    if x1.size < 2:
        raise ValueError("need at least two pairs")
    d1 = x1 - x1.mean()
    d2 = x2 - x2.mean()
    v1, v2 = np.dot(d1, d1), np.dot(d2, d2)
    if v1 == 0.0 or v2 == 0.0:
        raise ValueError("correlation undefined for a coordinate with zero variance")
    return float(np.clip(np.dot(d1, d2) / math.sqrt(v1 * v2), -1.0, 1.0))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    m: int
    analytic_f1: float
    analytic_f2: float
    analytic_f3: float
    mc_estimate: float
    mc_std_error: float
    n: int

    @property
    def formulation_spread(self) -> float:
        vals = (self.analytic_f1, self.analytic_f2, self.analytic_f3)
        ref = max(abs(v) for v in vals)
        return (max(vals) - min(vals)) / ref if ref > 0 else 0.0

    @property
    def within_tolerance(self) -> bool:
        """MC estimate within 4 standard errors of the F2 value."""
        return abs(self.mc_estimate - self.analytic_f2) <= 4.0 * self.mc_std_error + 1e-12


def moment_table(
    p: GammaPairParams,
    orders: Sequence[int],
    n: int,
    seed: SeedSpec = SeedSpec(),
    samples: np.ndarray | None = None,
) -> list[MomentReport]:
    """Analytic moments in all three forms next to Monte-Carlo estimates."""
    orders = sorted(set(int(m) for m in orders))
    if any(m < 0 or m > 8 for m in orders):
        raise ValueError("moment orders must lie in 0..8")
    d = samples if samples is not None else sample_batch(p, n, seed, "ndr")
    rows = []
    for m in orders:
        vals = dist.ndr_moments_all(p, m)
        if m == 0:
            est, se = 1.0, 0.0
        else:
            dm = d**m
            est = float(dm.mean())
            se = float(dm.std(ddof=1) / math.sqrt(d.size))
        rows.append(MomentReport(m, vals[Formulation.F1], vals[Formulation.F2], vals[Formulation.F3], est, se, d.size))
    return rows


# ---------------------------------------------------------------------------
# Figure tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Table:
    """Column-named rows, ready for CSV export."""

    columns: tuple[str, ...]
    rows: list[tuple]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


RHO_Z_GRID = tuple(round(0.1 * i, 1) for i in range(10))


def figure_corr_curve(rho_z_grid=RHO_Z_GRID, n: int = 1_000_000, seed: SeedSpec = SeedSpec(),
                      sigma_z: float = 0.7) -> Table:
    """Empirical intensity correlation against rho_z^2."""
    rows = []
    for i, rz in enumerate(rho_z_grid):
        s = SeedSpec(seed.seed, seed.stream_id + i)
        pairs = sample_batch(FieldParams(sigma_z, rz), n, s, "intensity")
        rows.append((float(rz), empirical_correlation(pairs), dist.intensity_correlation(rz)))
    return Table(("rho_z", "empirical_corr", "theory_rho_z2"), rows, {"n": n, "seed": seed.seed})


RHO_GRID = tuple(round(0.01 * i, 2) for i in range(100))


def figure_ndr_vs_rho(k_set=(1, 2, 3, 5, 12), rho_grid=RHO_GRID) -> Table:
    """Mean of D and the mean +- half standard deviation band along rho."""
    rows = []
    for k in k_set:
        for rho in rho_grid:
            mean, half = dist.ndr_mean_band(GammaPairParams(1.0, rho, k))
            rows.append((k, float(rho), mean, mean - half, mean + half))
    return Table(("k", "rho", "mean", "lower", "upper"), rows)


def figure_moments_vs_k(k_grid=tuple(range(1, 31)), m_set=(1, 2, 3, 4), rho: float = 0.0) -> Table:
    """First moments of D as a function of k at fixed rho."""
    rows = []
    for k in k_grid:
        p = GammaPairParams(1.0, rho, k)
        rows.append((k,) + tuple(dist.ndr_moment(p, m) for m in m_set))
    return Table(("k",) + tuple(f"moment_{m}" for m in m_set), rows, {"rho": rho})


@dataclass(frozen=True)
class JointDensityCheck:
    histogram: Histogram2D
    analytic: np.ndarray  # density at cell centres
    cell_probabilities: np.ndarray
    report: FitReport
    marginal_x: Table

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.histogram.x_edges[1:] + self.histogram.x_edges[:-1])

    @property
    def y_centers(self) -> np.ndarray:
        return 0.5 * (self.histogram.y_edges[1:] + self.histogram.y_edges[:-1])


def joint_range(p: GammaPairParams) -> tuple[float, float]:
    return 0.0, p.k * p.sigma + 10.0 * math.sqrt(p.k) * p.sigma


def joint_density_check(
    p: GammaPairParams,
    bins: int = 50,
    n: int = 10_000_000,
    seed: SeedSpec = SeedSpec(),
    alpha: float = ALPHA,
    perturb: float = 0.0,
    pairs: IntensityPair | None = None,
) -> JointDensityCheck:
    """2-D histogram of sampled Gamma pairs against the joint density.

    The grid spans [0, k sigma + 10 sqrt(k) sigma] on both axes.
    ``perturb`` scales the analytic density by (1 + perturb), for power
    checks.
    """
    if pairs is None:
        pairs = sample_batch(p, n, seed, "gamma")
    rng = joint_range(p)
    h = build_histogram_2d(pairs.x1, pairs.x2, bins, rng, rng)

    def pdf2(a, b):
        return (1.0 + perturb) * np.asarray(dist.joint_pdf_gamma(p, a, b))

    report, probs = compare_to_pdf_2d(h, pdf2, alpha)
    xc = 0.5 * (h.x_edges[1:] + h.x_edges[:-1])
    yc = 0.5 * (h.y_edges[1:] + h.y_edges[:-1])
    analytic = pdf2(xc[:, None], yc[None, :])
    widths = np.diff(h.x_edges)
    hx = build_histogram(pairs.x1, bins, rng)
    marg = Table(
        ("x", "empirical_marginal", "marginal_from_joint", "gamma_marginal"),
        list(zip(xc.tolist(), (hx.counts / (h.n_total * widths)).tolist(),
                 (probs.sum(axis=1) / widths).tolist(),
                 np.asarray(dist.gamma_marginal_pdf(p, xc)).tolist())),
    )
    return JointDensityCheck(h, analytic, probs, report, marg)


def ratio_range(p: GammaPairParams) -> tuple[float, float]:
    """Histogram range for X/Y: out to about 8 spreads above 1."""
    spread = math.sqrt(2.0 * (1.0 - p.rho) / p.k)
    return 0.0, min(20.0, 1.0 + 8.0 * spread)


def histogram_fits(
    p: GammaPairParams,
    n: int,
    seed: SeedSpec = SeedSpec(),
    bins: int = 100,
    alpha: float = ALPHA,
    perturb: float = 0.0,
) -> dict:
    """Fit the ratio and NDR histograms of one sample of Gamma pairs.

    Returns ``{"ratio": (Histogram, FitReport), "ndr": (Histogram, FitReport)}``.
    """
    pairs = sample_batch(p, n, seed, "gamma")
    z = pairs.x1 / pairs.x2
    d = ndr_from_pairs(pairs.x1, pairs.x2)
    h_ratio = build_histogram(z, bins, ratio_range(p))
    h_ndr = build_histogram(d, bins, (0.0, 1.0))

    def f_ratio(x):
        x = np.asarray(x, dtype=float)
        # the first bin's quadrature nodes are strictly positive
        return (1.0 + perturb) * np.asarray(dist.ratio_pdf(p, x))

    def f_ndr(x):
        return (1.0 + perturb) * np.asarray(dist.ndr_pdf(p, x))

    return {
        "ratio": (h_ratio, compare_to_pdf(h_ratio, f_ratio, alpha)),
        "ndr": (h_ndr, compare_to_pdf(h_ndr, f_ndr, alpha)),
    }


def formulation_equivalence(k_values=range(1, 11), orders=range(5),
                            rho_values=tuple(round(0.1 * i, 1) for i in range(10)) + (0.95,)) -> float:
    """Largest pairwise relative spread between F1, F2 and F3 over a grid."""
    worst = 0.0
    for k in k_values:
        for rho in rho_values:
            p = GammaPairParams(1.0, rho, k)
            for m in orders:
                vals = list(dist.ndr_moments_all(p, m).values())
                ref = max(abs(v) for v in vals)
                if ref > 0:
                    worst = max(worst, (max(vals) - min(vals)) / ref)
    return worst


# ---------------------------------------------------------------------------
# Full suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict

    def as_dict(self) -> dict:
        return {"name": self.name, "pass": self.passed, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: list[CheckResult]
    config: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"pass": self.passed, "failed": self.failed, "config": self.config,
                "checks": [c.as_dict() for c in self.checks]}


FIT_GRID = tuple((k, rho) for k in (1, 2, 12) for rho in (0.0, 0.3, 0.64, 0.9))


def run_validation(
    n: int | None = None,
    seed: int = 12345,
    quick: bool = False,
    perturb_pdf: float = 0.0,
    sigma: float = 2.88,
    joint_field: FieldParams = FieldParams(0.7, 0.8),
    bins: int = 100,
) -> ValidationReport:
    """Correlation curve, histogram fits, joint fits, moment table, equivalence.

    ``quick`` drops the default sample size from 1e6 to 1e5 and the
    significance level from 1% to 0.1%, with a correlation tolerance of
    0.02 instead of 0.01.
    """
    if n is None:
        n = 100_000 if quick else 1_000_000
    alpha = 0.001 if quick else ALPHA
    corr_tol = 0.02 if quick else 0.01
    checks: list[CheckResult] = []
    stream = 0

    corr = figure_corr_curve(n=n, seed=SeedSpec(seed, stream))
    stream += len(corr)
    dev = np.abs(corr.column("empirical_corr") - corr.column("theory_rho_z2"))
    checks.append(CheckResult("correlation_curve", bool(dev.max() <= corr_tol),
                              {"max_abs_deviation": float(dev.max()), "tolerance": corr_tol}))

    for k, rho in FIT_GRID:
        p = GammaPairParams(sigma, rho, k)
        fits = histogram_fits(p, n, SeedSpec(seed, stream), bins, alpha, perturb_pdf)
        stream += 1
        for name, (_, rep) in fits.items():
            checks.append(CheckResult(f"{name}_fit_k{k}_rho{rho}", rep.passed, rep.as_dict()))

    for k in (1, 12):
        p = joint_field.to_gamma(k)
        jc = joint_density_check(p, 50, n, SeedSpec(seed, stream), alpha, perturb_pdf)
        stream += 1
        checks.append(CheckResult(f"joint_fit_k{k}", jc.report.passed, jc.report.as_dict()))

    for k, rho in ((1, 0.0), (2, 0.0), (12, 0.64), (5, 0.9)):
        p = GammaPairParams(sigma, rho, k)
        rows = moment_table(p, range(5), n, SeedSpec(seed, stream))
        stream += 1
        ok = all(r.within_tolerance and r.formulation_spread <= 1e-9 for r in rows)
        checks.append(CheckResult(f"moments_k{k}_rho{rho}", ok, {
            "rows": [{"m": r.m, "analytic": r.analytic_f2, "mc": r.mc_estimate, "se": r.mc_std_error,
                      "spread": r.formulation_spread} for r in rows]}))

    spread = formulation_equivalence()
    checks.append(CheckResult("formulation_equivalence", spread <= 1e-9, {"max_relative_spread": spread}))

    config = {"n": n, "seed": seed, "quick": quick, "alpha": alpha, "perturb_pdf": perturb_pdf,
              "sigma": sigma, "joint_sigma_z": joint_field.sigma_z, "joint_rho_z": joint_field.rho_z}
    return ValidationReport(checks, config)
