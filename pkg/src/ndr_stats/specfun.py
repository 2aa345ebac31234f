"""
Special-function kernel.

Log-Gamma, Beta, modified Bessel functions of the first kind (plain,
exponentially scaled and logarithmic) and the Gauss hypergeometric
function 2F1 on the real half-line z < 1.

Everything here is written from scratch on top of ``math`` and ``numpy``;
scipy is only used by the test suite as an independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SeriesControl",
    "DEFAULT_CONTROL",
    "DomainError",
    "ConvergenceError",
    "ln_gamma",
    "ln_beta",
    "beta",
    "bessel_i_scaled",
    "ln_bessel_i",
    "hyp2f1",
]


class DomainError(ValueError):
    """Argument outside the domain of a function or parameter object."""


class ConvergenceError(ArithmeticError):
    """A series did not reach the requested tolerance.

    Attributes
    ----------
    residual : float
        Relative size of the last term (or tail estimate) when the term
        budget ran out.
    terms : int
        Number of terms summed.
    """

    def __init__(self, message: str, residual: float, terms: int):
        super().__init__(f"{message} (residual {residual:.3e} after {terms} terms)")
        self.residual = residual
        self.terms = terms


@dataclass(frozen=True)
class SeriesControl:
    """Stopping rule for the hypergeometric series.

    Parameters
    ----------
    rel_tol : float
        Target relative size of the neglected tail, in (0, 1e-6).
    max_terms : int
        Hard cap on the number of terms; at least 100.
    """

    rel_tol: float = 1e-14
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1e-6):
            raise ValueError(f"rel_tol must lie in (0, 1e-6), got {self.rel_tol!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 100:
            raise ValueError(f"max_terms must be an integer >= 100, got {self.max_terms!r}")


DEFAULT_CONTROL = SeriesControl()


# ---------------------------------------------------------------------------
# Gamma and Beta
# ---------------------------------------------------------------------------

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)
# ln((n-1)!) for small integer arguments, exact to rounding
_LN_FACTORIAL = tuple(math.log(math.factorial(n)) for n in range(171))


def _check_positive(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} requires a finite positive argument, got {x!r}")
    return x


def ln_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for x > 0.

    Integers up to 171 are served from an exact factorial table. Otherwise
    a Lanczos sum is used for x >= 0.5 and the shift
    ln G(x) = ln G(x + 1) - ln x below that.
    """
    x = _check_positive("ln_gamma", x)
    if x <= 171.0 and x == int(x):
        return _LN_FACTORIAL[int(x) - 1]
    if x < 0.5:
        return ln_gamma(x + 1.0) - math.log(x)
    y = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (y + i)
    t = y + _LANCZOS_G + 0.5
    return _HALF_LN_2PI + (y + 0.5) * math.log(t) - t + math.log(acc)


def ln_beta(a: float, b: float) -> float:
    """ln B(a, b) from three log-Gamma evaluations."""
    a = _check_positive("ln_beta", a)
    b = _check_positive("ln_beta", b)
    if a > b:
        a, b = b, a
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def beta(a: float, b: float) -> float:
    """Euler Beta function B(a, b) = G(a) G(b) / G(a + b)."""
    return math.exp(ln_beta(a, b))


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind
# ---------------------------------------------------------------------------

_SERIES_CUTOFF = 20.0
# j-loop length for the power series; (x/2)^(2j)/(j!)^2 at x=20, j=80 is ~1e-50 of the peak
_SERIES_TERMS = 90


def _check_order(nu) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0:
        raise DomainError(f"Bessel order must be a finite value >= 0, got {nu!r}")
    return nu


def _as_argument(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0.0):
        raise DomainError("Bessel argument must be finite and >= 0")
    return x


def _ln_i_series(nu: float, x: np.ndarray) -> np.ndarray:
    """ln(e^-x I_nu(x)) from the ascending series, for 0 < x < 20."""
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for j in range(1, _SERIES_TERMS):
        term = term * q / (j * (j + nu))
        total = total + term
    return nu * np.log(0.5 * x) - ln_gamma(nu + 1.0) + np.log(total) - x


def _ln_i_scaled_asymptotic(mu: float, x: np.ndarray) -> np.ndarray:
    """ln(e^-x I_mu(x)) from the large-argument expansion, x >= 20, mu < 1.

    The expansion is summed until terms stop shrinking; at x >= 20 the
    smallest term is below 1e-17 for orders in [0, 1).
    """
    four_mu2 = 4.0 * mu * mu
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 60):
        factor = -(four_mu2 - (2 * k - 1) ** 2) / (8.0 * k * x)
        new_term = term * factor
        grow = np.abs(new_term) >= np.abs(term)
        active &= ~grow
        term = np.where(active, new_term, term)
        total = total + np.where(active, new_term, 0.0)
        if not active.any() or np.all(np.abs(term) < 1e-18 * np.abs(total)):
            break
    return np.log(total) - 0.5 * np.log(2.0 * math.pi * x)


def _ln_i_miller(nu: float, x: np.ndarray) -> np.ndarray:
    """ln(e^-x I_nu(x)) for x >= 20 by downward recurrence.

    The recurrence I_{n-1} = (2n/x) I_n + I_{n+1} runs from a start order
    far above nu down to the fractional order mu = nu - floor(nu), where
    the asymptotic expansion fixes the normalisation.
    """
    n_int = int(math.floor(nu))
    mu = nu - n_int
    start = n_int + int(10.0 * math.sqrt(float(x.max()))) + 30
    upper = np.zeros_like(x)
    current = np.full_like(x, 1e-300)
    ln_at_nu = None
    rescale = 250.0 * math.log(10.0)
    for n in range(start, 0, -1):
        upper, current = current, (2.0 * (n + mu) / x) * current + upper
        big = current > 1e250
        if big.any():
            upper = np.where(big, upper * 1e-250, upper)
            current = np.where(big, current * 1e-250, current)
            if ln_at_nu is not None:
                ln_at_nu = ln_at_nu - np.where(big, rescale, 0.0)
        if n - 1 == n_int:
            ln_at_nu = np.log(current)
    return ln_at_nu - np.log(current) + _ln_i_scaled_asymptotic(mu, x)


def _ln_bessel_i_scaled(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    zero = x == 0.0
    small = (~zero) & (x < _SERIES_CUTOFF)
    large = x >= _SERIES_CUTOFF
    out[zero] = 0.0 if nu == 0.0 else -np.inf
    if small.any():
        out[small] = _ln_i_series(nu, x[small])
    if large.any():
        out[large] = _ln_i_miller(nu, x[large])
    return out


def _unwrap(values: np.ndarray, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def bessel_i_scaled(nu, x):
    """Exponentially scaled modified Bessel function e^-x I_nu(x).

    Parameters
    ----------
    nu : float
        Order, >= 0. The model only needs integer orders; fractional
        orders are handled by the same code path.
    x : float or array_like
        Argument, finite and >= 0.

    Returns
    -------
    float or ndarray
        Values in [0, 1]; 1 at x = 0 for nu = 0 and 0 at x = 0 otherwise.
    """
    nu = _check_order(nu)
    arr = _as_argument(x)
    flat = np.atleast_1d(arr).astype(float).ravel()
    vals = np.exp(_ln_bessel_i_scaled(nu, flat)).reshape(np.shape(arr))
    return _unwrap(vals, x)


def ln_bessel_i(nu, x):
    """ln I_nu(x), overflow-free for large x.

    Raises
    ------
    DomainError
        At x = 0 with nu > 0, where the value is -inf; callers branch on
        that case before taking logs.
    """
    nu = _check_order(nu)
    arr = _as_argument(x)
    if nu > 0.0 and np.any(arr == 0.0):
        raise DomainError("ln_bessel_i(nu > 0, 0) is -inf")
    flat = np.atleast_1d(arr).astype(float).ravel()
    vals = (_ln_bessel_i_scaled(nu, flat) + flat).reshape(np.shape(arr))
    return _unwrap(vals, x)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function
# ---------------------------------------------------------------------------

def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0.0 and v == math.floor(v)


def _gauss_series(a: float, b: float, c: float, z: float, ctl: SeriesControl) -> float:
    """Direct summation of sum (a)_n (b)_n / (c)_n z^n / n!, for |z| < 1."""
    terms = [1.0]
    term = 1.0
    total = 1.0
    rz = abs(z)
    for n in range(ctl.max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        term *= ratio * z
        if term == 0.0:
            # terminating series: a or b is a non-positive integer
            return math.fsum(terms)
        terms.append(term)
        total += term
        # bound every later term ratio by max(current ratio, |z|)
        r = max(abs(ratio * z), rz)
        if r < 1.0 and n >= 2:
            tail = abs(term) * r / (1.0 - r)
            if tail <= ctl.rel_tol * abs(total):
                return math.fsum(terms)
    total = math.fsum(terms)
    residual = abs(term) / abs(total) if total else math.inf
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) series did not converge", residual, ctl.max_terms
    )


def hyp2f1(a: float, b: float, c: float, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Strategy:

    * |z| <= 0.5: direct Gauss series.
    * z < -0.5: Pfaff map 2F1(a,b;c;z) = (1-z)^-a 2F1(a, c-b; c; z/(z-1)),
      applied with whichever upper parameter keeps the transformed series
      smaller, which lands the argument in (1/3, 1).
    * 0.5 < z < 1: direct series, preceded by the Euler map
      2F1(a,b;c;z) = (1-z)^(c-a-b) 2F1(c-a, c-b; c; z) when a + b > c,
      so that the summed terms stay bounded as z approaches 1.

    The parameters are put in canonical order first, so the result does
    not depend on the order of ``a`` and ``b``.

    Raises
    ------
    DomainError
        c is a non-positive integer, or z >= 1.
    ConvergenceError
        The series needs more than ``ctl.max_terms`` terms.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if not all(math.isfinite(v) for v in (a, b, c, z)):
        raise DomainError("hyp2f1 arguments must be finite")
    if _is_nonpositive_integer(c):
        raise DomainError(f"hyp2f1 undefined for c = {c}")
    if z >= 1.0:
        raise DomainError(f"hyp2f1 only implemented for z < 1, got z = {z}")
    if a > b:
        a, b = b, a
    if z == 0.0 or a == 0.0:
        return 1.0
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        return _gauss_series(a, b, c, z, ctl)
    if abs(z) <= 0.5:
        return _gauss_series(a, b, c, z, ctl)
    if z < -0.5:
        w = z / (z - 1.0)
        # (1-z)^-a F(a, c-b; c; w)  or  (1-z)^-b F(b, c-a; c; w)
        cand_a = (a, c - b)
        cand_b = (b, c - a)
        pa, pb = cand_a if abs(cand_a[0] * cand_a[1]) <= abs(cand_b[0] * cand_b[1]) else cand_b
        return (1.0 - z) ** (-pa) * hyp2f1(pa, pb, c, w, ctl)
    if a + b > c:
        return (1.0 - z) ** (c - a - b) * _gauss_series(c - a, c - b, c, z, ctl)
    return _gauss_series(a, b, c, z, ctl)
