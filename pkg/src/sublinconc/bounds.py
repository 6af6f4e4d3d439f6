"""Closed-form tail bounds, regime split, moment recovery and rate functions.

All bounds have the shape ``prefactor * exp(-exponent)`` and are evaluated
in log space so that very small tails are still reported faithfully.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, optimize

from . import martingale as mg

LN5 = math.log(5.0)
_TINY = 5e-324

SWEEP_COLUMNS = (
    "bound_name", "n", "d", "M", "sigma_sq", "t",
    "raw", "clamped", "exponent", "prefactor", "regime",
)


class Regime(str, enum.Enum):
    SUB_GAUSSIAN = "SubGaussian"
    SUB_EXPONENTIAL = "SubExponential"


@dataclass(frozen=True)
class BoundInput:
    n: int
    d: int
    M: float
    sigma_bar_sq: float
    t: float

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not self.M > 0:
            raise ValueError("need M > 0")
        if not self.sigma_bar_sq >= 0:
            raise ValueError("need sigma_bar_sq >= 0")
        if not self.t > 0:
            raise ValueError("need t > 0")

    @property
    def vacuous(self) -> bool:
        """t beyond 2M: the event rho > t is impossible for |X_i| <= M."""
        return self.t > 2 * self.M


@dataclass(frozen=True)
class BoundValue:
    name: str
    prefactor: float
    exponent: float

    @property
    def log_raw(self) -> float:
        return math.log(self.prefactor) - self.exponent

    @property
    def raw(self) -> float:
        return math.exp(self.log_raw) if self.log_raw < 709 else math.inf

    @property
    def clamped(self) -> float:
        return min(1.0, max(self.raw, _TINY))

    @property
    def log10_raw(self) -> float:
        return self.log_raw / math.log(10.0)


def covering_prefactor(d: int) -> float:
    return 2.0 * 5.0**d


def azuma_bound(inp: BoundInput) -> BoundValue:
    """2 * 5^d * exp(-n t^2 / (32 M^2))."""
    return BoundValue(
        "azuma", covering_prefactor(inp.d), inp.n * inp.t**2 / (32.0 * inp.M**2)
    )


def azuma_bound_scalar(inp: BoundInput) -> BoundValue:
    """Scalar route: S^0 = {-1, +1} covers exactly, so 2 * exp(-n t^2 / (8 M^2))."""
    if inp.d != 1:
        raise ValueError("the scalar Azuma route needs d = 1")
    return BoundValue("azuma_scalar", 2.0, inp.n * inp.t**2 / (8.0 * inp.M**2))


def _variance_guard(inp: BoundInput):
    if inp.sigma_bar_sq == 0 and inp.t == 0:
        raise ValueError("sigma_bar_sq and t cannot both be 0")


def bernstein_bound(inp: BoundInput) -> BoundValue:
    """2 * 5^d * exp(-n t^2 / (8 sigma^2 + 8 M t / 3))."""
    _variance_guard(inp)
    denom = 8.0 * inp.sigma_bar_sq + 8.0 * inp.M * inp.t / 3.0
    return BoundValue("bernstein", covering_prefactor(inp.d), inp.n * inp.t**2 / denom)


def dimfree_bound(inp: BoundInput) -> BoundValue:
    """(d + 1) * exp(-n t^2 / (2 sigma^2 + 4 M t / 3))."""
    _variance_guard(inp)
    denom = 2.0 * inp.sigma_bar_sq + 4.0 * inp.M * inp.t / 3.0
    return BoundValue("dimfree", float(inp.d + 1), inp.n * inp.t**2 / denom)


def general_bound(
    n: int,
    d: int,
    t: float,
    psi: Callable[[float], float] | None = None,
    log_psi: Callable[[float], float] | None = None,
    probe_points: int = 64,
) -> BoundValue:
    """2 * 5^d * Psi(n t / 2) for a decreasing scalar tail Psi: (0, inf) -> [0, 1].

    Pass ``log_psi`` to keep tiny tails exact.  Psi is probed on a geometric
    grid around n t / 2 and rejected if it increases or leaves [0, 1].
    """
    if psi is None and log_psi is None:
        raise ValueError("need psi or log_psi")
    if psi is None:
        psi = lambda s: math.exp(log_psi(s))  # noqa: E731
    s0 = n * t / 2.0
    grid = np.geomspace(s0 * 1e-3, s0 * 1e3, probe_points)
    values = np.array([psi(float(s)) for s in grid])
    if np.any(values < 0) or np.any(values > 1):
        raise ValueError("psi leaves [0, 1] on the probe grid")
    if np.any(np.diff(values) > 1e-15):
        raise ValueError("psi is not decreasing on the probe grid")
    if log_psi is not None:
        exponent = -log_psi(s0)
    else:
        value = psi(s0)
        exponent = math.inf if value == 0 else -math.log(value)
    return BoundValue("general", covering_prefactor(d), exponent)


def azuma_via_general(inp: BoundInput) -> BoundValue:
    return general_bound(inp.n, inp.d, inp.t, log_psi=lambda s: mg.azuma_log_tail(s, inp.n, inp.M))


def bernstein_via_general(inp: BoundInput) -> BoundValue:
    return general_bound(
        inp.n, inp.d, inp.t,
        log_psi=lambda s: mg.freedman_log_tail(s, inp.n, inp.sigma_bar_sq, inp.M),
    )


def regime(t: float, sigma_bar_sq: float, M: float) -> Regime:
    """Sub-Gaussian iff t <= 3 sigma^2 / M (ties go sub-Gaussian)."""
    return Regime.SUB_GAUSSIAN if t * M <= 3.0 * sigma_bar_sq else Regime.SUB_EXPONENTIAL


def regime_classify(inp: BoundInput) -> Regime:
    return regime(inp.t, inp.sigma_bar_sq, inp.M)


def bernstein_beats_azuma(inp: BoundInput) -> bool:
    """Exact rational test of 8 sigma^2 + 8 M t / 3 <= 32 M^2."""
    s, M, t = Fraction(inp.sigma_bar_sq), Fraction(inp.M), Fraction(inp.t)
    return 8 * s + Fraction(8, 3) * M * t <= 32 * M * M


# --- moment recovery ----------------------------------------------------------


def moment_bound(n: int, d: int, M: float, sigma_bar_sq: float, epsabs: float = 1e-10) -> float:
    """Layer-cake integral of min(1, Bernstein bound at sqrt(s)) over s in [0, 4 M^2].

    An upper estimate of the sublinear second moment of rho_Theta(mean X).
    """
    if n < 1 or d < 1 or not M > 0 or sigma_bar_sq < 0:
        raise ValueError("invalid moment_bound inputs")
    log_pref = math.log(covering_prefactor(d))
    top = 4.0 * M * M

    def exponent(t: float) -> float:
        if t == 0:
            return 0.0
        return n * t * t / (8.0 * sigma_bar_sq + 8.0 * M * t / 3.0)

    # below t_star the bound exceeds 1 and the integrand is clamped to 1
    if exponent(2.0 * M) <= log_pref:
        return top
    t_star = optimize.brentq(lambda t: exponent(t) - log_pref, 0.0, 2.0 * M, xtol=1e-15, rtol=1e-15)
    s_star = t_star * t_star

    def integrand(s: float) -> float:
        return math.exp(log_pref - exponent(math.sqrt(s)))

    scale = (8.0 * sigma_bar_sq + 8.0 * M * t_star / 3.0) / n
    breaks = [s_star]
    step = scale
    while s_star + step < top:
        breaks.append(s_star + step)
        step *= 4.0
    breaks.append(top)
    total = s_star
    tol = epsabs / len(breaks)
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        value, err, info = integrate.quad(integrand, lo, hi, epsabs=tol, epsrel=1e-12,
                                          limit=200, full_output=True)[:3]
        if err > 10 * tol and err > 1e-12 * abs(value):
            raise RuntimeError(f"quadrature did not converge on [{lo}, {hi}] (err {err:.2e})")
        total += value
    return total


def moment_leading_term(n: int, d: int, sigma_bar_sq: float) -> float:
    """16 sigma^2 (1 + d log 5 + log 2) / n."""
    return 16.0 * sigma_bar_sq * (1.0 + d * LN5 + math.log(2.0)) / n


def fit_moment_constant(n_grid: Iterable[int], d: int, M: float, sigma_bar_sq: float) -> float:
    """Smallest C with moment_bound <= leading term + C M^2 / n^2 on the grid.

    A fitted diagnostic only; it is not a universal constant.
    """
    worst = 0.0
    for n in n_grid:
        excess = moment_bound(n, d, M, sigma_bar_sq) - moment_leading_term(n, d, sigma_bar_sq)
        worst = max(worst, excess * n * n / (M * M))
    return worst


# --- rate functions -----------------------------------------------------------


def _xlog1p(a: float, u: float) -> float:
    # a * log(1 + u) with the 0 * log 0 = 0 convention
    return 0.0 if a == 0 else a * math.log1p(u)


def rate_function_uniform(u: float) -> float:
    """(1/2)[(1+u) log(1+u) + (1-u) log(1-u)] for |u| <= 1.

    This closed form is the Legendre transform of the symmetric two-point law
    on {-1, +1}; see :func:`uniform_legendre_rate` for the transform of the
    Uniform[-1, 1] cumulant itself.
    """
    if abs(u) > 1:
        raise ValueError("rate function needs |u| <= 1")
    return 0.5 * (_xlog1p(1.0 + u, u) + _xlog1p(1.0 - u, -u))


def rate_function_series(u: float, term_tol: float = 1e-14, max_terms: int = 100_000) -> float:
    """sum_k u^{2k} / (2k (2k - 1)), truncated once a term drops below term_tol."""
    if abs(u) >= 1:
        raise ValueError("series evaluator needs |u| < 1")
    u2 = u * u
    power = u2
    total = 0.0
    for k in range(1, max_terms + 1):
        term = power / (2 * k * (2 * k - 1))
        total += term
        if term < term_tol:
            return total
        power *= u2
    raise RuntimeError("series did not reach the term tolerance")


def rate_quadratic_bound(x: float, r: float) -> tuple[float, bool]:
    """(3 x^2 / (2 r^2), |x| <= r / 2)."""
    if not r > 0:
        raise ValueError("need r > 0")
    return 3.0 * x * x / (2.0 * r * r), abs(x) <= r / 2.0


def _log_sinhc(y: float) -> float:
    y = abs(y)
    if y < 1e-4:
        return y * y / 6.0 - y**4 / 180.0
    if y > 20:
        return y - math.log(2.0 * y) + math.log1p(-math.exp(-2.0 * y))
    return math.log(math.sinh(y) / y)


def uniform_legendre_rate(x: float, r: float) -> float:
    """sup over lambda of lambda x - log(sinh(lambda r) / (lambda r)), |x| < r."""
    if not r > 0 or abs(x) >= r:
        raise ValueError("need r > 0 and |x| < r")
    x = abs(x)
    if x == 0:
        return 0.0
    # the derivative r coth(lam r) - 1/lam exceeds x once lam > 1 / (r - x)
    hi = 1.0 / (r - x)
    res = optimize.minimize_scalar(lambda lam: _log_sinhc(lam * r) - lam * x,
                                   bounds=(0.0, hi), method="bounded",
                                   options={"xatol": 1e-12 * hi})
    return float(-res.fun)


# --- sharpness ----------------------------------------------------------------


@dataclass(frozen=True)
class SharpnessBound:
    value: float
    valid: bool
    exponent: float
    r: float

    @property
    def log_value(self) -> float:
        return math.log(0.25) - self.exponent


def construction_radius(sigma: float) -> float:
    """Uniform half-width r = sigma sqrt(3) / 2, so that Var = r^2 / 3 = sigma^2 / 4."""
    return sigma * math.sqrt(3.0) / 2.0


def sigma_from_radius(r: float) -> float:
    return 2.0 * r / math.sqrt(3.0)


def rate_coefficient_identity(sigma: float) -> tuple[float, float]:
    """(3 / (2 r^2), 2 / sigma^2) at r = construction_radius(sigma)."""
    r = construction_radius(sigma)
    return 3.0 / (2.0 * r * r), 2.0 / (sigma * sigma)


def sharpness_valid_limit(n: int, sigma: float) -> float:
    return sigma / (4.0 * math.sqrt(n))


def sharpness_lower_bound(n: int, sigma: float, t: float) -> SharpnessBound:
    """(1/4) exp(-2 n t^2 / sigma^2), valid for t in (0, sigma / (4 sqrt n)]."""
    if n < 1 or not sigma > 0 or not t > 0:
        raise ValueError("need n >= 1, sigma > 0, t > 0")
    exponent = 2.0 * n * t * t / (sigma * sigma)
    return SharpnessBound(
        0.25 * math.exp(-exponent), t <= sharpness_valid_limit(n, sigma), exponent,
        construction_radius(sigma),
    )


# --- sweep tables -------------------------------------------------------------

BOUND_FUNCTIONS = {
    "azuma": azuma_bound,
    "bernstein": bernstein_bound,
    "dimfree": dimfree_bound,
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def sweep_rows(
    n: int, d: int, M: float, sigma_bar_sq: float, t_grid: Sequence[float],
    names: Sequence[str] = ("azuma", "bernstein", "dimfree"),
) -> list[dict]:
    rows = []
    for name in names:
        fn = BOUND_FUNCTIONS[name]
        for t in t_grid:
            inp = BoundInput(n, d, M, sigma_bar_sq, t)
            bv = fn(inp)
            rows.append({
                "bound_name": name, "n": n, "d": d, "M": float(M),
                "sigma_sq": float(sigma_bar_sq), "t": float(t),
                "raw": bv.raw, "clamped": bv.clamped, "exponent": bv.exponent,
                "prefactor": bv.prefactor, "regime": regime_classify(inp).value,
            })
    return rows


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()
