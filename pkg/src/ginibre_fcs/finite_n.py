"""Expected number of eigenvalues in a centred disc at finite matrix size.

Conventions: the GinOE/GinUE matrices have eigenvalue density normalised
to N with limiting support the unit disc; the GinSE count refers to the N
eigenvalues in the upper half plane (one per conjugate pair).

=================  ===========================================
function           quantity
=================  ===========================================
mean_disc_ginue    E_N^(2)(a)
mean_disc_ginse    E_N^(4)(a)
mean_disc_ginoe_complex   complex eigenvalues of GinOE in |z| <= a
mean_interval_ginoe_real  real eigenvalues of GinOE in (-a, a)
mean_disc          dispatcher, GinOE total with breakdown
deficit_outside    N - E_N(1) and its sqrt(N) asymptote
=================  ===========================================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import specfun as sf
from .quadrature import QuadSpec, integrate_1d, integrate_semi_inf

__all__ = [
    "EnsembleKind",
    "FiniteMeanResult",
    "ConsistencyError",
    "mean_disc_ginue",
    "mean_disc_ginse",
    "mean_disc_ginoe_complex",
    "mean_interval_ginoe_real",
    "mean_disc",
    "deficit_outside",
    "ginoe_real_density",
    "ginoe_complex_density",
    "ginse_mean_middle",
    "p2gamma_lhs",
    "p2gamma_rhs",
    "ginoe_real_mean_full",
]


class EnsembleKind(enum.Enum):
    GINOE = 1
    GINUE = 2
    GINSE = 4

    @property
    def beta(self) -> int:
        return self.value

    @classmethod
    def parse(cls, text) -> "EnsembleKind":
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper()
        aliases = {"1": "GINOE", "2": "GINUE", "4": "GINSE"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown ensemble {text!r}") from None


class ConsistencyError(ArithmeticError):
    """Two independent evaluation paths disagree beyond tolerance."""


@dataclass(frozen=True)
class FiniteMeanResult:
    """Expected count, optionally split into real and complex parts."""

    value: float
    real_part: float | None = None
    complex_part: float | None = None

    @property
    def breakdown(self):
        if self.real_part is None:
            return None
        return (self.real_part, self.complex_part)


def _check_n(N, low=1):
    if int(N) != N or N < low:
        raise ValueError(f"N must be an integer >= {low}")
    return int(N)


def _check_a(a):
    a = float(a)
    if not a >= 0:
        raise ValueError("radius must be non-negative")
    return a


def mean_disc_ginue(N: int, a: float, check: bool = True) -> FiniteMeanResult:
    """Expected number of GinUE eigenvalues in the disc |z| <= a.

    Computed as ``sum_{k<N} P(k+1, N a^2)``; with ``check`` the closed form
    ``N a^2 + N (1 - a^2) P(N, N a^2) - (N a^2)^N e^{-N a^2}/(N-1)!`` is
    evaluated too and must agree to 1e-10.
    """
    N = _check_n(N)
    a = _check_a(a)
    if math.isinf(a):
        return FiniteMeanResult(float(N))
    x = N * a * a
    k = np.arange(1, N + 1, dtype=float)
    value = float(np.sum(sc.gammainc(k, x)))
    if check and x > 0:
        log_last = N * math.log(x) - x - math.lgamma(N)
        closed = x + N * (1 - a * a) * sc.gammainc(N, x) - math.exp(log_last)
        if abs(closed - value) > 1e-10 * max(1.0, abs(value)):
            raise ConsistencyError(f"GinUE mean: series {value!r} vs closed form {closed!r}")
    return FiniteMeanResult(value)


def ginse_mean_middle(N: int, a: float) -> float:
    """GinSE mean via half the GinUE(2N) mean minus an odd Poisson sum."""
    N = _check_n(N)
    x = 2.0 * N * a * a
    half = 0.5 * mean_disc_ginue(2 * N, a, check=False).value
    if x == 0:
        return half
    k = np.arange(N)
    logs = (2 * k + 1) * math.log(x) - x - sc.gammaln(2 * k + 2)
    return half - 0.5 * float(np.sum(np.exp(logs)))


def _ginse_closed(N, a):
    # (1/2) E_{2N}^(2) - (e^{-x}/2) [sinh(x) - x^{2N+1}/(2N+1)! 1F2(1; N+1, N+3/2; x^2/4)]
    x = 2.0 * N * a * a
    half = 0.5 * mean_disc_ginue(2 * N, a, check=False).value
    if x == 0:
        return half
    sinh_part = 0.25 * (1.0 - math.exp(-2.0 * x))
    log_pref = -x + (2 * N + 1) * math.log(x) - math.lgamma(2 * N + 2)
    tail = 0.5 * sf.hyp1f2_scaled(1.0, N + 1.0, N + 1.5, 0.25 * x * x, log_pref)
    return half - sinh_part + tail


def mean_disc_ginse(N: int, a: float, check: bool = True) -> FiniteMeanResult:
    """Expected number of GinSE eigenvalues (upper half plane) in |z| <= a.

    Computed as ``sum_{k<N} P(2k+2, 2 N a^2)``.  With ``check`` the
    hypergeometric closed form is evaluated as well and must agree to 1e-9.
    """
    N = _check_n(N)
    a = _check_a(a)
    if math.isinf(a):
        return FiniteMeanResult(float(N))
    x = 2.0 * N * a * a
    k = np.arange(N, dtype=float)
    value = float(np.sum(sc.gammainc(2 * k + 2, x)))
    if check and x > 0:
        closed = _ginse_closed(N, a)
        if abs(closed - value) > 1e-9 * max(1.0, abs(value)):
            raise ConsistencyError(f"GinSE mean: series {value!r} vs closed form {closed!r}")
    return FiniteMeanResult(value)


def ginoe_complex_density(N: int, x, y):
    """Complex eigenvalue density of the GinOE w.r.t. d^2z/pi (full plane).

    ``sqrt(2 N pi) N |y| erfcx(sqrt(2N)|y|) Q(N-1, N|z|^2)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    r2 = x * x + y * y
    return (math.sqrt(2 * N * math.pi) * N * y * sc.erfcx(math.sqrt(2 * N) * y)
            * sc.gammaincc(N - 1, N * r2))


def mean_disc_ginoe_complex(N: int, a: float, spec: QuadSpec | None = None) -> FiniteMeanResult:
    """Expected number of non-real GinOE eigenvalues in |z| <= a.

    ``sum_{k=0}^{N-2} P(k+1, N a^2) - 2 int_0^{sqrt(N) a} r erfcx(sqrt(2) r) Q(N-1, r^2) dr``.
    """
    N = _check_n(N, 2)
    a = _check_a(a)
    if a == 0:
        return FiniteMeanResult(0.0)
    spec = spec or QuadSpec()

    def integrand(r):
        return r * sc.erfcx(math.sqrt(2.0) * r) * sc.gammaincc(N - 1, r * r)

    if math.isinf(a):
        first = float(N - 1)
        # Q(N-1, r^2) is negligible beyond r^2 = N + 40 sqrt(N) + 200.
        rmax = math.sqrt(N + 40 * math.sqrt(N) + 200)
        integral, _ = integrate_1d(integrand, 0.0, rmax, spec)
    else:
        x = N * a * a
        k = np.arange(1, N, dtype=float)
        first = float(np.sum(sc.gammainc(k, x)))
        rmax = min(math.sqrt(x), math.sqrt(N + 40 * math.sqrt(N) + 200))
        integral, _ = integrate_1d(integrand, 0.0, rmax, spec)
    return FiniteMeanResult(first - 2.0 * integral)


def ginoe_real_density(N: int, x):
    """Real eigenvalue density of the GinOE (normalised to E[#reals])."""
    x = np.abs(np.asarray(x, dtype=float))
    t1 = math.sqrt(N / (2 * math.pi)) * sc.gammaincc(N - 1, N * x * x)
    with np.errstate(divide="ignore"):
        logc = (0.5 * N * math.log(N) - 0.5 * N * math.log(2.0) - math.lgamma(0.5 * N)
                - 0.5 * N * x * x + (N - 1) * np.log(x))
    t2 = np.exp(logc) * sc.gammainc(0.5 * (N - 1), 0.5 * N * x * x)
    return t1 + t2


def p2gamma_lhs(N: int, a: float) -> float:
    """``(1/sqrt 2) sum_{k=0}^{N-2} (2k-1)!!/(2k)!! P(k+1/2, N a^2)``."""
    x = N * a * a
    k = np.arange(N - 1, dtype=float)
    # (2k-1)!!/(2k)!! = Γ(k+1/2)/(sqrt(pi) k!)
    logc = sc.gammaln(k + 0.5) - 0.5 * math.log(math.pi) - sc.gammaln(k + 1)
    return float(np.sum(np.exp(logc) * sc.gammainc(k + 0.5, x))) / math.sqrt(2.0)


def p2gamma_rhs(N: int, a: float) -> float:
    """Incomplete gamma form of :func:`p2gamma_lhs`.

    ``sqrt(2/pi) [a sqrt(N) Γ(N-1, N a^2) + γ(N-1/2, N a^2)] / (N-2)!``.
    """
    x = N * a * a
    if math.isinf(a):
        return math.sqrt(2 / math.pi) * math.exp(math.lgamma(N - 0.5) - math.lgamma(N - 1))
    t1 = a * math.sqrt(N) * sc.gammaincc(N - 1, x)
    t2 = sc.gammainc(N - 0.5, x) * math.exp(math.lgamma(N - 0.5) - math.lgamma(N - 1))
    return math.sqrt(2 / math.pi) * (t1 + t2)


def mean_interval_ginoe_real(N: int, a: float, spec: QuadSpec | None = None) -> FiniteMeanResult:
    """Expected number of real GinOE eigenvalues in the interval (-a, a).

    Odd and even N use different finite sums; the even case contains one
    integral, evaluated with a log-scaled integrand.
    """
    N = _check_n(N, 2)
    a = _check_a(a)
    if a == 0:
        return FiniteMeanResult(0.0)
    spec = spec or QuadSpec()
    x = N * a * a
    first = p2gamma_lhs(N, a)
    if N % 2 == 1:
        # sum_{k=0}^{(N-3)/2} Γ(N/2+k)/(2^{k+N/2} Γ(N/2) k!) P(N/2+k, N a^2)
        k = np.arange((N - 1) // 2, dtype=float)
        logc = (sc.gammaln(0.5 * N + k) - (k + 0.5 * N) * math.log(2.0)
                - math.lgamma(0.5 * N) - sc.gammaln(k + 1))
        third = float(np.sum(np.exp(logc) * sc.gammainc(0.5 * N + k, x)))
        second = sc.gammainc(0.5 * N, 0.5 * x)
        return FiniteMeanResult(float(first + second - third))
    # even N
    ln_df = sf.ln_double_factorial(N - 2)

    def integrand(t):
        with np.errstate(divide="ignore"):
            lg = (N - 1) * np.log(t) - 0.5 * t * t - ln_df
        return np.exp(lg) * sc.erf(t / math.sqrt(2.0))

    upper = math.sqrt(x)
    # the integrand peaks near t = sqrt(N - 1) with unit width
    t_cut = math.sqrt(N - 1) + 40.0
    if upper > t_cut:
        second, _ = integrate_1d(integrand, 0.0, t_cut, spec)
    else:
        second, _ = integrate_1d(integrand, 0.0, upper, spec)
    k = np.arange(1, N // 2, dtype=float)
    logc = (sc.gammaln(0.5 * (N - 1) + k) - sf.ln_double_factorial_array(2 * k - 1)
            - 0.5 * (N - 1) * math.log(2.0) - math.lgamma(0.5 * N) - 0.5 * math.log(math.pi))
    third = float(np.sum(np.exp(logc) * sc.gammainc(0.5 * (N - 1) + k, x)))
    return FiniteMeanResult(float(first + second - third))


def ginoe_real_mean_full(N: int) -> float:
    """Expected total number of real GinOE eigenvalues (Edelman-Kostlan-Shub)."""
    N = _check_n(N, 1)
    if N % 2 == 1:
        k = np.arange(1, (N - 1) // 2 + 1)
        vals = [math.exp(sf.ln_double_factorial(4 * j - 3) - sf.ln_double_factorial(4 * j - 2)) for j in k]
        return 1.0 + math.sqrt(2.0) * float(np.sum(vals))
    k = np.arange(0, N // 2)
    vals = [math.exp(sf.ln_double_factorial(4 * j - 1) - sf.ln_double_factorial(4 * j)) for j in k]
    return math.sqrt(2.0) * float(np.sum(vals))


def mean_disc(kind, N: int, a: float) -> FiniteMeanResult:
    """Expected count in the disc of radius a for any ensemble.

    For the GinOE the result carries the real/complex breakdown.
    """
    kind = EnsembleKind.parse(kind)
    if kind is EnsembleKind.GINUE:
        return mean_disc_ginue(N, a)
    if kind is EnsembleKind.GINSE:
        return mean_disc_ginse(N, a)
    re = mean_interval_ginoe_real(N, a).value
    co = mean_disc_ginoe_complex(N, a).value
    return FiniteMeanResult(re + co, re, co)


def deficit_outside(N: int, kind) -> tuple[float, float]:
    """Expected number of eigenvalues outside the unit disc and its asymptote.

    Returns ``(N - E_N(1), asymptote)`` with asymptote ``sqrt(N/(2 pi))`` for
    GinOE/GinUE and ``sqrt(N)/(2 sqrt(pi))`` for GinSE.
    """
    kind = EnsembleKind.parse(kind)
    N = _check_n(N, 2)
    deficit = N - mean_disc(kind, N, 1.0).value
    if kind is EnsembleKind.GINSE:
        asym = math.sqrt(N) / (2 * math.sqrt(math.pi))
    else:
        asym = math.sqrt(N / (2 * math.pi))
    return deficit, asym
