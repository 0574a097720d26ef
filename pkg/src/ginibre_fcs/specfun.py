"""Scalar special functions used throughout the package.

The incomplete gamma, erfcx, scaled Bessel, Bessel J and Struve functions
are thin wrappers around :mod:`scipy.special` with argument checking.
The generalised hypergeometric series, the negative order polylogarithm
and the double factorial are implemented here.

All functions accept numpy arrays where that makes sense and return
arrays of the broadcast shape (or Python floats for scalar input).
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

__all__ = [
    "DomainError",
    "NonConvergence",
    "SeriesPolicy",
    "reg_gamma_p",
    "reg_gamma_q",
    "erfc_scaled",
    "bessel_i_scaled",
    "bessel_j",
    "struve_h",
    "hyp1f2",
    "hyp1f2_scaled",
    "polylog_negorder",
    "polylog_negorder_pq",
    "eulerian_numbers",
    "double_factorial",
    "ln_double_factorial",
    "ln_double_factorial_array",
    "ln_gamma",
    "integral_j0",
    "inject_fault",
]


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class NonConvergence(ArithmeticError):
    """A series did not reach the requested tolerance."""


@dataclass(frozen=True)
class SeriesPolicy:
    """Stopping rule for power series.

    Attributes
    ----------
    rel_tol : float
        Stop once a term is below ``rel_tol`` times the partial sum.
    max_terms : int
        Hard cap on the number of terms.
    """

    rel_tol: float = 1e-15
    max_terms: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


# Test hook: relative perturbations applied to selected primitives.  Only the
# verification suite touches this (see ``inject_fault``).
_FAULTS: dict[str, float] = {}


@contextlib.contextmanager
def inject_fault(name: str, rel: float):
    """Temporarily perturb a primitive by a relative amount.

    Used to check that the identity suite actually detects errors.
    Supported names: ``"bessel_i1"``, ``"bessel_i0"``.
    """
    if name not in ("bessel_i0", "bessel_i1"):
        raise ValueError(f"unknown fault target {name!r}")
    old = _FAULTS.get(name)
    _FAULTS[name] = rel
    try:
        yield
    finally:
        if old is None:
            _FAULTS.pop(name, None)
        else:
            _FAULTS[name] = old


def _out(y):
    y = np.asarray(y)
    return y.item() if y.ndim == 0 else y


def _check_gamma_args(s, x):
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("incomplete gamma requires s > 0")
    if np.any(~(x >= 0)):
        raise DomainError("incomplete gamma requires x >= 0")
    return s, x


def reg_gamma_q(s, x):
    """Upper regularised incomplete gamma function Q(s, x) = Γ(s, x)/Γ(s)."""
    s, x = _check_gamma_args(s, x)
    return _out(sc.gammaincc(s, x))


def reg_gamma_p(s, x):
    """Lower regularised incomplete gamma function P(s, x) = γ(s, x)/Γ(s)."""
    s, x = _check_gamma_args(s, x)
    return _out(sc.gammainc(s, x))


def erfc_scaled(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``."""
    return _out(sc.erfcx(np.asarray(x, dtype=float)))


def bessel_i_scaled(nu: int, x):
    """Exponentially scaled modified Bessel function ``exp(-x) I_nu(x)``.

    Parameters
    ----------
    nu : {0, 1}
    x : array_like, x >= 0
    """
    if nu not in (0, 1):
        raise DomainError("bessel_i_scaled supports nu in {0, 1}")
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DomainError("bessel_i_scaled requires x >= 0")
    y = sc.i0e(x) if nu == 0 else sc.i1e(x)
    rel = _FAULTS.get(f"bessel_i{nu}")
    if rel:
        y = y * (1.0 + rel)
    return _out(y)


def bessel_j(nu: int, x):
    """Bessel function of the first kind J_nu for nu in {0, 1}."""
    if nu not in (0, 1):
        raise DomainError("bessel_j supports nu in {0, 1}")
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DomainError("bessel_j requires x >= 0")
    return _out(sc.j0(x) if nu == 0 else sc.j1(x))


def struve_h(nu: int, x):
    """Struve function H_nu for nu in {-1, 0, 1}.

    H_{-1} is obtained from the recurrence
    ``H_{-1}(x) = 2/pi - H_1(x)``.
    """
    if nu not in (-1, 0, 1):
        raise DomainError("struve_h supports nu in {-1, 0, 1}")
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DomainError("struve_h requires x >= 0")
    if nu == -1:
        return _out(2.0 / np.pi - sc.struve(1, x))
    return _out(sc.struve(nu, x))


def integral_j0(t):
    """Return the integral of J_0 over [0, t] for t >= 0.

    Uses ``t J0(t) + (pi t / 2) (J1(t) H0(t) - J0(t) H1(t))``.
    """
    t = np.asarray(t, dtype=float)
    j0, j1 = sc.j0(t), sc.j1(t)
    h0, h1 = sc.struve(0, t), sc.struve(1, t)
    return _out(t * j0 + 0.5 * np.pi * t * (j1 * h0 - j0 * h1))


# largest tolerated ratio between the biggest series term and the sum
_CANCEL_LIMIT = 1e5


def _hyp1f2_log_series(a1, b1, b2, z, policy, log_prefactor):
    # Sum exp(log_prefactor) * sum_k t_k with t_k tracked as (sign, log|t_k|)
    # so that large positive arguments with tiny prefactors do not overflow.
    if z == 0.0:
        return math.exp(log_prefactor)
    sign = 1.0
    lt = log_prefactor
    total = math.exp(lt)
    log_absz = math.log(abs(z))
    zsign = 1.0 if z > 0 else -1.0
    small = 0
    peak = abs(total)
    for k in range(policy.max_terms):
        num = a1 + k
        if num == 0.0:
            return total
        ratio_sign = zsign * math.copysign(1.0, num) * math.copysign(1.0, b1 + k) * math.copysign(1.0, b2 + k)
        lt += math.log(abs(num)) + log_absz - math.log(abs(b1 + k)) - math.log(abs(b2 + k)) - math.log(k + 1.0)
        sign *= ratio_sign
        term = sign * math.exp(lt)
        total += term
        peak = max(peak, abs(term))
        # Terms eventually decrease monotonically; require two small terms in
        # a row past the peak before stopping.
        if abs(term) <= policy.rel_tol * abs(total) and k + 1 > abs(z) ** (1.0 / 3.0):
            small += 1
            if small >= 2:
                if peak > _CANCEL_LIMIT * abs(total):
                    raise NonConvergence(f"1F2 series lost precision to cancellation (z={z})")
                return total
        else:
            small = 0
    raise NonConvergence(f"1F2 series did not converge in {policy.max_terms} terms (z={z})")


def hyp1f2(a1: float, b1: float, b2: float, z: float, policy: SeriesPolicy | None = None) -> float:
    """Generalised hypergeometric function 1F2(a1; b1, b2; z).

    The power series is summed directly.  For the parameter set
    (1/2; 1, 3/2) and ``z < -4`` the function is evaluated through the
    integral of J_0 instead, because the alternating series loses digits
    to cancellation there.

    Raises
    ------
    NonConvergence
        If ``policy.max_terms`` terms do not reach ``policy.rel_tol``, or
        if the largest term exceeds the sum by more than a factor 1e5.
    """
    policy = policy or SeriesPolicy()
    for b in (b1, b2):
        if b <= 0 and float(b).is_integer():
            raise DomainError("1F2 lower parameters must not be non-positive integers")
    z = float(z)
    if z < -4.0 and (a1, b1, b2) == (0.5, 1.0, 1.5):
        t = 2.0 * math.sqrt(-z)
        return float(integral_j0(t)) / t
    return _hyp1f2_log_series(a1, b1, b2, z, policy, 0.0)


def hyp1f2_scaled(a1, b1, b2, z, log_prefactor, policy: SeriesPolicy | None = None) -> float:
    """Return ``exp(log_prefactor) * 1F2(a1; b1, b2; z)`` without overflow."""
    policy = policy or SeriesPolicy()
    return _hyp1f2_log_series(a1, b1, b2, float(z), policy, float(log_prefactor))


@lru_cache(maxsize=None)
def eulerian_numbers(m: int) -> tuple[int, ...]:
    """Eulerian numbers A(m, k), k = 0..m-1, as exact integers."""
    if m < 1:
        return ()
    row = [1]
    for n in range(2, m + 1):
        new = []
        for k in range(n):
            left = row[k - 1] if k >= 1 else 0
            mid = row[k] if k < len(row) else 0
            new.append((k + 1) * mid + (n - k) * left)
        row = new
    return tuple(row)


def _polylog_rational(m, x):
    if m == 0:
        return x / (1.0 - x)
    coeffs = eulerian_numbers(m)
    poly = np.zeros_like(x)
    for c in reversed(coeffs):
        poly = poly * x + c
    return x * poly / (1.0 - x) ** (m + 1)


def polylog_negorder(order_m: int, x):
    """Negative order polylogarithm Li_{-m}(x).

    Evaluated as the rational function ``x A_m(x) / (1 - x)^(m+1)`` with
    Eulerian polynomial A_m.  For ``|x| > 1`` and ``m >= 1`` the inversion
    ``Li_{-m}(x) = (-1)^(m-1) Li_{-m}(1/x)`` is applied first.

    Raises
    ------
    DomainError
        At the pole ``x = 1`` or for negative ``order_m``.
    """
    if order_m < 0 or int(order_m) != order_m:
        raise DomainError("order_m must be a non-negative integer")
    m = int(order_m)
    x = np.asarray(x, dtype=float)
    if np.any(x == 1.0):
        raise DomainError("Li_{-m} has a pole at x = 1")
    if m == 0:
        return _out(x / (1.0 - x))
    big = np.abs(x) > 1.0
    xs = np.where(big, 1.0 / np.where(big, x, 1.0), x)
    val = _polylog_rational(m, xs)
    sign = -1.0 if (m - 1) % 2 else 1.0
    return _out(np.where(big, sign * val, val))


def polylog_negorder_pq(order_m: int, L, M):
    """Evaluate ``Li_{-m}(1 - 1/L)`` from the pair (L, M) with M = 1 - L.

    With ``x = -M/L`` one has ``1 - x = 1/L``, so the rational form collapses
    to the polynomial ``-M sum_k A(m, k) (-M)^k L^(m-k)``.  This is exact for
    every L in [0, 1] and avoids forming ``1/L``.
    """
    L = np.asarray(L, dtype=float)
    M = np.asarray(M, dtype=float)
    m = int(order_m)
    if m == 0:
        return _out(-M)
    coeffs = eulerian_numbers(m)
    acc = np.zeros(np.broadcast(L, M).shape)
    for k, c in enumerate(coeffs):
        acc = acc + c * (-M) ** k * L ** (m - k)
    return _out(-M * acc)


def double_factorial(n: int) -> float:
    """Double factorial n!! for integer n >= -1, with (-1)!! = 0!! = 1."""
    n = int(n)
    if n < -1:
        raise DomainError("double factorial requires n >= -1")
    if n > 300:
        return math.exp(ln_double_factorial(n))
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return float(out)


def ln_double_factorial(n: int) -> float:
    """Natural log of n!! for integer n >= -1, via ln Γ."""
    n = int(n)
    if n < -1:
        raise DomainError("double factorial requires n >= -1")
    if n <= 0:
        return 0.0
    if n % 2 == 0:
        k = n // 2
        return k * math.log(2.0) + math.lgamma(k + 1.0)
    # n = 2k - 1: n!! = 2^k Γ(k + 1/2) / sqrt(pi)
    k = (n + 1) // 2
    return k * math.log(2.0) + math.lgamma(k + 0.5) - 0.5 * math.log(math.pi)


def ln_double_factorial_array(n):
    """Vectorized :func:`ln_double_factorial` for integer arrays."""
    n = np.asarray(n)
    if np.any(n < -1):
        raise DomainError("double factorial requires n >= -1")
    nf = np.maximum(n, 0).astype(float)
    even = 0.5 * nf * math.log(2.0) + sc.gammaln(0.5 * nf + 1.0)
    k = 0.5 * (nf + 1.0)
    odd = k * math.log(2.0) + sc.gammaln(k + 0.5) - 0.5 * math.log(math.pi)
    out = np.where(n % 2 == 0, even, odd)
    return _out(np.where(n <= 0, 0.0, out))


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("ln_gamma requires x > 0")
    return _out(sc.gammaln(x))
