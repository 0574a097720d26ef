"""Named numerical identities used by ``ginibre-fcs verify`` and the tests.

Each check evaluates two independent routes to the same quantity and
reports the largest discrepancy over its evaluation points.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as sc

from . import finite_n as fn
from . import origin as og
from . import planar_fcs as pf
from . import specfun as sf
from .quadrature import QuadSpec, integrate_1d

__all__ = ["Check", "CheckResult", "CHECKS", "run_checks"]

R_GRID = tuple(round(0.1 * k, 10) for k in range(1, 101))


@dataclass(frozen=True)
class Check:
    name: str
    tol: float
    func: Callable[[], float]
    description: str


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float
    seconds: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.residual <= self.tol


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _ginue_series():
    return max(_rel(og.var_origin_ginue_series(R), og.var_origin_ginue(R)) for R in R_GRID)


def _ginue_shirai():
    return max(_rel(og.var_origin_ginue_shirai(R), og.var_origin_ginue(R)) for R in (0.5, 1.0, 3.0))


def _ginse_pair(f, g):
    def run():
        return max(_rel(f(R), g(R)) for R in R_GRID)
    return run


def _p2gamma():
    return _rel(fn.p2gamma_lhs(6, 0.8), fn.p2gamma_rhs(6, 0.8))


def _ginse_middle():
    return _rel(fn.ginse_mean_middle(5, 0.7), fn.mean_disc_ginse(5, 0.7, check=False).value)


def _odd_pq():
    return max(_rel(og.odd_pq_sum(R), og.odd_pq_closed(R)) for R in R_GRID)


def _c_derivative():
    h = 1e-5
    c = og.var_origin_ginue
    return max(abs((c(R + h) - c(R - h)) / (2 * h) - og.var_origin_ginue_derivative(R))
               for R in (0.5, 1.0, 3.0))


def _c_ode():
    c = og.var_origin_ginue
    out = 0.0
    for R in (0.5, 2.0):
        d1 = og.var_origin_ginue_derivative(R)
        h = 1e-4
        d2 = (c(R + h) - 2 * c(R) + c(R - h)) / (h * h)
        out = max(out, abs(c(R) - d2 / 8 - (R - 1 / (8 * R)) * d1))
    return out


def _hyp_j0():
    out = 0.0
    for x in (0.5, 1.0, 2.0):
        lhs = x * x * sf.hyp1f2(0.5, 1.0, 1.5, -4 * x**4)
        val, _ = integrate_1d(sc.j0, 0.0, 4 * x * x, QuadSpec(abs_tol=1e-14, rel_tol=1e-13))
        out = max(out, abs(lhs - val / 4))
    return out


def _bernoulli_mean(beta):
    name = "ginue_gaussian" if beta == 2 else "ginse_gaussian"
    mean = fn.mean_disc_ginue if beta == 2 else fn.mean_disc_ginse

    def run():
        pot = pf.builtin_potential(name)
        out = 0.0
        for a in (0.3, 0.7, 1.0, 1.2):
            t = pf.moment_table(pot, 30, beta, a)
            out = max(out, _rel(float(t.L.sum()), mean(30, a).value))
        return out
    return run


def _ginoe_real_density():
    out = 0.0
    for N, a in ((5, 0.8), (6, 0.8), (30, 0.9)):
        val, _ = integrate_1d(lambda x: fn.ginoe_real_density(N, x), -a, a,
                              QuadSpec(abs_tol=1e-14, rel_tol=1e-13))
        out = max(out, _rel(fn.mean_interval_ginoe_real(N, a).value, val))
    return out


def _ginoe_full_count():
    out = 0.0
    for N in (5, 6, 30):
        re = fn.mean_interval_ginoe_real(N, 50.0).value
        co = fn.mean_disc_ginoe_complex(N, 50.0).value
        out = max(out, _rel(re, fn.ginoe_real_mean_full(N)), _rel(re + co, N))
    return out


def _oracle_real():
    return max(abs(og.ginoe_origin_kernel_oracle(R, "real_real") - og.var_origin_ginoe_real(R))
               for R in (0.5, 1.0, 2.0))


def _oracle_complex():
    R = 1.0
    ii = og.ginoe_i_integrals(R)
    diff = 4 * (sum(ii[f"I-{k}"] for k in range(1, 5)) - sum(ii[f"I+{k}"] for k in range(1, 5)))
    return abs(og.ginoe_origin_kernel_oracle(R, "complex_connected") - diff)


def _oracle_mixed():
    return max(abs(og.ginoe_origin_kernel_oracle(R, "real_complex") - og.cov_origin_ginoe(R))
               for R in (0.5, 1.0))


def _bulk_k2():
    return abs(pf.cumulant_bulk_limit(2) - 1 / math.sqrt(2 * math.pi))


def _edge_f():
    return max(abs(og.edge_profile_f(8.0) - 1.0), og.edge_profile_f(-8.0))


def _ml_gaussian():
    g = pf.builtin_potential("ginse_gaussian")
    m = pf.builtin_potential("mittag_leffler", 2, 1, 0)
    return max(abs(pf.moment_table(g, 40, 4, a).L - pf.moment_table(m, 40, 4, a).L).max()
               for a in (0.4, 0.9))


def _mgf_cumulants():
    t = pf.moment_table(pf.builtin_potential("ginse_gaussian"), 20, 4, 0.8)
    h = 1e-3
    K = lambda u: math.log(pf.mgf(t, u))  # noqa: E731
    # Richardson-extrapolated central differences for the first two derivatives
    d1 = lambda s: (K(s) - K(-s)) / (2 * s)  # noqa: E731
    d2 = lambda s: (K(s) - 2 * K(0.0) + K(-s)) / (s * s)  # noqa: E731
    k1 = (4 * d1(h / 2) - d1(h)) / 3
    k2 = (4 * d2(h / 2) - d2(h)) / 3
    return max(_rel(k1, pf.cumulant_finite(t, 1).value), _rel(k2, pf.cumulant_finite(t, 2).value))


CHECKS: tuple[Check, ...] = (
    Check("ginue_variance_series_vs_closed", 1e-10, _ginue_series,
          "GinUE origin variance: P*Q series against the Bessel closed form, R = 0.1..10"),
    Check("ginue_variance_integral_vs_closed", 1e-9, _ginue_shirai,
          "GinUE origin variance: integral form against the closed form, R in {0.5, 1, 3}"),
    Check("ginse_variance_series_vs_hyp1f2", 1e-9, _ginse_pair(og.var_origin_ginse_series, og.var_origin_ginse),
          "GinSE origin variance: even P*Q series against the 1F2 form"),
    Check("ginse_variance_hyp1f2_vs_struve", 1e-9, _ginse_pair(og.var_origin_ginse, og.var_origin_ginse_struve),
          "GinSE origin variance: 1F2 form against the Bessel/Struve form"),
    Check("ginse_variance_series_vs_struve", 1e-9, _ginse_pair(og.var_origin_ginse_series, og.var_origin_ginse_struve),
          "GinSE origin variance: series against the Bessel/Struve form"),
    Check("p2gamma_sum_vs_closed", 1e-11, _p2gamma,
          "odd-factorial sum of P(k+1/2) against its incomplete gamma form at (N, a) = (6, 0.8)"),
    Check("ginse_mean_middle_identity", 1e-12, _ginse_middle,
          "GinSE finite-N mean via GinUE(2N) against the direct sum at (5, 0.7)"),
    Check("odd_pq_sum_vs_closed", 1e-9, _odd_pq,
          "sum of P(2k+1) Q(2k+1) against R^2 e^{-4R^2}(I0 + I1 + 1F2)"),
    Check("c_derivative_finite_difference", 1e-6, _c_derivative,
          "c'(R) = 2R e^{-2R^2} I0(2R^2) by central differences"),
    Check("c_ode_finite_difference", 1e-5, _c_ode,
          "c = c''/8 + (R - 1/(8R)) c' by finite differences"),
    Check("hyp1f2_vs_bessel_j0_integral", 1e-10, _hyp_j0,
          "x^2 1F2(1/2; 1, 3/2; -4x^4) against a quarter of the integral of J0"),
    Check("ginue_mean_closed_vs_bernoulli", 1e-10, _bernoulli_mean(2),
          "GinUE finite-N mean against the sum of L_j from numerical moment tables"),
    Check("ginse_mean_closed_vs_bernoulli", 1e-10, _bernoulli_mean(4),
          "GinSE finite-N mean against the sum of L_j from numerical moment tables"),
    Check("ginoe_real_mean_vs_density", 1e-10, _ginoe_real_density,
          "GinOE real mean in (-a, a) against quadrature of the real density"),
    Check("ginoe_full_count", 1e-9, _ginoe_full_count,
          "GinOE real + complex mean equals N on a huge disc; real part matches the known total"),
    Check("ginoe_real_kernel_oracle", 1e-7, _oracle_real,
          "GinOE real variance against product-rule integration of the real Pfaffian kernel"),
    Check("ginoe_complex_kernel_oracle", 1e-6, _oracle_complex,
          "GinOE connected complex term against 4 (I- - I+) at R = 1"),
    Check("ginoe_mixed_kernel_oracle", 1e-7, _oracle_mixed,
          "GinOE real/complex covariance against the mixed Pfaffian kernel"),
    Check("bulk_kappa2", 1e-8, _bulk_k2, "bulk second cumulant equals 1/sqrt(2 pi)"),
    Check("edge_profile_limits", 1e-6, _edge_f, "f(8) = 1 and f(-8) = 0"),
    Check("mittag_leffler_reduces_to_gaussian", 1e-10, _ml_gaussian,
          "Mittag-Leffler (2, 1, 0) moment table equals the Gaussian table"),
    Check("mgf_derivatives_vs_cumulants", 1e-5, _mgf_cumulants,
          "log-derivatives of the product MGF against the polylog cumulants"),
)


def run_checks(names=None) -> list[CheckResult]:
    """Run all (or the named) checks and collect residuals.

    Raises
    ------
    KeyError
        If ``names`` contains a name that is not in :data:`CHECKS`.
    """
    if names is not None:
        unknown = set(names) - {c.name for c in CHECKS}
        if unknown:
            raise KeyError(f"unknown checks: {sorted(unknown)}")
    out = []
    for chk in CHECKS:
        if names is not None and chk.name not in names:
            continue
        t0 = time.perf_counter()
        try:
            res, err = float(chk.func()), None
        except Exception as exc:  # a crash is reported as a failed check
            res, err = math.inf, f"{type(exc).__name__}: {exc}"
        if not np.isfinite(res) and err is None:
            err = "non-finite residual"
        out.append(CheckResult(chk.name, res, chk.tol, time.perf_counter() - t0, err))
    return out
