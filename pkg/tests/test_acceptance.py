"""Acceptance criteria 1 to 8.

Each test prints one ``criterion N: PASS`` or ``criterion N: FAIL`` line
(repeated in the pytest terminal summary) and then asserts the verdict.
The Monte Carlo criteria use fixed seeds; their tolerances are multiples of
the standard errors estimated from the same runs.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import record_verdict
from ginibre_fcs import finite_n as fn
from ginibre_fcs import origin as og
from ginibre_fcs import planar_fcs as pf
from ginibre_fcs.finite_n import EnsembleKind
from ginibre_fcs.identities import run_checks
from ginibre_fcs.sampler import SimConfig, run_campaign

THREADS = os.cpu_count() or 1
SQPI = math.sqrt(math.pi)


class Verdict:
    """Collects named sub-checks and reports one line for a criterion."""

    def __init__(self, number, budget_s, spent_s=0.0):
        self.number = number
        self.budget_s = budget_s
        self.items = []
        self.note = ""
        self.t0 = time.perf_counter() - spent_s

    def check(self, label, ok, detail=""):
        self.items.append((label, bool(ok), detail))

    def close(self):
        elapsed = time.perf_counter() - self.t0
        self.check("runtime", elapsed < self.budget_s, f"{elapsed:.1f}s < {self.budget_s}s")
        bad = [f"{label} [{detail}]" for label, ok, detail in self.items if not ok]
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {self.number}: {status} ({len(self.items) - len(bad)}/{len(self.items)} checks, {elapsed:.1f}s{self.note})"
        if bad:
            line += " failing: " + "; ".join(bad)
        record_verdict(line)
        assert not bad, line


def _within(v, label, value, ref, rel=None, abs_=None):
    if rel is not None:
        ok = abs(value - ref) <= rel * abs(ref)
    else:
        ok = abs(value - ref) <= abs_
    v.check(label, ok, f"{value:.6g} vs {ref:.6g}")


def test_criterion_1_identity_suite():
    v = Verdict(1, 10)
    wanted = {
        "a": ["ginue_variance_series_vs_closed"],
        "b": ["ginse_variance_series_vs_hyp1f2", "ginse_variance_hyp1f2_vs_struve",
              "ginse_variance_series_vs_struve"],
        "c": ["ginue_variance_integral_vs_closed"],
        "d": ["p2gamma_sum_vs_closed"],
        "e": ["ginse_mean_middle_identity"],
        "f": ["odd_pq_sum_vs_closed"],
        "g": ["c_derivative_finite_difference", "c_ode_finite_difference"],
    }
    limits = {"a": 1e-10, "b": 1e-9, "c": 1e-9, "d": 1e-11, "e": 1e-12, "f": 1e-9, "g": 1e-5}
    results = {r.name: r for r in run_checks()}
    for part, names in wanted.items():
        for name in names:
            r = results[name]
            v.check(f"({part}) {name}", r.error is None and r.residual <= limits[part],
                    f"{r.residual:.2e} <= {limits[part]:.0e}")
    v.check("whole identity suite", all(r.passed for r in results.values()),
            ",".join(n for n, r in results.items() if not r.passed))
    v.close()


def test_criterion_2_kernel_oracles():
    v = Verdict(2, 60)
    for R in (0.5, 1.0, 2.0):
        _within(v, f"real kernel R={R}", og.var_origin_ginoe_real(R),
                og.ginoe_origin_kernel_oracle(R, "real_real"), abs_=1e-7)
    ii = og.ginoe_i_integrals(1.0)
    diff = 4 * (sum(ii[f"I-{k}"] for k in range(1, 5)) - sum(ii[f"I+{k}"] for k in range(1, 5)))
    _within(v, "complex connected R=1", og.ginoe_origin_kernel_oracle(1.0, "complex_connected"), diff, abs_=1e-6)
    v.close()


def test_criterion_3_asymptotic_slopes():
    v = Verdict(3, 30)
    R = 30.0
    c = 2 * math.sqrt(2)
    b = og.var_origin_ginoe(R)
    pairs = [
        ("GinUE", og.var_origin_ginue(R), 1 / SQPI),
        ("GinSE", og.var_origin_ginse(R), 1 / math.sqrt(2 * math.pi)),
        ("GinOE real", b.var_real, (c - 2) / SQPI),
        ("GinOE complex", b.var_complex, c / SQPI),
        ("GinOE covariance", b.covariance, -(c - 2) / SQPI),
        ("GinOE total", b.total, 2 / SQPI),
    ]
    for label, var, slope in pairs:
        _within(v, label, var / R, slope, rel=0.03)
    totals = {EnsembleKind.GINUE: og.var_origin_ginue(R), EnsembleKind.GINSE: og.var_origin_ginse(R),
              EnsembleKind.GINOE: b.total}
    for kind, var in totals.items():
        _within(v, f"normalised {kind.name}", og.universal_slope(kind) * var / R, 2 / SQPI, rel=0.03)
    v.close()


def test_criterion_4_universal_constants():
    v = Verdict(4, 5)
    _within(v, "kappa2 bulk", pf.cumulant_bulk_limit(2), 1 / math.sqrt(2 * math.pi), abs_=1e-8)
    _within(v, "kappa3 bulk", pf.cumulant_bulk_limit(3), 0.0, abs_=1e-12)
    _within(v, "f(8)", og.edge_profile_f(8.0), 1.0, abs_=1e-6)
    v.check("f(-8)", og.edge_profile_f(-8.0) < 1e-10, f"{og.edge_profile_f(-8.0):.3g}")
    # deep inside, twice the edge profile equals the bulk value 2a at a = 1
    _within(v, "edge to bulk 2 f", 2 * og.edge_profile_f(40.0), 2 * 1.0, abs_=1e-12)
    _within(v, "edge to bulk kappa2", pf.cumulant_edge_limit(2, 40.0), 1.0 * pf.cumulant_bulk_limit(2), abs_=1e-10)
    v.close()


def test_criterion_5_scaled_convergence():
    v = Verdict(5, 30)
    target = 0.5 / math.sqrt(2 * math.pi)
    g4 = pf.builtin_potential("ginse_gaussian")
    _within(v, "Gaussian (400, 0.5)", pf.scaled_cumulant(g4, 400, 0.5, 2).value, target, rel=0.05)
    tu = pf.builtin_potential("truncated_unitary", 0.2)
    _within(v, "truncated unitary (200, 0.5)", pf.scaled_cumulant(tu, 200, 0.5, 2).value, target, rel=0.10)
    ml = pf.builtin_potential("mittag_leffler", 2, 1, 0)
    worst = 0.0
    for a in np.linspace(0.05, 1.2, 24):
        for p in (1, 2, 3, 4):
            x = pf.cumulant_finite(pf.moment_table(ml, 50, 4, a), p).value
            y = pf.cumulant_finite(pf.moment_table(g4, 50, 4, a), p).value
            worst = max(worst, abs(x - y) / max(abs(y), 1e-300) if y else abs(x))
    v.check("Mittag-Leffler(2,1,0) equals Gaussian", worst <= 1e-10, f"{worst:.2e}")
    v.close()


def test_criterion_6_fast_path_cumulants():
    v = Verdict(6, 300)
    N = 50
    grid = np.linspace(0.0, 1.2, 25)
    cfg = SimConfig("ginse", N, tuple(grid), 10**7, seed=2024, fast_bernoulli=True)
    acc = run_campaign(cfg, threads=THREADS)
    tabs = pf.moment_tables(pf.builtin_potential("ginse_gaussian"), N, 4, grid)
    rep = acc.report()
    worst = 0.0
    for t, rec in zip(tabs, rep):
        for p, key, se in ((2, "var", "se_var"), (3, "k3", "se_k3"), (4, "k4", "se_k4")):
            ref = pf.cumulant_finite(t, p).value
            dev = abs(rec[key] - ref)
            ok = dev <= 3 * rec[se]
            z = dev / rec[se] if rec[se] > 0 else (0.0 if dev == 0 else math.inf)
            worst = max(worst, z)
            v.check(f"kappa{p} a={t.a:.2f}", ok, f"{rec[key]:.6g} vs {ref:.6g}, z={z:.2f}")
    v.note = f", largest |z| {worst:.2f} over {3 * grid.size} comparisons"
    v.close()


@pytest.fixture(scope="module")
def ginue_campaign():
    t0 = time.perf_counter()
    cfg = SimConfig("ginue", 100, (0.5, 1.0), 10**4, seed=7)
    return run_campaign(cfg, threads=THREADS).report(), time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_7_matrix_path(ginue_campaign):
    report, spent = ginue_campaign
    v = Verdict(7, 1800, spent)
    # (a) GinUE means
    for rec in report:
        ref = fn.mean_disc_ginue(100, rec["radius"]).value
        dev = abs(rec["mean"] - ref)
        v.check(f"(a) GinUE mean a={rec['radius']}", dev <= 3 * rec["se_mean"],
                f"{rec['mean']:.6g} vs {ref:.6g}, se {rec['se_mean']:.2g}")

    # (b) GinOE on one finite-N grid: origin scale, bulk and outside points
    N = 150
    origin_R = (0.5, 1.0, 2.0)
    grid = sorted([R / math.sqrt(N) for R in origin_R] + [0.5, 1.3])
    acc = run_campaign(SimConfig("ginoe", N, tuple(grid), 4000, seed=11), threads=THREADS)
    rep = {ch: {round(r["radius"], 12): r for r in acc.report(ch)} for ch in ("total", "real", "complex")}

    def at(ch, a):
        return rep[ch][round(a, 12)]

    for R in origin_R:
        a = R / math.sqrt(N)
        b = og.var_origin_ginoe(R)
        for label, rec, key, se, ref in (
            ("var_real", at("real", a), "var", "se_var", b.var_real),
            ("var_complex", at("complex", a), "var", "se_var", b.var_complex),
            ("cov", at("total", a), "cov_rc", "se_cov", b.covariance),
        ):
            dev = abs(rec[key] - ref)
            v.check(f"(b) origin {label} R={R}", dev <= 3 * rec[se],
                    f"{rec[key]:.5g} vs {ref:.5g}, se {rec[se]:.2g}")
    scale = math.sqrt(N / math.pi)
    c = 2 * math.sqrt(2)
    a = 0.5
    _within(v, "(b) bulk total", at("total", a)["var"] / scale, 2 * a, rel=0.15)
    _within(v, "(b) bulk complex", at("complex", a)["var"] / scale, c * a, rel=0.20)
    _within(v, "(b) bulk real", at("real", a)["var"] / scale, (c - 2) * a, rel=0.20)
    _within(v, "(b) bulk cov", at("total", a)["cov_rc"] / scale, -(c - 2) * a, rel=0.20)
    a = 1.3
    tot = at("total", a)["var"] / scale
    vr = at("real", a)["var"] / scale
    vc = at("complex", a)["var"] / scale
    v.check("(b) outside total vanishes", tot < 0.5, f"{tot:.3g} < 0.5")
    v.check("(b) outside real stays O(1)", vr > 0.25, f"{vr:.3g} > 0.25")
    v.check("(b) outside complex stays O(1)", vc > 0.25, f"{vc:.3g} > 0.25")

    # (c) GinSE matrices against the Bernoulli path
    a = 0.6
    slow = run_campaign(SimConfig("ginse", 30, (a,), 10**4, seed=13), threads=THREADS).report()[0]
    fast = run_campaign(SimConfig("ginse", 30, (a,), 10**5, seed=13, fast_bernoulli=True),
                        threads=THREADS).report()[0]
    se = math.hypot(slow["se_var"], fast["se_var"])
    v.check("(c) GinSE variance matrix vs Bernoulli", abs(slow["var"] - fast["var"]) <= 3 * se,
            f"{slow['var']:.5g} vs {fast['var']:.5g}, se {se:.2g}")
    v.close()


@pytest.mark.slow
def test_criterion_8_deficit_law(ginue_campaign):
    v = Verdict(8, 1800)
    for kind in EnsembleKind:
        ratios = []
        for N in (50, 100, 200, 400):
            d, asym = fn.deficit_outside(N, kind)
            ratios.append(d / asym)
        v.check(f"{kind.name} ratio at N=400", abs(ratios[-1] - 1) <= 0.10,
                ", ".join(f"{r:.4f}" for r in ratios))
        v.check(f"{kind.name} approaches the asymptote", abs(ratios[-1] - 1) <= abs(ratios[0] - 1),
                f"{ratios[0]:.4f} -> {ratios[-1]:.4f}")
    # the GinUE campaign of criterion 7(a) sees the same deficit at a = 1
    rec = [r for r in ginue_campaign[0] if r["radius"] == 1.0][0]
    d, _ = fn.deficit_outside(100, EnsembleKind.GINUE)
    mc = 100 - rec["mean"]
    v.check("GinUE N=100 Monte Carlo deficit", abs(mc - d) <= 3 * rec["se_mean"],
            f"{mc:.5g} vs {d:.5g}, se {rec['se_mean']:.2g}")
    v.close()
