import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginibre_fcs import finite_n as fn
from ginibre_fcs import origin as og
from ginibre_fcs.finite_n import EnsembleKind

# mpmath (40 digits): sum_{j>=1} P(j, R^2) Q(j, R^2)
MP_GINUE_VAR = {0.5: 0.20036401840850544131, 1.0: 0.52377761180260869869, 3.0: 1.6806878287630620614}
# mpmath: sum_{k>=1} P(2k, 2R^2) Q(2k, 2R^2)
MP_GINSE_VAR = {0.5: 0.08383002841278660299, 1.0: 0.38106059552101427071, 2.0: 0.7915749374993659076}
# complex connected term at R = 1 from the kernel oracle
ORACLE_CC_R1 = -0.2263979204609385


@pytest.mark.parametrize("R", sorted(MP_GINUE_VAR))
def test_ginue_variance_reference(R):
    for f in (og.var_origin_ginue, og.var_origin_ginue_series, og.var_origin_ginue_shirai):
        assert f(R) == pytest.approx(MP_GINUE_VAR[R], rel=1e-12)


@pytest.mark.parametrize("R", sorted(MP_GINSE_VAR))
def test_ginse_variance_reference(R):
    for f in (og.var_origin_ginse, og.var_origin_ginse_series, og.var_origin_ginse_struve):
        assert f(R) == pytest.approx(MP_GINSE_VAR[R], rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 12))
def test_ginse_three_forms_agree(R):
    v1 = og.var_origin_ginse_series(R)
    v2 = og.var_origin_ginse(R)
    v3 = og.var_origin_ginse_struve(R)
    assert v1 == pytest.approx(v2, rel=1e-9)
    assert v2 == pytest.approx(v3, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 12))
def test_odd_pq_identity(R):
    assert og.odd_pq_sum(R) == pytest.approx(og.odd_pq_closed(R), rel=1e-9)


@pytest.mark.parametrize("R", [0.5, 1.0, 3.0])
def test_c_derivative(R):
    h = 1e-5
    fd = (og.var_origin_ginue(R + h) - og.var_origin_ginue(R - h)) / (2 * h)
    assert fd == pytest.approx(og.var_origin_ginue_derivative(R), abs=1e-6)


def test_means():
    assert og.mean_origin(EnsembleKind.GINUE, 1.7).value == pytest.approx(1.7**2)
    R = 1.3
    ref = R * R - 0.25 + math.exp(-4 * R * R) / 4
    assert og.mean_origin(EnsembleKind.GINSE, R).value == pytest.approx(ref, rel=1e-14)
    m = og.mean_origin(EnsembleKind.GINOE, R)
    assert m.real_part == pytest.approx(math.sqrt(2 / math.pi) * R)
    assert m.value == pytest.approx(m.real_part + m.complex_part)


def test_ginoe_complex_mean_small_r_branch_is_continuous():
    a = og.mean_origin(EnsembleKind.GINOE, 0.0999999).complex_part
    b = og.mean_origin(EnsembleKind.GINOE, 0.1000001).complex_part
    assert a == pytest.approx(b, rel=1e-5)
    coeff, power = og.asymptote_table()[("mean_complex", "GinOE", "R->0")]
    assert og.mean_origin(EnsembleKind.GINOE, 1e-3).complex_part == pytest.approx(coeff * 1e-9, rel=1e-2)


def test_ginoe_complex_mean_matches_large_n():
    N = 400
    R = 1.0
    finite = fn.mean_disc_ginoe_complex(N, R / math.sqrt(N)).value
    assert finite == pytest.approx(og.mean_origin(EnsembleKind.GINOE, R).complex_part, rel=0.02)


def test_radial_density_normalisation():
    # integrating the density over the disc reproduces the mean
    R = 1.5
    for kind in (EnsembleKind.GINUE, EnsembleKind.GINSE):
        val = float(mp.quad(lambda r: 2 * r * og.radial_density_origin(kind, float(r)), [0, R]))
        assert val == pytest.approx(og.mean_origin(kind, R).value, rel=1e-10)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_real_variance_vs_kernel_oracle(R):
    assert og.var_origin_ginoe_real(R) == pytest.approx(og.ginoe_origin_kernel_oracle(R, "real_real"), abs=1e-7)


def test_complex_variance_vs_kernel_oracle():
    ii = og.ginoe_i_integrals(1.0)
    diff = 4 * (sum(ii[f"I-{k}"] for k in range(1, 5)) - sum(ii[f"I+{k}"] for k in range(1, 5)))
    oracle = og.ginoe_origin_kernel_oracle(1.0, "complex_connected")
    assert diff == pytest.approx(oracle, abs=1e-6)
    assert oracle == pytest.approx(ORACLE_CC_R1, abs=1e-12)


@pytest.mark.parametrize("R", [0.5, 1.0])
def test_covariance_vs_kernel_oracle(R):
    assert og.cov_origin_ginoe(R) == pytest.approx(og.ginoe_origin_kernel_oracle(R, "real_complex"), abs=1e-7)


def test_breakdown_adds_up():
    b = og.var_origin_ginoe(2.0)
    assert b.total == pytest.approx(b.var_real + b.var_complex + 2 * b.covariance, rel=1e-14)
    assert b.covariance < 0 < b.var_real


def test_small_r_asymptotes():
    t = og.asymptote_table()
    R = 1e-3
    assert og.var_origin_ginue(R) / R**2 == pytest.approx(t[("var", "GinUE", "R->0")][0], rel=1e-3)
    assert og.var_origin_ginse(R) / R**4 == pytest.approx(t[("var", "GinSE", "R->0")][0], rel=1e-3)
    assert og.var_origin_ginoe_real(R) / R == pytest.approx(t[("var_real", "GinOE", "R->0")][0], rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([EnsembleKind.GINUE, EnsembleKind.GINSE]), st.floats(0.05, 20))
def test_variance_below_mean(kind, R):
    # determinantal/Pfaffian counts are sub-Poissonian
    v = og.variance_origin(kind, R)
    assert 0 < v <= og.mean_origin(kind, R).value


def test_universal_constants():
    assert og.universal_slope(EnsembleKind.GINSE) == pytest.approx(2 * math.sqrt(2))
    for kind in EnsembleKind:
        assert og.bulk_slope(kind) * og.universal_slope(kind) == pytest.approx(2 / math.sqrt(math.pi))


def test_edge_profile():
    assert og.edge_profile_f(0.0) == pytest.approx(0.5, abs=1e-12)
    assert og.edge_profile_f(8.0) == pytest.approx(1.0, abs=1e-6)
    assert og.edge_profile_f(-8.0) < 1e-10
    vals = [og.edge_profile_f(s) for s in np.linspace(-4, 4, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_kernel_oracle_errors():
    with pytest.raises(ValueError):
        og.ginoe_origin_kernel_oracle(1.0, "nope")
    assert og.ginoe_origin_kernel_oracle(0.0, "real_real") == 0.0


def test_negative_radius():
    with pytest.raises(ValueError):
        og.var_origin_ginue(-1.0)
