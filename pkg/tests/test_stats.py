import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ginibre_fcs.stats import GridMismatch, InsufficientSamples, MomentAccumulator, accumulate, kstats, merge, report


def counts(radii, total, real):
    total = np.asarray(total)
    real = np.asarray(real)
    return SimpleNamespace(radii=np.asarray(radii, dtype=float), n_total=total, n_real=real,
                           n_complex=total - real)


def block(total, real=None):
    total = np.asarray(total, dtype=float)
    if total.ndim == 1:
        total = total[:, None]
    real = np.zeros_like(total) if real is None else np.asarray(real, dtype=float).reshape(total.shape)
    return np.stack([total, real, total - real], axis=-1)


def test_constant_stream():
    acc = MomentAccumulator([1.0])
    for _ in range(20):
        accumulate(acc, counts([1.0], [3], [1]))
    r = report(acc)[0]
    assert r["mean"] == 3.0
    assert r["var"] == 0.0 and r["k3"] == 0.0 and r["k4"] == 0.0
    assert r["se_mean"] == 0.0


def test_two_point_stream():
    acc = MomentAccumulator([0.5]).add_block(block([0, 2] * 8))
    r = acc.report()[0]
    assert r["mean"] == 1.0
    # population variance 1, unbiased estimate 16/15
    assert r["var"] == pytest.approx(16 / 15, rel=1e-14)


def test_two_point_unbiased_variance_small():
    # hand computation on {0, 2}: mean 1, unbiased variance 2 for n = 2
    n, m2, m3, m4 = 2, 2.0, 0.0, 2.0
    k2, _, _ = kstats(n, m2, m3, m4)
    assert k2 == 2.0


def test_insufficient_samples():
    acc = MomentAccumulator([1.0]).add_block(block(np.arange(15)))
    with pytest.raises(InsufficientSamples):
        acc.report()


def test_grid_mismatch():
    acc = MomentAccumulator([0.5, 1.0])
    with pytest.raises(GridMismatch):
        accumulate(acc, counts([0.5, 1.1], [1, 2], [0, 0]))
    with pytest.raises(GridMismatch):
        merge(acc, MomentAccumulator([0.5]))
    with pytest.raises(GridMismatch):
        acc.add_block(np.zeros((3, 1, 3)))


def test_merge_with_empty():
    rng = np.random.default_rng(1)
    acc = MomentAccumulator([1.0]).add_block(block(rng.poisson(2, 100)))
    assert merge(acc, MomentAccumulator([1.0])) == acc
    assert merge(MomentAccumulator([1.0]), acc) == acc


def test_merge_commutes_bitwise():
    rng = np.random.default_rng(2)
    a = MomentAccumulator([1.0, 2.0]).add_block(block(rng.poisson(3, (300, 2))))
    b = MomentAccumulator([1.0, 2.0]).add_block(block(rng.poisson(5, (170, 2))))
    assert merge(a, b).to_bytes() == merge(b, a).to_bytes()


def test_split_in_four_matches_single_pass():
    rng = np.random.default_rng(3)
    x = block(rng.poisson(4, (10**4, 3)), rng.binomial(2, 0.3, (10**4, 3)))
    single = MomentAccumulator([1, 2, 3]).add_block(x)
    parts = [MomentAccumulator([1, 2, 3]).add_block(p) for p in np.array_split(x, 4)]
    merged = merge(merge(parts[0], parts[1]), merge(parts[2], parts[3]))
    for ch in ("total", "real", "complex"):
        for r1, r2 in zip(single.report(ch), merged.report(ch)):
            for k in ("mean", "var", "cov_rc", "k3", "k4"):
                assert r2[k] == pytest.approx(r1[k], rel=1e-10, abs=1e-12)


def _random_partition_merge(x, cuts, order_seed):
    pieces = np.split(x, sorted(cuts))
    accs = [MomentAccumulator([1.0]).add_block(p) for p in pieces]
    rng = np.random.default_rng(order_seed)
    # merge in a random tree shape
    while len(accs) > 1:
        i = int(rng.integers(len(accs) - 1))
        accs[i:i + 2] = [merge(accs[i], accs[i + 1])]
    return accs[0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 399), max_size=8, unique=True), st.integers(0, 10**6))
def test_merge_associative_on_random_partitions(cuts, seed):
    x = block(np.random.default_rng(7).poisson(3, 400))
    ref = MomentAccumulator([1.0]).add_block(x).report()[0]
    got = _random_partition_merge(x, cuts, seed).report()[0]
    for k in ("mean", "var", "k3", "k4"):
        assert got[k] == pytest.approx(ref[k], rel=1e-10, abs=1e-12)


def test_covariance_channel_identity():
    rng = np.random.default_rng(5)
    real = rng.poisson(2, (5000, 2))
    cplx = 2 * rng.poisson(1.5, (5000, 2)) + real // 2
    acc = MomentAccumulator([0.5, 1.0]).add_block(block(real + cplx, real))
    for rt, rr, rc in zip(acc.report("total"), acc.report("real"), acc.report("complex")):
        resid = rt["var"] - rr["var"] - rc["var"] - 2 * rt["cov_rc"]
        assert abs(resid) <= 1e-10 * rt["var"]


def test_poisson_cumulants():
    lam = 3.0
    x = block(np.random.default_rng(11).poisson(lam, 10**6))
    r = MomentAccumulator([1.0]).add_block(x).report()[0]
    for k, se in (("var", "se_var"), ("k3", "se_k3"), ("k4", "se_k4")):
        assert abs(r[k] - lam) <= 4 * r[se]


def test_bernoulli_kappa4():
    p = 0.5
    x = block(np.random.default_rng(12).binomial(1, p, 10**6))
    r = MomentAccumulator([1.0]).add_block(x).report()[0]
    k4 = p * (1 - p) * (1 - 6 * p * (1 - p))
    assert k4 == -0.125
    assert abs(r["k4"] - k4) <= 4 * r["se_k4"]


@pytest.mark.parametrize("dist", ["exponential", "gamma"])
def test_kstat_unbiased(dist):
    # known cumulants: exponential(1): k_n = (n-1)!; gamma(shape 2): k_n = 2 (n-1)!
    rng = np.random.default_rng(13)
    shape = 1.0 if dist == "exponential" else 2.0
    x = block(rng.gamma(shape, 1.0, 10**6))
    r = MomentAccumulator([1.0]).add_block(x).report()[0]
    assert abs(r["var"] - shape) <= 4 * r["se_var"]
    assert abs(r["k3"] - 2 * shape) <= 4 * r["se_k3"]


def test_se_scales_like_inverse_sqrt_n():
    rng = np.random.default_rng(14)
    se = []
    for n in (10**4, 4 * 10**4):
        r = MomentAccumulator([1.0]).add_block(block(rng.normal(0, 1, n))).report()[0]
        se.append(r["se_mean"])
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.2)
    assert se[1] == pytest.approx(1 / math.sqrt(4 * 10**4), rel=0.15)


def test_single_sample_adds_match_block_add():
    rng = np.random.default_rng(15)
    x = block(rng.poisson(2, (50, 2)))
    one = MomentAccumulator([1.0, 2.0])
    for row in x:
        one.add_block(row[None])
    blk = MomentAccumulator([1.0, 2.0]).add_block(x)
    for a, b in zip(one.report(), blk.report()):
        for k in ("mean", "var", "k3", "k4"):
            assert a[k] == pytest.approx(b[k], rel=1e-12, abs=1e-13)


def test_compaction_bounds_batches():
    acc = MomentAccumulator([1.0], max_batches=64)
    rng = np.random.default_rng(16)
    for _ in range(50):
        acc.add_block(block(rng.poisson(2, 37)))
    assert len(acc._batches) <= 64
    assert acc.n == 50 * 37


def test_serialization_roundtrip():
    rng = np.random.default_rng(17)
    acc = MomentAccumulator([0.25, 0.5, np.inf]).add_block(block(rng.poisson(2, (500, 3))))
    blob = acc.to_bytes()
    assert blob[:8] == b"GFCSACC\x00"
    back = MomentAccumulator.from_bytes(blob)
    assert back == acc
    assert back.to_bytes() == blob
    with pytest.raises(ValueError):
        MomentAccumulator.from_bytes(b"garbage!" + blob[8:])
    with pytest.raises(ValueError):
        MomentAccumulator.from_bytes(blob + b"\x00")
