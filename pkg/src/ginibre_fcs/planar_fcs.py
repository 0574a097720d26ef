"""Full counting statistics for rotationally invariant planar ensembles.

For a radial potential W(z) = g(|z|) the number of eigenvalues in the disc
of radius a is a sum of independent Bernoulli variables with success
probabilities

    L_j(a) = int_0^a r^(2j+1) e^{-N g(r)} dr / int_0^inf r^(2j+1) e^{-N g(r)} dr,

with j = 0..N-1 for random normal matrices (beta=2) and j = 1, 3, ...,
2N-1 for planar symplectic ensembles (beta=4).  Everything here is built
on the table of L_j and M_j = 1 - L_j.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy import special as sc

from . import specfun as sf
from .quadrature import QuadSpec, integrate_1d

__all__ = [
    "RadialPotential",
    "MomentTable",
    "CumulantResult",
    "builtin_potential",
    "parse_potential",
    "potential_from_expressions",
    "compile_expression",
    "suitability_warnings",
    "moment_table",
    "moment_tables",
    "mgf",
    "cumulant_finite",
    "cumulant_bulk_limit",
    "cumulant_edge_limit",
    "bulk_integrand",
    "scaled_cumulant",
    "edge_radius",
    "cumulant_origin_ginse",
]


@dataclass(frozen=True)
class RadialPotential:
    """Rotationally invariant potential W(z) = g(|z|) - (2 c / N) log|z|.

    The optional logarithmic charge ``log_charge`` (c) is kept separate so
    that ``g`` itself does not depend on N; the weight is
    ``r^(2c) exp(-N g(r))``.
    """

    g: Callable
    g_prime: Callable
    g_second: Callable
    label: str = "custom"
    support_cutoff: float = math.inf
    log_charge: float = 0.0

    def quarter_laplacian(self, a):
        """ΔW(a) = (g''(a) + g'(a)/a) / 4 (the log term is harmonic)."""
        a = np.asarray(a, dtype=float)
        out = 0.25 * (self.g_second(a) + self.g_prime(a) / a)
        return out.item() if out.ndim == 0 else out


def _power_potential(alpha, b, c, label):
    if not (alpha > 0 and b > 0 and c > -1):
        raise ValueError("need alpha > 0, b > 0, c > -1")
    two_b = 2.0 * b
    return RadialPotential(
        g=lambda r: alpha * np.asarray(r, dtype=float) ** two_b,
        g_prime=lambda r: two_b * alpha * np.asarray(r, dtype=float) ** (two_b - 1.0),
        g_second=lambda r: two_b * (two_b - 1.0) * alpha * np.asarray(r, dtype=float) ** (two_b - 2.0),
        label=label,
        log_charge=float(c),
    )


def _truncated_unitary(ct):
    if not ct > 0:
        raise ValueError("truncated_unitary needs c > 0")
    A = 1.0 + ct

    def g(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -2.0 * ct * np.log1p(-r * r / A)
        return np.where(r * r < A, out, np.inf)

    def gp(r):
        r = np.asarray(r, dtype=float)
        return 4.0 * ct * r / (A - r * r)

    def gpp(r):
        r = np.asarray(r, dtype=float)
        return 4.0 * ct * (A + r * r) / (A - r * r) ** 2

    return RadialPotential(g, gp, gpp, label=f"truncated_unitary({ct:g})", support_cutoff=math.sqrt(A))


def builtin_potential(name: str, *params) -> RadialPotential:
    """Construct a named potential.

    ``ginse_gaussian`` (g = 2 r^2), ``ginue_gaussian`` (g = r^2),
    ``mittag_leffler(alpha, b, c)`` (g = alpha r^(2b) with log charge c) and
    ``truncated_unitary(c)`` (g = -2c log(1 - r^2/(1+c)), hard wall at
    sqrt(1+c)).
    """
    name = name.strip().lower()
    if name == "ginse_gaussian":
        return _power_potential(2.0, 1.0, 0.0, "ginse_gaussian")
    if name == "ginue_gaussian":
        return _power_potential(1.0, 1.0, 0.0, "ginue_gaussian")
    if name == "mittag_leffler":
        if len(params) != 3:
            raise ValueError("mittag_leffler takes (alpha, b, c)")
        a, b, c = (float(p) for p in params)
        return _power_potential(a, b, c, f"mittag_leffler({a:g},{b:g},{c:g})")
    if name == "truncated_unitary":
        if len(params) != 1:
            raise ValueError("truncated_unitary takes one parameter")
        return _truncated_unitary(float(params[0]))
    raise ValueError(f"unknown potential {name!r}")


def parse_potential(text: str) -> RadialPotential:
    """Parse ``name`` or ``name(p1, p2, ...)`` into a built-in potential."""
    m = re.fullmatch(r"\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise ValueError(f"cannot parse potential {text!r}")
    args = [float(s) for s in m.group(2).split(",")] if m.group(2) and m.group(2).strip() else []
    return builtin_potential(m.group(1), *args)


# ---------------------------------------------------------------------------
# Expression parser for custom potentials
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")


def _tokenize(text):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad character in expression at {text[pos:]!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := '-' unary | '+' unary | power
    # power  := atom ('^' unary)?
    # atom   := number | 'r' | func '(' expr ')' | '(' expr ')'
    _FUNCS = {"exp": np.exp, "log": np.log}

    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ValueError(f"unexpected token {tok[1]!r}")
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.i != len(self.toks):
            raise ValueError(f"trailing input at token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = (lambda a, b: lambda r: a(r) + b(r))(node, rhs) if op == "+" else \
                (lambda a, b: lambda r: a(r) - b(r))(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = (lambda a, b: lambda r: a(r) * b(r))(node, rhs) if op == "*" else \
                (lambda a, b: lambda r: a(r) / b(r))(node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda r: -inner(r)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            ex = self.unary()
            return lambda r: base(r) ** ex(r)
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return lambda r, v=val: v + 0.0 * r
        if kind == "name":
            self.take()
            if val == "r":
                return lambda r: r
            if val in self._FUNCS:
                fn = self._FUNCS[val]
                self.take("op", "(")
                inner = self.expr()
                self.take("op", ")")
                return lambda r: fn(inner(r))
            raise ValueError(f"unknown name {val!r}")
        if (kind, val) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise ValueError(f"unexpected token {val!r}")


def compile_expression(text: str) -> Callable:
    """Compile an arithmetic expression in ``r`` into a vectorized function.

    Grammar: numbers, ``r``, ``+ - * / ^`` (``**`` also accepted),
    ``exp(...)``, ``log(...)`` and parentheses.
    """
    fn = _Parser(_tokenize(text)).parse()

    def wrapped(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(fn(r), dtype=float)

    return wrapped


def potential_from_expressions(g: str, g_prime: str, g_second: str, label: str = "custom",
                               support_cutoff: float = math.inf) -> RadialPotential:
    """Build a potential from expression strings for g, g' and g''."""
    pot = RadialPotential(compile_expression(g), compile_expression(g_prime),
                          compile_expression(g_second), label=label,
                          support_cutoff=float(support_cutoff))
    for msg in suitability_warnings(pot):
        warnings.warn(msg, stacklevel=2)
    return pot


def suitability_warnings(pot: RadialPotential, n_grid: int = 200) -> list[str]:
    """Numerical checks of the suitability conditions; returns messages."""
    msgs = []
    hi = min(pot.support_cutoff * (1 - 1e-6), 10.0)
    r = np.logspace(-6, math.log10(hi), n_grid)
    rg = r * pot.g_prime(r)
    if not np.all(np.isfinite(rg)):
        msgs.append(f"{pot.label}: g' not finite on the test grid")
        return msgs
    if np.any(np.diff(rg) < -1e-12 * np.maximum(1.0, np.abs(rg[1:]))):
        msgs.append(f"{pot.label}: r g'(r) is not nondecreasing")
    if abs(1e-6 * float(pot.g_prime(1e-6))) > 1e-3:
        msgs.append(f"{pot.label}: r g'(r) does not vanish at r -> 0")
    if pot.support_cutoff > 1 and abs(float(pot.g_prime(1.0)) - 4.0) > 1e-6:
        msgs.append(f"{pot.label}: g'(1) = {float(pot.g_prime(1.0)):.6g}, not 4")
    return msgs


# ---------------------------------------------------------------------------
# Moment tables
# ---------------------------------------------------------------------------

@dataclass
class MomentTable:
    """Truncated moment ratios L_j(a), M_j(a) for one radius."""

    N: int
    beta: int
    a: float
    indices: np.ndarray
    log_h: np.ndarray
    L: np.ndarray
    M: np.ndarray
    potential: RadialPotential | None = field(default=None, repr=False)


def _indices(N, beta):
    if beta == 2:
        return np.arange(N)
    if beta == 4:
        return 2 * np.arange(N) + 1
    raise ValueError("beta must be 2 or 4")


_DROP = 60.0  # integrate where the weight is within e^-60 of its peak


def _weight_profile(pot, N, j):
    """Return phi(r), peak location, peak value and bracketing radii."""
    s = 2.0 * j + 1.0 + 2.0 * pot.log_charge
    cut = pot.support_cutoff

    def phi(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s * np.log(r) - N * pot.g(r)
        return np.where(r > 0, out, -np.inf if s > 0 else np.inf)

    def dphi(r):
        return s - N * r * float(pot.g_prime(r))

    # bracket the stationary point r g'(r) = s / N
    lo = 1e-300
    hi = 1.0
    if math.isfinite(cut):
        hi = cut * (1 - 1e-15)
    else:
        while dphi(hi) > 0:
            hi *= 2.0
    if s <= 0:
        rstar = lo
    else:
        lo_b = 1e-12
        while dphi(lo_b) < 0 and lo_b > 1e-300:
            lo_b *= 1e-4
        rstar = optimize.brentq(dphi, lo_b, hi, xtol=1e-15, maxiter=500)
    pstar = float(phi(rstar))

    def below(r):
        return float(phi(r)) - (pstar - _DROP)

    # lower edge
    if s <= 0 or below(1e-300) > 0:
        r_lo = 0.0
    else:
        a_ = rstar
        b_ = rstar
        while below(b_) > 0:
            b_ *= 0.5
        r_lo = optimize.brentq(below, b_, a_, xtol=1e-14 * rstar)
    # upper edge
    if math.isfinite(cut) and below(cut * (1 - 1e-15)) > 0:
        r_hi = cut
    else:
        b_ = rstar * 1.5 + 1e-3
        while below(b_) > 0:
            b_ = rstar + 2.0 * (b_ - rstar)
            if math.isfinite(cut):
                b_ = min(b_, cut * (1 - 1e-15))
        r_hi = optimize.brentq(below, rstar, b_, xtol=1e-14 * max(rstar, 1e-300))
    return phi, rstar, pstar, r_lo, r_hi


def _segments_for_index(pot, N, j, radii, spec):
    """Integrals of the peak-normalised weight over [0,a_0],[a_0,a_1],...,[a_k,inf)."""
    phi, rstar, pstar, r_lo, r_hi = _weight_profile(pot, N, j)

    def w(r):
        return np.exp(phi(r) - pstar)

    edges = np.concatenate([[r_lo], np.clip(radii, r_lo, r_hi), [r_hi]])
    seg = np.zeros(len(edges) - 1)
    for i in range(len(seg)):
        a, b = edges[i], edges[i + 1]
        if b > a:
            seg[i] = integrate_1d(w, a, b, spec)[0]
    return seg, pstar


def moment_tables(pot: RadialPotential, N: int, beta: int, radii, spec: QuadSpec | None = None) -> list[MomentTable]:
    """Moment tables for several radii sharing one pass over the indices.

    ``radii`` must be sorted ascending.  Each weight is integrated where it
    lies within a factor e^-60 of its peak, so L_j and M_j are accurate in
    absolute terms and values below about 1e-26 are returned as 0.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) < 0) or np.any(radii < 0):
        raise ValueError("radii must be non-negative and sorted")
    spec = spec or QuadSpec(abs_tol=1e-300, rel_tol=1e-13)
    idx = _indices(int(N), beta)
    nr = radii.size
    L = np.zeros((nr, idx.size))
    M = np.zeros((nr, idx.size))
    log_h = np.zeros(idx.size)
    for col, j in enumerate(idx):
        seg, pstar = _segments_for_index(pot, N, int(j), radii, spec)
        total = seg.sum()
        inside = np.cumsum(seg)[:-1]
        outside = np.cumsum(seg[::-1])[::-1][1:]
        L[:, col] = inside / total
        M[:, col] = outside / total
        log_h[col] = math.log(2.0) + pstar + math.log(total)
    return [MomentTable(int(N), beta, float(a), idx, log_h, L[i], M[i], pot) for i, a in enumerate(radii)]


def moment_table(pot: RadialPotential, N: int, beta: int, a: float, spec: QuadSpec | None = None) -> MomentTable:
    """Truncated moment ratios at radius ``a``.

    beta=4 uses indices j = 1, 3, ..., 2N-1 and beta=2 uses j = 0..N-1.
    ``a = inf`` gives L = 1.
    """
    a = float(a)
    if not a >= 0:
        raise ValueError("a must be non-negative")
    return moment_tables(pot, N, beta, [a], spec)[0]


def mgf(table: MomentTable, u: float) -> float:
    """Moment generating function E[exp(u N_a)] = prod_j (e^u L_j + M_j)."""
    return float(np.exp(np.sum(np.log(np.exp(u) * table.L + table.M))))


@dataclass(frozen=True)
class CumulantResult:
    """A cumulant value with its regime and normalisation."""

    p: int
    value: float
    regime: str = "finite_N"
    scale_factor: float = 1.0
    predicted: float | None = None


def _cumulant_terms(L, M, p):
    if p == 1:
        return L
    sign = -1.0 if p % 2 == 0 else 1.0  # (-1)^{p+1}
    return sign * sf.polylog_negorder_pq(p - 1, L, M)


def cumulant_finite(table: MomentTable, p: int) -> CumulantResult:
    """p-th cumulant of the disc count from the Bernoulli decomposition.

    ``kappa_p = (-1)^{p+1} sum_j Li_{1-p}(1 - 1/L_j)`` for p >= 2 and
    ``kappa_1 = sum_j L_j``.  The polylogarithm is evaluated as a
    polynomial in (L_j, M_j), so L_j = 0 or 1 contribute exactly zero.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    L, M = table.L, table.M
    keep = L >= 1e-300
    val = float(np.sum(_cumulant_terms(L[keep], M[keep], p)))
    return CumulantResult(p, val, "finite_N", 1.0)


def bulk_integrand(p: int, x):
    """``(-1)^{p+1} Li_{1-p}(-erfc(-x)/erfc(x))`` evaluated via L = erfc(x)/2."""
    x = np.asarray(x, dtype=float)
    L = 0.5 * sc.erfc(x)
    M = 0.5 * sc.erfc(-x)
    return _cumulant_terms(L, M, p)


_XCUT = 10.0


def cumulant_bulk_limit(p: int, spec: QuadSpec | None = None) -> float:
    """Universal bulk cumulant; exactly 0 for odd p >= 3.

    The integrand decays like erfc(|x|); the integral is truncated at
    |x| = 10 where the integrand is below 1e-44.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if p % 2 == 1:
        return 0.0
    spec = spec or QuadSpec(abs_tol=1e-15, rel_tol=1e-13)
    # even p: the integrand is even in x
    val, _ = integrate_1d(lambda x: bulk_integrand(p, x), 0.0, _XCUT, spec)
    return 2.0 * val


def cumulant_edge_limit(p: int, S: float, spec: QuadSpec | None = None) -> float:
    """Edge cumulant ``(-1)^{p+1} int_{-inf}^S Li_{1-p}(-erfc(-x)/erfc(x)) dx``."""
    if p < 2:
        raise ValueError("p must be >= 2")
    spec = spec or QuadSpec(abs_tol=1e-15, rel_tol=1e-13)
    S = float(S)
    upper = min(S, _XCUT)
    lower = min(-_XCUT, upper - 2.0)
    if upper <= lower:
        return 0.0
    val, _ = integrate_1d(lambda x: bulk_integrand(p, x), lower, upper, spec)
    return val


def edge_radius(pot: RadialPotential, N: int, S: float) -> float:
    """Radius ``a = 1 - S / sqrt(2 ΔW(1) N)`` of the edge scaling."""
    return 1.0 - S / math.sqrt(2.0 * pot.quarter_laplacian(1.0) * N)


def scaled_cumulant(pot: RadialPotential, N: int, a: float, p: int, beta: int = 4,
                    edge_S: float | None = None) -> CumulantResult:
    """``sqrt(2/(N ΔW)) kappa_p`` together with its large-N prediction.

    In the bulk (default) ΔW is taken at ``a`` and the prediction is
    ``a kappa_p^bulk``.  With ``edge_S`` the radius is set by the edge
    scaling, ΔW is taken at 1 and the prediction is ``kappa_p^edge(S)``.
    """
    if edge_S is not None:
        a = edge_radius(pot, N, edge_S)
        dw = pot.quarter_laplacian(1.0)
        predicted = cumulant_edge_limit(p, edge_S)
        regime = "edge"
    else:
        dw = pot.quarter_laplacian(a)
        predicted = a * cumulant_bulk_limit(p)
        regime = "bulk"
    scale = math.sqrt(2.0 / (N * dw))
    table = moment_table(pot, N, beta, a)
    k = cumulant_finite(table, p).value
    return CumulantResult(p, scale * k, regime, scale, predicted)


def cumulant_origin_ginse(R: float, p: int) -> float:
    """GinSE cumulant in the origin limit.

    ``(-1)^{p+1} sum_{j>=0} Li_{1-p}(1 - 1/P(2j+2, 2R^2))``; terms are
    dropped once P(2j+2, 2R^2) < 1e-300.
    """
    R = float(R)
    if p < 1:
        raise ValueError("p must be >= 1")
    if R == 0:
        return 0.0
    x = 2.0 * R * R
    cap = 10 * math.ceil(x) + 200
    s = 2.0 * np.arange(cap) + 2.0
    L = sc.gammainc(s, x)
    M = sc.gammaincc(s, x)
    keep = L >= 1e-300
    return float(np.sum(_cumulant_terms(L[keep], M[keep], p)))
