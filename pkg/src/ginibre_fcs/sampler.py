"""Random Ginibre matrices, eigenvalue counts in centred discs, campaigns.

Matrix path
    ``sample_matrix`` draws a GinOE, GinUE or GinSE matrix normalised so
    that the eigenvalues fill the unit disc, and splits the spectrum into
    real eigenvalues and upper-half-plane representatives.

Bernoulli path
    For rotationally invariant determinantal (beta=2) and Pfaffian (beta=4)
    ensembles the disc count is a sum of independent Bernoulli variables
    with success probabilities L_j(a).  Drawing one uniform U_j per index
    and setting the indicator to ``U_j < L_j(a)`` for every radius at once
    gives the joint law of the counts across a radius grid, since every
    L_j(a) is nondecreasing in a.

Campaigns
    ``run_campaign`` processes samples in fixed chunks.  Sample ``s`` of the
    matrix path draws from a Philox stream keyed by ``(seed, s)``; the
    Bernoulli path keys one stream per fixed-size block.  Chunk
    accumulators are merged in chunk order, so the result does not depend
    on the number of threads.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .finite_n import EnsembleKind
from .planar_fcs import RadialPotential, builtin_potential, moment_table, moment_tables
from .stats import MomentAccumulator

__all__ = [
    "EigenSample",
    "CountVector",
    "SimConfig",
    "PairingError",
    "SampleError",
    "CampaignError",
    "sample_matrix",
    "classify_real",
    "count_in_discs",
    "sample_counts_bernoulli",
    "BernoulliCounter",
    "sample_stream",
    "run_campaign",
    "run_campaign_detailed",
]

log = logging.getLogger(__name__)

_PAIR_TOL = 1e-6
_REAL_TOL = 1e-8
_GINSE_REAL_TOL = 1e-12
_BLOCK_DOMAIN = 1 << 63


class PairingError(ArithmeticError):
    """Complex eigenvalues of a real or quaternion matrix do not pair up."""


class SampleError(RuntimeError):
    """A single sample could not be produced (after one retry)."""


class CampaignError(RuntimeError):
    """Too many samples of a campaign failed."""


@dataclass
class EigenSample:
    """Spectrum of one matrix.

    ``uppers`` holds the eigenvalues with positive imaginary part for GinOE
    and GinSE.  For GinUE there is no conjugate symmetry and ``uppers``
    holds all N eigenvalues.
    """

    reals: np.ndarray
    uppers: np.ndarray
    N: int
    kind: EnsembleKind


@dataclass
class CountVector:
    """Counts of eigenvalues within each radius of a sorted grid."""

    radii: np.ndarray
    n_total: np.ndarray
    n_real: np.ndarray
    n_complex: np.ndarray

    def as_block(self) -> np.ndarray:
        return np.stack([self.n_total, self.n_real, self.n_complex], axis=-1)


@dataclass
class SimConfig:
    """Monte Carlo campaign settings.

    ``scale`` is ``"finite_N"`` (radii are a) or ``"origin"`` (radii are
    R = sqrt(N) a).  ``fast_bernoulli`` selects the Bernoulli path, which
    needs beta in {2, 4}; ``potential`` defaults to the Gaussian weight of
    the ensemble.
    """

    kind: EnsembleKind
    N: int
    radii: tuple
    samples: int
    seed: int = 0
    scale: str = "finite_N"
    fast_bernoulli: bool = False
    potential: RadialPotential | None = field(default=None, repr=False)
    chunk_size: int = 256
    block_size: int = 1 << 16

    def __post_init__(self):
        self.kind = EnsembleKind.parse(self.kind)
        self.radii = tuple(float(r) for r in self.radii)
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.radii or any(r < 0 for r in self.radii) or list(self.radii) != sorted(self.radii):
            raise ValueError("radii must be non-empty, non-negative and sorted")
        if self.scale not in ("finite_N", "origin"):
            raise ValueError("scale must be 'finite_N' or 'origin'")
        if self.fast_bernoulli and self.kind is EnsembleKind.GINOE:
            raise ValueError("the Bernoulli path is not available for GinOE")
        if self.potential is not None and not self.fast_bernoulli:
            raise ValueError("a custom potential needs the Bernoulli path")

    def signature(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k != "potential"}
        d["kind"] = self.kind.name
        d["potential"] = self.potential.label if self.potential is not None else None
        return json.dumps(d, sort_keys=True)


# ---------------------------------------------------------------------------
# Matrix path
# ---------------------------------------------------------------------------

def _pair_conjugates(uppers, lowers, tol=_PAIR_TOL):
    if uppers.size != lowers.size:
        raise PairingError(f"{uppers.size} upper vs {lowers.size} lower eigenvalues")
    if uppers.size == 0:
        return
    u = np.sort_complex(uppers)
    v = np.sort_complex(np.conj(lowers))
    scale = np.maximum(1.0, np.abs(u))
    if np.all(np.abs(u - v) <= tol * scale):
        return
    # sorting can interleave near-equal real parts; fall back to nearest matching
    left = list(v)
    for z in u:
        d = np.abs(np.asarray(left) - z)
        k = int(np.argmin(d))
        if d[k] > tol * max(1.0, abs(z)):
            raise PairingError(f"no conjugate partner for {z}")
        left.pop(k)


def classify_real(eigs, kind=EnsembleKind.GINOE, exact: bool = True):
    """Split eigenvalues of a real matrix into reals and upper representatives.

    Parameters
    ----------
    eigs : array of complex
        All eigenvalues.
    kind : EnsembleKind
        Must be GinOE.
    exact : bool
        True when ``eigs`` come from a real Schur decomposition (LAPACK
        ``geev`` on a real matrix, as used by :func:`numpy.linalg.eigvals`),
        where real eigenvalues carry an imaginary part of exactly zero.
        False selects the threshold rule |Im z| < 1e-8 max(1, |z|).

    Returns
    -------
    reals : ndarray of float, sorted
    uppers : ndarray of complex, sorted
    """
    if EnsembleKind.parse(kind) is not EnsembleKind.GINOE:
        raise ValueError("classify_real applies to GinOE spectra")
    eigs = np.asarray(eigs, dtype=complex)
    if exact:
        is_real = eigs.imag == 0.0
    else:
        is_real = np.abs(eigs.imag) < _REAL_TOL * np.maximum(1.0, np.abs(eigs))
    reals = np.sort(eigs[is_real].real)
    rest = eigs[~is_real]
    uppers = rest[rest.imag > 0]
    _pair_conjugates(uppers, rest[rest.imag < 0])
    return reals, np.sort_complex(uppers)


def _draw_ginoe(N, rng):
    g = rng.standard_normal((N, N)) / math.sqrt(N)
    reals, uppers = classify_real(np.linalg.eigvals(g))
    if reals.size % 2 != N % 2:
        raise PairingError("number of real eigenvalues has the wrong parity")
    return EigenSample(reals, uppers, N, EnsembleKind.GINOE)


def _draw_ginue(N, rng):
    s = 1.0 / math.sqrt(2 * N)
    g = rng.standard_normal((N, N)) * s + 1j * (rng.standard_normal((N, N)) * s)
    return EigenSample(np.empty(0), np.linalg.eigvals(g), N, EnsembleKind.GINUE)


class _NearReal(ArithmeticError):
    pass


def _draw_ginse(N, rng):
    s = 1.0 / math.sqrt(4 * N)
    a = rng.standard_normal((N, N)) * s + 1j * (rng.standard_normal((N, N)) * s)
    b = rng.standard_normal((N, N)) * s + 1j * (rng.standard_normal((N, N)) * s)
    q = np.block([[a, b], [-np.conj(b), np.conj(a)]])
    eigs = np.linalg.eigvals(q)
    if np.any(np.abs(eigs.imag) < _GINSE_REAL_TOL):
        raise _NearReal("GinSE eigenvalue on the real axis")
    uppers = eigs[eigs.imag > 0]
    _pair_conjugates(uppers, eigs[eigs.imag < 0])
    return EigenSample(np.empty(0), np.sort_complex(uppers), N, EnsembleKind.GINSE)


_DRAW = {EnsembleKind.GINOE: _draw_ginoe, EnsembleKind.GINUE: _draw_ginue, EnsembleKind.GINSE: _draw_ginse}


def sample_matrix(kind, N: int, rng: np.random.Generator) -> EigenSample:
    """Draw one matrix of the ensemble and return its classified spectrum.

    Entries: GinOE real with standard deviation 1/sqrt(N); GinUE complex
    with real and imaginary parts of variance 1/(2N) each; GinSE quaternion
    blocks [[alpha, beta], [-conj(beta), conj(alpha)]] with every real
    component of variance 1/(4N).  A failed eigensolve or pairing check is
    retried once with a fresh draw; the second failure raises
    :class:`SampleError`.
    """
    kind = EnsembleKind.parse(kind)
    if N < 1:
        raise ValueError("N must be at least 1")
    draw = _DRAW[kind]
    err = None
    for attempt in range(2):
        try:
            return draw(N, rng)
        except _NearReal as exc:
            log.info("GinSE draw rejected and redrawn: %s", exc)
            err = exc
        except (np.linalg.LinAlgError, PairingError) as exc:
            log.warning("sample attempt %d failed: %s", attempt + 1, exc)
            err = exc
    raise SampleError(str(err)) from err


def count_in_discs(sample: EigenSample, radii, scale: str = "finite_N") -> CountVector:
    """Counts within each radius of a sorted grid.

    ``scale="finite_N"`` counts |z| <= a; ``scale="origin"`` counts
    sqrt(N)|z| <= R.  GinOE real eigenvalues are counted on the open
    interval (-a, a) and each upper GinOE eigenvalue contributes its
    conjugate as well.  GinSE counts one representative per pair.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) < 0):
        raise ValueError("radii must be sorted")
    if scale == "origin":
        f = math.sqrt(sample.N)
    elif scale == "finite_N":
        f = 1.0
    else:
        raise ValueError("scale must be 'finite_N' or 'origin'")
    ar = np.sort(np.abs(np.asarray(sample.reals, dtype=float)) * f)
    ac = np.sort(np.abs(np.asarray(sample.uppers, dtype=complex)) * f)
    n_real = np.searchsorted(ar, radii, side="left")
    n_c = np.searchsorted(ac, radii, side="right")
    if sample.kind is EnsembleKind.GINOE:
        n_c = 2 * n_c
    return CountVector(radii, n_real + n_c, n_real, n_c)


# ---------------------------------------------------------------------------
# Bernoulli path
# ---------------------------------------------------------------------------

def _default_potential(beta):
    return builtin_potential("ginue_gaussian" if beta == 2 else "ginse_gaussian")


def sample_counts_bernoulli(pot: RadialPotential, N: int, beta: int, a: float, rng) -> int:
    """One draw of the disc count as a sum of independent Bernoulli(L_j(a))."""
    if beta not in (2, 4):
        raise ValueError("beta must be 2 or 4")
    L = moment_table(pot, N, beta, a).L
    return int(np.count_nonzero(rng.random(L.size) < L))


class BernoulliCounter:
    """Joint Bernoulli counts on a radius grid.

    Precomputes the (radius, index) table of L_j; :meth:`counts` maps an
    array of uniforms of shape (S, n_index) to counts of shape (S, R).
    """

    def __init__(self, pot: RadialPotential, N: int, beta: int, radii):
        if beta not in (2, 4):
            raise ValueError("beta must be 2 or 4")
        self.radii = np.asarray(radii, dtype=float)
        tabs = moment_tables(pot, N, beta, self.radii)
        L = np.array([t.L for t in tabs]).reshape(self.radii.size, -1)
        # guard against rounding breaking monotonicity in the radius
        self.L = np.maximum.accumulate(np.clip(L, 0.0, 1.0), axis=0)
        self.n_index = self.L.shape[1]

    def counts(self, u):
        u = np.asarray(u, dtype=float)
        S = u.shape[0]
        nr = self.radii.size
        # first grid position where L_j(radius) > U_j; the indicator is on from there
        first = np.empty(u.shape, dtype=np.int64)
        for j in range(self.n_index):
            first[:, j] = np.searchsorted(self.L[:, j], u[:, j], side="right")
        flat = (first + (nr + 1) * np.arange(S)[:, None]).ravel()
        hist = np.bincount(flat, minlength=S * (nr + 1)).reshape(S, nr + 1)
        return np.cumsum(hist, axis=1)[:, :nr]


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------

def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, index)``."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _finite_radii(cfg):
    r = np.asarray(cfg.radii, dtype=float)
    return r / math.sqrt(cfg.N) if cfg.scale == "origin" else r


def _matrix_chunk(cfg, start, stop):
    rows = []
    failures = 0
    for s in range(start, stop):
        try:
            smp = sample_matrix(cfg.kind, cfg.N, sample_stream(cfg.seed, s))
        except SampleError as exc:
            log.warning("sample %d failed: %s", s, exc)
            failures += 1
            continue
        rows.append(count_in_discs(smp, cfg.radii, cfg.scale).as_block())
    acc = MomentAccumulator(cfg.radii)
    if rows:
        acc.add_block(np.array(rows))
    return acc, failures


def _bernoulli_chunk(cfg, counter, start, stop):
    block = cfg.block_size
    acc = MomentAccumulator(cfg.radii)
    for b in range(start // block, -(-stop // block)):
        lo, hi = max(start, b * block), min(stop, (b + 1) * block)
        u = sample_stream(cfg.seed, _BLOCK_DOMAIN | b).random((block, counter.n_index))
        c = counter.counts(u[lo - b * block: hi - b * block])
        x = np.zeros(c.shape + (3,))
        x[..., 0] = c
        x[..., 2] = c
        acc.add_block(x)
    return acc, 0


_CKPT_MAGIC = b"GFCSCKPT"


def _save_checkpoint(path, cfg, next_chunk, failures, acc):
    sig = cfg.signature().encode()
    head = _CKPT_MAGIC + np.array([next_chunk, failures, len(sig)], dtype="<u8").tobytes()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(head + sig + acc.to_bytes())
    os.replace(tmp, path)


def _load_checkpoint(path, cfg):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _CKPT_MAGIC:
        raise ValueError(f"{path} is not a campaign checkpoint")
    next_chunk, failures, nsig = (int(v) for v in np.frombuffer(blob, dtype="<u8", count=3, offset=8))
    sig = blob[32:32 + nsig].decode()
    if sig != cfg.signature():
        raise ValueError(f"checkpoint {path} belongs to a different configuration")
    return next_chunk, failures, MomentAccumulator.from_bytes(blob[32 + nsig:])


def run_campaign_detailed(cfg: SimConfig, threads: int = 1, checkpoint: str | None = None):
    """Run a campaign and return ``(accumulator, failed_samples)``.

    Samples are split into chunks of ``cfg.chunk_size`` (matrix path) or
    ``cfg.block_size`` (Bernoulli path).  Up to ``threads`` chunks run
    concurrently; their accumulators are merged in chunk order.  With
    ``checkpoint`` the state is saved after every round of chunks and an
    existing checkpoint for the same configuration is resumed.

    Raises
    ------
    CampaignError
        If more than 0.1% of the samples fail.
    """
    threads = max(1, int(threads))
    if cfg.fast_bernoulli:
        pot = cfg.potential or _default_potential(cfg.kind.beta)
        counter = BernoulliCounter(pot, cfg.N, cfg.kind.beta, _finite_radii(cfg))
        size = cfg.block_size

        def work(c):
            return _bernoulli_chunk(cfg, counter, c * size, min(cfg.samples, (c + 1) * size))
    else:
        size = cfg.chunk_size

        def work(c):
            return _matrix_chunk(cfg, c * size, min(cfg.samples, (c + 1) * size))

    n_chunks = -(-cfg.samples // size)
    acc = MomentAccumulator(cfg.radii)
    failures = 0
    start = 0
    if checkpoint and os.path.exists(checkpoint):
        start, failures, acc = _load_checkpoint(checkpoint, cfg)
        log.info("resuming campaign at chunk %d of %d", start, n_chunks)
    limit = cfg.samples / 1000.0
    with ThreadPoolExecutor(max_workers=threads) as pool:
        c = start
        while c < n_chunks:
            batch = list(range(c, min(n_chunks, c + threads)))
            results = pool.map(work, batch) if threads > 1 else map(work, batch)
            for part, nfail in results:
                acc = acc.merge(part)
                failures += nfail
            c = batch[-1] + 1
            if failures > limit:
                raise CampaignError(f"{failures} of {cfg.samples} samples failed")
            if checkpoint:
                _save_checkpoint(checkpoint, cfg, c, failures, acc)
    return acc, failures


def run_campaign(cfg: SimConfig, threads: int = 1, checkpoint: str | None = None) -> MomentAccumulator:
    """Run a campaign; see :func:`run_campaign_detailed`."""
    return run_campaign_detailed(cfg, threads, checkpoint)[0]
