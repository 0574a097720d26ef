"""Mergeable streaming moments of eigenvalue counts.

A :class:`MomentAccumulator` tracks, for every radius of a fixed grid and
for the three channels (total, real, complex), the sample size, the mean
and the central moment sums of orders 2 to 4, plus the real/complex cross
sum.  Blocks are merged with the pairwise update formulas of Chan et al.
and Pébay, so merging two accumulators gives the statistics of the
concatenated stream.

Standard errors come from batch means.  The accumulator keeps a list of
consecutive batch summaries; when the list grows beyond ``max_batches``
adjacent batches are merged pairwise.  At report time batches are grouped
to a size close to ceil(sqrt(n)).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CHANNELS",
    "GridMismatch",
    "InsufficientSamples",
    "MomentAccumulator",
    "accumulate",
    "merge",
    "report",
    "kstats",
]

CHANNELS = ("total", "real", "complex")
_MAGIC = b"GFCSACC\x00"
_VERSION = 1


class GridMismatch(ValueError):
    """Radius grids of two accumulators (or of counts) differ."""


class InsufficientSamples(ValueError):
    """Too few samples for batch-means standard errors."""


@dataclass
class _Moments:
    """Central moment sums with a leading batch axis.

    Shapes: n (B,), mean/m2/m3/m4 (B, R, 3), c (B, R).
    """

    n: np.ndarray
    mean: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    c: np.ndarray

    @classmethod
    def empty(cls, nr, nb=0):
        z = np.zeros((nb, nr, 3))
        return cls(np.zeros(nb), z, z.copy(), z.copy(), z.copy(), np.zeros((nb, nr)))

    @classmethod
    def from_blocks(cls, x):
        """Two-pass moments of x with shape (B, S, R, 3)."""
        x = np.asarray(x, dtype=float)
        n = np.full(x.shape[0], float(x.shape[1]))
        mean = x.mean(axis=1)
        d = x - mean[:, None]
        d2 = d * d
        return cls(n, mean, d2.sum(axis=1), (d2 * d).sum(axis=1), (d2 * d2).sum(axis=1),
                   (d[..., 1] * d[..., 2]).sum(axis=1))

    def __len__(self):
        return self.n.shape[0]

    def take(self, sl):
        return _Moments(self.n[sl], self.mean[sl], self.m2[sl], self.m3[sl], self.m4[sl], self.c[sl])

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("nothing to concatenate")
        return _Moments(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                          ("n", "mean", "m2", "m3", "m4", "c")))

    def equal(self, other):
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("n", "mean", "m2", "m3", "m4", "c"))


def _combine(a: _Moments, b: _Moments) -> _Moments:
    """Elementwise pairwise combination of two stacks of equal length."""
    na = a.n[:, None, None]
    nb = b.n[:, None, None]
    n = na + nb
    safe = np.where(n > 0, n, 1.0)
    d = b.mean - a.mean
    d = np.where((na > 0) & (nb > 0), d, 0.0)
    mean = np.where(na > 0, a.mean + d * nb / safe, b.mean)
    d2 = d * d
    m2 = a.m2 + b.m2 + d2 * na * nb / safe
    m3 = (a.m3 + b.m3 + d2 * d * na * nb * (na - nb) / safe**2
          + 3.0 * d * (na * b.m2 - nb * a.m2) / safe)
    m4 = (a.m4 + b.m4 + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / safe**3
          + 6.0 * d2 * (na * na * b.m2 + nb * nb * a.m2) / safe**2
          + 4.0 * d * (na * b.m3 - nb * a.m3) / safe)
    c = a.c + b.c + d[..., 1] * d[..., 2] * (na * nb / safe)[..., 0]
    return _Moments(n[:, 0, 0], mean, m2, m3, m4, c)


def _pairwise(m: _Moments) -> _Moments:
    """Merge batches (0,1), (2,3), ...; an odd last batch is kept as is."""
    k = len(m) // 2
    merged = _combine(m.take(slice(0, 2 * k, 2)), m.take(slice(1, 2 * k, 2)))
    if len(m) % 2:
        merged = _Moments.concat([merged, m.take(slice(2 * k, None))])
    return merged


def kstats(n, m2, m3, m4):
    """k-statistics k2, k3, k4 from central moment sums (arrays broadcast)."""
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = m2 / (n - 1)
        k3 = n * m3 / ((n - 1) * (n - 2))
        s2 = m2 / n
        s4 = m4 / n
        k4 = n * n * ((n + 1) * s4 - 3 * (n - 1) * s2 * s2) / ((n - 1) * (n - 2) * (n - 3))
    return k2, k3, k4


class MomentAccumulator:
    """Streaming joint moments of (total, real, complex) counts on a radius grid.

    Parameters
    ----------
    radii : sequence of float
        The radius grid; counts must be supplied on exactly this grid.
    max_batches : int
        Upper bound on stored batch summaries before pairwise compaction.
    """

    def __init__(self, radii, max_batches: int = 8192):
        self.radii = np.asarray(radii, dtype=float).copy()
        self.max_batches = int(max_batches)
        nr = self.radii.size
        self._total = _Moments.empty(nr, 1)
        self._batches = _Moments.empty(nr, 0)
        self.batch_size = 1

    @property
    def n(self) -> int:
        return int(self._total.n[0])

    def _check_grid(self, radii):
        radii = np.asarray(radii, dtype=float)
        if radii.shape != self.radii.shape or not np.array_equal(radii, self.radii):
            raise GridMismatch("radius grids differ")

    def _compact(self):
        while len(self._batches) > self.max_batches:
            self._batches = _pairwise(self._batches)
            self.batch_size *= 2

    def add_block(self, x):
        """Add a block of samples, ``x`` of shape (S, R, 3) in channel order."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 3 or x.shape[1:] != (self.radii.size, 3):
            raise GridMismatch(f"block shape {x.shape} does not match grid of {self.radii.size}")
        S = x.shape[0]
        if S == 0:
            return self
        whole = _Moments.from_blocks(x[None])
        self._total = _combine(self._total, whole)
        while len(self._batches) + -(-S // self.batch_size) > self.max_batches:
            if len(self._batches) > 1:
                self._batches = _pairwise(self._batches)
            self.batch_size *= 2
        b = self.batch_size
        k = S // b
        parts = [self._batches]
        if k:
            parts.append(_Moments.from_blocks(x[: k * b].reshape((k, b) + x.shape[1:])))
        if S - k * b:
            parts.append(_Moments.from_blocks(x[k * b:][None]))
        self._batches = _Moments.concat(parts) if any(len(p) for p in parts) else self._batches
        self._compact()
        return self

    def accumulate(self, counts):
        """Add one :class:`~ginibre_fcs.sampler.CountVector`."""
        self._check_grid(counts.radii)
        x = np.stack([counts.n_total, counts.n_real, counts.n_complex], axis=-1)[None]
        return self.add_block(x)

    def copy(self):
        out = MomentAccumulator(self.radii, self.max_batches)
        out._total = self._total.take(slice(None))
        out._batches = self._batches.take(slice(None))
        out.batch_size = self.batch_size
        return out

    def _key(self):
        return (self.n, self._total.mean.tobytes(), self._total.m2.tobytes(),
                self._batches.n.tobytes(), self._batches.mean.tobytes())

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Return the accumulator of the concatenated streams.

        The operands are put in a canonical order first, which makes the
        operation commutative bit for bit.
        """
        if not isinstance(other, MomentAccumulator):
            raise TypeError("can only merge MomentAccumulator objects")
        self._check_grid(other.radii)
        if other.n == 0:
            return self.copy()
        if self.n == 0:
            return other.copy()
        a, b = (self, other) if self._key() <= other._key() else (other, self)
        out = MomentAccumulator(self.radii, min(a.max_batches, b.max_batches))
        out._total = _combine(a._total, b._total)
        out._batches = _Moments.concat([a._batches, b._batches])
        out.batch_size = max(a.batch_size, b.batch_size)
        out._compact()
        return out

    def __eq__(self, other):
        return (isinstance(other, MomentAccumulator) and np.array_equal(self.radii, other.radii)
                and self._total.equal(other._total) and self._batches.equal(other._batches))

    # -- reporting -----------------------------------------------------------

    def _grouped_batches(self):
        n = self.n
        target = math.ceil(math.sqrt(n))
        groups = self._batches
        size = self.batch_size
        while 2 * size <= target and len(groups) > 2:
            groups = _pairwise(groups)
            size *= 2
        return groups

    def report(self, channel: str = "total") -> list[dict]:
        """Per-radius statistics for one channel.

        Keys: ``radius, n, mean, var, cov_rc, k3, k4`` and standard errors
        ``se_mean, se_var, se_k3, se_k4, se_cov``.  Cumulants are
        k-statistics; standard errors come from batch means with batches of
        about ceil(sqrt(n)) samples.
        """
        if channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")
        n = self.n
        if n < 16:
            raise InsufficientSamples(f"need at least 16 samples, have {n}")
        ch = CHANNELS.index(channel)
        t = self._total
        k2, k3, k4 = kstats(n, t.m2[0, :, ch], t.m3[0, :, ch], t.m4[0, :, ch])
        cov = t.c[0] / (n - 1)
        mean = t.mean[0, :, ch]
        g = self._grouped_batches()
        gn = g.n[:, None]
        bk2, bk3, bk4 = kstats(gn, g.m2[:, :, ch], g.m3[:, :, ch], g.m4[:, :, ch])
        bcov = g.c / (gn - 1)
        ng = len(g)

        def se(batch_vals, overall):
            # Var(theta_i) ~ sigma^2 / n_i; pooled sigma^2 from the spread of batch values
            if ng < 2:
                return np.full(overall.shape, np.nan)
            dev = np.where(np.isfinite(batch_vals), batch_vals - overall, 0.0)
            s2 = np.sum(gn * dev * dev, axis=0) / (ng - 1)
            return np.sqrt(s2 / n)

        out = []
        cols = {
            "mean": mean, "var": k2, "cov_rc": cov, "k3": k3, "k4": k4,
            "se_mean": se(g.mean[:, :, ch], mean), "se_var": se(bk2, k2),
            "se_k3": se(bk3, k3), "se_k4": se(bk4, k4), "se_cov": se(bcov, cov),
        }
        for i, r in enumerate(self.radii):
            rec = {"radius": float(r), "n": n}
            rec.update({k: float(v[i]) for k, v in cols.items()})
            out.append(rec)
        return out

    # -- serialization ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Versioned little-endian binary blob of the full state."""
        nr = self.radii.size
        nb = len(self._batches)
        head = _MAGIC + struct.pack("<IIQII", _VERSION, nr, self.batch_size, self.max_batches, nb)
        parts = [head, self.radii.astype("<f8").tobytes()]
        for m in (self._total, self._batches):
            for f in ("n", "mean", "m2", "m3", "m4", "c"):
                parts.append(np.ascontiguousarray(getattr(m, f), dtype="<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "MomentAccumulator":
        if blob[:8] != _MAGIC:
            raise ValueError("not an accumulator blob")
        version, nr, bsize, maxb, nb = struct.unpack_from("<IIQII", blob, 8)
        if version != _VERSION:
            raise ValueError(f"unsupported accumulator version {version}")
        off = 8 + struct.calcsize("<IIQII")

        def read(count, shape):
            nonlocal off
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).astype(float).reshape(shape)
            off += 8 * count
            return arr

        radii = read(nr, (nr,))
        acc = cls(radii, maxb)
        acc.batch_size = bsize
        mods = []
        for b in (1, nb):
            fields = [read(b, (b,))]
            fields += [read(b * nr * 3, (b, nr, 3)) for _ in range(4)]
            fields.append(read(b * nr, (b, nr)))
            mods.append(_Moments(*fields))
        acc._total, acc._batches = mods
        if off != len(blob):
            raise ValueError("trailing bytes in accumulator blob")
        return acc


def accumulate(acc: MomentAccumulator, counts) -> MomentAccumulator:
    """Add one count vector to ``acc`` (in place) and return it."""
    return acc.accumulate(counts)


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Accumulator of the concatenation of both streams."""
    return a.merge(b)


def report(acc: MomentAccumulator, channel: str = "total") -> list[dict]:
    """Per-radius statistics; see :meth:`MomentAccumulator.report`."""
    return acc.report(channel)
