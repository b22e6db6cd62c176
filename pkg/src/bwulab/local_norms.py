"""Local norms ||f||_{E(Q_r)} for the Lebesgue, Morrey, Campanato and Lipschitz families."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import GridFunction, RadiusGrid, cells_for

KINDS = ("Lp", "WeakLp", "Morrey", "WeakMorrey", "Campanato", "BMO", "Lipschitz")
OSCILLATION_KINDS = ("Campanato", "BMO", "Lipschitz")
LATTICE_KINDS = ("Lp", "WeakLp", "Morrey", "WeakMorrey")
LIPSCHITZ_MAX_SAMPLES = 4096

_ALIASES = {k.lower(): k for k in KINDS}


@dataclass(frozen=True)
class SpaceSpec:
    kind: str
    p: float = 1.0
    lam: float = 0.0
    alpha: float = 1.0
    modulo_constants: bool = False
    center_stride: int = 1

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown space kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "BMO":
            object.__setattr__(self, "p", 1.0)
            object.__setattr__(self, "lam", 0.0)
        if kind in OSCILLATION_KINDS:
            object.__setattr__(self, "modulo_constants", True)
        elif self.modulo_constants:
            raise ValueError(f"{kind} is not taken modulo constants")
        if not self.p >= 1 or math.isinf(self.p):
            raise ValueError("p must lie in [1, inf)")
        if kind == "Lipschitz" and not 0 < self.alpha <= 1:
            raise ValueError("Lipschitz needs alpha in (0, 1]")
        if self.center_stride < 1:
            raise ValueError("center_stride must be >= 1")

    def validate(self, dim: int) -> None:
        lo = -dim / self.p
        tol = 1e-12
        if self.kind in ("Morrey", "WeakMorrey") and not (lo - tol <= self.lam < 0):
            raise ValueError(f"{self.kind} needs lambda in [-n/p, 0), got {self.lam}")
        if self.kind == "Campanato" and not (lo - tol <= self.lam <= 1 + tol):
            raise ValueError(f"Campanato needs lambda in [-n/p, 1], got {self.lam}")

    @property
    def label(self) -> str:
        if self.kind in ("Lp", "WeakLp"):
            return f"{self.kind}(p={self.p:g})"
        if self.kind == "BMO":
            return "BMO"
        if self.kind == "Lipschitz":
            return f"Lipschitz(alpha={self.alpha:g})"
        return f"{self.kind}(p={self.p:g},lam={self.lam:g})"


class CubeSums:
    """Summed-area table (long double) giving every axis-aligned block sum in O(1)."""

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=np.longdouble)
        self.dim = v.ndim
        t = np.zeros(tuple(s + 1 for s in v.shape), dtype=np.longdouble)
        if v.ndim == 1:
            t[1:] = np.cumsum(v)
        else:
            t[1:, 1:] = np.cumsum(np.cumsum(v, axis=0), axis=1)
        self.table = t
        self.n = v.shape[0]

    def total(self) -> np.longdouble:
        return self.table[(-1,) * self.dim]

    def block_sums(self, m: int) -> np.ndarray:
        """Sums over every block of side m; entry i (or (i, j)) starts at that cell."""
        t = self.table
        if self.dim == 1:
            return t[m:] - t[:-m]
        return t[m:, m:] - t[:-m, m:] - t[m:, :-m] + t[:-m, :-m]

    def block(self, lo: tuple, m: int) -> np.longdouble:
        t = self.table
        if self.dim == 1:
            return t[lo[0] + m] - t[lo[0]]
        i, j = lo
        return t[i + m, j + m] - t[i, j + m] - t[i + m, j] + t[i, j]


def cube_sums(f: GridFunction, power: float = 1.0, shift: float = 0.0,
              absolute: bool = True) -> CubeSums:
    key = ("cubesums", power, shift, absolute)
    if key not in f._cache:
        g = f.samples - shift
        if absolute:
            g = np.abs(g)
        f._cache[key] = CubeSums(g.astype(np.longdouble) ** power)
    return f._cache[key]


# --- helpers ------------------------------------------------------------------

def half_cells(f: GridFunction, r: float) -> int:
    if r > f.R_max * (1 + 1e-9):
        raise ValueError(f"radius {r} exceeds R_max={f.R_max}")
    k = cells_for(r, f.h)
    if k < 1:
        raise ValueError("empty cube")
    return k


def _sides(k: int) -> list[int]:
    """Dyadic sub-cube sides up to 2k."""
    out, m = [], 1
    while m <= 2 * k:
        out.append(m)
        m *= 2
    return out


def _ring_index(n: int, dim: int) -> np.ndarray:
    c = n // 2
    i = np.arange(n)
    d = np.where(i >= c, i - c, c - 1 - i)
    if dim == 1:
        return d
    return np.maximum(d[:, None], d[None, :])


def _lp_profile(f: GridFunction, ks: np.ndarray, p: float) -> np.ndarray:
    key = ("lp_shells", p)
    if key not in f._cache:
        ring = _ring_index(f.n, f.dim).ravel()
        a = np.abs(f.samples.ravel()).astype(np.longdouble) ** p
        sums = np.zeros(f.n // 2, dtype=np.longdouble)
        np.add.at(sums, ring, a)
        f._cache[key] = np.cumsum(sums)
    cum = f._cache[key]
    vals = cum[ks - 1] * np.longdouble(f.h) ** f.dim
    return np.asarray(vals ** (1.0 / np.longdouble(p)), dtype=float)


def _weak_value(sorted_desc: np.ndarray, vol: float, p: float) -> float:
    k = np.arange(1, sorted_desc.shape[-1] + 1)
    return np.max(sorted_desc * (k * vol) ** (1.0 / p), axis=-1)


def _weak_profile(f: GridFunction, ks: np.ndarray, p: float) -> np.ndarray:
    ring = _ring_index(f.n, f.dim).ravel()
    a = np.abs(f.samples.ravel())
    out = np.empty(ks.size)
    vol = f.cell_volume
    for i, k in enumerate(ks):
        vals = np.sort(a[ring < k])[::-1]
        out[i] = _weak_value(vals, vol, p)
    return out


def _positions(f: GridFunction, k: int, m: int, stride: int) -> np.ndarray:
    c = f.n // 2
    pos = np.arange(c - k, c + k - m + 1)
    if f.dim == 2 and stride > 1:
        pos = pos[pos % stride == 0]
    return pos


def _windows(a: np.ndarray, m: int, stride: int) -> np.ndarray:
    if a.ndim == 1:
        return sliding_window_view(a, m)
    w = sliding_window_view(a, (m, m))[::stride, ::stride]
    return w.reshape(w.shape[0], w.shape[1], m * m)


def _side_table(f: GridFunction, E: SpaceSpec, m: int) -> np.ndarray:
    """Value of the sub-cube functional (without s^-lambda) for every block of side m.

    In dim 2 with stride > 1 the array is indexed by position // stride."""
    key = ("side", E.kind, E.p, E.center_stride, m)
    if key in f._cache:
        return f._cache[key]
    stride = E.center_stride if f.dim == 2 else 1
    cnt = m ** f.dim
    if E.kind == "Morrey":
        s = cube_sums(f, E.p).block_sums(m)
        if f.dim == 2 and stride > 1:
            s = s[::stride, ::stride]
        # prefix-sum differences of non-negative data can dip below 0 by rounding
        out = np.asarray((np.maximum(s, 0) / cnt) ** (1.0 / np.longdouble(E.p)), dtype=float)
    elif E.kind == "WeakMorrey":
        w = _windows(np.abs(f.samples), m, stride)
        out = _weak_value(-np.sort(-w, axis=-1), 1.0 / cnt, E.p)
    else:
        out = _campanato_side(f, E.p, m, stride)
    f._cache[key] = out
    return out


def _campanato_shift(f: GridFunction) -> float:
    c = f.n // 2
    return float(f.samples[(c,) * f.dim])


def _campanato_side(f: GridFunction, p: float, m: int, stride: int) -> np.ndarray:
    shift = _campanato_shift(f)
    cnt = m ** f.dim
    if p == 2:
        s1 = cube_sums(f, 1.0, shift, absolute=False).block_sums(m)
        s2 = cube_sums(f, 2.0, shift, absolute=False).block_sums(m)
        if f.dim == 2 and stride > 1:
            s1, s2 = s1[::stride, ::stride], s2[::stride, ::stride]
        var = np.maximum(s2 - s1 * s1 / cnt, 0) / cnt
        return np.asarray(np.sqrt(var), dtype=float)
    g = f.samples - shift
    w = _windows(g, m, stride)
    if w.ndim == 2:
        mean = w.mean(axis=-1, keepdims=True)
        return np.mean(np.abs(w - mean) ** p, axis=-1) ** (1.0 / p)
    out = np.empty(w.shape[:2])
    for i in range(w.shape[0]):
        wi = w[i]
        mean = wi.mean(axis=-1, keepdims=True)
        out[i] = np.mean(np.abs(wi - mean) ** p, axis=-1) ** (1.0 / p)
    return out


def _centered_values(f: GridFunction, E: SpaceSpec) -> np.ndarray:
    """s^-lambda times the functional on each centred cube Q_{kh}, k = 1..n/2."""
    key = ("centered", E.kind, E.p, E.lam)
    if key in f._cache:
        return f._cache[key]
    c = f.n // 2
    ks = np.arange(1, c + 1)
    cnt = (2 * ks).astype(np.longdouble) ** f.dim
    if E.kind == "Morrey":
        t = cube_sums(f, E.p).table
        s = _centered_block_sums(t, c, ks, f.dim)
        v = np.asarray((np.maximum(s, 0) / cnt) ** (1.0 / np.longdouble(E.p)), dtype=float)
    elif E.kind == "Campanato" and E.p == 2:
        shift = _campanato_shift(f)
        s1 = _centered_block_sums(cube_sums(f, 1.0, shift, absolute=False).table, c, ks, f.dim)
        s2 = _centered_block_sums(cube_sums(f, 2.0, shift, absolute=False).table, c, ks, f.dim)
        v = np.asarray(np.sqrt(np.maximum(s2 - s1 * s1 / cnt, 0) / cnt), dtype=float)
    else:
        v = np.empty(c)
        shift = _campanato_shift(f)
        for i, k in enumerate(ks):
            sl = (slice(c - k, c + k),) * f.dim
            if E.kind == "WeakMorrey":
                a = np.sort(np.abs(f.samples[sl]).ravel())[::-1]
                v[i] = _weak_value(a, 1.0 / float(cnt[i]), E.p)
            else:
                g = (f.samples[sl] - shift).ravel()
                v[i] = np.mean(np.abs(g - g.mean()) ** E.p) ** (1.0 / E.p)
    out = (ks * f.h) ** -E.lam * v
    f._cache[key] = out
    return out


def _centered_block_sums(t: np.ndarray, c: int, ks: np.ndarray, dim: int) -> np.ndarray:
    lo, hi = c - ks, c + ks
    if dim == 1:
        return t[hi] - t[lo]
    return t[hi, hi] - t[lo, hi] - t[hi, lo] + t[lo, lo]


def _subcube_profile(f: GridFunction, E: SpaceSpec, ks: np.ndarray) -> np.ndarray:
    """Sup over dyadic sub-cubes at every aligned position, and over all centred cubes."""
    stride = E.center_stride if f.dim == 2 else 1
    centred = np.maximum.accumulate(_centered_values(f, E))
    out = np.empty(ks.size)
    for i, k in enumerate(ks):
        best = float(centred[k - 1])
        for m in _sides(int(k)):
            pos = _positions(f, int(k), m, stride)
            if pos.size == 0:
                continue
            tab = _side_table(f, E, m)
            idx = pos // stride if stride > 1 else pos
            if f.dim == 1:
                v = float(np.max(tab[idx[0]:idx[-1] + 1]))
            else:
                v = float(np.max(tab[idx[0]:idx[-1] + 1, idx[0]:idx[-1] + 1]))
            best = max(best, (m * f.h / 2) ** -E.lam * v)
        out[i] = best
    return out


def lipschitz_stride(f: GridFunction) -> int:
    """Sub-sampling stride used by the Lipschitz sup (1 means all pairs)."""
    if f.dim == 1 or f.samples.size <= LIPSCHITZ_MAX_SAMPLES:
        return 1
    return int(math.ceil(math.sqrt(f.samples.size / LIPSCHITZ_MAX_SAMPLES)))


def _lipschitz_profile(f: GridFunction, ks: np.ndarray, alpha: float) -> np.ndarray:
    key = ("lip", alpha)
    if key not in f._cache:
        f._cache[key] = _lipschitz_by_ring(f, alpha)
    by_ring = f._cache[key]
    return by_ring[ks - 1]


def _lipschitz_by_ring(f: GridFunction, alpha: float) -> np.ndarray:
    """Running Lipschitz sup over all pairs inside ring k, for each k."""
    n, c = f.n, f.n // 2
    h = f.h
    if f.dim == 1:
        v = f.samples
        out = np.zeros(c)
        best = 0.0
        for k in range(c):
            lo, hi = c - 1 - k, c + k
            seg = v[lo:hi + 1]
            idx = np.arange(lo, hi + 1)
            for j in (lo, hi):
                d = np.abs(idx - j)
                mask = d > 0
                if np.any(mask):
                    r = np.abs(seg[mask] - v[j]) / (d[mask] * h) ** alpha
                    best = max(best, float(r.max()))
            out[k] = best
        return out
    st = lipschitz_stride(f)
    idx = np.arange(0, n, st)
    I, J = np.meshgrid(idx, idx, indexing="ij")
    I, J = I.ravel(), J.ravel()
    vals = f.samples[I, J]
    ring = _ring_index(n, 2)[I, J]
    per = np.zeros(c)
    for start in range(0, I.size, 256):
        sl = slice(start, start + 256)
        di = I[sl, None] - I[None, :]
        dj = J[sl, None] - J[None, :]
        dist = np.hypot(di, dj) * h
        ok = (dist > 0) & (ring[None, :] <= ring[sl, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            rat = np.where(ok, np.abs(vals[sl, None] - vals[None, :]) / np.where(ok, dist, 1.0) ** alpha, 0.0)
        row = rat.max(axis=1)
        np.maximum.at(per, ring[sl], row)
    return np.maximum.accumulate(per)


# --- public API ---------------------------------------------------------------

def local_norms(f: GridFunction, radii, E: SpaceSpec) -> np.ndarray:
    """||f||_{E(Q_r)} for each grid-aligned r."""
    E.validate(f.dim)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    ks = np.array([half_cells(f, float(r)) for r in radii], dtype=int)
    if E.kind == "Lp":
        return _lp_profile(f, ks, E.p)
    if E.kind == "WeakLp":
        return _weak_profile(f, ks, E.p)
    if E.kind == "Lipschitz":
        return _lipschitz_profile(f, ks, E.alpha)
    return _subcube_profile(f, E, ks)


def local_norm(f: GridFunction, r: float, E: SpaceSpec) -> float:
    return float(local_norms(f, [r], E)[0])


def restriction_constant(f: GridFunction, E: SpaceSpec, radii: RadiusGrid) -> float:
    """max over t < r of ||f||_{E(Q_t)} / ||f||_{E(Q_r)}; 0/0 counts as 1."""
    rr = np.unique(radii.aligned(f.h))
    rr = rr[rr <= f.R_max * (1 + 1e-12)]
    v = local_norms(f, rr, E)
    if v.size < 2:
        return 1.0
    best = 0.0
    for j in range(1, v.size):
        for i in range(j):
            if v[j] == 0:
                q = 1.0 if v[i] == 0 else math.inf
            else:
                q = v[i] / v[j]
            best = max(best, q)
    return best
