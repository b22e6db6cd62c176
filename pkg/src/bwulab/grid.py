"""Functions sampled at cell centres of a master cube [-R, R]^n, n in {1, 2}."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

ALIGN_TOL = 1e-9

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_M1 = 0xBF58476D1CE4E5B9
SPLITMIX_M2 = 0x94D049BB133111EB


def cells_for(length: float, h: float, what: str = "radius") -> int:
    """Return ``length / h`` as an int, or raise if it is not a whole number of cells."""
    q = length / h
    k = int(round(q))
    if abs(q - k) > ALIGN_TOL * max(1.0, abs(q)):
        raise ValueError(f"{what} {length!r} is not a multiple of h={h!r}")
    return k


def align_radius(r: float, h: float) -> float:
    """Round r to the nearest positive multiple of h."""
    return max(1, int(round(r / h))) * h


@dataclass(frozen=True)
class Recipe:
    """How a catalogue function was built, so it can be resampled on another grid."""

    name: str
    params: tuple
    seed: int = 0


@dataclass(frozen=True, eq=False)
class GridFunction:
    dim: int
    h: float
    R_max: float
    samples: np.ndarray
    label: str = ""
    recipe: Recipe | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not (self.h > 0 and self.R_max > 0):
            raise ValueError("h and R_max must be positive")
        n = cells_for(2 * self.R_max, self.h, "2*R_max")
        if n <= 0 or n % 2:
            raise ValueError(f"2*R_max/h = {n} must be a positive even integer")
        arr = np.array(self.samples, dtype=float)
        if arr.size != n ** self.dim:
            raise ValueError(f"expected {n ** self.dim} samples, got {arr.size}")
        arr = arr.reshape((n,) * self.dim)
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        """Cells per axis."""
        return self.samples.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def centers(self) -> np.ndarray:
        return grid_centers(self.n, self.h)

    def coords(self) -> tuple[np.ndarray, ...]:
        c = self.centers()
        if self.dim == 1:
            return (c,)
        return tuple(np.meshgrid(c, c, indexing="ij"))

    def with_samples(self, samples, label: str | None = None) -> GridFunction:
        return GridFunction(self.dim, self.h, self.R_max, samples,
                            self.label if label is None else label)

    @classmethod
    def from_callable(cls, fn: Callable, dim: int, h: float, R_max: float,
                      label: str = "callable") -> GridFunction:
        """Sample ``fn(*coords)`` at cell centres."""
        n = cells_for(2 * R_max, h, "2*R_max")
        c = grid_centers(n, h)
        xs = (c,) if dim == 1 else tuple(np.meshgrid(c, c, indexing="ij"))
        vals = np.broadcast_to(np.asarray(fn(*xs), dtype=float), (n,) * dim)
        return cls(dim, h, R_max, vals, label)

    def resample(self, h: float | None = None, R_max: float | None = None) -> GridFunction:
        """Rebuild from the recipe on another grid (used for refinement studies)."""
        if self.recipe is None:
            raise ValueError(f"{self.label!r} has no recipe; cannot resample")
        return make_grid_function(self.recipe.name, list(self.recipe.params), self.dim,
                                  self.h if h is None else h,
                                  self.R_max if R_max is None else R_max,
                                  self.recipe.seed, label=self.label)


def grid_centers(n: int, h: float) -> np.ndarray:
    # (2i+1-n) * h/2 keeps centres exact for dyadic h
    return (2 * np.arange(n) + 1 - n) * (h / 2)


# --- SplitMix64 -------------------------------------------------------------

def splitmix64_uniforms(seed: int, count: int) -> np.ndarray:
    """``count`` draws in (0,1) from SplitMix64 started at ``seed``.

    state_k = seed + k*GAMMA (mod 2^64), k = 1..count;
    z = (z ^ z>>30) * M1; z = (z ^ z>>27) * M2; z ^= z>>31;
    u = ((z >> 11) + 0.5) * 2^-53.
    """
    with np.errstate(over="ignore"):
        k = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed % 2 ** 64) + k * np.uint64(SPLITMIX_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(SPLITMIX_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(SPLITMIX_M2)
        z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def splitmix64_reference(seed: int, count: int) -> list[float]:
    """Scalar pure-Python version of :func:`splitmix64_uniforms`."""
    mask = 2 ** 64 - 1
    state = seed & mask
    out = []
    for _ in range(count):
        state = (state + SPLITMIX_GAMMA) & mask
        z = state
        z = ((z ^ (z >> 30)) * SPLITMIX_M1) & mask
        z = ((z ^ (z >> 27)) * SPLITMIX_M2) & mask
        z ^= z >> 31
        out.append(((z >> 11) + 0.5) * 2.0 ** -53)
    return out


# --- catalogue ----------------------------------------------------------------

def _sup(xs):
    return np.max(np.abs(np.stack(xs)), axis=0)


def _euclid(xs):
    return np.sqrt(sum(x * x for x in xs))


def _param(params, i, default):
    return float(params[i]) if len(params) > i else default


def _support(xs, a):
    return np.ones_like(xs[0]) if math.isinf(a) else (_sup(xs) < a).astype(float)


def _positive(name, v):
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")
    return v


def _constant(xs, params, seed):
    return np.full_like(xs[0], _param(params, 0, 1.0))


def _indicator(xs, params, seed):
    a = _positive("side", _param(params, 0, 1.0))
    return (_sup(xs) < a).astype(float)


def _power_abs(xs, params, seed):
    beta = _param(params, 0, 1.0)
    a = _positive("support", _param(params, 1, math.inf))
    clip = _positive("clip", _param(params, 2, math.inf))
    return np.minimum(_euclid(xs) ** beta, clip) * _support(xs, a)


def _bump(xs, params, seed):
    a = _positive("radius", _param(params, 0, 1.0))
    amp = _param(params, 1, 1.0)
    t = _euclid(xs) / a
    out = np.zeros_like(t)
    m = t < 1
    out[m] = amp * np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def _sine(xs, params, seed):
    k = _param(params, 0, math.pi)
    a = _positive("support", _param(params, 1, math.inf))
    v = np.ones_like(xs[0])
    for x in xs:
        v = v * np.sin(k * x)
    return v * _support(xs, a)


def _step(xs, params, seed):
    a = _positive("support", _param(params, 0, 1.0))
    return np.sign(xs[0]) * _support(xs, a)


def _random_field(xs, params, seed):
    a = _positive("support", _param(params, 0, math.inf))
    u = splitmix64_uniforms(seed, xs[0].size).reshape(xs[0].shape)
    return u * _support(xs, a)


CATALOG: dict[str, Callable] = {
    "constant": _constant,
    "indicator_cube": _indicator,
    "power_abs": _power_abs,
    "bump": _bump,
    "sine": _sine,
    "step": _step,
    "random_field": _random_field,
}


def make_grid_function(catalog_name: str, params: Sequence[float], dim: int, h: float,
                       R_max: float, seed: int = 0, label: str | None = None) -> GridFunction:
    """Sample a catalogue function at cell centres.

    Parameters per family (trailing ones optional):
    constant [c]; indicator_cube [a]; power_abs [beta, support, clip];
    bump [a, amplitude]; sine [k, support]; step [support]; random_field [support].
    """
    if catalog_name not in CATALOG:
        raise ValueError(f"unknown catalogue function {catalog_name!r}")
    n = cells_for(2 * R_max, h, "2*R_max")
    if n <= 0 or n % 2:
        raise ValueError(f"2*R_max/h = {n} must be a positive even integer")
    c = grid_centers(n, h)
    xs = (c,) if dim == 1 else tuple(np.meshgrid(c, c, indexing="ij"))
    vals = CATALOG[catalog_name](xs, list(params), int(seed))
    if label is None:
        label = f"{catalog_name}{list(params)}" + (f"#{seed}" if catalog_name == "random_field" else "")
    return GridFunction(dim, h, R_max, vals, label,
                        Recipe(catalog_name, tuple(float(p) for p in params), int(seed)))


# --- geometry -----------------------------------------------------------------

def _centered_slice(f: GridFunction, r: float) -> tuple[slice, ...]:
    if r > f.R_max * (1 + ALIGN_TOL):
        raise ValueError(f"radius {r} exceeds R_max={f.R_max}")
    k = cells_for(r, f.h)
    if k <= 0:
        raise ValueError("radius must be positive")
    c = f.n // 2
    return (slice(c - k, c + k),) * f.dim


def restrict(f: GridFunction, r: float) -> GridFunction:
    """Samples of f on Q_r, as a function on the master cube [-r, r]^n."""
    sl = _centered_slice(f, r)
    return GridFunction(f.dim, f.h, cells_for(r, f.h) * f.h, f.samples[sl], f"{f.label}|Q{r:g}")


def cube_block(f: GridFunction, center, s: float) -> np.ndarray:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != f.dim:
        raise ValueError("centre dimension mismatch")
    sl = []
    for x in center:
        lo = cells_for(x - s + f.R_max, f.h, "cube edge")
        hi = cells_for(x + s + f.R_max, f.h, "cube edge")
        if hi <= lo:
            raise ValueError("empty cube")
        if lo < 0 or hi > f.n:
            raise ValueError("cube exits the master domain")
        sl.append(slice(lo, hi))
    return f.samples[tuple(sl)]


def cube_mean(f: GridFunction, center, s: float) -> float:
    """Midpoint-rule mean of f over Q(center, s)."""
    block = cube_block(f, center, s)
    return float(np.mean(block, dtype=np.longdouble))


def distribution_measure(f: GridFunction, r: float, t: float) -> float:
    """|{x in Q_r : |f(x)| > t}| under the midpoint rule."""
    if t < 0:
        raise ValueError("threshold must be non-negative")
    block = f.samples[_centered_slice(f, r)]
    return f.cell_volume * int(np.count_nonzero(np.abs(block) > t))


# --- radius grid --------------------------------------------------------------

def _log2_step(rho: float) -> float:
    # snap log2(rho) to a dyadic rational when it is one up to rounding (rho = 2**(1/4) etc.)
    step = math.log2(rho)
    q = round(step * 2 ** 20) / 2 ** 20
    return q if abs(q - step) < 1e-12 else step


@dataclass(frozen=True)
class RadiusGrid:
    """Geometric nodes r_k = r_min * rho**k, k < count.

    Nodes are computed as 2**(log2 r_min + k log2 rho) so dyadic windows hit
    powers of two exactly.
    """

    r_min: float
    rho: float
    count: int

    def __post_init__(self):
        if not (self.r_min > 0 and self.rho > 1 and self.count >= 1):
            raise ValueError("RadiusGrid needs r_min > 0, rho > 1, count >= 1")

    @property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.count)
        return np.exp2(math.log2(self.r_min) + k * _log2_step(self.rho))

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def dlog(self) -> float:
        return math.log(self.rho)

    @classmethod
    def from_window(cls, lo: float, hi: float, rho: float) -> RadiusGrid:
        steps = math.log(hi / lo) / math.log(rho)
        k = int(round(steps))
        if abs(steps - k) > 1e-6:
            raise ValueError(f"window [{lo}, {hi}] is not a whole number of rho-steps")
        return cls(lo, rho, k + 1)

    def refine(self) -> RadiusGrid:
        """Halve the log step; every old node stays a node."""
        return RadiusGrid(self.r_min, math.sqrt(self.rho), 2 * (self.count - 1) + 1)

    def aligned(self, h: float) -> np.ndarray:
        """Nodes rounded to multiples of h (at least h)."""
        return np.maximum(1, np.round(self.nodes / h)) * h


STANDARD_WINDOW = RadiusGrid.from_window(1 / 16, 8.0, 2 ** 0.25)


# --- file format --------------------------------------------------------------

def save_grid_function(f: GridFunction, path) -> tuple[Path, Path]:
    """Write ``<path>.json`` manifest and ``<path>.csv`` samples (row-major)."""
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    manifest = {"dim": f.dim, "h": f.h, "R_max": f.R_max, "label": f.label}
    if f.recipe is not None:
        manifest["recipe"] = {"name": f.recipe.name, "params": list(f.recipe.params),
                              "seed": f.recipe.seed}
    jp, cp = base.with_suffix(".json"), base.with_suffix(".csv")
    jp.write_text(json.dumps(manifest, indent=2))
    cp.write_text("\n".join(repr(float(v)) for v in f.samples.ravel()) + "\n")
    return jp, cp


def load_grid_function(path) -> GridFunction:
    base = Path(path)
    manifest = json.loads(base.with_suffix(".json").read_text())
    vals = np.loadtxt(base.with_suffix(".csv"), dtype=float, ndmin=1)
    rec = manifest.get("recipe")
    recipe = Recipe(rec["name"], tuple(rec["params"]), rec.get("seed", 0)) if rec else None
    return GridFunction(int(manifest["dim"]), float(manifest["h"]), float(manifest["R_max"]),
                        vals, manifest.get("label", ""), recipe)
