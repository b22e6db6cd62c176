"""Two-piece splits f = f0 + f1 at a radius r and the checker for their cube bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, RadiusGrid, cells_for
from .local_norms import OSCILLATION_KINDS, SpaceSpec, local_norms


@dataclass(frozen=True)
class CutoffProfile:
    """Tent h = 1 on |x|_inf <= 1, 0 on |x|_inf >= 2, linear between; h_r(x) = h(x/r)."""

    inner: float = 1.0
    outer: float = 2.0

    def __call__(self, coords, r: float = 1.0) -> np.ndarray:
        sup = np.max(np.abs(np.stack([np.asarray(c, dtype=float) for c in coords])), axis=0) / r
        return np.clip((self.outer - sup) / (self.outer - self.inner), 0.0, 1.0)


TENT = CutoffProfile()


@dataclass(frozen=True)
class Decomposition:
    f0: GridFunction
    f1: GridFunction
    r: float
    constants: tuple
    kind: str
    C_observed: float = math.nan


def _check_radius(f: GridFunction, r: float) -> int:
    k = cells_for(r, f.h)
    if k < 1:
        raise ValueError("split radius must be positive")
    return k


def lattice_decompose(f: GridFunction, r: float) -> Decomposition:
    """f0 = f on Q_r and 0 outside; f1 the rest. Constants (a, b, c) = (1, 1, 1)."""
    k = _check_radius(f, r)
    c = f.n // 2
    inside = np.zeros(f.samples.shape, dtype=bool)
    inside[(slice(max(c - k, 0), c + k),) * f.dim] = True
    f0 = np.where(inside, f.samples, 0.0)
    f1 = np.where(inside, 0.0, f.samples)
    return Decomposition(f.with_samples(f0, f"{f.label}|f0@{r:g}"),
                         f.with_samples(f1, f"{f.label}|f1@{r:g}"), r, (1, 1, 1), "lattice")


def campanato_decompose(f: GridFunction, r: float) -> Decomposition:
    """f0 = (f - f_{Q_2r}) h_r, f1 = f - f0. Constants (a, b, c) = (3, 3, 1).

    On Q_r the tent is 1 and f1 is stored as the mean itself, so f1 is exactly
    constant there; elsewhere f1 = f - f0 in floating point."""
    k = _check_radius(f, r)
    if 2 * k > f.n // 2:
        raise ValueError(f"2r = {2 * r:g} exceeds R_max = {f.R_max:g}")
    c = f.n // 2
    block = f.samples[(slice(c - 2 * k, c + 2 * k),) * f.dim]
    m = float(np.mean(block, dtype=np.longdouble))
    hr = TENT(f.coords(), r)
    f0 = (f.samples - m) * hr
    f1 = np.where(hr == 1.0, m, f.samples - f0)
    return Decomposition(f.with_samples(f0, f"{f.label}|f0@{r:g}"),
                         f.with_samples(f1, f"{f.label}|f1@{r:g}"), r, (3, 3, 1), "campanato")


def decompose(f: GridFunction, r: float, E: SpaceSpec) -> Decomposition:
    """The split suited to E: smooth cutoff for oscillation spaces, indicator otherwise."""
    if E.kind in OSCILLATION_KINDS:
        return campanato_decompose(f, r)
    return lattice_decompose(f, r)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def _norms(g: GridFunction, radii, E: SpaceSpec) -> dict:
    radii = sorted(set(float(x) for x in radii))
    vals = local_norms(g, radii, E) if radii else []
    return dict(zip(radii, (float(v) for v in vals)))


def decomposition_report(f: GridFunction, dec: Decomposition, E: SpaceSpec,
                         radii: RadiusGrid) -> list[dict]:
    """One row per (t, side): observed ratio against the case bound, or a skip."""
    a, b, c = dec.constants
    r = dec.r
    ts = [float(t) for t in np.unique(radii.aligned(f.h)) if t <= f.R_max * (1 + 1e-12)]
    bound_radii = set(ts)
    for t in ts:
        if a * r <= f.R_max:
            bound_radii.add(a * r)
        if b * t <= f.R_max:
            bound_radii.add(b * t)
    nf = _norms(f, bound_radii, E)
    n0 = _norms(dec.f0, ts, E)
    n1 = _norms(dec.f1, ts, E)
    rows = []
    for t in ts:
        # f0 side
        if t < r:
            rows.append(_row(f, E, r, t, "f0", _ratio(n0[t], nf[t])))
        elif a * r <= f.R_max * (1 + 1e-12):
            rows.append(_row(f, E, r, t, "f0", _ratio(n0[t], nf[_key(nf, a * r)])))
        else:
            rows.append(_row(f, E, r, t, "f0", math.nan, skipped=True))
        # f1 side
        if t < c * r:
            rows.append(_row(f, E, r, t, "f1", _ratio(n1[t], 0.0)))
        elif b * t <= f.R_max * (1 + 1e-12):
            rows.append(_row(f, E, r, t, "f1", _ratio(n1[t], nf[_key(nf, b * t)])))
        else:
            rows.append(_row(f, E, r, t, "f1", math.nan, skipped=True))
    return rows


def _key(d: dict, x: float) -> float:
    return min(d, key=lambda k: abs(k - x))


def _row(f, E, r, t, side, ratio, skipped=False) -> dict:
    return {"f": f.label, "E": E.label, "r": r, "t": t, "side": side,
            "ratio": ratio, "skipped": skipped}


def verify_decomposition(f: GridFunction, dec: Decomposition, E: SpaceSpec,
                         radii: RadiusGrid) -> tuple[float, float]:
    """(C0, C1): worst observed ratios; 0/0 counts as 1, nonzero/0 as inf."""
    rows = decomposition_report(f, dec, E, radii)
    c0 = max((x["ratio"] for x in rows if x["side"] == "f0" and not x["skipped"]), default=1.0)
    c1 = max((x["ratio"] for x in rows if x["side"] == "f1" and not x["skipped"]), default=1.0)
    return c0, c1


def decomposition_sweep(f: GridFunction, E: SpaceSpec, radii: RadiusGrid,
                        split_radii=None) -> dict:
    """C0(r), C1(r) for every admissible split radius r, with all skipped rows."""
    if split_radii is None:
        split_radii = np.unique(radii.aligned(f.h))
    per_r, skipped = {}, []
    for r in split_radii:
        r = float(r)
        try:
            dec = decompose(f, r, E)
        except ValueError:
            skipped.append({"r": r, "t": None, "side": "split"})
            continue
        rows = decomposition_report(f, dec, E, radii)
        skipped.extend(x for x in rows if x["skipped"])
        live = [x for x in rows if not x["skipped"]]
        # the t < r case is an identity, so C_E >= 1 even when the grid has no t < r
        c0 = max((x["ratio"] for x in live if x["side"] == "f0"), default=1.0)
        c1 = max((x["ratio"] for x in live if x["side"] == "f1"), default=1.0)
        per_r[r] = (max(1.0, c0), max(1.0, c1))
    return {"per_r": per_r, "skipped": skipped}
