"""Global norms ||w(r) ||f||_{E(Q_r)}||_{L^u(dr/r)} by log-space quadrature."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridFunction, RadiusGrid
from .local_norms import SpaceSpec, local_norms
from .weights import Weight, tail_integral


@dataclass(frozen=True)
class BwuSpec:
    E: SpaceSpec
    w: Weight
    u: float
    homogeneous: bool
    radii: RadiusGrid
    tail: bool = False

    def __post_init__(self):
        if not self.u > 0:
            raise ValueError("u must be positive")

    def window(self) -> np.ndarray:
        """Radius nodes entering the quadrature."""
        nodes = self.radii.nodes
        if not self.homogeneous:
            nodes = nodes[nodes >= 1 - 1e-12]
        if nodes.size == 0:
            raise ValueError("radius window is empty after the r >= 1 filter")
        return nodes


def lu_norm(values, u: float, dlog) -> float:
    """(sum v_k^u dlog_k)^(1/u), or max v_k for u = inf. dlog may be scalar or per-node."""
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    if math.isinf(u):
        return float(v.max())
    if not np.any(v):
        return 0.0
    if np.any(np.isinf(v)):
        return math.inf
    # scale out the maximum so large u does not overflow
    top = v.max()
    s = float(np.sum((v / top) ** u * dlog))
    return float(top * s ** (1.0 / u))


def weighted_profile(f: GridFunction, spec: BwuSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and w(r) ||f||_{E(Q_r)} with r the node rounded to a multiple of h.

    Weight and local norm are sampled at the same rounded radius; only the quadrature
    spacing refers to the nominal nodes."""
    nodes = spec.window()
    if nodes[-1] > f.R_max * (1 + 1e-12):
        raise ValueError(f"radius window reaches {nodes[-1]:g} > R_max={f.R_max:g}")
    aligned = np.maximum(1, np.round(nodes / f.h)) * f.h
    L = local_norms(f, aligned, spec.E)
    return nodes, np.asarray(spec.w(aligned), dtype=float) * L


def bwu_norm(f: GridFunction, spec: BwuSpec) -> float:
    nodes, g = weighted_profile(f, spec)
    val = lu_norm(g, spec.u, spec.radii.dlog)
    if spec.tail and not math.isinf(spec.u) and g[-1] != 0:
        # freeze the top local norm beyond the window
        top = max(1, round(float(nodes[-1]) / f.h)) * f.h
        L_top = g[-1] / float(spec.w(top))
        extra = L_top ** spec.u * tail_integral(spec.w, float(nodes[-1]) * spec.radii.rho, spec.u)
        val = (val ** spec.u + extra) ** (1.0 / spec.u)
    return val


def embedding_ratio(f: GridFunction, E: SpaceSpec, w: Weight, u0: float, u1: float,
                    radii: RadiusGrid, homogeneous: bool = True) -> float:
    """||f||_{u1} / ||f||_{u0} for the same E, w and window; 0 when both vanish."""
    if not u0 < u1:
        raise ValueError("embedding needs u0 < u1")
    n0 = bwu_norm(f, BwuSpec(E, w, u0, homogeneous, radii))
    n1 = bwu_norm(f, BwuSpec(E, w, u1, homogeneous, radii))
    return _safe_ratio(n1, n0)


def embedding_ratio_table(values, u0: float, u1: float, dlog: float) -> float:
    """Same ratio for a synthetic table of weighted local norms."""
    if not u0 < u1:
        raise ValueError("embedding needs u0 < u1")
    return _safe_ratio(lu_norm(values, u1, dlog), lu_norm(values, u0, dlog))


def _safe_ratio(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _is_monotone(v: np.ndarray) -> bool:
    d = np.diff(v)
    return bool(np.all(d > 0) or np.all(d < 0))


def monotone_surrogate(phi: Callable, radii: RadiusGrid, eps: float) -> Callable:
    """Strictly increasing phi_2 with phi_2 ~ phi: two nested integrals of phi dt/t from 0.

    The head below the window assumes phi(r) ~ r^eps there."""
    r = radii.nodes
    v = np.asarray(phi(r), dtype=float)
    lr = np.log(r)

    def cumulative(vals, head):
        steps = 0.5 * (vals[1:] + vals[:-1]) * np.diff(lr)
        return head + np.concatenate([[0.0], np.cumsum(steps)])

    phi1 = cumulative(v, v[0] / eps)
    phi2 = cumulative(phi1, phi1[0] / eps)

    def surrogate(x):
        return np.exp(np.interp(np.log(np.asarray(x, dtype=float)), lr, np.log(phi2)))
    return surrogate


def change_of_variable_check(G: Callable, phi: Callable, u: float, radii: RadiusGrid,
                             surrogate: Callable | None = None) -> tuple[float, float]:
    """(||G o phi|| / ||G||, ||G|| / ||G o phi||) with ||G|| taken on the image window."""
    r = radii.nodes
    pv = np.asarray(phi(r), dtype=float)
    if not _is_monotone(pv):
        if surrogate is None:
            raise ValueError("phi is not monotone on the window and no surrogate was given")
        pv = np.asarray(surrogate(r), dtype=float)
        if not _is_monotone(pv):
            raise ValueError("surrogate is not monotone on the window")
    lhs = lu_norm(np.asarray(G(pv), dtype=float), u, radii.dlog)
    lo, hi = float(pv.min()), float(pv.max())
    count = int(math.ceil(math.log(hi / lo) / radii.dlog - 1e-9)) + 1
    image = RadiusGrid(lo, radii.rho, count)
    rhs = lu_norm(np.asarray(G(image.nodes), dtype=float), u, radii.dlog)
    return _safe_ratio(lhs, rhs), _safe_ratio(rhs, lhs)
