"""Two-weight Hardy inequalities on (0, inf) and the weighted estimates behind the sandwich."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bwu_norms import BwuSpec, bwu_norm
from .grid import GridFunction, RadiusGrid
from .interpolate import HypothesisError
from .local_norms import SpaceSpec, local_norms
from .weights import (PowerWeight, ThetaFunction, certify_ratio_almost_increasing,
                      check_almost_decreasing, check_almost_increasing, check_doubling,
                      check_membership_Wu, check_W_star, compose_weight)


def conjugate(p: float) -> float:
    """p' with 1' = inf and inf' = 1."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


@dataclass(frozen=True)
class PowerLaw:
    """c t^e on (0, inf)."""

    c: float = 1.0
    e: float = 0.0

    def __call__(self, t):
        return self.c * np.asarray(t, dtype=float) ** self.e

    def integral(self, a: float, b: float, p: float) -> float:
        """int_a^b |c t^e|^p dt, or sup over (a, b) when p = inf; +inf when divergent."""
        if math.isinf(p):
            ends = []
            for x in (a, b):
                if x == 0:
                    ends.append(math.inf if self.e < 0 else (0.0 if self.e > 0 else 1.0))
                elif math.isinf(x):
                    ends.append(math.inf if self.e > 0 else (0.0 if self.e < 0 else 1.0))
                else:
                    ends.append(x ** self.e)
            return abs(self.c) * max(ends)
        k = self.e * p + 1
        cp = abs(self.c) ** p
        if k == 0:
            if a == 0 or math.isinf(b):
                return math.inf
            return cp * math.log(b / a)
        if (a == 0 and k < 0) or (math.isinf(b) and k > 0):
            return math.inf
        hi = 0.0 if math.isinf(b) else b ** k
        lo = 0.0 if a == 0 else a ** k
        return cp * (hi - lo) / k

    def reciprocal(self) -> PowerLaw:
        return PowerLaw(1.0 / self.c, -self.e)


def as_power_law(g) -> PowerLaw:
    if isinstance(g, PowerLaw):
        return g
    if isinstance(g, PowerWeight):
        return PowerLaw(1.0, -g.sigma)
    raise ValueError(f"no tail model for {g!r}; use PowerLaw or power weights")


@dataclass(frozen=True)
class HardyPair:
    U: PowerLaw
    V: PowerLaw
    p: float
    direction: str = "F_star_up"

    def __post_init__(self):
        if self.direction not in ("F_star_up", "F_star_down"):
            raise ValueError("direction must be F_star_up or F_star_down")
        if not self.p >= 1:
            raise ValueError("p must lie in [1, inf]")
        object.__setattr__(self, "U", as_power_law(self.U))
        object.__setattr__(self, "V", as_power_law(self.V))

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)


def _root(x: float, p: float) -> float:
    return x if math.isinf(p) else x ** (1.0 / p)


def muckenhoupt_condition(pair: HardyPair, window: RadiusGrid) -> float:
    """sup over window nodes of the two-factor product; +inf when a factor diverges."""
    p, q = pair.p, pair.p_conj
    Vi = pair.V.reciprocal()
    best = 0.0
    for r in window.nodes:
        r = float(r)
        if pair.direction == "F_star_up":
            a = _root(pair.U.integral(r, math.inf, p), p)
            b = _root(Vi.integral(0.0, r, q), q)
        else:
            a = _root(pair.U.integral(0.0, r, p), p)
            b = _root(Vi.integral(r, math.inf, q), q)
        if math.isinf(a) or math.isinf(b):
            return math.inf
        best = max(best, a * b)
    return best


@dataclass(frozen=True)
class HardyGrid:
    """Geometric cells [e_k, e_k+1] on [lo, hi]; samples sit at arithmetic midpoints."""

    lo: float
    hi: float
    ratio: float = 2 ** (1 / 16)

    @property
    def edges(self) -> np.ndarray:
        k = int(math.ceil(math.log(self.hi / self.lo) / math.log(self.ratio) - 1e-9))
        return np.exp2(math.log2(self.lo) + np.arange(k + 1) * math.log2(self.ratio))

    @property
    def mids(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def running_integrals(f_vals, grid: HardyGrid) -> tuple[np.ndarray, np.ndarray]:
    """(F^*, F_*) at the midpoints, with f zero outside the grid."""
    f = np.asarray(f_vals, dtype=float)
    e, m, d = grid.edges, grid.mids, grid.widths
    mass = f * d
    before = np.concatenate([[0.0], np.cumsum(mass)[:-1]])
    after = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
    up = before + f * (m - e[:-1])
    down = after + f * (e[1:] - m)
    return up, down


def _lp(vals, widths, p: float) -> float:
    v = np.abs(vals)
    if math.isinf(p):
        return float(v.max()) if v.size else 0.0
    return float(np.sum(v ** p * widths)) ** (1.0 / p)


def hardy_inequality_ratio(pair: HardyPair, test_f, grid: HardyGrid) -> float:
    """||U F||_p / ||V f||_p on the grid; F is F^* or F_* per the pair's direction."""
    m = grid.mids
    f = np.asarray(test_f(m) if callable(test_f) else test_f, dtype=float)
    if np.any(f < 0):
        raise ValueError("test function must be nonnegative")
    up, down = running_integrals(f, grid)
    F = up if pair.direction == "F_star_up" else down
    num = _lp(pair.U(m) * F, grid.widths, pair.p)
    den = _lp(pair.V(m) * f, grid.widths, pair.p)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def indicator(a: float, b: float):
    return lambda t: ((np.asarray(t) >= a) & (np.asarray(t) < b)).astype(float)


# --- weighted-estimate lemma ----------------------------------------------------

@dataclass(frozen=True)
class LemmaWStarData:
    r: np.ndarray
    F0: np.ndarray
    U0: np.ndarray
    F1: np.ndarray
    U1: np.ndarray
    V0: np.ndarray
    V1: np.ndarray


@dataclass(frozen=True)
class LemmaReport:
    cases: tuple
    lhs: float
    bwu: float
    ratio: float
    ratio_refined: float
    passed: bool
    swapped: bool
    certificates: tuple
    data: LemmaWStarData | None = None


def _cases(u0: float, u1: float, u: float) -> tuple:
    if not u >= max(u0, u1):
        raise HypothesisError(f"u={u} < max(u0, u1)={max(u0, u1)} is outside the lemma")
    if max(u0, u1) < math.inf:
        return ("i",)
    out = []
    if math.isinf(u0):
        out.append("ii")
    if math.isinf(u1):
        out.append("iii")
    return tuple(out)


def _certify(w0, w1, theta, cases, probe: RadiusGrid) -> tuple[bool, list]:
    certs = []
    for name, w in (("w0", w0), ("w1", w1)):
        ok = (check_doubling(w, probe).verdict and check_almost_decreasing(w, probe).verdict
              and check_membership_Wu(w, math.inf, probe).verdict)
        if not ok:
            raise HypothesisError(f"{name} not in W^inf")
        certs.append(f"{name}:W^inf")
    if "i" in cases:
        for name, w in (("w0", w0), ("w1", w1)):
            if not check_W_star(w, probe).verdict:
                raise HypothesisError(f"{name} not in W*")
            certs.append(f"{name}:W*")
        rep = certify_ratio_almost_increasing(w0, w1, probe)
        if not rep.verdict:
            return False, certs
        certs.append(f"w*:{rep.detail}")
    else:
        ratio = lambda r: np.asarray(w0(r), dtype=float) / np.asarray(w1(r), dtype=float)
        if not check_almost_increasing(ratio, probe).verdict:
            return False, certs
        certs.append("w*:almost increasing")
    return True, certs


def lemma_quantities(L: np.ndarray, r: np.ndarray, w0, w1, theta: ThetaFunction,
                     u0: float, u1: float, u: float) -> LemmaWStarData:
    ws = np.asarray(w0(r), dtype=float) / np.asarray(w1(r), dtype=float)
    th = np.asarray(theta(1.0 / ws), dtype=float)
    e0 = 1.0 if math.isinf(u0) else u0
    e1 = 1.0 if math.isinf(u1) else u1
    s0 = 0.0 if math.isinf(u) else e0 / u
    s1 = 0.0 if math.isinf(u) else e1 / u
    F0 = (np.asarray(w0(r)) * L) ** e0 / (1.0 if math.isinf(u0) else r)
    F1 = (np.asarray(w1(r)) * L) ** e1 / (1.0 if math.isinf(u1) else r)
    U0 = th ** e0 * r ** -s0
    U1 = (ws * th) ** e1 * r ** -s1
    # V_i F_i = (w ||f||)^{u_i} r^{-u_i/u}: the B-norm piece the Hardy step lands on
    V0 = r ** (1.0 - s0) * th ** e0
    V1 = r ** (1.0 - s1) * (ws * th) ** e1
    return LemmaWStarData(r, F0, U0, F1, U1, V0, V1)


def _lemma_lhs(d: LemmaWStarData, cases, u0, u1, u, dlog: float) -> float:
    total = 0.0
    r = d.r
    if "i" in cases:
        # int F dt = sum F t dlog; inclusive left-point sums
        g0 = np.cumsum(d.F0 * r * dlog)
        g1 = np.cumsum((d.F1 * r * dlog)[::-1])[::-1]
        for U, G, ui in ((d.U0, g0, u0), (d.U1, g1, u1)):
            s = u / ui
            vals = U * G
            if math.isinf(s):
                part = float(vals.max())
            else:
                part = float(np.sum(vals ** s * r * dlog)) ** (1.0 / s)
            total += part ** (1.0 / ui)
    if "ii" in cases:
        total += float(np.max(d.U0 * np.maximum.accumulate(d.F0)))
    if "iii" in cases:
        total += float(np.max(d.U1 * np.maximum.accumulate(d.F1[::-1])[::-1]))
    return total


def _lemma_once(f, E, w0, w1, theta, u0, u1, u, window, homogeneous, cases):
    r = window.nodes
    aligned = np.maximum(1, np.round(r / f.h)) * f.h
    L = np.asarray(local_norms(f, aligned, E), dtype=float)
    if not homogeneous:
        L = np.where(r >= 1 - 1e-12, L, 0.0)
    d = lemma_quantities(L, r, w0, w1, theta, u0, u1, u)
    lhs = _lemma_lhs(d, cases, u0, u1, u, window.dlog)
    w = compose_weight(w0, w1, theta)
    b = bwu_norm(f, BwuSpec(E, w, u, homogeneous, window))
    ratio = 0.0 if lhs == 0 and b == 0 else (math.inf if b == 0 else lhs / b)
    return d, lhs, b, ratio


def lemma_w_star_check(f: GridFunction, E: SpaceSpec, w0, w1, theta: ThetaFunction,
                       u0: float, u1: float, u: float, window: RadiusGrid,
                       homogeneous: bool = True, stable_within: float = 0.2) -> LemmaReport:
    """Left-hand quantities of the weighted-estimate lemma over ||f||_B, with refinement.

    If w_* fails the monotonicity hypothesis the symmetric reading is used:
    w0 <-> w1, u0 <-> u1 and Theta -> t Theta(1/t), which leaves w unchanged."""
    cases = _cases(u0, u1, u)
    ok, certs = _certify(w0, w1, theta, cases, window)
    swapped = False
    if not ok:
        cases_s = _cases(u1, u0, u)
        ok, certs = _certify(w1, w0, theta.reflect(), cases_s, window)
        if not ok:
            raise HypothesisError("w_* fails the almost-increasing hypothesis in both orientations")
        w0, w1, u0, u1, theta, cases, swapped = w1, w0, u1, u0, theta.reflect(), cases_s, True
    d, lhs, b, ratio = _lemma_once(f, E, w0, w1, theta, u0, u1, u, window, homogeneous, cases)
    _, _, _, ratio_r = _lemma_once(f, E, w0, w1, theta, u0, u1, u, window.refine(),
                                   homogeneous, cases)
    if ratio == 0 and ratio_r == 0:
        stable = True
    else:
        stable = math.isfinite(ratio) and ratio > 0 and abs(ratio_r / ratio - 1) <= stable_within
    return LemmaReport(cases, lhs, b, ratio, ratio_r, bool(math.isfinite(ratio) and stable),
                       swapped, tuple(certs), d)
