"""K-functional upper bounds, interpolation norms and the two-sided sandwich."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bwu_norms import BwuSpec, bwu_norm, lu_norm
from .decompose import decompose
from .grid import GridFunction
from .weights import (ThetaFunction, certify_ratio_almost_increasing, check_almost_decreasing,
                      check_doubling, check_membership_Wu, check_theta_class, check_W_star,
                      compose_weight)


class HypothesisError(ValueError):
    """A theorem hypothesis failed its probe certification."""


@dataclass(frozen=True)
class CoupleSpec:
    A0: BwuSpec
    A1: BwuSpec

    def __post_init__(self):
        if self.A0.E != self.A1.E:
            raise ValueError("couple must share the local space E")
        if self.A0.radii != self.A1.radii or self.A0.homogeneous != self.A1.homogeneous:
            raise ValueError("couple must share the radius window and homogeneity")

    def swapped(self) -> CoupleSpec:
        return CoupleSpec(self.A1, self.A0)

    def w_star(self, r):
        return np.asarray(self.A0.w(r), dtype=float) / np.asarray(self.A1.w(r), dtype=float)

    def t_nodes(self) -> np.ndarray:
        """t = w0(r)/w1(r) at the window nodes, ascending."""
        return np.unique(self.w_star(self.A0.window()))


@dataclass(frozen=True)
class KProfile:
    t: np.ndarray
    K: np.ndarray
    argmin: tuple
    candidates: tuple = field(repr=False, default=())


def _candidates(f: GridFunction, couple: CoupleSpec) -> list[tuple[str, float, float]]:
    """(label, ||f0||_A0, ||f1||_A1) over the split family, both orientations."""
    n0 = bwu_norm(f, couple.A0)
    n1 = bwu_norm(f, couple.A1)
    out = [("trivial:f0=f", n0, 0.0), ("trivial:f1=f", 0.0, n1)]
    E = couple.A0.E
    radii = np.unique(couple.A0.radii.aligned(f.h))
    for r in radii:
        r = float(r)
        try:
            dec = decompose(f, r, E)
        except ValueError:
            continue
        a0, a1 = bwu_norm(dec.f0, couple.A0), bwu_norm(dec.f1, couple.A1)
        b0, b1 = bwu_norm(dec.f1, couple.A0), bwu_norm(dec.f0, couple.A1)
        out.append((f"split@{r:g}", a0, a1))
        out.append((f"split@{r:g}:swap", b0, b1))
    return out


def _family_min(cands, t: np.ndarray) -> tuple[np.ndarray, list[str]]:
    a = np.array([c[1] for c in cands], dtype=float)
    b = np.array([c[2] for c in cands], dtype=float)
    with np.errstate(invalid="ignore"):
        # 0 * inf counts as 0: a zero piece costs nothing
        tb = np.where(b[:, None] == 0, 0.0, b[:, None] * t[None, :])
        vals = a[:, None] + tb
    vals = np.where(np.isnan(vals), math.inf, vals)
    idx = np.argmin(vals, axis=0)
    K = vals[idx, np.arange(t.size)]
    return K, [cands[i][0] for i in idx]


def k_functional_upper(f: GridFunction, couple: CoupleSpec, t_nodes=None,
                       refine: bool = False) -> KProfile:
    """min over the split family of ||f0||_A0 + t ||f1||_A1 at each t-node."""
    t = couple.t_nodes() if t_nodes is None else np.asarray(t_nodes, dtype=float)
    cands = _candidates(f, couple)
    K, arg = _family_min(cands, t)
    if refine:
        K, arg = _refine(f, couple, t, K, arg)
    return KProfile(t, K, tuple(arg), tuple(cands))


def _refine(f, couple, t, K, arg):
    """Coordinate descent on convex-combination splits f0 + s f1 / (1 - s) f1; never raises K."""
    K = K.copy()
    arg = list(arg)
    E = couple.A0.E
    radii = np.unique(couple.A0.radii.aligned(f.h))
    splits = {}
    for r in radii:
        try:
            splits[float(r)] = decompose(f, float(r), E)
        except ValueError:
            pass
    for j, tj in enumerate(t):
        lab = arg[j]
        if not lab.startswith("split@"):
            continue
        r = float(lab.split("@")[1].split(":")[0])
        dec = splits[r]
        g0, g1 = (dec.f1, dec.f0) if lab.endswith(":swap") else (dec.f0, dec.f1)
        for s in (0.5, 0.25, -0.25):
            h0 = g0.with_samples(g0.samples + s * g1.samples)
            h1 = g1.with_samples((1 - s) * g1.samples)
            val = bwu_norm(h0, couple.A0) + tj * bwu_norm(h1, couple.A1)
            if val < K[j]:
                K[j], arg[j] = val, f"{lab}:s={s:g}"
    return K, arg


def _log_weights(t: np.ndarray) -> np.ndarray:
    """Left-point dt/t weights; the last node reuses the previous spacing."""
    if t.size == 1:
        return np.ones(1)
    d = np.diff(np.log(t))
    return np.concatenate([d, d[-1:]])


def interpolation_norm(f: GridFunction, couple: CoupleSpec, theta: ThetaFunction, u: float,
                       nonhomogeneous: bool = False, t_nodes=None,
                       profile: KProfile | None = None) -> float:
    """|| Theta(1/t) K(t) ||_{L^u(dt/t)} on the t-window (t >= 1 when non-homogeneous)."""
    if profile is None:
        profile = k_functional_upper(f, couple, t_nodes)
    t, K = profile.t, profile.K
    dl = _log_weights(t)
    if nonhomogeneous:
        keep = t >= 1 - 1e-12
        t, K, dl = t[keep], K[keep], dl[keep]
    if t.size == 0:
        raise ValueError("t-window is empty")
    return lu_norm(np.asarray(theta(1.0 / t), dtype=float) * K, u, dl)


@dataclass(frozen=True)
class SandwichResult:
    lower_C: float
    upper_C: float
    bwu: float
    interp: float
    swapped: bool
    certificates: tuple

    def __iter__(self):
        return iter((self.lower_C, self.upper_C))


def certify_hypotheses(couple: CoupleSpec, theta: ThetaFunction, u: float) -> tuple[bool, tuple]:
    """Probe-certify the main-theorem hypotheses; returns (swap, certificate ids)."""
    probe = couple.A0.radii
    certs = []
    for name, spec in (("w0", couple.A0), ("w1", couple.A1)):
        w = spec.w
        d = check_doubling(w, probe)
        a = check_almost_decreasing(w, probe)
        m = check_membership_Wu(w, math.inf, probe)
        if not (d.verdict and a.verdict and m.verdict):
            raise HypothesisError(f"{name} not in W^inf (doubling={d.constant:.3g}, "
                                  f"almost-decreasing={a.constant:.3g}, sup={m.constant:.3g})")
        certs.append(f"{name}:W^inf")
        if min(spec.u, u) < math.inf:
            s = check_W_star(w, probe)
            if not s.verdict:
                raise HypothesisError(f"{name} not in W* (constant {s.constant:.3g})")
            certs.append(f"{name}:W*")
    th = check_theta_class(theta, probe_theta(couple))
    if not th.verdict:
        raise HypothesisError(f"Theta not pseudoconcave on probe (C={th.constant:.3g})")
    certs.append(f"Theta:{th.detail}")
    direct = certify_ratio_almost_increasing(couple.A0.w, couple.A1.w, probe)
    if direct.verdict:
        certs.append(f"w0/w1:{direct.detail}")
        return False, tuple(certs)
    flipped = certify_ratio_almost_increasing(couple.A1.w, couple.A0.w, probe)
    if flipped.verdict:
        certs.append(f"w1/w0:{flipped.detail}")
        return True, tuple(certs)
    raise HypothesisError("neither (w0/w1) r^-eps nor (w1/w0) r^-eps is almost increasing")


def probe_theta(couple: CoupleSpec):
    """Theta is probed on the range of w1/w0 over the window, padded to three decades."""
    from .grid import RadiusGrid
    x = np.asarray(couple.A1.w(couple.A0.radii.nodes)) / np.asarray(couple.A0.w(couple.A0.radii.nodes))
    lo, hi = float(x.min()), float(x.max())
    mid = math.sqrt(lo * hi)
    half = max(math.log(hi / lo) / 2, 1.5 * math.log(10))
    lo, hi = mid * math.exp(-half), mid * math.exp(half)
    count = int(math.ceil(math.log(hi / lo) / couple.A0.radii.dlog)) + 1
    return RadiusGrid(lo, couple.A0.radii.rho, count)


def sandwich_check(f: GridFunction, couple: CoupleSpec, theta: ThetaFunction,
                   u: float) -> SandwichResult:
    """Compare ||f||_{B_w^u} (w = w0 Theta(w1/w0)) with the interpolation norm."""
    swap, certs = certify_hypotheses(couple, theta, u)
    w = compose_weight(couple.A0.w, couple.A1.w, theta)
    target = replace(couple.A0, w=w, u=u)
    if swap:
        couple, theta = couple.swapped(), theta.reflect()
    b = bwu_norm(f, target)
    i = interpolation_norm(f, couple, theta, u, nonhomogeneous=not couple.A0.homogeneous)
    return SandwichResult(_ratio(b, i), _ratio(i, b), b, i, swap, certs)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den
