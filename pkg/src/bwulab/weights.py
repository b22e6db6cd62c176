"""Radial weights, Theta functions and probe-grid class certifications."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .grid import RadiusGrid

EPS_LATTICE = tuple(round(0.05 * k, 2) for k in range(1, 20))

DOUBLING_BOUND = math.inf
ALMOST_MONOTONE_BOUND = 10.0
W_STAR_BOUND = 100.0
THETA_BOUND = 4.0


def ell(r, beta1: float, beta2: float):
    """Slowly varying factor: (log 1/r)^-beta1 below 1/e, 1 on [1/e, e], (log r)^beta2 above e."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    lo = r < math.exp(-1)
    hi = r > math.e
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(lo, np.log(1 / np.where(lo, r, 0.5)) ** -beta1, out)
        out = np.where(hi, np.log(np.where(hi, r, 3.0)) ** beta2, out)
    return out


def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


# --- Theta --------------------------------------------------------------------

class ThetaFunction:
    family = "theta"

    def __call__(self, x):
        raise NotImplementedError

    def exponent_at_infinity(self) -> tuple[float, float]:
        """(e, b) with Theta(x) ~ x^e (log x)^b as x -> inf."""
        raise NotImplementedError

    def exponent_at_zero(self) -> tuple[float, float]:
        raise NotImplementedError

    def reflect(self) -> ThetaFunction:
        """x * Theta(1/x), the Theta of the swapped couple."""
        raise NotImplementedError


@dataclass(frozen=True)
class PowerTheta(ThetaFunction):
    theta: float
    family = "power"

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.theta

    def exponent_at_infinity(self):
        return (self.theta, 0.0)

    def exponent_at_zero(self):
        return (self.theta, 0.0)

    def reflect(self):
        return PowerTheta(1.0 - self.theta)

    def spec(self):
        return f"power{{theta={_fmt(self.theta)}}}"


@dataclass(frozen=True)
class MaxPowersTheta(ThetaFunction):
    alpha: float
    beta: float
    family = "max_powers"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(x ** self.alpha, x ** self.beta)

    def exponent_at_infinity(self):
        return (max(self.alpha, self.beta), 0.0)

    def exponent_at_zero(self):
        return (min(self.alpha, self.beta), 0.0)

    def reflect(self):
        # x max(x^-a, x^-b) = max(x^(1-a), x^(1-b))
        return MaxPowersTheta(1.0 - self.alpha, 1.0 - self.beta)

    def spec(self):
        return f"max_powers{{alpha={_fmt(self.alpha)}, beta={_fmt(self.beta)}}}"


@dataclass(frozen=True)
class PowerLogTheta(ThetaFunction):
    theta: float
    beta1: float = 0.0
    beta2: float = 0.0
    family = "power_log"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x ** self.theta * ell(x, self.beta1, self.beta2)

    def exponent_at_infinity(self):
        return (self.theta, self.beta2)

    def exponent_at_zero(self):
        return (self.theta, -self.beta1)

    def reflect(self):
        # ell(1/x) swaps the two regimes: ell_{b1,b2}(1/x) = ell_{-b2,-b1}(x)
        return PowerLogTheta(1.0 - self.theta, -self.beta2, -self.beta1)

    def spec(self):
        return (f"power_log{{theta={_fmt(self.theta)}, beta1={_fmt(self.beta1)}, "
                f"beta2={_fmt(self.beta2)}}}")


# --- weights ------------------------------------------------------------------

@dataclass(frozen=True)
class TailModel:
    """w(r) = c r^-a (log r)^b exactly for r >= r_from."""

    r_from: float
    c: float
    a: float
    b: float


class Weight:
    family = "weight"

    def __call__(self, r):
        raise NotImplementedError

    def decay(self) -> tuple[float, float]:
        """(a, b) with w(r) ~ r^-a (log r)^b as r -> inf."""
        raise NotImplementedError

    def tail_model(self) -> TailModel | None:
        return None


@dataclass(frozen=True)
class PowerWeight(Weight):
    sigma: float
    family = "power"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("power weight needs sigma >= 0")

    def __call__(self, r):
        return np.asarray(r, dtype=float) ** -self.sigma

    def decay(self):
        return (self.sigma, 0.0)

    def tail_model(self):
        return TailModel(0.0, 1.0, self.sigma, 0.0)

    def spec(self):
        return f"power{{sigma={_fmt(self.sigma)}}}"


@dataclass(frozen=True)
class PowerLogWeight(Weight):
    sigma: float
    beta1: float = 0.0
    beta2: float = 0.0
    family = "power_log"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("power_log weight needs sigma >= 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return r ** -self.sigma * ell(r, self.beta1, self.beta2)

    def decay(self):
        return (self.sigma, self.beta2)

    def tail_model(self):
        if self.beta2 == 0:
            return TailModel(math.exp(-1), 1.0, self.sigma, 0.0)
        return TailModel(math.e, 1.0, self.sigma, self.beta2)

    def spec(self):
        return (f"power_log{{sigma={_fmt(self.sigma)}, beta1={_fmt(self.beta1)}, "
                f"beta2={_fmt(self.beta2)}}}")


@dataclass(frozen=True)
class MaxPowersWeight(Weight):
    e1: float
    e2: float
    family = "max_powers"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.maximum(r ** -self.e1, r ** -self.e2)

    def decay(self):
        return (min(self.e1, self.e2), 0.0)

    def tail_model(self):
        return TailModel(1.0, 1.0, min(self.e1, self.e2), 0.0)

    def spec(self):
        return f"max_powers{{e1={_fmt(self.e1)}, e2={_fmt(self.e2)}}}"


@dataclass(frozen=True)
class ScaledWeight(Weight):
    factor: float
    base: Weight
    family = "scaled"

    def __call__(self, r):
        return self.factor * self.base(r)

    def decay(self):
        return self.base.decay()

    def tail_model(self):
        t = self.base.tail_model()
        return None if t is None else TailModel(t.r_from, self.factor * t.c, t.a, t.b)

    def spec(self):
        return f"scaled{{c={_fmt(self.factor)}, w={self.base.spec()}}}"


@dataclass(frozen=True)
class CompositeWeight(Weight):
    """w0(r) * Theta(w1(r) / w0(r))."""

    w0: Weight
    w1: Weight
    theta: ThetaFunction
    family = "composite"

    def __call__(self, r):
        a = self.w0(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return a * self.theta(self.w1(r) / a)

    def decay(self):
        a0, b0 = self.w0.decay()
        a1, b1 = self.w1.decay()
        if a0 > a1 or (a0 == a1 and b1 >= b0):
            e, eb = self.theta.exponent_at_infinity()
        else:
            e, eb = self.theta.exponent_at_zero()
        return (a0 + e * (a1 - a0), b0 + e * (b1 - b0))

    def tail_model(self):
        if not isinstance(self.theta, PowerTheta):
            return None
        t0, t1 = self.w0.tail_model(), self.w1.tail_model()
        if t0 is None or t1 is None:
            return None
        th = self.theta.theta
        return TailModel(max(t0.r_from, t1.r_from), t0.c ** (1 - th) * t1.c ** th,
                         (1 - th) * t0.a + th * t1.a, (1 - th) * t0.b + th * t1.b)

    def spec(self):
        return f"composite{{w0={self.w0.spec()}, w1={self.w1.spec()}, theta={self.theta.spec()}}}"


@dataclass(frozen=True)
class TableWeight(Weight):
    """Piecewise linear in (log r, log w); end slopes extrapolate."""

    r: tuple
    w: tuple
    family = "table"
    _lr: np.ndarray = field(init=False, repr=False, compare=False)
    _lw: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lr = np.log(np.asarray(self.r, dtype=float))
        lw = np.log(np.asarray(self.w, dtype=float))
        if lr.size < 2 or np.any(np.diff(lr) <= 0) or not np.all(np.isfinite(lw)):
            raise ValueError("table weight needs >= 2 increasing radii and positive values")
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))
        object.__setattr__(self, "_lr", lr)
        object.__setattr__(self, "_lw", lw)

    def _slope(self, end: int) -> float:
        lr, lw = self._lr, self._lw
        if end < 0:
            return (lw[-1] - lw[-2]) / (lr[-1] - lr[-2])
        return (lw[1] - lw[0]) / (lr[1] - lr[0])

    def __call__(self, r):
        x = np.log(np.asarray(r, dtype=float))
        y = np.interp(x, self._lr, self._lw)
        y = np.where(x > self._lr[-1], self._lw[-1] + self._slope(-1) * (x - self._lr[-1]), y)
        y = np.where(x < self._lr[0], self._lw[0] + self._slope(0) * (x - self._lr[0]), y)
        return np.exp(y)

    def decay(self):
        return (-self._slope(-1), 0.0)

    def tail_model(self):
        a = -self._slope(-1)
        return TailModel(self.r[-1], self.w[-1] * self.r[-1] ** a, a, 0.0)

    def spec(self):
        pts = ", ".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in zip(self.r, self.w))
        return f"table{{{pts}}}"


def compose_weight(w0: Weight, w1: Weight, theta: ThetaFunction) -> Weight:
    return CompositeWeight(w0, w1, theta)


# --- tail integrals -------------------------------------------------------------

def _closed_tail(t: TailModel, R: float, u: float) -> float:
    """int_R^inf (c r^-a (log r)^b)^u dr/r, R >= t.r_from."""
    a, b, c = t.a * u, t.b * u, t.c ** u
    if a < 0 or (a == 0 and b >= -1):
        return math.inf
    if b == 0:
        return c * R ** -a / a
    x0 = math.log(R)
    s = b + 1
    if a > 0 and s > 0 and x0 >= 0:
        return c * a ** -s * special.gammaincc(s, a * x0) * special.gamma(s)
    val, _ = integrate.quad(lambda x: math.exp(-a * x) * x ** b, x0, math.inf, limit=200)
    return c * val


def _diverges(w: Weight, u: float) -> bool:
    a, b = w.decay()
    return a < 0 or (a == 0 and b * u >= -1)


def _log_integrand(w: Weight, u: float):
    def g(x):
        v = float(w(math.exp(x))) ** u
        return v if math.isfinite(v) else 0.0
    return g


def _quad_log(w: Weight, u: float, x0: float, x1: float) -> float:
    if math.isinf(x1):
        a = w.decay()[0] * u
        # beyond this the integrand is below e^-60 of its scale
        x1 = x0 + 60.0 / a + 60.0 if a > 0 else math.inf
    val, _ = integrate.quad(_log_integrand(w, u), x0, x1, limit=400)
    return val


def tail_integral(w: Weight, R: float, u: float = 1.0) -> float:
    """int_R^inf w(t)^u dt/t using the family's tail model (closed form or quadrature)."""
    if _diverges(w, u):
        return math.inf
    t = w.tail_model()
    if t is not None and R >= t.r_from:
        return _closed_tail(t, R, u)
    if t is not None:
        head = _quad_log(w, u, math.log(R), math.log(max(t.r_from, R)))
        return head + _closed_tail(t, t.r_from, u)
    return _quad_log(w, u, math.log(R), math.inf)


def midpoint_log_integral(fn, nodes: np.ndarray, u: float = 1.0) -> np.ndarray:
    """Suffix integrals int_{r_k}^{r_top} fn^u dt/t by log-midpoint quadrature on the nodes."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 2:
        return np.zeros(nodes.size)
    mids = np.sqrt(nodes[:-1] * nodes[1:])
    pieces = np.asarray(fn(mids), dtype=float) ** u * np.diff(np.log(nodes))
    suffix = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    return suffix


def integral_to_infinity(w: Weight, nodes: np.ndarray, u: float = 1.0) -> np.ndarray:
    """int_{r_k}^inf w^u dt/t at every node: closed form where the tail model is exact,
    otherwise log-midpoint quadrature to the top node plus the tail beyond it."""
    nodes = np.asarray(nodes, dtype=float)
    if _diverges(w, u):
        return np.full(nodes.size, math.inf)
    t = w.tail_model()
    head = midpoint_log_integral(w, nodes, u)
    top = tail_integral(w, float(nodes[-1]), u)
    out = head + top
    if t is not None:
        for i, r in enumerate(nodes):
            if r >= t.r_from:
                out[i] = _closed_tail(t, float(r), u)
    return out


# --- class reports ------------------------------------------------------------

@dataclass(frozen=True)
class ClassReport:
    verdict: bool
    constant: float
    witness: tuple
    detail: str = ""

    def __bool__(self):
        return self.verdict


def _nodes(probe: RadiusGrid) -> np.ndarray:
    nodes = probe.nodes
    if nodes.size < 2:
        raise ValueError("degenerate probe: need at least 2 nodes")
    return nodes


def check_doubling(w: Weight, probe: RadiusGrid, bound: float = DOUBLING_BOUND) -> ClassReport:
    """sup w(r)/w(s) over probe pairs with 1/2 <= r/s <= 2."""
    r = _nodes(probe)
    lr = np.log(r)
    dmax = int(math.floor(math.log(2) / probe.dlog + 1e-9))
    if dmax < 1:
        raise ValueError("degenerate probe: no node pair with ratio <= 2")
    v = np.asarray(w(r), dtype=float)
    best, wit = 1.0, (float(r[0]), float(r[0]))
    for d in range(1, min(dmax, r.size - 1) + 1):
        if lr[d] - lr[0] > math.log(2) + 1e-12:
            break
        up = v[:-d] / v[d:]    # w(r_i)/w(r_{i+d}), r/s < 1
        dn = v[d:] / v[:-d]
        for arr, pair in ((up, lambda i: (r[i], r[i + d])), (dn, lambda i: (r[i + d], r[i]))):
            i = int(np.argmax(arr))
            if arr[i] > best:
                best, wit = float(arr[i]), tuple(float(x) for x in pair(i))
    return ClassReport(best <= bound, best, wit, "doubling")


def _sup_ratio_later_over_earlier(v: np.ndarray, r: np.ndarray) -> tuple[float, tuple]:
    """sup_{i <= j} v_j / v_i with its witness (r_i, r_j)."""
    run_min = np.minimum.accumulate(v)
    arg_min = np.zeros(v.size, dtype=int)
    cur = 0
    for j in range(v.size):
        if v[j] < v[cur]:
            cur = j
        arg_min[j] = cur
    ratio = v / run_min
    j = int(np.argmax(ratio))
    return float(ratio[j]), (float(r[arg_min[j]]), float(r[j]))


def check_almost_decreasing(w, probe: RadiusGrid,
                            bound: float = ALMOST_MONOTONE_BOUND) -> ClassReport:
    """sup_{r <= s} w(s)/w(r); 1 means exactly non-increasing."""
    r = _nodes(probe)
    c, wit = _sup_ratio_later_over_earlier(np.asarray(w(r), dtype=float), r)
    return ClassReport(c <= bound, c, wit, "almost decreasing")


def check_almost_increasing(w, probe: RadiusGrid,
                            bound: float = ALMOST_MONOTONE_BOUND) -> ClassReport:
    """sup_{r <= s} w(r)/w(s)."""
    r = _nodes(probe)
    v = 1.0 / np.asarray(w(r), dtype=float)
    c, wit = _sup_ratio_later_over_earlier(v, r)
    return ClassReport(c <= bound, c, wit, "almost increasing")


def check_W_star(w: Weight, probe: RadiusGrid, bound: float = W_STAR_BOUND) -> ClassReport:
    """sup_r (int_r^inf w dt/t) / w(r)."""
    r = _nodes(probe)
    ints = integral_to_infinity(w, r, 1.0)
    ratio = ints / np.asarray(w(r), dtype=float)
    i = int(np.argmax(ratio))
    c = float(ratio[i])
    return ClassReport(bool(np.isfinite(c) and c <= bound), c, (float(r[i]),), "W*")


def check_membership_Wu(w: Weight, u: float, probe: RadiusGrid) -> ClassReport:
    """||w||_{L^u([1, inf), dr/r)}; sup over probe nodes >= 1 when u is infinite."""
    if not u > 0:
        raise ValueError("u must be positive")
    r = _nodes(probe)
    if math.isinf(u):
        a, b = w.decay()
        if a < 0 or (a == 0 and b > 0):
            return ClassReport(False, math.inf, (), "W^inf: unbounded tail")
        rr = np.concatenate([[1.0], r[r >= 1]])
        v = np.asarray(w(rr), dtype=float)
        i = int(np.argmax(v))
        return ClassReport(True, float(v[i]), (float(rr[i]),), "W^inf")
    total = float(integral_to_infinity(w, np.array([1.0, max(2.0, r[-1])]), u)[0])
    val = total ** (1 / u)
    return ClassReport(bool(np.isfinite(val)), val, (1.0,), f"W^{u:g}")


def check_theta_class(theta: ThetaFunction, probe: RadiusGrid, eps_pair=None,
                      bound: float = THETA_BOUND) -> ClassReport:
    """Smallest C with Theta(tr)/Theta(r) <= C max(t^e, t^e') over probe pairs.

    (e, e') is searched over the lattice 0.05..0.95 unless given."""
    r = _nodes(probe)
    v = np.asarray(theta(r), dtype=float)
    n = r.size
    d = np.arange(-(n - 1), n)
    worst = np.empty(d.size)
    arg = np.empty(d.size, dtype=int)
    for k, dd in enumerate(d):
        if dd >= 0:
            ratio = v[dd:] / v[:n - dd]
        else:
            ratio = v[:n + dd] / v[-dd:]
        j = int(np.argmax(ratio))
        worst[k], arg[k] = ratio[j], (j if dd >= 0 else j - dd)
    logt = d * probe.dlog
    pairs = [eps_pair] if eps_pair is not None else [
        (a, b) for a in EPS_LATTICE for b in EPS_LATTICE if a <= b]
    # smallest C; ties go to the narrowest pair
    best = (math.inf, math.inf, None, None)
    for e0, e1 in pairs:
        denom = np.exp(np.maximum(e0 * logt, e1 * logt))
        c = worst / denom
        k = int(np.argmax(c))
        key = (round(float(c[k]), 12), e1 - e0)
        if key < best[:2]:
            best = (*key, (e0, e1), k)
    _, _, eps, k = best
    c = float(worst[k] / math.exp(max(eps[0] * logt[k], eps[1] * logt[k])))
    i = int(arg[k])
    t = float(math.exp(logt[k]))
    ends = _theta_end_exponents(theta)
    if ends is not None and not all(0 < e < 1 for e in ends):
        # a finite probe cannot tell theta=1 from theta=0.99; the declared exponents can
        return ClassReport(False, c, (float(r[i]), t), f"end exponents {ends} not in (0,1)")
    return ClassReport(c <= bound, c, (float(r[i]), t), f"eps={eps}")


def _theta_end_exponents(theta) -> tuple | None:
    try:
        return (theta.exponent_at_zero()[0], theta.exponent_at_infinity()[0])
    except (NotImplementedError, AttributeError):
        return None


def certify_ratio_almost_increasing(w0: Weight, w1: Weight, probe: RadiusGrid,
                                    bound: float = ALMOST_MONOTONE_BOUND) -> ClassReport:
    """Find eps on the lattice with (w0/w1) r^-eps almost increasing."""
    best = None
    for eps in EPS_LATTICE:
        rep = check_almost_increasing(lambda r, e=eps: w0(r) / w1(r) * np.asarray(r) ** -e,
                                      probe, bound)
        if rep.verdict:
            return ClassReport(True, rep.constant, rep.witness, f"eps={eps}")
        if best is None or rep.constant < best.constant:
            best = rep
    return ClassReport(False, best.constant, best.witness, "no eps on lattice")
