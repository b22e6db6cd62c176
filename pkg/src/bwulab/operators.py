"""Maximal, fractional and singular integral operators on grids, and boundedness tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import integrate, ndimage, signal

from .bwu_norms import BwuSpec, bwu_norm
from .grid import GridFunction, RadiusGrid
from .local_norms import CubeSums
from .weights import CompositeWeight, PowerWeight, check_theta_class


class OperatorHypothesisError(ValueError):
    """The parameter tuple violates a boundedness hypothesis."""


@dataclass(frozen=True)
class KernelSpec:
    """hilbert_1d: K(x, y) = 1/(x - y). riesz_like: Omega(z/|z|)/|z|^n with Omega odd;
    omega='sign' is sign(z_1) (piecewise constant), omega='cos' is z_1/|z| (smooth)."""

    kind: str
    kappa: float | None = 1.0
    omega: str = "sign"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hilbert_1d", "riesz_like"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.omega not in ("sign", "cos"):
            raise ValueError("omega must be 'sign' or 'cos'")
        if self.kind == "riesz_like" and self.omega == "sign" and self.kappa is not None:
            # a jump in Omega breaks the Hoelder regularity condition
            object.__setattr__(self, "kappa", None)

    @property
    def size_constant(self) -> float:
        return 1.0

    def values(self, z: tuple[np.ndarray, ...]) -> np.ndarray:
        """K as a function of z = x - y (0 where z = 0)."""
        if self.kind == "hilbert_1d":
            if len(z) != 1:
                raise ValueError("hilbert_1d is one-dimensional")
            d = z[0]
            with np.errstate(divide="ignore"):
                return np.where(d == 0, 0.0, 1.0 / np.where(d == 0, 1.0, d))
        n = len(z)
        rad = np.sqrt(sum(c * c for c in z))
        safe = np.where(rad == 0, 1.0, rad)
        om = np.sign(z[0]) if self.omega == "sign" else z[0] / safe
        return np.where(rad == 0, 0.0, om / safe ** n)


HILBERT = KernelSpec("hilbert_1d")


# --- maximal ------------------------------------------------------------------

def _block_value(S: float, m: int, h: float, n: int, alpha: float) -> float:
    """|Q|^(alpha/n - 1) * integral over a block of m cells per side with sample sum S."""
    return S * h ** n * (m * h) ** (alpha - n)


# small grids get correctly rounded block sums, so results are reproducible bit for bit
EXACT_SUM_CELLS = 256


def _exact_block_sums(a: np.ndarray, m: int) -> np.ndarray:
    w = sliding_window_view(a, (m,) * a.ndim)
    flat = w.reshape(w.shape[:a.ndim] + (-1,))
    return np.apply_along_axis(math.fsum, -1, flat)


def maximal(f: GridFunction, alpha: float = 0.0) -> GridFunction:
    """sup over aligned cubes Q containing each cell of |Q|^(alpha/n - 1) int_Q |f|.

    Every side length 1..N and every aligned position is searched."""
    n = f.dim
    if not 0 <= alpha < n:
        raise ValueError(f"alpha must lie in [0, {n})")
    N = f.n
    a = np.abs(f.samples)
    sums = None if a.size <= EXACT_SUM_CELLS else CubeSums(a)
    out = np.zeros(f.samples.shape)
    for m in range(1, N + 1):
        S = _exact_block_sums(a, m) if sums is None else np.asarray(sums.block_sums(m), dtype=float)
        V = S * f.h ** n * (m * f.h) ** (alpha - n)
        # cell i is covered by blocks starting in [i-m+1, i]
        P = np.pad(V, m - 1, mode="constant", constant_values=-np.inf)
        filt = ndimage.maximum_filter(P, size=m, mode="constant", cval=-np.inf)
        sl = tuple(slice(m // 2, m // 2 + N) for _ in range(n))
        np.maximum(out, filt[sl], out=out)
    return f.with_samples(out, f"M{alpha:g}[{f.label}]")


# --- fractional integral ------------------------------------------------------

def in_cell_integral(alpha: float, h: float, dim: int) -> float:
    """int over the cell [-h/2, h/2]^n of |y|^(alpha - n) dy."""
    if dim == 1:
        return 2.0 * (h / 2) ** alpha / alpha
    ang, _ = integrate.quad(lambda t: math.cos(t) ** -alpha, 0.0, math.pi / 4)
    return 8.0 / alpha * (h / 2) ** alpha * ang


def _offsets(N: int, dim: int, h: float) -> tuple[np.ndarray, ...]:
    d = np.arange(-(N - 1), N) * h
    if dim == 1:
        return (d,)
    return tuple(np.meshgrid(d, d, indexing="ij"))


def _convolve_same(g: np.ndarray, kern: np.ndarray, N: int) -> np.ndarray:
    """out_i = sum_j g_j kern[i - j + N - 1] for i over the central N cells of g."""
    M = g.shape[0]
    start = (kern.shape[0] - 1) // 2 + (M - N) // 2
    if g.ndim == 1:
        return np.convolve(g, kern)[start: start + N]
    s = slice(start, start + N)
    return signal.fftconvolve(g, kern)[s, s]


def _frac_kernel(alpha: float, h: float, dim: int, N: int) -> np.ndarray:
    z = _offsets(N, dim, h)
    rad = np.sqrt(sum(c * c for c in z))
    with np.errstate(divide="ignore"):
        k = np.where(rad == 0, 0.0, np.where(rad == 0, 1.0, rad) ** (alpha - dim)) * h ** dim
    k[(N - 1,) * dim] = in_cell_integral(alpha, h, dim)
    return k


def _check_alpha(alpha: float, dim: int) -> None:
    if not 0 < alpha < dim:
        raise ValueError(f"alpha must lie in (0, {dim})")


def fractional_integral(f: GridFunction, alpha: float) -> GridFunction:
    """Midpoint convolution with |x-y|^(alpha-n), diagonal cell replaced by its exact integral."""
    _check_alpha(alpha, f.dim)
    k = _frac_kernel(alpha, f.h, f.dim, f.n)
    out = _convolve_same(f.samples, k, f.n)
    return f.with_samples(out, f"I{alpha:g}[{f.label}]")


def _cell_centres_flat(f: GridFunction) -> tuple[np.ndarray, ...]:
    return tuple(c.ravel() for c in f.coords())


def fractional_integral_at(f: GridFunction, alpha: float, points) -> np.ndarray:
    """I_alpha f at arbitrary points; a point on a cell centre gets the in-cell integral."""
    _check_alpha(alpha, f.dim)
    pts = np.atleast_2d(np.asarray(points, dtype=float).reshape(-1, f.dim))
    ys = _cell_centres_flat(f)
    v = f.samples.ravel()
    out = np.empty(pts.shape[0])
    for i, x in enumerate(pts):
        rad = np.sqrt(sum((x[k] - ys[k]) ** 2 for k in range(f.dim)))
        on = rad == 0
        with np.errstate(divide="ignore"):
            terms = np.where(on, 0.0, v * np.where(on, 1.0, rad) ** (alpha - f.dim))
        out[i] = terms.sum() * f.h ** f.dim + v[on].sum() * in_cell_integral(alpha, f.h, f.dim)
    return out


def _pad(f: GridFunction, exterior: float, cells: int) -> np.ndarray:
    if exterior == 0.0 or cells == 0:
        return f.samples
    if f.dim != 1:
        raise NotImplementedError("a non-zero exterior constant is supported in dim 1 only")
    return np.pad(f.samples, cells, mode="constant", constant_values=exterior)


def _outside_unit(f_h: float, M: int, dim: int) -> np.ndarray:
    """1 - chi_1 at the centres of an M-cell grid (M even) with step h."""
    c = (2 * np.arange(M) + 1 - M) * (f_h / 2)
    if dim == 1:
        return (np.abs(c) >= 1).astype(float), (c,)
    X, Y = np.meshgrid(c, c, indexing="ij")
    return (np.maximum(np.abs(X), np.abs(Y)) >= 1).astype(float), (X, Y)


def modified_fractional_integral(f: GridFunction, alpha: float, exterior: float = 0.0,
                                 pad_cells: int | None = None) -> GridFunction:
    """Kernel |x-y|^(alpha-n) - (1 - chi_1(y)) |y|^(alpha-n).

    ``exterior`` is the constant value of f outside the master cube (dim 1); the grid is
    padded by ``pad_cells`` cells of it and the rest is added in closed form."""
    _check_alpha(alpha, f.dim)
    pad = f.n if pad_cells is None else pad_cells
    g = _pad(f, exterior, pad)
    M = g.shape[0]
    k = _frac_kernel(alpha, f.h, f.dim, M)
    main = _convolve_same(g, k, f.n)
    out_mask, ys = _outside_unit(f.h, M, f.dim)
    rad = np.sqrt(sum(c * c for c in ys))
    sub = float(np.sum(g * out_mask * rad ** (alpha - f.dim)) * f.h ** f.dim)
    out = main - sub
    if exterior != 0.0 and f.dim == 1:
        Rp = M * f.h / 2
        x = f.centers()
        out = out + exterior * (2 * Rp ** alpha - (Rp - x) ** alpha - (Rp + x) ** alpha) / alpha
    return f.with_samples(out, f"~I{alpha:g}[{f.label}]")


# --- singular integrals -------------------------------------------------------

def _check_eta(f: GridFunction, eta: float) -> None:
    if eta < f.h / 2 * (1 - 1e-12):
        raise ValueError(f"eta={eta} is below h/2={f.h / 2}")


def _sing_kernel(K: KernelSpec, f: GridFunction, eta: float, N: int) -> np.ndarray:
    z = _offsets(N, f.dim, f.h)
    rad = np.sqrt(sum(c * c for c in z))
    k = K.values(z) * f.h ** f.dim
    return np.where(rad >= eta * (1 - 1e-12), k, 0.0)


def truncated_singular(f: GridFunction, K: KernelSpec, eta: float) -> GridFunction:
    """sum over cells with |x - y| >= eta of K(x, y) f(y) h^n."""
    _check_eta(f, eta)
    k = _sing_kernel(K, f, eta, f.n)
    out = _convolve_same(f.samples, k, f.n)
    return f.with_samples(out, f"T{eta:g}[{f.label}]")


def truncated_singular_at(f: GridFunction, K: KernelSpec, eta: float, points) -> np.ndarray:
    _check_eta(f, eta)
    pts = np.atleast_2d(np.asarray(points, dtype=float).reshape(-1, f.dim))
    ys = _cell_centres_flat(f)
    v = f.samples.ravel()
    out = np.empty(pts.shape[0])
    for i, x in enumerate(pts):
        z = tuple(x[k] - ys[k] for k in range(f.dim))
        rad = np.sqrt(sum(c * c for c in z))
        keep = rad >= eta * (1 - 1e-12)
        out[i] = float(np.sum(np.where(keep, K.values(z) * v, 0.0))) * f.h ** f.dim
    return out


def modified_singular(f: GridFunction, K: KernelSpec, eta: float, exterior: float = 0.0,
                      pad_cells: int | None = None) -> GridFunction:
    """Kernel K(x, y) - K(0, y)(1 - chi_1(y)); only the first term is truncated at eta."""
    _check_eta(f, eta)
    pad = f.n if pad_cells is None else pad_cells
    g = _pad(f, exterior, pad)
    M = g.shape[0]
    k = _sing_kernel(K, f, eta, M)
    main = _convolve_same(g, k, f.n)
    out_mask, ys = _outside_unit(f.h, M, f.dim)
    k0 = K.values(tuple(-c for c in ys))
    sub = float(np.sum(g * out_mask * k0) * f.h ** f.dim)
    out = main - sub
    if exterior != 0.0 and f.dim == 1:
        if K.kind != "hilbert_1d":
            raise NotImplementedError("closed-form exterior only for hilbert_1d")
        Rp = M * f.h / 2
        x = f.centers()
        # |y| > R': int K(x,y) dy = ln((R'-x)/(R'+x)); the subtracted term integrates to 0
        out = out + exterior * np.log((Rp - x) / (Rp + x))
    return f.with_samples(out, f"~T{eta:g}[{f.label}]")


# --- negative fixture -----------------------------------------------------------

def phase_maximal(f: GridFunction, p: float = 2.0) -> np.ndarray:
    """exp(i ||f||_p) Mf: bounded on L^p but violates |Tf - Tg| <= C |T(f - g)|."""
    norm = float(np.sum(np.abs(f.samples) ** p) * f.cell_volume) ** (1 / p)
    return np.exp(1j * norm) * maximal(f).samples


# --- operator registry ------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSpec:
    tag: str
    alpha: float = 0.0
    kernel: KernelSpec = HILBERT
    eta: float | None = None
    exterior: float = 0.0

    def apply(self, f: GridFunction):
        eta = f.h / 2 if self.eta is None else self.eta
        if self.tag == "maximal":
            return maximal(f, self.alpha)
        if self.tag == "fractional_integral":
            return fractional_integral(f, self.alpha)
        if self.tag == "modified_fractional_integral":
            return modified_fractional_integral(f, self.alpha, self.exterior)
        if self.tag == "singular":
            return truncated_singular(f, self.kernel, eta)
        if self.tag == "modified_singular":
            return modified_singular(f, self.kernel, eta, self.exterior)
        if self.tag == "zero":
            return f.with_samples(np.zeros(f.samples.shape), f"0[{f.label}]")
        if self.tag == "phase_maximal":
            return phase_maximal(f)
        raise ValueError(f"unknown operator {self.tag!r}")

    @property
    def linear(self) -> bool:
        return self.tag not in ("maximal", "phase_maximal")


OPERATOR_TAGS = ("maximal", "fractional_integral", "modified_fractional_integral",
                 "singular", "modified_singular", "zero")


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, GridFunction) else np.asarray(x)


@dataclass(frozen=True)
class SublinearityReport:
    passed: bool
    worst_subadd: float
    worst_subdiff: float
    failing_pair: tuple | None


def sublinearity_certificate(op: Callable | OperatorSpec, corpus: Sequence[GridFunction],
                             C: float = 1.0, tol: float = 1e-9) -> SublinearityReport:
    """Check |T(f+g)| <= |Tf| + |Tg| and |Tf - Tg| <= C |T(f-g)| samplewise on all pairs.

    Excess is measured relative to max(|Tf|, |Tg|, 1) at each sample."""
    apply = op.apply if isinstance(op, OperatorSpec) else op
    images = [_samples(apply(f)) for f in corpus]
    worst_a = worst_d = 0.0
    failing = None
    for i in range(len(corpus)):
        for j in range(i + 1, len(corpus)):
            f, g = corpus[i], corpus[j]
            Tf, Tg = images[i], images[j]
            scale = np.maximum(np.maximum(np.abs(Tf), np.abs(Tg)), 1.0)
            Tsum = _samples(apply(f.with_samples(f.samples + g.samples)))
            Tdiff = _samples(apply(f.with_samples(f.samples - g.samples)))
            ex_a = float(np.max((np.abs(Tsum) - np.abs(Tf) - np.abs(Tg)) / scale))
            ex_d = float(np.max((np.abs(Tf - Tg) - C * np.abs(Tdiff)) / scale))
            worst_a, worst_d = max(worst_a, ex_a), max(worst_d, ex_d)
            if failing is None and (ex_a > tol or ex_d > tol):
                failing = (f.label, g.label)
    return SublinearityReport(failing is None, worst_a, worst_d, failing)


# --- hypotheses -----------------------------------------------------------------

def weight_exponents(w) -> tuple[float, float | None]:
    """(sigma, tau) for w = r^-sigma Theta(r^tau) built as composite(power, power, Theta),
    or (sigma, None) for a plain power weight."""
    if isinstance(w, PowerWeight):
        return w.sigma, None
    if isinstance(w, CompositeWeight) and isinstance(w.w0, PowerWeight) \
            and isinstance(w.w1, PowerWeight):
        return w.w0.sigma, w.w0.sigma - w.w1.sigma
    raise OperatorHypothesisError("weight must be power{...} or composite of two power weights")


def _exps(spec: BwuSpec, dim: int) -> tuple[str, float, float, bool]:
    """(family, p, lambda, weak) for the local space of a BwuSpec."""
    E = spec.E
    if E.kind in ("Lp", "WeakLp"):
        return "morrey", E.p, -dim / E.p, E.kind == "WeakLp"
    if E.kind in ("Morrey", "WeakMorrey"):
        return "morrey", E.p, E.lam, E.kind == "WeakMorrey"
    if E.kind in ("Campanato", "BMO"):
        return "campanato", E.p, E.lam, False
    return "lipschitz", 1.0, E.alpha, False


def _need(ok: bool, text: str, certs: list) -> None:
    if not ok:
        raise OperatorHypothesisError(f"hypothesis violated: {text}")
    certs.append(text)


def check_operator_hypotheses(op: OperatorSpec, source: BwuSpec, target: BwuSpec,
                              dim: int = 1) -> list[str]:
    """Check the boundedness theorem matching ``op``; return the satisfied inequalities."""
    certs: list[str] = []
    tol = 1e-12
    if op.tag == "zero":
        return ["zero operator"]
    _need(source.w == target.w and source.u == target.u
          and source.homogeneous == target.homogeneous, "source and target share w, u", certs)
    sigma, tau = weight_exponents(source.w)
    if tau is not None:
        _need(sigma > tau > 0, f"sigma={sigma:g} > tau={tau:g} > 0", certs)
        th = check_theta_class(source.w.theta, RadiusGrid(1e-3, 2 ** 0.25, 81))
        _need(th.verdict, "Theta in the pseudoconcave class", certs)
    fs, p, lam, weak_s = _exps(source, dim)
    ft, q, mu, weak_t = _exps(target, dim)
    _need(not weak_s, "source is a strong space", certs)
    if op.tag in ("maximal", "fractional_integral", "singular"):
        alpha = op.alpha if op.tag != "singular" else 0.0
        _need(fs == "morrey" and ft == "morrey", "Morrey-type source and target", certs)
        _need(-dim / p - tol <= lam < 0, f"lambda={lam:g} in [-n/p, 0)", certs)
        _need(-dim / q - tol <= mu < 0, f"mu={mu:g} in [-n/q, 0)", certs)
        _need(abs(mu - (lam + alpha)) <= 1e-9, f"mu = lambda + alpha ({mu:g} = {lam + alpha:g})",
              certs)
        _need(q <= lam / mu * p + 1e-9, f"q={q:g} <= (lambda/mu) p = {lam / mu * p:g}", certs)
        if p == 1:
            _need(weak_t, "p = 1 requires a weak target", certs)
        if op.tag == "maximal":
            _need(sigma + lam + alpha <= tol, f"sigma+lambda+alpha={sigma + lam + alpha:g} <= 0",
                  certs)
        elif op.tag == "fractional_integral":
            _need(0 < alpha < dim, "alpha in (0, n)", certs)
            _need(sigma + mu < 0, f"sigma+mu={sigma + mu:g} < 0", certs)
        else:
            _need(sigma + lam < 0, f"sigma+lambda={sigma + lam:g} < 0", certs)
        return certs
    if op.tag == "modified_singular":
        kappa = op.kernel.kappa
        _need(kappa is not None, "kernel of type kappa", certs)
        _need(source.E == target.E, "same Campanato-type space", certs)
        if fs == "lipschitz":
            _need(sigma < sigma + lam < kappa, f"sigma < sigma+alpha < kappa", certs)
            return certs
        _need(fs == "campanato", "Campanato-type space", certs)
        if p > 1:
            _need(-dim / p + sigma < kappa, f"-n/p+sigma={-dim / p + sigma:g} < kappa", certs)
            _need(-dim / p - tol <= lam < kappa - sigma, f"lambda={lam:g} in [-n/p, kappa-sigma)",
                  certs)
        else:
            _need(sigma < kappa, "sigma < kappa", certs)
            _need(0 <= lam < kappa - sigma, f"lambda={lam:g} in [0, kappa-sigma)", certs)
        return certs
    if op.tag == "modified_fractional_integral":
        alpha = op.alpha
        _need(0 < alpha < 1, "alpha in (0, 1)", certs)
        _need(fs == "campanato" and ft in ("campanato", "lipschitz"), "Campanato-type spaces",
              certs)
        if ft == "lipschitz":
            q, mu = 1.0, target.E.alpha
        _need(-dim / p - tol <= lam < 1, "lambda in [-n/p, 1)", certs)
        _need(-dim / q - tol <= mu < 1, "mu in [-n/q, 1)", certs)
        _need(abs(mu - (lam + alpha)) <= 1e-9, "mu = lambda + alpha", certs)
        _need(sigma + lam + alpha < 1, f"sigma+lambda+alpha={sigma + lam + alpha:g} < 1", certs)
        n = dim
        if p == 1:
            _need(1 <= q < n / (n - alpha), "(i) p = 1, 1 <= q < n/(n-alpha)", certs)
        elif p < n / alpha:
            _need(1 <= q <= p * n / (n - p * alpha), "(ii) 1 <= q <= pn/(n-p alpha)", certs)
        else:
            _need(q >= 1, "(iii) n/alpha <= p, 1 <= q", certs)
        return certs
    raise OperatorHypothesisError(f"no boundedness theorem for operator {op.tag!r}")


# --- boundedness tables ----------------------------------------------------------

def boundary_mass(f: GridFunction, fraction: float = 0.1) -> bool:
    """True when f has mass within ``fraction`` * R_max of the master-cube boundary."""
    sup = np.max(np.abs(np.stack(f.coords())), axis=0)
    return bool(np.any(f.samples[sup > (1 - fraction) * f.R_max] != 0))


@dataclass(frozen=True)
class OperatorReport:
    rows: tuple
    sup: float
    deltas: dict = field(default_factory=dict)
    certificates: tuple = ()


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _table(op: OperatorSpec, corpus, source: BwuSpec, target: BwuSpec) -> list[dict]:
    rows = []
    for f in corpus:
        Tf = op.apply(f)
        num, den = bwu_norm(Tf, target), bwu_norm(f, source)
        rows.append({"f": f.label, "num": num, "den": den, "ratio": _ratio(num, den),
                     "boundary_mass": boundary_mass(f)})
    return rows


def boundedness_table(op: OperatorSpec, corpus: Sequence[GridFunction], source: BwuSpec,
                      target: BwuSpec, refine: bool = True, check: bool = True) -> OperatorReport:
    """Rows ||Tf||_target / ||f||_source; refinement deltas under h -> h/2 and rho -> sqrt(rho)."""
    dim = corpus[0].dim if corpus else 1
    certs = tuple(check_operator_hypotheses(op, source, target, dim)) if check else ()
    rows = _table(op, corpus, source, target)
    sup = max((r["ratio"] for r in rows), default=0.0)
    deltas = {}
    if refine and sup > 0:
        fine = [f.resample(h=f.h / 2) for f in corpus]
        s_h = max(r["ratio"] for r in _table(op, fine, source, target))
        src_r = replace(source, radii=source.radii.refine())
        tgt_r = replace(target, radii=target.radii.refine())
        s_r = max(r["ratio"] for r in _table(op, corpus, src_r, tgt_r))
        deltas = {"h/2": abs(s_h / sup - 1), "sqrt_rho": abs(s_r / sup - 1),
                  "sup_h/2": s_h, "sup_sqrt_rho": s_r}
    return OperatorReport(tuple(rows), sup, deltas, certs)
