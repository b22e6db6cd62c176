"""Acceptance checks 1-9 at their pinned tolerances."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bwu_norms import BwuSpec, bwu_norm, embedding_ratio
from .decompose import decompose, decomposition_sweep, verify_decomposition
from .grid import STANDARD_WINDOW, GridFunction, RadiusGrid, make_grid_function
from .hardy import (HardyGrid, HardyPair, PowerLaw, hardy_inequality_ratio, indicator,
                    muckenhoupt_condition)
from .harness import make_corpus
from .interpolate import CoupleSpec, k_functional_upper, sandwich_check
from .local_norms import SpaceSpec, local_norms
from .operators import (HILBERT, OperatorSpec, boundedness_table, fractional_integral_at,
                        maximal, modified_fractional_integral, modified_singular,
                        sublinearity_certificate, truncated_singular_at)
from .weights import (CompositeWeight, MaxPowersTheta, MaxPowersWeight, PowerLogWeight,
                      PowerTheta, PowerWeight)

H = 1 / 64
R_MAX = 8.0


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.title}: {self.detail}"


def default_corpus(h: float = H) -> list[GridFunction]:
    return make_corpus("default", 1, h, R_MAX)


def aligned_radii(radii: RadiusGrid, h: float) -> list[float]:
    return [float(r) for r in np.unique(radii.aligned(h))]


# --- 1 ---------------------------------------------------------------------------

def criterion_1(corpus=None) -> CriterionResult:
    corpus = corpus or default_corpus()
    radii = aligned_radii(STANDARD_WINDOW, H)
    red_err = 0.0
    for f in corpus:
        for p in (1.0, 2.0, 3.0):
            mor = local_norms(f, radii, SpaceSpec("Morrey", p=p, lam=-1 / p))
            lp = local_norms(f, radii, SpaceSpec("Lp", p=p))
            ref = 2 ** (-1 / p) * np.asarray(lp)
            red_err = max(red_err, float(np.max(np.abs(mor - ref) / np.maximum(ref, 1e-300))))
    weak_excess = 0.0
    for f in corpus:
        for p in (1.0, 2.0):
            for ws, ss in ((SpaceSpec("WeakLp", p=p), SpaceSpec("Lp", p=p)),
                           (SpaceSpec("WeakMorrey", p=p, lam=-0.5 / p),
                            SpaceSpec("Morrey", p=p, lam=-0.5 / p))):
                wv, sv = local_norms(f, radii, ws), local_norms(f, radii, ss)
                weak_excess = max(weak_excess, float(np.max((wv - sv) / np.maximum(sv, 1e-300))))
    camp_max = 0.0
    for c in (1.0, -2.5, math.pi):
        g = make_grid_function("constant", [c], 1, H, R_MAX)
        for E in (SpaceSpec("Campanato", p=1, lam=0.5), SpaceSpec("Campanato", p=2, lam=-0.25),
                  SpaceSpec("BMO"), SpaceSpec("Lipschitz", alpha=0.5)):
            camp_max = max(camp_max, float(np.max(np.abs(local_norms(g, radii, E)))))
    ok = red_err <= 1e-12 and weak_excess <= 1e-12 and camp_max == 0.0
    return CriterionResult(1, "norm oracles", ok,
                           f"Morrey reduction rel err {red_err:.2e} (<=1e-12), "
                           f"weak-strong excess {weak_excess:.2e} (<=1e-12), "
                           f"Campanato of constants {camp_max!r} (==0)",
                           {"reduction": red_err, "weak_excess": weak_excess, "campanato": camp_max})


# --- 2 ---------------------------------------------------------------------------

def criterion_2() -> CriterionResult:
    chi = make_grid_function("indicator_cube", [1.0], 1, H, R_MAX)
    W = STANDARD_WINDOW
    E = SpaceSpec("Lp", p=1)
    w = PowerWeight(1.0)
    b_inf = bwu_norm(chi, BwuSpec(E, w, math.inf, True, W))
    twin = bwu_norm(chi, BwuSpec(E, w, 1.0, False, W, tail=True))
    slack = 2.0 * W.dlog  # one node of the weighted profile (max value 2)
    tw_ok = abs(twin - 2.0) <= 2 * H + slack
    x = chi.centers()
    m_err = float(np.max(np.abs(maximal(chi).samples - np.minimum(1, 2 / (1 + np.abs(x))))))
    i0 = float(fractional_integral_at(chi, 0.5, [0.0])[0])
    t2 = float(truncated_singular_at(chi, HILBERT, H / 2, [2.0])[0])
    ok = (abs(b_inf - 2) <= 1e-12 and tw_ok and m_err <= H and abs(i0 - 4) <= 3 * H ** 0.5
          and abs(t2 - math.log(3)) <= 5 * H)
    return CriterionResult(2, "closed-form spot values", ok,
                           f"B^inf={b_inf!r}, u=1 twin={twin:.5f} (tol {2 * H + slack:.4f}), "
                           f"|Mchi-min(1,2/(1+|x|))|={m_err:.2e} (<=h), I(0)={i0:.5f} "
                           f"(tol {3 * H ** 0.5:.3f}), T(2)={t2:.6f} vs ln3 (tol {5 * H:.4f})",
                           {"b_inf": b_inf, "twin": twin, "M_err": m_err, "I0": i0, "T2": t2})


# --- 3 ---------------------------------------------------------------------------

def brute_force_maximal(f: GridFunction, alpha: float = 0.0) -> np.ndarray:
    """Exhaustive sup over every aligned cube containing each cell (math.fsum sums)."""
    a = np.abs(f.samples)
    N, n, h = f.n, f.dim, f.h
    out = np.zeros(a.shape)
    for idx in itertools.product(range(N), repeat=n):
        best = -math.inf
        for m in range(1, N + 1):
            starts = [range(max(0, i - m + 1), min(i, N - m) + 1) for i in idx]
            for st in itertools.product(*starts):
                blk = a[tuple(slice(s, s + m) for s in st)]
                best = max(best, math.fsum(blk.ravel()) * h ** n * (m * h) ** (alpha - n))
        out[idx] = best
    return out


def criterion_3(seeds: int = 20) -> CriterionResult:
    mism = 0
    worst = 0.0
    for s in range(seeds):
        dim = 1 if s % 2 == 0 else 2
        R = 2.0 if dim == 1 else 0.25
        alpha = ((0.0, 0.3, 0.7) if dim == 1 else (0.0, 0.5, 1.2))[(s // 2) % 3]
        f = make_grid_function("random_field", [], dim, 1 / 16, R, seed=s + 1)
        got = maximal(f, alpha).samples
        ref = brute_force_maximal(f, alpha)
        diff = float(np.max(np.abs(got - ref)))
        worst = max(worst, diff)
        mism += int(not np.array_equal(got, ref))
    return CriterionResult(3, "maximal operator vs brute force", mism == 0,
                           f"{seeds} seeds on <=64-cell grids, {mism} mismatches, max diff {worst!r}",
                           {"mismatches": mism})


# --- 4 ---------------------------------------------------------------------------

LATTICE_SPACES = (SpaceSpec("Lp", p=1), SpaceSpec("Lp", p=2), SpaceSpec("WeakLp", p=1),
                  SpaceSpec("Morrey", p=2, lam=-0.25), SpaceSpec("Morrey", p=1, lam=-0.5))
CAMPANATO_SPACES = (SpaceSpec("Campanato", p=2, lam=-0.25), SpaceSpec("BMO"),
                    SpaceSpec("Lipschitz", alpha=0.5))


def criterion_4(corpus=None) -> CriterionResult:
    corpus = corpus or default_corpus()
    W = STANDARD_WINDOW
    splits = aligned_radii(W, H)
    lat_err = 0.0
    for f in corpus:
        for E in LATTICE_SPACES:
            # the constant is uniform in r: sup of the observed ratios over all splits
            cs = [verify_decomposition(f, decompose(f, r, E), E, W) for r in splits]
            c0, c1 = max(c[0] for c in cs), max(c[1] for c in cs)
            lat_err = max(lat_err, abs(c0 - 1), abs(c1 - 1))
    c_sup, var_sup, vanish_bad = 1.0, 1.0, 0
    for f in corpus:
        for E in CAMPANATO_SPACES:
            sw = decomposition_sweep(f, E, W)
            cs = [max(c) for c in sw["per_r"].values()]
            c_sup = max(c_sup, max(cs))
            var_sup = max([var_sup] + [max(a / b, b / a) for a, b in zip(cs, cs[1:])])
    for f in corpus:
        for r in splits:
            if 2 * r > R_MAX:
                continue
            dec = decompose(f, r, CAMPANATO_SPACES[0])
            ts = [t for t in splits if t < r]
            for E in CAMPANATO_SPACES:
                if ts:
                    vanish_bad += int(np.count_nonzero(local_norms(dec.f1, ts, E)))
    ok = lat_err <= 1e-12 and c_sup <= 10 and var_sup <= 2 and vanish_bad == 0
    return CriterionResult(4, "decomposition property", ok,
                           f"lattice |C-1| {lat_err:.2e} (<=1e-12), Campanato sup C {c_sup:.4f} "
                           f"(<=10), r-variation {var_sup:.4f} (<=2), nonzero f1 norms for t<r: "
                           f"{vanish_bad}",
                           {"lattice": lat_err, "C_sup": c_sup, "variation": var_sup})


# --- 5 ---------------------------------------------------------------------------

EMBED_WEIGHTS = (PowerWeight(1.0), PowerLogWeight(1.0, 0.0, 1.0), MaxPowersWeight(0.5, 1.5))


def criterion_5(corpus=None) -> CriterionResult:
    corpus = corpus or default_corpus()
    W, Wf = STANDARD_WINDOW, STANDARD_WINDOW.refine()
    E = SpaceSpec("Lp", p=1)
    worst_delta, C = 0.0, 0.0
    for w in EMBED_WEIGHTS:
        for f in corpus:
            for u0, u1 in ((1.0, 2.0), (2.0, math.inf)):
                a = embedding_ratio(f, E, w, u0, u1, W)
                b = embedding_ratio(f, E, w, u0, u1, Wf)
                C = max(C, a, b)
                worst_delta = max(worst_delta, abs(b / a - 1))
    ok = math.isfinite(C) and worst_delta <= 0.2
    return CriterionResult(5, "embedding ratios", ok,
                           f"3 weights x {len(corpus)} functions, recorded C {C:.4f}, "
                           f"worst change under sqrt(rho) {worst_delta:.4f} (<=0.2)",
                           {"C": C, "delta": worst_delta})


# --- 6 ---------------------------------------------------------------------------

def sandwich_tuples(W: RadiusGrid):
    E = SpaceSpec("Lp", p=1)

    def tup(w0, w1, th, u, u0=math.inf, u1=math.inf):
        return CoupleSpec(BwuSpec(E, w0, u0, True, W), BwuSpec(E, w1, u1, True, W)), th, u
    return [tup(PowerWeight(2), PowerWeight(0.5), PowerTheta(0.5), math.inf),
            tup(PowerWeight(2), PowerWeight(0.5), MaxPowersTheta(0.25, 0.75), math.inf),
            tup(PowerLogWeight(2, 0, 1), PowerWeight(0.5), PowerTheta(0.5), 2.0, 2.0, 2.0),
            tup(PowerWeight(2), PowerWeight(0.5), MaxPowersTheta(0.25, 0.75), 2.0, 2.0, 2.0)]


def criterion_6(corpus=None) -> CriterionResult:
    corpus = corpus or default_corpus()
    fine = default_corpus(H / 2)
    W = STANDARD_WINDOW
    finite, scale_err, d_h, d_r = True, 0.0, 0.0, 0.0
    base_t, fine_t = sandwich_tuples(W), sandwich_tuples(W.refine())
    for (c, th, u), (cr, _, _) in zip(base_t, fine_t):
        for f, ff in zip(corpus, fine):
            lo, up = sandwich_check(f, c, th, u)
            finite &= math.isfinite(lo) and math.isfinite(up) and lo > 0 and up > 0
            s_lo, s_up = sandwich_check(f.with_samples(3.0 * f.samples), c, th, u)
            scale_err = max(scale_err, abs(s_lo / lo - 1), abs(s_up / up - 1))
            h_lo, h_up = sandwich_check(ff, c, th, u)
            r_lo, r_up = sandwich_check(f, cr, th, u)
            d_h = max(d_h, abs(h_lo / lo - 1), abs(h_up / up - 1))
            d_r = max(d_r, abs(r_lo / lo - 1), abs(r_up / up - 1))
    # degenerate couple A0 = A1
    A = BwuSpec(SpaceSpec("Lp", p=1), PowerWeight(1.0), math.inf, True, W)
    t = 2.0 ** np.arange(-4, 5)
    deg = 0.0
    for f in corpus:
        prof = k_functional_upper(f, CoupleSpec(A, A), t_nodes=t)
        ref = np.minimum(1, t) * bwu_norm(f, A)
        deg = max(deg, float(np.max(np.abs(prof.K - ref) / ref)))
    ok = finite and scale_err <= 1e-12 and d_h <= 0.2 and d_r <= 0.2 and deg <= 1e-12
    return CriterionResult(6, "interpolation sandwich", ok,
                           f"4 tuples finite={finite}, scale err {scale_err:.2e} (<=1e-12), "
                           f"h/2 change {d_h:.4f}, sqrt(rho) change {d_r:.4f} (<=0.2), "
                           f"degenerate K rel err {deg:.2e}",
                           {"scale": scale_err, "d_h": d_h, "d_rho": d_r, "degenerate": deg})


# --- 7 ---------------------------------------------------------------------------

HARDY_TESTS = ((1, 2), (0.25, 0.5), (2, 8), (0.0625, 16), (4, 5))


def criterion_7() -> CriterionResult:
    W = RadiusGrid.from_window(1 / 64, 64, 2 ** 0.25)
    model = HardyPair(PowerLaw(1, -1), PowerLaw(1, 0), 2.0)
    cond = muckenhoupt_condition(model, W)
    g = HardyGrid(1 / 64, 64)
    tests = [indicator(a, b) for a, b in HARDY_TESTS]
    tests += [lambda t: np.exp(-t), lambda t: t ** -0.25 * (t < 4)]
    worst = max(hardy_inequality_ratio(model, f, g) for f in tests)
    div = HardyPair(PowerLaw(), PowerLaw(), 2.0)
    growth = (hardy_inequality_ratio(div, indicator(1, 2), HardyGrid(1 / 64, 160))
              / hardy_inequality_ratio(div, indicator(1, 2), HardyGrid(1 / 64, 16)))
    ok = abs(cond - 1) <= 1e-9 and worst <= 4 * cond and growth >= 2 \
        and math.isinf(muckenhoupt_condition(div, W))
    return CriterionResult(7, "Muckenhoupt", ok,
                           f"condition {cond!r} (=1), worst ratio {worst:.4f} (<=4 x condition), "
                           f"divergent growth x{growth:.3f} (>=2)",
                           {"condition": cond, "worst": worst, "growth": growth})


# --- 8 ---------------------------------------------------------------------------

def composite(sigma: float, tau: float, theta: float = 0.5) -> CompositeWeight:
    """r^-sigma Theta(r^tau) as w0 Theta(w1/w0) with power weights."""
    return CompositeWeight(PowerWeight(sigma), PowerWeight(sigma - tau), PowerTheta(theta))


def operator_tuples(W: RadiusGrid):
    mor = SpaceSpec("Morrey", p=2, lam=-0.25)
    u = 2.0

    def b(E, w):
        return BwuSpec(E, w, u, True, W)
    w25, w20 = composite(0.25, 0.1), composite(0.2, 0.1)
    return [
        ("M, sigma+lambda+alpha=0", OperatorSpec("maximal"), b(mor, w25), b(mor, w25)),
        ("M, sigma=0.2", OperatorSpec("maximal"), b(mor, w20), b(mor, w20)),
        ("I_0.25, sigma+mu<0", OperatorSpec("fractional_integral", alpha=0.25),
         b(SpaceSpec("Lp", p=2), w20), b(mor, w20)),
        ("T Hilbert", OperatorSpec("singular"), b(mor, w20), b(mor, w20)),
        ("~T Hilbert on Campanato", OperatorSpec("modified_singular"),
         b(SpaceSpec("Campanato", p=2, lam=-0.25), w20),
         b(SpaceSpec("Campanato", p=2, lam=-0.25), w20)),
        ("~I_0.25 on Campanato", OperatorSpec("modified_fractional_integral", alpha=0.25),
         b(SpaceSpec("Campanato", p=2, lam=-0.5), w20),
         b(SpaceSpec("Campanato", p=2, lam=-0.25), w20)),
    ]


def criterion_8(corpus=None) -> CriterionResult:
    corpus = corpus or default_corpus()
    W = STANDARD_WINDOW
    parts, ok = [], True
    for name, op, src, tgt in operator_tuples(W):
        rep = boundedness_table(op, corpus, src, tgt)
        d = max(rep.deltas["h/2"], rep.deltas["sqrt_rho"])
        good = math.isfinite(rep.sup) and d <= 0.2
        ok &= good
        parts.append(f"{name}: sup {rep.sup:.4f} delta {d:.4f}")
    # weak <= strong
    _, op, src, tgt = operator_tuples(W)[0]
    weak_tgt = replace(tgt, E=SpaceSpec("WeakMorrey", p=2, lam=-0.25))
    strong = boundedness_table(op, corpus, src, tgt, refine=False)
    weak = boundedness_table(op, corpus, src, weak_tgt, refine=False)
    excess = max(a["ratio"] - b["ratio"] for a, b in zip(weak.rows, strong.rows))
    ok &= excess <= 1e-12
    # modified operators on the constant 1
    one = make_grid_function("constant", [1.0], 1, H, R_MAX)
    inner = np.abs(one.centers()) <= R_MAX / 2
    t1 = modified_singular(one, HILBERT, H / 2, exterior=1.0).samples[inner]
    i1 = modified_fractional_integral(one, 0.5, exterior=1.0).samples[inner]
    t_ok = float(np.max(np.abs(t1))) < 1e-6 and float(np.var(t1)) < 1e-6
    i_rel = float(np.var(i1)) / float(np.mean(i1)) ** 2
    ok &= t_ok and i_rel < 1e-6
    return CriterionResult(8, "operator boundedness", bool(ok),
                           "; ".join(parts) + f"; weak-strong excess {excess:.2e}; "
                           f"max|~T1| {np.max(np.abs(t1)):.2e}; var(~I1)/mean^2 {i_rel:.2e}",
                           {"weak_excess": excess, "T1": float(np.max(np.abs(t1))), "I1": i_rel})


# --- 9 ---------------------------------------------------------------------------

def criterion_9(corpus=None) -> CriterionResult:
    corpus = (corpus or default_corpus())[:6]
    neg = sublinearity_certificate(OperatorSpec("phase_maximal"), corpus)
    pos = sublinearity_certificate(OperatorSpec("maximal"), corpus)
    ok = (not neg.passed) and pos.passed
    return CriterionResult(9, "negative fixture", ok,
                           f"phase-maximal certificate passed={neg.passed} (must fail, pair "
                           f"{neg.failing_pair}, excess {neg.worst_subdiff:.3f}); "
                           f"maximal certificate passed={pos.passed}",
                           {"excess": neg.worst_subdiff})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9)


def run_suite(quick: bool = False) -> list[CriterionResult]:
    corpus = default_corpus()
    out = []
    for fn in CRITERIA:
        if fn is criterion_3:
            out.append(fn(4 if quick else 20))
        elif fn in (criterion_2, criterion_7):
            out.append(fn())
        else:
            out.append(fn(corpus))
    return out
