from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.bwu_norms import BwuSpec, bwu_norm
from bwulab.decompose import decompose
from bwulab.grid import STANDARD_WINDOW, RadiusGrid, make_grid_function
from bwulab.interpolate import (CoupleSpec, HypothesisError, interpolation_norm,
                                k_functional_upper, sandwich_check)
from bwulab.local_norms import SpaceSpec
from bwulab.weights import MaxPowersTheta, PowerTheta, PowerWeight

H = 1 / 32
LP1 = SpaceSpec("Lp", p=1)
WINDOW = RadiusGrid.from_window(1 / 16, 4.0, 2 ** 0.5)
T_NODES = np.exp2(np.arange(-6.0, 6.5, 0.5))
CORPUS = {
    "indicator": ("indicator_cube", [1.0]),
    "bump": ("bump", [1.5, 2.0]),
    "sine": ("sine", [3.0, 3.0]),
    "random": ("random_field", [2.0]),
}
funcs = st.sampled_from(sorted(CORPUS))


def _f(name, h=H, R=4.0):
    cat, params = CORPUS[name]
    return make_grid_function(cat, params, 1, h, R, seed=9)


def _couple(s0, s1, u0=math.inf, u1=math.inf, E=LP1, radii=WINDOW, hom=True):
    return CoupleSpec(BwuSpec(E, PowerWeight(s0), u0, hom, radii),
                      BwuSpec(E, PowerWeight(s1), u1, hom, radii))


@given(funcs, st.sampled_from([0.5, 1.0]), st.sampled_from([1.0, math.inf]))
def test_degenerate_couple_profile(name, sigma, u):
    f = _f(name)
    A = BwuSpec(LP1, PowerWeight(sigma), u, True, WINDOW)
    prof = k_functional_upper(f, CoupleSpec(A, A), T_NODES)
    assert np.allclose(prof.K, np.minimum(1, T_NODES) * bwu_norm(f, A), rtol=1e-12, atol=0)


def test_degenerate_couple_interpolation_norm():
    f = _f("bump")
    A = BwuSpec(LP1, PowerWeight(1.0), math.inf, True, WINDOW)
    th = PowerTheta(0.5)
    val = interpolation_norm(f, CoupleSpec(A, A), th, 2.0, t_nodes=T_NODES)
    dl = np.full(T_NODES.size, math.log(2) / 2)
    direct = bwu_norm(f, A) * math.sqrt(np.sum((th(1 / T_NODES) * np.minimum(1, T_NODES)) ** 2 * dl))
    assert val == pytest.approx(direct, rel=1e-12)


@given(funcs)
def test_zero_function_profile(name):
    f = _f(name)
    z = f.with_samples(np.zeros_like(f.samples))
    c = _couple(1.0, 0.25)
    assert not np.any(k_functional_upper(z, c).K)
    assert interpolation_norm(z, c, PowerTheta(0.5), math.inf) == 0.0


def test_profile_matches_independent_family_min():
    f = make_grid_function("indicator_cube", [1.0], 1, H, 4.0)
    c = _couple(2.0, 1.0)
    prof = k_functional_upper(f, c)
    pairs = [(bwu_norm(f, c.A0), 0.0), (0.0, bwu_norm(f, c.A1))]
    for r in np.unique(WINDOW.aligned(H)):
        d = decompose(f, float(r), LP1)
        pairs.append((bwu_norm(d.f0, c.A0), bwu_norm(d.f1, c.A1)))
        pairs.append((bwu_norm(d.f1, c.A0), bwu_norm(d.f0, c.A1)))
    for t, K in zip(prof.t, prof.K):
        assert K == min(a + t * b for a, b in pairs)


@given(funcs, st.sampled_from([(1.0, 0.25), (2.0, 0.5), (0.5, 1.5)]))
def test_profile_concave_and_nondecreasing(name, sig):
    f = _f(name)
    prof = k_functional_upper(f, _couple(*sig), T_NODES)
    t, K = prof.t, prof.K
    assert np.all(np.diff(K) >= -1e-12 * K.max())
    lam = (t[1:-1] - t[:-2]) / (t[2:] - t[:-2])
    chord = (1 - lam) * K[:-2] + lam * K[2:]
    assert np.all(K[1:-1] >= chord - 1e-9 * max(1.0, K.max()))


@given(funcs, st.sampled_from([(1.0, 0.25), (2.0, 0.5)]))
def test_swap_symmetry(name, sig):
    f = _f(name)
    c = _couple(*sig)
    a = k_functional_upper(f, c.swapped(), T_NODES)
    b = k_functional_upper(f, c, 1 / T_NODES)
    assert np.allclose(a.K, T_NODES * b.K, rtol=1e-9, atol=0)


@given(funcs, st.floats(0.0, 1.0))
def test_monotone_in_f(name, s):
    g = _f(name)
    f = g.with_samples(s * g.samples * np.cos(7 * g.centers()))
    c = _couple(1.0, 0.25, 1.0, 1.0)
    kf = k_functional_upper(f, c, T_NODES).K
    kg = k_functional_upper(g, c, T_NODES).K
    assert np.all(kf <= kg * (1 + 1e-12) + 1e-300)


@given(funcs, st.sampled_from([PowerTheta(0.5), MaxPowersTheta(0.25, 0.75)]),
       st.sampled_from([2.0, math.inf]))
def test_nonhomogeneous_below_homogeneous(name, th, u):
    f = _f(name)
    c = _couple(1.0, 0.25)
    prof = k_functional_upper(f, c, T_NODES)
    lo = interpolation_norm(f, c, th, u, nonhomogeneous=True, profile=prof)
    hi = interpolation_norm(f, c, th, u, profile=prof)
    assert lo <= hi * (1 + 1e-12)


def test_refine_never_increases():
    f = _f("sine")
    c = _couple(1.0, 0.25, 1.0, 1.0)
    a = k_functional_upper(f, c, T_NODES)
    b = k_functional_upper(f, c, T_NODES, refine=True)
    assert np.all(b.K <= a.K)


@given(funcs)
def test_interpolation_norm_homogeneous_in_f(name):
    f = _f(name)
    c = _couple(1.0, 0.25)
    g = f.with_samples(2 * f.samples)
    th = PowerTheta(0.5)
    assert interpolation_norm(g, c, th, 2.0) == pytest.approx(2 * interpolation_norm(f, c, th, 2.0),
                                                             rel=1e-12)


def test_power_corollary_needs_swap_and_is_finite():
    f = _f("bump")
    res = sandwich_check(f, _couple(2.0, 0.5), PowerTheta(0.5), math.inf)
    assert res.swapped
    assert 0 < res.lower_C < math.inf and 0 < res.upper_C < math.inf


def test_sandwich_scale_invariant():
    f = _f("random")
    c = _couple(1.0, 0.25)
    a = sandwich_check(f, c, PowerTheta(0.5), math.inf)
    b = sandwich_check(f.with_samples(2 * f.samples), c, PowerTheta(0.5), math.inf)
    assert b.lower_C == pytest.approx(a.lower_C, rel=1e-12)
    assert b.upper_C == pytest.approx(a.upper_C, rel=1e-12)


@pytest.mark.slow
def test_sandwich_refinement_stable():
    th = PowerTheta(0.5)

    def consts(h, radii):
        f = make_grid_function("indicator_cube", [1.0], 1, h, 8.0)
        return tuple(sandwich_check(f, _couple(1.0, 0.25, radii=radii), th, math.inf))

    base = consts(1 / 32, STANDARD_WINDOW)
    for other in (consts(1 / 64, STANDARD_WINDOW), consts(1 / 32, STANDARD_WINDOW.refine())):
        for a, b in zip(base, other):
            assert abs(b / a - 1) <= 0.2


def test_refuses_theta_outside_class():
    f = _f("bump")
    with pytest.raises(HypothesisError):
        sandwich_check(f, _couple(1.0, 0.25), PowerTheta(1.5), math.inf)


def test_refuses_weight_without_w_star():
    f = _f("bump")
    with pytest.raises(HypothesisError, match="W\\*"):
        sandwich_check(f, _couple(2.0, 0.0, 2.0, 2.0), PowerTheta(0.5), 2.0)


def test_couple_must_share_space():
    with pytest.raises(ValueError):
        CoupleSpec(BwuSpec(LP1, PowerWeight(1.0), 1.0, True, WINDOW),
                   BwuSpec(SpaceSpec("Lp", p=2), PowerWeight(1.0), 1.0, True, WINDOW))
