from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.bwu_norms import (BwuSpec, bwu_norm, change_of_variable_check, embedding_ratio,
                              embedding_ratio_table, lu_norm, monotone_surrogate)
from bwulab.grid import STANDARD_WINDOW, RadiusGrid, make_grid_function
from bwulab.local_norms import SpaceSpec, local_norm
from bwulab.weights import PowerLogWeight, PowerWeight, ScaledWeight

H = 1 / 32
LP1 = SpaceSpec("Lp", p=1)
SPACES = [LP1, SpaceSpec("Lp", p=2), SpaceSpec("Morrey", p=2, lam=-0.25),
          SpaceSpec("Campanato", p=2, lam=-0.25), SpaceSpec("WeakLp", p=1)]
WEIGHTS = [PowerWeight(0.5), PowerWeight(1.0), PowerLogWeight(1.0, 0.0, 1.0)]
CORPUS = {
    "indicator": ("indicator_cube", [1.0]),
    "bump": ("bump", [1.5, 2.0]),
    "sine": ("sine", [3.0, 4.0]),
    "random": ("random_field", [2.0]),
}


def _f(name, h=H):
    cat, params = CORPUS[name]
    return make_grid_function(cat, params, 1, h, 8.0, seed=11)


funcs = st.sampled_from(sorted(CORPUS))
spaces = st.sampled_from(SPACES)
weights = st.sampled_from(WEIGHTS)
us = st.sampled_from([0.5, 1.0, 2.0, math.inf])


def test_indicator_sup_norm_is_two():
    f = make_grid_function("indicator_cube", [1.0], 1, 1 / 64, 8.0)
    spec = BwuSpec(LP1, PowerWeight(1.0), math.inf, False, STANDARD_WINDOW)
    assert bwu_norm(f, spec) == pytest.approx(2.0, rel=1e-12)


def test_indicator_l1_with_tail_near_two():
    f = make_grid_function("indicator_cube", [1.0], 1, 1 / 64, 8.0)
    spec = BwuSpec(LP1, PowerWeight(1.0), 1.0, False, STANDARD_WINDOW, tail=True)
    v = bwu_norm(f, spec)
    # left-point quadrature of 2/r against dr/r overshoots by ln(rho)/(1 - 1/rho) at most
    assert 2.0 <= v <= 2.0 * STANDARD_WINDOW.dlog / (1 - 1 / STANDARD_WINDOW.rho) + 1e-12


@given(spaces, weights, us, st.booleans())
def test_zero_function(E, w, u, hom):
    f = make_grid_function("constant", [0.0], 1, H, 8.0)
    assert bwu_norm(f, BwuSpec(E, w, u, hom, STANDARD_WINDOW)) == 0.0


@given(funcs, st.sampled_from([SpaceSpec("Morrey", p=2, lam=-0.25), SpaceSpec("Morrey", p=1, lam=-0.5)]))
def test_b0_reduction_to_morrey(name, E):
    f = _f(name)
    spec = BwuSpec(E, PowerWeight(0.0), math.inf, True, STANDARD_WINDOW)
    assert bwu_norm(f, spec) == pytest.approx(local_norm(f, 8.0, E), rel=1e-12)


@given(funcs, spaces, weights, us, st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity(name, E, w, u, c):
    f = _f(name)
    spec = BwuSpec(E, w, u, True, STANDARD_WINDOW)
    g = f.with_samples(c * f.samples)
    assert bwu_norm(g, spec) == pytest.approx(abs(c) * bwu_norm(f, spec), rel=1e-12)


@given(funcs, st.sampled_from(SPACES[:3]), weights, us)
def test_triangle_inequality_lp(name, E, w, u):
    if u < 1:
        return
    f, g = _f(name), _f("random")
    spec = BwuSpec(E, w, u, True, STANDARD_WINDOW)
    fg = f.with_samples(f.samples + g.samples)
    assert bwu_norm(fg, spec) <= (bwu_norm(f, spec) + bwu_norm(g, spec)) * (1 + 1e-12)


@given(funcs, spaces, weights, us)
def test_equivalent_weights_give_exact_ratio(name, E, w, u):
    f = _f(name)
    a = bwu_norm(f, BwuSpec(E, w, u, True, STANDARD_WINDOW))
    b = bwu_norm(f, BwuSpec(E, ScaledWeight(1.3, w), u, True, STANDARD_WINDOW))
    if a == 0:
        assert b == 0
    else:
        assert b / a == pytest.approx(1.3, rel=1e-12)


@given(funcs, spaces, weights, st.sampled_from([0.5, 1.0, 2.0]))
def test_window_monotone(name, E, w, u):
    f = _f(name)
    small = RadiusGrid.from_window(0.25, 4.0, 2 ** 0.25)
    a = bwu_norm(f, BwuSpec(E, w, u, True, small))
    b = bwu_norm(f, BwuSpec(E, w, u, True, STANDARD_WINDOW))
    assert a <= b * (1 + 1e-12)


@given(funcs, spaces, weights, us)
def test_homogeneous_dominates_nonhomogeneous(name, E, w, u):
    f = _f(name)
    a = bwu_norm(f, BwuSpec(E, w, u, False, STANDARD_WINDOW))
    b = bwu_norm(f, BwuSpec(E, w, u, True, STANDARD_WINDOW))
    assert a <= b * (1 + 1e-12)


def test_window_beyond_domain_rejected():
    f = make_grid_function("bump", [1.0], 1, H, 4.0)
    with pytest.raises(ValueError):
        bwu_norm(f, BwuSpec(LP1, PowerWeight(1.0), 1.0, True, STANDARD_WINDOW))


@given(st.floats(1e-3, 1e3), st.sampled_from([(1.0, 2.0), (2.0, math.inf), (0.5, 1.0)]))
def test_single_node_embedding_ratio(v, pair):
    u0, u1 = pair
    dlog = STANDARD_WINDOW.dlog
    vals = np.zeros(29)
    vals[7] = v
    expected = dlog ** (-1 / u0 + (0 if math.isinf(u1) else 1 / u1))
    assert embedding_ratio_table(vals, u0, u1, dlog) == pytest.approx(expected, rel=1e-12)


def test_embedding_ratio_zero_and_order():
    f = make_grid_function("constant", [0.0], 1, H, 8.0)
    assert embedding_ratio(f, LP1, PowerWeight(1.0), 1.0, 2.0, STANDARD_WINDOW) == 0.0
    with pytest.raises(ValueError):
        embedding_ratio(f, LP1, PowerWeight(1.0), 2.0, 1.0, STANDARD_WINDOW)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=40), st.sampled_from([0.5, 1.0, 3.0]))
def test_lu_norm_bounded_by_sup_times_mass(vals, u):
    d = 0.1
    assert lu_norm(vals, u, d) <= max(vals) * (len(vals) * d) ** (1 / u) * (1 + 1e-12) + 1e-300
    assert lu_norm(vals, math.inf, d) == max(vals)


def test_change_of_variable_identity():
    G = lambda r: np.exp(-np.log(r) ** 2)
    lo, hi = change_of_variable_check(G, lambda r: r, 2.0, STANDARD_WINDOW)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)


def test_change_of_variable_square_is_bounded():
    G = lambda r: ((r >= 1) & (r <= 4)).astype(float)
    lo, hi = change_of_variable_check(G, lambda r: r ** 2, 1.0, STANDARD_WINDOW)
    assert 0 < lo < math.inf and 0 < hi < math.inf


def test_change_of_variable_needs_monotone_phi():
    phi = lambda r: np.minimum(r, 1 / r)
    G = lambda r: np.ones_like(r)
    with pytest.raises(ValueError):
        change_of_variable_check(G, phi, 1.0, STANDARD_WINDOW)
    sur = monotone_surrogate(lambda r: np.asarray(r) ** 0.5, STANDARD_WINDOW, 0.5)
    v = sur(STANDARD_WINDOW.nodes)
    assert np.all(np.diff(v) > 0)
    ratio = v / STANDARD_WINDOW.nodes ** 0.5
    assert ratio.max() / ratio.min() < 2.0
