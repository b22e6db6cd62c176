from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.grid import RadiusGrid, make_grid_function
from bwulab.hardy import (HardyGrid, HardyPair, PowerLaw, conjugate, hardy_inequality_ratio,
                          indicator, lemma_quantities, lemma_w_star_check, muckenhoupt_condition,
                          running_integrals)
from bwulab.interpolate import HypothesisError
from bwulab.local_norms import SpaceSpec
from bwulab.weights import PowerTheta, PowerWeight

WINDOW = RadiusGrid.from_window(1 / 64, 64.0, 2 ** 0.25)
GRID = HardyGrid(1 / 64, 64.0)
LP1 = SpaceSpec("Lp", p=1)
PAIR = HardyPair(PowerLaw(1, -1), PowerLaw(1, 0), 2.0)


def test_conjugate_conventions():
    assert conjugate(1) == math.inf and conjugate(math.inf) == 1 and conjugate(2) == 2
    assert conjugate(3) == pytest.approx(1.5)


def test_condition_examples():
    assert muckenhoupt_condition(PAIR, WINDOW) == pytest.approx(1.0, rel=1e-12)
    flat = HardyPair(PowerLaw(1, 0), PowerLaw(1, 0), 2.0)
    assert muckenhoupt_condition(flat, WINDOW) == math.inf
    mirrored = HardyPair(PowerLaw(1, 0), PowerLaw(1, 1), 2.0, "F_star_down")
    assert muckenhoupt_condition(mirrored, WINDOW) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(0.1, 10), st.sampled_from([1.0, 2.0, 3.0]))
def test_power_law_integral_matches_quadrature(e, a, span, p):
    from scipy import integrate
    b = a + span
    g = PowerLaw(1.5, e)
    ref, _ = integrate.quad(lambda t: abs(1.5 * t ** e) ** p, a, b)
    assert g.integral(a, b, p) == pytest.approx(ref, rel=1e-8)


def test_hardy_ratio_bounded_by_condition():
    A = muckenhoupt_condition(PAIR, WINDOW)
    for a, b in ((1, 2), (0.25, 0.5), (2, 8), (1 / 16, 16)):
        assert hardy_inequality_ratio(PAIR, indicator(a, b), GRID) <= 4 * A


def test_hardy_ratio_zero_function():
    assert hardy_inequality_ratio(PAIR, lambda t: np.zeros_like(t), GRID) == 0.0


def test_hardy_ratio_divergent_pair_grows():
    flat = HardyPair(PowerLaw(1, 0), PowerLaw(1, 0), 2.0)
    short = hardy_inequality_ratio(flat, indicator(1, 2), HardyGrid(1 / 4, 4.0))
    long = hardy_inequality_ratio(flat, indicator(1, 2), HardyGrid(1 / 4, 64.0))
    assert long > 2 * short


@given(st.lists(st.floats(0, 1e3), min_size=5, max_size=5))
def test_running_integrals_sum_to_total(coeffs):
    m = GRID.mids
    f = sum(c * np.exp(-((np.log(m) - k) ** 2)) for k, c in enumerate(coeffs))
    up, down = running_integrals(f, GRID)
    total = float(np.sum(f * GRID.widths))
    assert np.allclose(up + down, total, rtol=1e-12, atol=1e-12 * max(total, 1.0))


def test_lemma_quantities_closed_form():
    s0, s1, th, u0, u1, u = 2.0, 0.5, 0.5, 1.0, 2.0, 3.0
    r = WINDOW.nodes
    d = lemma_quantities(np.ones_like(r), r, PowerWeight(s0), PowerWeight(s1), PowerTheta(th),
                         u0, u1, u)
    for k in (0, 11, 40):
        x = r[k]
        assert d.U0[k] == pytest.approx(x ** (th * (s0 - s1) * u0 - u0 / u), rel=1e-12)
        assert d.U1[k] == pytest.approx(x ** ((s1 - s0) * (1 - th) * u1 - u1 / u), rel=1e-12)
        assert d.F0[k] == pytest.approx(x ** (-s0 * u0 - 1), rel=1e-12)
        assert d.F1[k] == pytest.approx(x ** (-s1 * u1 - 1), rel=1e-12)


def _f(name="bump"):
    if name == "bump":
        return make_grid_function("bump", [1.5, 2.0], 1, 1 / 32, 64.0)
    return make_grid_function("constant", [0.0], 1, 1 / 32, 64.0)


def test_lemma_power_example():
    rep = lemma_w_star_check(_f(), LP1, PowerWeight(2.0), PowerWeight(0.5), PowerTheta(0.5),
                             1.0, 1.0, 2.0, RadiusGrid.from_window(1 / 16, 32.0, 2 ** 0.25))
    assert rep.swapped and rep.cases == ("i",)
    assert rep.passed and math.isfinite(rep.ratio)
    assert abs(rep.ratio_refined / rep.ratio - 1) <= 0.2


def test_lemma_case_two():
    rep = lemma_w_star_check(_f(), LP1, PowerWeight(0.25), PowerWeight(1.0), PowerTheta(0.5),
                             math.inf, 2.0, math.inf, RadiusGrid.from_window(1 / 16, 32.0, 2 ** 0.25))
    assert rep.cases == ("ii",) and not rep.swapped and rep.passed


def test_lemma_zero_function():
    rep = lemma_w_star_check(_f("zero"), LP1, PowerWeight(1.0), PowerWeight(0.25), PowerTheta(0.5),
                             1.0, 1.0, 1.0, RadiusGrid.from_window(1 / 16, 32.0, 2 ** 0.25))
    assert rep.lhs == 0 and rep.bwu == 0 and rep.ratio == 0
    assert not np.any(rep.data.F0) and not np.any(rep.data.F1)


def test_lemma_refuses_small_u():
    with pytest.raises(HypothesisError, match="max\\(u0, u1\\)"):
        lemma_w_star_check(_f(), LP1, PowerWeight(1.0), PowerWeight(0.25), PowerTheta(0.5),
                           2.0, 2.0, 1.0, WINDOW)


def test_lemma_refuses_missing_w_star():
    with pytest.raises(HypothesisError, match="W\\*"):
        lemma_w_star_check(_f(), LP1, PowerWeight(1.0), PowerWeight(0.0), PowerTheta(0.5),
                           1.0, 1.0, 2.0, RadiusGrid.from_window(1 / 16, 32.0, 2 ** 0.25))


def test_pair_validation():
    with pytest.raises(ValueError):
        HardyPair(PowerLaw(), PowerLaw(), 0.5)
    with pytest.raises(ValueError):
        HardyPair(PowerLaw(), PowerLaw(), 2.0, "sideways")
    assert HardyPair(PowerWeight(1.0), PowerLaw(), 2.0).U == PowerLaw(1.0, -1.0)
