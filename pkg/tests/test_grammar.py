from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.grammar import (GrammarError, build_kernel, build_operator, build_space, build_theta,
                            build_weight, parse, space_spec_string)
from bwulab.local_norms import SpaceSpec
from bwulab.weights import (CompositeWeight, MaxPowersTheta, MaxPowersWeight, PowerLogTheta,
                            PowerLogWeight, PowerTheta, PowerWeight, ScaledWeight, TableWeight)

R = np.exp2(np.linspace(-8, 8, 33))
nice = st.floats(0.0, 4.0, allow_nan=False).map(lambda x: round(x, 6))
unit = st.floats(0.01, 0.99).map(lambda x: round(x, 6))
thetas = st.one_of(
    st.builds(PowerTheta, unit),
    st.builds(MaxPowersTheta, unit, unit),
    st.builds(PowerLogTheta, unit, nice, nice),
)
base_weights = st.one_of(
    st.builds(PowerWeight, nice),
    st.builds(PowerLogWeight, nice, nice, nice),
    st.builds(MaxPowersWeight, nice, nice),
    st.builds(lambda a, b: TableWeight((0.5, 1.0, 4.0), (a + 1, 1.0, 1 / (b + 1))), nice, nice),
)
weights = st.one_of(
    base_weights,
    st.builds(ScaledWeight, st.floats(0.1, 10).map(lambda x: round(x, 6)), base_weights),
    st.builds(CompositeWeight, base_weights, base_weights, thetas),
)


@given(weights)
def test_weight_round_trip(w):
    back = build_weight(w.spec())
    assert back == w
    assert np.array_equal(back(R), w(R))


@given(thetas)
def test_theta_round_trip(th):
    assert build_theta(th.spec()) == th


@given(st.sampled_from(["Lp", "WeakLp", "Morrey", "Campanato"]), st.sampled_from([1.0, 2.0, 2.5]),
       st.sampled_from([-0.25, -0.5]))
def test_space_round_trip(kind, p, lam):
    E = SpaceSpec(kind, p=p, lam=lam)
    assert build_space(space_spec_string(E)) == E


def test_examples_from_docs():
    assert build_weight("power{sigma=1.5}") == PowerWeight(1.5)
    w = build_weight("composite{w0=power{sigma=2}, w1=power{sigma=1}, theta=power{theta=0.5}}")
    assert np.allclose(w(R), R ** -1.5, rtol=1e-12)
    assert build_weight("table{0.5:2, 1:1, 4:0.25}")(2.0) == pytest.approx(0.5)
    assert build_space("Morrey{p=2, lam=-0.25}") == SpaceSpec("Morrey", p=2, lam=-0.25)
    assert build_space("BMO") == SpaceSpec("BMO")


def test_inf_literal():
    node = parse("x{a=inf, b=-inf}")
    assert node.args == (("a", math.inf), ("b", -math.inf))


def test_kernels_and_operators():
    assert build_kernel("hilbert_1d").kind == "hilbert_1d"
    assert build_kernel("riesz_like").kappa is None
    assert build_kernel("riesz_like{omega=cos}").kappa == 1.0
    op = build_operator("modified_singular{kernel=hilbert_1d, eta=0.25}")
    assert op.tag == "modified_singular" and op.eta == 0.25
    assert build_operator("fractional_integral{alpha=0.5}").alpha == 0.5


@pytest.mark.parametrize("text", [
    "power{sigma=1",            # unclosed
    "power{sigma=1}}",          # trailing
    "power{sigma 1}",           # missing '='
    "power{sigma=1; x=2}",      # bad character
    "",
])
def test_syntax_errors(text):
    with pytest.raises(GrammarError):
        build_weight(text)


@pytest.mark.parametrize("text, where", [
    ("gaussian{s=1}", "unknown weight family"),
    ("power{tau=1}", "unknown argument"),
    ("power", "missing sigma"),
    ("composite{w0=power{sigma=1}, w1=2, theta=power{theta=0.5}}", "nested spec"),
    ("table{sigma=1}", "r:w pairs"),
])
def test_semantic_errors(text, where):
    with pytest.raises(GrammarError, match=where):
        build_weight(text)


def test_unknown_operator_and_theta():
    with pytest.raises(GrammarError):
        build_operator("wavelet")
    with pytest.raises(GrammarError):
        build_theta("log{a=1}")
