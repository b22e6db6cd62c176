from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.decompose import (TENT, campanato_decompose, decompose, decomposition_report,
                              decomposition_sweep, lattice_decompose, verify_decomposition)
from bwulab.grid import GridFunction, RadiusGrid, make_grid_function
from bwulab.local_norms import SpaceSpec, local_norm

H = 1 / 32
WINDOW = RadiusGrid.from_window(1 / 16, 4.0, 2 ** 0.25)
LATTICE = [SpaceSpec("Lp", p=1), SpaceSpec("Lp", p=2), SpaceSpec("WeakLp", p=1),
           SpaceSpec("Morrey", p=2, lam=-0.25)]
CORPUS = {
    "indicator": ("indicator_cube", [1.0]),
    "bump": ("bump", [1.5, 2.0]),
    "sine": ("sine", [3.0]),
    "power": ("power_abs", [0.5, 3.0]),
    "random": ("random_field", [2.0]),
}
funcs = st.sampled_from(sorted(CORPUS))
split = st.sampled_from([0.125, 0.25, 0.5, 1.0, 2.0])


def _f(name, dim=1, h=H):
    cat, params = CORPUS[name]
    return make_grid_function(cat, params, dim, h, 8.0 if dim == 1 else 4.0, seed=2)


def test_lattice_split_of_constant():
    f = make_grid_function("constant", [1.0], 1, H, 4.0)
    dec = lattice_decompose(f, 1.0)
    ind = make_grid_function("indicator_cube", [1.0], 1, H, 4.0)
    assert np.array_equal(dec.f0.samples, ind.samples)
    assert np.array_equal(dec.f1.samples, 1 - ind.samples)


def test_lattice_support_inside():
    f = make_grid_function("bump", [0.5], 1, H, 4.0)
    assert not np.any(lattice_decompose(f, 1.0).f1.samples)


def test_campanato_split_of_constant():
    f = make_grid_function("constant", [2.5], 1, H, 4.0)
    dec = campanato_decompose(f, 1.0)
    assert not np.any(dec.f0.samples)
    assert np.all(dec.f1.samples == 2.5)


def test_campanato_split_of_linear():
    f = GridFunction.from_callable(lambda x: x, 1, H, 4.0)
    dec = campanato_decompose(f, 0.5)
    expected = f.samples * TENT(f.coords(), 0.5)
    assert np.allclose(dec.f0.samples, expected, atol=1e-15)


@given(st.lists(st.floats(-4, 4), min_size=1, max_size=5), st.floats(0.1, 3))
def test_tent_bounds_and_lipschitz(xs, r):
    x = np.linspace(-4, 4, 801)
    v = TENT((x,), r)
    assert np.all((0 <= v) & (v <= 1))
    assert np.all(np.abs(np.diff(v)) <= np.diff(x) / r + 1e-12)


@given(funcs, split, st.integers(1, 2))
def test_exact_additivity(name, r, dim):
    f = _f(name, dim, h=1 / 16)
    for dec in (lattice_decompose(f, r), campanato_decompose(f, r)):
        s = dec.f0.samples + dec.f1.samples
        # lattice pieces are disjoint; the Campanato pair adds back to f up to one rounding
        if dec.kind == "lattice":
            assert np.array_equal(s, f.samples)
        else:
            assert np.allclose(s, f.samples, rtol=4e-16, atol=4e-16 * np.abs(f.samples).max())


@given(funcs, split)
def test_lattice_f1_vanishes_inside(name, r):
    f = _f(name)
    dec = lattice_decompose(f, r)
    c, k = f.n // 2, round(r / H)
    assert not np.any(dec.f1.samples[c - k:c + k])


@given(funcs, split, st.sampled_from(LATTICE), st.sampled_from([0.25, 0.5, 1.0, 4.0]))
def test_lattice_pieces_dominated(name, r, E, t):
    f = _f(name)
    dec = lattice_decompose(f, r)
    nf = local_norm(f, t, E)
    assert local_norm(dec.f0, t, E) <= nf * (1 + 1e-12)
    assert local_norm(dec.f1, t, E) <= nf * (1 + 1e-12)


@given(funcs, split, st.sampled_from(LATTICE[:2]))
def test_lattice_constants_are_one_for_lp(name, r, E):
    f = _f(name)
    c0, c1 = verify_decomposition(f, lattice_decompose(f, r), E, WINDOW)
    assert abs(c0 - 1) <= 1e-12 or c0 < 1
    assert c1 <= 1 + 1e-12


@given(funcs, split)
def test_campanato_constants_below_threshold(name, r):
    f = _f(name)
    E = SpaceSpec("Campanato", p=2, lam=0.0)
    c0, c1 = verify_decomposition(f, campanato_decompose(f, r), E, WINDOW)
    assert c0 <= 10 and c1 <= 10


def test_campanato_f1_is_flat_below_r():
    f = _f("random")
    E = SpaceSpec("Campanato", p=2, lam=-0.25)
    dec = campanato_decompose(f, 1.0)
    rows = decomposition_report(f, dec, E, WINDOW)
    below = [x for x in rows if x["side"] == "f1" and x["t"] < 1.0]
    assert below and all(x["ratio"] == 1.0 for x in below)   # 0/0 convention
    assert local_norm(dec.f1, 0.5, E) == 0.0


def test_skipped_rows_recorded():
    f = make_grid_function("bump", [1.0], 1, H, 4.0)
    E = SpaceSpec("Campanato", p=2, lam=0.0)
    rows = decomposition_report(f, campanato_decompose(f, 0.5), E, WINDOW)
    assert any(x["skipped"] for x in rows)   # Q_{3t} leaves the domain for large t


def test_sweep_is_r_uniform():
    f = _f("sine")
    sw = decomposition_sweep(f, SpaceSpec("Campanato", p=2, lam=-0.25), WINDOW)
    vals = [max(v) for v in sw["per_r"].values()]
    assert max(vals) / min(vals) < 2.0


def test_dispatch_and_errors():
    f = _f("bump")
    assert decompose(f, 1.0, SpaceSpec("BMO")).kind == "campanato"
    assert decompose(f, 1.0, SpaceSpec("Morrey", p=1, lam=-0.5)).kind == "lattice"
    with pytest.raises(ValueError):
        lattice_decompose(f, 0.3)
    with pytest.raises(ValueError):
        campanato_decompose(f, 6.0)
