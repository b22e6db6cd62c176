from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bwulab.grid import (STANDARD_WINDOW, GridFunction, RadiusGrid, align_radius, cells_for,
                         cube_mean, distribution_measure, load_grid_function,
                         make_grid_function, restrict, save_grid_function, splitmix64_reference,
                         splitmix64_uniforms)


def test_power_abs_sample_at_centre():
    f = make_grid_function("power_abs", [0.5], 1, 0.25, 2.0)
    x = f.centers()
    i = int(np.argmin(np.abs(x - 1.125)))
    assert x[i] == 1.125
    assert f.samples[i] == 1.125 ** 0.5


def test_indicator_mass_2d():
    f = make_grid_function("indicator_cube", [1.0], 2, 1 / 16, 2.0)
    assert f.samples.sum() * f.cell_volume == pytest.approx(4.0, abs=1e-12)


def test_misaligned_radius_rejected():
    with pytest.raises(ValueError):
        cells_for(0.3, 0.25)
    with pytest.raises(ValueError):
        GridFunction(1, 0.25, 1.1, np.zeros(9))


def test_nonfinite_samples_rejected():
    with pytest.raises(ValueError):
        GridFunction(1, 0.5, 1.0, [0.0, np.nan, 1.0, 2.0])


def test_unknown_catalogue_name():
    with pytest.raises(ValueError):
        make_grid_function("nope", [], 1, 0.5, 1.0)


def test_standard_window_hits_powers_of_two():
    nodes = STANDARD_WINDOW.nodes
    assert nodes[0] == 1 / 16 and nodes[-1] == 8.0
    assert nodes.size == 29
    assert set([1 / 8, 1 / 4, 1 / 2, 1.0, 2.0, 4.0]) <= set(nodes.tolist())


def test_window_not_whole_steps():
    with pytest.raises(ValueError):
        RadiusGrid.from_window(1.0, 3.0, 2.0)


def test_refine_keeps_old_nodes():
    fine = STANDARD_WINDOW.refine()
    assert np.all(np.isin(STANDARD_WINDOW.nodes, fine.nodes))
    assert fine.dlog == pytest.approx(STANDARD_WINDOW.dlog / 2)


def test_distribution_measure_indicator():
    f = make_grid_function("indicator_cube", [1.0], 1, 1 / 16, 4.0)
    assert distribution_measure(f, 2.0, 0.5) == 2.0
    assert distribution_measure(f, 2.0, 1.0) == 0.0


def test_cube_mean_constant():
    f = make_grid_function("constant", [3.5], 2, 1 / 8, 2.0)
    assert cube_mean(f, (0.5, -0.25), 0.75) == pytest.approx(3.5, abs=1e-15)


def test_cube_outside_domain():
    f = make_grid_function("constant", [1.0], 1, 1 / 8, 1.0)
    with pytest.raises(ValueError):
        cube_mean(f, (0.5,), 1.0)


def test_round_trip_file(tmp_path):
    f = make_grid_function("random_field", [2.0], 2, 1 / 8, 2.0, seed=7)
    save_grid_function(f, tmp_path / "g")
    g = load_grid_function(tmp_path / "g")
    assert np.array_equal(f.samples, g.samples)
    assert (g.dim, g.h, g.R_max) == (f.dim, f.h, f.R_max)


def test_resample_uses_recipe():
    f = make_grid_function("bump", [1.0, 2.0], 1, 1 / 8, 2.0)
    g = f.resample(h=1 / 16)
    assert g.h == 1 / 16 and g.n == 64
    assert g.samples.max() <= 2.0


@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 50))
def test_splitmix_vectorised_matches_scalar(seed, count):
    assert splitmix64_uniforms(seed, count).tolist() == splitmix64_reference(seed, count)


@given(st.integers(0, 2 ** 64 - 1))
def test_splitmix_open_interval(seed):
    u = splitmix64_uniforms(seed, 200)
    assert np.all((u > 0) & (u < 1))


def test_random_field_deterministic():
    a = make_grid_function("random_field", [], 1, 1 / 16, 2.0, seed=42)
    b = make_grid_function("random_field", [], 1, 1 / 16, 2.0, seed=42)
    c = make_grid_function("random_field", [], 1, 1 / 16, 2.0, seed=43)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 2))
def test_restriction_transitive(a, b, dim):
    h = 1 / 8
    r, s = sorted((a * h, b * h))
    f = make_grid_function("random_field", [], dim, h, 1.0, seed=3)
    once = restrict(f, r)
    twice = restrict(restrict(f, s), r)
    assert np.array_equal(once.samples, twice.samples)


@given(st.sampled_from([0.5, 1.0, 1.5, 2.0]), st.integers(1, 2))
def test_dilation_bookkeeping(beta, dim):
    # f(x) = |x|^beta sampled on h and on 2h: f(2x) = 2^beta f(x) at matching centres
    f = make_grid_function("power_abs", [beta], dim, 1 / 16, 1.0)
    g = make_grid_function("power_abs", [beta], dim, 1 / 8, 2.0)
    assert np.allclose(g.samples, 2 ** beta * f.samples, rtol=1e-13, atol=0)


@given(st.floats(0.01, 10), st.sampled_from([1 / 8, 1 / 16, 1 / 64]))
def test_align_radius_is_multiple(r, h):
    a = align_radius(r, h)
    assert a >= h
    assert cells_for(a, h) * h == a
    assert abs(a - r) <= h / 2 + 1e-12 or r < h
