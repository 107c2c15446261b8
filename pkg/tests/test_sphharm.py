"""Real spherical harmonics on S^2: layout, transform, evaluation."""

import numpy as np
import pytest

from ibodylab import (
    S2Function,
    analyze_s2,
    default_s2_grid,
    eval_s2_at_points,
    s2_grid,
    sh_degrees,
    sh_index,
    synthesize_s2,
)
from helpers import random_even_s2, random_points_on_sphere


def test_index_layout():
    assert sh_index(0, 0) == 0
    # degree l block starts at l^2 and holds orders m = -l..l
    for l in range(0, 9):
        for m in range(-l, l + 1):
            assert sh_index(l, m) == l * l + (m + l)


def test_degrees_vector():
    degs = sh_degrees(5)
    assert degs.shape == (36,)
    for l in range(6):
        assert np.count_nonzero(degs == l) == 2 * l + 1
    assert degs[sh_index(4, -2)] == 4


def test_default_grid_resolves_squares():
    # products of two band L functions live at degree 2L; the default grid
    # must integrate them exactly since the power iteration relies on it
    for L in (4, 16, 48):
        assert default_s2_grid(L).exact_degree >= 4 * L


def test_orthonormal_on_grid():
    L = 6
    g = s2_grid(2 * L)
    n = (L + 1) ** 2
    vecs = np.empty((n, g.n_theta, g.n_phi))
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        vecs[i] = synthesize_s2(c, g)
    flat = vecs.reshape(n, -1)
    gram = (flat * g.weights.ravel()) @ flat.T
    assert np.max(np.abs(gram - np.eye(n))) <= 1e-12


@pytest.mark.parametrize("L", [16, 64])
def test_round_trip(L):
    f = random_even_s2(L, seed=L)
    c = analyze_s2(L, f.values, f.grid)
    assert np.max(np.abs(c - f.coeffs)) <= 1e-12


def test_parseval_unit_norm():
    f = random_even_s2(32, seed=9)
    c = f.coeffs / np.linalg.norm(f.coeffs)
    f = S2Function.from_coeffs(c)
    sq = float((f.values**2 * f.grid.weights).sum())
    assert abs(sq - 1.0) <= 1e-10


def test_energies_layout():
    c = np.zeros(49)
    c[sh_index(4, 3)] = 2.0
    f = S2Function.from_coeffs(c)
    e = f.energies()
    assert e.shape == (7,)
    assert e[4] == pytest.approx(4.0, abs=1e-15)
    assert np.sum(np.abs(np.delete(e, 4))) <= 1e-20


def test_eval_at_points_matches_grid():
    f = random_even_s2(12, seed=4)
    pts = f.grid.points().reshape(-1, 3)
    got = eval_s2_at_points(f.coeffs, pts).reshape(f.values.shape)
    assert np.max(np.abs(got - f.values)) <= 1e-12


def test_even_function_is_antipodally_symmetric():
    f = random_even_s2(10, seed=21)
    pts = random_points_on_sphere(200, 3, seed=1)
    assert np.max(np.abs(f.eval_at_points(pts) - f.eval_at_points(-pts))) <= 1e-12


def test_analyze_rejects_coarse_grid():
    g = s2_grid(8)
    with pytest.raises(ValueError):
        analyze_s2(16, np.ones((g.n_theta, g.n_phi)), g)


def test_from_values_round_trip():
    f = random_even_s2(8, seed=2)
    g = S2Function.from_values(8, f.values, f.grid)
    assert np.max(np.abs(g.coeffs - f.coeffs)) <= 1e-13
