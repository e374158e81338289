import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import ConfigurationError, EvaluationError
from hardylab.quadrature import RadialGrid, graded_grid, integrate_radial, sphere_area
from hardylab.weights import WeightSpec


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


def test_ball_moment():
    # int_{B_1} |x|^2 dx in R^3 = 4 pi / 5
    val = integrate_radial(lambda r: r**2, WeightSpec(3), graded_grid(0, 1, 128))
    assert val.value == pytest.approx(4 * math.pi / 5, rel=1e-13)
    assert val.converged


@pytest.mark.parametrize("N, gamma", [(3, 0.0), (3, 0.5), (4, 1.0), (5, 2.5), (4, 1.5)])
def test_inverse_square_against_power_weight(N, gamma):
    spec = WeightSpec(N, "power" if gamma else "unit", gamma=gamma)
    grid = graded_grid(0, 1, 512, 2)
    val = integrate_radial(lambda r: r**-2.0, spec, grid, tail_power=N - 3 - gamma)
    exact = sphere_area(N) / (N - 2 - gamma)
    assert val.value == pytest.approx(exact, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(0, 4), a=st.floats(0.0, 0.5), b=st.floats(0.6, 2.0))
def test_polynomials_are_exact_on_uniform_grids(k, a, b):
    # 4-point Gauss is exact for r^k r^2 up to degree 7
    val = integrate_radial(lambda r: r**k, WeightSpec(3), graded_grid(a, b, 64))
    exact = 4 * math.pi * (b ** (k + 3) - a ** (k + 3)) / (k + 3)
    assert val.value == pytest.approx(exact, rel=1e-12)


def test_tail_power_rejects_nonintegrable():
    with pytest.raises(EvaluationError):
        integrate_radial(lambda r: r**-4.0, WeightSpec(3), graded_grid(0, 1, 64, 2), tail_power=-2.0)


def test_nonfinite_integrand_names_radius():
    with pytest.raises(EvaluationError, match="r ="):
        integrate_radial(lambda r: 1 / (r - r), WeightSpec(3), graded_grid(0.1, 1, 64))


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        graded_grid(0, 1, 32)
    with pytest.raises(ConfigurationError):
        graded_grid(0, 1, 64, q=0.5)
    with pytest.raises(ConfigurationError):
        graded_grid(1, 0.5, 64)
    with pytest.raises(ConfigurationError):
        RadialGrid(0, 1, np.r_[np.linspace(0, 1, 65)[::-1]])


@pytest.mark.parametrize("side", ["left", "right", "both"])
def test_grading_sides(side):
    grid = graded_grid(0.0, 1.0, 64, 3, side)
    h = np.diff(grid.nodes)
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == 1.0
    if side in ("left", "both"):
        assert h[0] < h[32]
    if side in ("right", "both"):
        assert h[-1] < h[32]


def test_coarsened_grid_is_nested():
    grid = graded_grid(0, 1, 128, 2)
    coarse = grid.coarsened()
    assert np.array_equal(coarse.nodes, grid.nodes[::2])
    assert graded_grid(0, 1, 65).coarsened() is None


def test_error_estimate_flags_poor_resolution():
    val = integrate_radial(lambda r: np.cos(200 * r), WeightSpec(3), graded_grid(0, 1, 64))
    assert not val.converged


def test_grid_csv():
    lines = graded_grid(0, 1, 64).to_csv().splitlines()
    assert lines[0] == "k,r" and len(lines) == 66
