import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.correctors import (
    CorrectorSpec,
    PotentialSpec,
    W_from_derivatives,
    check_H2,
    eval_W,
    solve_bessel,
)
from hardylab.errors import ConfigurationError, DomainError
from hardylab.quadrature import graded_grid


def j0_series(x):
    """J0 from its power series, summed until the terms are negligible."""
    total, term, k = 1.0, 1.0, 0
    while abs(term) > 1e-17 * max(1.0, abs(total)) or k < 5:
        k += 1
        term *= -(x / 2) ** 2 / k**2
        total += term
    return total


def j0_first_zero():
    a, b = 2.0, 3.0
    for _ in range(200):
        mid = 0.5 * (a + b)
        if j0_series(mid) > 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


CORRECTORS = [
    CorrectorSpec("log_power", 0.5),
    CorrectorSpec("log_power", 0.2),
    CorrectorSpec("one_minus_power", 1.0),
    CorrectorSpec("one_minus_power", 2.0),
    CorrectorSpec("one_minus_power", 0.5),
]


@pytest.mark.parametrize("g", CORRECTORS, ids=lambda g: g.label)
def test_derivatives_match_finite_differences(g):
    r = np.linspace(0.05, 0.9, 17)
    h = 1e-5
    gv, g1, g2 = g.derivatives(r)
    gp, gm = g.derivatives(r + h)[0], g.derivatives(r - h)[0]
    assert np.allclose(g1, (gp - gm) / (2 * h), rtol=1e-6, atol=1e-8)
    assert np.allclose(g2, (gp - 2 * gv + gm) / h**2, rtol=1e-4, atol=1e-5)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(0.05, 0.95), r=st.floats(0.01, 0.99))
def test_log_potential_closed_form(beta, r):
    g = CorrectorSpec("log_power", beta)
    assert eval_W(g, r) == pytest.approx(float(W_from_derivatives(g, r)), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(beta=st.floats(0.05, 2.0), r=st.floats(0.01, 0.99))
def test_one_minus_potential_closed_form(beta, r):
    g = CorrectorSpec("one_minus_power", beta)
    assert eval_W(g, r) == pytest.approx(float(W_from_derivatives(g, r)), rel=1e-8)


def test_named_potentials():
    r = 0.3
    assert eval_W(CorrectorSpec("log_power", 0.5), r) == pytest.approx(1 / (4 * r**2 * math.log(r) ** 2))
    assert eval_W(CorrectorSpec("one_minus_power", 2.0), r) == pytest.approx(4 / (1 - r**2))
    assert eval_W(CorrectorSpec(), r) == 0.0


def test_explicit_potential_below_W():
    g = CorrectorSpec("one_minus_power", 1.0)
    V = PotentialSpec.default_for(g)
    r = np.linspace(0.01, 0.99, 99)
    assert np.all(V(r) <= g.potential(r))
    assert V(0.25) == pytest.approx(1.0 / 0.25)


def test_corrector_domain():
    with pytest.raises(DomainError):
        CorrectorSpec("log_power", 0.5).derivatives(1.5)
    with pytest.raises(ConfigurationError):
        CorrectorSpec("log_power", 1.5)
    with pytest.raises(ConfigurationError):
        PotentialSpec(CorrectorSpec("log_power", 0.5), v_fraction=1.5)


@pytest.mark.parametrize("g", CORRECTORS + [CorrectorSpec()], ids=lambda g: g.label)
def test_h2_holds_for_bundled_correctors(g):
    assert check_H2(g, graded_grid(1e-3, 0.95, 256, 2)).holds


def test_h2_fails_for_convex_corrector():
    class Convex:
        support = (0.0, 1.0)

        def derivatives(self, r):
            r = np.asarray(r, dtype=float)
            return 1 + r**2, 2 * r, 2 * np.ones_like(r)

    assert check_H2(Convex(), graded_grid(1e-3, 0.95, 256, 2)).verdict == "fails"


def test_bessel_first_zero_matches_series():
    sol = solve_bessel(1.0, 0.0, 1.0, 4.0, 4000)
    assert sol.first_zero == pytest.approx(j0_first_zero(), abs=1e-8)
    nodes = sol.nodes[::400]
    assert np.allclose(sol.values[::400], [j0_series(x) for x in nodes], atol=1e-10)


def test_bessel_scaling():
    # g(r) = J0(2 r) solves the equation with W = 4
    sol = solve_bessel(4.0, 0.0, 1.0, 2.0, 4000)
    assert sol.first_zero == pytest.approx(j0_first_zero() / 2, abs=1e-8)


def test_bessel_zero_potential_stays_constant():
    sol = solve_bessel(0.0, 0.0, 1.0, 1.0, 64)
    assert sol.first_zero is None
    assert np.allclose(sol.values, 1.0)
    assert sol.positive_on == (0.0, 1.0)


def test_bessel_recovers_corrector():
    # starting from g(r0), g'(r0) the solver reproduces the corrector that generated W
    g = CorrectorSpec("one_minus_power", 2.0)
    r0 = 0.1
    g0, dg0, _ = g.derivatives(r0)
    sol = solve_bessel(g, r0, float(g0), 0.9, 2000, dg0=float(dg0))
    assert np.allclose(sol.values, g.derivatives(sol.nodes)[0], atol=1e-9)
    assert np.max(np.abs(sol.residual(g.potential))) < 1e-4


def test_bessel_rejects_coarse_mesh():
    with pytest.raises(ConfigurationError):
        solve_bessel(1.0, 0.0, 1.0, 1.0, 8)


def test_bessel_csv_header():
    assert solve_bessel(1.0, 0.0, 1.0, 1.0, 16).to_csv().splitlines()[0] == "r,g"
