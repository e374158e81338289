"""Piecewise-linear discretisation of the radial quadratic forms.

For the hat basis {phi_i} on a RadialGrid the forms

    a(u, v) = int u' v' dmu  (+ K1 int u v dmu)  (- int V~ u v dmu)
    m(u, v) = int kernel u v dmu

become symmetric tridiagonal matrices A and M (consistent mass, so the
discrete quotient is the exact quotient of a conforming trial function).
The smallest generalised eigenvalue of (A, M) is located by bisection on the
Sturm count of A - lambda M, which by Sylvester's law of inertia equals the
number of eigenvalues below lambda.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import EvaluationError, NumericalError
from .quadrature import RadialGrid, graded_grid, sphere_area
from .weights import AdmissibleConstants, WeightSpec, eval_weight

BOUNDARIES = ("dirichlet_both", "natural_left_dirichlet_right")

_GX, _GW = np.polynomial.legendre.leggauss(8)


class InconclusiveRefinement(NumericalError):
    """A refinement ladder shows neither convergence nor collapse."""


@dataclass(frozen=True, eq=False)
class TridiagonalForm:
    diag: np.ndarray
    offdiag: np.ndarray
    mass_diag: np.ndarray
    mass_offdiag: np.ndarray
    grid: RadialGrid
    boundary: str
    unknowns: np.ndarray  # grid node indices carried by the discrete space

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if np.any(self.mass_diag <= 0):
            raise EvaluationError("mass matrix has a non-positive diagonal entry")

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, u: np.ndarray, which: str = "A") -> np.ndarray:
        d, e = (self.diag, self.offdiag) if which == "A" else (self.mass_diag, self.mass_offdiag)
        out = d * u
        out[:-1] += e * u[1:]
        out[1:] += e * u[:-1]
        return out

    def quotient(self, u: np.ndarray) -> float:
        """Discrete Rayleigh quotient u.A u / u.M u."""
        return float(u @ self.matvec(u, "A")) / float(u @ self.matvec(u, "M"))

    def sturm_count(self, lam: float) -> int:
        """Number of generalised eigenvalues strictly below ``lam``."""
        d = (self.diag - lam * self.mass_diag).tolist()
        e = (self.offdiag - lam * self.mass_offdiag).tolist()
        tiny = 1e-300
        count = 0
        q = d[0]
        if q < 0:
            count += 1
        for i in range(1, len(d)):
            if q == 0.0:
                q = tiny
            q = d[i] - e[i - 1] * e[i - 1] / q
            if q < 0:
                count += 1
        return count

    def interpolate(self, func: Callable) -> np.ndarray:
        return np.asarray(func(self.grid.nodes[self.unknowns]), dtype=float)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda1: float
    eigenvector: np.ndarray
    iterations: int
    refinement_history: tuple = ()
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "iterations": self.iterations,
            "residual": self.residual,
            "refinement_history": [list(map(float, h)) for h in self.refinement_history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _cell_points(grid: RadialGrid):
    a, b = grid.nodes[:-1, None], grid.nodes[1:, None]
    h = b - a
    x = 0.5 + 0.5 * _GX[None, :]  # local coordinate in (0, 1)
    return a + h * x, 0.5 * _GW[None, :] * h, x, h[:, 0]


def _stiffness_weights(spec: WeightSpec, grid: RadialGrid) -> np.ndarray:
    """sigma * int_cell mu r^(N-1) dr for every cell."""
    a, b = grid.nodes[:-1], grid.nodes[1:]
    if spec.delta == 0 and a[0] > 0:
        s = spec.N - 1 - spec.gamma + 1
        # expm1 keeps thin cells free of cancellation
        if s == 0:
            w = np.log(b / a)
        else:
            w = a**s * np.expm1(s * np.log(b / a)) / s
        return sphere_area(spec.N) * w
    pts, wts, _, _ = _cell_points(grid)
    mu, _ = eval_weight(spec, pts)
    return sphere_area(spec.N) * np.sum(mu * pts ** (spec.N - 1) * wts, axis=1)


def _local_mass(spec: WeightSpec, grid: RadialGrid, kernel: Callable):
    """Per-cell consistent mass entries (m_aa, m_ab, m_bb) for a kernel."""
    pts, wts, x, _ = _cell_points(grid)
    mu, _ = eval_weight(spec, pts)
    with np.errstate(all="ignore"):
        dens = np.asarray(kernel(pts), dtype=float) * mu * pts ** (spec.N - 1) * wts
    dens = sphere_area(spec.N) * dens
    phi_a, phi_b = 1.0 - x, x
    return (
        np.sum(dens * phi_a**2, axis=1),
        np.sum(dens * phi_a * phi_b, axis=1),
        np.sum(dens * phi_b**2, axis=1),
    )


def _assemble_tridiagonal(n_nodes, cell_aa, cell_ab, cell_bb):
    diag = np.zeros(n_nodes)
    diag[:-1] += cell_aa
    diag[1:] += cell_bb
    return diag, cell_ab.copy()


def assemble_forms(
    spec: WeightSpec,
    weight_kernel: Callable,
    vt: Optional[Callable],
    grid: RadialGrid,
    boundary: str = "dirichlet_both",
    k1: float = 0.0,
) -> TridiagonalForm:
    """Assemble stiffness (minus the potential, plus k1 * mass) and kernel mass.

    ``weight_kernel`` is the density of the denominator: ``lambda r: r**-2``
    for best-constant problems, ``lambda r: 1`` for the bottom of the
    spectrum.  ``vt`` is subtracted from the stiffness form.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    if grid.nodes[0] <= 0:
        raise EvaluationError("spectral grids must start at r_min > 0")
    n_nodes = grid.nodes.size
    h = np.diff(grid.nodes)
    sw = _stiffness_weights(spec, grid) / h**2
    A_diag, A_off = _assemble_tridiagonal(n_nodes, sw, -sw, sw)
    if vt is not None:
        va, vb, vc = _local_mass(spec, grid, vt)
        d, o = _assemble_tridiagonal(n_nodes, va, vb, vc)
        A_diag, A_off = A_diag - d, A_off - o
    if k1:
        ma, mb, mc = _local_mass(spec, grid, lambda r: np.ones_like(r))
        d, o = _assemble_tridiagonal(n_nodes, ma, mb, mc)
        A_diag, A_off = A_diag + k1 * d, A_off + k1 * o
    ma, mb, mc = _local_mass(spec, grid, weight_kernel)
    M_diag, M_off = _assemble_tridiagonal(n_nodes, ma, mb, mc)

    first = 1 if boundary == "dirichlet_both" else 0
    idx = np.arange(first, n_nodes - 1)
    sl = slice(first, n_nodes - 1)
    offsl = slice(first, n_nodes - 2)
    parts = (A_diag[sl], A_off[offsl], M_diag[sl], M_off[offsl])
    for name, arr in zip(("stiffness", "stiffness", "mass", "mass"), parts):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            cell = int(idx[min(bad[0], idx.size - 1)])
            raise EvaluationError(
                f"non-finite {name} entry in cell [{grid.nodes[cell]!r}, {grid.nodes[cell + 1]!r}]"
            )
    return TridiagonalForm(*(np.ascontiguousarray(p) for p in parts), grid, boundary, idx)


def _bracket(form: TridiagonalForm) -> tuple[float, float]:
    lo, hi = -1.0, 1.0
    for _ in range(2100):
        if form.sturm_count(lo) == 0:
            break
        lo *= 2.0
    else:
        raise NumericalError("could not find a lower bound for the spectrum")
    for _ in range(2100):
        if form.sturm_count(hi) >= 1:
            break
        hi *= 2.0
    else:
        raise NumericalError("could not find an upper bound for the spectrum")
    return lo, hi


def _banded(form: TridiagonalForm, shift: float) -> np.ndarray:
    n = form.size
    ab = np.zeros((3, n))
    off = form.offdiag - shift * form.mass_offdiag
    ab[0, 1:] = off
    ab[1] = form.diag - shift * form.mass_diag
    ab[2, :-1] = off
    return ab


def bottom_eigenvalue(form: TridiagonalForm, max_iter: int = 200, rtol: float = 1e-14) -> SpectralResult:
    """Smallest eigenvalue of A u = lambda M u.

    Bisection on the Sturm count brackets lambda_1 to relative width
    ``rtol``; a few steps of inverse iteration at that shift give the
    eigenvector, normalised so that u.M u = 1 and u >= 0 on average.
    """
    lo, hi = _bracket(form)
    iterations = 0
    while hi - lo > rtol * max(1.0, abs(lo), abs(hi)):
        if iterations >= max_iter:
            raise NumericalError(
                f"bisection did not converge: bracket [{lo!r}, {hi!r}] after {iterations} steps"
            )
        mid = 0.5 * (lo + hi)
        if form.sturm_count(mid) >= 1:
            hi = mid
        else:
            lo = mid
        iterations += 1
    lam = 0.5 * (lo + hi)

    ab = _banded(form, lam)
    u = np.ones(form.size)
    u /= math.sqrt(float(u @ form.matvec(u, "M")))
    converged = False
    change = math.inf
    nudged = False
    for _ in range(12):
        try:
            with np.errstate(all="ignore"):
                v = solve_banded((1, 1), ab, form.matvec(u, "M"), check_finite=False)
            ok = bool(np.all(np.isfinite(v)))
        except (np.linalg.LinAlgError, ValueError):
            ok = False
        if not ok:
            if nudged:
                raise NumericalError(f"inverse iteration failed: A - lambda M singular near {lam!r}")
            # the shift sits on an eigenvalue to machine precision; move it just below
            ab = _banded(form, lam - 1e-9 * max(1.0, abs(lam)))
            nudged = True
            continue
        v = v / math.sqrt(float(v @ form.matvec(v, "M")))
        if float(v @ form.matvec(u, "M")) < 0:
            v = -v
        du = v - u
        change = math.sqrt(max(float(du @ form.matvec(du, "M")), 0.0))
        u = v
        if change <= 1e-9:
            converged = True
            break
    if not converged:
        raise NumericalError(
            f"inverse iteration did not settle near {lam!r}; last eigenvector change {change!r}"
        )
    rq = form.quotient(u)
    if lo - (hi - lo) <= rq <= hi + (hi - lo):
        lam = rq
    if u.sum() < 0:
        u = -u
    resid = float(np.linalg.norm(form.matvec(u, "A") - lam * form.matvec(u, "M")))
    return SpectralResult(lam, u, iterations, (), resid)


def _inverse_square(r):
    return 1.0 / np.asarray(r, dtype=float) ** 2


def sharpness_form(spec: WeightSpec, k: AdmissibleConstants, grid: RadialGrid) -> TridiagonalForm:
    """(int |grad u|^2 + K1 int u^2) against int u^2/r^2, Dirichlet at both ends."""
    return assemble_forms(spec, _inverse_square, None, grid, "dirichlet_both", k1=k.K1)


def sharpness_scan(
    spec: WeightSpec,
    k: AdmissibleConstants,
    refinements: Sequence[tuple[float, int]],
    r_max: float = 1.0,
    q: float = 3.0,
) -> list[tuple[float, int, float]]:
    """Discrete best constants of the weighted Hardy quotient on (r_min, r_max).

    Each entry is the bottom eigenvalue of the Hardy quotient over
    piecewise-linear functions vanishing at r_min and r_max; the values
    approach (N + K2 - 2)^2 / 4 from above as r_min -> 0.
    """
    if not refinements:
        raise ValueError("refinements must be non-empty")
    out = []
    for r_min, n in refinements:
        grid = graded_grid(r_min, r_max, int(n), q)
        out.append((float(r_min), int(n), bottom_eigenvalue(sharpness_form(spec, k, grid)).lambda1))
    return out


def extrapolate_limit(r_mins: Sequence[float], values: Sequence[float], r_max: float = 1.0, order: int = 2):
    """Limit of values as r_min -> 0 under the model c + A / (L + B)^order, L = log(r_max / r_min).

    Confinement to (r_min, r_max) raises a scale-invariant quotient by an amount
    that decays like a power of 1/L; the shift B absorbs the next-order term.
    Returns (c, A, B).  With only two points B is fixed to 0.
    """
    L = np.log(r_max / np.asarray(r_mins, dtype=float))
    y = np.asarray(values, dtype=float)
    if L.size < 2:
        raise ValueError("need at least two refinement levels to extrapolate")

    def linear_fit(shift):
        X = np.column_stack([np.ones_like(L), (L + shift) ** -float(order)])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return coef, float(np.sum((X @ coef - y) ** 2))

    if L.size == 2:
        coef, _ = linear_fit(0.0)
        return float(coef[0]), float(coef[1]), 0.0
    from scipy.optimize import minimize_scalar

    lo = -0.9 * float(L.min())
    res = minimize_scalar(lambda s: linear_fit(s)[1], bounds=(lo, 10 * float(L.max())), method="bounded",
                          options={"xatol": 1e-10})
    coef, _ = linear_fit(res.x)
    return float(coef[0]), float(coef[1]), float(res.x)


def scan_to_csv(scan: Sequence[tuple[float, int, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r_min", "n", "best_constant"])
    for r_min, n, c in scan:
        writer.writerow([repr(float(r_min)), int(n), repr(float(c))])
    return buf.getvalue()


@dataclass(frozen=True)
class ProbeResult:
    verdict: str
    history: tuple  # (r_min, n, lambda1)


def lambda1_form(
    spec: WeightSpec,
    vt: Callable,
    grid: RadialGrid,
) -> TridiagonalForm:
    """Bottom-of-spectrum form for -(L + V~): natural at r_min, Dirichlet at r_max."""
    return assemble_forms(spec, lambda r: np.ones_like(r), vt, grid, "natural_left_dirichlet_right")


def bottom_of_spectrum(spec: WeightSpec, vt: Callable, grid: RadialGrid) -> SpectralResult:
    return bottom_eigenvalue(lambda1_form(spec, vt, grid))


def classify_ladder(lams: Sequence[float], drop_factor: float = 10.0, ratio: float = 0.9) -> Optional[str]:
    """Collapse/convergence verdict for lambda_1 along a refinement ladder.

    ``collapsing``: over the last three levels lambda_1 is negative and each
    level is more than ``drop_factor`` times the previous one.
    ``bounded_below``: successive differences shrink by at least ``ratio``.
    Returns None when neither pattern is present.
    """
    lams = list(map(float, lams))
    if len(lams) < 3:
        raise ValueError("need at least three refinement levels")
    a, b, c = lams[-3:]
    if a < 0 and b < drop_factor * a and c < drop_factor * b:
        return "collapsing"
    diffs = np.abs(np.diff(lams))
    scale = max(1.0, max(abs(x) for x in lams))
    if np.all(diffs[-2:] <= 1e-12 * scale):
        return "bounded_below"
    if all(diffs[i + 1] <= ratio * diffs[i] or diffs[i + 1] <= 1e-12 * scale for i in range(len(diffs) - 1)):
        return "bounded_below"
    return None


def supercritical_probe(
    spec: WeightSpec,
    coefficient: float,
    refinements: Sequence[tuple[float, int]],
    correction: Optional[Callable] = None,
    r_max: float = 1.0,
    q: float = 3.0,
    side: str = "left",
    drop_factor: float = 10.0,
    ratio: float = 0.9,
) -> ProbeResult:
    """Track lambda_1 with V~ = coefficient / r^2 (+ correction) along a ladder.

    Each ladder entry (r_min, n) truncates the domain to (r_min, r_max) and
    uses n cells.  Raises InconclusiveRefinement when the sequence neither
    settles nor collapses.
    """
    if coefficient < 0:
        raise ValueError("coefficient must be >= 0")

    def vt(r):
        v = coefficient / np.asarray(r, dtype=float) ** 2
        return v if correction is None else v + correction(r)

    history = []
    for r_min, n in refinements:
        grid = graded_grid(r_min, r_max, int(n), q, side)
        history.append((float(r_min), int(n), bottom_of_spectrum(spec, vt, grid).lambda1))
    verdict = classify_ladder([h[2] for h in history], drop_factor, ratio)
    if verdict is None:
        raise InconclusiveRefinement(
            "lambda_1 neither settles nor collapses along "
            + ", ".join(f"(r_min={a:g}, n={b}): {c:.6g}" for a, b, c in history)
            + "; refine deeper"
        )
    return ProbeResult(verdict, tuple(history))
