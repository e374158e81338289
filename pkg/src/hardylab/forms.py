"""Left/right-hand side evaluation of the weighted (improved) Hardy inequalities.

Every inequality is reported as four nonnegative terms

    lhs = c * int phi^2/r^2 dmu + int V phi^2 dmu
    rhs = int |phi'|^2 dmu + K1 int phi^2 dmu

with c = (N + K2 - 2)^2 / 4 taken from the supplied AdmissibleConstants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .correctors import CorrectorSpec, PotentialSpec
from .errors import DomainError, EvaluationError
from .quadrature import RadialGrid, graded_grid, integrate_radial
from .weights import AdmissibleConstants, WeightSpec, eval_weight, local_power

FAMILY_TAGS = ("cutoff_power", "polynomial_bump", "custom")
INEQUALITY_IDS = ("global_wiHi", "local_log", "local_beta", "caffarelli")

# bundled test functions are only C^1, so Richardson estimates settle near 1e-8
FORMS_RTOL = 1e-6


@dataclass(frozen=True)
class TestFunction:
    """Radial test function with compact support.

    ``origin_power`` is the exponent p with phi ~ r^p at r = 0 when the
    support reaches the origin; it lets the quadrature integrate the
    singular first cell exactly.  ``grading`` is the exponent of the default
    grid clustered at the origin.
    """

    __test__ = False  # not a pytest class

    profile: Callable
    derivative: Callable
    support: tuple
    family_tag: str = "custom"
    origin_power: Optional[float] = None
    name: str = ""
    grading: float = 3.0

    def __post_init__(self):
        if self.family_tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family tag {self.family_tag!r}")

    def __call__(self, r):
        return self.profile(r)

    def default_grid(self, n: int = 1024, q: Optional[float] = None) -> RadialGrid:
        a, b = self.support
        if q is None:
            q = self.grading if a == 0 else 1.0
        return graded_grid(a, b, n, q)


def _masked(fn, a, b):
    def wrapped(r):
        r = np.asarray(r, dtype=float)
        inside = (r > a) & (r < b)
        out = np.zeros_like(r)
        if np.any(inside):
            out[inside] = fn(r[inside])
        return out if out.ndim else float(out)

    return wrapped


def smooth_cutoff(a: float, b: float):
    """C^1 cubic step: 1 on [0, a], 0 from b on."""

    def eta(r):
        s = np.clip((np.asarray(r, dtype=float) - a) / (b - a), 0.0, 1.0)
        return 1 - 3 * s**2 + 2 * s**3

    def deta(r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - a) / (b - a), 0.0, 1.0)
        return np.where((r > a) & (r < b), (-6 * s + 6 * s**2) / (b - a), 0.0)

    return eta, deta


def cutoff_power(alpha0: float, eps: float, a: float, b: float = 1.0) -> TestFunction:
    """phi = r^(-alpha0 + eps) * eta(r), the near-optimiser for the Hardy constant."""
    s = -alpha0 + eps
    eta, deta = smooth_cutoff(a, b)
    return TestFunction(
        _masked(lambda r: r**s * eta(r), 0.0, b),
        _masked(lambda r: s * r ** (s - 1) * eta(r) + r**s * deta(r), 0.0, b),
        (0.0, b),
        "cutoff_power",
        origin_power=s,
        name=f"cutoff_power(eps={eps:g},a={a:g},b={b:g})",
        # phi^2/r^2 dmu ~ r^(2 eps - 1) at best; t^q flattens it for q = 1/(2 eps)
        grading=max(3.0, math.ceil(1 / (2 * eps))),
    )


def polynomial_bump(p: float, b: float = 1.0) -> TestFunction:
    """phi = (b - r) r^p on [0, b]."""
    return TestFunction(
        _masked(lambda r: (b - r) * r**p, 0.0, b),
        _masked(lambda r: -(r**p) + (b - r) * p * r ** (p - 1) if p else -np.ones_like(r), 0.0, b),
        (0.0, b),
        "polynomial_bump",
        origin_power=float(p),
        name=f"bump(p={p:g},b={b:g})",
    )


def annular_bump(a: float, b: float, s: float = 0.0) -> TestFunction:
    """phi = r^s ((r - a)(b - r))^2 on [a, b], C^1 at both ends."""

    def f(r):
        return r**s * ((r - a) * (b - r)) ** 2

    def df(r):
        w = (r - a) * (b - r)
        return s * r ** (s - 1) * w**2 + r**s * 2 * w * (a + b - 2 * r)

    return TestFunction(
        _masked(f, a, b),
        _masked(df, a, b),
        (a, b),
        "polynomial_bump",
        name=f"annulus(a={a:g},b={b:g},s={s:g})",
    )


def bundled_family(N: int, k: AdmissibleConstants, b: float = 1.0) -> list[TestFunction]:
    """Twenty test functions supported in [0, b].

    Ten cutoff near-optimisers r^(-alpha0 + eps) eta, five polynomial bumps
    and five annular bumps.
    """
    alpha0 = k.optimal_alpha(N)
    family = [
        cutoff_power(alpha0, eps, frac * b, b)
        for eps in (0.05, 0.1, 0.2, 0.35, 0.5)
        for frac in (0.3, 0.6)
    ]
    family += [polynomial_bump(p, b) for p in (0, 0.5, 1, 2, 3)]
    family += [
        annular_bump(0.1 * b, 0.5 * b),
        annular_bump(0.3 * b, b),
        annular_bump(0.05 * b, 0.9 * b),
        annular_bump(0.05 * b, 0.3 * b, s=-alpha0 + 0.1),
        annular_bump(0.2 * b, 0.8 * b, s=1.0),
    ]
    return family


def local_family(N: int, k: AdmissibleConstants, a: float = 0.05, b: float = 0.95) -> list[TestFunction]:
    """Twenty test functions with support inside [a, b] (away from 0 and 1)."""
    alpha0 = k.optimal_alpha(N)
    span = b - a
    family = []
    for lo, hi in ((0.0, 1.0), (0.0, 0.5), (0.25, 0.75), (0.5, 1.0), (0.0, 0.2)):
        for s in (0.0, -alpha0 + 0.05, -alpha0 + 0.3, 1.0):
            family.append(annular_bump(a + lo * span, a + hi * span, s=s))
    return family


@dataclass(frozen=True)
class EffectivePotential:
    """V~(r) = hardy_coefficient / r^2 + V(r)."""

    hardy_coefficient: float = 0.0
    correction: Optional[Callable] = None

    def __post_init__(self):
        if self.hardy_coefficient < 0:
            raise ValueError("hardy_coefficient must be >= 0")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        v = self.hardy_coefficient / r**2
        if self.correction is not None:
            v = v + self.correction(r)
        return v

    def correction_at(self, r):
        r = np.asarray(r, dtype=float)
        return np.zeros_like(r) if self.correction is None else self.correction(r)

    @property
    def label(self) -> str:
        lab = f"{self.hardy_coefficient:g}/r^2"
        if self.correction is not None:
            lab += " + " + getattr(self.correction, "label", "V")
        return lab


@dataclass(frozen=True)
class HardyReport:
    lhs_hardy_term: float
    lhs_correction_term: float
    rhs_gradient_term: float
    rhs_k1_term: float
    slack: float
    inequality_id: str

    @property
    def lhs(self) -> float:
        return self.lhs_hardy_term + self.lhs_correction_term

    @property
    def rhs(self) -> float:
        return self.rhs_gradient_term + self.rhs_k1_term

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality_id,
            "lhs_hardy_term": self.lhs_hardy_term,
            "lhs_correction_term": self.lhs_correction_term,
            "rhs_gradient_term": self.rhs_gradient_term,
            "rhs_k1_term": self.rhs_k1_term,
            "slack": self.slack,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _tail_powers(phi: TestFunction, spec: WeightSpec):
    """Origin exponents of phi^2 mu r^(N-1) and phi'^2 mu r^(N-1)."""
    if phi.origin_power is None or phi.support[0] > 0:
        return None, None
    p = phi.origin_power
    base = local_power(spec) + spec.N - 1
    return 2 * p + base, (2 * (p - 1) if p != 0 else 0.0) + base


def _integral(h, spec, grid, tail, what: str) -> float:
    val = integrate_radial(h, spec, grid, tail_power=tail, rtol=FORMS_RTOL)
    if not val.converged:
        raise EvaluationError(
            f"{what} did not converge (estimate {val.error_estimate:.3g} for value {val.value:.6g})"
        )
    return val.value


def dirichlet_energy(phi: TestFunction, spec: WeightSpec, grid: Optional[RadialGrid] = None) -> float:
    """int |grad phi|^2 dmu."""
    grid = grid or phi.default_grid()
    _, tail = _tail_powers(phi, spec)
    return _integral(lambda r: phi.derivative(r) ** 2, spec, grid, tail, "int |grad phi|^2 dmu")


def mass(phi: TestFunction, spec: WeightSpec, grid: Optional[RadialGrid] = None) -> float:
    """int phi^2 dmu."""
    grid = grid or phi.default_grid()
    tail, _ = _tail_powers(phi, spec)
    return _integral(lambda r: phi.profile(r) ** 2, spec, grid, tail, "int phi^2 dmu")


def weighted_mass(
    phi: TestFunction, spec: WeightSpec, kernel: Callable, kernel_power: float, grid=None, what="int w phi^2 dmu"
) -> float:
    """int kernel(r) phi^2 dmu, with kernel ~ r^kernel_power at the origin."""
    grid = grid or phi.default_grid()
    tail, _ = _tail_powers(phi, spec)
    if tail is not None:
        tail += kernel_power
    return _integral(lambda r: kernel(r) * phi.profile(r) ** 2, spec, grid, tail, what)


def _inverse_square(phi, spec, grid):
    return weighted_mass(phi, spec, lambda r: r**-2.0, -2.0, grid, "int phi^2/r^2 dmu")


def _report(phi, spec, k, grid, correction: float, ineq: str) -> HardyReport:
    if k.K1 < 0:
        raise DomainError("K1 must be nonnegative for the report terms to be nonnegative")
    hardy = k.hardy_constant(spec.N) * _inverse_square(phi, spec, grid)
    grad = dirichlet_energy(phi, spec, grid)
    k1 = k.K1 * mass(phi, spec, grid) if k.K1 else 0.0
    return HardyReport(hardy, correction, grad, k1, grad + k1 - hardy - correction, ineq)


def hardy_slack(
    phi: TestFunction,
    spec: WeightSpec,
    V: Optional[Union[PotentialSpec, Callable]],
    k: AdmissibleConstants,
    grid: Optional[RadialGrid] = None,
) -> HardyReport:
    """Terms of the global improved inequality for one test function."""
    grid = grid or phi.default_grid()
    corr = 0.0
    if V is not None:
        power = getattr(V, "origin_power", -2.0)
        corr = weighted_mass(phi, spec, V, power, grid, "int V phi^2 dmu")
    ineq = "caffarelli" if V is None and spec.kind == "power" else "global_wiHi"
    return _report(phi, spec, k, grid, corr, ineq)


def _require_inside_ball(phi: TestFunction):
    if not phi.support[1] < 1.0:
        raise DomainError(f"support {phi.support} of {phi.name or 'phi'} must stay inside the unit ball")


def local_log_slack(
    phi: TestFunction,
    spec: WeightSpec,
    k: AdmissibleConstants,
    grid: Optional[RadialGrid] = None,
    log_coefficient: float = 0.25,
) -> HardyReport:
    """Unit-ball inequality with correction log_coefficient * int phi^2 / (r^2 log^2 r) dmu."""
    _require_inside_ball(phi)
    grid = grid or phi.default_grid()
    kernel = lambda r: 1.0 / (r**2 * np.log(r) ** 2)  # noqa: E731
    corr = log_coefficient * weighted_mass(phi, spec, kernel, -2.0, grid, "int phi^2/(r log r)^2 dmu")
    return _report(phi, spec, k, grid, corr, "local_log")


def local_beta_slack(
    phi: TestFunction,
    spec: WeightSpec,
    beta: float,
    k: AdmissibleConstants,
    grid: Optional[RadialGrid] = None,
) -> HardyReport:
    """Unit-ball inequality with correction beta^2 int phi^2 / r^(2 - beta) dmu."""
    if not 0 < beta <= 2:
        raise DomainError("beta must lie in (0, 2]")
    _require_inside_ball(phi)
    grid = grid or phi.default_grid()
    corr = beta**2 * weighted_mass(
        phi, spec, lambda r: r ** (beta - 2), beta - 2, grid, "int phi^2/r^(2-beta) dmu"
    )
    return _report(phi, spec, k, grid, corr, "local_beta")


def potential_energy(phi: TestFunction, spec: WeightSpec, vt: EffectivePotential, grid=None) -> float:
    """int V~ phi^2 dmu."""
    grid = grid or phi.default_grid()
    total = 0.0
    if vt.hardy_coefficient:
        total += vt.hardy_coefficient * _inverse_square(phi, spec, grid)
    if vt.correction is not None:
        power = getattr(vt.correction, "origin_power", -2.0)
        total += weighted_mass(phi, spec, vt.correction, power, grid, "int V phi^2 dmu")
    return total


def rayleigh_quotient(
    phi: TestFunction, spec: WeightSpec, vt: EffectivePotential, grid: Optional[RadialGrid] = None
) -> float:
    """(int |grad phi|^2 - int V~ phi^2) / int phi^2, all against dmu."""
    grid = grid or phi.default_grid()
    den = mass(phi, spec, grid)
    if den <= 0:
        raise DomainError("rayleigh quotient of the zero function")
    return (dirichlet_energy(phi, spec, grid) - potential_energy(phi, spec, vt, grid)) / den


def multiplication_ratio(
    phi: TestFunction, spec: WeightSpec, vt: EffectivePotential, grid: Optional[RadialGrid] = None
) -> float:
    """||V~^(1/2) phi||_{L2_mu} / ||phi||_{H1_mu}."""
    grid = grid or phi.default_grid()
    h1 = mass(phi, spec, grid) + dirichlet_energy(phi, spec, grid)
    if h1 <= 0:
        raise DomainError("multiplication ratio of the zero function")
    return math.sqrt(potential_energy(phi, spec, vt, grid) / h1)


def alpha_functional(alpha, N: int, K2: float):
    """alpha (N + K2 - 2 - alpha), maximised at alpha0 = (N + K2 - 2)/2."""
    return alpha * (N + K2 - 2 - alpha)


@dataclass(frozen=True)
class CertificateReport:
    max_pointwise_residual: float
    identity_id: str
    nodes_checked: int
    fd_residual: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "identity": self.identity_id,
            "max_pointwise_residual": self.max_pointwise_residual,
            "nodes_checked": self.nodes_checked,
        }
        if self.fd_residual is not None:
            out["fd_residual"] = self.fd_residual
        return out


def _f_log_derivatives(g: CorrectorSpec, alpha: float, r):
    """f'/f and f''/f for f = g r^-alpha, by the product rule."""
    gv, g1, g2 = g.derivatives(r)
    if np.any(gv <= 0):
        bad = float(np.asarray(r)[gv <= 0].flat[0])
        raise DomainError(f"corrector vanishes at node r = {bad!r}")
    d1 = g1 / gv - alpha / r
    d2 = g2 / gv - 2 * alpha * g1 / (gv * r) + alpha * (alpha + 1) / r**2
    return d1, d2


def _radial_flux(g, spec, alpha, r):
    """Radial component of F = -(grad f / f) mu."""
    d1, _ = _f_log_derivatives(g, alpha, r)
    mu, _ = eval_weight(spec, r)
    return -d1 * mu


def divergence_certificate(
    g: CorrectorSpec,
    spec: WeightSpec,
    alpha: float,
    grid: RadialGrid,
    fd_step: float = 1e-4,
) -> tuple[CertificateReport, CertificateReport]:
    """Check the two pointwise identities behind the vector-field argument.

    (a) -Lap f / f = alpha (N-2-alpha)/r^2 + 2 alpha g'/(r g) - Lap g / g
    (b) div F = (-Lap f / f) mu + |grad f/f|^2 mu - (grad f / f) . grad mu

    for f = g r^-alpha and F = -(grad f / f) mu.  The divergence in (b) is
    taken once from closed forms and once by a fourth-order centred
    difference of the radial flux with step fd_step * r; the latter is reported as ``fd_residual``.
    """
    N = spec.N
    r = np.asarray(grid.nodes, dtype=float)
    lo, hi = g.support
    r = r[(r > max(lo, 0.0)) & (r < hi)]
    gv, g1, g2 = g.derivatives(r)
    d1, d2 = _f_log_derivatives(g, alpha, r)
    lap_f_over_f = d2 + (N - 1) * d1 / r
    lap_g_over_g = g2 / gv + (N - 1) * g1 / (r * gv)
    expansion = alpha * (N - 2 - alpha) / r**2 + 2 * alpha * g1 / (r * gv) - lap_g_over_g
    res_a = np.abs(-lap_f_over_f - expansion)

    mu, dlog = eval_weight(spec, r)
    rhs_b = expansion * mu + d1**2 * mu - d1 * dlog * mu
    # d/dr [-(f'/f) mu] = -((f''/f) - (f'/f)^2) mu - (f'/f) mu'
    flux = -d1 * mu
    div_closed = -(d2 - d1**2) * mu - d1 * dlog * mu + (N - 1) * flux / r
    res_b = np.abs(div_closed - rhs_b)

    h = fd_step * r  # balances truncation against rounding when F ~ r^-2
    Fp1, Fm1 = _radial_flux(g, spec, alpha, r + h), _radial_flux(g, spec, alpha, r - h)
    Fp2, Fm2 = _radial_flux(g, spec, alpha, r + 2 * h), _radial_flux(g, spec, alpha, r - 2 * h)
    dF = (8 * (Fp1 - Fm1) - (Fp2 - Fm2)) / (12 * h)
    res_fd = np.abs(dF + (N - 1) * flux / r - rhs_b)
    for arr in (res_a, res_b, res_fd):
        if not np.all(np.isfinite(arr)):
            raise EvaluationError("non-finite residual in divergence certificate")
    return (
        CertificateReport(float(res_a.max()), "laplacian_f_expansion", int(r.size)),
        CertificateReport(float(res_b.max()), "div_F_expansion", int(r.size), float(res_fd.max())),
    )
