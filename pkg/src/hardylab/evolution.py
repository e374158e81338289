"""Radial parabolic solver for u_t = Lu + V~ u, L u = u'' + ((N-1)/r + mu'/mu) u'.

The semi-discrete system is the piecewise-linear Galerkin form with the
mass matrix and the potential lumped onto the nodes,

    D u' = -(S - P) u,

where S is the weighted stiffness (natural condition at r_min, Dirichlet at
r_max), D = diag(row sums of the mass) and P = diag(row sums of the V~ mass
over the unknowns).
Lumping keeps the off-diagonal entries of D + dt (S - P) nonpositive, so when
that matrix is positive definite it is a Stieltjes matrix and implicit Euler
maps nonnegative data to nonnegative data.  Norms are the discrete
L^2_mu norm sqrt(u . D u), the nodal quadrature that matches the scheme.
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

from .errors import ConfigurationError, DomainError, NumericalError
from .forms import TestFunction
from .quadrature import RadialGrid, graded_grid
from .spectral import _local_mass, _stiffness_weights
from .weights import WeightSpec

SCHEMES = ("implicit_euler", "crank_nicolson")


def default_initial_profile() -> TestFunction:
    """(1 - r) r^0.1 on (0, 1); normalised at run time."""
    return TestFunction(
        profile=lambda r: (1.0 - r) * r**0.1,
        derivative=lambda r: 0.1 * r**-0.9 - 1.1 * r**0.1,
        support=(0.0, 1.0),
        family_tag="custom",
        origin_power=0.1,
        name="(1-r) r^0.1",
    )


@dataclass(frozen=True, eq=False)
class EvolutionConfig:
    spec: WeightSpec
    vt: Optional[Callable]
    grid: RadialGrid
    dt: float
    T: float
    scheme: str = "implicit_euler"
    u0: Optional[TestFunction] = None
    record_states: bool = False
    normalize_u0: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0 or not self.T > 0:
            raise ConfigurationError("dt and T must be positive")
        if self.dt > self.T:
            raise ConfigurationError("dt must not exceed T")
        if self.grid.nodes[0] <= 0:
            raise ConfigurationError("evolution grids must start at r_min > 0")
        if self.u0 is None:
            object.__setattr__(self, "u0", default_initial_profile())

    @property
    def n_steps(self) -> int:
        # tolerate T/dt landing a hair above an integer
        return max(1, math.ceil(self.T / self.dt - 1e-9))


@dataclass(frozen=True, eq=False)
class _System:
    stiff_diag: np.ndarray  # S - P on the unknowns
    stiff_off: np.ndarray
    lumped: np.ndarray  # D
    nodes: np.ndarray


def _assemble(config: EvolutionConfig) -> _System:
    spec, grid = config.spec, config.grid
    n_nodes = grid.nodes.size
    h = np.diff(grid.nodes)
    sw = _stiffness_weights(spec, grid) / h**2
    sd = np.zeros(n_nodes)
    sd[:-1] += sw
    sd[1:] += sw
    so = -sw
    ma, mb, mc = _local_mass(spec, grid, lambda r: np.ones_like(r))
    lumped = np.zeros(n_nodes)
    lumped[:-1] += ma + mb
    lumped[1:] += mb + mc
    if config.vt is not None:
        va, vb, vc = _local_mass(spec, grid, config.vt)
        pot = np.zeros(n_nodes)
        pot[:-1] += va + vb
        pot[1:] += vb + vc
        # u vanishes at r_max, so its coupling to the last unknown carries no weight;
        # keeping it would lump a divergent integral when V blows up at r_max
        pot[-2] -= vb[-1]
        sd = sd - pot
    keep = slice(0, n_nodes - 1)  # Dirichlet at r_max
    out = _System(sd[keep].copy(), so[: n_nodes - 2].copy(), lumped[keep].copy(), grid.nodes[keep].copy())
    for name, arr in (("stiffness", out.stiff_diag), ("mass", out.lumped)):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            i = int(bad[0])
            raise NumericalError(f"non-finite {name} entry at node r = {grid.nodes[i]!r}")
    return out


def _banded(system: _System, coef: float) -> np.ndarray:
    """Bands of D + coef * (S - P)."""
    ab = np.zeros((3, system.lumped.size))
    ab[0, 1:] = coef * system.stiff_off
    ab[1] = system.lumped + coef * system.stiff_diag
    ab[2, :-1] = coef * system.stiff_off
    return ab


def _apply(system: _System, coef: float, u: np.ndarray) -> np.ndarray:
    """(D + coef * (S - P)) u."""
    out = system.lumped * u + coef * system.stiff_diag * u
    out[:-1] += coef * system.stiff_off * u[1:]
    out[1:] += coef * system.stiff_off * u[:-1]
    return out


class _Stepper:
    def __init__(self, config: EvolutionConfig):
        self.config = config
        self.system = _assemble(config)
        theta = 1.0 if config.scheme == "implicit_euler" else 0.5
        self.lhs = _banded(self.system, theta * config.dt)
        self.rhs_coef = -(1.0 - theta) * config.dt

    def __call__(self, u: np.ndarray) -> np.ndarray:
        b = _apply(self.system, self.rhs_coef, u)
        try:
            with np.errstate(all="ignore"):
                v = solve_banded((1, 1), self.lhs, b, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"singular time-step system at dt = {self.config.dt!r}; reduce dt") from exc
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"time step produced non-finite values at dt = {self.config.dt!r}; reduce dt")
        return v

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(float(np.dot(self.system.lumped * u, u)))


def initial_state(config: EvolutionConfig) -> np.ndarray:
    nodes = config.grid.nodes[:-1]
    u = np.asarray(config.u0.profile(nodes), dtype=float)
    if np.any(u < 0):
        raise DomainError("initial data must be nonnegative at every node")
    if config.normalize_u0:
        nrm = math.sqrt(float(np.dot(_assemble(config).lumped * u, u)))
        if nrm > 0:
            u = u / nrm
    return u


def step(state: np.ndarray, config: EvolutionConfig) -> np.ndarray:
    """Advance the nodal values (grid nodes without r_max) by one dt."""
    state = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(state)):
        raise NumericalError("state contains non-finite values")
    return _Stepper(config)(state)


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    log_norms: np.ndarray
    min_values: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def norms(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_norms)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "norm", "log_norm", "min_value"])
        for t, ln, m in zip(self.times, self.log_norms, self.min_values):
            writer.writerow([repr(float(t)), repr(float(math.exp(ln)) if ln < 709 else math.inf),
                             repr(float(ln)), repr(float(m))])
        return buf.getvalue()


def run(config: EvolutionConfig) -> EvolutionTrace:
    """Iterate ``step`` for ceil(T/dt) steps, recording the norm after each.

    The state is rescaled to unit norm whenever it grows past 1e100 or
    drops below 1e-100 and the scale is carried in ``log_norms``, so
    exponentially growing runs do not overflow.  ``min_values`` are the
    node minima of the true (unrescaled) solution, clipped to the float range.
    """
    stepper = _Stepper(config)
    u = initial_state(config)
    log_scale = 0.0
    n = config.n_steps
    times = config.dt * np.arange(n + 1)
    log_norms = np.empty(n + 1)
    mins = np.empty(n + 1)
    states = np.empty((n + 1, u.size)) if config.record_states else None

    def record(k):
        nrm = stepper.norm(u)
        log_norms[k] = (math.log(nrm) if nrm > 0 else -math.inf) + log_scale
        with np.errstate(over="ignore"):
            mins[k] = float(np.min(u)) * math.exp(min(log_scale, 700.0))
        if states is not None:
            states[k] = u * math.exp(min(log_scale, 700.0))

    record(0)
    for k in range(1, n + 1):
        u = stepper(u)
        nrm = stepper.norm(u)
        if nrm > 1e100 or 0 < nrm < 1e-100:
            u = u / nrm
            log_scale += math.log(nrm)
        record(k)
    return EvolutionTrace(times, log_norms, mins, states)


@dataclass(frozen=True)
class ExponentialFit:
    M: float
    omega: float
    residual: float

    def to_dict(self) -> dict:
        return {"M": self.M, "omega": self.omega, "residual": self.residual}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def fit_exponential(trace: EvolutionTrace, t_start: float = 0.0) -> ExponentialFit:
    """Least-squares line through (t, log norm); M makes the bound hold at every sample.

    ``t_start`` restricts the line fit to t >= t_start (early transients of
    fast modes bend the log-norm); M is always computed over the whole trace.
    """
    t = np.asarray(trace.times, dtype=float)
    ln = np.asarray(trace.log_norms, dtype=float)
    if t.size < 8:
        raise ValueError("need at least 8 samples to fit")
    if not np.all(np.isfinite(ln)):
        raise DomainError("trace contains a zero norm")
    sel = t >= t_start
    if np.count_nonzero(sel) < 8:
        raise ValueError("fewer than 8 samples after t_start")
    ts, ls = t[sel], ln[sel]
    tc = ts - ts.mean()
    omega = float(np.dot(tc, ls - ls.mean()) / np.dot(tc, tc))
    intercept = float(ls.mean() - omega * ts.mean())
    residual = float(np.max(np.abs(ls - (intercept + omega * ts))))
    excess = ln - ln[0] - omega * t
    log_M = max(0.0, float(np.max(excess)))
    return ExponentialFit(float(math.exp(log_M)), omega, residual)


def positivity_check(trace: EvolutionTrace, config: EvolutionConfig) -> bool:
    """True iff the node minimum stayed >= -1e-12 at every recorded step."""
    if config.scheme != "implicit_euler":
        raise ConfigurationError(
            "positivity is only guaranteed for implicit_euler; crank_nicolson is not positivity preserving"
        )
    mins = trace.min_values if trace.states is None else trace.states.min(axis=1)
    return bool(np.all(np.asarray(mins) >= -1e-12))


def system_is_m_matrix(config: EvolutionConfig) -> bool:
    """Sign and definiteness check of the implicit Euler matrix D + dt (S - P).

    Nonpositive off-diagonals plus positive pivots in the LDL^T factorisation
    make it a Stieltjes matrix, whose inverse is entrywise nonnegative.
    """
    system = _assemble(config)
    ab = _banded(system, config.dt)
    if np.any(ab[0, 1:] > 0):
        return False
    d, e = ab[1].tolist(), ab[0, 1:].tolist()
    q = d[0]
    if q <= 0:
        return False
    for i in range(1, len(d)):
        q = d[i] - e[i - 1] ** 2 / q
        if q <= 0:
            return False
    return True


def omega_ladder(
    spec: WeightSpec,
    vt: Callable,
    r_mins: Sequence[float],
    n: int = 1024,
    q: float = 3.0,
    steps: int = 2000,
    horizon: Optional[Callable[[float], float]] = None,
    scheme: str = "implicit_euler",
    r_max: float = 1.0,
) -> list[tuple[float, float, float]]:
    """Fitted growth rate for each truncation radius.

    ``horizon(r_min)`` gives the final time (default 1.0); dt = T / steps.
    Returns (r_min, T, omega) per level.
    """
    out = []
    for r_min in r_mins:
        T = 1.0 if horizon is None else float(horizon(r_min))
        config = EvolutionConfig(spec, vt, graded_grid(r_min, r_max, n, q), T / steps, T, scheme)
        fit = fit_exponential(run(config), t_start=0.5 * T)
        out.append((float(r_min), T, fit.omega))
    return out
