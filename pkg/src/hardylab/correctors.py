"""Radial correctors g, the potentials they generate, and the Bessel criterion.

A corrector g > 0 produces the admissible potential

    W = -g''/g - g'/(r g),

equivalently g solves the radial Bessel-type equation g'' + g'/r + W g = 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .weights import HypothesisReport, _decimal_to_float

CORRECTOR_KINDS = ("unit", "log_power", "one_minus_power")


@dataclass(frozen=True)
class CorrectorSpec:
    kind: str = "unit"
    beta: float = 0.0
    support: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in CORRECTOR_KINDS:
            raise ConfigurationError(f"unknown corrector kind {self.kind!r}")
        if self.kind == "log_power" and not 0 < self.beta < 1:
            raise ConfigurationError("log_power requires beta in (0, 1)")
        if self.kind == "one_minus_power" and not 0 < self.beta <= 2:
            raise ConfigurationError("one_minus_power requires beta in (0, 2]")
        if self.support is None:
            sup = (0.0, math.inf) if self.kind == "unit" else (0.0, 1.0)
            object.__setattr__(self, "support", sup)
        elif self.kind != "unit" and self.support[1] > 1.0:
            raise ConfigurationError("non-unit correctors live on (0, 1)")

    @property
    def label(self) -> str:
        return "g=1" if self.kind == "unit" else f"{self.kind}(beta={self.beta:g})"

    def derivatives(self, r):
        """Closed-form ``(g, g', g'')`` at the radii ``r``."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        if np.any(r <= lo) or np.any(r >= hi):
            raise DomainError(f"{self.label} evaluated outside its support {self.support}")
        b = self.beta
        if self.kind == "unit":
            return np.ones_like(r), np.zeros_like(r), np.zeros_like(r)
        if self.kind == "log_power":
            L = -np.log(r)
            g = L**b
            g1 = -b * L ** (b - 1) / r
            g2 = b * L ** (b - 2) * ((b - 1) + L) / r**2
            return g, g1, g2
        rb = r**b
        return 1.0 - rb, -b * rb / r, -b * (b - 1) * rb / r**2

    def potential(self, r):
        """W from its simplified closed form."""
        r = np.asarray(r, dtype=float)
        self.derivatives(r)  # domain check
        b = self.beta
        if self.kind == "unit":
            return np.zeros_like(r)
        if self.kind == "log_power":
            return b * (1 - b) / (r**2 * np.log(r) ** 2)
        return b**2 / (r ** (2 - b) * (1 - r**b))

    def to_table(self) -> dict:
        return {"kind": self.kind, "beta": repr(float(self.beta))}

    @classmethod
    def from_table(cls, table: Mapping) -> "CorrectorSpec":
        unknown = set(table) - {"kind", "beta"}
        if unknown:
            raise ConfigurationError(f"unknown corrector key(s): {sorted(unknown)}")
        return cls(str(table.get("kind", "unit")), _decimal_to_float(table.get("beta", "0"), "beta"))


def eval_g(spec: CorrectorSpec, r: float) -> tuple[float, float, float]:
    g, g1, g2 = spec.derivatives(r)
    return float(g), float(g1), float(g2)


def eval_W(spec: CorrectorSpec, r):
    """W(r) = -g''/g - g'/(r g) for the corrector ``spec``."""
    g = np.asarray(spec.derivatives(r)[0])
    if np.any(g <= 0):
        raise DomainError(f"corrector {spec.label} is not positive at r = {r}")
    w = spec.potential(r)
    return float(w) if np.ndim(w) == 0 else w


def W_from_derivatives(spec: CorrectorSpec, r):
    """The same potential assembled directly from (g, g', g'')."""
    r = np.asarray(r, dtype=float)
    g, g1, g2 = spec.derivatives(r)
    return -(g2 * g + g1 * g / r) / g**2


EXPLICIT_FORMS = ("beta_sq_r_pow",)


@dataclass(frozen=True)
class PotentialSpec:
    """Correction potential V with 0 <= V <= W.

    By default V = v_fraction * W.  ``explicit_form='beta_sq_r_pow'`` selects
    V = beta^2 r^(beta - 2) for the one_minus_power corrector.
    """

    corrector: CorrectorSpec
    v_fraction: float = 1.0
    explicit_form: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.v_fraction <= 1:
            raise ConfigurationError("v_fraction must lie in [0, 1]")
        if self.explicit_form is not None:
            if self.explicit_form not in EXPLICIT_FORMS:
                raise ConfigurationError(f"unknown explicit potential {self.explicit_form!r}")
            if self.corrector.kind != "one_minus_power":
                raise ConfigurationError("beta_sq_r_pow needs a one_minus_power corrector")

    @classmethod
    def default_for(cls, corrector: CorrectorSpec) -> "PotentialSpec":
        if corrector.kind == "one_minus_power":
            return cls(corrector, explicit_form="beta_sq_r_pow")
        return cls(corrector)

    @property
    def label(self) -> str:
        if self.explicit_form == "beta_sq_r_pow":
            return f"{self.v_fraction:g}*beta^2 r^(beta-2) [{self.corrector.label}]"
        return f"{self.v_fraction:g}*W[{self.corrector.label}]"

    @property
    def origin_power(self) -> float:
        """Exponent p with V ~ r^p (up to log factors) as r -> 0."""
        if self.corrector.kind == "one_minus_power":
            return self.corrector.beta - 2
        return -2.0 if self.corrector.kind == "log_power" else 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.explicit_form == "beta_sq_r_pow":
            self.corrector.derivatives(r)
            b = self.corrector.beta
            v = b**2 * r ** (b - 2)
        else:
            v = self.corrector.potential(r)
        return self.v_fraction * v


def eval_V(spec: PotentialSpec, r):
    v = spec(r)
    return float(v) if np.ndim(v) == 0 else v


def check_H2(spec, grid) -> HypothesisReport:
    """Check (g' r)' <= 0 at every node and the monotonicity of g' r.

    ``spec`` only needs a ``derivatives(r)`` method, so hand-made correctors
    outside the bundled families can be checked too.
    """
    nodes = np.asarray(grid.nodes, dtype=float)
    lo, hi = spec.support
    nodes = nodes[(nodes > lo) & (nodes < hi)]
    g, g1, g2 = spec.derivatives(nodes)
    slope = g2 * nodes + g1  # (g' r)'
    flux = g1 * nodes  # g' r
    tol = 1e-9 * (1.0 + float(np.max(np.abs(slope))) + float(np.max(np.abs(flux))))
    pointwise = -slope
    running_min = np.minimum.accumulate(flux)
    pairwise = running_min - flux  # >= 0 iff g'(r) r <= g'(r0) r0 for r0 <= r
    margin = np.minimum(pointwise, pairwise)
    if np.any(g <= 0):
        margin = np.where(g <= 0, -np.inf, margin)
    worst = int(np.argmin(margin))
    verdict = "holds" if margin[worst] >= -tol else "fails"
    return HypothesisReport("H2ii", verdict, float(nodes[worst]), float(margin[worst]))


@dataclass(frozen=True)
class BesselSolution:
    W_tag: str
    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    first_zero: Optional[float]
    positive_on: tuple

    def residual(self, W: Callable) -> np.ndarray:
        """Second-order finite-difference residual of g'' + g'/r + W g at interior nodes."""
        r, g = self.nodes, self.values
        h0, h1 = np.diff(r)[:-1], np.diff(r)[1:]
        rm = r[1:-1]
        d2 = 2 * (h0 * g[2:] - (h0 + h1) * g[1:-1] + h1 * g[:-2]) / (h0 * h1 * (h0 + h1))
        d1 = (g[2:] - g[:-2]) / (h0 + h1)
        return d2 + d1 / rm + W(rm) * g[1:-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "g"])
        for r, g in zip(self.nodes, self.values):
            writer.writerow([repr(float(r)), repr(float(g))])
        return buf.getvalue()


PotentialLike = Union[float, int, Callable, CorrectorSpec, PotentialSpec]


def _as_callable(W: PotentialLike) -> tuple[Callable, str]:
    if isinstance(W, (int, float)):
        c = float(W)
        return (lambda r: c), f"W={c:g}"
    if isinstance(W, CorrectorSpec):
        return (lambda r: W.potential(r)), f"W[{W.label}]"
    if isinstance(W, PotentialSpec):
        return W, W.label
    if callable(W):
        return W, getattr(W, "__name__", "W(r)")
    raise ConfigurationError(f"cannot use {W!r} as a potential")


def _rk4_step(f, r, y, h):
    k1 = f(r, y)
    k2 = f(r + h / 2, y + h / 2 * k1)
    k3 = f(r + h / 2, y + h / 2 * k2)
    k4 = f(r + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def solve_bessel(
    W: PotentialLike,
    r0: float,
    g0: float,
    r_end: float,
    n_steps: int,
    dg0: float = 0.0,
) -> BesselSolution:
    """Integrate g'' + g'/r + W g = 0 with classical RK4 on a uniform mesh.

    Starting at ``r0 = 0`` uses the regular solution (g'(0) = 0) and a
    two-term series for the first step.  The first sign change of g is
    refined by bisection on the partial step to an absolute width of 1e-10.
    """
    if n_steps < 16:
        raise ConfigurationError("n_steps must be at least 16")
    if not r_end > r0 >= 0:
        raise ConfigurationError("need 0 <= r0 < r_end")
    Wf, tag = _as_callable(W)

    def rhs(r, y):
        g, p = y
        return np.array([p, -p / r - float(Wf(r)) * g])

    h = (r_end - r0) / n_steps
    nodes = r0 + h * np.arange(n_steps + 1)
    ys = np.empty((n_steps + 1, 2))
    ys[0] = (g0, dg0)
    start = 0
    if r0 == 0:
        w0 = float(Wf(0.0))
        ys[1] = (g0 * (1 - w0 * h * h / 4), -g0 * w0 * h / 2)
        start = 1
    for i in range(start, n_steps):
        ys[i + 1] = _rk4_step(rhs, nodes[i], ys[i], h)

    g = ys[:, 0]
    first_zero = None
    crossing = np.flatnonzero((g[:-1] > 0) & (g[1:] <= 0))
    if g[0] > 0 and crossing.size:
        i = int(crossing[0])
        if g[i + 1] == 0:
            first_zero = float(nodes[i + 1])
        elif i == 0 and r0 == 0:
            first_zero = float(nodes[1])
        else:
            a, b = 0.0, h
            while b - a > 1e-10:
                mid = 0.5 * (a + b)
                if _rk4_step(rhs, nodes[i], ys[i], mid)[0] > 0:
                    a = mid
                else:
                    b = mid
            first_zero = float(nodes[i] + 0.5 * (a + b))
    if g[0] <= 0:
        positive_on = (float(r0), float(r0))
    else:
        positive_on = (float(r0), first_zero if first_zero is not None else float(r_end))
    return BesselSolution(tag, nodes, g.copy(), ys[:, 1].copy(), first_zero, positive_on)
