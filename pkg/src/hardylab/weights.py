"""Radial weights mu(r) = r^-gamma exp(-delta r^m) and the hypotheses on them.

The weight is stored by its parameters only, so that mu and the logarithmic
derivative mu'/mu are always available in closed form.  The checkers in this
module decide the local integrability conditions at the origin (H1) and the
pointwise radial condition linking mu to a corrector g (H4).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import TYPE_CHECKING, Mapping, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, NotFoundError

if TYPE_CHECKING:
    from .correctors import CorrectorSpec
    from .quadrature import RadialGrid

WEIGHT_KINDS = ("unit", "power", "power_exp", "gaussian")
HYPOTHESES = ("H1i", "H1ii", "H2i", "H2ii", "H4")
VERDICTS = ("holds", "fails", "inconclusive")


@dataclass(frozen=True)
class WeightSpec:
    """Parametric radial weight ``mu(r) = r**(-gamma) * exp(-delta * r**m)``.

    ``check_admissible=False`` skips the ``gamma < N - 2`` requirement so that
    the H1 checker can be pointed at weights outside the admissible class.
    """

    N: int
    kind: str = "unit"
    gamma: float = 0.0
    delta: float = 0.0
    m: float = 1.0
    holder_lambda: Optional[float] = None
    check_admissible: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ConfigurationError(f"dimension N must be an integer >= 3, got {self.N}")
        if self.kind not in WEIGHT_KINDS:
            raise ConfigurationError(f"unknown weight kind {self.kind!r}")
        if self.delta < 0:
            raise ConfigurationError("delta must be >= 0")
        if self.m <= 0:
            raise ConfigurationError("m must be > 0")
        if self.kind == "unit" and (self.gamma != 0 or self.delta != 0):
            raise ConfigurationError("kind=unit requires gamma = 0 and delta = 0")
        if self.kind == "power" and self.delta != 0:
            raise ConfigurationError("kind=power requires delta = 0")
        if self.kind == "gaussian" and not (self.gamma == 0 and self.m == 2 and self.delta > 0):
            raise ConfigurationError("kind=gaussian requires gamma = 0, m = 2, delta > 0")
        if (
            self.check_admissible
            and self.kind in ("power", "power_exp")
            and not self.gamma < self.N - 2
        ):
            raise ConfigurationError(
                f"gamma = {self.gamma} violates gamma < N - 2 = {self.N - 2}"
            )
        if self.holder_lambda is not None and not 0 < self.holder_lambda < 1:
            raise ConfigurationError("holder_lambda must lie in (0, 1)")

    @property
    def label(self) -> str:
        if self.kind == "unit":
            return f"unit(N={self.N})"
        if self.kind == "power":
            return f"|x|^-{self.gamma:g}(N={self.N})"
        return f"|x|^-{self.gamma:g}exp(-{self.delta:g}|x|^{self.m:g})(N={self.N})"

    def to_table(self) -> dict:
        """Plain key table with exact decimal strings for the real parameters."""
        return {
            "kind": self.kind,
            "N": int(self.N),
            "gamma": repr(float(self.gamma)),
            "delta": repr(float(self.delta)),
            "m": repr(float(self.m)),
        }

    @classmethod
    def from_table(cls, table: Mapping) -> "WeightSpec":
        unknown = set(table) - {"kind", "N", "gamma", "delta", "m", "holder_lambda"}
        if unknown:
            raise ConfigurationError(f"unknown weight key(s): {sorted(unknown)}")
        if "N" not in table:
            raise ConfigurationError("weight table is missing key 'N'")
        kind = str(table.get("kind", "unit"))
        defaults = {"gaussian": {"m": "2", "delta": "1"}}.get(kind, {})
        values = {}
        for key in ("gamma", "delta", "m"):
            raw = table.get(key, defaults.get(key, "1" if key == "m" else "0"))
            values[key] = _decimal_to_float(raw, key)
        lam = table.get("holder_lambda")
        return cls(
            N=int(_decimal_to_float(table["N"], "N")),
            kind=kind,
            holder_lambda=None if lam is None else _decimal_to_float(lam, "holder_lambda"),
            **values,
        )


def _decimal_to_float(raw, key: str) -> float:
    try:
        return float(Decimal(str(raw)))
    except Exception as exc:
        raise ConfigurationError(f"key {key!r}: cannot parse {raw!r} as a number") from exc


@dataclass(frozen=True)
class AdmissibleConstants:
    """Constants K1, K2, K3 of the radial condition."""

    K1: float
    K2: float
    K3: Optional[float] = None

    def __post_init__(self):
        if self.K3 is None:
            object.__setattr__(self, "K3", self.K2 if self.K2 != 0 else 0.0)
        if self.K2 != 0 and self.K3 != self.K2:
            raise ConfigurationError("K3 must equal K2 when K2 != 0")
        if self.K2 == 0 and self.K3 > 0:
            raise ConfigurationError("K3 must be <= 0 when K2 = 0")

    def hardy_constant(self, N: int) -> float:
        """Coefficient (N + K2 - 2)^2 / 4 of the inverse-square term."""
        return (N + self.K2 - 2) ** 2 / 4

    def optimal_alpha(self, N: int) -> float:
        return (N + self.K2 - 2) / 2

    def validate_for(self, N: int) -> None:
        if not self.K2 > 2 - N:
            raise ConfigurationError(f"K2 = {self.K2} must exceed 2 - N = {2 - N}")

    def to_table(self) -> dict:
        return {"K1": repr(float(self.K1)), "K2": repr(float(self.K2)), "K3": repr(float(self.K3))}

    @classmethod
    def from_table(cls, table: Mapping) -> "AdmissibleConstants":
        unknown = set(table) - {"K1", "K2", "K3"}
        if unknown:
            raise ConfigurationError(f"unknown constants key(s): {sorted(unknown)}")
        for key in ("K1", "K2"):
            if key not in table:
                raise ConfigurationError(f"constants table is missing key {key!r}")
        k3 = table.get("K3")
        return cls(
            K1=_decimal_to_float(table["K1"], "K1"),
            K2=_decimal_to_float(table["K2"], "K2"),
            K3=None if k3 is None else _decimal_to_float(k3, "K3"),
        )


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis_id: str
    verdict: str
    worst_point: float
    worst_margin: float
    refinement_trace: tuple = ()

    def __post_init__(self):
        if self.hypothesis_id not in HYPOTHESES:
            raise ValueError(f"unknown hypothesis {self.hypothesis_id!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis_id,
            "verdict": self.verdict,
            "worst_point": float(self.worst_point),
            "worst_margin": float(self.worst_margin),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def eval_weight(spec: WeightSpec, r):
    """Return ``(mu(r), mu'(r)/mu(r))`` from the closed forms.

    Accepts a scalar or an array of radii; all radii must be positive.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"weight evaluated at non-positive radius {arr.min() if arr.size else arr}")
    if spec.kind == "unit":
        mu = np.ones_like(arr)
        dlog = np.zeros_like(arr)
    else:
        log_mu = -spec.gamma * np.log(arr)
        dlog = -spec.gamma / arr
        if spec.delta != 0:
            log_mu = log_mu - spec.delta * arr**spec.m
            dlog = dlog - spec.delta * spec.m * arr ** (spec.m - 1)
        mu = np.exp(log_mu)
    if arr.ndim == 0:
        return float(mu), float(dlog)
    return mu, dlog


def shifted_log_derivative(spec: WeightSpec, r, K: float):
    """mu'/mu - K/r, with the 1/r parts combined before rounding."""
    r = np.asarray(r, dtype=float)
    out = (-spec.gamma - K) / r
    if spec.delta != 0:
        out = out - spec.delta * spec.m * r ** (spec.m - 1)
    return out


def local_power(spec: WeightSpec) -> float:
    """Exponent p with mu(r) ~ C r^p as r -> 0."""
    return -float(spec.gamma)


# 16-point Gauss-Legendre in log r on each dyadic shell
_SHELL_X, _SHELL_W = np.polynomial.legendre.leggauss(16)


def _shell_integrals(func, r_max: float, n_shells: int = 31) -> np.ndarray:
    out = np.empty(n_shells)
    for k in range(n_shells):
        lo, hi = math.log(r_max * 2.0 ** (-k - 1)), math.log(r_max * 2.0 ** (-k))
        s = 0.5 * (hi - lo) * _SHELL_X + 0.5 * (hi + lo)
        r = np.exp(s)
        out[k] = 0.5 * (hi - lo) * float(np.dot(_SHELL_W, func(r) * r))
    return out


def _divergence_verdict(hyp: str, shells: np.ndarray, r_max: float) -> HypothesisReport:
    radii = r_max * 2.0 ** (-np.arange(shells.size) - 1.0)
    trace = tuple(zip(radii.tolist(), np.cumsum(shells).tolist()))
    scale = float(np.max(np.abs(shells)))
    if not np.all(np.isfinite(shells)):
        return HypothesisReport(hyp, "fails", float(radii[-1]), -math.inf, trace)
    if scale == 0.0:
        return HypothesisReport(hyp, "holds", float(radii[-1]), 1.0, trace)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(shells[:-1] > 0, shells[1:] / shells[:-1], np.inf)
    ratios = np.where(shells[1:] <= 1e-300 * scale, 0.0, ratios)
    worst = int(np.argmax(ratios))
    margin = 1.0 - float(ratios[worst])
    point = float(radii[worst + 1])
    tail = shells[-5:]
    if np.all(np.diff(tail) >= 0) and shells[-10:].sum() > 10.0 * shells[:10].sum():
        return HypothesisReport(hyp, "fails", point, margin, trace)
    if np.all(ratios <= 0.95):
        return HypothesisReport(hyp, "holds", point, margin, trace)
    return HypothesisReport(hyp, "inconclusive", point, margin, trace)


def check_H1(spec: WeightSpec, r_max: float) -> tuple[HypothesisReport, HypothesisReport]:
    """Decide local integrability of |(sqrt mu)'|^2 and 1/mu near the origin.

    Both integrals are split into dyadic shells [2^-(k+1) R, 2^-k R],
    k = 0..30.  A tail whose last five shells are non-decreasing and whose last
    ten shells outweigh the first ten by a factor 10 is declared divergent;
    geometric decay with ratio <= 0.95 is declared convergent.
    """
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    N = spec.N

    def grad_sqrt_mu(r):
        mu, dlog = eval_weight(spec, r)
        return 0.25 * mu * dlog**2 * r ** (N - 1)

    def inv_mu(r):
        mu, _ = eval_weight(spec, r)
        return r ** (N - 1) / mu

    with np.errstate(over="ignore", invalid="ignore"):
        first = _divergence_verdict("H1i", _shell_integrals(grad_sqrt_mu, r_max), r_max)
        second = _divergence_verdict("H1ii", _shell_integrals(inv_mu, r_max), r_max)
    return first, second


def h4_margin(spec: WeightSpec, g: "CorrectorSpec", alpha: float, k: AdmissibleConstants, r):
    """K1 + (alpha/r)(mu'/mu - K2/r) - (g'/g)(mu'/mu - K3/r), elementwise."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("H4 margin needs positive radii")
    gv, g1, _ = g.derivatives(r)
    gv = np.asarray(gv, dtype=float)
    bad = np.flatnonzero(gv == 0)
    if bad.size:
        raise DomainError(f"corrector vanishes at node r = {float(r.flat[bad[0]])!r}")
    shifted2 = shifted_log_derivative(spec, r, k.K2)
    shifted3 = shifted_log_derivative(spec, r, k.K3)
    return k.K1 + (alpha / r) * shifted2 - (g1 / gv) * shifted3


def _h4_tolerance(k: AdmissibleConstants) -> float:
    return 1e-9 * (abs(k.K1) + abs(k.K2) + 1.0)


def check_H4(
    spec: WeightSpec,
    g: "CorrectorSpec",
    alpha: float,
    k: AdmissibleConstants,
    grid: "RadialGrid",
) -> HypothesisReport:
    """Pointwise check of the radial condition on the grid nodes.

    The report carries the smallest margin and where it occurs; the condition
    holds when that margin is at least ``-1e-9 * (|K1| + |K2| + 1)``.
    """
    if not 0 < alpha < spec.N + k.K2 - 2:
        raise DomainError(f"alpha = {alpha} outside (0, N + K2 - 2)")
    nodes = _interior_nodes(grid)
    margin = h4_margin(spec, g, alpha, k, nodes)
    worst = int(np.argmin(margin))
    verdict = "holds" if margin[worst] >= -_h4_tolerance(k) else "fails"
    return HypothesisReport("H4", verdict, float(nodes[worst]), float(margin[worst]))


def _interior_nodes(grid) -> np.ndarray:
    nodes = np.asarray(grid.nodes, dtype=float)
    return nodes[nodes > 0]


def find_admissible_K2(
    spec: WeightSpec, g: "CorrectorSpec", grid: "RadialGrid"
) -> AdmissibleConstants:
    """Largest lattice K2 (then smallest K1) for which H4 holds on the grid.

    K2 runs over 2 - N + 0.01, ..., 2 in steps of 0.01 and K1 over
    0, 0.1, ..., 50; K3 is tied to K2 (K3 = 0 when K2 = 0) and alpha is the
    optimal (N + K2 - 2)/2.
    """
    N = spec.N
    nodes = _interior_nodes(grid)
    n_k2 = int(round((2 - (2 - N)) / 0.01))
    for j in range(n_k2, 0, -1):
        K2 = round(2 - N + 0.01 * j, 2)
        alpha = (N + K2 - 2) / 2
        probe = AdmissibleConstants(0.0, K2)
        base = h4_margin(spec, g, alpha, probe, nodes)
        need = -float(np.min(base))
        if not np.isfinite(need):
            continue
        i = max(0, math.ceil(round((need - _h4_tolerance(probe)) / 0.1, 9)))
        while i <= 500:
            k = AdmissibleConstants(round(0.1 * i, 1), K2)
            if check_H4(spec, g, alpha, k, grid).holds:
                return k
            i += 1
    raise NotFoundError(f"no (K1, K2) on the lattice satisfies H4 for {spec.label}")
