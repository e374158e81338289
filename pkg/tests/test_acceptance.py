"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test appends one PASS/FAIL line to RESULTS; conftest prints them at the
end of the session.  ``python tests/test_acceptance.py`` runs the same checks
without pytest.
"""

import math
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from hardylab.correctors import CorrectorSpec, PotentialSpec, solve_bessel
from hardylab.evolution import EvolutionConfig, fit_exponential, omega_ladder, positivity_check, run
from hardylab.forms import (
    EffectivePotential,
    bundled_family,
    divergence_certificate,
    hardy_slack,
    local_beta_slack,
    local_family,
    local_log_slack,
    mass,
)
from hardylab.quadrature import graded_grid, integrate_radial, sphere_area
from hardylab.spectral import (
    assemble_forms,
    bottom_eigenvalue,
    extrapolate_limit,
    sharpness_scan,
    supercritical_probe,
)
from hardylab.weights import AdmissibleConstants, WeightSpec, find_admissible_K2

RESULTS = []
ROOT = Path(__file__).resolve().parents[1]
UNIT3 = WeightSpec(3)
K0 = AdmissibleConstants(0.0, 0.0)


def record(k, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    line = f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f}s / {budget:g}s]"
    RESULTS.append(line)
    print(line)
    return ok


def weight_cross_product(N):
    weights = [WeightSpec(N)]
    weights += [WeightSpec(N, "power", gamma=g) for g in (0.5, 1.0) if g < N - 2]
    weights += [WeightSpec(N, "power_exp", gamma=g, delta=1.0, m=2) for g in (0.5, 1.0) if g < N - 2]
    return weights


CORRECTORS = [
    CorrectorSpec(),
    CorrectorSpec("log_power", 0.5),
    CorrectorSpec("one_minus_power", 1.0),
    CorrectorSpec("one_minus_power", 2.0),
]


def test_criterion_01_quadrature_oracles():
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    for N in (3, 4, 5):
        for gamma in sorted({0.0, 0.5, 1.0, N - 2.5}):
            if not gamma < N - 2:
                continue  # the integral diverges and the weight is outside the admissible class
            spec = WeightSpec(N, "power", gamma=gamma) if gamma else WeightSpec(N)
            val = integrate_radial(lambda r: r**-2.0, spec, graded_grid(0, 1, 512, 2), tail_power=N - 3 - gamma)
            exact = sphere_area(N) / (N - 2 - gamma)
            worst = max(worst, abs(val.value - exact) / exact)
            cases += 1
    ok = record(1, worst <= 1e-8, f"{cases} (N, gamma) pairs, max relative error {worst:.2e}",
                time.perf_counter() - t0, 1)
    assert ok


def test_criterion_02_global_inequality():
    t0 = time.perf_counter()
    worst, count = math.inf, 0
    for N in (3, 4):
        for spec in weight_cross_product(N):
            for g in CORRECTORS:
                b = 1.0 if g.kind == "unit" else 0.95
                k = find_admissible_K2(spec, g, graded_grid(1e-4, b, 2048, 3))
                V = None if g.kind == "unit" else PotentialSpec.default_for(g)
                family = bundled_family(N, k, b)
                assert len(family) >= 20
                for phi in family:
                    rep = hardy_slack(phi, spec, V, k)
                    worst = min(worst, rep.slack / rep.rhs)
                    count += 1
    ok = record(2, worst >= -1e-7, f"{count} slacks, min slack/rhs {worst:.3e}", time.perf_counter() - t0, 30)
    assert ok


def test_criterion_03_sharpness():
    t0 = time.perf_counter()
    refs = [(1e-2, 1024), (1e-3, 2048), (1e-4, 4096), (1e-5, 4096)]
    details, ok = [], True
    for spec, k in ((UNIT3, K0), (WeightSpec(4, "power", gamma=1.0), AdmissibleConstants(0.0, -1.0))):
        scan = sharpness_scan(spec, k, refs)
        vals = [s[2] for s in scan]
        monotone = all(b <= a for a, b in zip(vals, vals[1:]))
        limit, _, _ = extrapolate_limit([s[0] for s in scan], vals)
        rel = abs(limit - 0.25) / 0.25
        ok &= monotone and rel <= 0.02
        details.append(f"{spec.label}: limit {limit:.6f} (rel {rel:.1e}), monotone={monotone}")
    ok = record(3, ok, "; ".join(details), time.perf_counter() - t0, 60)
    assert ok


def log_correction(c):
    return lambda r: c / (r**2 * np.log(r) ** 2)


def test_criterion_04_local_log():
    t0 = time.perf_counter()
    worst = math.inf
    for N in (3, 4):
        spec = WeightSpec(N)
        for phi in local_family(N, K0, 0.05, 0.95):
            assert 0.05 <= phi.support[0] and phi.support[1] <= 0.95
            worst = min(worst, local_log_slack(phi, spec, K0, log_coefficient=0.25).slack)
    ladder = [(1e-3, 512 * 2**j) for j in range(4)]
    probe = supercritical_probe(UNIT3, K0.hardy_constant(3), ladder, correction=log_correction(0.35),
                                q=2.0, side="both")
    ok = worst >= 0 and probe.verdict == "collapsing"
    ok = record(4, ok, f"min slack {worst:.3e}; 0.35 probe: {probe.verdict} "
                f"(lambda_1 {probe.history[-1][2]:.3e})", time.perf_counter() - t0, 30)
    assert ok


def test_criterion_05_local_beta():
    t0 = time.perf_counter()
    worst = math.inf
    for beta in (0.5, 1.0, 2.0):
        for phi in local_family(3, K0):
            rep = local_beta_slack(phi, UNIT3, beta, K0)
            worst = min(worst, rep.slack)
            if beta == 2.0:
                # the correction is 4 int phi^2 dmu
                assert math.isclose(rep.lhs_correction_term, 4 * mass(phi, UNIT3), rel_tol=1e-8)
    critical = K0.hardy_constant(3)
    scan = []
    for r_min in [10.0**-k for k in range(2, 8)]:
        form = assemble_forms(UNIT3, lambda r: np.ones_like(r), lambda r: critical / r**2,
                              graded_grid(r_min, 1.0, 4096, 3), "dirichlet_both")
        scan.append(bottom_eigenvalue(form).lambda1)
    best, _, _ = extrapolate_limit([10.0**-k for k in range(2, 8)], scan, order=1)
    z0 = solve_bessel(1.0, 0.0, 1.0, 4.0, 4000).first_zero
    ok = worst >= 0 and 4.0 <= best <= z0**2 + 0.1
    ok = record(5, ok, f"min slack {worst:.3e}; beta=2 best constant {best:.4f} in [4, {z0**2 + 0.1:.4f}]",
                time.perf_counter() - t0, 60)
    assert ok


def j0_series(x):
    total, term, k = 1.0, 1.0, 0
    while abs(term) > 1e-18 or k < 5:
        k += 1
        term *= -(x / 2) ** 2 / k**2
        total += term
    return total


def test_criterion_06_bessel():
    t0 = time.perf_counter()
    a, b = 2.0, 3.0
    while b - a > 1e-13:
        mid = 0.5 * (a + b)
        a, b = (mid, b) if j0_series(mid) > 0 else (a, mid)
    oracle = 0.5 * (a + b)
    zero = solve_bessel(1.0, 0.0, 1.0, 4.0, 4000).first_zero
    ok = abs(zero - oracle) <= 1e-5 and abs(zero - 2.404826) <= 1e-5
    ok = record(6, ok, f"first zero {zero:.10f}, series oracle {oracle:.10f}", time.perf_counter() - t0, 1)
    assert ok


def test_criterion_07_divergence_certificate():
    t0 = time.perf_counter()
    closed, fd, count = 0.0, 0.0, 0
    for N in (3, 4):
        for spec in weight_cross_product(N):
            alpha = AdmissibleConstants(0.0, -spec.gamma).optimal_alpha(N)
            for g in CORRECTORS:
                b = 1.0 if g.kind == "unit" else 0.95
                a_rep, d_rep = divergence_certificate(g, spec, alpha, graded_grid(1e-2, b, 256))
                closed = max(closed, a_rep.max_pointwise_residual, d_rep.max_pointwise_residual)
                fd = max(fd, d_rep.fd_residual)
                count += 1
    ok = record(7, closed <= 1e-8 and fd <= 1e-5,
                f"{count} pairs, closed-form {closed:.2e}, finite-difference {fd:.2e}", time.perf_counter() - t0, 10)
    assert ok


def test_criterion_08_dichotomy():
    t0 = time.perf_counter()
    ladder = [(10.0**-k, 1024) for k in range(2, 6)]
    sub = supercritical_probe(UNIT3, 0.2, ladder).verdict
    sup = supercritical_probe(UNIT3, 0.5, ladder).verdict

    grid = graded_grid(1e-3, 1.0, 1024, 3)
    vt = EffectivePotential(0.2)
    w1 = fit_exponential(run(EvolutionConfig(UNIT3, vt, grid, 1e-3, 1.0))).omega
    w2 = fit_exponential(run(EvolutionConfig(UNIT3, vt, grid, 5e-4, 1.0))).omega
    drift = abs(w2 - w1) / abs(w1)

    r_mins = [10.0**-k for k in range(2, 6)]
    omegas = [o[2] for o in omega_ladder(UNIT3, EffectivePotential(0.5), r_mins, horizon=lambda r: 3e5 * r * r)]
    unbounded = all(b > 0 and b > 10 * max(a, 0.0) for a, b in zip(omegas[-3:], omegas[-2:]))
    ok = sub == "bounded_below" and sup == "collapsing" and drift <= 0.05 and unbounded
    ok = record(8, ok, f"0.2: {sub}, omega {w1:.4f} vs {w2:.4f} (dt/2); 0.5: {sup}, omega ladder "
                + ", ".join(f"{w:.3g}" for w in omegas), time.perf_counter() - t0, 120)
    assert ok


def test_criterion_09_positivity():
    t0 = time.perf_counter()
    worst, runs = math.inf, 0
    potentials = [
        None,
        EffectivePotential(0.2),
        EffectivePotential(0.24),
        EffectivePotential(0.5),
        EffectivePotential(0.25, log_correction(0.25)),
    ]
    weights = [UNIT3, WeightSpec(4, "power", gamma=1.0), WeightSpec(4, "power_exp", gamma=0.5, delta=1.0, m=2)]
    for spec in weights:
        for vt in potentials:
            cfg = EvolutionConfig(spec, vt, graded_grid(1e-3, 1.0, 512, 3), 1e-3, 0.2, record_states=True)
            trace = run(cfg)
            assert positivity_check(trace, cfg)
            worst = min(worst, float(trace.states.min()))
            runs += 1
    ok = record(9, worst >= -1e-12, f"{runs} implicit Euler runs, min node value {worst:.3e}",
                time.perf_counter() - t0, 30)
    assert ok


def test_criterion_10_determinism():
    t0 = time.perf_counter()
    configs = ["hardy_unit_n3", "hardy_power_onepower", "sharpness_unit_n3", "sharpness_power1_n4",
               "evolve_subcritical", "evolve_supercritical"]
    same = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in configs:
            command = name.split("_")[0]
            blobs = []
            for i in range(2):
                out = Path(tmp) / f"{name}-{i}"
                proc = subprocess.run(
                    [sys.executable, "-m", "hardylab", command, "--config",
                     str(ROOT / "scripts" / "configs" / f"{name}.toml"), "--out", str(out)],
                    capture_output=True, text=True,
                )
                assert proc.returncode == 0, proc.stderr + proc.stdout
                blobs.append(((out / "data.csv").read_bytes(), (out / "report.json").read_bytes()))
            same.append(blobs[0] == blobs[1])
    ok = record(10, all(same), f"{sum(same)}/{len(same)} configs byte-identical across runs",
                time.perf_counter() - t0, 120)
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
