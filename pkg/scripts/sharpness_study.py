"""Truncated-annulus best constants for a power weight, and their extrapolated limit.

Prints one row per truncation radius and writes the scan as CSV.
"""
import argparse
from pathlib import Path

from hardylab.spectral import extrapolate_limit, scan_to_csv, sharpness_scan
from hardylab.weights import AdmissibleConstants, WeightSpec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--n-start", type=int, default=1024)
    ap.add_argument("--n-max", type=int, default=8192)
    ap.add_argument("--csv", type=Path, default=None)
    args = ap.parse_args(argv)

    kind = "unit" if args.gamma == 0 else "power"
    spec = WeightSpec(args.N, kind, gamma=args.gamma)
    k = AdmissibleConstants(0.0, -args.gamma)
    refinements = [(10.0 ** -(2 + j), min(args.n_max, args.n_start * 2**j)) for j in range(args.levels)]
    scan = sharpness_scan(spec, k, refinements)
    target = k.hardy_constant(spec.N)
    for r_min, n, best in scan:
        print(f"r_min={r_min:8.1e}  n={n:5d}  best={best:.8f}")
    limit, A, B = extrapolate_limit([s[0] for s in scan], [s[2] for s in scan])
    print(f"extrapolated {limit:.6f}  target {target:.6f}  rel {abs(limit - target) / target:.2e}")
    print(f"model c + A/(L+B)^2 with A={A:.4g}, B={B:.4g}")
    if args.csv:
        args.csv.write_text(scan_to_csv(scan))


if __name__ == "__main__":
    main()
