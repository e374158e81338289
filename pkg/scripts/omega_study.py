"""Growth rate of the Kolmogorov evolution against the truncation radius.

Below the critical coefficient the fitted rate settles; above it the rate
grows like r_min^-2, so the horizon is scaled with r_min^2 in that case.
"""
import argparse

from hardylab.evolution import omega_ladder
from hardylab.forms import EffectivePotential
from hardylab.weights import WeightSpec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=3)
    ap.add_argument("--coefficient", type=float, default=0.2)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--horizon-factor", type=float, default=3e5)
    ap.add_argument("--scheme", choices=("implicit_euler", "crank_nicolson"), default="implicit_euler")
    args = ap.parse_args(argv)

    spec = WeightSpec(args.N)
    critical = (spec.N - 2) ** 2 / 4
    if args.coefficient > critical:
        horizon = lambda r: args.horizon_factor * r * r  # noqa: E731
    else:
        horizon = lambda r: args.T  # noqa: E731
    r_mins = [10.0 ** -(2 + j) for j in range(args.levels)]
    rows = omega_ladder(spec, EffectivePotential(args.coefficient), r_mins, n=args.n,
                        horizon=horizon, scheme=args.scheme)
    print(f"coefficient {args.coefficient}  critical {critical}")
    for r_min, T, omega in rows:
        print(f"r_min={r_min:8.1e}  T={T:9.3g}  omega={omega: .6g}")


if __name__ == "__main__":
    main()
