"""Final rotational distributions in the v = 0 band after the radiative cascade,
with and without a strong field, on the scaled synthetic molecule.

    python scripts/cascade_distributions.py --initial 13 1 0 --fields 0 6.4e-4
"""

import argparse
from pathlib import Path

from polardimer.cascade import (CascadeSettings, check_leak, cumulative_by_J, distribution_summary,
                                physical_graph, propagate, write_distribution_csv)
from polardimer.model import synthetic_lics
from polardimer.radial import build_grid, recommended_points


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scale", type=float, default=16.0, help="reduced-mass divisor of the model")
    p.add_argument("--initial", type=int, nargs=3, default=[13, 1, 0], metavar=("v", "J", "M"))
    p.add_argument("--fields", type=float, nargs="+", default=[0.0, 6.4e-4])
    p.add_argument("--j-max", type=int, default=30)
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args()

    curve = synthetic_lics(args.scale)
    n = recommended_points(curve, 3.0, 40.0, 1e-4)
    grid = build_grid(3.0, 40.0, n, mapping="envelope", curve=curve, e_cut=1e-4)
    settings = CascadeSettings(J_max=args.j_max, M_max=args.j_max)
    args.out.mkdir(parents=True, exist_ok=True)
    for F in args.fields:
        graph = physical_graph(curve, grid, F, tuple(args.initial), settings)
        dist = propagate(graph, tuple(args.initial))
        check_leak(dist, settings)
        s = distribution_summary(dist)
        path = args.out / f"distribution_F{F:.2e}.csv"
        write_distribution_csv(path, dist)
        cum = cumulative_by_J(dist)
        print(f"F = {F:.2e} a.u.: {len(graph.labels)} states, lifetime of initial "
              f"{graph.lifetime_seconds(tuple(args.initial)):.3g} s, mean time to band {dist.mean_time_s:.3g} s")
        print(f"  most populated (J, M) = ({s['max_population_state']['J']}, {s['max_population_state']['M']}) "
              f"with P = {s['max_population_state']['P']:.4f}; cumulative peak at J = {s['cumulative_peak_J']}")
        print("  P(J) = " + ", ".join(f"{J}: {v:.3f}" for J, v in cum.items() if v > 5e-3))
        print("  wrote", path)


if __name__ == "__main__":
    main()
