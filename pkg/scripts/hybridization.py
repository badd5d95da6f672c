"""Rotational hybridization <J^2> - J(J+1) and orientation of labeled levels versus field.

    python scripts/hybridization.py --targets 57 0 0 57 1 0 --f-max 2e-5
"""

import argparse
import math

import numpy as np

from polardimer.eigen import (ContractedSolver, RadialChannels, expectation, hybridization, label_along,
                              scan_path)
from polardimer.model import synthetic_lics
from polardimer.radial import build_grid, recommended_points


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--targets", type=int, nargs="+", default=[57, 0, 0, 57, 1, 0], help="flat list of v J M")
    p.add_argument("--f-max", type=float, default=2e-5)
    p.add_argument("--num", type=int, default=11)
    p.add_argument("--j-max", type=int, default=20)
    p.add_argument("--label-steps", type=int, default=64)
    args = p.parse_args()
    targets = [tuple(args.targets[i:i + 3]) for i in range(0, len(args.targets), 3)]

    curve = synthetic_lics()
    n = recommended_points(curve, 3.0, 60.0, 1e-3, l_res=20)
    grid = build_grid(3.0, 60.0, n, mapping="envelope", curve=curve, e_cut=1e-3, l_res=20)
    channels = RadialChannels(grid, curve, args.j_max)
    channels = channels.restrict(-math.inf, -channels.margin)
    fields = np.linspace(0.0, args.f_max, args.num)
    # labels are carried along a fine path; coarse steps can jump avoided crossings
    path = scan_path(fields, args.label_steps)
    for M in sorted({t[2] for t in targets}):
        solver = ContractedSolver(channels, M)
        zero = [s for s in solver.solve(0.0) if s.label is not None]
        for F, states in zip(path, label_along(solver.solve, path, zero)):
            if F not in fields:
                continue
            by_label = {s.label: s for s in states}
            for t in (t for t in targets if t[2] == M):
                s = by_label[t]
                print(f"F={F:9.2e}  {t}  E={s.energy:+.6e}  J2_h={hybridization(s):8.4f}  "
                      f"<cos>={expectation(s, 'cos'):+.4f}")


if __name__ == "__main__":
    main()
