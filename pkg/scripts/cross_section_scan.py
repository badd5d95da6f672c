"""Stimulated-association cross sections of the two uppermost s/p targets versus field.

    python scripts/cross_section_scan.py --out results/sigma.csv
"""

import argparse
from pathlib import Path

import numpy as np

from polardimer.model import synthetic_lics
from polardimer.transitions import cross_section_scan, write_scan_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--f-max", type=float, default=4e-5, help="largest field (a.u.)")
    p.add_argument("--num", type=int, default=9)
    p.add_argument("--temperatures", type=float, nargs="+", default=[10e-6, 100e-6, 500e-6], help="kelvin")
    p.add_argument("--v", type=int, default=57, help="vibrational target level")
    p.add_argument("--out", type=Path, default=Path("results/sigma.csv"))
    args = p.parse_args()

    curve = synthetic_lics()
    fields = np.concatenate([[0.0], np.geomspace(args.f_max / 10 ** 2, args.f_max, args.num - 1)])
    res = cross_section_scan(curve, fields, args.temperatures, [(args.v, 0, 0), (args.v, 1, 0)])
    for msg in res.diagnostics:
        print("warning:", msg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_scan_csv(args.out, res.points)
    print(f"{'T [K]':>8} {'F [a.u.]':>10} {'sigma(v,0,0)':>13} {'sigma(v,1,0)':>13}")
    table = {(q.T, q.F, q.target_label[1]): q.sigma for q in res.points}
    for T in sorted(args.temperatures):
        for F in fields:
            s0, s1 = table.get((T, F, 0), np.nan), table.get((T, F, 1), np.nan)
            print(f"{T:8.1e} {F:10.2e} {s0:13.4e} {s1:13.4e}")
    print("wrote", args.out)


if __name__ == "__main__":
    main()
