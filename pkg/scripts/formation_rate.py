"""Order-of-magnitude molecule formation rate for a trapped atom mixture under a cw laser.

    python scripts/formation_rate.py --temperature 1e-3 --intensity 1e3
"""

import argparse

from polardimer.model import synthetic_lics
from polardimer.transitions import ENERGY_WIDTHS, cross_section_scan, formation_rate


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--temperature", type=float, default=1e-3, help="kelvin")
    p.add_argument("--density", type=float, default=1e12, help="atoms per cm^3, each species")
    p.add_argument("--volume", type=float, default=1e-6, help="illuminated volume, cm^3")
    p.add_argument("--intensity", type=float, default=1e3, help="W/cm^2")
    p.add_argument("--fields", type=float, nargs="+", default=[0.0, 1e-5])
    p.add_argument("--v", type=int, default=57)
    args = p.parse_args()

    curve = synthetic_lics()
    res = cross_section_scan(curve, args.fields, [args.temperature], [(args.v, 0, 0), (args.v, 1, 0)])
    for pt in res.points:
        rates = {w: formation_rate(pt.sigma, args.density, args.density, args.volume, args.intensity,
                                   pt.photon_energy, args.temperature, curve.reduced_mass, energy_width=w)
                 for w in ENERGY_WIDTHS}
        print(f"F={pt.F:8.2e}  {pt.target_label}  sigma={pt.sigma:.3e} a.u.  "
              + "  ".join(f"{w}: {r.rate_per_second:.2e}/s" for w, r in rates.items()))


if __name__ == "__main__":
    main()
