"""Duality and metric residuals over a parameter grid for the three reference families.

Writes one CSV per family with eta, F, E, the Legendre residual (F
integrated along the grid) and the largest duality residual.
"""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from phifam import duality_residuals, legendre_sweep, metric_from_divergence
from phifam.fixtures import constant_family, identity_family, power_family
from phifam.geometry import dual_coordinates


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("duality_out"))
    parser.add_argument("--points", type=int, default=20)
    parser.add_argument("--lo", type=float, default=0.5)
    parser.add_argument("--hi", type=float, default=3.0)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(args.lo, args.hi, args.points)
    families = {"identity": identity_family(), "q0.5": power_family(0.5), "constant": constant_family()}
    for name, fam in families.items():
        start = time.perf_counter()
        legendre = legendre_sweep(fam, grid)
        path = args.out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "eta", "F", "E", "legendre_residual", "max_duality_residual", "metric_rel_error"])
            for theta, leg in zip(grid, legendre):
                dp = dual_coordinates(fam, theta)
                worst = max(duality_residuals(fam, theta).norms().values())
                rel = max(metric_from_divergence(fam, theta).relative_errors().values())
                writer.writerow([f"{theta:.6g}", f"{dp.eta[0]:.12g}", f"{dp.F:.12g}", f"{dp.E:.12g}", f"{leg:.3e}", f"{worst:.3e}", f"{rel:.3e}"])
        print(f"{name:>9}: max |Legendre| {np.abs(legendre).max():.2e}  ({time.perf_counter() - start:.1f} s) -> {path}")


if __name__ == "__main__":
    main()
