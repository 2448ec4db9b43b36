#!/usr/bin/env python3
"""Grid-refinement study for the circle with regular coefficients.

For each grid size, computes the torsion of the one-cell circle under the
function-model regular representation (the scalar should converge to 1,
the Mahler measure of z - 1) and the growth exponent of the spectral
density near zero (should converge to 1).
"""

import argparse

from l2torsion.cellular import (
    circle_complex,
    circle_regular_representation,
    cochain_complex,
    combinatorial_torsion,
)
from l2torsion.spectral import ns_exponent, singular_density


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grids", type=int, nargs="+",
                        default=[64, 256, 1024, 4096, 16384])
    args = parser.parse_args()

    print(f"{'grid':>7}  {'torsion':>12}  {'|t - 1|':>10}  {'exponent':>8}")
    for grid in args.grids:
        rep = circle_regular_representation(grid)
        report = combinatorial_torsion(circle_complex(), rep)
        density = singular_density(cochain_complex(circle_complex(), rep).diffs[0])
        alpha = ns_exponent(density)
        value = report.scalar_value
        print(
            f"{grid:>7}  {value:>12.8f}  {abs(value - 1.0):>10.2e}  "
            f"{alpha if alpha is not None else float('nan'):>8.4f}"
        )


if __name__ == "__main__":
    main()
