#!/usr/bin/env python3
"""Torsion of a complex that is not of determinant class.

The two-term family complex whose differential multiplies by e^(-1/xi)
over the unit interval has a spectral density with an essential logarithmic
divergence at zero: no scalar torsion exists. The pipeline still returns a
well-formed determinant-line element together with the divergence
certificate; this script prints both.
"""

import argparse
import json

import numpy as np

from l2torsion.backends import uniform_interval_samples
from l2torsion.extcoh import ChainComplexC
from l2torsion.harness import family_multiplication_map
from l2torsion.serialize import dumps, report_to_json
from l2torsion.torsion import torsion


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid", type=int, default=2000)
    args = parser.parse_args()

    xs = uniform_interval_samples(args.grid)[:, 0]
    with np.errstate(over="ignore", under="ignore"):
        diff = family_multiplication_map(np.exp(-1.0 / xs))
    c = ChainComplexC((diff.source, diff.target), (diff,))
    report = torsion(c)
    print(dumps(report_to_json(report)))


if __name__ == "__main__":
    main()
