#!/usr/bin/env python3
"""Shooting-method deficiency sweep over the quantum-confinement breakdown points.

For alpha = n = 1 the curvature couplings c in {1/3, 2/3, 1} from the
quantization literature all give mu < 4: the per-mode counts are nonzero for
every Fourier mode and the deficiency index is infinite.  The sweep prints
the per-mode table and the aggregate verdict for each coupling.
"""

import argparse
import sys

from grushin.deficiency import aggregate_deficiency
from grushin.params import GrushinParams, classify


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--couplings", type=float, nargs="+", default=[1 / 3, 2 / 3, 1.0])
    ap.add_argument("--kmax", type=int, default=8)
    args = ap.parse_args(argv)

    for c in args.couplings:
        p = GrushinParams(args.alpha, args.n, c)
        verdict = classify(p)
        report = aggregate_deficiency(p, args.kmax)
        print(f"alpha={args.alpha} n={args.n} c={c:.6g}  mu={verdict.mu:.6g}  "
              f"verdict={verdict.verdict.value}")
        for k, cp, cm in report.per_mode:
            print(f"  k={k}: n+={cp} n-={cm}")
        print(f"  endpoint: {report.classification_at_zero.kind}  "
              f"aggregate: {report.aggregate}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
