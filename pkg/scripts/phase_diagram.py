#!/usr/bin/env python3
"""Render the (alpha, c) self-adjointness phase diagram for a chosen n.

Writes phase_n<N>.svg / phase_n<N>.csv into the working directory (or
GRUSHIN_OUTDIR).  The black curve is the critical locus c0(alpha) where
mu = 4 and the classification is indeterminate; for n = 1 it passes through
(1, 0).
"""

import argparse
import sys

from grushin.cli import main as cli_main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--alpha", default="0.05:3.0:0.05")
    ap.add_argument("--c", default="-1.0:1.0:0.05")
    args = ap.parse_args(argv)
    return cli_main(
        [
            "phase-diagram",
            "--alpha", args.alpha,
            f"--c={args.c}",
            "--n", str(args.n),
            "--out-svg", f"phase_n{args.n}.svg",
            "--out-csv", f"phase_n{args.n}.csv",
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
