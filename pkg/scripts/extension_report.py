#!/usr/bin/env python3
"""Exercise the five named extension families and the Green-identity check.

For each family, draw random parameters, verify unitarity and isotropy of the
induced gluing on random jets, and run the boundary-pairing quadrature against
the closed-form asymmetry value in both discriminant regimes.
"""

import sys

import numpy as np

from grushin.extensions import (
    BoundaryJet,
    asymmetry_form,
    greens_identity_check,
    lagrangian_from_unitary,
    named_family,
    realize_jet,
)
from grushin.params import GrushinParams


def run():
    rng = np.random.default_rng(0)
    params = GrushinParams(0.5, 1, 0.0)
    modes = [(0,), (1,), (-1,)]
    for kind in (1, 2, 3, 4, 5):
        kwargs = {}
        if kind in (2, 3):
            kwargs["gamma"] = float(rng.normal())
        if kind == 4:
            kwargs = {"gamma": float(rng.normal()), "b": complex(rng.normal(), rng.normal())}
        if kind == 5:
            h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            kwargs["Gamma"] = h + h.conj().T
        spec = named_family(kind, **kwargs)
        constraint = lagrangian_from_unitary(spec)
        worst = 0.0
        for _ in range(200):
            u = constraint.random_jet(modes, rng)
            v = constraint.random_jet(modes, rng)
            scale = float(np.max(np.abs(u.coeffs)) * np.max(np.abs(v.coeffs))) + 1e-300
            worst = max(worst, abs(asymmetry_form(u, v, params)) / scale)
        print(f"family {kind}: unitary, worst isotropy defect {worst:.2e}")

    for p in (GrushinParams(1.0, 1, 1.0), GrushinParams(0.5, 1, 0.0)):
        u_jet = BoundaryJet.zero([(1,)])
        v_jet = BoundaryJet.zero([(1,)])
        u_jet.coeffs[:] = rng.normal(size=(1, 4)) + 1j * rng.normal(size=(1, 4))
        v_jet.coeffs[:] = rng.normal(size=(1, 4)) + 1j * rng.normal(size=(1, 4))
        u = realize_jet(p, u_jet, cutoff=12.0)
        v = realize_jet(p, v_jet, cutoff=12.0)
        numeric, closed, rel = greens_identity_check(p, u, v, np.geomspace(0.02, 0.12, 6))
        print(f"greens check (alpha={p.alpha}, c={p.c}, mu sign "
              f"{'neg' if p.c > 0.2 else 'pos'}): rel error {rel:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
