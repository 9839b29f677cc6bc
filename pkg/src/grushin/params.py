"""Grushin parameter triple, indicial polynomial and the self-adjointness classifier.

The whole toolkit is driven by the triple (alpha, n, c): order of the metric
singularity, dimension of the singular set, and curvature coupling.  The
indicial polynomial of the weighted operator x^2(Delta - c*S) is the monic
quadratic

    p(lambda) = lambda^2 - (1 + alpha*n) * lambda + c*alpha*n*(alpha*n + alpha + 2)

whose discriminant ``mu`` decides everything: mu > 4 means essential
self-adjointness, mu < 4 means infinite deficiency indices, mu = 4 is the
critical case the classifier refuses to decide.

Sign convention: the source material states the discriminant once with a
``+4c`` cross term and derives the polynomial with the opposite sign; we use

    mu = (1 + alpha*n)^2 - 4*c*alpha*n*(alpha*n + alpha + 2)

which is the variant forced by the limit-circle oracle nu^2 = mu/4 (see the
``deficiency`` module) and by the known absence of quantum confinement for
alpha = n = 1, c > 0.  The other variant is available via
``discriminant(..., legacy_plus_sign=True)`` and is never used internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "GrushinParams",
    "IndicialData",
    "ThetaLattice",
    "SelfAdjointnessVerdict",
    "Verdict",
    "Regime",
    "discriminant",
    "indicial_data",
    "classify",
    "theta_lattice",
    "resonance",
    "forbidden_c",
    "complex_to_json",
    "complex_from_json",
]

#: absolute tolerance for merging coincident Theta-lattice values
THETA_MERGE_TOL = 1e-12

#: relative tolerance around mu = 4 that triggers the Critical verdict
MU4_TOL = 1e-9


def complex_to_json(z: complex) -> dict:
    """Stable JSON encoding of a complex number."""
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(d: dict) -> complex:
    return complex(d["re"], d["im"])


@dataclass(frozen=True)
class GrushinParams:
    """The parameter triple (alpha, n, c).

    alpha > -1 is the order of the metric singularity, n >= 1 the dimension
    of the singular set, c the coupling constant of the scalar-curvature
    potential in Delta - c*S.
    """

    alpha: float
    n: int
    c: float

    def __post_init__(self):
        if not self.alpha > -1:
            raise ValueError(f"alpha must be > -1, got {self.alpha}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def alpha_n(self) -> float:
        return self.alpha * self.n

    def to_json_dict(self) -> dict:
        return {"alpha": float(self.alpha), "n": self.n, "c": float(self.c)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GrushinParams":
        return cls(alpha=d["alpha"], n=d["n"], c=d["c"])


def discriminant(alpha: float, n: int, c: float, legacy_plus_sign: bool = False) -> float:
    """Discriminant mu of the indicial polynomial.

    ``legacy_plus_sign=True`` selects the (1+an)^2 + 4c... variant that
    appears once in the source material; it fails the limit-circle oracle
    and exists only for comparison.
    """
    an = alpha * n
    cross = 4.0 * c * an * (an + alpha + 2.0)
    return (1.0 + an) ** 2 + cross if legacy_plus_sign else (1.0 + an) ** 2 - cross


@dataclass(frozen=True)
class IndicialData:
    """Coefficients, discriminant and ordered roots of the indicial polynomial."""

    p_coeffs: tuple  # (1, -(1+alpha n), +c alpha n (alpha n + alpha + 2)), monic
    mu: float
    lambda_plus: complex
    lambda_minus: complex

    def p(self, lam: complex) -> complex:
        """Evaluate the indicial polynomial."""
        a2, a1, a0 = self.p_coeffs
        return a2 * lam * lam + a1 * lam + a0

    def p_prime(self, lam: complex) -> complex:
        a2, a1, _ = self.p_coeffs
        return 2.0 * a2 * lam + a1

    @property
    def sqrt_mu(self) -> complex:
        """lambda_plus - lambda_minus; i*sqrt(|mu|) when mu < 0."""
        return self.lambda_plus - self.lambda_minus

    def to_json_dict(self) -> dict:
        return {
            "p_coeffs": list(self.p_coeffs),
            "mu": self.mu,
            "lambda_plus": complex_to_json(self.lambda_plus),
            "lambda_minus": complex_to_json(self.lambda_minus),
        }


def indicial_data(params: GrushinParams) -> IndicialData:
    """Closed-form indicial data: no iteration, exact root relations.

    Roots are lambda_pm = ((1 + alpha n) +- sqrt(mu))/2.  For mu < 0 the
    roots are complex conjugates and lambda_plus is the one with positive
    imaginary part (fixed convention).
    """
    an = params.alpha_n
    b = 1.0 + an
    c0 = params.c * an * (an + params.alpha + 2.0)
    mu = discriminant(params.alpha, params.n, params.c)
    if mu >= 0.0:
        root = math.sqrt(mu)
        lam_plus = complex((b + root) / 2.0, 0.0)
        lam_minus = complex((b - root) / 2.0, 0.0)
    else:
        imag = math.sqrt(-mu) / 2.0
        lam_plus = complex(b / 2.0, imag)
        lam_minus = complex(b / 2.0, -imag)
    return IndicialData(p_coeffs=(1.0, -b, c0), mu=mu, lambda_plus=lam_plus, lambda_minus=lam_minus)


@dataclass(frozen=True)
class ThetaLattice:
    """The exponent lattice Theta = {(1+alpha) i + j >= 0 : i, j in N0} up to a cutoff.

    Elements are sorted strictly increasing; each carries its lexicographically
    minimal (i, j) witness.  Values closer than THETA_MERGE_TOL are merged
    (exact rational arithmetic is used when alpha is an int or Fraction, so
    rational lattices never suffer false merges).
    """

    alpha: float
    cutoff: float
    elements: tuple
    witnesses: tuple

    def __contains__(self, value: float) -> bool:
        return self.index_of(value) is not None

    def index_of(self, value: float, tol: float = 1e-9) -> Optional[int]:
        """Index of the lattice element matching ``value`` within ``tol``."""
        import bisect

        i = bisect.bisect_left(self.elements, value - tol)
        if i < len(self.elements) and abs(self.elements[i] - value) <= tol:
            return i
        return None

    def witness_for(self, value: float, tol: float = 1e-9):
        i = self.index_of(value, tol)
        return None if i is None else self.witnesses[i]

    def to_json_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "cutoff": float(self.cutoff),
            "elements": [float(t) for t in self.elements],
            "witnesses": [list(w) for w in self.witnesses],
        }


def theta_lattice(alpha: Union[float, Fraction], cutoff: float) -> ThetaLattice:
    """Enumerate the Theta lattice exactly up to ``cutoff``.

    i ranges over 0..ceil(cutoff/(1+alpha)), j over 0..floor(cutoff).
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    exact = isinstance(alpha, (int, Fraction)) and not isinstance(alpha, bool)
    step = (Fraction(alpha) + 1) if exact else (float(alpha) + 1.0)
    if not step > 0:
        raise ValueError(f"alpha must be > -1, got {alpha}")

    cut = Fraction(cutoff).limit_denominator(10**12) if exact else float(cutoff)
    entries = []  # (value, i, j)
    i = 0
    while True:
        base = step * i
        if base > cut + (0 if exact else THETA_MERGE_TOL):
            break
        j = 0
        while True:
            val = base + j
            if val > cut + (0 if exact else THETA_MERGE_TOL):
                break
            entries.append((val, i, j))
            j += 1
        i += 1

    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    elements, witnesses = [], []
    for val, i, j in entries:
        fval = float(val)
        if elements and (
            (exact and val == entries_last) or (not exact and abs(fval - elements[-1]) <= THETA_MERGE_TOL)
        ):
            continue  # coincident value, keep the earlier (lex-minimal) witness
        if exact:
            entries_last = val
        elements.append(fval)
        witnesses.append((i, j))
    return ThetaLattice(alpha=float(step) - 1.0, cutoff=float(cut), elements=tuple(elements), witnesses=tuple(witnesses))


class Verdict(str, Enum):
    ESSENTIALLY_SELF_ADJOINT = "EssentiallySelfAdjoint"
    NOT_ESA_INFINITE_DEFICIENCY = "NotESA_InfiniteDeficiency"
    CRITICAL_MU4_INDETERMINATE = "Critical_Mu4_Indeterminate"


class Regime(str, Enum):
    MU_NEG = "mu_neg"
    MU_IN_0_4 = "mu_in_0_4"  # closed at 0: 0 <= mu < 4
    MU_EQ_4 = "mu_eq_4"
    MU_GT_4 = "mu_gt_4"


@dataclass(frozen=True)
class SelfAdjointnessVerdict:
    verdict: Verdict
    mu: float
    regime: Regime
    resonant: bool

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "mu": self.mu,
            "regime": self.regime.value,
            "resonant": self.resonant,
        }


def classify(params: GrushinParams) -> SelfAdjointnessVerdict:
    """Classify essential self-adjointness of Delta - c*S from mu alone.

    mu > 4: essentially self-adjoint; mu < 4: not (infinite deficiency
    indices); |mu - 4| below MU4_TOL * max(1, |mu|): critical, reported as
    indeterminate because the classification is discontinuous there and the
    theory declines to decide it.
    """
    mu = discriminant(params.alpha, params.n, params.c)
    if abs(mu - 4.0) < MU4_TOL * max(1.0, abs(mu)):
        return SelfAdjointnessVerdict(
            Verdict.CRITICAL_MU4_INDETERMINATE, mu, Regime.MU_EQ_4, resonant=True
        )
    res, _ = resonance(params)
    if mu > 4.0:
        return SelfAdjointnessVerdict(Verdict.ESSENTIALLY_SELF_ADJOINT, mu, Regime.MU_GT_4, res)
    regime = Regime.MU_NEG if mu < 0.0 else Regime.MU_IN_0_4
    return SelfAdjointnessVerdict(Verdict.NOT_ESA_INFINITE_DEFICIENCY, mu, regime, res)


def resonance(params: GrushinParams, cutoff: Optional[float] = None, tol: float = 1e-9):
    """Whether the indicial roots are separated by a Theta-lattice element.

    Returns (flag, witness): witness is the lex-minimal (i, j) with
    (1+alpha) i + j = sqrt(mu).  For mu < 0 the gap is imaginary and the
    answer is False.
    """
    mu = discriminant(params.alpha, params.n, params.c)
    if mu < 0.0:
        return False, None
    gap = math.sqrt(mu)
    if cutoff is None:
        cutoff = gap + 1.0
    lat = theta_lattice(params.alpha, max(cutoff, gap + 0.5))
    w = lat.witness_for(gap, tol=tol * max(1.0, gap))
    return (w is not None), w


def forbidden_c(alpha: float, n: int) -> float:
    """The unique coupling c0 with mu(alpha, n, c0) = 4 (no left parametrix there).

        c0 = (-3 + 2 alpha n + n^2 alpha^2) / (4 n alpha (2 + alpha + alpha n))

    Undefined at alpha = 0, where the curvature coupling drops out of mu.
    """
    if not alpha > -1:
        raise ValueError(f"alpha must be > -1, got {alpha}")
    if alpha == 0.0:
        raise ValueError("c0 is singular at alpha = 0: mu does not depend on c there")
    an = alpha * n
    denom = 4.0 * n * alpha * (2.0 + alpha + an)
    if denom == 0.0:
        raise ValueError(f"degenerate denominator at alpha={alpha}, n={n}")
    return (-3.0 + 2.0 * an + an * an) / denom
