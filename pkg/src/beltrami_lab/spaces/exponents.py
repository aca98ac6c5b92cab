"""Exact exponent arithmetic: criticality, extremal exponent, admissible ranges, embeddings.

All comparisons are carried out in :class:`fractions.Fraction`.  Floats are
read through their shortest ``repr`` so that ``0.3`` means ``3/10``.
Theorem thresholds are strict: equality is never admissible.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

__all__ = [
    "exact",
    "SobolevIndex",
    "Criticality",
    "classify",
    "extremal_exponent",
    "QThreshold",
    "admissible_q_threshold",
    "corollary_exponents",
    "Verdict",
    "embedding_holds",
]

DIM = 2


def exact(x):
    """``Fraction`` for finite reals, ``math.inf`` passes through."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float) and math.isinf(x):
        if x < 0:
            raise ValueError("negative infinity is not a valid exponent")
        return math.inf
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        return Fraction(x.strip())
    return Fraction(repr(float(x)))


def _recip(x):
    return Fraction(0) if x == math.inf else 1 / x


class Criticality(str, enum.Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


@dataclass(frozen=True)
class SobolevIndex:
    """Smoothness ``s``, integrability ``p`` and fine index ``q`` of ``F^s_{p,q}`` on the plane.

    ``p > 1`` is required unless built through :meth:`quasi`, which admits the
    range ``2/(2+s) < p <= 1`` used by the difference characterisation.
    """

    s: float
    p: float
    q: float = 2
    d: int = DIM
    _quasi: bool = False

    def __post_init__(self):
        if self.d != DIM:
            raise ValueError(f"only dimension {DIM} is supported")
        s, p, q = exact(self.s), exact(self.p), exact(self.q)
        if s == math.inf:
            raise ValueError("smoothness must be finite")
        if not q > 0:
            raise ValueError(f"fine index q must be positive, got {self.q}")
        if self._quasi:
            if not (p > Fraction(DIM) / (DIM + s)):
                raise ValueError(f"p must exceed d/(d+s) = {float(Fraction(DIM) / (DIM + s)):.6g}")
        elif not p > 1:
            raise ValueError(f"integrability p must exceed 1, got {self.p}")

    @classmethod
    def quasi(cls, s, p, q=2):
        return cls(s, p, q, DIM, True)

    @property
    def s_exact(self) -> Fraction:
        return exact(self.s)

    @property
    def p_exact(self):
        return exact(self.p)

    @property
    def q_exact(self):
        return exact(self.q)

    @property
    def differential_dimension(self) -> Fraction:
        """``s - d/p``."""
        return self.s_exact - DIM * _recip(self.p_exact)

    def __str__(self):
        return f"F^{self.s}_{{{self.p},{self.q}}}"


def classify(index: SobolevIndex) -> Criticality:
    dd = index.differential_dimension
    if dd > 0:
        return Criticality.SUPERCRITICAL
    if dd == 0:
        return Criticality.CRITICAL
    return Criticality.SUBCRITICAL


def _kappa(kappa) -> Fraction:
    k = exact(kappa)
    if k == math.inf or not (0 < k < 1):
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    return k


def extremal_exponent(kappa, critical: bool = False):
    """``p_kappa = 1 + 1/kappa``, or ``inf`` under the critical convention."""
    k = _kappa(kappa)
    if critical:
        return math.inf
    return 1 + 1 / k


@dataclass(frozen=True)
class QThreshold:
    criticality: Criticality
    p_kappa: object
    smoothness: Fraction
    threshold: Fraction  # admissible iff 1/q > threshold
    applicable: bool

    @property
    def verdict(self) -> str:
        return "applicable" if self.applicable else "hypothesis-violated"

    @property
    def q_max(self):
        """Supremum of admissible ``q`` (exclusive)."""
        return math.inf if self.threshold == 0 else 1 / self.threshold

    def admits(self, q) -> bool:
        """Whether the conclusion covers ``W^{s,q}`` (strictly inside the range)."""
        return self.applicable and _recip(exact(q)) > self.threshold

    def as_dict(self) -> dict:
        return {
            "criticality": self.criticality.value,
            "p_kappa": str(self.p_kappa),
            "smoothness": str(self.smoothness),
            "threshold_inv_q": str(self.threshold),
            "threshold_inv_q_float": float(self.threshold),
            "verdict": self.verdict,
        }


def _hypothesis_gap(k: Fraction) -> Fraction:
    """``1/p_kappa' - 1/p_kappa = (1 - kappa) / (1 + kappa)``."""
    return (1 - k) / (1 + k)


def admissible_q_threshold(index: SobolevIndex, kappa) -> QThreshold:
    k = _kappa(kappa)
    crit = classify(index)
    inv_p = _recip(index.p_exact)
    if crit is Criticality.SUPERCRITICAL:
        raise ValueError(f"{index} is supercritical; the regularity theorem does not cover it")
    if crit is Criticality.CRITICAL:
        return QThreshold(crit, math.inf, index.s_exact, inv_p, True)
    pk = extremal_exponent(k)
    applicable = inv_p < _hypothesis_gap(k)
    return QThreshold(crit, pk, index.s_exact, inv_p + 1 / pk, applicable)


def corollary_exponents(index: SobolevIndex, kappa, theta) -> QThreshold:
    """Smoothness ``theta*s`` and threshold ``theta/p + 1/p_kappa`` for the interpolated range."""
    th = exact(theta)
    if th == math.inf or not (0 < th <= 1):
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    k = _kappa(kappa)
    if classify(index) is not Criticality.SUBCRITICAL:
        raise ValueError(f"{index} is not subcritical (need s < 2/p)")
    pk = extremal_exponent(k)
    lead = th * _recip(index.p_exact)
    return QThreshold(
        Criticality.SUBCRITICAL, pk, th * index.s_exact, lead + 1 / pk, lead < _hypothesis_gap(k)
    )


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    NOT_DERIVABLE = "not-derivable"


def _trivial(s0, q0, s1, q1) -> bool:
    # same p: F^s_{p,q0} in F^s_{p,q1} for q1 >= q0; F^{s+e}_{p,q0} in F^s_{p,q1} for any q
    return s0 > s1 or (s0 == s1 and q1 >= q0)


def embedding_holds(src: SobolevIndex, dst: SobolevIndex, *, compact: bool = False,
                    bounded: bool = False) -> Verdict:
    """Whether ``F(src) ⊂ F(dst)`` follows from the elementary embedding rules.

    Rules, possibly chained: monotonicity in ``s`` and ``q`` at fixed ``p``; the
    Sobolev slope rule (equal differential dimension, ``p0 < p1``); for compactly
    supported functions, lowering ``p`` down to ``d/(d+s)``; for bounded and
    compactly supported functions, ``F^{s2}_{p2,q2}`` whenever
    ``0 < s2 < s < d/p`` and ``s2 p2 <= s p``.  Anything else is reported as
    not derivable, never as false.
    """
    s0, p0, q0 = src.s_exact, src.p_exact, src.q_exact
    s1, p1, q1 = dst.s_exact, dst.p_exact, dst.q_exact
    if p0 == p1 and _trivial(s0, q0, s1, q1):
        return Verdict.HOLDS
    if p0 < p1:
        dd0, dd1 = src.differential_dimension, dst.differential_dimension
        if dd0 > dd1 or (dd0 == dd1 and s1 < s0):
            return Verdict.HOLDS
    if compact and p1 <= p0 and _trivial(s0, q0, s1, q1) and s1 > 0:
        floor = Fraction(DIM) / (DIM + s1)
        if p1 > floor and q1 > floor:
            return Verdict.HOLDS
    if compact and bounded and p1 != math.inf and p0 != math.inf:
        if 0 < s1 < s0 < DIM / p0 and s1 * p1 <= s0 * p0:
            return Verdict.HOLDS
    return Verdict.NOT_DERIVABLE
