"""Decision procedures for strict positive definiteness on S^m x S^M.

* DC-strict positive definiteness holds iff the support contains infinitely
  many ``(k, l)`` with ``k + l`` even and infinitely many with ``k + l`` odd.
* Strict positive definiteness holds iff every parity quadrant contains a
  sequence along which both ``k`` and ``l`` tend to infinity.

Both criteria read only the support of the coefficient scheme, so the
verdicts hold for ``m`` or ``M`` infinite as well.  Circles are rejected.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import gegenbauer as gg
from .errors import SchemeError, UnsupportedDimension
from .kernel import (QUADRANTS, CoefficientScheme, GeometricScheme, SparseScheme,
                     index_quadrants)

__all__ = ["Level", "Verdict", "classify", "dimension_walk"]

WALK_TAIL_TOL = 1e-12


class Level(str, enum.Enum):
    SPD = "SPD"
    DC_SPD_ONLY = "DC_SPD_ONLY"
    PD_ONLY = "PD_ONLY"

    @property
    def rank(self) -> int:
        return {"PD_ONLY": 0, "DC_SPD_ONLY": 1, "SPD": 2}[self.value]


@dataclass(frozen=True)
class Verdict:
    level: Level
    reasons: dict = field(default_factory=dict)
    caveat: bool = False  # finite support: never strict in either sense

    def to_dict(self) -> dict:
        return {"level": self.level.value, "reasons": dict(self.reasons), "caveat": self.caveat}


def _reject_circles(s: CoefficientScheme) -> None:
    for name in ("m", "M"):
        d = getattr(s, name)
        if not gg.is_infinite(d) and d < 2:
            raise UnsupportedDimension(f"{name} = {d}: circle cases are open and not classified")


def classify(s: CoefficientScheme) -> Verdict:
    _reject_circles(s)
    iq = index_quadrants(s)
    reasons = {
        "even_sum_infinite": iq.even_sum_infinite,
        "odd_sum_infinite": iq.odd_sum_infinite,
    }
    for i, j in QUADRANTS:
        reasons[f"joint_unbounded_{i}{j}"] = iq.joint_unbounded((i, j))
    dc = reasons["even_sum_infinite"] and reasons["odd_sum_infinite"]
    spd = all(iq.joint_unbounded(q) for q in QUADRANTS)
    if spd and not dc:
        raise AssertionError("SPD criterion holds but DC-SPD criterion fails")
    if spd:
        level = Level.SPD
    elif dc:
        level = Level.DC_SPD_ONLY
    else:
        level = Level.PD_ONLY
    return Verdict(level, reasons, caveat=isinstance(s, SparseScheme))


def dimension_walk(s: CoefficientScheme, target_m, kmax: int, lmax: int) -> np.ndarray:
    """Re-expand a scheme on S^inf x S^M in the Gegenbauer basis of S^target_m.

    Returns ``c[k, l] = sum_n c(k + 2n, target_m, n) a_{k+2n, l}`` for
    ``k <= kmax``, ``l <= lmax``, where ``c(., ., .)`` are the monomial
    decomposition coefficients.  The n-sum of a geometric scheme is cut once
    its tail (bounded using ``c(., ., .) <= 1``) drops below ``1e-12``.
    """
    if not gg.is_infinite(s.m):
        raise SchemeError("dimension_walk needs a scheme with m = inf")
    target_m = gg.check_dim(target_m, allow_infinite=False)
    out = np.zeros((kmax + 1, lmax + 1))
    if isinstance(s, SparseScheme):
        for kk, l, a in s.entries:
            if l > lmax:
                continue
            for d, v in gg.monomial_decomposition(kk, target_m):
                if d <= kmax:
                    out[d, l] += v * a
        return out
    if not isinstance(s, GeometricScheme):
        raise SchemeError(f"no tail bound available for {type(s).__name__}")
    # sum_{n > N} c r^{k+2n} q^l <= c r^{2N+2} / (1 - r^2)
    n_terms = 0
    while s.c * s.r ** (2 * n_terms + 2) / (1.0 - s.r ** 2) > WALK_TAIL_TOL:
        n_terms += 1
    A = s.coefficient_matrix(kmax + 2 * n_terms, lmax)
    for kk in range(kmax + 2 * n_terms + 1):
        if not np.any(A[kk]):
            continue
        for d, v in gg.monomial_decomposition(kk, target_m):
            if d <= kmax and (kk - d) // 2 <= n_terms:
                out[d] += v * A[kk]
    return out
