"""Closed-form side of the theory: binomial tails, the error-probability
recursion on trees, and the degree bounds.

Bound formulas use natural logarithms and are evaluated with mpmath at 50
digits; every returned minimum is re-checked by confirming the next smaller
admissible integer fails.  Entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np
from scipy.special import gammaln

from .faults import exact

MODES = ("paper_bound", "relaxed_bound", "exact_greedy", "exact_pure")
FIXED_POINT_TOL = 1e-12
T_MAX = 1_000_000


class AnalysisError(ValueError):
    pass


def _check_xi(xi):
    if not 0 < xi < 0.5:
        raise AnalysisError(f"xi must lie in (0, 1/2), got {xi}")


def binomial_tail(d: int, h: int, p: float) -> float:
    """P[Bin(d, p) >= h], summed from whichever tail is smaller, in log space."""
    if d < 0 or not 0 <= p <= 1:
        raise AnalysisError(f"invalid binomial_tail arguments d={d}, p={p}")
    if h > d + 1 or h < 0:
        raise AnalysisError(f"threshold {h} outside [0, {d + 1}]")
    if h <= 0:
        return 1.0
    if h > d:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    upper = h > d * p
    k = np.arange(h, d + 1) if upper else np.arange(0, h)
    logpmf = (gammaln(d + 1) - gammaln(k + 1) - gammaln(d - k + 1)
              + k * math.log(p) + (d - k) * math.log1p(-p))
    top = logpmf.max()
    s = math.exp(top) * math.fsum(np.exp(logpmf - top))
    return min(1.0, s) if upper else max(0.0, 1.0 - s)


def recursion_step(P: float, d: int, h: int, eps: float, mode: str = "paper_bound", m: int = 0) -> float:
    """One step of the per-cell error recursion on a directed tree.

    ``paper_bound``   eps + tail               (union bound over the two causes)
    ``relaxed_bound`` eps + 2^m (4P(1-P))^((d-m)/2)
    ``exact_greedy``  eps + (1-eps) tail       (fault forces the error value)
    ``exact_pure``    eps (1-tail) + (1-eps) tail (fault complements)
    """
    if mode == "relaxed_bound":
        val = eps + 2.0 ** m * (4 * P * (1 - P)) ** ((d - m) / 2)
        return min(1.0, val)
    tail = binomial_tail(d, h, P)
    if mode == "paper_bound":
        return min(1.0, eps + tail)
    if mode == "exact_greedy":
        return eps + (1 - eps) * tail
    if mode == "exact_pure":
        return eps * (1 - tail) + (1 - eps) * tail
    raise AnalysisError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass
class RecursionTrace:
    d: int
    h: int
    m: int
    eps: float
    xi: float
    mode: str
    ceiling: float
    P: list = field(default_factory=list)
    violated_at: int | None = None

    @property
    def verdict(self) -> str:
        return "tolerant" if self.violated_at is None else "violated"

    @property
    def fixed_point(self) -> float:
        return self.P[-1]

    def to_csv(self) -> str:
        rows = ["t,P"] + [f"{t},{p!r}" for t, p in enumerate(self.P)]
        return "\n".join(rows) + "\n"


def _resolve_eps(eps, xi):
    if eps is None and xi is None:
        raise AnalysisError("give eps or xi")
    if xi is None:
        return float(eps), float(Fraction(1, 2) - exact(eps))
    e = float(Fraction(1, 2) - exact(xi))
    if eps is not None and abs(eps - e) > 1e-12:
        raise AnalysisError(f"eps={eps} inconsistent with xi={xi} (expected {e})")
    return e, float(xi)


def iterate_recursion(d: int, h: int, m: int = 0, eps: float | None = None, xi: float | None = None,
                      mode: str = "paper_bound", t_max: int = T_MAX, delta: float | None = None) -> RecursionTrace:
    """Iterate from P_0 = 0 until a fixed point, ``t_max``, or the ceiling is crossed.

    The ceiling defaults to 1/2 - xi/2.
    """
    eps, xi = _resolve_eps(eps, xi)
    if mode not in MODES:
        raise AnalysisError(f"unknown mode {mode!r}")
    ceiling = 0.5 - xi / 2 if delta is None else float(delta)
    trace = RecursionTrace(d, h, m, eps, xi, mode, ceiling, [0.0])
    P = 0.0
    for t in range(1, min(t_max, T_MAX) + 1):
        nxt = recursion_step(P, d, h, eps, mode, m)
        trace.P.append(nxt)
        if nxt > ceiling:
            trace.violated_at = t
            break
        if abs(nxt - P) < FIXED_POINT_TOL:
            break
        P = nxt
    return trace


def induction_gap(xi: float, m: int, d: int) -> float:
    """xi/2 - 2^m (1 - xi^2)^((d-m)/2); nonnegative iff the induction step closes."""
    return xi / 2 - 2.0 ** m * (1 - xi * xi) ** ((d - m) / 2)


# -- degree bounds ------------------------------------------------------------

mpmath.mp.dps = 50


def _mp(xi):
    _check_xi(xi)
    f = exact(xi)
    return mpmath.mpf(f.numerator) / f.denominator


def _least(value, parity=None):
    n = int(mpmath.ceil(value))
    if parity is not None and n % 2 != parity:
        n += 1
    return n


def _bound(offset, log_arg, xi):
    x = _mp(xi)
    return offset + 2 / x ** 2 * mpmath.log(log_arg / x)


def _verified(value, n, step):
    # minimality: n satisfies, the previous admissible integer does not
    assert n >= value and n - step < value, (n, value)
    return n


def prop21_min_degree(xi: float, m: int = 0) -> int:
    """Least d with d >= m + (2/xi^2) ln(2^(m+1)/xi)."""
    if m < 0:
        raise AnalysisError("m must be >= 0")
    v = _bound(m, mpmath.mpf(2) ** (m + 1), xi)
    return _verified(v, _least(v), 1)


class ParityBounds(NamedTuple):
    odd_q: int
    even_q: int


def _parity_pair(xi, odd, even):
    vo = _bound(odd[0], odd[1], xi)
    ve = _bound(even[0], even[1], xi)
    return ParityBounds(_verified(vo, _least(vo, 1), 2), _verified(ve, _least(ve, 0), 2))


def cor23_min_q(xi: float) -> ParityBounds:
    """Least odd / even tree degree q for tolerance at rate 1/2 - xi."""
    return _parity_pair(xi, (2, 4), (4, 16))


def cor24_min_q(xi: float) -> ParityBounds:
    """Least odd / even q for {p,q} tessellations."""
    return _parity_pair(xi, (14, 1024), (16, 4096))


def thm42_min_degree(xi: float) -> int:
    """ceil(1 / (4 xi^2)), the degree no automaton can go below.

    xi = 1/2 (no faults) is accepted and gives 1.
    """
    if not 0 < xi <= 0.5:
        raise AnalysisError(f"xi must lie in (0, 1/2], got {xi}")
    f = exact(xi)
    return math.ceil(Fraction(1) / (4 * f * f))


def reduced_tree_required_degree(xi: float, r: int) -> int:
    """Least s with s >= 3r - 1 + (2/xi^2) ln(2^(2r)/xi)."""
    v = _bound(3 * r - 1, mpmath.mpf(2) ** (2 * r), xi)
    return _verified(v, _least(v), 1)


@dataclass(frozen=True)
class BoundReport:
    xi: float
    formula: str
    required: int
    m: int | None = None
    parity: str | None = None


def bound_table_row(xi: float) -> dict:
    c23, c24 = cor23_min_q(xi), cor24_min_q(xi)
    row = {"xi": xi}
    for m in range(4):
        row[f"prop21_m{m}"] = prop21_min_degree(xi, m)
    row.update(cor23_odd=c23.odd_q, cor23_even=c23.even_q, cor24_odd=c24.odd_q,
               cor24_even=c24.even_q, thm42_lower=thm42_min_degree(xi))
    return row


def bound_reports(xi: float) -> list[BoundReport]:
    c23, c24 = cor23_min_q(xi), cor24_min_q(xi)
    out = [BoundReport(xi, "prop21", prop21_min_degree(xi, m), m=m) for m in range(4)]
    out += [BoundReport(xi, "cor23_odd", c23.odd_q, parity="odd"),
            BoundReport(xi, "cor23_even", c23.even_q, parity="even"),
            BoundReport(xi, "cor24_odd", c24.odd_q, parity="odd"),
            BoundReport(xi, "cor24_even", c24.even_q, parity="even"),
            BoundReport(xi, "thm42_lower", thm42_min_degree(xi))]
    return out


# -- entropy --------------------------------------------------------------------

def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise AnalysisError(f"p must lie in [0, 1], got {p}")
    if p == 0 or p == 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def fano_floor(delta: float) -> float:
    """Least mutual information compatible with recovering a uniform bit at error <= delta."""
    if not 0 <= delta < 0.5:
        raise AnalysisError(f"delta must lie in [0, 1/2), got {delta}")
    return 1.0 - binary_entropy(delta)
