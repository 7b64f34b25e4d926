"""Fault specification and sampling.

Transient faults hit each (cell, time) independently at rate ``alpha``;
manufacturing faults hit each cell once, at rate ``beta``, and hand it to the
adversary for good.  Under the pure model a fault complements the computed
value.  Under the adversarial model the greedy adversary writes the error
value ``1 - a`` whenever it is allowed to, which is optimal for monotone rules
started from all-``a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rng

PURE = "pure_probabilistic"
ADVERSARIAL = "adversarial"
MODELS = (PURE, ADVERSARIAL)


class FaultError(ValueError):
    pass


def exact(x) -> Fraction:
    """Rational value of a decimal literal, so 0.5 - 0.4 is exactly 1/10."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def _check_prob(name, x):
    if not 0 <= x <= 1:
        raise FaultError(f"{name} must lie in [0, 1], got {x}")


def combined_rate(alpha: float, beta: float) -> float:
    _check_prob("alpha", alpha)
    _check_prob("beta", beta)
    return float(1 - (1 - exact(alpha)) * (1 - exact(beta)))


@dataclass(frozen=True)
class FaultSpec:
    alpha: float
    beta: float = 0.0
    model: str = ADVERSARIAL
    a: int = 0

    def __post_init__(self):
        _check_prob("alpha", self.alpha)
        _check_prob("beta", self.beta)
        if self.model not in MODELS:
            raise FaultError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.a not in (0, 1):
            raise FaultError("remembered bit must be 0 or 1")
        if self.model == PURE and self.beta > 0:
            raise FaultError(
                "pure_probabilistic faults require beta = 0: a manufacturing fault hands "
                "the cell to the adversary for all time"
            )

    @classmethod
    def from_xi(cls, xi: float, model: str = ADVERSARIAL, a: int = 0) -> "FaultSpec":
        """Transient-only spec at rate 1/2 - xi."""
        if not 0 <= xi <= 0.5:
            raise FaultError(f"xi must lie in [0, 1/2], got {xi}")
        return cls(float(Fraction(1, 2) - exact(xi)), 0.0, model, a)

    @property
    def epsilon(self) -> float:
        return combined_rate(self.alpha, self.beta)

    @property
    def xi(self) -> float:
        return float(Fraction(1, 2) - (1 - (1 - exact(self.alpha)) * (1 - exact(self.beta))))


def apply_fault(computed: int, fault: int, mfg: bool, spec: FaultSpec) -> int:
    if spec.model == PURE:
        if mfg:
            raise FaultError("manufacturing faults do not exist under the pure model")
        return computed ^ fault
    if mfg or fault:
        return 1 - spec.a
    return computed


def vertex_keys(lattice) -> np.ndarray:
    """Labels the random stream is keyed on: original indices for cut lattices."""
    if lattice.origin is not None:
        return np.asarray(lattice.origin, dtype=np.int64)
    return np.arange(lattice.vertex_count, dtype=np.int64)


def sample_manufacturing(lattice, beta: float, seed: int, replicate: int = 0) -> set[int]:
    """Cells hit by a manufacturing fault in ``replicate``; deterministic in the seed."""
    _check_prob("beta", beta)
    keys = vertex_keys(lattice)
    u = rng.uniforms(seed, keys, 0, replicate, rng.STREAM_MANUFACTURING)
    return set(np.flatnonzero(u < beta).tolist())


@dataclass(frozen=True)
class FaultRealization:
    """Deterministic fault oracle for one replicate.

    ``transient(vertices, t)`` returns the fault bits of those vertex keys at
    time ``t``; the answer does not depend on query order.
    """

    seed: int
    replicate: int
    alpha: float
    manufacturing_set: frozenset

    @classmethod
    def sample(cls, lattice, spec: FaultSpec, seed: int, replicate: int) -> "FaultRealization":
        mfg = sample_manufacturing(lattice, spec.beta, seed, replicate) if spec.beta > 0 else set()
        return cls(seed, replicate, spec.alpha, frozenset(mfg))

    def transient(self, vertex_keys, t: int) -> np.ndarray:
        u = rng.uniforms(self.seed, vertex_keys, t, self.replicate, rng.STREAM_TRANSIENT)
        return (u < self.alpha).astype(np.uint8)

    def manufacturing_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        if self.manufacturing_set:
            mask[list(self.manufacturing_set)] = True
        return mask
