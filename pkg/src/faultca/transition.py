"""Boolean transition rules and their structural analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_TABLE_ARITY = 20


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdRule:
    """Output 1 iff at least ``ones_threshold`` of the ``arity`` inputs are 1."""

    arity: int
    ones_threshold: int

    def __post_init__(self):
        if self.arity < 1:
            raise RuleError("arity must be >= 1")
        if not 1 <= self.ones_threshold <= self.arity:
            raise RuleError(f"threshold {self.ones_threshold} outside [1, {self.arity}]")

    def table(self) -> "BooleanTable":
        idx = np.arange(1 << self.arity)
        ones = np.zeros_like(idx)
        for j in range(self.arity):
            ones += (idx >> j) & 1
        return BooleanTable(self.arity, (ones >= self.ones_threshold).astype(np.uint8))


def full_majority_rule(degree: int, include_self: bool) -> ThresholdRule:
    """Majority over the neighbors, plus the cell itself when ``include_self``."""
    arity = degree + int(include_self)
    if arity % 2 == 0:
        raise RuleError(f"majority over {arity} votes can tie; arrange an odd vote count")
    return ThresholdRule(arity, (arity + 1) // 2)


def eval_rule(rule: ThresholdRule, inputs) -> int:
    inputs = np.asarray(inputs)
    if inputs.shape != (rule.arity,):
        raise RuleError(f"expected {rule.arity} inputs, got {inputs.shape}")
    return int(np.count_nonzero(inputs) >= rule.ones_threshold)


@dataclass(frozen=True, eq=False)
class BooleanTable:
    """Truth table; ``bits[i]`` is the output when input ``j`` equals bit ``j`` of ``i``."""

    arity: int
    bits: np.ndarray

    def __post_init__(self):
        if not 0 <= self.arity <= MAX_TABLE_ARITY:
            raise RuleError(f"arity {self.arity} outside [0, {MAX_TABLE_ARITY}]")
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (1 << self.arity,):
            raise RuleError(f"table length {bits.shape} != 2**{self.arity}")
        if np.any(bits > 1):
            raise RuleError("table entries must be bits")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_hex(cls, text: str, arity: int) -> "BooleanTable":
        """Parse a hex string whose integer value has bit ``i`` = output ``i``."""
        text = text.strip().lower().removeprefix("0x")
        try:
            value = int(text, 16)
        except ValueError:
            raise RuleError(f"not a hex string: {text!r}") from None
        n = 1 << arity
        if value >> n:
            raise RuleError(f"hex value has more than {n} bits")
        bits = np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)
        return cls(arity, bits)

    def to_hex(self) -> str:
        value = 0
        for i in np.flatnonzero(self.bits):
            value |= 1 << int(i)
        width = max(1, (len(self.bits) + 3) // 4)
        return format(value, f"0{width}x")

    def __call__(self, inputs) -> int:
        idx = 0
        for j, x in enumerate(inputs):
            idx |= (int(x) & 1) << j
        return int(self.bits[idx])

    def __eq__(self, other):
        return isinstance(other, BooleanTable) and self.arity == other.arity and np.array_equal(self.bits, other.bits)

    __hash__ = None


@dataclass(frozen=True)
class RuleAnalysis:
    monotone: bool
    self_dual: bool
    zero_threshold: int | None  # None = unbounded
    one_threshold: int | None

    @property
    def threshold(self):
        vals = [v for v in (self.zero_threshold, self.one_threshold) if v is not None]
        return min(vals) if vals else None


def _popcounts(n_bits):
    idx = np.arange(1 << n_bits)
    pc = np.zeros(len(idx), dtype=np.int64)
    for j in range(n_bits):
        pc += (idx >> j) & 1
    return pc


def analyze_boolean(table: BooleanTable) -> RuleAnalysis:
    """Monotonicity, self-duality and the 0-/1-thresholds of ``table``.

    The a-threshold is the smallest number of inputs which, fixed to ``a``,
    force the output to ``a`` whatever the other inputs do.  A set S forces 1
    iff every input vector containing S maps to 1 (an AND over supersets);
    S forces 0 iff every vector avoiding S maps to 0 (an AND over subsets of
    the complement).  Both transforms run in O(k 2^k).
    """
    k = table.arity
    if k > MAX_TABLE_ARITY:
        raise RuleError("arity too large for exhaustive analysis")
    f = table.bits.astype(bool)
    n = 1 << k
    idx = np.arange(n)
    monotone = True
    for j in range(k):
        lo = idx[(idx >> j) & 1 == 0]
        if np.any(f[lo] & ~f[lo | (1 << j)]):
            monotone = False
            break
    self_dual = bool(np.all(f[(n - 1) ^ idx] == ~f))

    sup_all_one = f.copy()
    sub_all_zero = ~f
    for j in range(k):
        bit = 1 << j
        lo = idx[(idx & bit) == 0]
        sup_all_one[lo] &= sup_all_one[lo | bit]
        sub_all_zero[lo | bit] &= sub_all_zero[lo]
    pc = _popcounts(k)
    forces_one = sup_all_one
    forces_zero = sub_all_zero[(n - 1) ^ idx]  # indexed by S, reads complement
    one_t = int(pc[forces_one].min()) if forces_one.any() else None
    zero_t = int(pc[forces_zero].min()) if forces_zero.any() else None
    return RuleAnalysis(monotone, self_dual, zero_t, one_t)
