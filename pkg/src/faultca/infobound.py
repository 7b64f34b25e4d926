"""Information-theoretic lower bound on the degree.

An automaton run for ``t`` steps from an all-X start is the same as a layered
circuit of depth ``t`` fed by X.  The mutual information between X and the
output can then be bounded by a sum over input-output paths of
``(1 - 2 eps)^(2 |p|)``, while recovering X with error ``delta`` needs at
least ``1 - h(delta)`` bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .analysis import fano_floor
from .faults import exact
from .lattice import Lattice
from .transition import BooleanTable

INPUT = -1
CONST0 = -2
CONST1 = -3
MAX_EXACT_GATES = 24


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate.  ``inputs`` index the previous layer; ``INPUT`` is the circuit
    input and ``CONST0``/``CONST1`` are constant wires."""

    inputs: tuple
    threshold: int | None = None
    table: BooleanTable | None = None
    cell: int | None = None

    def __post_init__(self):
        if (self.threshold is None) == (self.table is None):
            raise CircuitError("gate needs exactly one of threshold or table")
        if self.table is not None and self.table.arity != len(self.inputs):
            raise CircuitError("table arity does not match fan-in")

    @property
    def fan_in(self):
        return len(self.inputs)


@dataclass(frozen=True)
class LayeredCircuit:
    layers: tuple  # tuple of tuples of Gate; layers[0] is layer 1

    def __post_init__(self):
        if not self.layers:
            raise CircuitError("circuit needs at least one layer")
        if len(self.layers[-1]) != 1:
            raise CircuitError("the last layer must hold exactly one gate")
        for s, layer in enumerate(self.layers):
            prev = len(self.layers[s - 1]) if s else 0
            for g in layer:
                for i in g.inputs:
                    if i >= prev or i < CONST1:
                        raise CircuitError(f"layer {s + 1}: bad input reference {i}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def layer_sizes(self) -> list[int]:
        return [len(layer) for layer in self.layers]


def chain_circuit(t: int) -> LayeredCircuit:
    """t identity gates in series."""
    layers = [(Gate((INPUT,), threshold=1),)]
    layers += [(Gate((0,), threshold=1),) for _ in range(t - 1)]
    return LayeredCircuit(tuple(layers))


def unroll_circuit(lattice: Lattice, rules, root: int, t: int) -> LayeredCircuit:
    """Layered circuit whose output is the state of ``root`` at time ``t``.

    Layer ``s`` holds the cells whose time-``s`` state the root depends on;
    every layer-1 gate reads the circuit input on all of its arguments.
    """
    if t < 1:
        raise CircuitError("t must be >= 1")
    cells = [[root]]
    for _ in range(t - 1):
        below = sorted({int(w) for v in cells[-1] for w in rules.indices[rules.indptr[v]:rules.indptr[v + 1]]})
        cells.append(below)
    cells.reverse()  # cells[s] = cells of layer s+1
    layers = []
    for s, layer_cells in enumerate(cells):
        pos = {v: i for i, v in enumerate(cells[s - 1])} if s else None
        gates = []
        for v in layer_cells:
            if lattice.boundary[v]:
                raise CircuitError(f"cell {v} is on the truncation boundary; the lattice is too small for t={t}")
            args = rules.indices[rules.indptr[v]:rules.indptr[v + 1]]
            inputs = tuple(INPUT for _ in args) if s == 0 else tuple(pos[int(w)] for w in args)
            if rules.table is not None:
                gates.append(Gate(inputs, table=rules.table, cell=v))
            else:
                gates.append(Gate(inputs, threshold=int(rules.thresholds[v]), cell=v))
        layers.append(tuple(gates))
    return LayeredCircuit(tuple(layers))


def count_paths(circuit: LayeredCircuit) -> int:
    """Number of input-to-output paths, counting parallel wires separately."""
    prev = []
    for layer in circuit.layers:
        cur = [sum(1 if i == INPUT else prev[i] if i >= 0 else 0 for i in g.inputs) for g in layer]
        prev = cur
    return prev[0]


def _logsumexp(vals):
    vals = [v for v in vals if v != -math.inf]
    if not vals:
        return -math.inf
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


def log_es_bound(circuit: LayeredCircuit, eps: float) -> float:
    """log of sum over paths p of (1 - 2 eps)^(2|p|), by dynamic programming."""
    if not 0 <= eps <= 0.5:
        raise CircuitError(f"eps must lie in [0, 1/2], got {eps}")
    theta = 1 - 2 * eps
    per_gate = 2 * math.log(theta) if theta > 0 else -math.inf
    prev = []
    for layer in circuit.layers:
        cur = []
        for g in layer:
            terms = [0.0 if i == INPUT else prev[i] for i in g.inputs if i == INPUT or i >= 0]
            acc = _logsumexp(terms)
            cur.append(acc + per_gate if acc != -math.inf else -math.inf)
        prev = cur
    return prev[0]


def es_bound(circuit: LayeredCircuit, eps: float) -> float:
    return math.exp(log_es_bound(circuit, eps))


def _eval_gate(g: Gate, vals_prev, x, n):
    cols = []
    for i in g.inputs:
        if i == INPUT:
            cols.append(np.full(n, x, dtype=np.uint8))
        elif i == CONST0:
            cols.append(np.zeros(n, dtype=np.uint8))
        elif i == CONST1:
            cols.append(np.ones(n, dtype=np.uint8))
        else:
            cols.append(vals_prev[i])
    if g.threshold is not None:
        total = np.zeros(n, dtype=np.int64)
        for c in cols:
            total += c
        return (total >= g.threshold).astype(np.uint8)
    idx = np.zeros(n, dtype=np.int64)
    for j, c in enumerate(cols):
        idx |= c.astype(np.int64) << j
    return g.table.bits[idx]


def fault_histogram(circuit: LayeredCircuit, chunk_bits: int = 20) -> np.ndarray:
    """Counts of fault patterns by (number of faults, output for X=0, output for X=1)."""
    G = circuit.gate_count
    if G > MAX_EXACT_GATES:
        raise CircuitError(f"{G} gates exceeds the exhaustive limit of {MAX_EXACT_GATES}")
    hist = np.zeros((G + 1, 2, 2), dtype=np.int64)
    total = 1 << G
    step = 1 << min(chunk_bits, G)
    for start in range(0, total, step):
        ids = np.arange(start, min(total, start + step), dtype=np.int64)
        n = len(ids)
        k = np.zeros(n, dtype=np.int64)
        outs = []
        for x in (0, 1):
            gid = 0
            prev = None
            for layer in circuit.layers:
                cur = []
                for g in layer:
                    f = ((ids >> gid) & 1).astype(np.uint8)
                    if x == 0:
                        k += f
                    cur.append(_eval_gate(g, prev, x, n) ^ f)
                    gid += 1
                prev = cur
            outs.append(prev[0].astype(np.int64))
        code = k * 4 + outs[0] * 2 + outs[1]
        hist += np.bincount(code, minlength=(G + 1) * 4).reshape(G + 1, 2, 2)
    return hist


def mutual_information(joint) -> float:
    """I(X;Y) = H(X) + H(Y) - H(X,Y) in bits for a 2x2 joint distribution."""
    joint = np.asarray(joint, dtype=float)

    def H(p):
        p = p[p > 0]
        return float(-np.sum(p * np.log2(p)))

    return max(0.0, H(joint.sum(axis=1)) + H(joint.sum(axis=0)) - H(joint.ravel()))


def exact_mi(circuit: LayeredCircuit, eps: float, hist: np.ndarray | None = None) -> float:
    """Exact I(X;Y) for uniform X and independent output flips at rate ``eps``.

    Sums over every fault pattern, so it is limited to small circuits.
    """
    if not 0 <= eps <= 1:
        raise CircuitError("eps must be a probability")
    if hist is None:
        hist = fault_histogram(circuit)
    G = hist.shape[0] - 1
    k = np.arange(G + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(k == 0, 1.0, eps ** k) * np.where(k == G, 1.0, (1 - eps) ** (G - k))
    joint = np.zeros((2, 2))
    for y0 in (0, 1):
        for y1 in (0, 1):
            pr = float(np.dot(hist[:, y0, y1], w))
            joint[0, y0] += 0.5 * pr
            joint[1, y1] += 0.5 * pr
    return mutual_information(joint)


def random_circuit(rng: np.random.Generator, max_gates: int = 20, max_fan_in: int = 3,
                   skip_prob: float = 0.15) -> LayeredCircuit:
    """Random layered circuit with random gate tables.

    Deeper gates occasionally read the circuit input directly, which gives
    paths of several lengths.
    """
    depth = int(rng.integers(1, 7))
    sizes = [int(rng.integers(1, 5)) for _ in range(depth - 1)] + [1]
    while sum(sizes) > max_gates:
        i = int(np.argmax(sizes[:-1]))
        sizes[i] -= 1
        if sizes[i] == 0:
            sizes.pop(i)
    layers = []
    for s, size in enumerate(sizes):
        gates = []
        for _ in range(size):
            fan = int(rng.integers(1, max_fan_in + 1))
            if s == 0:
                inputs = tuple(INPUT for _ in range(fan))
            else:
                inputs = tuple(INPUT if rng.random() < skip_prob else int(rng.integers(0, sizes[s - 1]))
                               for _ in range(fan))
            bits = rng.integers(0, 2, size=1 << fan).astype(np.uint8)
            gates.append(Gate(inputs, table=BooleanTable(fan, bits)))
        layers.append(tuple(gates))
    return LayeredCircuit(tuple(layers))


# -- verdicts -----------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityVerdict:
    excluded_at_t: int | None

    @property
    def excluded(self) -> bool:
        return self.excluded_at_t is not None

    def __str__(self):
        return f"excluded_at_t={self.excluded_at_t}" if self.excluded else "not_excluded"


def tolerance_feasible(d: int, xi: float, delta: float) -> FeasibilityVerdict:
    """First horizon at which degree ``d`` provably cannot hold a bit.

    Excluded iff ``d (2 xi)^2 < 1``; then the least ``t`` with
    ``d^t (2 xi)^(2t) < 1 - h(delta)`` is returned.
    """
    if d < 1:
        raise CircuitError("d must be >= 1")
    if not 0 < xi <= 0.5:
        raise CircuitError(f"xi must lie in (0, 1/2], got {xi}")
    floor = fano_floor(delta)
    base = d * 4 * exact(xi) ** 2
    if base >= 1:
        return FeasibilityVerdict(None)
    mpmath.mp.dps = 50
    b = mpmath.mpf(base.numerator) / base.denominator
    f = mpmath.mpf(floor)
    t = max(1, int(mpmath.floor(mpmath.log(f) / mpmath.log(b))))
    while b ** t >= f:
        t += 1
    while t > 1 and b ** (t - 1) < f:
        t -= 1
    return FeasibilityVerdict(t)


@dataclass(frozen=True)
class InfoBoundReport:
    d: int
    xi: float
    delta: float
    t: int
    path_count: int
    es_bound: float
    fano_floor: float

    @property
    def feasible(self) -> bool:
        return self.es_bound >= self.fano_floor

    @property
    def verdict(self) -> str:
        return "not_excluded" if self.feasible else "excluded"

    def to_json_dict(self) -> dict:
        return {"d": self.d, "xi": self.xi, "delta": self.delta, "t": self.t,
                "path_count": str(self.path_count), "es_bound": self.es_bound,
                "fano_floor": self.fano_floor, "verdict": self.verdict}


def info_bound(d: int, xi: float, delta: float, t: int | None = None) -> InfoBoundReport:
    """Worst-case report for fan-in ``d``: d^t paths, each of length t.

    Without ``t`` the first excluding horizon is used (or 1 if none exists).
    """
    if t is None:
        t = tolerance_feasible(d, xi, delta).excluded_at_t or 1
    if t < 1:
        raise CircuitError("t must be >= 1")
    paths = d ** t
    log_es = t * math.log(d) + 2 * t * math.log(2 * xi) if xi > 0 else -math.inf
    es = math.exp(log_es) if log_es < 709 else math.inf
    return InfoBoundReport(d, xi, delta, t, paths, es, fano_floor(delta))


def circuit_report(circuit: LayeredCircuit, eps: float, delta: float, d: int | None = None) -> InfoBoundReport:
    fan = d if d is not None else max(g.fan_in for layer in circuit.layers for g in layer)
    return InfoBoundReport(fan, float(Fraction(1, 2) - exact(eps)), delta, circuit.depth,
                           count_paths(circuit), es_bound(circuit, eps), fano_floor(delta))
