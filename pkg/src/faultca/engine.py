"""Synchronous simulation of faulty binary automata.

Replicates run four to a block so that one Philox call supplies the fault
bits of all four lanes.  Cell updates read the time-``t`` buffer and write
the time-``t+1`` buffer.  Only cells that can still influence an observed
cell are updated, which keeps light-cone runs on deep trees cheap without
changing any observed bit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from . import rng
from .analysis import recursion_step
from .faults import ADVERSARIAL, PURE, FaultError, FaultRealization, FaultSpec, vertex_keys
from .lattice import Lattice
from .transition import BooleanTable, analyze_boolean
from .treeify import TreeRuleSet

CLAMP_TO_ERROR = "clamp_to_error"
CLAMP_TO_A = "clamp_to_a"
BOUNDARY_POLICIES = (CLAMP_TO_ERROR, CLAMP_TO_A)
Z95 = 1.959963984540054
_PRUNE_LIMIT = 50_000_000


class SimulationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Rules:
    """Per-cell wiring plus either a ones-threshold per cell or one shared table."""

    indptr: np.ndarray
    indices: np.ndarray
    thresholds: np.ndarray | None = None
    table: BooleanTable | None = None

    def __post_init__(self):
        if (self.thresholds is None) == (self.table is None):
            raise SimulationError("give exactly one of thresholds or table")

    @property
    def vertex_count(self):
        return len(self.indptr) - 1

    @property
    def monotone(self) -> bool:
        return self.table is None or analyze_boolean(self.table).monotone

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        """Fault-free update of every cell from ``states``."""
        deg = np.diff(self.indptr)
        src = np.repeat(np.arange(self.vertex_count), deg)
        vals = states[self.indices].astype(np.int64)
        if self.table is None:
            ones = np.bincount(src, weights=vals, minlength=self.vertex_count)
            return (ones >= self.thresholds).astype(np.uint8)
        pos = np.arange(len(self.indices)) - np.repeat(self.indptr[:-1], deg)
        idx = np.bincount(src, weights=vals << pos, minlength=self.vertex_count).astype(np.int64)
        return self.table.bits[idx]


def majority_rules(lattice: Lattice) -> Rules:
    """Full majority over each cell's out-edges (self-loop included)."""
    deg = lattice.out_degree()
    bad = np.flatnonzero((deg % 2 == 0) & ~lattice.boundary)
    if len(bad):
        raise SimulationError(f"vertex {int(bad[0])} has an even vote count {int(deg[bad[0]])}")
    return Rules(lattice.indptr, lattice.indices, thresholds=deg // 2 + 1)


def tree_rules(rules: TreeRuleSet, a: int) -> Rules:
    t = rules.tree
    return Rules(t.indptr, t.indices, thresholds=rules.ones_thresholds(a))


def table_rules(lattice: Lattice, table: BooleanTable) -> Rules:
    deg = lattice.out_degree()
    bad = np.flatnonzero((deg != table.arity) & ~lattice.boundary)
    if len(bad):
        raise SimulationError(f"vertex {int(bad[0])} has out-degree {int(deg[bad[0]])}, "
                              f"table arity is {table.arity}")
    return Rules(lattice.indptr, lattice.indices, table=table)


@dataclass(frozen=True)
class Configuration:
    bits: np.ndarray
    t: int = 0


@dataclass(eq=False)
class SimPlan:
    lattice: Lattice
    rules: Rules
    spec: FaultSpec
    horizon: int
    replicates: int = 1
    observed: np.ndarray | None = None
    seed: int = 0
    boundary: str = CLAMP_TO_ERROR

    def __post_init__(self):
        if self.observed is None:
            self.observed = np.array([0], dtype=np.int64)
        self.observed = np.asarray(self.observed, dtype=np.int64)
        if self.horizon < 0:
            raise SimulationError("horizon must be >= 0")
        if self.replicates < 1:
            raise SimulationError("need at least one replicate")
        if self.boundary not in BOUNDARY_POLICIES:
            raise SimulationError(f"boundary policy must be one of {BOUNDARY_POLICIES}")
        if self.rules.vertex_count != self.lattice.vertex_count:
            raise SimulationError("rules and lattice disagree on the vertex count")
        n = self.lattice.vertex_count
        if len(self.observed) and (self.observed.min() < 0 or self.observed.max() >= n):
            raise SimulationError("observed vertex out of range")
        if self.spec.model == ADVERSARIAL and not self.rules.monotone:
            raise SimulationError("adversarial faults need monotone rules; the greedy adversary "
                                  "is only optimal for monotone transition functions")

    def exact_light_cone(self, root: int = 0) -> bool:
        """True when no boundary cell can reach ``root`` by the horizon."""
        shell = self.lattice.shell
        if np.any(shell < 0):
            return False
        bnd = self.lattice.boundary
        return not np.any(bnd & (shell < self.horizon))

    @property
    def clamp_value(self) -> int:
        return 1 - self.spec.a if self.boundary == CLAMP_TO_ERROR else self.spec.a


def step(config: Configuration, lattice: Lattice, rules: Rules, realization: FaultRealization,
         spec: FaultSpec, boundary: str = CLAMP_TO_ERROR) -> Configuration:
    """Synchronous update from time ``t`` to ``t+1`` (numpy reference path)."""
    x = np.asarray(config.bits, dtype=np.uint8)
    if len(x) != lattice.vertex_count or rules.vertex_count != lattice.vertex_count:
        raise SimulationError("configuration, rules and lattice sizes differ")
    t = config.t + 1
    computed = rules.evaluate(x)
    fault = realization.transient(vertex_keys(lattice), t)
    if spec.model == PURE:
        if realization.manufacturing_set:
            raise FaultError("manufacturing faults do not exist under the pure model")
        out = computed ^ fault
    else:
        hit = (fault == 1) | realization.manufacturing_mask(lattice.vertex_count)
        out = np.where(hit, 1 - spec.a, computed).astype(np.uint8)
    clamp = 1 - spec.a if boundary == CLAMP_TO_ERROR else spec.a
    out[lattice.boundary] = clamp
    return Configuration(out, t)


# -- compiled kernel --------------------------------------------------------

@njit(cache=True, parallel=True)
def _run_blocks(indptr, indices, thr, table, use_table, boundary, keys, k0, k1,
                alpha, beta, adversarial, a, clamp, horizon, block0, nblocks,
                rep_lo, rep_hi, needed, prune, observed, counts):
    n = len(indptr) - 1
    n_obs = len(observed)
    for b in prange(nblocks):
        blk = block0 + b
        cur = np.full((n, 4), a, dtype=np.uint8)
        nxt = np.full((n, 4), a, dtype=np.uint8)
        mfg = np.zeros((n, 4), dtype=np.bool_)
        if beta > 0.0:
            for v in range(n):
                w = rng.philox_scalar(keys[v], 0, blk, 1, k0, k1)
                for lane in range(4):
                    mfg[v, lane] = rng.to_unit(w[lane]) < beta
        for t in range(1, horizon + 1):
            for v in range(n):
                if prune and not needed[t, v]:
                    continue
                if boundary[v]:
                    for lane in range(4):
                        nxt[v, lane] = clamp
                    continue
                comp = np.zeros(4, dtype=np.int64)
                for e in range(indptr[v], indptr[v + 1]):
                    w_ = indices[e]
                    j = e - indptr[v]
                    for lane in range(4):
                        if use_table:
                            comp[lane] |= np.int64(cur[w_, lane]) << j
                        else:
                            comp[lane] += cur[w_, lane]
                if alpha > 0.0:
                    fw = rng.philox_scalar(keys[v], t, blk, 0, k0, k1)
                    f0 = rng.to_unit(fw[0]) < alpha
                    f1 = rng.to_unit(fw[1]) < alpha
                    f2 = rng.to_unit(fw[2]) < alpha
                    f3 = rng.to_unit(fw[3]) < alpha
                else:
                    f0 = f1 = f2 = f3 = False
                for lane in range(4):
                    if use_table:
                        c = table[comp[lane]]
                    else:
                        c = np.uint8(1) if comp[lane] >= thr[v] else np.uint8(0)
                    if lane == 0:
                        f = f0
                    elif lane == 1:
                        f = f1
                    elif lane == 2:
                        f = f2
                    else:
                        f = f3
                    if adversarial:
                        if f or mfg[v, lane]:
                            c = np.uint8(1 - a)
                    elif f:
                        c = np.uint8(1) - c
                    nxt[v, lane] = c
            tmp = cur
            cur = nxt
            nxt = tmp
            for i in range(n_obs):
                o = observed[i]
                for lane in range(4):
                    rep = blk * 4 + lane
                    if rep >= rep_lo and rep < rep_hi and cur[o, lane] != a:
                        counts[b, t, i] += 1


def _needed(plan: SimPlan) -> tuple[np.ndarray, bool]:
    n, T = plan.lattice.vertex_count, plan.horizon
    if (T + 1) * n > _PRUNE_LIMIT:
        return np.ones((1, 1), dtype=np.bool_), False
    rules = plan.rules
    deg = np.diff(rules.indptr)
    src = np.repeat(np.arange(n), deg)
    interior_edge = ~plan.lattice.boundary[src]
    need = np.zeros((T + 1, n), dtype=np.bool_)
    need[T, plan.observed] = True
    for t in range(T - 1, -1, -1):
        need[t, plan.observed] = True
        live = need[t + 1][src] & interior_edge
        need[t, rules.indices[live]] = True
    return need, True


def _kernel_args(plan: SimPlan):
    lat, rules, spec = plan.lattice, plan.rules, plan.spec
    use_table = rules.table is not None
    thr = np.zeros(1, np.int64) if use_table else np.asarray(rules.thresholds, np.int64)
    table = rules.table.bits.astype(np.uint8) if use_table else np.zeros(1, np.uint8)
    k0, k1 = rng.seed_key(plan.seed)
    return (np.asarray(rules.indptr, np.int64), np.asarray(rules.indices, np.int64), thr, table,
            use_table, np.asarray(lat.boundary, np.bool_), vertex_keys(lat).astype(np.uint64), k0, k1,
            float(spec.alpha), float(spec.beta), spec.model == ADVERSARIAL, np.uint8(spec.a),
            np.uint8(plan.clamp_value), int(plan.horizon))


def _error_counts(plan: SimPlan, rep_lo: int, rep_hi: int) -> np.ndarray:
    """Error counts per (t, observed) summed over replicates [rep_lo, rep_hi)."""
    args = _kernel_args(plan)
    needed, prune = _needed(plan)
    T, n_obs = plan.horizon, len(plan.observed)
    total = np.zeros((T + 1, n_obs), dtype=np.int64)
    first, last = rep_lo // 4, (rep_hi - 1) // 4
    per_block = max(1, (T + 1) * n_obs)
    chunk = max(1, min(1024, 8_000_000 // per_block))
    for b0 in range(first, last + 1, chunk):
        nb = min(chunk, last + 1 - b0)
        counts = np.zeros((nb, T + 1, n_obs), dtype=np.int32)
        _run_blocks(*args, b0, nb, rep_lo, rep_hi, needed, prune, plan.observed, counts)
        total += counts.sum(axis=0, dtype=np.int64)
    return total


def run_replicate(plan: SimPlan, replicate: int) -> np.ndarray:
    """Error bits, shape (horizon + 1, n_observed), for one replicate."""
    return _error_counts(plan, replicate, replicate + 1).astype(np.uint8)


def run_replicate_reference(plan: SimPlan, replicate: int) -> np.ndarray:
    """Same as :func:`run_replicate` via repeated :func:`step`; slow, for checking."""
    real = FaultRealization.sample(plan.lattice, plan.spec, plan.seed, replicate)
    cfg = Configuration(np.full(plan.lattice.vertex_count, plan.spec.a, dtype=np.uint8), 0)
    out = [cfg.bits[plan.observed] != plan.spec.a]
    for _ in range(plan.horizon):
        cfg = step(cfg, plan.lattice, plan.rules, real, plan.spec, plan.boundary)
        out.append(cfg.bits[plan.observed] != plan.spec.a)
    return np.array(out, dtype=np.uint8)


def wilson_interval(k, n, z=Z95):
    k = np.asarray(k, dtype=float)
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z / denom * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    lo = np.where(k == 0, 0.0, np.clip(centre - half, 0, 1))
    hi = np.where(k == n, 1.0, np.clip(centre + half, 0, 1))
    return lo, hi


@dataclass(eq=False)
class ErrorEstimate:
    """Error frequencies per time (rows) and observed vertex (columns).

    Frequencies describe the observed non-boundary cells of a finite
    truncation only.
    """

    counts: np.ndarray
    replicates: int
    observed: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def freq(self) -> np.ndarray:
        return self.counts / self.replicates

    @property
    def wilson(self):
        return wilson_interval(self.counts, self.replicates)

    def to_csv(self) -> str:
        lo, hi = self.wilson
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "vertex", "freq", "wilson_lo", "wilson_hi", "replicates"])
        freq = self.freq
        for t in range(self.counts.shape[0]):
            for i, v in enumerate(self.observed.tolist()):
                w.writerow([t, v, repr(float(freq[t, i])), repr(float(lo[t, i])), repr(float(hi[t, i])),
                            self.replicates])
        return buf.getvalue()


def estimate_error(plan: SimPlan) -> ErrorEstimate:
    counts = _error_counts(plan, 0, plan.replicates)
    return ErrorEstimate(counts, plan.replicates, plan.observed.copy())


def exact_tree_marginal(d: int, h: int, spec: FaultSpec, T: int, root: tuple[int, int] | None = None) -> list[float]:
    """Exact per-cell error probabilities P_0..P_T on a uniform directed tree.

    Independence of distinct subtrees makes the scalar recursion exact for
    transient faults.  With ``root=(d_root, h_root)`` the returned sequence is
    the trajectory of a root cell with its own parameters sitting above
    uniform subtrees (the root of a treeified regular tree keeps all of its
    neighbors).
    """
    if spec.beta > 0:
        raise SimulationError("manufacturing faults correlate a cell across time; no exact recursion")
    if d < 0 or not 0 <= h <= d + 1:
        raise SimulationError(f"invalid tree parameters d={d}, h={h}")
    mode = "exact_greedy" if spec.model == ADVERSARIAL else "exact_pure"
    eps = spec.alpha
    P = [0.0]
    for _ in range(T):
        P.append(recursion_step(P[-1], d, h, eps, mode))
    if root is not None:
        return [0.0] + [recursion_step(p, root[0], root[1], eps, mode) for p in P[:-1]]
    return P


def mean_final_frequency(est: ErrorEstimate) -> float:
    return float(est.freq[-1].mean())


def two_sample_z(k1, n1, k2, n2) -> float:
    p = (k1 + k2) / (n1 + n2)
    se = math.sqrt(max(p * (1 - p) * (1 / n1 + 1 / n2), 1e-300))
    return (k1 / n1 - k2 / n2) / se
