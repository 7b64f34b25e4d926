"""Finite lattices: regular trees, hyperbolic {p,q} tessellations, Euclidean
tori and the Toom neighborhood.

A :class:`Lattice` is a directed graph stored in CSR form.  Undirected kinds
store each edge in both directions, plus a self-loop at every vertex whose
nominal degree is even (the cell then votes on its own state).  Infinite
lattices are represented by balls around vertex 0 with explicit boundary
flags.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_VERTICES = 10_000_000

UNDIRECTED_KINDS = frozenset({"tree", "hyperbolic", "euclidean"})
TILINGS = {"square44": 4, "tri36": 6, "hex63": 3}


class LatticeError(ValueError):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    """Immutable directed graph with shell labels and boundary flags.

    ``shell[v] == -1`` means unset.  ``origin`` maps vertices back to the
    lattice they were cut from (``None`` when the lattice is not a cut).
    """

    indptr: np.ndarray
    indices: np.ndarray
    shell: np.ndarray
    boundary: np.ndarray
    kind: str = "custom"
    params: tuple = ()
    origin: np.ndarray | None = None
    _undirected: bool = field(default=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))
        object.__setattr__(self, "shell", _frozen(self.shell, np.int64))
        object.__setattr__(self, "boundary", _frozen(self.boundary, bool))
        if self.origin is not None:
            object.__setattr__(self, "origin", _frozen(self.origin, np.int64))
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))
        n = self.vertex_count
        if self.indptr.ndim != 1 or self.indptr[0] != 0 or np.any(np.diff(self.indptr) < 0):
            raise LatticeError("malformed indptr")
        if self.indptr[-1] != len(self.indices):
            raise LatticeError("indptr does not match indices")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise LatticeError("out-edge endpoint is not a valid vertex")
        if len(self.shell) != n or len(self.boundary) != n:
            raise LatticeError("shell/boundary length mismatch")
        if self.origin is not None and len(self.origin) != n:
            raise LatticeError("origin length mismatch")

    @classmethod
    def from_adjacency(cls, out_edges, shell=None, boundary=None, kind="custom", params=(),
                       origin=None, undirected=None):
        n = len(out_edges)
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(e) for e in out_edges])
        indices = np.fromiter((w for e in out_edges for w in e), dtype=np.int64, count=int(indptr[-1]))
        if shell is None:
            shell = np.full(n, -1)
        if boundary is None:
            boundary = np.zeros(n, dtype=bool)
        if undirected is None:
            undirected = kind in UNDIRECTED_KINDS
        return cls(indptr, indices, shell, boundary, kind, params, origin, undirected)

    @property
    def vertex_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def undirected(self) -> bool:
        return self._undirected

    def out_edges(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_self_loop(self) -> np.ndarray:
        src = np.repeat(np.arange(self.vertex_count), self.out_degree())
        loops = np.zeros(self.vertex_count, dtype=bool)
        loops[src[src == self.indices]] = True
        return loops

    def undirected_degree(self) -> np.ndarray:
        """Number of distinct non-self neighbors (out- or in-edges)."""
        return np.array([len(s) for s in self.neighbor_sets()], dtype=np.int64)

    def neighbor_sets(self) -> list[set]:
        nbrs = [set() for _ in range(self.vertex_count)]
        for v in range(self.vertex_count):
            for w in self.out_edges(v):
                w = int(w)
                if w != v:
                    nbrs[v].add(w)
                    nbrs[w].add(v)
        return nbrs

    def shell_sizes(self) -> list[int]:
        if np.any(self.shell < 0):
            raise LatticeError("shells not set")
        return np.bincount(self.shell).tolist()

    def edge_list(self):
        src = np.repeat(np.arange(self.vertex_count), self.out_degree())
        return src, self.indices

    def same_structure(self, other: "Lattice") -> bool:
        return (
            np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.shell, other.shell)
            and np.array_equal(self.boundary, other.boundary)
        )

    def __eq__(self, other):
        if not isinstance(other, Lattice):
            return NotImplemented
        same_origin = (self.origin is None and other.origin is None) or (
            self.origin is not None and other.origin is not None
            and np.array_equal(self.origin, other.origin)
        )
        return (self.same_structure(other) and self.kind == other.kind
                and self.params == other.params and same_origin
                and self.undirected == other.undirected)

    __hash__ = None


def _finish(nbrs, shell, boundary, nominal_degree, kind, params):
    """Build an undirected lattice from neighbor lists.

    Out-edges are ordered self-loop first, then neighbors by ascending index.
    """
    even = nominal_degree % 2 == 0
    out = []
    for v, ns in enumerate(nbrs):
        row = sorted(ns)
        if even:
            row = [v] + row
        out.append(row)
    return Lattice.from_adjacency(out, shell, boundary, kind, params, undirected=True)


def build_tree(q: int, depth: int) -> Lattice:
    """Radius-``depth`` ball of the q-regular tree, root at index 0."""
    if q < 3:
        raise LatticeError(f"tree degree must be >= 3, got {q}")
    if depth < 0:
        raise LatticeError("depth must be >= 0")
    nbrs = [[]]
    shell = [0]
    frontier = [0]
    for s in range(1, depth + 1):
        nxt = []
        for v in frontier:
            for _ in range(q if v == 0 else q - 1):
                w = len(nbrs)
                nbrs.append([v])
                nbrs[v].append(w)
                shell.append(s)
                nxt.append(w)
        frontier = nxt
        if len(nbrs) > DEFAULT_MAX_VERTICES:
            raise LatticeError("vertex cap exceeded")
    shell = np.array(shell)
    return _finish(nbrs, shell, shell == depth, q, "tree", (q, depth))


def _grow_tessellation(p: int, q: int, layers: int, cap: int):
    """Grow ``layers`` face layers of {p,q} around vertex 0.

    The region is kept as a boundary cycle; each boundary vertex tracks how
    many of its q incident faces are already closed.  A vertex with ``f``
    closed faces sends ``q - f - 1`` new edges outward; the faces between
    consecutive outward edges are then completed with fresh vertices, or by
    merging the two outward edges into one vertex when the boundary stretch
    between them already has ``p - 1`` vertices (this is what happens with
    triangles).
    """
    nbrs: list[set] = [set()]
    faces = [0]

    def new_vertex():
        nbrs.append(set())
        faces.append(0)
        if len(nbrs) > cap:
            raise LatticeError(f"vertex cap {cap} exceeded")
        return len(nbrs) - 1

    def link(u, v):
        nbrs[u].add(v)
        nbrs[v].add(u)

    boundary = [0]
    for layer in range(layers):
        if layer == 0:
            spoke_at = [0] * q
            # gaps: (first spoke, last spoke, boundary stretch)
            gaps = [(i, (i + 1) % q, [0]) for i in range(q)]
        else:
            spoke_at = []
            for i, b in enumerate(boundary):
                n_out = q - faces[b] - 1
                if n_out < 0:
                    raise LatticeError("over-full boundary vertex")
                spoke_at.extend([i] * n_out)
            if not spoke_at:
                raise LatticeError("region closed up; {p,q} is not hyperbolic")
            L = len(boundary)
            gaps = []
            for j in range(len(spoke_at)):
                k = (j + 1) % len(spoke_at)
                i0, i1 = spoke_at[j], spoke_at[k]
                span = (i1 - i0) % L
                if k == 0 and span == 0:
                    # wrap-around gap when every spoke hangs off one vertex
                    span = L
                stretch = [boundary[(i0 + s) % L] for s in range(span + 1)]
                gaps.append((j, k, stretch))

        n_spokes = len(spoke_at)
        # spokes whose gap has exactly p-1 boundary vertices collapse into one
        parent = list(range(n_spokes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for j, k, stretch in gaps:
            m = p - len(stretch) - 2
            if m < -1:
                raise LatticeError(f"unsupported gap of length {len(stretch)} for p={p}")
            if m == -1:
                parent[find(k)] = find(j)
        if len({find(j) for j in range(n_spokes)}) == 1 and n_spokes > 1:
            raise LatticeError("all outward edges merged; {p,q} is not hyperbolic")
        spoke_vertex = {}
        for j in range(n_spokes):
            r = find(j)
            if r not in spoke_vertex:
                spoke_vertex[r] = new_vertex()
        sv = [spoke_vertex[find(j)] for j in range(n_spokes)]
        src = [boundary[i] for i in spoke_at] if layer else [0] * q
        for j in range(n_spokes):
            link(src[j], sv[j])

        new_boundary = []
        for j, k, stretch in gaps:
            m = p - len(stretch) - 2
            face = list(stretch)
            if m == -1:
                face.append(sv[j])
                new_boundary.append(sv[j])
            else:
                path = [sv[j]] + [new_vertex() for _ in range(m)] + [sv[k]]
                for u, v in zip(path, path[1:]):
                    link(u, v)
                face.extend(path)
                new_boundary.extend(path[:-1])
            if len(set(face)) != p:
                raise LatticeError("face construction produced a degenerate polygon")
            for v in face:
                faces[v] += 1
        # drop consecutive repeats left by merged spokes
        cleaned = []
        for v in new_boundary:
            if not cleaned or cleaned[-1] != v:
                cleaned.append(v)
        while len(cleaned) > 1 and cleaned[0] == cleaned[-1]:
            cleaned.pop()
        for b in boundary:
            if faces[b] != q:
                raise LatticeError(f"vertex {b} closed with {faces[b]} faces, expected {q}")
        boundary = cleaned
    return nbrs


def _bfs(nbrs, root):
    dist = np.full(len(nbrs), -1, dtype=np.int64)
    dist[root] = 0
    order = [root]
    dq = deque([root])
    while dq:
        v = dq.popleft()
        for w in sorted(nbrs[v]):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                order.append(w)
                dq.append(w)
    return dist, order


def build_hyperbolic(p: int, q: int, shells: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> Lattice:
    """Vertices of {p,q} within graph distance ``shells`` of a root.

    Every vertex at distance ``s`` lies in face layer ``<= s``, so growing
    ``shells + 1`` face layers completes the neighborhood of every kept vertex.
    Vertices are re-indexed in BFS order, so each shell is a contiguous range.
    """
    if p < 3 or q < 3:
        raise LatticeError("p and q must be >= 3")
    if (p - 2) * (q - 2) <= 4:
        raise LatticeError(f"{{{p},{q}}} is not hyperbolic: (p-2)(q-2) = {(p - 2) * (q - 2)} <= 4")
    if shells < 0:
        raise LatticeError("shells must be >= 0")
    nbrs = _grow_tessellation(p, q, shells + 1, max(max_vertices * 8, 64))
    dist, order = _bfs(nbrs, 0)
    keep = [v for v in order if dist[v] <= shells]
    if len(keep) > max_vertices:
        raise LatticeError(f"{len(keep)} vertices exceeds cap {max_vertices}")
    index = {v: i for i, v in enumerate(keep)}
    new_nbrs = [{index[w] for w in nbrs[v] if w in index} for v in keep]
    shell = np.array([dist[v] for v in keep])
    return _finish(new_nbrs, shell, shell == shells, q, "hyperbolic", (p, q, shells))


def build_euclidean_torus(tiling: str, width: int, height: int) -> Lattice:
    """Periodic {4,4}, {3,6} or {6,3} lattice on a width x height torus."""
    if tiling not in TILINGS:
        raise LatticeError(f"unknown tiling {tiling!r}; expected one of {sorted(TILINGS)}")
    if width < 4 or height < 4:
        raise LatticeError("torus width and height must be >= 4")
    if tiling == "hex63" and (width % 2 or height % 2):
        raise LatticeError("hex63 (brick-wall) torus needs even width and height")
    n = width * height

    def vid(x, y):
        return (y % height) * width + (x % width)

    nbrs = [set() for _ in range(n)]
    for y in range(height):
        for x in range(width):
            v = vid(x, y)
            if tiling == "square44":
                steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            elif tiling == "tri36":
                steps = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]
            else:
                steps = [(1, 0), (-1, 0), (0, 1) if (x + y) % 2 == 0 else (0, -1)]
            for dx, dy in steps:
                w = vid(x + dx, y + dy)
                nbrs[v].add(w)
                nbrs[w].add(v)
    lat = _finish(nbrs, None, np.zeros(n, dtype=bool), TILINGS[tiling], "euclidean",
                  (TILINGS[tiling], width, height))
    return classify_shells(lat, 0)


def build_toom(width: int, height: int) -> Lattice:
    """Directed torus: every cell reads itself, its northern and eastern neighbor."""
    if width < 2 or height < 2:
        raise LatticeError("toom lattice needs width, height >= 2")
    out = []
    for y in range(height):
        for x in range(width):
            out.append([y * width + x, ((y + 1) % height) * width + x, y * width + (x + 1) % width])
    lat = Lattice.from_adjacency(out, kind="toom", params=(width, height), undirected=False)
    return classify_shells(lat, 0)


def _undirected_lists(lattice: Lattice):
    return [sorted(s) for s in lattice.neighbor_sets()]


def classify_shells(lattice: Lattice, root: int) -> Lattice:
    """Copy of ``lattice`` with shell = undirected graph distance from ``root``."""
    if not 0 <= root < lattice.vertex_count:
        raise LatticeError(f"root {root} is not a vertex")
    dist, _ = _bfs(lattice.neighbor_sets(), root)
    unreached = np.flatnonzero(dist < 0)
    if len(unreached):
        raise LatticeError(f"{len(unreached)} vertices unreachable from root {root}: "
                           f"{unreached[:10].tolist()}")
    return Lattice(lattice.indptr, lattice.indices, dist, lattice.boundary, lattice.kind,
                   lattice.params, lattice.origin, lattice.undirected)


def light_cone(lattice: Lattice, root: int, t: int) -> Lattice:
    """Induced sublattice on the cells within distance ``t`` of ``root``.

    The state of ``root`` up to time ``t`` depends on nothing else.  Cells
    that lose a neighbor in the cut are flagged boundary; ``origin`` records
    the original index of every kept cell.
    """
    if t < 0:
        raise LatticeError("t must be >= 0")
    if np.any(lattice.shell < 0) or lattice.shell[root] != 0:
        lattice = classify_shells(lattice, root)
    shell = lattice.shell
    bad = np.flatnonzero(lattice.boundary & (shell < t))
    if len(bad):
        raise LatticeError(f"t={t} exceeds the truncation: boundary vertex {int(bad[0])} "
                           f"sits at shell {int(shell[bad[0]])}")
    keep = np.flatnonzero(shell <= t)
    # root first, shells contiguous
    keep = keep[np.lexsort((keep, shell[keep]))]
    index = np.full(lattice.vertex_count, -1, dtype=np.int64)
    index[keep] = np.arange(len(keep))
    nbrs = lattice.neighbor_sets()
    out = []
    boundary = np.zeros(len(keep), dtype=bool)
    for i, v in enumerate(keep):
        row = [int(index[w]) for w in lattice.out_edges(v) if index[w] >= 0]
        out.append(row)
        boundary[i] = lattice.boundary[v] or any(index[w] < 0 for w in nbrs[v])
    base = lattice.origin[keep] if lattice.origin is not None else keep
    return Lattice.from_adjacency(out, shell[keep], boundary, lattice.kind, lattice.params,
                                  origin=base, undirected=lattice.undirected)


# -- serialization ---------------------------------------------------------

def dumps(lattice: Lattice) -> str:
    """Line format: ``lattice <kind> <params>``, optional ``origin ...`` and
    ``directed`` lines, then ``v shell boundary: w1 w2 ...`` per vertex."""
    lines = [" ".join(["lattice", lattice.kind, *map(str, lattice.params)])]
    if lattice.kind not in UNDIRECTED_KINDS and lattice.undirected:
        lines.append("undirected")
    if lattice.kind in UNDIRECTED_KINDS and not lattice.undirected:
        lines.append("directed")
    if lattice.origin is not None:
        lines.append(" ".join(["origin", *map(str, lattice.origin.tolist())]))
    shell = lattice.shell.tolist()
    bnd = lattice.boundary.tolist()
    for v in range(lattice.vertex_count):
        s = "-" if shell[v] < 0 else str(shell[v])
        edges = " ".join(map(str, lattice.out_edges(v).tolist()))
        lines.append(f"{v} {s} {int(bnd[v])}: {edges}".rstrip())
    return "\n".join(lines) + "\n"


def loads(text: str) -> Lattice:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("lattice "):
        raise LatticeError("missing 'lattice' header")
    head = lines[0].split()
    if len(head) < 2:
        raise LatticeError("header needs a kind")
    kind, params = head[1], tuple(int(x) for x in head[2:])
    undirected = kind in UNDIRECTED_KINDS
    origin = None
    out, shell, boundary = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line == "undirected":
            undirected = True
            continue
        if line == "directed":
            undirected = False
            continue
        if line.startswith("origin"):
            origin = [int(x) for x in line.split()[1:]]
            continue
        try:
            left, _, right = line.partition(":")
            v, s, b = left.split()
            if int(v) != len(out):
                raise LatticeError(f"line {lineno}: expected vertex {len(out)}, got {v}")
            shell.append(-1 if s == "-" else int(s))
            boundary.append(b == "1")
            out.append([int(w) for w in right.split()])
        except ValueError as exc:
            raise LatticeError(f"line {lineno}: {exc}") from None
    return Lattice.from_adjacency(out, np.array(shell, dtype=np.int64), np.array(boundary, dtype=bool),
                                  kind, params, origin=origin, undirected=undirected)
