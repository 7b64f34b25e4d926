"""Edge deletion from a majority-vote lattice down to a directed tree.

Every deleted argument of a cell's vote is replaced by the constant error
value, which can only raise the error probability.  The constant is never
materialized: it is credited against the cell's threshold instead, so the
tree cell at ``v`` reads ``d(v)`` children and errs once ``h(v)`` of them err.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .lattice import Lattice, LatticeError, classify_shells


@dataclass(frozen=True, eq=False)
class TreeRuleSet:
    """Directed tree cut out of ``source`` with per-vertex vote accounting.

    ``h`` is the number of erring children that makes the cell err.  Deletion
    counts are split by reason: edges to the previous shell (``parents``), to
    the same shell (``siblings``), children already claimed by an earlier
    vertex (``excluded``), and the self-loop.
    """

    tree: Lattice
    source: Lattice
    root: int
    d: np.ndarray
    h: np.ndarray
    parents: np.ndarray
    siblings: np.ndarray
    excluded: np.ndarray
    self_loop: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return self.parents + self.siblings + self.excluded + self.self_loop

    @property
    def max_deletions(self) -> int:
        interior = ~self.source.boundary
        return int(self.r[interior].max()) if interior.any() else 0

    def ones_thresholds(self, a: int) -> np.ndarray:
        """Per-vertex ``ThresholdRule`` cut-offs when remembering bit ``a``.

        For ``a = 0`` the error value is 1, so the cell outputs 1 once ``h``
        children are 1.  For ``a = 1`` the cell outputs 0 once ``h`` children
        are 0, i.e. outputs 1 iff at least ``d - h + 1`` children are 1.
        """
        if a == 0:
            return self.h.copy()
        return self.d - self.h + 1

    def deletion_report(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex", "shell", "r", "deleted_parent", "deleted_sibling", "deleted_child", "self_loop"])
        r = self.r
        for v in range(self.source.vertex_count):
            w.writerow([v, int(self.source.shell[v]), int(r[v]), int(self.parents[v]),
                        int(self.siblings[v]), int(self.excluded[v]), int(self.self_loop[v])])
        return buf.getvalue()


def treeify(lattice: Lattice, root: int = 0) -> TreeRuleSet:
    """Delete parent, sibling, self-loop and contested child edges.

    Same-shell vertices are scanned in index order; a child already claimed by
    an earlier vertex is dropped from later ones, so retained child sets are
    disjoint.
    """
    if not 0 <= root < lattice.vertex_count:
        raise LatticeError(f"root {root} is not a vertex")
    if np.any(lattice.shell < 0) or lattice.shell[root] != 0:
        lattice = classify_shells(lattice, root)
    shell = lattice.shell
    n = lattice.vertex_count
    counts = {k: np.zeros(n, dtype=np.int64) for k in ("parents", "siblings", "excluded", "self_loop")}
    claimed = np.zeros(n, dtype=bool)
    claimed[root] = True
    children = [[] for _ in range(n)]
    order = np.lexsort((np.arange(n), shell))
    for v in order:
        for w in lattice.out_edges(v):
            w = int(w)
            if w == v:
                counts["self_loop"][v] += 1
            elif shell[w] < shell[v]:
                counts["parents"][v] += 1
            elif shell[w] == shell[v]:
                counts["siblings"][v] += 1
            elif claimed[w]:
                counts["excluded"][v] += 1
            else:
                claimed[w] = True
                children[v].append(w)
    d_source = lattice.out_degree()
    r = sum(counts.values())
    d = d_source - r
    h = np.maximum(0, (d_source + 2) // 2 - r)
    tree = Lattice.from_adjacency(children, shell, lattice.boundary, "treeified", (root,),
                                  origin=lattice.origin, undirected=False)
    return TreeRuleSet(tree, lattice, root, d, h, **counts)


def verify_directed_tree(rules: TreeRuleSet) -> tuple[bool, list[str]]:
    """Check the retained edges form a tree rooted at ``rules.root``.

    Returns the verdict and one diagnostic line per offending vertex.
    """
    tree = rules.tree
    n = tree.vertex_count
    problems = []
    indeg = np.bincount(tree.indices, minlength=n)
    for v in np.flatnonzero(indeg > 1):
        problems.append(f"vertex {int(v)} has {int(indeg[v])} parents")
    if indeg[rules.root]:
        problems.append(f"root {rules.root} has an incoming edge")
    seen = np.zeros(n, dtype=bool)
    stack = [rules.root]
    seen[rules.root] = True
    while stack:
        v = stack.pop()
        for w in tree.out_edges(v):
            if seen[w]:
                problems.append(f"vertex {int(w)} reached twice (cycle or shared child)")
                continue
            seen[w] = True
            stack.append(int(w))
    for v in np.flatnonzero(~seen):
        problems.append(f"vertex {int(v)} unreachable from root")
    # keep one line per vertex
    problems = list(dict.fromkeys(problems))
    return not problems, problems


def budget_violations(rules: TreeRuleSet) -> list[str]:
    """Interior vertices exceeding 2 parents, 2 siblings or 1 excluded child."""
    out = []
    interior = ~rules.source.boundary
    for name, cap in (("parents", 2), ("siblings", 2), ("excluded", 1)):
        arr = getattr(rules, name)
        for v in np.flatnonzero(interior & (arr > cap)):
            out.append(f"vertex {int(v)}: {int(arr[v])} {name} > {cap}")
    return out
