"""Reduction of a feeder to the smallest grid that probing data can resolve.

Probing from a bus subset P cannot see pass-through buses: only probed
buses and junctions separating probed buses leave a signature in the
data. The reduced grid keeps exactly those buses and joins them with
lines whose resistance equals the path resistance they replace.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import LeafNotProbed, UnknownNode
from .feeder import FeederGraph, effective_resistance


class ReducedGrid:
    """Immutable rooted tree over probed and junction buses.

    The root is the shallowest retained bus; the resistance of the path
    between the substation and the root (invisible to probing differences,
    hence not a line of the reduced grid) is kept as root_upstream_r so the
    original bus resistance matrix can be reproduced on retained buses.
    """

    def __init__(self, root: int, edges: Iterable[Sequence],
                 probing: Iterable[int], internal: Iterable[int],
                 root_upstream_r: float):
        self.root = int(root)
        self.edges: tuple[tuple[int, int, float], ...] = tuple(
            sorted(((int(u), int(v), float(r)) for u, v, r in edges),
                   key=lambda e: (e[1], e[0])))
        self.probing = frozenset(int(b) for b in probing)
        self.internal = frozenset(int(b) for b in internal)
        self.root_upstream_r = float(root_upstream_r)

        parent: dict[int, int] = {}
        children: dict[int, list[int]] = {self.root: []}
        for u, v, _ in self.edges:
            parent[v] = u
            children.setdefault(u, []).append(v)
            children.setdefault(v, [])
        self._parent = parent
        self._children = {n: tuple(sorted(c)) for n, c in children.items()}
        self.nodes = frozenset(children)

        path: dict[int, tuple[int, ...]] = {self.root: (self.root,)}
        rho: dict[int, float] = {self.root: 0.0}
        rdict = {(u, v): r for u, v, r in self.edges}
        stack = [self.root]
        while stack:
            u = stack.pop()
            for v in self._children[u]:
                path[v] = path[u] + (v,)
                rho[v] = rho[u] + rdict[(u, v)]
                stack.append(v)
        self._ancestry = path
        self._rho = rho

    def parent(self, m: int) -> int | None:
        return self._parent.get(m)

    def children(self, m: int) -> tuple[int, ...]:
        return self._children[m]

    def depth(self, m: int) -> int:
        """Depth within the reduced tree; the root is at depth 1."""
        return len(self._ancestry[m])

    def lca(self, m: int, n: int) -> int:
        a, b = self._ancestry[m], self._ancestry[n]
        last = a[0]
        for u, v in zip(a, b):
            if u != v:
                break
            last = u
        return last

    def descendants(self, m: int) -> frozenset[int]:
        out = []
        stack = [m]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self._children[u])
        return frozenset(out)

    def resistance_submatrix(self, buses: Sequence[int]) -> np.ndarray:
        """Matrix of substation-referenced resistances between retained buses.

        Entry (m, n) is root_upstream_r plus the in-grid path resistance
        down to the deepest common bus, which reproduces the corresponding
        entries of the full feeder's resistance matrix.
        """
        k = len(buses)
        out = np.empty((k, k))
        for i, m in enumerate(buses):
            for j in range(i, k):
                c = self.root_upstream_r + self._rho[self.lca(m, buses[j])]
                out[i, j] = c
                out[j, i] = c
        return out

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, ReducedGrid)
                and self.root == other.root
                and self.edges == other.edges
                and self.probing == other.probing
                and abs(self.root_upstream_r - other.root_upstream_r) == 0.0)

    def __repr__(self) -> str:
        return (f"ReducedGrid(root={self.root}, {len(self.nodes)} buses, "
                f"{len(self.edges)} lines)")


def identifiable_junctions(g: FeederGraph, probing: frozenset[int]) -> frozenset[int]:
    """Buses with at least two children whose subtrees each hold a probed bus."""
    out = []
    for n in g.nodes:
        feeds = 0
        for c in g.children(n):
            if g.descendants(c) & probing:
                feeds += 1
        if feeds >= 2:
            out.append(n)
    return frozenset(out)


def reduce_grid(g: FeederGraph, probing: Iterable[int]) -> ReducedGrid:
    """Collapse a feeder onto its probed buses and identifiable junctions.

    Requires every leaf to be probed; otherwise parts of the tree leave no
    trace in probing data and the reduction is not well defined.
    """
    p = frozenset(int(b) for b in probing)
    for b in p:
        g._check(b)
        if b == g.root:
            raise UnknownNode("the substation cannot be a probing bus")
    unprobed = g.leaves - p
    if unprobed:
        raise LeafNotProbed(
            f"leaves {sorted(unprobed)} carry no probing inverter")

    junctions = identifiable_junctions(g, p)
    kept = p | junctions

    # Reduced parent: nearest proper ancestor that is kept.
    edges = []
    root = None
    for v in kept:
        a = g.parent(v)
        while a is not None and a not in kept:
            a = g.parent(a)
        if a is None:
            root = v
        else:
            edges.append((a, v, effective_resistance(g, a, v)))
    return ReducedGrid(root=root, edges=edges, probing=p,
                       internal=kept - p,
                       root_upstream_r=g.path_r(root))
