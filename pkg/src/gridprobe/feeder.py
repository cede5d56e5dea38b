"""Radial feeder model: rooted tree, level sets, and resistance matrices.

A feeder is a tree rooted at the substation (bus 0). Power flows from the
root outward, so every line is stored as (parent, child, r, x) with
impedances in per unit. Reactance may be None on lines whose reactance is
unknown, e.g. lines reconstructed from probing data, which recovers
resistances only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    Disconnected,
    DuplicateNode,
    MissingRoot,
    NonpositiveImpedance,
    UnknownNode,
)

Edge = tuple[int, int, float, float | None]


class FeederGraph:
    """Immutable radial feeder rooted at bus 0.

    Construction validates radiality: impedances positive, every bus a
    single parent, bus 0 present with no parent, all buses reachable.
    """

    def __init__(self, edges: Iterable[Sequence]):
        parsed: list[Edge] = []
        for e in edges:
            if len(e) == 3:
                u, v, r = e
                x = None
            else:
                u, v, r, x = e
            u, v = int(u), int(v)
            r = float(r)
            x = None if x is None else float(x)
            if r <= 0 or (x is not None and x <= 0):
                raise NonpositiveImpedance(
                    f"line ({u},{v}) has nonpositive impedance r={r} x={x}")
            parsed.append((u, v, r, x))
        if not parsed:
            raise MissingRoot("a feeder needs at least one line")

        parent: dict[int, int] = {}
        for u, v, _, _ in parsed:
            if v in parent:
                raise DuplicateNode(f"bus {v} has more than one parent")
            parent[v] = u
        nodes = set(parent) | {u for u, *_ in parsed}
        if 0 not in nodes:
            raise MissingRoot("bus 0 (substation) is missing")
        if 0 in parent:
            raise MissingRoot("bus 0 (substation) must not have a parent")

        # Walk each parent chain; a revisited bus means a cycle, a chain
        # ending anywhere but bus 0 means a second component.
        state: dict[int, int] = {0: 1}  # 1 = reaches root
        for start in nodes:
            chain = []
            n = start
            while state.get(n) is None:
                chain.append(n)
                state[n] = 0  # on current chain
                if n not in parent:
                    raise Disconnected(f"bus {n} is not connected to the substation")
                n = parent[n]
            if state[n] == 0:  # landed back on the chain we are walking
                raise CycleDetected(f"cycle through bus {n}")
            for c in chain:
                state[c] = 1

        self._edges: tuple[Edge, ...] = tuple(
            sorted(parsed, key=lambda e: (e[1], e[0])))
        self._parent = parent
        self._nodes = frozenset(nodes)
        children: dict[int, list[int]] = {n: [] for n in nodes}
        for v, u in parent.items():
            children[u].append(v)
        self._children = {n: tuple(sorted(c)) for n, c in children.items()}
        self._r = {(u, v): r for u, v, r, _ in parsed}
        self._x = {(u, v): x for u, v, _, x in parsed}

        # Root-to-bus ancestries and cumulative path impedances, by BFS.
        anc: dict[int, tuple[int, ...]] = {0: (0,)}
        rho: dict[int, float] = {0: 0.0}
        rho_x: dict[int, float | None] = {0: 0.0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self._children[u]:
                anc[v] = anc[u] + (v,)
                rho[v] = rho[u] + self._r[(u, v)]
                xe = self._x[(u, v)]
                up = rho_x[u]
                rho_x[v] = None if (xe is None or up is None) else up + xe
                stack.append(v)
        self._ancestry = anc
        self._rho = rho
        self._rho_x = rho_x
        self._descendants: dict[int, frozenset[int]] = {}

    # -- basic accessors ---------------------------------------------------

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def nodes(self) -> frozenset[int]:
        return self._nodes

    @property
    def root(self) -> int:
        return 0

    @property
    def bus_order(self) -> tuple[int, ...]:
        """Non-root buses in ascending ID order; fixes matrix indexing."""
        return tuple(sorted(self._nodes - {0}))

    def parent(self, m: int) -> int | None:
        self._check(m)
        return self._parent.get(m)

    def children(self, m: int) -> tuple[int, ...]:
        self._check(m)
        return self._children[m]

    def line_r(self, u: int, v: int) -> float:
        return self._r[(u, v)]

    def line_x(self, u: int, v: int) -> float | None:
        return self._x[(u, v)]

    @property
    def leaves(self) -> frozenset[int]:
        return frozenset(n for n in self._nodes if not self._children[n])

    def _check(self, m: int) -> None:
        if m not in self._nodes:
            raise UnknownNode(f"bus {m} is not in the feeder")

    # -- ancestry ----------------------------------------------------------

    def depth(self, m: int) -> int:
        self._check(m)
        return len(self._ancestry[m]) - 1

    @property
    def tree_depth(self) -> int:
        return max(len(a) for a in self._ancestry.values()) - 1

    def ancestors(self, m: int) -> frozenset[int]:
        """Buses on the root-to-m path, m and the root included."""
        self._check(m)
        return frozenset(self._ancestry[m])

    def ancestor_at(self, m: int, k: int) -> int:
        """The depth-k bus on the root-to-m path."""
        self._check(m)
        path = self._ancestry[m]
        if not 0 <= k < len(path):
            raise UnknownNode(f"bus {m} has no depth-{k} ancestor")
        return path[k]

    def descendants(self, m: int) -> frozenset[int]:
        """Buses in the subtree hanging from m, m included."""
        self._check(m)
        cached = self._descendants.get(m)
        if cached is None:
            out = []
            stack = [m]
            while stack:
                u = stack.pop()
                out.append(u)
                stack.extend(self._children[u])
            cached = frozenset(out)
            self._descendants[m] = cached
        return cached

    def lca(self, m: int, n: int) -> int:
        """Deepest common bus of the two root paths."""
        a, b = self._ancestry[m], self._ancestry[n]
        last = 0
        for u, v in zip(a, b):
            if u != v:
                break
            last = u
        return last

    def path_r(self, m: int) -> float:
        """Total resistance of the root-to-m path."""
        self._check(m)
        return self._rho[m]

    def path_x(self, m: int) -> float | None:
        self._check(m)
        return self._rho_x[m]

    # -- equality ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FeederGraph) and self._edges == other._edges

    def __hash__(self) -> int:
        return hash(self._edges)

    def __repr__(self) -> str:
        return f"FeederGraph({len(self._nodes)} buses, {len(self._edges)} lines)"


def build_feeder(edges: Iterable[Sequence]) -> FeederGraph:
    """Validate an edge list (parent, child, r[, x]) and build the feeder."""
    return FeederGraph(edges)


# -- level sets -------------------------------------------------------------


@dataclass(frozen=True)
class LevelSetFamily:
    """The ancestry of a bus sliced into per-depth bus groups.

    For owner m, the set at depth k collects the buses whose paths to the
    root separate from m's path exactly at m's depth-k ancestor. Each set
    carries a representative resistance: the common resistance between the
    root and that ancestor, which is what a column of the resistance matrix
    shows for every member of the set.

    Complete families start at depth 0 (the substation's own group) and are
    indexed by true feeder depth. Metered families carry only probed buses,
    start at depth 1, and are indexed by depth in the reduced grid.
    """

    owner: int
    start_depth: int
    sets: tuple[frozenset[int], ...]
    values: tuple[float, ...]
    metered: bool
    probing: frozenset[int] | None = None

    def __post_init__(self):
        if len(self.sets) != len(self.values):
            raise ValueError("sets and values must align")

    @property
    def depth(self) -> int:
        """Inferred depth of the owner: the index of its own (last) group."""
        return self.start_depth + len(self.sets) - 1

    @property
    def depths(self) -> range:
        return range(self.start_depth, self.depth + 1)

    def at(self, k: int) -> frozenset[int]:
        return self.sets[k - self.start_depth]

    def value_at(self, k: int) -> float:
        return self.values[k - self.start_depth]

    def find(self, n: int) -> int | None:
        """Depth of the group containing bus n, or None."""
        for k, s in zip(self.depths, self.sets):
            if n in s:
                return k
        return None


def level_sets(g: FeederGraph, m: int) -> LevelSetFamily:
    """Slice the feeder into the per-depth bus groups seen from bus m.

    The depth-k group is the subtree of m's depth-k ancestor minus the
    subtree of its depth-(k+1) ancestor; the last group is m's own subtree.
    For m = 0 this is the single group holding every bus.
    """
    g._check(m)
    path = g._ancestry[m]
    sets = []
    values = []
    for k, a in enumerate(path):
        block = g.descendants(a)
        if k + 1 < len(path):
            block = block - g.descendants(path[k + 1])
        sets.append(frozenset(block))
        values.append(g.path_r(a))
    return LevelSetFamily(owner=m, start_depth=0, sets=tuple(sets),
                          values=tuple(values), metered=False)


def metered_level_sets(g: FeederGraph, m: int,
                       probing: Iterable[int]) -> LevelSetFamily:
    """Level sets of m restricted to probed buses, reindexed by reduced depth.

    Groups that contain no probed bus correspond to pass-through ancestors
    that leave no trace in probing data; they are dropped, and the surviving
    groups are renumbered consecutively from depth 1, matching the owner's
    ancestry in the reduced grid.
    """
    p = frozenset(int(b) for b in probing)
    for b in p:
        g._check(b)
    if m not in p:
        raise UnknownNode(f"bus {m} is not a probing bus")
    full = level_sets(g, m)
    sets = []
    values = []
    for s, v in zip(full.sets, full.values):
        kept = s & p
        if kept:
            sets.append(kept)
            values.append(v)
    return LevelSetFamily(owner=m, start_depth=1, sets=tuple(sets),
                          values=tuple(values), metered=True, probing=p)


# -- resistance matrices ------------------------------------------------------


@dataclass(frozen=True)
class ResistanceMatrix:
    """Dense bus-by-bus matrix with an explicit node ordering.

    Entry (m, n) is the impedance shared by the root paths of m and n,
    i.e. the path impedance from the root down to their deepest common bus.
    Rows and columns exclude the substation.
    """

    nodes: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.nodes), len(self.nodes)):
            raise ValueError("matrix shape does not match node order")
        self.values.setflags(write=False)

    def entry(self, m: int, n: int) -> float:
        i, j = self.nodes.index(m), self.nodes.index(n)
        return float(self.values[i, j])

    def column(self, n: int) -> dict[int, float]:
        j = self.nodes.index(n)
        return {m: float(self.values[i, j]) for i, m in enumerate(self.nodes)}

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        ri = [self.nodes.index(m) for m in rows]
        ci = [self.nodes.index(n) for n in cols]
        return self.values[np.ix_(ri, ci)]


def _shared_path_matrix(g: FeederGraph, rho: Mapping[int, float]) -> ResistanceMatrix:
    order = g.bus_order
    n = len(order)
    vals = np.empty((n, n))
    for i, m in enumerate(order):
        for j in range(i, n):
            c = rho[g.lca(m, order[j])]
            vals[i, j] = c
            vals[j, i] = c
    return ResistanceMatrix(nodes=order, values=vals)


def resistance_matrix(g: FeederGraph) -> ResistanceMatrix:
    """Bus resistance matrix: the inverse of the grounded (root-deleted)
    conductance Laplacian, computed here by shared-path sums."""
    return _shared_path_matrix(g, g._rho)


def reactance_matrix(g: FeederGraph) -> ResistanceMatrix:
    """Bus reactance matrix; requires every line to carry a reactance."""
    for (u, v), x in g._x.items():
        if x is None:
            raise NonpositiveImpedance(
                f"line ({u},{v}) has no reactance; reactance matrix undefined")
    return _shared_path_matrix(g, g._rho_x)


def effective_resistance(g: FeederGraph, m: int, n: int) -> float:
    """Resistance of the unique m-n path (the two-point effective resistance)."""
    g._check(m)
    g._check(n)
    return g.path_r(m) + g.path_r(n) - 2.0 * g.path_r(g.lca(m, n))
