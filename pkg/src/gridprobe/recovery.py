"""Recursive feeder reconstruction from level-set families.

Reconstruction walks the tree root-down. At each step it holds a group of
probing buses known to share their ancestry up to the current depth k,
identifies their common depth-k ancestor, wires it to the ancestor found
one level up, and splits the group by who shares the next ancestor too.

With complete voltage data the ancestor is the single bus common to all
members' depth-k level sets. With probing-bus data only, the ancestor is
either the member whose depth-k metered set equals the whole group (then
it is a probed bus) or a junction invisible to the data, which gets a
fresh bus ID above every input ID.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    AmbiguousIntersection,
    EmptyPartition,
    InconsistentLevelSets,
    InconsistentMeteredSets,
    LabelMismatch,
)
from .feeder import FeederGraph, LevelSetFamily
from .reduction import ReducedGrid


@dataclass(frozen=True)
class RecoveryReport:
    """A reconstructed grid plus per-line bookkeeping.

    line_support counts how many probing columns contributed to each
    line's resistance average.
    """

    mode: str
    graph: FeederGraph | ReducedGrid
    probing: frozenset[int]
    line_support: Mapping[tuple[int, int], int] = field(default_factory=dict)


def _partition(group: frozenset[int], families: Mapping[int, LevelSetFamily],
               k: int) -> list[frozenset[int]]:
    """Split a bus group by identical depth-k level sets, smallest ID first."""
    blocks: dict[frozenset[int], set[int]] = {}
    for m in group:
        blocks.setdefault(families[m].at(k), set()).add(m)
    return sorted((frozenset(b) for b in blocks.values()), key=min)


def _line_estimate(group: frozenset[int], families: Mapping[int, LevelSetFamily],
                   k: int) -> float:
    """Average, over the group's columns, of the depth k-1 to k value step."""
    steps = [families[m].value_at(k) - families[m].value_at(k - 1)
             for m in group]
    r = sum(steps) / len(steps)
    if r <= 0:
        raise InconsistentLevelSets(
            f"nonpositive line resistance {r} at depth {k}")
    return r


def recover_full(families: Mapping[int, LevelSetFamily]) -> RecoveryReport:
    """Rebuild the entire feeder from complete-data level-set families.

    Requires one family per probing bus, indexed by true depth from 0, and
    probing buses covering every leaf. Recovers every bus under its
    original ID together with every line resistance.
    """
    if not families:
        raise EmptyPartition("no level-set families supplied")
    for m, fam in families.items():
        if fam.metered or fam.start_depth != 0:
            raise InconsistentLevelSets(
                f"family of bus {m} is not complete-data indexed")
        if fam.owner != m:
            raise InconsistentLevelSets(f"family keyed {m} owned by {fam.owner}")

    probing = frozenset(families)
    edges: list[tuple[int, int, float]] = []
    support: dict[tuple[int, int], int] = {}
    seen: set[int] = set()
    queue: deque = deque([(probing, None, 0)])
    while queue:
        group, parent, k = queue.popleft()
        inter: frozenset[int] | None = None
        for m in group:
            fam = families[m]
            if k > fam.depth:
                raise AmbiguousIntersection(
                    f"column {m} has no depth-{k} group", depth=k, buses=group)
            inter = fam.at(k) if inter is None else inter & fam.at(k)
        if len(inter) != 1:
            raise AmbiguousIntersection(
                f"depth-{k} intersection of {sorted(group)} has "
                f"{len(inter)} buses", depth=k, buses=group)
        (n,) = inter
        if n in seen:
            raise AmbiguousIntersection(
                f"bus {n} identified twice", depth=k, buses=group)
        seen.add(n)
        if k > 0:
            edges.append((parent, n, _line_estimate(group, families, k)))
            support[(parent, n)] = len(group)
        rest = group - {n}
        if rest:
            for part in _partition(rest, families, k):
                queue.append((part, n, k + 1))

    graph = FeederGraph([(u, v, r, None) for u, v, r in edges])
    return RecoveryReport(mode="complete", graph=graph, probing=probing,
                          line_support=support)


def recover_partial(families: Mapping[int, LevelSetFamily]) -> RecoveryReport:
    """Rebuild the reduced grid from probing-bus-only level-set families.

    Families are indexed by reduced-grid depth from 1. Junctions that are
    not probed get fresh IDs allocated above the largest probing ID.
    """
    if not families:
        raise EmptyPartition("no level-set families supplied")
    for m, fam in families.items():
        if not fam.metered or fam.start_depth != 1:
            raise InconsistentLevelSets(
                f"family of bus {m} is not metered-data indexed")
        if fam.owner != m:
            raise InconsistentLevelSets(f"family keyed {m} owned by {fam.owner}")

    probing = frozenset(families)
    next_id = max(probing) + 1
    edges: list[tuple[int, int, float]] = []
    support: dict[tuple[int, int], int] = {}
    internal: list[int] = []
    root: int | None = None
    queue: deque = deque([(probing, None, 1)])
    while queue:
        group, parent, k = queue.popleft()
        candidates = []
        for m in sorted(group):
            fam = families[m]
            if k <= fam.depth and fam.at(k) == group:
                candidates.append(m)
        if len(candidates) > 1:
            raise InconsistentMeteredSets(
                f"buses {candidates} both claim to root {sorted(group)}",
                depth=k, buses=group)
        if candidates:
            n = candidates[0]
        else:
            n = next_id
            next_id += 1
            internal.append(n)
        if root is None:
            root = n
        if k > 1:
            for m in group:
                if k > families[m].depth:
                    raise InconsistentMeteredSets(
                        f"column {m} has no depth-{k} group",
                        depth=k, buses=group)
            edges.append((parent, n, _line_estimate(group, families, k)))
            support[(parent, n)] = len(group)
        rest = group - {n}
        if rest:
            parts = _partition(rest, families, k)
            if n not in group and len(parts) == 1:
                raise InconsistentMeteredSets(
                    f"junction at depth {k} does not separate "
                    f"{sorted(group)}", depth=k, buses=group)
            for part in parts:
                queue.append((part, n, k + 1))

    upstream = sum(f.value_at(1) for f in families.values()) / len(families)
    graph = ReducedGrid(root=root, edges=edges, probing=probing,
                        internal=internal, root_upstream_r=upstream)
    return RecoveryReport(mode="partial", graph=graph, probing=probing,
                          line_support=support)


# -- comparison ---------------------------------------------------------------


@dataclass(frozen=True)
class GraphComparison:
    """Result of checking a recovered grid against a reference."""

    topology_correct: bool
    resistance_mpe: float | None
    max_rel_error: float | None
    node_map: Mapping[int, int] | None
    upstream_rel_error: float | None = None


def _tree_view(g: FeederGraph | ReducedGrid):
    if isinstance(g, FeederGraph):
        line_r = {(u, v): r for u, v, r, _ in g.edges}
        return g.root, g.children, line_r
    line_r = {(u, v): r for u, v, r in g.edges}
    return g.root, g.children, line_r


def compare_graphs(recovered: FeederGraph | ReducedGrid,
                   reference: FeederGraph | ReducedGrid,
                   probing: Iterable[int]) -> GraphComparison:
    """Match two rooted grids up to relabeling of non-probed buses.

    Probing buses must keep their IDs; other buses may be renamed
    arbitrarily. Children are matched by the set of probed buses below
    them, which is unique among siblings whenever every subtree contains a
    probed bus. Resistance errors are reported relative to the reference.
    """
    probing = frozenset(probing)
    for g in (recovered, reference):
        nodes = g.nodes
        missing = probing - nodes
        if missing:
            raise LabelMismatch(f"probing buses {sorted(missing)} absent")

    ra, ca, la = _tree_view(recovered)
    rb, cb, lb = _tree_view(reference)

    probed_below_a = _probed_below(ra, ca, probing)
    probed_below_b = _probed_below(rb, cb, probing)

    mapping: dict[int, int] = {}
    stack = [(ra, rb)]
    correct = True
    while stack and correct:
        a, b = stack.pop()
        in_pa, in_pb = a in probing, b in probing
        if in_pa != in_pb or (in_pa and a != b):
            correct = False
            break
        mapping[a] = b
        kids_a = {probed_below_a[c]: c for c in ca(a)}
        kids_b = {probed_below_b[c]: c for c in cb(b)}
        if (len(kids_a) != len(ca(a)) or len(kids_b) != len(cb(b))
                or set(kids_a) != set(kids_b)):
            correct = False
            break
        for key, child_a in kids_a.items():
            stack.append((child_a, kids_b[key]))

    if not correct:
        return GraphComparison(False, None, None, None)

    rel_errors = []
    for (u, v), r_rec in la.items():
        r_ref = lb[(mapping[u], mapping[v])]
        rel_errors.append(abs(r_rec - r_ref) / r_ref)
    mpe = 100.0 * sum(rel_errors) / len(rel_errors) if rel_errors else 0.0
    max_rel = max(rel_errors) if rel_errors else 0.0

    upstream = None
    if isinstance(recovered, ReducedGrid) and isinstance(reference, ReducedGrid):
        if reference.root_upstream_r > 0:
            upstream = (abs(recovered.root_upstream_r - reference.root_upstream_r)
                        / reference.root_upstream_r)
        else:
            upstream = abs(recovered.root_upstream_r - reference.root_upstream_r)

    return GraphComparison(True, mpe, max_rel, mapping, upstream)


def _probed_below(root: int, children, probing: frozenset[int]) -> dict[int, frozenset[int]]:
    """Probed-bus content of every subtree, via post-order accumulation."""
    out: dict[int, frozenset[int]] = {}
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(children(u))
    for u in reversed(order):
        acc = {u} & probing
        for c in children(u):
            acc = acc | out[c]
        out[u] = frozenset(acc)
    return out
