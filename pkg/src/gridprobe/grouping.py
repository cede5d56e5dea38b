"""Recovery of level-set families from resistance-matrix columns.

Every column of the bus resistance matrix is constant on each of the
owner bus's level sets, and the constants strictly increase with depth.
Grouping a column's entries by value therefore reads the owner's level
sets straight off the data: exactly on clean columns, and by a sorted
gap rule on noisy ones, where a jump larger than half the smallest line
resistance marks a boundary between groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InconsistentLevelSets, NonpositiveRmin
from .feeder import LevelSetFamily

SUBSTATION = 0


@dataclass(frozen=True)
class LevelGroup:
    """One recovered level set: depth index, member buses, shared value."""

    depth: int
    nodes: frozenset[int]
    value: float


@dataclass(frozen=True)
class ColumnGrouping:
    """Groups found in one resistance-matrix column.

    Complete-mode groupings cover every non-substation bus plus a
    synthetic zero entry for the substation, and are indexed from depth 0.
    Partial-mode groupings cover probed buses only and are indexed from
    depth 1 (depth in the reduced grid).
    """

    owner: int
    mode: str
    groups: tuple[LevelGroup, ...]
    sorted_entries: tuple[tuple[int, float], ...]
    threshold: float | None = None

    @property
    def depth(self) -> int:
        return self.groups[-1].depth

    def nodes_at(self, k: int) -> frozenset[int]:
        for grp in self.groups:
            if grp.depth == k:
                return grp.nodes
        raise KeyError(k)


def _sorted_entries(entries: Mapping[int, float], owner: int,
                    mode: str) -> list[tuple[int, float]]:
    if mode not in ("complete", "partial"):
        raise InconsistentLevelSets(f"unknown mode {mode!r}")
    if owner not in entries:
        raise InconsistentLevelSets(
            f"column owner {owner} missing from its own entries")
    items = [(int(n), float(v)) for n, v in entries.items()]
    if mode == "complete":
        if SUBSTATION in entries:
            raise InconsistentLevelSets(
                "complete-mode columns must not include the substation")
        items.append((SUBSTATION, 0.0))
    # Sort by value, ties by bus ID, so grouping is deterministic.
    items.sort(key=lambda item: (item[1], item[0]))
    return items


def _build(owner: int, mode: str, runs: list[list[tuple[int, float]]],
           entries: list[tuple[int, float]],
           threshold: float | None) -> ColumnGrouping:
    start = 0 if mode == "complete" else 1
    groups = []
    for i, run in enumerate(runs):
        value = sum(v for _, v in run) / len(run)
        groups.append(LevelGroup(depth=start + i,
                                 nodes=frozenset(n for n, _ in run),
                                 value=value))
    return ColumnGrouping(owner=owner, mode=mode, groups=tuple(groups),
                          sorted_entries=tuple(entries), threshold=threshold)


def group_column_exact(entries: Mapping[int, float], owner: int,
                       mode: str = "complete") -> ColumnGrouping:
    """Group a noise-free column by exact value equality."""
    items = _sorted_entries(entries, owner, mode)
    runs: list[list[tuple[int, float]]] = []
    for n, v in items:
        if runs and v == runs[-1][-1][1]:
            runs[-1].append((n, v))
        else:
            runs.append([(n, v)])
    return _build(owner, mode, runs, items, threshold=None)


def group_column_noisy(entries: Mapping[int, float], owner: int,
                       r_min: float, mode: str = "complete") -> ColumnGrouping:
    """Group a noisy column with the sorted gap rule.

    A new group starts wherever the gap between successive sorted entries
    exceeds r_min / 2. Negative estimates are kept as they are; they sort
    below the substation's zero and end up in the shallowest group unless
    the gap rule separates them. The group value is the member mean.
    """
    if r_min <= 0:
        raise NonpositiveRmin(f"r_min must be positive, got {r_min}")
    items = _sorted_entries(entries, owner, mode)
    cut = r_min / 2.0
    runs: list[list[tuple[int, float]]] = []
    for n, v in items:
        if runs and v - runs[-1][-1][1] <= cut:
            runs[-1].append((n, v))
        else:
            runs.append([(n, v)])
    return _build(owner, mode, runs, items, threshold=cut)


def grouping_diagnostics(grouping: ColumnGrouping) -> dict:
    """JSON-ready dump of one column's sorted entries, gaps and boundaries."""
    values = [v for _, v in grouping.sorted_entries]
    gaps = [b - a for a, b in zip(values, values[1:])]
    sizes = [len(grp.nodes) for grp in grouping.groups]
    boundaries = []
    at = 0
    for s in sizes[:-1]:
        at += s
        boundaries.append(at)
    return {
        "owner": grouping.owner,
        "mode": grouping.mode,
        "entries": [[n, v] for n, v in grouping.sorted_entries],
        "gaps": gaps,
        "threshold": grouping.threshold,
        "boundaries": boundaries,
        "groups": [
            {"depth": grp.depth, "buses": sorted(grp.nodes), "value": grp.value}
            for grp in grouping.groups
        ],
    }


def assemble_families(groupings: Iterable[ColumnGrouping],
                      value_tol: float = 1e-9) -> dict[int, LevelSetFamily]:
    """Collect per-column groupings into mutually consistent families.

    Checks, for every pair of owners, that the shared structure two columns
    must agree on agrees: the depth and value at which each owner sees the
    other is symmetric, and whenever bus s appears in owner m's depth-k
    group, both owners' groups strictly above depth k are identical. Any
    violation means the groupings cannot come from one feeder at the
    claimed noise level.
    """
    gl = list(groupings)
    if not gl:
        raise InconsistentLevelSets("no groupings supplied")
    mode = gl[0].mode
    owners = [g.owner for g in gl]
    if len(set(owners)) != len(owners):
        raise InconsistentLevelSets("duplicate column owners")
    universe = frozenset().union(*(grp.nodes for g in gl for grp in g.groups))
    probing = frozenset(owners)

    families: dict[int, LevelSetFamily] = {}
    for g in gl:
        if g.mode != mode:
            raise InconsistentLevelSets("mixed complete/partial groupings")
        covered: set[int] = set()
        for grp in g.groups:
            if covered & grp.nodes:
                raise InconsistentLevelSets(
                    f"column {g.owner}: bus in two groups")
            covered |= grp.nodes
        if covered != universe:
            raise InconsistentLevelSets(
                f"column {g.owner} does not cover the observed bus set")
        values = [grp.value for grp in g.groups]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InconsistentLevelSets(
                f"column {g.owner}: group values not increasing")
        if g.owner not in g.groups[-1].nodes:
            raise InconsistentLevelSets(
                f"column {g.owner}: owner not in its deepest group")
        if mode == "complete" and SUBSTATION not in g.groups[0].nodes:
            raise InconsistentLevelSets(
                f"column {g.owner}: substation not in the shallowest group")
        families[g.owner] = LevelSetFamily(
            owner=g.owner,
            start_depth=0 if mode == "complete" else 1,
            sets=tuple(grp.nodes for grp in g.groups),
            values=tuple(values),
            metered=(mode == "partial"),
            probing=probing if mode == "partial" else None,
        )

    _check_pairwise(families, value_tol)
    return families


def _check_pairwise(families: dict[int, LevelSetFamily], value_tol: float) -> None:
    owners = sorted(families)
    for i, m in enumerate(owners):
        fm = families[m]
        # At most one probed bus of depth k may sit in a depth-k group: that
        # slot belongs to the owner's depth-k ancestor alone.
        for k in fm.depths:
            anchors = [s for s in fm.at(k) if s in families
                       and families[s].depth == k]
            if len(anchors) > 1:
                raise InconsistentLevelSets(
                    f"column {m}: several depth-{k} buses {sorted(anchors)} "
                    f"in one depth-{k} group")
        for s in owners[i + 1:]:
            fs = families[s]
            k_ms = fm.find(s)
            k_sm = fs.find(m)
            if k_ms is None or k_sm is None or k_ms != k_sm:
                raise InconsistentLevelSets(
                    f"columns {m} and {s} disagree on their split depth")
            if abs(fm.value_at(k_ms) - fs.value_at(k_sm)) > value_tol:
                raise InconsistentLevelSets(
                    f"columns {m} and {s} disagree on their split value")
            for j in range(fm.start_depth, k_ms):
                if fm.at(j) != fs.at(j):
                    raise InconsistentLevelSets(
                        f"columns {m} and {s} disagree above depth {k_ms}")
