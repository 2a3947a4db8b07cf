"""Partition conflict-graph vertices into simultaneous-transmission (SDMA)
groups with an iterated minimum-degree greedy independent-set heuristic.

Each emitted group is a maximal independent set of the residual graph, so
group k contains at least |residual| / (max residual degree + 1) links.
Exact maximum-set search is deliberately left to the oracle module; it is
NP-hard in general.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .graphs import ConflictGraph


@dataclass(frozen=True)
class SdmaGroups:
    """Ordered partition of link ids into independent groups."""

    groups: tuple[tuple[int, ...], ...]

    @cached_property
    def group_of(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for k, members in enumerate(self.groups):
            for v in members:
                out[v] = k
        return out

    def all_links(self) -> set[int]:
        return {v for g in self.groups for v in g}

    def __len__(self) -> int:
        return len(self.groups)


def cg_mis_schedule(cg: ConflictGraph) -> SdmaGroups:
    """Iteratively extract maximal independent sets from the conflict graph.

    Within each iteration the vertex of minimum degree in the remaining
    candidate subgraph is added to the group and removed together with its
    neighbors; the outer loop repeats on the residual graph until every
    vertex is grouped. Ties break on the lowest link id so the output is
    deterministic.
    """
    remaining = set(cg.vertices)
    groups: list[tuple[int, ...]] = []
    while remaining:
        group: list[int] = []
        candidates = set(remaining)
        degree = {v: len(cg.neighbors[v] & candidates) for v in candidates}
        while candidates:
            v = min(candidates, key=lambda u: (degree[u], u))
            group.append(v)
            removed = {v} | (cg.neighbors[v] & candidates)
            candidates -= removed
            for r in removed:
                for u in cg.neighbors[r]:
                    if u in candidates:
                        degree[u] -= 1
        groups.append(tuple(sorted(group)))
        remaining -= set(group)
    return SdmaGroups(groups=tuple(groups))


def validate_schedule(cg: ConflictGraph, groups: SdmaGroups) -> bool:
    """True iff the groups partition the vertex set and every group is an
    independent set of the conflict graph."""
    seen: set[int] = set()
    for members in groups.groups:
        for v in members:
            if v in seen:
                return False
            seen.add(v)
        for a_idx in range(len(members)):
            for b_idx in range(a_idx + 1, len(members)):
                if cg.has_edge(members[a_idx], members[b_idx]):
                    return False
    return seen == set(cg.vertices)
