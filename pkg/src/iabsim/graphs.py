"""Directed link graph over the network nodes and the conflict graph over
links (one vertex per link, edges for half-duplex sequencing or excessive
mutual interference)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from . import channel
from .model import (
    Duplex,
    Link,
    NetworkScenario,
    ScenarioError,
    validate_scenario,
)


@dataclass(frozen=True)
class LinkGraph:
    """Directed graph: network nodes as vertices, links as weighted edges.

    ``weights`` maps link id to an achievable data rate in bits/s;
    ``out_edges`` maps a node to its outgoing (peer, link_id) pairs.
    """

    vertices: tuple[str, ...]
    weights: dict[int, float]
    out_edges: dict[str, tuple[tuple[str, int], ...]]

    def with_weights(self, weights: Mapping[int, float]) -> "LinkGraph":
        return replace(self, weights=dict(weights))

    def edge_between(self, a: str, b: str) -> Optional[int]:
        for peer, lid in self.out_edges.get(a, ()):
            if peer == b:
                return lid
        return None


@dataclass(frozen=True)
class ConflictGraph:
    """Undirected, self-loop-free graph on link ids."""

    vertices: tuple[int, ...]
    edges: frozenset[tuple[int, int]]       # canonical (min, max) pairs
    neighbors: dict[int, frozenset[int]]

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def max_degree(self) -> int:
        return max((len(n) for n in self.neighbors.values()), default=0)

    @property
    def avg_degree(self) -> float:
        if not self.vertices:
            return 0.0
        return 2.0 * len(self.edges) / len(self.vertices)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def subgraph(self, keep: Iterable[int]) -> "ConflictGraph":
        kept = set(keep)
        verts = tuple(v for v in self.vertices if v in kept)
        edges = frozenset(e for e in self.edges if e[0] in kept and e[1] in kept)
        nbrs = {v: self.neighbors[v] & kept for v in verts}
        return ConflictGraph(vertices=verts, edges=edges, neighbors=nbrs)


def conflict_graph_from_edges(
    vertices: Iterable[int], edges: Iterable[tuple[int, int]]
) -> ConflictGraph:
    """Assemble a conflict graph from raw vertex/edge collections
    (handy for tests and synthetic instances)."""
    verts = tuple(sorted(set(vertices)))
    canon = set()
    for a, b in edges:
        if a == b:
            raise ValueError(f"self loop on {a}")
        canon.add((min(a, b), max(a, b)))
    nbrs: dict[int, set[int]] = {v: set() for v in verts}
    for a, b in canon:
        nbrs[a].add(b)
        nbrs[b].add(a)
    return ConflictGraph(
        vertices=verts,
        edges=frozenset(canon),
        neighbors={v: frozenset(n) for v, n in nbrs.items()},
    )


def build_link_graph(s: NetworkScenario) -> LinkGraph:
    """Directed link graph with weights initialized to each link's
    single-link Shannon capacity at full transmit power."""
    violations = validate_scenario(s)
    if violations:
        raise ScenarioError(violations)
    weights = {l.id: channel.single_link_capacity(s, l) for l in s.links}
    out: dict[str, list[tuple[str, int]]] = {n.id: [] for n in s.nodes}
    for l in s.links:
        out[l.tx].append((l.rx, l.id))
    return LinkGraph(
        vertices=tuple(n.id for n in s.nodes),
        weights=weights,
        out_edges={nid: tuple(sorted(e)) for nid, e in out.items()},
    )


def is_sequential(i: Link, j: Link, duplex_of: Mapping[str, Duplex]) -> bool:
    """True when the two links share a node that would have to transmit and
    receive at once, and that node is half-duplex. Shared transmitters
    (point-to-multipoint) and shared receivers never conflict here."""
    if i.id == j.id:
        raise ValueError("sequential test needs two distinct links")
    conflicts = []
    if i.tx == j.rx:
        conflicts.append(i.tx)
    if i.rx == j.tx:
        conflicts.append(i.rx)
    return any(duplex_of[n] == Duplex.HALF for n in conflicts)


def build_conflict_graph(
    s: NetworkScenario, link_ids: Optional[Iterable[int]] = None
) -> ConflictGraph:
    """Conflict graph over ``link_ids`` (default: all scenario links).

    An edge joins two links when they are sequential under the involved
    nodes' duplex modes, or when the interference power either one would
    induce at the other's receiver at full per-node transmit power exceeds
    the configured threshold. Residual self-interference of imperfect
    full-duplex nodes participates in the threshold comparison.
    """
    duplex_of = {n.id: n.duplex for n in s.nodes}
    if link_ids is None:
        links = list(s.links)
    else:
        links = [s.link(lid) for lid in link_ids]
    links.sort(key=lambda l: l.id)
    sigma = s.params.interference_threshold

    edges: set[tuple[int, int]] = set()
    for a in range(len(links)):
        for b in range(a + 1, len(links)):
            i, j = links[a], links[b]
            if is_sequential(i, j, duplex_of):
                edges.add((i.id, j.id))
                continue
            p_i = s.node(i.tx).p_max
            p_j = s.node(j.tx).p_max
            if (
                channel.interference_power(i, p_i, j, s) > sigma
                or channel.interference_power(j, p_j, i, s) > sigma
            ):
                edges.add((i.id, j.id))

    return conflict_graph_from_edges((l.id for l in links), edges)


def conflict_edge_list(cg: ConflictGraph) -> str:
    """Plain edge-list dump for debugging."""
    lines = [f"# vertices: {len(cg.vertices)} edges: {len(cg.edges)}"]
    lines += [str(v) for v in cg.vertices]
    lines += [f"{a} {b}" for a, b in sorted(cg.edges)]
    return "\n".join(lines) + "\n"
