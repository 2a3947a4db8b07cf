"""Bottleneck-path selection over the weighted link graph and the
load-aware dynamic routing loop that commits one user at a time and
refreshes the link weights from a full frame plan in between."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

from .graphs import LinkGraph, build_link_graph
from .model import NetworkScenario
from .pipeline import jsra_plan
from .resources import required_slots


@dataclass(frozen=True)
class RoutePath:
    """Ordered node path whose weight is the minimum edge weight along it."""

    nodes: tuple[str, ...]
    weight: float


RouteLike = Union[RoutePath, Sequence[str]]


def _route_nodes(route: RouteLike) -> tuple[str, ...]:
    if isinstance(route, RoutePath):
        return route.nodes
    return tuple(route)


def select_path(lg: LinkGraph, s: str, d: str) -> Optional[RoutePath]:
    """Layered widest-path search from ``s`` to ``d``.

    Expands the frontier breadth-first; a neighbor's path weight is the
    minimum of the frontier node's weight and the connecting edge, kept on
    ties (accumulating parents) and replaced when a strictly wider path
    appears. Returns None when ``d`` is unreachable. Reconstruction prefers
    the parent traversed in the earliest layer, then the lowest id, so
    equal-weight paths resolve to fewer hops first.
    """
    if s == d:
        raise ValueError("source equals destination")
    if s not in lg.out_edges or d not in lg.out_edges:
        raise ValueError("source or destination not in graph")

    inf = float("inf")
    weight: dict[str, float] = {s: inf}
    parents: dict[str, set[str]] = {}
    layer_of: dict[str, int] = {}
    traversed: set[str] = set()
    current: set[str] = {s}
    layer = 0

    while current:
        nxt: set[str] = set()
        for v in sorted(current):
            if v in traversed:
                continue
            for u, lid in lg.out_edges.get(v, ()):
                if u in traversed:
                    continue
                candidate = min(lg.weights[lid], weight[v])
                known = weight.get(u)
                if known is None or known == candidate:
                    weight[u] = candidate
                    parents.setdefault(u, set()).add(v)
                    nxt.add(u)
                elif known < candidate:
                    weight[u] = candidate
                    parents[u] = {v}
                    nxt.add(u)
            traversed.add(v)
            layer_of[v] = layer
        current = nxt - traversed
        layer += 1

    if d not in parents:
        return None

    path = [d]
    seen = {d}
    cur = d
    while cur != s:
        cands = parents.get(cur)
        if not cands:
            return None
        cur = min(cands, key=lambda p: (layer_of.get(p, 1 << 30), p))
        if cur in seen:
            return None  # defensive: inconsistent parent pointers
        seen.add(cur)
        path.append(cur)
    path.reverse()
    return RoutePath(nodes=tuple(path), weight=weight[d])


def route_link_ids(s: NetworkScenario, route: RouteLike) -> list[int]:
    """All link ids (both directions) along a route's consecutive hops."""
    nodes = _route_nodes(route)
    ids: list[int] = []
    for a, b in zip(nodes, nodes[1:]):
        for pair in ((a, b), (b, a)):
            for link in s.links_by_pair.get(pair, ()):
                ids.append(link.id)
    return ids


def _active_link_set(
    s: NetworkScenario, committed_routes: Mapping[str, RouteLike]
) -> frozenset[int]:
    active: set[int] = set()
    for route in committed_routes.values():
        active.update(route_link_ids(s, route))
    for link in s.links:
        if link.demand_bits is None or link.demand_bits > 0:
            active.add(link.id)
    return frozenset(active)


def update_network(
    s: NetworkScenario, committed_routes: Mapping[str, RouteLike]
) -> LinkGraph:
    """Link graph with weights refreshed from a full frame plan.

    The plan runs over the links the committed routes occupy together with
    every other demand-bearing candidate link; each planned link's weight
    becomes its per-frame achievable data rate under that plan. Links the
    plan leaves out keep their standalone single-link rate.
    """
    base = build_link_graph(s)
    active = _active_link_set(s, committed_routes)
    if not active:
        return base
    required = {lid: required_slots(s.link(lid), s) for lid in active}
    plan = jsra_plan(s, sorted(active), required)
    weights = dict(base.weights)
    for lid in plan.groups.all_links():
        weights[lid] = plan.link_rate(lid)
    return base.with_weights(weights)


def committed_flow_counts(
    s: NetworkScenario, committed_routes: Mapping[str, RouteLike]
) -> dict[int, int]:
    flows: dict[int, int] = {}
    for route in committed_routes.values():
        for lid in route_link_ids(s, route):
            flows[lid] = flows.get(lid, 0) + 1
    return flows


def dynamic_routing(
    s: NetworkScenario, ues: Optional[Sequence[str]] = None
) -> dict[str, Optional[RoutePath]]:
    """Greedy per-user routing: pick the widest path on current weights,
    commit it, refresh the network, move on. Unreachable users map to None
    and the loop continues.

    A link's weight is discounted by the flows already committed to it plus
    the prospective one, so traffic drifts toward lightly loaded links.
    """
    if ues is None:
        ues = s.ue_ids()
    committed: dict[str, RoutePath] = {}
    result: dict[str, Optional[RoutePath]] = {}
    lg: Optional[LinkGraph] = None
    planned_for: Optional[frozenset[int]] = None
    for ue in ues:
        active = _active_link_set(s, committed)
        if lg is None or active != planned_for:
            lg = update_network(s, committed)
            planned_for = active
        flows = committed_flow_counts(s, committed)
        shared = {
            lid: w / (1 + flows.get(lid, 0)) for lid, w in lg.weights.items()
        }
        path = select_path(lg.with_weights(shared), s.bs_id, ue)
        result[ue] = path
        if path is not None:
            committed[ue] = path
    return result
