"""Scenario generation (Manhattan grid and vehicle platoon), the per-frame
engine with baseline schedulers, packet-level latency simulation, and
snapshot-averaged run summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from . import channel
from .model import (
    FULL_BUFFER,
    AntennaArray,
    Direction,
    Duplex,
    Link,
    NetworkScenario,
    Node,
    Role,
    SystemParams,
    default_antenna,
    default_p_max,
    with_duplex,
)
from .pipeline import (
    SchedulePlan,
    jsra_plan,
    prop_fair_plan,
    round_robin_plan,
    tdma_plan,
)
from .resources import required_slots
from .routing import RouteLike, RoutePath, dynamic_routing, route_link_ids


class Scheme(str, Enum):
    JSRA = "jsra"
    TDMA = "tdma"
    ROUND_ROBIN = "round_robin"
    PROP_FAIR = "prop_fair"


# ---------------------------------------------------------------------------
# scenario generation


@dataclass(frozen=True)
class ManhattanConfig:
    """Street-grid deployment: square blocks, one BS and nine APs at
    crossroads, users dropped uniformly on the streets."""

    ue_count: int = 100
    blocks_x: int = 3
    blocks_y: int = 3
    street_length: float = 200.0    # m
    street_width: float = 30.0      # m
    n_assoc: int = 2                # serving-node candidates per user
    dl_demand_bits: Optional[float] = FULL_BUFFER
    ul_demand_bits: Optional[float] = FULL_BUFFER


#: crossroad grid indices that carry the nine APs on the default 4x4 grid;
#: the BS sits at inner crossroad (1, 1)
_AP_GRID_INDICES = (0, 2, 3)


def generate_manhattan(
    cfg: ManhattanConfig, params: SystemParams, rng: np.random.Generator
) -> NetworkScenario:
    pitch = cfg.street_length + cfg.street_width
    nx, ny = cfg.blocks_x + 1, cfg.blocks_y + 1

    nodes: list[Node] = []
    bs_pos = (1 * pitch, 1 * pitch)
    nodes.append(
        Node("bs", Role.BS, bs_pos, default_antenna(Role.BS),
             default_p_max(Role.BS, params))
    )
    ap_positions = [
        (i * pitch, j * pitch)
        for i in _AP_GRID_INDICES
        for j in _AP_GRID_INDICES
        if i < nx and j < ny
    ]
    for k, pos in enumerate(sorted(ap_positions)):
        nodes.append(
            Node(f"ap{k}", Role.AP, pos, default_antenna(Role.AP),
                 default_p_max(Role.AP, params))
        )

    half_w = cfg.street_width / 2.0
    span_x, span_y = (nx - 1) * pitch, (ny - 1) * pitch
    streets: list[tuple[float, float, float, float]] = []
    for i in range(nx):
        streets.append((i * pitch - half_w, i * pitch + half_w,
                        -half_w, span_y + half_w))
    for j in range(ny):
        streets.append((-half_w, span_x + half_w,
                        j * pitch - half_w, j * pitch + half_w))

    ue_nodes: list[Node] = []
    for u in range(cfg.ue_count):
        x0, x1, y0, y1 = streets[int(rng.integers(len(streets)))]
        pos = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        ue_nodes.append(
            Node(f"ue{u:03d}", Role.UE, pos, default_antenna(Role.UE),
                 default_p_max(Role.UE, params))
        )
    nodes.extend(ue_nodes)

    serving = [n for n in nodes if n.role in (Role.BS, Role.AP)]
    links: list[Link] = []
    routes: dict[str, tuple[str, ...]] = {}
    next_id = 0

    def add_pair(a: Node, b: Node, dl_demand, ul_demand) -> None:
        # one channel draw per node pair; both directions share it
        nonlocal next_id
        d = math.dist(a.position, b.position)
        los, shadow = channel.sample_link_state(d, params, rng)
        links.append(
            channel.make_link(next_id, a, b, Direction.DOWNLINK, params,
                              los=los, shadow_db=shadow, demand_bits=dl_demand)
        )
        links.append(
            channel.make_link(next_id + 1, b, a, Direction.UPLINK, params,
                              los=los, shadow_db=shadow, demand_bits=ul_demand)
        )
        next_id += 2

    bs = nodes[0]
    for ap in nodes[1:1 + len(ap_positions)]:
        add_pair(bs, ap, cfg.dl_demand_bits, cfg.ul_demand_bits)

    for ue in ue_nodes:
        ranked = sorted(
            serving, key=lambda n: (math.dist(n.position, ue.position), n.id)
        )
        for srv in ranked[: max(1, cfg.n_assoc)]:
            add_pair(srv, ue, cfg.dl_demand_bits, cfg.ul_demand_bits)
        closest = ranked[0]
        if closest.role == Role.BS:
            routes[ue.id] = ("bs", ue.id)
        else:
            routes[ue.id] = ("bs", closest.id, ue.id)

    # finite demand models the routed flows only: links off every default
    # route fall silent; full-buffer traffic keeps every link loaded
    scenario = NetworkScenario(
        params=params,
        nodes=tuple(nodes),
        links=tuple(links),
        routes=routes,
        rng_seed=int(rng.integers(2**31 - 1)),
    )
    finite = {
        Direction.DOWNLINK: cfg.dl_demand_bits is not FULL_BUFFER,
        Direction.UPLINK: cfg.ul_demand_bits is not FULL_BUFFER,
    }
    if any(finite.values()):
        on_route: set[int] = set()
        for route in routes.values():
            on_route.update(route_link_ids(scenario, route))
        links = [
            replace(l, demand_bits=0.0)
            if finite[l.direction] and l.id not in on_route
            else l
            for l in links
        ]
        scenario = replace(scenario, links=tuple(links))
    return scenario


def generate_platoon(
    n_vehicles: int,
    speed_kmh: float,
    bt_enabled_count: int,
    params: SystemParams,
    rng: Optional[np.random.Generator] = None,
    demand_bits: Optional[float] = FULL_BUFFER,
    bs_offset: float = 30.0,
) -> NetworkScenario:
    """Line of vehicles behind a roadside BS; inter-vehicle spacing is the
    speed in m/s times two. The first ``bt_enabled_count`` vehicles carry
    non-collocated bumper antennas and can receive and transmit at once.
    Without an rng the channel states are the deterministic median call.
    """
    if n_vehicles < 2:
        raise ValueError("need at least two vehicles")
    spacing = speed_kmh / 3.6 * 2.0

    nodes: list[Node] = [
        Node("bs", Role.BS, (bs_offset, 0.0), default_antenna(Role.BS),
             default_p_max(Role.BS, params))
    ]
    for i in range(n_vehicles):
        duplex = Duplex.FULL_PERFECT if i < bt_enabled_count else Duplex.HALF
        nodes.append(
            Node(f"veh{i:02d}", Role.VEHICLE, (-i * spacing, 0.0),
                 default_antenna(Role.VEHICLE),
                 default_p_max(Role.VEHICLE, params), duplex)
        )

    links: list[Link] = []
    next_id = 0

    def add_pair(a: Node, b: Node) -> None:
        nonlocal next_id
        d = math.dist(a.position, b.position)
        if rng is None:
            los, shadow = channel.median_los(d, params), 0.0
        else:
            los, shadow = channel.sample_link_state(d, params, rng)
        links.append(
            channel.make_link(next_id, a, b, Direction.DOWNLINK, params,
                              los=los, shadow_db=shadow, demand_bits=demand_bits)
        )
        links.append(
            channel.make_link(next_id + 1, b, a, Direction.UPLINK, params,
                              los=los, shadow_db=shadow, demand_bits=demand_bits)
        )
        next_id += 2

    add_pair(nodes[0], nodes[1])                      # BS to platoon head
    for i in range(n_vehicles - 1):
        add_pair(nodes[1 + i], nodes[2 + i])

    chain = ["bs"] + [f"veh{i:02d}" for i in range(n_vehicles)]
    routes = {
        f"veh{i:02d}": tuple(chain[: i + 2]) for i in range(n_vehicles)
    }
    return NetworkScenario(
        params=params,
        nodes=tuple(nodes),
        links=tuple(links),
        routes=routes,
        rng_seed=0,
    )


#: duplex presets selectable from experiment configs
DUPLEX_MODES: dict[str, dict[Role, Duplex]] = {
    "half": {},
    "full_residual_ap": {Role.AP: Duplex.FULL_RESIDUAL},
    "full_residual_ap_bs": {
        Role.AP: Duplex.FULL_RESIDUAL,
        Role.BS: Duplex.FULL_RESIDUAL,
    },
    "full_perfect_ap_bs": {
        Role.AP: Duplex.FULL_PERFECT,
        Role.BS: Duplex.FULL_PERFECT,
    },
}


def apply_duplex_mode(s: NetworkScenario, mode: str) -> NetworkScenario:
    if mode not in DUPLEX_MODES:
        raise ValueError(f"unknown duplex mode: {mode}")
    return with_duplex(s, DUPLEX_MODES[mode])


# ---------------------------------------------------------------------------
# per-frame engine


@dataclass(frozen=True)
class FrameMetrics:
    per_link_rate: dict[int, float]             # bits/s, per-frame average
    objective: float                            # sum of rate * slots
    per_node_switch_point: dict[str, float]     # downlink slot fraction
    per_packet_latency: tuple[int, ...]
    group_count: int
    plan: Optional[SchedulePlan] = None


def active_route_links(
    s: NetworkScenario, routes: Mapping[str, RouteLike]
) -> list[int]:
    active: set[int] = set()
    for route in routes.values():
        if route is None:
            continue
        active.update(route_link_ids(s, route))
    return sorted(active)


def demand_bearing_links(
    s: NetworkScenario,
    demands: Optional[Mapping[int, Optional[float]]] = None,
) -> list[int]:
    """Links that have traffic this frame: full-buffer links always, finite
    demands when positive. Overrides in ``demands`` win over the links' own
    demand fields."""
    out = []
    for link in s.links:
        d = link.demand_bits
        if demands is not None and link.id in demands:
            d = demands[link.id]
        if d is FULL_BUFFER or d > 0:
            out.append(link.id)
    return out


def _requirements(
    s: NetworkScenario,
    link_ids: Sequence[int],
    demands: Optional[Mapping[int, Optional[float]]],
) -> dict[int, int]:
    req: dict[int, int] = {}
    for lid in link_ids:
        link = s.link(lid)
        if demands is not None and lid in demands:
            req[lid] = required_slots(link, s, demands[lid])
        else:
            req[lid] = required_slots(link, s)
    return req


def _plan_for_scheme(
    s: NetworkScenario,
    scheme: Scheme,
    link_ids: Sequence[int],
    required: Mapping[int, int],
    fixed_switch_point: bool = False,
    rr_start: int = 0,
    pf_history: Optional[dict[int, float]] = None,
) -> SchedulePlan:
    if scheme == Scheme.JSRA:
        return jsra_plan(s, link_ids, required,
                         fixed_switch_point=fixed_switch_point)
    if scheme == Scheme.TDMA:
        return tdma_plan(s, link_ids, required)
    if scheme == Scheme.ROUND_ROBIN:
        return round_robin_plan(s, link_ids, required, start=rr_start)
    if scheme == Scheme.PROP_FAIR:
        return prop_fair_plan(s, link_ids, required, history=pf_history)
    raise ValueError(f"unknown scheme: {scheme}")


def switch_points(s: NetworkScenario, plan: SchedulePlan) -> dict[str, float]:
    """Per node, the downlink share of the slots allocated to its links."""
    dl: dict[str, float] = {}
    total: dict[str, float] = {}
    for lid, n in plan.per_link_slots.items():
        if n <= 0:
            continue
        link = s.link(lid)
        for node in (link.tx, link.rx):
            total[node] = total.get(node, 0.0) + n
            if link.direction == Direction.DOWNLINK:
                dl[node] = dl.get(node, 0.0) + n
    return {node: dl.get(node, 0.0) / tot for node, tot in total.items()}


def run_frame(
    s: NetworkScenario,
    routes: Mapping[str, RouteLike],
    scheme: Scheme,
    demands: Optional[Mapping[int, Optional[float]]] = None,
    fixed_switch_point: bool = False,
) -> FrameMetrics:
    """Plan one frame over every demand-bearing link and report metrics.

    Under full-buffer traffic every link transmits; the routes attribute
    flows to users but do not restrict the schedule. ``demands`` overrides
    the links' own per-frame demand; links requiring zero slots stay out of
    the frame.
    """
    link_ids = demand_bearing_links(s, demands)
    required = _requirements(s, link_ids, demands)
    plan = _plan_for_scheme(s, scheme, link_ids, required,
                            fixed_switch_point=fixed_switch_point)
    per_link_rate = {lid: plan.link_rate(lid) for lid in link_ids}
    return FrameMetrics(
        per_link_rate=per_link_rate,
        objective=plan.objective,
        per_node_switch_point=switch_points(s, plan),
        per_packet_latency=(),
        group_count=len(plan.groups.groups),
        plan=plan,
    )


def downlink_route_links(
    s: NetworkScenario, route: RouteLike
) -> list[int]:
    """Downlink link ids along a route, ordered source to destination."""
    if isinstance(route, RoutePath):
        nodes = route.nodes
    else:
        nodes = tuple(route)
    ids = []
    for a, b in zip(nodes, nodes[1:]):
        found = None
        for link in s.links_by_pair.get((a, b), ()):
            if link.direction == Direction.DOWNLINK:
                found = link.id
                break
        if found is None:
            return []
        ids.append(found)
    return ids


def per_ue_rates(
    s: NetworkScenario,
    routes: Mapping[str, RouteLike],
    per_link_rate: Mapping[int, float],
) -> dict[str, float]:
    """End-to-end per-user downlink rate: the bottleneck link rate along
    the route, divided by how many routed flows share that link."""
    flows: dict[int, int] = {}
    hops: dict[str, list[int]] = {}
    for ue, route in routes.items():
        if route is None:
            hops[ue] = []
            continue
        ids = downlink_route_links(s, route)
        hops[ue] = ids
        for lid in ids:
            flows[lid] = flows.get(lid, 0) + 1
    out: dict[str, float] = {}
    for ue, ids in hops.items():
        if not ids:
            out[ue] = 0.0
            continue
        out[ue] = min(per_link_rate.get(l, 0.0) / flows[l] for l in ids)
    return out


# ---------------------------------------------------------------------------
# packet-level latency


@dataclass
class Packet:
    flow: str
    bits: float
    arrival_frame: int = 0


@dataclass
class _PacketState:
    packet: Packet
    hops: list[int]
    hop: int = 0
    progress: float = 0.0
    avail_frame: int = 0
    delivered_frame: Optional[int] = None


def packet_latency(
    s: NetworkScenario,
    routes: Mapping[str, RouteLike],
    scheme: Scheme,
    packets: Sequence[Packet],
    max_frames: int = 400,
) -> list[Optional[int]]:
    """Store-and-forward packet simulation at frame granularity.

    Bits received by a relay become forwardable in the next frame unless
    the incoming and outgoing links share an SDMA group, in which case they
    flow through within the same frame. The grouped scheduler sizes slot
    requirements from all bits still upstream of a link so relay hops are
    provisioned ahead of arrival; exclusive-slot schedulers serve the bits
    actually queued at each transmitter. Returns per-packet latencies in
    frames (delivery frame minus arrival frame plus one), or None when a
    packet is still in flight at ``max_frames``.
    """
    states: list[_PacketState] = []
    for p in packets:
        hops = downlink_route_links(s, routes[p.flow])
        if not hops:
            raise ValueError(f"flow {p.flow}: no downlink route")
        states.append(
            _PacketState(packet=p, hops=hops, avail_frame=p.arrival_frame)
        )

    rr_start = 0
    pf_history: dict[int, float] = {}
    frame_len = s.params.frame_length

    for t in range(max_frames):
        pending = [st for st in states if st.delivered_frame is None
                   and st.packet.arrival_frame <= t]
        if not pending and all(st.delivered_frame is not None for st in states):
            break
        if not pending:
            continue

        demand: dict[int, float] = {}
        for st in pending:
            if scheme == Scheme.JSRA:
                for h in range(st.hop, len(st.hops)):
                    demand[st.hops[h]] = demand.get(st.hops[h], 0.0) + st.packet.bits
            elif st.avail_frame <= t:
                lid = st.hops[st.hop]
                demand[lid] = demand.get(lid, 0.0) + st.packet.bits - st.progress

        link_ids = sorted(demand)
        required = _requirements(s, link_ids, demand)
        plan = _plan_for_scheme(
            s, scheme, link_ids, required, rr_start=rr_start,
            pf_history=pf_history,
        )
        if scheme == Scheme.ROUND_ROBIN and link_ids:
            rr_start = (rr_start + plan.n_slots) % len(link_ids)

        capacity = {lid: plan.frame_bits(lid, frame_len) for lid in link_ids}

        for st in sorted(pending, key=lambda x: (x.packet.arrival_frame,
                                                 states.index(x))):
            while st.avail_frame <= t:
                lid = st.hops[st.hop]
                room = capacity.get(lid, 0.0)
                need = st.packet.bits - st.progress
                move = min(need, room)
                if move <= 0:
                    break
                capacity[lid] = room - move
                st.progress += move
                if st.progress < st.packet.bits - 1e-9:
                    break
                st.hop += 1
                st.progress = 0.0
                if st.hop == len(st.hops):
                    st.delivered_frame = t
                    break
                nxt = st.hops[st.hop]
                same_group = (
                    scheme == Scheme.JSRA
                    and plan.groups.group_of.get(lid) is not None
                    and plan.groups.group_of.get(lid)
                    == plan.groups.group_of.get(nxt)
                )
                st.avail_frame = t if same_group else t + 1

    out: list[Optional[int]] = []
    for st in states:
        if st.delivered_frame is None:
            out.append(None)
        else:
            out.append(st.delivered_frame - st.packet.arrival_frame + 1)
    return out


# ---------------------------------------------------------------------------
# multi-frame traces and whole runs


def switch_point_trace(
    s: NetworkScenario,
    routes: Mapping[str, RouteLike],
    n_frames: int,
    rng: np.random.Generator,
    jitter: tuple[float, float] = (0.5, 1.5),
    fixed_switch_point: bool = False,
) -> list[FrameMetrics]:
    """Frame-by-frame metrics with per-frame demand fluctuation: each
    finite link demand is scaled by a uniform draw every frame."""
    link_ids = active_route_links(s, routes)
    metrics = []
    for _ in range(n_frames):
        demands: dict[int, Optional[float]] = {}
        for lid in link_ids:
            base = s.link(lid).demand_bits
            if base is FULL_BUFFER:
                demands[lid] = FULL_BUFFER
            else:
                demands[lid] = base * float(rng.uniform(*jitter))
        metrics.append(
            run_frame(s, routes, Scheme.JSRA, demands=demands,
                      fixed_switch_point=fixed_switch_point)
        )
    return metrics


@dataclass(frozen=True)
class ExperimentConfig:
    scenario_kind: str = "manhattan"     # manhattan | platoon | file
    scenario_path: Optional[str] = None
    ue_count: int = 20
    n_assoc: int = 2
    dl_demand_bits: Optional[float] = FULL_BUFFER
    ul_demand_bits: Optional[float] = FULL_BUFFER
    n_vehicles: int = 10
    speed_kmh: float = 50.0
    bt_enabled_count: int = 0
    packet_bits: float = 5e6
    schemes: tuple[str, ...] = ("jsra", "tdma")
    duplex: str = "half"
    routing: str = "fixed"               # fixed | dynamic
    switch_point: str = "flexible"       # flexible | fixed
    snapshots: int = 2
    seed: int = 1
    slots_per_frame: int = 100


@dataclass(frozen=True)
class RunSummary:
    scheme: str
    edge_rate: float            # bits/s, 5th percentile of the UE rate CDF
    avg_rate: float             # bits/s
    mean_latency: Optional[float]   # frames
    snapshots: int


def _snapshot_scenario(
    cfg: ExperimentConfig, index: int
) -> NetworkScenario:
    params = SystemParams(slots_per_frame=cfg.slots_per_frame)
    rng = np.random.default_rng([cfg.seed, index])
    if cfg.scenario_kind == "manhattan":
        mc = ManhattanConfig(
            ue_count=cfg.ue_count,
            n_assoc=cfg.n_assoc,
            dl_demand_bits=cfg.dl_demand_bits,
            ul_demand_bits=cfg.ul_demand_bits,
        )
        s = generate_manhattan(mc, params, rng)
    elif cfg.scenario_kind == "platoon":
        s = generate_platoon(
            cfg.n_vehicles, cfg.speed_kmh, cfg.bt_enabled_count, params, rng=rng
        )
    elif cfg.scenario_kind == "file":
        from .model import load_scenario

        s = load_scenario(cfg.scenario_path)
    else:
        raise ValueError(f"unknown scenario kind: {cfg.scenario_kind}")
    if cfg.scenario_kind != "platoon":
        s = apply_duplex_mode(s, cfg.duplex)
    return s


def _snapshot_rows(cfg: ExperimentConfig, index: int) -> list[dict]:
    """All metric rows for one snapshot (long format)."""
    s = _snapshot_scenario(cfg, index)
    rows: list[dict] = []

    if cfg.routing == "dynamic":
        routes: Mapping[str, RouteLike] = {
            ue: p for ue, p in dynamic_routing(s).items() if p is not None
        }
    else:
        routes = s.routes

    for name in cfg.schemes:
        scheme = Scheme(name)
        if cfg.scenario_kind == "platoon":
            packets = [Packet(flow=v, bits=cfg.packet_bits)
                       for v in sorted(routes)]
            lat = packet_latency(s, routes, scheme, packets)
            done = [x for x in lat if x is not None]
            mean_lat = float(np.mean(done)) if done else float("nan")
            makespan = max(done) if done else None
            total_bits = sum(p.bits for p, x in zip(packets, lat)
                             if x is not None)
            thr = (total_bits / (makespan * s.params.frame_length)
                   if makespan else 0.0)
            rows.append({"snapshot": index, "scheme": name,
                         "metric": "mean_latency", "value": mean_lat})
            rows.append({"snapshot": index, "scheme": name,
                         "metric": "throughput", "value": thr})
        else:
            fm = run_frame(
                s, routes, scheme,
                fixed_switch_point=(cfg.switch_point == "fixed"),
            )
            rates = per_ue_rates(s, routes, fm.per_link_rate)
            values = np.array(sorted(rates.values()))
            edge = float(np.percentile(values, 5)) if len(values) else 0.0
            avg = float(values.mean()) if len(values) else 0.0
            rows.append({"snapshot": index, "scheme": name,
                         "metric": "edge_rate", "value": edge})
            rows.append({"snapshot": index, "scheme": name,
                         "metric": "avg_rate", "value": avg})
            rows.append({"snapshot": index, "scheme": name,
                         "metric": "group_count", "value": fm.group_count})
    return rows


def run_simulation(
    cfg: ExperimentConfig, threads: int = 1
) -> tuple[list[dict], list[RunSummary]]:
    """Run all snapshots and aggregate per-scheme summaries.

    Snapshots are independent (per-snapshot seeded streams) so the result
    does not depend on ``threads``.
    """
    rows: list[dict] = []
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            for chunk in pool.map(_snapshot_rows, [cfg] * cfg.snapshots,
                                  range(cfg.snapshots)):
                rows.extend(chunk)
    else:
        for i in range(cfg.snapshots):
            rows.extend(_snapshot_rows(cfg, i))

    summaries: list[RunSummary] = []
    for name in cfg.schemes:
        mine = [r for r in rows if r["scheme"] == name]

        def metric_mean(metric: str) -> Optional[float]:
            vals = [r["value"] for r in mine if r["metric"] == metric
                    and not math.isnan(r["value"])]
            return float(np.mean(vals)) if vals else None

        summaries.append(
            RunSummary(
                scheme=name,
                edge_rate=metric_mean("edge_rate") or 0.0,
                avg_rate=metric_mean("avg_rate") or 0.0,
                mean_latency=metric_mean("mean_latency"),
                snapshots=cfg.snapshots,
            )
        )
    return rows, summaries
