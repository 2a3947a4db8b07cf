"""Domain types shared by every other module: system parameters, nodes,
directed links, and complete network scenarios, plus scenario validation
and a versioned JSON serialization of the whole scenario."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Optional

SCENARIO_FORMAT = "iab-scenario"
SCENARIO_VERSION = 1


class Role(str, Enum):
    BS = "BS"
    AP = "AP"
    UE = "UE"
    VEHICLE = "Vehicle"


class Duplex(str, Enum):
    HALF = "half"
    FULL_PERFECT = "full_perfect"
    FULL_RESIDUAL = "full_residual"


class Direction(str, Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"


@dataclass(frozen=True)
class SystemParams:
    """Physical-layer and frame constants. All values are strictly positive."""

    frame_length: float = 10e-3            # s
    carrier_freq: float = 28e9             # Hz
    light_speed: float = 3e8               # m/s
    pathloss_exp_los: float = 2.1
    pathloss_exp_nlos: float = 3.17
    shadow_sigma_los_db: float = 2.38      # dB, log-normal shadowing std
    shadow_sigma_nlos_db: float = 6.44     # dB
    d1: float = 20.0                       # m, LOS model breakpoint
    d2: float = 39.0                       # m, LOS model decay scale
    noise_power: float = 2e-11             # W
    interference_threshold: float = 1e-8   # W, conflict classification
    system_bandwidth: float = 1e9          # Hz
    slots_per_frame: int = 100
    p_max_bs: float = 1.0                  # W
    p_max_ap: float = 1.0                  # W
    p_max_ue: float = 0.1                  # W (1.0 is an alternative preset)

    @property
    def slot_duration(self) -> float:
        return self.frame_length / self.slots_per_frame


@dataclass(frozen=True)
class AntennaArray:
    rows: int
    cols: int

    @property
    def elements(self) -> int:
        return self.rows * self.cols


#: default arrays: infrastructure 16x8, terminals 4x4
DEFAULT_ARRAYS = {
    Role.BS: AntennaArray(16, 8),
    Role.AP: AntennaArray(16, 8),
    Role.UE: AntennaArray(4, 4),
    Role.VEHICLE: AntennaArray(4, 4),
}


def default_antenna(role: Role) -> AntennaArray:
    return DEFAULT_ARRAYS[role]


def default_p_max(role: Role, params: SystemParams) -> float:
    if role == Role.BS:
        return params.p_max_bs
    if role == Role.AP:
        return params.p_max_ap
    return params.p_max_ue


@dataclass(frozen=True)
class Node:
    id: str
    role: Role
    position: tuple[float, float]          # m, planar
    antenna: AntennaArray
    p_max: float                           # W
    duplex: Duplex = Duplex.HALF


#: Sentinel for full-buffer traffic: the link always has data to send.
FULL_BUFFER = None


@dataclass(frozen=True)
class Link:
    """A directed transmitter-to-receiver pair with a fixed sampled channel
    state. ``demand_bits`` is bits per frame, or ``None`` for full buffer."""

    id: int
    tx: str
    rx: str
    distance: float                        # m
    los: bool
    shadow_db: float                       # dB
    pathloss_linear: float                 # dimensionless, >= 1
    direction: Direction
    demand_bits: Optional[float] = FULL_BUFFER


@dataclass(frozen=True)
class NetworkScenario:
    params: SystemParams
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    routes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    rng_seed: int = 0

    @cached_property
    def node_by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link_by_id(self) -> dict[int, Link]:
        return {l.id: l for l in self.links}

    @cached_property
    def bs_id(self) -> str:
        for n in self.nodes:
            if n.role == Role.BS:
                return n.id
        raise ValueError("scenario has no BS")

    def node(self, node_id: str) -> Node:
        return self.node_by_id[node_id]

    def link(self, link_id: int) -> Link:
        return self.link_by_id[link_id]

    @cached_property
    def links_by_pair(self) -> dict[tuple[str, str], tuple[Link, ...]]:
        out: dict[tuple[str, str], list[Link]] = {}
        for l in self.links:
            out.setdefault((l.tx, l.rx), []).append(l)
        return {k: tuple(v) for k, v in out.items()}

    def ue_ids(self) -> list[str]:
        return sorted(n.id for n in self.nodes if n.role in (Role.UE, Role.VEHICLE))


class ScenarioError(ValueError):
    """Raised when an operation requires a valid scenario and got violations."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


#: Node-role pairs that may be joined by a link.
ADMISSIBLE_PAIRS = frozenset(
    {
        (Role.BS, Role.AP),
        (Role.AP, Role.BS),
        (Role.BS, Role.UE),
        (Role.UE, Role.BS),
        (Role.AP, Role.UE),
        (Role.UE, Role.AP),
        (Role.BS, Role.VEHICLE),
        (Role.VEHICLE, Role.BS),
        (Role.VEHICLE, Role.VEHICLE),
    }
)


def validate_scenario(s: NetworkScenario) -> list[str]:
    """Check every structural invariant; returns one message per violation.

    Deterministic and side-effect free; an empty list means the scenario is
    usable by the rest of the pipeline.
    """
    from . import channel  # local import: channel depends on this module

    violations: list[str] = []

    for f in fields(s.params):
        v = getattr(s.params, f.name)
        if not v > 0:
            violations.append(f"params.{f.name} not positive: {v}")
    if s.params.slots_per_frame < 1:
        violations.append("params.slots_per_frame < 1")

    bs_nodes = [n.id for n in s.nodes if n.role == Role.BS]
    if len(bs_nodes) == 0:
        violations.append("no BS node")
    elif len(bs_nodes) > 1:
        violations.append("multiple BS: " + ", ".join(bs_nodes))

    seen_nodes: set[str] = set()
    for n in s.nodes:
        if n.id in seen_nodes:
            violations.append(f"duplicate node id: {n.id}")
        seen_nodes.add(n.id)
        if n.antenna.rows < 1 or n.antenna.cols < 1:
            violations.append(f"node {n.id}: antenna array smaller than 1x1")
        if not n.p_max > 0:
            violations.append(f"node {n.id}: p_max not positive")

    seen_links: set[tuple[str, str, Direction]] = set()
    seen_ids: set[int] = set()
    for l in s.links:
        if l.id in seen_ids:
            violations.append(f"duplicate link id: {l.id}")
        seen_ids.add(l.id)
        if l.tx == l.rx:
            violations.append(f"link {l.id}: tx equals rx ({l.tx})")
            continue
        if l.tx not in s.node_by_id or l.rx not in s.node_by_id:
            violations.append(f"link {l.id}: unknown endpoint {l.tx}->{l.rx}")
            continue
        pair = (s.node(l.tx).role, s.node(l.rx).role)
        if pair not in ADMISSIBLE_PAIRS:
            violations.append(
                f"link {l.id}: inadmissible pair {pair[0].value}->{pair[1].value}"
            )
        key = (l.tx, l.rx, l.direction)
        if key in seen_links:
            violations.append(f"duplicate link {l.tx}->{l.rx} ({l.direction.value})")
        seen_links.add(key)
        if not l.distance > 0:
            violations.append(f"link {l.id}: distance not positive")
            continue
        if l.pathloss_linear < 1.0:
            violations.append(f"link {l.id}: pathloss below unity")
        expected = channel.pathloss(l.distance, l.los, l.shadow_db, s.params)
        if not math.isclose(l.pathloss_linear, expected, rel_tol=1e-9):
            violations.append(
                f"link {l.id}: pathloss {l.pathloss_linear:.6g} inconsistent "
                f"with channel model ({expected:.6g})"
            )
        if l.demand_bits is not None and l.demand_bits < 0:
            violations.append(f"link {l.id}: negative demand")

    bs = bs_nodes[0] if len(bs_nodes) == 1 else None
    for ue, path in s.routes.items():
        if len(path) < 2:
            violations.append(f"route {ue}: fewer than two nodes")
            continue
        if bs is not None and path[0] != bs and path[-1] != bs:
            violations.append(f"route {ue}: does not start or end at BS")
        for a, b in zip(path, path[1:]):
            if (a, b) not in s.links_by_pair and (b, a) not in s.links_by_pair:
                violations.append(f"route edge absent: {ue} {a}->{b}")

    return violations


# ---------------------------------------------------------------------------
# serialization


def _node_to_dict(n: Node) -> dict:
    return {
        "id": n.id,
        "role": n.role.value,
        "position": list(n.position),
        "antenna": {"rows": n.antenna.rows, "cols": n.antenna.cols},
        "p_max": n.p_max,
        "duplex": n.duplex.value,
    }


def _link_to_dict(l: Link) -> dict:
    return {
        "id": l.id,
        "tx": l.tx,
        "rx": l.rx,
        "distance": l.distance,
        "los": l.los,
        "shadow_db": l.shadow_db,
        "pathloss_linear": l.pathloss_linear,
        "direction": l.direction.value,
        "demand_bits": l.demand_bits,
    }


def scenario_to_dict(s: NetworkScenario) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "version": SCENARIO_VERSION,
        "rng_seed": s.rng_seed,
        "params": asdict(s.params),
        "nodes": [_node_to_dict(n) for n in s.nodes],
        "links": [_link_to_dict(l) for l in s.links],
        "routes": {ue: list(path) for ue, path in s.routes.items()},
    }


def scenario_from_dict(d: Mapping) -> NetworkScenario:
    if d.get("format") != SCENARIO_FORMAT:
        raise ValueError(f"not a {SCENARIO_FORMAT} document")
    if d.get("version") != SCENARIO_VERSION:
        raise ValueError(f"unsupported scenario version: {d.get('version')!r}")
    params = SystemParams(**d["params"])
    nodes = tuple(
        Node(
            id=n["id"],
            role=Role(n["role"]),
            position=(n["position"][0], n["position"][1]),
            antenna=AntennaArray(n["antenna"]["rows"], n["antenna"]["cols"]),
            p_max=n["p_max"],
            duplex=Duplex(n["duplex"]),
        )
        for n in d["nodes"]
    )
    links = tuple(
        Link(
            id=l["id"],
            tx=l["tx"],
            rx=l["rx"],
            distance=l["distance"],
            los=l["los"],
            shadow_db=l["shadow_db"],
            pathloss_linear=l["pathloss_linear"],
            direction=Direction(l["direction"]),
            demand_bits=l["demand_bits"],
        )
        for l in d["links"]
    )
    routes = {ue: tuple(path) for ue, path in d["routes"].items()}
    return NetworkScenario(
        params=params,
        nodes=nodes,
        links=links,
        routes=routes,
        rng_seed=d["rng_seed"],
    )


def save_scenario(s: NetworkScenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2))


def load_scenario(path: str | Path) -> NetworkScenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def with_duplex(
    s: NetworkScenario, duplex_by_role: Mapping[Role, Duplex]
) -> NetworkScenario:
    """Scenario copy with the duplex mode of whole role classes replaced."""
    nodes = tuple(
        replace(n, duplex=duplex_by_role.get(n.role, n.duplex)) for n in s.nodes
    )
    return replace(s, nodes=nodes)
