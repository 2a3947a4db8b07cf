"""Simulation and optimization engine for multihop mm-wave networks with
integrated access and backhaul: joint link scheduling into simultaneous
transmission groups, slot and power allocation, bottleneck-path routing,
and frame-level performance evaluation against baseline schedulers."""

from .model import (
    FULL_BUFFER,
    AntennaArray,
    Direction,
    Duplex,
    Link,
    NetworkScenario,
    Node,
    Role,
    ScenarioError,
    SystemParams,
    load_scenario,
    save_scenario,
    validate_scenario,
)
from .channel import (
    LinkBudget,
    antenna_gain,
    link_capacity,
    link_sinr,
    los_probability,
    pathloss,
    sample_link_state,
)
from .graphs import ConflictGraph, LinkGraph, build_conflict_graph, build_link_graph, is_sequential
from .scheduling import SdmaGroups, cg_mis_schedule, validate_schedule
from .resources import (
    PowerAllocation,
    PowerSlice,
    SlotAllocation,
    allocate_power,
    allocate_slots,
    channel_quality,
    kkt_residual,
    required_slots,
)
from .pipeline import SchedulePlan, jsra_plan, tdma_plan
from .routing import RoutePath, dynamic_routing, select_path, update_network
from .simulate import (
    ExperimentConfig,
    FrameMetrics,
    ManhattanConfig,
    Packet,
    RunSummary,
    Scheme,
    generate_manhattan,
    generate_platoon,
    packet_latency,
    run_frame,
    run_simulation,
)

__version__ = "0.1.0"
