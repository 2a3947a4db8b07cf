"""End-to-end frame planning.

Composes conflict-graph construction, greedy grouping, proportional slot
allocation, and water-filling into a single frame plan, then evaluates the
rate every link actually achieves including the residual interference from
its group companions. Baseline planners (exclusive slots, round robin,
proportional fair) produce plans of the same shape so all metrics are
computed identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

from . import channel
from .graphs import build_conflict_graph
from .model import Direction, NetworkScenario
from .resources import (
    PowerAllocation,
    SlotAllocation,
    allocate_plan_power,
    allocate_slots,
)
from .scheduling import SdmaGroups, cg_mis_schedule


@dataclass(frozen=True)
class SchedulePlan:
    """One frame's (grouping, slots, powers) triple plus achieved rates.

    ``rates`` holds bits/s while a link is transmitting; the per-frame
    average rate of a link is rate * slots / n_slots.
    """

    groups: SdmaGroups
    slots: SlotAllocation
    power: PowerAllocation
    rates: dict[int, float]
    n_slots: int

    @cached_property
    def per_link_slots(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for k, members in enumerate(self.groups.groups):
            n = self.slots.per_group_slots[k]
            for lid in members:
                out[lid] = n
        return out

    def link_rate(self, link_id: int) -> float:
        """Per-frame average data rate of the link in bits/s."""
        n = self.per_link_slots.get(link_id, 0)
        return self.rates.get(link_id, 0.0) * n / self.n_slots

    def frame_bits(self, link_id: int, frame_length: float) -> float:
        """Bits the link can move within one frame."""
        return self.link_rate(link_id) * frame_length

    @property
    def objective(self) -> float:
        """Sum over links of rate times allocated slots."""
        return sum(
            self.rates.get(lid, 0.0) * n for lid, n in self.per_link_slots.items()
        )


def plan_link_rates(
    s: NetworkScenario, groups: SdmaGroups, power: PowerAllocation
) -> dict[int, float]:
    """Rate of every grouped link under its group's actual interference.

    The sender's bandwidth is split evenly over its links inside the group;
    interference sums the co-scheduled links' received powers at the
    victim, including residual self-interference at imperfect full-duplex
    receivers.
    """
    rates: dict[int, float] = {}
    for members in groups.groups:
        sender_count: dict[str, int] = {}
        for lid in members:
            tx = s.link(lid).tx
            sender_count[tx] = sender_count.get(tx, 0) + 1
        for lid in members:
            link = s.link(lid)
            p = power.per_link_power.get(lid, 0.0)
            interferers = [
                (s.link(other), power.per_link_power.get(other, 0.0))
                for other in members
                if other != lid and power.per_link_power.get(other, 0.0) > 0
            ]
            bw = s.params.system_bandwidth / sender_count[link.tx]
            budget = channel.link_sinr(link, p, interferers, s, bandwidth=bw)
            rates[lid] = channel.link_capacity(bw, budget.sinr, scheduled=True)
    return rates


def _split_groups_by_direction(
    s: NetworkScenario, groups: SdmaGroups
) -> tuple[SdmaGroups, list[Direction]]:
    refined: list[tuple[int, ...]] = []
    dirs: list[Direction] = []
    for members in groups.groups:
        for wanted in (Direction.DOWNLINK, Direction.UPLINK):
            sub = tuple(l for l in members if s.link(l).direction == wanted)
            if sub:
                refined.append(sub)
                dirs.append(wanted)
    return SdmaGroups(groups=tuple(refined)), dirs


def _fixed_split_slots(
    s: NetworkScenario,
    groups: SdmaGroups,
    required: Mapping[int, int],
    n_slots: int,
) -> tuple[SdmaGroups, SlotAllocation]:
    """Direction-refined allocation pinning half the frame to downlink.

    The grouping itself is unchanged apart from splitting each group into
    its downlink and uplink members, which stay independent sets.
    """
    refined, dirs = _split_groups_by_direction(s, groups)
    budgets = {
        Direction.DOWNLINK: n_slots // 2,
        Direction.UPLINK: n_slots - n_slots // 2,
    }
    per_group = [0] * len(refined.groups)
    for wanted in (Direction.DOWNLINK, Direction.UPLINK):
        idxs = [k for k, d in enumerate(dirs) if d == wanted]
        if not idxs:
            continue
        maxima = [max(required[v] for v in refined.groups[k]) for k in idxs]
        total = sum(maxima)
        if total == 0:
            continue
        for k, m in zip(idxs, maxima):
            per_group[k] = (m * budgets[wanted]) // total
    alloc = SlotAllocation(
        per_group_slots=tuple(per_group),
        required_per_link={v: required[v] for g in refined.groups for v in g},
    )
    return refined, alloc


def jsra_plan(
    s: NetworkScenario,
    link_ids: Sequence[int],
    required: Mapping[int, int],
    n_slots: Optional[int] = None,
    fixed_switch_point: bool = False,
) -> SchedulePlan:
    """Full joint plan for one frame over the given links.

    Links whose requirement is zero are left out of the frame entirely.
    ``fixed_switch_point`` pins half the slots to downlink instead of
    following demand.
    """
    n = n_slots if n_slots is not None else s.params.slots_per_frame
    active = sorted(l for l in link_ids if required.get(l, 0) > 0)
    if not active:
        return SchedulePlan(
            groups=SdmaGroups(groups=()),
            slots=SlotAllocation(per_group_slots=(), required_per_link={}),
            power=PowerAllocation(per_link_power={}, water_level={}),
            rates={},
            n_slots=n,
        )
    cg = build_conflict_graph(s, active)
    groups = cg_mis_schedule(cg)
    if fixed_switch_point:
        groups, slots = _fixed_split_slots(s, groups, required, n)
    else:
        slots = allocate_slots(groups, required, n)
    power = allocate_plan_power(s, groups)
    rates = plan_link_rates(s, groups, power)
    return SchedulePlan(groups=groups, slots=slots, power=power, rates=rates, n_slots=n)


def _single_link_plan_rates(
    s: NetworkScenario, link_ids: Sequence[int]
) -> dict[int, float]:
    return {lid: channel.single_link_capacity(s, s.link(lid)) for lid in link_ids}


def _plan_from_exclusive_slots(
    s: NetworkScenario,
    per_link_slots: Mapping[int, int],
    required: Mapping[int, int],
    n_slots: int,
) -> SchedulePlan:
    """Plan shape for schedulers that serve one link at a time: every link
    is its own group at full power and full bandwidth."""
    active = sorted(per_link_slots)
    groups = SdmaGroups(groups=tuple((lid,) for lid in active))
    slots = SlotAllocation(
        per_group_slots=tuple(per_link_slots[lid] for lid in active),
        required_per_link={lid: required.get(lid, 1) for lid in active},
    )
    power = PowerAllocation(
        per_link_power={lid: s.node(s.link(lid).tx).p_max for lid in active},
        water_level={},
    )
    return SchedulePlan(
        groups=groups,
        slots=slots,
        power=power,
        rates=_single_link_plan_rates(s, active),
        n_slots=n_slots,
    )


def tdma_plan(
    s: NetworkScenario,
    link_ids: Sequence[int],
    required: Mapping[int, int],
    n_slots: Optional[int] = None,
) -> SchedulePlan:
    """Exclusive slots shared proportionally to requirements using
    largest-remainder apportionment, so the whole frame is handed out."""
    n = n_slots if n_slots is not None else s.params.slots_per_frame
    active = sorted(l for l in link_ids if required.get(l, 0) > 0)
    if not active:
        return _plan_from_exclusive_slots(s, {}, required, n)
    total = sum(required[l] for l in active)
    quotas = {l: required[l] * n / total for l in active}
    base = {l: int(quotas[l]) for l in active}
    leftover = n - sum(base.values())
    by_fraction = sorted(active, key=lambda l: (-(quotas[l] - base[l]), l))
    for l in by_fraction[:leftover]:
        base[l] += 1
    return _plan_from_exclusive_slots(s, base, required, n)


def round_robin_plan(
    s: NetworkScenario,
    link_ids: Sequence[int],
    required: Mapping[int, int],
    n_slots: Optional[int] = None,
    start: int = 0,
) -> SchedulePlan:
    """One link per slot, cycling through the demand-bearing links in id
    order starting from ``start``."""
    n = n_slots if n_slots is not None else s.params.slots_per_frame
    active = sorted(l for l in link_ids if required.get(l, 0) > 0)
    counts = {l: 0 for l in active}
    if active:
        for t in range(n):
            counts[active[(start + t) % len(active)]] += 1
    return _plan_from_exclusive_slots(s, counts, required, n)


def prop_fair_plan(
    s: NetworkScenario,
    link_ids: Sequence[int],
    required: Mapping[int, int],
    n_slots: Optional[int] = None,
    history: Optional[dict[int, float]] = None,
    ema: float = 0.1,
) -> SchedulePlan:
    """Slot-by-slot proportional fair: each slot serves the link with the
    best instantaneous-to-average rate ratio; ``history`` carries the
    exponential averages across calls and is updated in place."""
    n = n_slots if n_slots is not None else s.params.slots_per_frame
    active = sorted(l for l in link_ids if required.get(l, 0) > 0)
    inst = _single_link_plan_rates(s, active)
    if history is None:
        history = {}
    counts = {l: 0 for l in active}
    for t in range(n):
        if not active:
            break
        best = min(active, key=lambda l: (-inst[l] / max(history.get(l, 1.0), 1.0), l))
        counts[best] += 1
        for l in active:
            served = inst[l] if l == best else 0.0
            history[l] = (1.0 - ema) * history.get(l, 1.0) + ema * served
    return _plan_from_exclusive_slots(s, counts, required, n)
