"""Frame-slot allocation across SDMA groups and per-sender transmit-power
splitting by water-filling.

Slot shares are proportional to each group's maximum per-link slot
requirement, floored; power inside one (sender, group) set maximizes the
sum of log rates under the sender's power budget, which the water-filling
closed form solves exactly (the KKT conditions are necessary and
sufficient for this concave program).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from . import channel
from .model import FULL_BUFFER, Link, NetworkScenario
from .scheduling import SdmaGroups


@dataclass(frozen=True)
class SlotAllocation:
    per_group_slots: tuple[int, ...]
    required_per_link: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.per_group_slots)


@dataclass(frozen=True)
class PowerSlice:
    """Water-filling result for the links of one sender in one group.

    ``water_level`` is the common 1/phi* value; every positive power equals
    water_level - 1/gamma.
    """

    link_ids: tuple[int, ...]
    gammas: tuple[float, ...]
    powers: tuple[float, ...]
    water_level: float


@dataclass(frozen=True)
class PowerAllocation:
    per_link_power: dict[int, float]
    water_level: dict[tuple[str, int], float]   # (sender, group index) -> 1/phi*


def required_slots(
    link: Link, s: NetworkScenario, demand_bits: object = "__from_link__"
) -> int:
    """Slots the link needs under exclusive (one-link-per-slot) service.

    Full-buffer traffic counts as one nominal unit. Finite demand is the
    ceiling of demand over per-slot deliverable bits, capped at the frame
    length; a link that cannot carry anything but has demand is marked
    infeasible with the full frame.
    """
    if demand_bits == "__from_link__":
        demand_bits = link.demand_bits
    n = s.params.slots_per_frame
    if demand_bits is FULL_BUFFER:
        return 1
    if demand_bits <= 0:
        return 0
    bits_per_slot = channel.single_link_capacity(s, link) * s.params.slot_duration
    if bits_per_slot <= 0:
        return n
    return min(n, math.ceil(demand_bits / bits_per_slot))


def allocate_slots(
    groups: SdmaGroups, required: Mapping[int, int], n_slots: int
) -> SlotAllocation:
    """Share the frame across groups proportionally to each group's maximum
    required slot count, floored. Floor remainders stay idle."""
    if not groups.groups:
        raise ValueError("no groups to allocate slots to")
    maxima = [max(required[v] for v in members) for members in groups.groups]
    total = sum(maxima)
    if total == 0:
        per_group = tuple(0 for _ in maxima)
    else:
        # integer arithmetic keeps the floor exact
        per_group = tuple((m * n_slots) // total for m in maxima)
    return SlotAllocation(
        per_group_slots=per_group,
        required_per_link={v: required[v] for g in groups.groups for v in g},
    )


def channel_quality(link: Link, s: NetworkScenario) -> float:
    """gamma = gain / (pathloss * noise), with boresight gain toward the
    link's own receiver. Units 1/W."""
    g = channel.boresight_gain(link, s)
    return g / (link.pathloss_linear * s.params.noise_power)


def allocate_power(
    sender_links: Sequence[tuple[int, float]], p_max: float
) -> PowerSlice:
    """Water-fill ``p_max`` over one sender's simultaneously active links.

    ``sender_links`` is a sequence of (link id, gamma) pairs. Channel
    qualities are sorted descending; the water level for the first m links
    is (p_max + sum of their 1/gamma) / m, and the valid m is the one whose
    level clears its own 1/gamma but not the next link's.
    """
    if not sender_links:
        raise ValueError("no links to allocate power to")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    for lid, g in sender_links:
        if g <= 0:
            raise ValueError(f"link {lid}: channel quality must be positive")

    order = sorted(sender_links, key=lambda t: (-t[1], t[0]))
    inv = [1.0 / g for _, g in order]

    m_star = 1
    level = p_max + inv[0]
    prefix = 0.0
    for m in range(1, len(order) + 1):
        prefix += inv[m - 1]
        candidate = (p_max + prefix) / m
        ok = candidate > inv[m - 1]
        if m < len(order):
            ok = ok and candidate <= inv[m]
        if ok:
            m_star, level = m, candidate
    powers_sorted = [max(level - inv[k], 0.0) if k < m_star else 0.0
                     for k in range(len(order))]

    by_id = {order[k][0]: powers_sorted[k] for k in range(len(order))}
    return PowerSlice(
        link_ids=tuple(lid for lid, _ in sender_links),
        gammas=tuple(g for _, g in sender_links),
        powers=tuple(by_id[lid] for lid, _ in sender_links),
        water_level=level,
    )


def kkt_residual(
    slice_: PowerSlice, gammas: Sequence[float], p_max: float
) -> float:
    """Worst violation of the optimality conditions of the power split.

    Combines the total-power equality, power nonnegativity, stationarity of
    positive-power links, and complementary slackness. Zero (up to float
    error) certifies the returned allocation is the exact optimum.
    """
    powers = slice_.powers
    phi = 1.0 / slice_.water_level
    residual = abs(sum(powers) - p_max)
    for g, p in zip(gammas, powers):
        residual = max(residual, -p if p < 0 else 0.0)
        marginal = g / (1.0 + g * p)
        if p > 0:
            residual = max(residual, abs(marginal - phi))
        omega = phi - marginal
        residual = max(residual, abs(omega * p))
    return residual


def allocate_plan_power(
    s: NetworkScenario, groups: SdmaGroups
) -> PowerAllocation:
    """Run the per-(sender, group) water-filling over a whole grouping."""
    per_link: dict[int, float] = {}
    levels: dict[tuple[str, int], float] = {}
    for k, members in enumerate(groups.groups):
        by_sender: dict[str, list[tuple[int, float]]] = {}
        for lid in members:
            link = s.link(lid)
            by_sender.setdefault(link.tx, []).append(
                (lid, channel_quality(link, s))
            )
        for sender, entries in by_sender.items():
            slice_ = allocate_power(entries, s.node(sender).p_max)
            levels[(sender, k)] = slice_.water_level
            for lid, p in zip(slice_.link_ids, slice_.powers):
                per_link[lid] = p
    return PowerAllocation(per_link_power=per_link, water_level=levels)
