"""Propagation, antenna gain, SINR, and Shannon-capacity computations.

All functions are pure; randomness enters only through an explicitly passed
numpy Generator, so parallel callers can use independent seeded streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    AntennaArray,
    Direction,
    Duplex,
    Link,
    NetworkScenario,
    Node,
    SystemParams,
)

#: flat-top sectored antenna model: gain outside the main lobe (-10 dB)
SIDELOBE_GAIN = 0.1
#: residual self-interference coupling for imperfect full duplex (-110 dB)
SELF_INTERFERENCE_COUPLING = 1e-11
#: near-field clamp for interference paths between distinct nodes
MIN_CROSS_DISTANCE = 1.0


def pathloss(d: float, los: bool, shadow_db: float, params: SystemParams) -> float:
    """Isotropic pathloss (linear) at distance ``d`` meters.

    (4*pi*f/c)^2 * d^n * 10^(shadow/10), with the exponent picked by the
    LOS state.
    """
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    n = params.pathloss_exp_los if los else params.pathloss_exp_nlos
    ref = (4.0 * math.pi * params.carrier_freq / params.light_speed) ** 2
    return ref * d**n * 10.0 ** (shadow_db / 10.0)


def los_probability(d: float, params: SystemParams) -> float:
    """Probability that a link of length ``d`` meters is line-of-sight.

    Equals 1 for d <= d1 and decays monotonically beyond.
    """
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    tail = math.exp(-d / params.d2)
    return min(params.d1 / d, 1.0) * (1.0 - tail) + tail


def sample_link_state(
    d: float, params: SystemParams, rng: np.random.Generator
) -> tuple[bool, float]:
    """Draw (los, shadow_db) for a link; shadowing sigma follows the state."""
    los = bool(rng.random() < los_probability(d, params))
    sigma = params.shadow_sigma_los_db if los else params.shadow_sigma_nlos_db
    shadow_db = float(rng.normal(0.0, sigma))
    return los, shadow_db


def median_los(d: float, params: SystemParams) -> bool:
    """Deterministic LOS call used for interference cross paths."""
    return los_probability(d, params) >= 0.5


def beamwidth(array: AntennaArray) -> float:
    return 2.0 * math.pi / max(array.rows, array.cols)


def element_gain(array: AntennaArray, offset: float) -> float:
    """Single-end flat-top gain: element count inside the main lobe,
    SIDELOBE_GAIN outside."""
    if abs(offset) <= beamwidth(array) / 2.0:
        return float(array.elements)
    return SIDELOBE_GAIN


def antenna_gain(
    tx: AntennaArray,
    rx: AntennaArray,
    tx_offset: float = 0.0,
    rx_offset: float = 0.0,
    params: Optional[SystemParams] = None,
) -> float:
    """Combined link gain: product of the two per-end flat-top gains."""
    return element_gain(tx, tx_offset) * element_gain(rx, rx_offset)


@dataclass(frozen=True)
class LinkBudget:
    rx_power: float             # W
    interference_power: float   # W
    sinr: float
    bandwidth: float            # Hz


def _bearing(frm: tuple[float, float], to: tuple[float, float]) -> float:
    return math.atan2(to[1] - frm[1], to[0] - frm[0])


def beam_offset(
    frm: tuple[float, float],
    aim: tuple[float, float],
    target: tuple[float, float],
) -> float:
    """Angle in [0, pi] between the beam pointed from ``frm`` at ``aim`` and
    the direction from ``frm`` to ``target``. Co-located points count as
    on-boresight (worst case)."""
    if frm == aim or frm == target:
        return 0.0
    diff = _bearing(frm, target) - _bearing(frm, aim)
    diff = math.remainder(diff, 2.0 * math.pi)
    return abs(diff)


def boresight_gain(link: Link, s: NetworkScenario) -> float:
    tx = s.node(link.tx)
    rx = s.node(link.rx)
    return antenna_gain(tx.antenna, rx.antenna, 0.0, 0.0)


def cross_path(
    interferer: Link, victim: Link, s: NetworkScenario
) -> tuple[float, float]:
    """(gain, pathloss) of the interference path from the interferer's
    transmitter into the victim's receiver.

    Each transmitter aims at its own receiver and each receiver at its own
    transmitter; the gain follows from the resulting angular offsets. When
    the interference path coincides with a sampled link path, its sampled
    pathloss is reused; otherwise the LOS state is the deterministic median
    call with no shadowing.
    """
    pos = {nid: s.node(nid).position for nid in
           (interferer.tx, interferer.rx, victim.tx, victim.rx)}
    jt, jr = pos[interferer.tx], pos[interferer.rx]
    it, ir = pos[victim.tx], pos[victim.rx]

    tx_off = beam_offset(jt, jr, ir)
    rx_off = beam_offset(ir, it, jt)
    gain = element_gain(s.node(interferer.tx).antenna, tx_off) * element_gain(
        s.node(victim.rx).antenna, rx_off
    )

    if interferer.tx == victim.tx:
        loss = victim.pathloss_linear       # same physical path as the signal
    elif interferer.rx == victim.rx:
        loss = interferer.pathloss_linear
    else:
        d = max(math.dist(jt, ir), MIN_CROSS_DISTANCE)
        loss = pathloss(d, median_los(d, s.params), 0.0, s.params)
    return gain, loss


def interference_power(
    interferer: Link, p_tx: float, victim: Link, s: NetworkScenario
) -> float:
    """Power the interferer deposits at the victim's receiver.

    A transmitter co-sited with the victim's receiver is the self-interference
    case and is governed by that node's duplex mode.
    """
    if p_tx < 0:
        raise ValueError("negative transmit power")
    if interferer.tx == victim.rx:
        duplex = s.node(victim.rx).duplex
        if duplex == Duplex.FULL_PERFECT:
            return 0.0
        return p_tx * SELF_INTERFERENCE_COUPLING
    gain, loss = cross_path(interferer, victim, s)
    return p_tx * gain / loss


def link_sinr(
    link: Link,
    p_tx: float,
    interferers: Sequence[tuple[Link, float]],
    s: NetworkScenario,
    bandwidth: Optional[float] = None,
) -> LinkBudget:
    """SINR of a link at transmit power ``p_tx`` against a set of
    simultaneously active interferers given as (link, power) pairs."""
    if p_tx < 0:
        raise ValueError("negative transmit power")
    rx_power = p_tx * boresight_gain(link, s) / link.pathloss_linear
    interference = 0.0
    for other, p_other in interferers:
        interference += interference_power(other, p_other, link, s)
    sinr = rx_power / (s.params.noise_power + interference)
    return LinkBudget(
        rx_power=rx_power,
        interference_power=interference,
        sinr=sinr,
        bandwidth=bandwidth if bandwidth is not None else s.params.system_bandwidth,
    )


def link_capacity(bandwidth: float, sinr: float, scheduled: bool = True) -> float:
    """Shannon capacity in bits/s; an unscheduled link carries nothing."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if sinr < 0:
        raise ValueError("SINR must be nonnegative")
    if not scheduled:
        return 0.0
    return bandwidth * math.log2(1.0 + sinr)


def single_link_capacity(s: NetworkScenario, link: Link) -> float:
    """Capacity of the link served alone: full power, full bandwidth,
    no interference."""
    p = s.node(link.tx).p_max
    budget = link_sinr(link, p, (), s)
    return link_capacity(budget.bandwidth, budget.sinr)


def make_link(
    link_id: int,
    tx: Node,
    rx: Node,
    direction: Direction,
    params: SystemParams,
    rng: Optional[np.random.Generator] = None,
    los: Optional[bool] = None,
    shadow_db: Optional[float] = None,
    demand_bits: Optional[float] = None,
) -> Link:
    """Construct a link between two nodes, sampling the channel state from
    ``rng`` unless (los, shadow_db) are pinned explicitly."""
    d = math.dist(tx.position, rx.position)
    if los is None or shadow_db is None:
        if rng is None:
            raise ValueError("need an rng when the channel state is not pinned")
        sampled_los, sampled_shadow = sample_link_state(d, params, rng)
        los = sampled_los if los is None else los
        shadow_db = sampled_shadow if shadow_db is None else shadow_db
    return Link(
        id=link_id,
        tx=tx.id,
        rx=rx.id,
        distance=d,
        los=los,
        shadow_db=shadow_db,
        pathloss_linear=pathloss(d, los, shadow_db, params),
        direction=direction,
        demand_bits=demand_bits,
    )
