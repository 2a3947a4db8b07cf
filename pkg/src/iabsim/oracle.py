"""Independent brute-force references for tests and acceptance runs.

Nothing here is used by the production pipeline: these implementations
enumerate plan spaces exactly (within a hard budget) so the heuristics can
be checked against true optima on tiny instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .graphs import ConflictGraph, LinkGraph
from .model import NetworkScenario
from .pipeline import plan_link_rates
from .resources import allocate_plan_power
from .scheduling import SdmaGroups


@dataclass(frozen=True)
class OracleBudget:
    max_links: int = 8
    max_slots: int = 8
    max_graph_nodes: int = 12


class BudgetExceeded(RuntimeError):
    pass


def exhaustive_mis(cg: ConflictGraph, budget: OracleBudget = OracleBudget()) -> int:
    """Exact maximum independent set size by subset enumeration."""
    n = len(cg.vertices)
    if n > budget.max_graph_nodes:
        raise BudgetExceeded(f"{n} vertices exceeds budget {budget.max_graph_nodes}")
    index = {v: i for i, v in enumerate(cg.vertices)}
    nbr_mask = [0] * n
    for a, b in cg.edges:
        nbr_mask[index[a]] |= 1 << index[b]
        nbr_mask[index[b]] |= 1 << index[a]
    best = 0
    for subset in range(1 << n):
        ok = True
        for i in range(n):
            if subset >> i & 1 and subset & nbr_mask[i]:
                ok = False
                break
        if ok:
            best = max(best, subset.bit_count())
    return best


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """All ways to partition ``items`` into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1 :]
        yield [[first]] + partial


@lru_cache(maxsize=None)
def _slot_vectors(k: int, n: int) -> np.ndarray:
    """All integer vectors of length k with nonnegative entries summing to
    at most n, as a matrix."""
    if k == 0:
        return np.zeros((1, 0), dtype=int)
    rows = []
    for head in range(n + 1):
        tail = _slot_vectors(k - 1, n - head)
        rows.append(np.hstack([np.full((len(tail), 1), head, dtype=int), tail]))
    return np.vstack(rows)


def brute_force_jsra(
    s: NetworkScenario,
    link_ids: Sequence[int],
    cg: ConflictGraph,
    n_slots: int,
    budget: OracleBudget = OracleBudget(),
) -> float:
    """Exact optimum of the per-frame objective over the full plan family:
    every partition of the links into independent groups, every integer
    slot vector fitting the frame, with the same per-sender water-filling
    and interference-aware rates the heuristic pipeline uses."""
    ids = sorted(link_ids)
    if len(ids) > budget.max_links:
        raise BudgetExceeded(f"{len(ids)} links exceeds budget {budget.max_links}")
    if n_slots > budget.max_slots:
        raise BudgetExceeded(f"{n_slots} slots exceeds budget {budget.max_slots}")

    best = 0.0
    for partition in set_partitions(ids):
        independent = True
        for block in partition:
            for a, b in itertools.combinations(block, 2):
                if cg.has_edge(a, b):
                    independent = False
                    break
            if not independent:
                break
        if not independent:
            continue
        groups = SdmaGroups(groups=tuple(tuple(sorted(b)) for b in partition))
        power = allocate_plan_power(s, groups)
        rates = plan_link_rates(s, groups, power)
        group_rate = np.array(
            [sum(rates[l] for l in g) for g in groups.groups], dtype=float
        )
        vectors = _slot_vectors(len(groups.groups), n_slots)
        best = max(best, float((vectors @ group_rate).max()))
    return best


def waterfill_bisection(
    gammas: Sequence[float], p_max: float, tol: float = 1e-12
) -> list[float]:
    """Solve the water-filling budget equation by bisecting the level."""
    if not gammas:
        raise ValueError("no channels")
    if any(g <= 0 for g in gammas):
        raise ValueError("channel qualities must be positive")
    inv = [1.0 / g for g in gammas]

    def spent(level: float) -> float:
        return sum(max(level - x, 0.0) for x in inv)

    lo, hi = 0.0, p_max + max(inv)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        err = spent(mid) - p_max
        if abs(err) <= tol:
            lo = hi = mid
            break
        if err < 0:
            lo = mid
        else:
            hi = mid
    level = (lo + hi) / 2.0
    return [max(level - x, 0.0) for x in inv]


def _simple_paths_min_weight(
    lg: LinkGraph, s: str, d: str
) -> Optional[float]:
    best: Optional[float] = None
    stack: list[tuple[str, float, frozenset[str]]] = [
        (s, float("inf"), frozenset({s}))
    ]
    while stack:
        node, bottleneck, visited = stack.pop()
        for peer, lid in lg.out_edges.get(node, ()):
            if peer in visited:
                continue
            w = min(bottleneck, lg.weights[lid])
            if peer == d:
                if best is None or w > best:
                    best = w
            else:
                stack.append((peer, w, visited | {peer}))
    return best


def widest_path_oracle(
    lg: LinkGraph, s: str, d: str, budget: OracleBudget = OracleBudget()
) -> Optional[float]:
    """Best attainable bottleneck weight from ``s`` to ``d`` by exhaustive
    simple-path enumeration; None when no path exists."""
    if len(lg.vertices) > budget.max_graph_nodes:
        raise BudgetExceeded(
            f"{len(lg.vertices)} nodes exceeds budget {budget.max_graph_nodes}"
        )
    return _simple_paths_min_weight(lg, s, d)
