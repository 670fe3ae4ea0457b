"""Fixed-cost destination assignment via min-cost flow.

The subproblem solved here: give every non-frozen driver exactly one
destination lot, minimizing the sum of per-driver costs c[lot, driver],
subject to lot capacities over time and to a frozen subset of drivers whose
lots are fixed in advance.

Capacity constraints per lot are prefix constraints: cumulative arrivals by
period t are bounded for every t (consecutive-ones structure). The reduction
models each lot as a chain of period nodes whose chain arcs carry exactly the
drivers that arrived up to that period, which makes the LP relaxation
integral and the min-cost-flow solve exact; see README for the argument.
`brute_force_assign` is the enumeration oracle that guards the claim.

Costs are hours (floats). The flow engine is integer-only, so costs are
scaled by COST_SCALE and rounded; cost ties within 1/COST_SCALE hours may
resolve either way, but always deterministically (network arc order is
drivers ascending, then lots ascending).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np

from .flowcore import FlowNetwork, Infeasible, min_cost_flow
from .model import Assignment, Instance, assignment_from_lots, check_feasible

COST_SCALE = 10**6  # hours -> integer cost units (1 unit ~ 3.6 ms of walking)


@dataclass(frozen=True)
class AssignmentNetwork:
    """Flow network for one subproblem plus the data needed to decode it."""

    network: FlowNetwork
    choice_arcs: tuple[tuple[int, int, int], ...]  # (arc_id, driver, lot)
    required_flow: int


def scale_costs(costs) -> np.ndarray:
    """Validate a cost matrix and convert hours to integer cost units."""
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D (lots x drivers), got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite entries")
    if np.any(c < 0):
        raise ValueError("cost matrix contains negative entries")
    return np.rint(c * COST_SCALE).astype(np.int64)


def _check_frozen(instance: Instance, frozen: Mapping[int, int] | None) -> dict[int, int]:
    frozen = dict(frozen) if frozen else {}
    for r, lot in frozen.items():
        if not 0 <= r < instance.n_drivers:
            raise ValueError(f"frozen driver {r} is not a driver index")
        if not 0 <= lot < instance.n_lots:
            raise ValueError(f"frozen lot {lot} for driver {r} is not a lot index")
    return frozen


def residual_capacity(instance: Instance, frozen: Mapping[int, int] | None = None) -> np.ndarray:
    """Max number of non-frozen drivers with end period <= t assignable to
    each lot, as an (n_lots, horizon) integer matrix.

    cap[l, t] = capacity - initial occupancy + departures up to t
                - frozen arrivals up to t.

    Values may be negative when the frozen set or the initial state already
    violates capacity; callers decide whether that is an error.
    """
    frozen = _check_frozen(instance, frozen)
    n_lots, horizon = instance.n_lots, instance.horizon
    departures = np.zeros((n_lots, horizon), dtype=np.int64)
    frozen_arrivals = np.zeros((n_lots, horizon), dtype=np.int64)
    for r, trip in enumerate(instance.trips):
        departures[instance.origin_lot[r], trip.start_period - 1] += 1
        if r in frozen:
            frozen_arrivals[frozen[r], trip.end_period - 1] += 1
    slack = np.array(
        [lot.capacity - lot.initial_occupancy for lot in instance.lots], dtype=np.int64
    )
    return slack[:, None] + np.cumsum(departures - frozen_arrivals, axis=1)


def build_assignment_network(
    instance: Instance, costs, frozen: Mapping[int, int] | None = None
) -> AssignmentNetwork:
    """Reduce the subproblem to a flow network.

    Layout: source -> driver (cap 1) -> (lot, end period) node; per-lot chain
    arcs (l, t) -> (l, t+1) with the residual prefix capacities; final period
    node -> sink. Required flow is the number of non-frozen drivers.

    Raises ValueError, naming the offending (lot, period), when residual
    capacity is negative.
    """
    frozen = _check_frozen(instance, frozen)
    scaled = scale_costs(costs)
    n_lots, horizon = instance.n_lots, instance.horizon
    if scaled.shape != (n_lots, instance.n_drivers):
        raise ValueError(
            f"cost matrix shape {scaled.shape} does not match "
            f"({n_lots}, {instance.n_drivers})"
        )
    caps = residual_capacity(instance, frozen)
    bad = np.argwhere(caps < 0)
    if bad.size:
        l, t = int(bad[0][0]), int(bad[0][1]) + 1
        raise ValueError(
            f"negative residual capacity at lot {l}, period {t}: frozen set or "
            "initial state already violates capacity"
        )

    free = [r for r in range(instance.n_drivers) if r not in frozen]
    source = 0
    driver_node = {r: 1 + i for i, r in enumerate(free)}
    lot_offset = 1 + len(free)

    def lt_node(l: int, t: int) -> int:  # t is 1-based
        return lot_offset + l * horizon + (t - 1)

    sink = lot_offset + n_lots * horizon
    net = FlowNetwork(node_count=sink + 1, source=source, sink=sink)

    for r in free:
        net.add_arc(source, driver_node[r], 1, 0)
    choice_arcs = []
    for r in free:
        t_end = instance.trips[r].end_period
        for l in range(n_lots):
            arc = net.add_arc(driver_node[r], lt_node(l, t_end), 1, int(scaled[l, r]))
            choice_arcs.append((arc, r, l))
    for l in range(n_lots):
        for t in range(1, horizon):
            net.add_arc(lt_node(l, t), lt_node(l, t + 1), int(caps[l, t - 1]), 0)
        net.add_arc(lt_node(l, horizon), sink, int(caps[l, horizon - 1]), 0)

    return AssignmentNetwork(
        network=net, choice_arcs=tuple(choice_arcs), required_flow=len(free)
    )


def solve_exact(
    instance: Instance, costs, frozen: Mapping[int, int] | None = None
) -> Assignment:
    """Optimal assignment for the subproblem; raises Infeasible when the
    non-frozen drivers cannot all be placed."""
    frozen = _check_frozen(instance, frozen)
    an = build_assignment_network(instance, costs, frozen)
    result = min_cost_flow(an.network, an.required_flow)
    dest = [-1] * instance.n_drivers
    for r, lot in frozen.items():
        dest[r] = lot
    for arc, r, l in an.choice_arcs:
        if result.arc_flows[arc] == 1:
            dest[r] = l
    return assignment_from_lots(instance, dest)


def brute_force_assign(
    instance: Instance,
    costs,
    frozen: Mapping[int, int] | None = None,
    max_combos: int = 10**6,
) -> Assignment:
    """Global optimum by enumerating every lot choice for non-frozen drivers,
    filtered by the feasibility checker. Desk-scale oracle only."""
    frozen = _check_frozen(instance, frozen)
    scaled = scale_costs(costs)
    free = [r for r in range(instance.n_drivers) if r not in frozen]
    n_combos = instance.n_lots ** len(free)
    if n_combos > max_combos:
        raise ValueError(
            f"{n_combos} assignments exceed the enumeration guard ({max_combos})"
        )
    base = [-1] * instance.n_drivers
    for r, lot in frozen.items():
        base[r] = lot

    best_cost = None
    best_dest = None
    for combo in product(range(instance.n_lots), repeat=len(free)):
        dest = list(base)
        cost = 0
        for r, l in zip(free, combo):
            dest[r] = l
            cost += int(scaled[l, r])
        if best_cost is not None and cost >= best_cost:
            continue
        candidate = assignment_from_lots(instance, dest)
        if check_feasible(instance, candidate).feasible:
            best_cost = cost
            best_dest = dest
    if best_dest is None:
        raise Infeasible("no feasible assignment exists", required=len(free))
    return assignment_from_lots(instance, best_dest)


def assignment_cost(costs, assignment: Assignment, exclude=()) -> float:
    """Total cost (hours) of an assignment under a cost matrix, skipping
    excluded drivers."""
    c = np.asarray(costs, dtype=float)
    excluded = set(exclude)
    return float(
        sum(c[lot, r] for r, lot in enumerate(assignment.dest_lot) if r not in excluded)
    )
