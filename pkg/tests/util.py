"""Shared test helpers: tiny random instances and independent oracles."""

from itertools import product

import numpy as np

from fairpark.model import Instance, Lot, Trip


def make_tiny_instance(
    seed: int,
    max_drivers: int = 7,
    max_lots: int = 3,
    max_horizon: int = 5,
    min_capacity: int = 1,
    max_capacity: int = 3,
) -> Instance:
    """Random desk-scale instance; capacities are tight enough that some
    draws are infeasible, which the oracle tests want to see."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_drivers + 1))
    n_lots = int(rng.integers(2, max_lots + 1))
    horizon = int(rng.integers(3, max_horizon + 1))
    trips = []
    for r in range(n):
        # start and end drawn independently; end < start (midnight-wrap
        # style) is legal and produces genuinely infeasible draws
        start = int(rng.integers(1, horizon + 1))
        end = int(rng.integers(1, horizon + 1))
        trips.append(
            Trip(
                id=r,
                origin=(float(rng.uniform(0, 4)), float(rng.uniform(0, 4))),
                destination=(float(rng.uniform(0, 4)), float(rng.uniform(0, 4))),
                start_period=start,
                end_period=end,
            )
        )
    lots = []
    for l in range(n_lots):
        cap = int(rng.integers(min_capacity, max_capacity + 1))
        occ = int(rng.integers(0, cap + 1))
        lots.append(
            Lot(
                id=l,
                location=(float(rng.uniform(0, 4)), float(rng.uniform(0, 4))),
                capacity=cap,
                initial_occupancy=occ,
            )
        )
    return Instance.build(trips, lots, horizon=horizon, walking_speed=3.0)


def random_costs(instance: Instance, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.0, size=(instance.n_lots, instance.n_drivers))


def enumerate_min_cost_flow(node_count, arcs, source, sink, required):
    """Exhaustive flow oracle: try every integer flow per arc.

    Returns (best_cost or None, max_flow) where best_cost is the minimum
    total cost over flows of exactly `required` units and max_flow is the
    largest value carried by any conservation-respecting flow.
    """
    best = None
    max_flow = 0
    ranges = [range(cap + 1) for (_, _, cap, _) in arcs]
    for combo in product(*ranges):
        net = [0] * node_count
        cost = 0
        for f, (u, v, _, c) in zip(combo, arcs):
            net[u] += f
            net[v] -= f
            cost += f * c
        if any(net[x] != 0 for x in range(node_count) if x not in (source, sink)):
            continue
        outflow = net[source]
        if outflow < 0:
            continue
        max_flow = max(max_flow, outflow)
        if outflow == required and (best is None or cost < best):
            best = cost
    return best, max_flow
