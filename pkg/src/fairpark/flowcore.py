"""Integer min-cost flow engine.

Successive shortest augmenting paths with node potentials (Dijkstra on
reduced costs). All arithmetic is integer; callers scale real-valued costs
before building the network. Arc capacities and costs must be nonnegative,
which keeps every reduced cost nonnegative and Dijkstra exact.

Tie-breaking is fixed by arc insertion order and by node index inside the
heap, so identical inputs always produce identical flows.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

_INF = float("inf")


class Infeasible(Exception):
    """Raised when a solver cannot meet its demand.

    For flow problems `achieved` carries the maximum flow value that was
    reachable and `required` the demand that was asked for.
    """

    def __init__(self, message: str, achieved: int | None = None, required: int | None = None):
        super().__init__(message)
        self.achieved = achieved
        self.required = required


@dataclass(frozen=True)
class FlowResult:
    """Flow of `flow_value` units at integer cost `total_cost`.

    `arc_flows[i]` is the flow on the i-th arc added to the network, in
    insertion order.
    """

    flow_value: int
    total_cost: int
    arc_flows: tuple[int, ...]


class FlowNetwork:
    """Directed network with integer capacities and nonnegative integer costs.

    Arcs are stored as forward/reverse residual pairs. The network itself is
    immutable from the solver's point of view: min_cost_flow works on a copy
    of the capacities, so one network can be solved repeatedly or shared.
    """

    def __init__(self, node_count: int, source: int, sink: int):
        if node_count < 2:
            raise ValueError(f"need at least 2 nodes, got {node_count}")
        for name, node in (("source", source), ("sink", sink)):
            if not 0 <= node < node_count:
                raise ValueError(f"{name} node {node} outside 0..{node_count - 1}")
        if source == sink:
            raise ValueError("source and sink must differ")
        self.node_count = node_count
        self.source = source
        self.sink = sink
        self._adj: list[list[int]] = [[] for _ in range(node_count)]
        self._to: list[int] = []
        self._cap: list[int] = []
        self._cost: list[int] = []

    @property
    def arc_count(self) -> int:
        return len(self._to) // 2

    def add_arc(self, tail: int, head: int, capacity: int, cost: int) -> int:
        """Add an arc and return its index (insertion order)."""
        for name, node in (("tail", tail), ("head", head)):
            if not 0 <= node < self.node_count:
                raise ValueError(f"{name} node {node} outside 0..{self.node_count - 1}")
        if tail == head:
            raise ValueError(f"self-loop at node {tail}")
        if capacity < 0:
            raise ValueError(f"negative capacity {capacity} on arc {tail}->{head}")
        if cost < 0:
            raise ValueError(f"negative cost {cost} on arc {tail}->{head}")
        if capacity != int(capacity) or cost != int(cost):
            raise ValueError("capacities and costs must be integers")
        arc_id = len(self._to) // 2
        self._adj[tail].append(len(self._to))
        self._to.append(head)
        self._cap.append(int(capacity))
        self._cost.append(int(cost))
        self._adj[head].append(len(self._to))
        self._to.append(tail)
        self._cap.append(0)
        self._cost.append(-int(cost))
        return arc_id

    def arcs(self) -> list[tuple[int, int, int, int]]:
        """(tail, head, capacity, cost) per arc, in insertion order."""
        out = []
        for i in range(0, len(self._to), 2):
            out.append((self._to[i + 1], self._to[i], self._cap[i], self._cost[i]))
        return out


def min_cost_flow(network: FlowNetwork, required_flow: int) -> FlowResult:
    """Send exactly `required_flow` units from source to sink at minimum cost.

    Raises Infeasible (with the achieved max flow) when the network cannot
    carry the demand. `required_flow = 0` returns an empty zero-cost flow.
    """
    if required_flow < 0:
        raise ValueError(f"required_flow must be >= 0, got {required_flow}")
    n = network.node_count
    src, snk = network.source, network.sink
    adj = network._adj
    to = network._to
    cost = network._cost
    cap = list(network._cap)  # residual capacities, local copy

    potential = [0] * n
    flow = 0
    total_cost = 0

    while flow < required_flow:
        # Dijkstra on reduced costs; parent_arc recovers the path.
        dist = [_INF] * n
        parent_arc = [-1] * n
        dist[src] = 0
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in adj[u]:
                if cap[e] <= 0:
                    continue
                v = to[e]
                nd = d + cost[e] + potential[u] - potential[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent_arc[v] = e
                    heapq.heappush(heap, (nd, v))
        if dist[snk] == _INF:
            raise Infeasible(
                f"max flow {flow} below required {required_flow}",
                achieved=flow,
                required=required_flow,
            )
        for v in range(n):
            if dist[v] < _INF:
                potential[v] += dist[v]

        # Bottleneck along the path, capped by the remaining demand.
        push = required_flow - flow
        v = snk
        while v != src:
            e = parent_arc[v]
            push = min(push, cap[e])
            v = to[e ^ 1]
        v = snk
        path_cost = 0
        while v != src:
            e = parent_arc[v]
            cap[e] -= push
            cap[e ^ 1] += push
            path_cost += cost[e]
            v = to[e ^ 1]
        flow += push
        total_cost += push * path_cost

    arc_flows = tuple(
        network._cap[i] - cap[i] for i in range(0, len(to), 2)
    )
    return FlowResult(flow_value=flow, total_cost=total_cost, arc_flows=arc_flows)
