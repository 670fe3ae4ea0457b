import numpy as np
import pytest

from fairpark.flowcore import FlowNetwork, Infeasible, min_cost_flow

from tests.util import enumerate_min_cost_flow


def random_network(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    n_arcs = int(rng.integers(3, 9))
    net = FlowNetwork(node_count=n, source=0, sink=n - 1)
    arcs = []

    def add(u, v, cap, cost):
        net.add_arc(u, v, cap, cost)
        arcs.append((u, v, cap, cost))

    # half the networks get a guaranteed source-to-sink backbone so that the
    # solved (not just infeasible) branch of the oracle gets real coverage
    if rng.uniform() < 0.5:
        path = [0] + sorted(
            int(x) for x in rng.choice(range(1, n - 1), size=min(2, n - 2), replace=False)
        ) + [n - 1]
        for u, v in zip(path, path[1:]):
            add(u, v, int(rng.integers(1, 3)), int(rng.integers(0, 6)))
    while len(arcs) < n_arcs:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        add(u, v, int(rng.integers(0, 3)), int(rng.integers(0, 6)))
    required = int(rng.integers(0, 4))
    return net, arcs, required


def check_result_invariants(net, arcs, result, required):
    assert result.flow_value == required
    net_balance = [0] * net.node_count
    for f, (u, v, cap, _) in zip(result.arc_flows, arcs):
        assert 0 <= f <= cap
        net_balance[u] += f
        net_balance[v] -= f
    for x in range(net.node_count):
        if x not in (net.source, net.sink):
            assert net_balance[x] == 0
    assert net_balance[net.source] == required
    assert result.total_cost == sum(
        f * c for f, (_, _, _, c) in zip(result.arc_flows, arcs)
    )


def test_single_arc():
    net = FlowNetwork(2, 0, 1)
    net.add_arc(0, 1, 3, 2)
    result = min_cost_flow(net, 3)
    assert result.flow_value == 3
    assert result.total_cost == 6
    assert result.arc_flows == (3,)


def test_required_zero():
    net = FlowNetwork(2, 0, 1)
    net.add_arc(0, 1, 3, 2)
    result = min_cost_flow(net, 0)
    assert result.flow_value == 0
    assert result.total_cost == 0
    assert result.arc_flows == (0,)


def test_cheaper_path_preferred():
    # two parallel 2-arc routes; cheaper one must carry the unit
    net = FlowNetwork(4, 0, 3)
    a_top = net.add_arc(0, 1, 1, 5)
    net.add_arc(1, 3, 1, 5)
    a_bot = net.add_arc(0, 2, 1, 1)
    net.add_arc(2, 3, 1, 1)
    result = min_cost_flow(net, 1)
    assert result.total_cost == 2
    assert result.arc_flows[a_bot] == 1
    assert result.arc_flows[a_top] == 0


def test_rerouting_via_residual():
    # classic case where the second unit must push back flow from the first
    net = FlowNetwork(4, 0, 3)
    net.add_arc(0, 1, 1, 1)
    net.add_arc(0, 2, 1, 4)
    net.add_arc(1, 2, 1, 1)
    net.add_arc(1, 3, 1, 4)
    net.add_arc(2, 3, 1, 1)
    result = min_cost_flow(net, 2)
    best, _ = enumerate_min_cost_flow(4, net.arcs(), 0, 3, 2)
    assert result.total_cost == best


def test_infeasible_reports_achieved_max_flow():
    net = FlowNetwork(3, 0, 2)
    net.add_arc(0, 1, 2, 1)
    net.add_arc(1, 2, 1, 1)
    with pytest.raises(Infeasible) as err:
        min_cost_flow(net, 3)
    assert err.value.achieved == 1
    assert err.value.required == 3


def test_malformed_network_rejected():
    net = FlowNetwork(3, 0, 2)
    with pytest.raises(ValueError):
        net.add_arc(0, 5, 1, 1)  # dangling head
    with pytest.raises(ValueError):
        net.add_arc(1, 1, 1, 1)  # self loop
    with pytest.raises(ValueError):
        net.add_arc(0, 1, -1, 1)
    with pytest.raises(ValueError):
        net.add_arc(0, 1, 1, -1)
    with pytest.raises(ValueError):
        FlowNetwork(2, 0, 0)
    with pytest.raises(ValueError):
        min_cost_flow(FlowNetwork(2, 0, 1), -1)


def test_matches_enumeration_oracle():
    for seed in range(40):
        net, arcs, required = random_network(seed)
        best, max_flow = enumerate_min_cost_flow(net.node_count, arcs, 0, net.node_count - 1, required)
        if best is None:
            # any integer value up to max flow is achievable, so infeasible
            # means max_flow < required and the solver must report it exactly
            assert max_flow < required
            with pytest.raises(Infeasible) as err:
                min_cost_flow(net, required)
            assert err.value.achieved == max_flow
        else:
            result = min_cost_flow(net, required)
            check_result_invariants(net, arcs, result, required)
            assert result.total_cost == best


def test_deterministic_arc_flows():
    for seed in (3, 11, 27):
        net1, _, required = random_network(seed)
        net2, _, _ = random_network(seed)
        try:
            r1 = min_cost_flow(net1, required)
            r2 = min_cost_flow(net2, required)
        except Infeasible:
            continue
        assert r1.arc_flows == r2.arc_flows


def test_network_reusable_after_solve():
    net = FlowNetwork(2, 0, 1)
    net.add_arc(0, 1, 3, 2)
    first = min_cost_flow(net, 2)
    second = min_cost_flow(net, 2)
    assert first == second
