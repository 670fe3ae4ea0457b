"""Dynamic per-step parking allocation and its fairness-oriented variant.

Drivers request a spot while en route and arrive some periods later. At each
step k the pending drivers (requested, not yet arrived) are re-solved as an
exact assignment problem:

  * a pending driver receives at most one lot; staying unassigned costs a
    penalty of 1 (only drivers who have never held a reservation may stay
    unassigned — a driver holding a reservation can always keep their
    current lot, so they are never dropped back to unassigned)
  * lots costlier than the driver's previously committed utility are
    excluded, which makes committed costs non-increasing step over step
  * lot capacities hold over the whole remaining horizon

The per-driver utility is J = lam * money/max_money + (1-lam) * dist/max_dist
(dimensionless, lower is better). "utility" mode minimizes the sum of
assigned utilities plus unassignment penalties. "fair" mode replaces each
assigned term with |J - Jbar|, Jbar being the mean previously-committed
utility over the pending set, and re-solves the step iteratively (freeze
drivers whose utility already sits near the mean, update the mean) until the
mean stabilizes — the same loop shape as algos.min_envy.

Scenarios live directly in planar miles; no projection is involved.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fairness
from .assign import COST_SCALE
from .data import DEFAULT_WALKING_SPEED
from .flowcore import FlowNetwork, min_cost_flow
from .model import Lot, Point, l1_distance

UNASSIGNED_PENALTY = 1.0
MODES = ("utility", "fair")


@dataclass(frozen=True)
class UtilitySpec:
    """Per-driver utility data: weights, monetary costs, distances and the
    per-driver maxima used as denominators (must be positive)."""

    lam: np.ndarray  # (R,)
    monetary_cost: np.ndarray  # (L, R)
    max_money: np.ndarray  # (R,)
    distance: np.ndarray  # (L, R)
    max_distance: np.ndarray  # (R,)

    def __post_init__(self):
        for name in ("lam", "monetary_cost", "max_money", "distance", "max_distance"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.lam.shape[0]
        if self.monetary_cost.shape != self.distance.shape or self.monetary_cost.shape[1] != n:
            raise ValueError("utility matrices must be (n_lots, n_drivers)")
        if self.max_money.shape != (n,) or self.max_distance.shape != (n,):
            raise ValueError("per-driver maxima must have one entry per driver")
        if np.any(self.lam < 0) or np.any(self.lam > 1):
            raise ValueError("lam weights must lie in [0, 1]")
        if np.any(self.max_money <= 0) or np.any(self.max_distance <= 0):
            raise ValueError("per-driver maxima must be positive")

    @property
    def n_lots(self) -> int:
        return self.monetary_cost.shape[0]

    @property
    def n_drivers(self) -> int:
        return self.lam.shape[0]


def utility(spec: UtilitySpec, driver: int, lot: int) -> float:
    """Blended cost of parking `driver` at `lot` (dimensionless, >= 0)."""
    lam = float(spec.lam[driver])
    return lam * float(spec.monetary_cost[lot, driver]) / float(spec.max_money[driver]) + (
        1.0 - lam
    ) * float(spec.distance[lot, driver]) / float(spec.max_distance[driver])


def utility_matrix(spec: UtilitySpec) -> np.ndarray:
    """(n_lots, n_drivers) matrix of utilities."""
    return spec.lam[None, :] * spec.monetary_cost / spec.max_money[None, :] + (
        1.0 - spec.lam[None, :]
    ) * spec.distance / spec.max_distance[None, :]


@dataclass(frozen=True)
class ParkingEvent:
    """Driver request: made at request_period, parking needed from
    arrival_period on. monetary_costs has one entry per lot."""

    driver: int
    request_period: int
    arrival_period: int
    destination: Point
    lam: float
    monetary_costs: tuple[float, ...]

    def __post_init__(self):
        if self.request_period < 1:
            raise ValueError(f"driver {self.driver}: request period must be >= 1")
        if self.arrival_period < self.request_period:
            raise ValueError(
                f"driver {self.driver}: arrival {self.arrival_period} before "
                f"request {self.request_period}"
            )


@dataclass(frozen=True)
class Scenario:
    """Event stream plus the lot layout it plays out on."""

    lots: tuple[Lot, ...]
    horizon: int
    events: tuple[ParkingEvent, ...]
    walking_speed: float = DEFAULT_WALKING_SPEED

    def __post_init__(self):
        if not self.lots:
            raise ValueError("scenario needs at least one lot")
        drivers = [e.driver for e in self.events]
        if sorted(drivers) != list(range(len(self.events))):
            raise ValueError("event drivers must be exactly 0..n-1")
        reqs = [e.request_period for e in self.events]
        if reqs != sorted(reqs):
            raise ValueError("events must be ordered by request period")
        for e in self.events:
            if e.arrival_period > self.horizon:
                raise ValueError(f"driver {e.driver} arrives after the horizon")
            if len(e.monetary_costs) != len(self.lots):
                raise ValueError(f"driver {e.driver}: monetary costs must cover every lot")

    @property
    def n_drivers(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class PendingDriver:
    """One driver inside a step problem. previous_cost is +inf until the
    driver first holds a reservation; after that it caps admissible lots."""

    driver: int
    arrival_period: int
    utilities: tuple[float, ...]
    previous_lot: int | None
    previous_cost: float


@dataclass(frozen=True)
class StepState:
    """Residual prefix capacity per (lot, period) before this step's pending
    reservations are placed."""

    free_capacity: np.ndarray  # (L, T) ints
    horizon: int


@dataclass(frozen=True)
class StepResult:
    lots: dict  # driver -> lot index or None
    objective: float  # unscaled (utility units)
    objective_scaled: int


def smartpark_step(
    state: StepState,
    pending,
    mode: str,
    target: float = 0.0,
    frozen=None,
    penalty: float = UNASSIGNED_PENALTY,
) -> StepResult:
    """Solve one step exactly via the chain-capacity flow reduction.

    `frozen` maps drivers to lots fixed for this solve (their capacity use is
    accounted before solving); used by the fair-mode inner loop. In "fair"
    mode per-lot costs are |J - target|, in "utility" mode plain J. Drivers
    with a previous reservation must be assigned (their previous lot is
    always admissible); only never-assigned drivers get the unassigned
    bypass at `penalty`.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    frozen = dict(frozen) if frozen else {}
    horizon = state.horizon
    caps = state.free_capacity.copy()
    n_lots = caps.shape[0]
    by_driver = {p.driver: p for p in pending}
    for r, lot in frozen.items():
        caps[lot, by_driver[r].arrival_period - 1 :] -= 1
    if np.any(caps < 0):
        raise RuntimeError("frozen reservations exceed capacity; state accounting is broken")

    free = [p for p in pending if p.driver not in frozen]
    source = 0
    driver_node = {p.driver: 1 + i for i, p in enumerate(free)}
    lot_offset = 1 + len(free)
    sink = lot_offset + n_lots * horizon
    net = FlowNetwork(node_count=sink + 1, source=source, sink=sink)

    def lt_node(l: int, t: int) -> int:
        return lot_offset + l * horizon + (t - 1)

    for p in free:
        net.add_arc(source, driver_node[p.driver], 1, 0)
    choice_arcs = []
    bypass_arcs = {}
    for p in free:
        for l in range(n_lots):
            j = p.utilities[l]
            if j > p.previous_cost:
                continue
            cost = abs(j - target) if mode == "fair" else j
            arc = net.add_arc(
                driver_node[p.driver],
                lt_node(l, p.arrival_period),
                1,
                int(round(cost * COST_SCALE)),
            )
            choice_arcs.append((arc, p.driver, l))
        if p.previous_lot is None:
            bypass_arcs[p.driver] = net.add_arc(
                driver_node[p.driver], sink, 1, int(round(penalty * COST_SCALE))
            )
    for l in range(n_lots):
        for t in range(1, horizon):
            net.add_arc(lt_node(l, t), lt_node(l, t + 1), int(caps[l, t - 1]), 0)
        net.add_arc(lt_node(l, horizon), sink, int(caps[l, horizon - 1]), 0)

    flow = min_cost_flow(net, len(free))
    lots: dict = {r: lot for r, lot in frozen.items()}
    for arc, r, l in choice_arcs:
        if flow.arc_flows[arc] == 1:
            lots[r] = l
    for r in driver_node:
        if r not in lots:
            lots[r] = None
    return StepResult(
        lots=lots,
        objective=flow.total_cost / COST_SCALE,
        objective_scaled=flow.total_cost,
    )


@dataclass(frozen=True)
class SimulationResult:
    """Final state of one simulated scenario.

    `assignments` maps every driver to a lot or None (never assigned; such
    drivers are always reported, never dropped). `cost_history` records the
    committed utility after each step a driver was pending — the step-over-
    step non-increase of those values is the cost-improvement guarantee.
    `metrics` covers the walking times of assigned drivers (None when fewer
    than one driver was assigned).
    """

    mode: str
    assignments: dict
    betas: dict
    final_utility: dict
    cost_history: dict
    unassigned: tuple[int, ...]
    metrics: fairness.MetricReport | None


def cost_improvement_violations(result: SimulationResult) -> list[tuple[int, int, float, float]]:
    """(driver, step, previous, new) tuples where a committed cost rose."""
    out = []
    for driver, history in result.cost_history.items():
        prev = math.inf
        for step, cost in history:
            if cost is None:
                if prev != math.inf:
                    out.append((driver, step, prev, math.inf))
                continue
            if cost > prev:
                out.append((driver, step, prev, cost))
            prev = cost
    return out


def simulate(
    scenario: Scenario,
    spec: UtilitySpec,
    mode: str,
    params=None,
) -> SimulationResult:
    """Play a scenario step by step under one objective mode.

    Steps k = 1..horizon: drivers arriving at k have their reservation
    finalized; the pending set (request <= k < arrival) is then re-solved
    from scratch and reservations are re-committed. In fair mode each step
    runs the iterative re-solve described in the module docstring, driven by
    `params` (epsilon / delta / maxiter; defaults epsilon 0.1, delta 1e-4,
    maxiter 10).
    """
    from .algos import MinEnvyParams  # local import to avoid a module cycle

    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    params = params or MinEnvyParams(maxiter=10)
    utilities = utility_matrix(spec)
    if utilities.shape != (len(scenario.lots), scenario.n_drivers):
        raise ValueError("utility spec does not match the scenario")

    n_lots, horizon = len(scenario.lots), scenario.horizon
    base_free = np.array(
        [[lot.capacity - lot.initial_occupancy] * horizon for lot in scenario.lots],
        dtype=np.int64,
    )
    finalized_prefix = np.zeros((n_lots, horizon), dtype=np.int64)

    committed: dict = {}
    committed_cost: dict = {}
    finalized: dict = {}
    cost_history: dict = {e.driver: [] for e in scenario.events}

    for k in range(1, horizon + 1):
        for e in scenario.events:
            if e.arrival_period == k:
                lot = committed.get(e.driver)
                finalized[e.driver] = lot
                if lot is not None:
                    finalized_prefix[lot, k - 1 :] += 1

        pending = [
            PendingDriver(
                driver=e.driver,
                arrival_period=e.arrival_period,
                utilities=tuple(float(u) for u in utilities[:, e.driver]),
                previous_lot=committed.get(e.driver),
                previous_cost=committed_cost.get(e.driver, math.inf),
            )
            for e in scenario.events
            if e.request_period <= k < e.arrival_period
        ]
        if not pending:
            continue

        state = StepState(free_capacity=base_free - finalized_prefix, horizon=horizon)
        if mode == "utility":
            step = smartpark_step(state, pending, "utility")
        else:
            jbar = (
                sum(p.previous_cost for p in pending if p.previous_lot is not None)
                / len(pending)
                if any(p.previous_lot is not None for p in pending)
                else 0.0
            )
            current = {p.driver: p.previous_lot for p in pending}
            i = 1
            while True:
                assigned_j = {
                    p.driver: p.utilities[current[p.driver]]
                    for p in pending
                    if current[p.driver] is not None
                }
                lo, hi = (1.0 - params.epsilon) * jbar, (1.0 + params.epsilon) * jbar
                frozen = {
                    r: current[r] for r, j in assigned_j.items() if lo <= j <= hi
                }
                step = smartpark_step(state, pending, "fair", target=jbar, frozen=frozen)
                current = step.lots
                new_jbar = (
                    sum(
                        p.utilities[current[p.driver]]
                        for p in pending
                        if current[p.driver] is not None
                    )
                    / len(pending)
                )
                converged = abs(new_jbar - jbar) < params.delta or i > params.maxiter
                jbar = new_jbar
                i += 1
                if converged:
                    break

        for p in pending:
            lot = step.lots[p.driver]
            if lot is not None:
                committed[p.driver] = lot
                committed_cost[p.driver] = p.utilities[lot]
                cost_history[p.driver].append((k, p.utilities[lot]))
            else:
                cost_history[p.driver].append((k, None))

    for e in scenario.events:
        if e.driver not in finalized:
            finalized[e.driver] = committed.get(e.driver)

    betas = {}
    final_utility = {}
    for e in scenario.events:
        lot = finalized[e.driver]
        if lot is None:
            final_utility[e.driver] = None
            continue
        betas[e.driver] = float(spec.distance[lot, e.driver]) / scenario.walking_speed
        final_utility[e.driver] = float(utilities[lot, e.driver])

    metrics = fairness.compute_metrics(list(betas.values())) if betas else None
    unassigned = tuple(sorted(r for r, lot in finalized.items() if lot is None))
    return SimulationResult(
        mode=mode,
        assignments=finalized,
        betas=betas,
        final_utility=final_utility,
        cost_history=cost_history,
        unassigned=unassigned,
        metrics=metrics,
    )


# --- synthetic scenario generation -------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic generator knobs (our reconstruction; the lot grid, Poisson
    requests, uniform weights and per-lot prices, and quantile-based
    per-driver maxima are all adjustable here)."""

    n_drivers: int = 40
    n_lots: int = 6
    horizon: int = 24
    box_miles: float = 2.0
    capacity_slack: int = 2
    initial_fill: float = 0.0
    # requests arrive up to max_lead periods before the driver does; long
    # leads keep drivers in the pending set across many re-solves, which is
    # where the fairness objective gets its leverage
    max_lead: int = 10
    price_low: float = 1.0
    price_high: float = 5.0
    request_rate: float | None = None  # requests per period

    def __post_init__(self):
        if self.n_drivers < 1 or self.n_lots < 1:
            raise ValueError("n_drivers and n_lots must be >= 1")
        if self.max_lead < 1 or self.max_lead >= self.horizon:
            raise ValueError("max_lead must be in 1..horizon-1")
        if not 0.0 <= self.initial_fill < 1.0:
            raise ValueError("initial_fill must be in [0, 1)")


def _lot_grid(n_lots: int, box: float) -> list[Point]:
    cols = math.ceil(math.sqrt(n_lots))
    rows = math.ceil(n_lots / cols)
    pts = []
    for i in range(n_lots):
        r, c = divmod(i, cols)
        pts.append((box * (c + 0.5) / cols, box * (r + 0.5) / rows))
    return pts


def gen_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Random scenario: lots on a grid, Poisson request arrivals, uniform
    weights, per-lot uniform prices shared by all drivers."""
    rng = np.random.default_rng(seed)
    n, L = config.n_drivers, config.n_lots
    capacity = math.ceil(n / L) + config.capacity_slack
    initial = int(capacity * config.initial_fill)
    lots = tuple(
        Lot(id=i, location=loc, capacity=capacity, initial_occupancy=initial)
        for i, loc in enumerate(_lot_grid(L, config.box_miles))
    )
    prices = tuple(float(p) for p in rng.uniform(config.price_low, config.price_high, L))

    rate = config.request_rate or n / max(config.horizon - config.max_lead - 1, 1)
    gaps = rng.exponential(1.0 / rate, n)
    raw_requests = np.cumsum(gaps)
    leads = rng.integers(1, config.max_lead + 1, n)
    destinations = rng.uniform(0.0, config.box_miles, (n, 2))
    lams = rng.uniform(0.0, 1.0, n)

    records = []
    for i in range(n):
        lead = int(leads[i])
        request = min(int(raw_requests[i]) + 1, config.horizon - lead)
        request = max(request, 1)
        records.append((request, lead, (float(destinations[i, 0]), float(destinations[i, 1])), float(lams[i])))
    records.sort(key=lambda rec: rec[0])

    events = tuple(
        ParkingEvent(
            driver=i,
            request_period=req,
            arrival_period=req + lead,
            destination=dest,
            lam=lam,
            monetary_costs=prices,
        )
        for i, (req, lead, dest, lam) in enumerate(records)
    )
    return Scenario(lots=lots, horizon=config.horizon, events=events)


def build_utility_spec(
    scenario: Scenario,
    money_quantile: float = 0.95,
    distance_quantile: float = 0.95,
    min_denominator: float = 1e-9,
) -> UtilitySpec:
    """Derive the utility data from a scenario. Per-driver maxima are the
    given quantiles of that driver's own candidate values (so most lots are
    acceptable), floored away from zero."""
    n, L = scenario.n_drivers, len(scenario.lots)
    money = np.empty((L, n))
    dist = np.empty((L, n))
    lam = np.empty(n)
    for e in scenario.events:
        lam[e.driver] = e.lam
        for l, lot in enumerate(scenario.lots):
            money[l, e.driver] = e.monetary_costs[l]
            dist[l, e.driver] = l1_distance(e.destination, lot.location)
    max_money = np.maximum(np.quantile(money, money_quantile, axis=0), min_denominator)
    max_dist = np.maximum(np.quantile(dist, distance_quantile, axis=0), min_denominator)
    return UtilitySpec(
        lam=lam, monetary_cost=money, max_money=max_money, distance=dist, max_distance=max_dist
    )


# --- scenario JSON ------------------------------------------------------------
#
# {
#   "lots": [{"id", "location": [x, y] (miles), "capacity",
#             "initial_occupancy"}, ...],
#   "horizon": int,
#   "walking_speed": float,
#   "events": [{"driver", "request_period", "arrival_period",
#               "destination": [x, y], "lam", "monetary_costs": [...]}, ...]
# }


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "lots": [
            {
                "id": lot.id,
                "location": list(lot.location),
                "capacity": lot.capacity,
                "initial_occupancy": lot.initial_occupancy,
            }
            for lot in scenario.lots
        ],
        "horizon": scenario.horizon,
        "walking_speed": scenario.walking_speed,
        "events": [
            {
                "driver": e.driver,
                "request_period": e.request_period,
                "arrival_period": e.arrival_period,
                "destination": list(e.destination),
                "lam": e.lam,
                "monetary_costs": list(e.monetary_costs),
            }
            for e in scenario.events
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    lots = tuple(
        Lot(
            id=l["id"],
            location=tuple(l["location"]),
            capacity=l["capacity"],
            initial_occupancy=l["initial_occupancy"],
        )
        for l in doc["lots"]
    )
    events = tuple(
        ParkingEvent(
            driver=e["driver"],
            request_period=e["request_period"],
            arrival_period=e["arrival_period"],
            destination=tuple(e["destination"]),
            lam=e["lam"],
            monetary_costs=tuple(e["monetary_costs"]),
        )
        for e in doc["events"]
    )
    return Scenario(
        lots=lots,
        horizon=doc["horizon"],
        events=events,
        walking_speed=doc["walking_speed"],
    )


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(scenario_to_json(scenario) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_json(Path(path).read_text())
