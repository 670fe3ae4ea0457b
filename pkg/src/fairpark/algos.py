"""The three assignment algorithms.

* min_sum: exact minimizer of total walking time (one flow solve).
* no_scheme: greedy simulation; every arriving driver takes the nearest lot
  with a free spot at that instant.
* min_envy: iterative envy minimization; each round freezes drivers whose
  walking time already sits near the mean and re-solves the rest against the
  running mean as target, until the mean stops moving.

The mean envy of min_envy iterates is not guaranteed to decrease
monotonically; the iteration trace is exported so that behavior can be
measured rather than assumed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fairness
from .assign import assignment_cost, solve_exact
from .flowcore import Infeasible
from .model import Assignment, Instance, assignment_from_lots, check_feasible, l1_distance

INITIALIZERS = ("min-sum", "no-scheme")


class NoSpaceError(Infeasible):
    """Greedy simulation found no lot with a free spot for a driver."""

    def __init__(self, driver: int, period: int):
        super().__init__(f"no free spot for driver {driver} at period {period}")
        self.driver = driver
        self.period = period


@dataclass(frozen=True)
class MinEnvyParams:
    """epsilon: relative half-width of the frozen band around the mean;
    delta: convergence tolerance on the mean walking time (hours);
    maxiter: iteration cap; initializer: which algorithm seeds the loop.

    The default initializer is the greedy no-scheme assignment: starting from
    a weak feasible point, the loop reliably ends at or below its starting
    envy, while a min-sum start is already so strong that the final envy can
    land a hair above it. Both starts converge to comparable envy levels;
    min-sum remains available for comparison.
    """

    epsilon: float = 0.1
    delta: float = 1e-4
    maxiter: int = 20
    initializer: str = "no-scheme"

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0 or self.maxiter <= 0:
            raise ValueError("epsilon, delta and maxiter must all be positive")
        if self.initializer not in INITIALIZERS:
            raise ValueError(f"initializer must be one of {INITIALIZERS}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mean_walk: float  # hours
    mean_envy: float  # hours
    frozen_size: int
    subproblem_cost: float  # hours


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration progress of min_envy, plus the initial state."""

    initializer: str
    initial_mean_walk: float
    initial_mean_envy: float
    records: tuple[IterationRecord, ...]

    def csv_rows(self) -> list[dict]:
        """Rows for export, all times in minutes; iteration 0 is the initial
        assignment, so its frozen-set size and subproblem cost are blank."""
        rows = [
            {
                "iter": 0,
                "H_minutes": self.initial_mean_walk * 60.0,
                "F_minutes": self.initial_mean_envy * 60.0,
                "S_size": "",
                "subproblem_cost": "",
            }
        ]
        for rec in self.records:
            rows.append(
                {
                    "iter": rec.iteration,
                    "H_minutes": rec.mean_walk * 60.0,
                    "F_minutes": rec.mean_envy * 60.0,
                    "S_size": rec.frozen_size,
                    "subproblem_cost": rec.subproblem_cost * 60.0,
                }
            )
        return rows

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["iter", "H_minutes", "F_minutes", "S_size", "subproblem_cost"]
            )
            writer.writeheader()
            writer.writerows(self.csv_rows())


def beta_matrix(instance: Instance) -> np.ndarray:
    """(n_lots, n_drivers) walking times for every possible lot choice."""
    return fairness.walking_time_matrix(
        [t.destination for t in instance.trips],
        [lot.location for lot in instance.lots],
        instance.walking_speed,
    )


def min_sum(instance: Instance) -> Assignment:
    """Minimize total walking time exactly (nothing frozen)."""
    return solve_exact(instance, beta_matrix(instance), frozen=None)


def no_scheme(instance: Instance) -> Assignment:
    """Greedy baseline: process periods in order; within a period apply
    departures first, then assign each arriving driver (ascending id) the
    nearest lot with a free spot, ties to the lowest lot index."""
    n_lots = instance.n_lots
    occupancy = [lot.initial_occupancy for lot in instance.lots]
    by_start: dict[int, list[int]] = {}
    by_end: dict[int, list[int]] = {}
    for r, trip in enumerate(instance.trips):
        by_start.setdefault(trip.start_period, []).append(r)
        by_end.setdefault(trip.end_period, []).append(r)

    dest = [-1] * instance.n_drivers
    for t in range(1, instance.horizon + 1):
        for r in by_start.get(t, ()):
            occupancy[instance.origin_lot[r]] -= 1
        for r in sorted(by_end.get(t, ())):
            destination = instance.trips[r].destination
            choices = sorted(
                (l for l in range(n_lots) if occupancy[l] < instance.lots[l].capacity),
                key=lambda l: (l1_distance(destination, instance.lots[l].location), l),
            )
            if not choices:
                raise NoSpaceError(driver=r, period=t)
            dest[r] = choices[0]
            occupancy[choices[0]] += 1
    return assignment_from_lots(instance, dest)


def min_envy(
    instance: Instance, params: MinEnvyParams | None = None
) -> tuple[Assignment, IterationTrace]:
    """Iterative envy minimization.

    Each iteration freezes the drivers whose walking time lies within the
    epsilon band around the previous mean, then solves the restricted
    assignment exactly with per-driver costs |beta - previous mean|. Stops
    when the mean walking time moves less than delta, or after the iteration
    counter passes maxiter. Every iterate is verified feasible.
    """
    params = params or MinEnvyParams()
    if params.initializer == "min-sum":
        current = min_sum(instance)
    else:
        current = no_scheme(instance)

    betas = beta_matrix(instance)
    beta_prev = np.asarray(current.beta)
    h_prev = fairness.mean_walk(beta_prev)
    initial_h = h_prev
    initial_f = fairness.mean_envy(beta_prev)

    records: list[IterationRecord] = []
    i = 1
    while True:
        frozen_set = fairness.select_S(beta_prev, params.epsilon)
        frozen = {r: current.dest_lot[r] for r in frozen_set}
        costs = np.abs(betas - h_prev)
        current = solve_exact(instance, costs, frozen)
        with warnings.catch_warnings():
            # negative occupancy is routine here; only capacity matters
            warnings.simplefilter("ignore", RuntimeWarning)
            report = check_feasible(instance, current)
        if not report.feasible:
            raise RuntimeError(
                f"iterate {i} violated capacity at {report.capacity_violations[:3]}"
            )
        beta_now = np.asarray(current.beta)
        h_now = fairness.mean_walk(beta_now)
        records.append(
            IterationRecord(
                iteration=i,
                mean_walk=h_now,
                mean_envy=fairness.mean_envy(beta_now),
                frozen_size=len(frozen_set),
                subproblem_cost=assignment_cost(costs, current, exclude=frozen_set),
            )
        )
        converged = abs(h_now - h_prev) < params.delta or i > params.maxiter
        beta_prev, h_prev = beta_now, h_now
        i += 1
        if converged:
            break

    trace = IterationTrace(
        initializer=params.initializer,
        initial_mean_walk=initial_h,
        initial_mean_envy=initial_f,
        records=tuple(records),
    )
    return current, trace
