"""Domain model: trips, lots, instances, assignments, occupancy ledgers.

Conventions used throughout the package:
  * coordinates are planar, in miles; distances are L1 (taxicab)
  * time is a discrete grid of periods 1..horizon (default 24 hourly periods)
  * driver and lot ids are 0-based indices; period values are 1-based
  * occupancy matrices have shape (n_lots, horizon); column j holds period j+1

Departures are driven by trip start periods and origin lots only; there is no
vehicle-identity link between a departure and any earlier arrival. As a
consequence a lot's occupancy may go negative without breaking feasibility;
the feasibility checker surfaces that as a diagnostic, not a violation.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Point = tuple[float, float]

_NEGATIVE_OCCUPANCY_MSG = (
    "occupancy went negative in at least one lot/period; departures are not "
    "tied to prior arrivals, so this is a modeling artifact, not a violation"
)


def l1_distance(a: Point, b: Point) -> float:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _check_point(name: str, p: Point) -> None:
    if len(p) != 2 or not all(math.isfinite(c) for c in p):
        raise ValueError(f"{name} must be a finite (x, y) pair, got {p!r}")


@dataclass(frozen=True)
class Trip:
    """One driver trip: park near `destination`, vehicle departs from the lot
    nearest `origin` at `start_period`.

    end_period may precede start_period (a trip wrapping midnight lands that
    way); arrivals and departures are independent tallies, so the model stays
    well defined — but such trips can make an instance infeasible, since the
    arrival then needs a slot before the departure frees one.
    """

    id: int
    origin: Point
    destination: Point
    start_period: int
    end_period: int

    def __post_init__(self):
        _check_point("origin", self.origin)
        _check_point("destination", self.destination)
        if self.start_period < 1 or self.end_period < 1:
            raise ValueError(f"trip {self.id}: periods must be >= 1")


@dataclass(frozen=True)
class Lot:
    id: int
    location: Point
    capacity: int
    initial_occupancy: int

    def __post_init__(self):
        _check_point("location", self.location)
        if self.capacity < 0:
            raise ValueError(f"lot {self.id}: negative capacity")
        if not 0 <= self.initial_occupancy <= self.capacity:
            raise ValueError(
                f"lot {self.id}: initial occupancy {self.initial_occupancy} "
                f"outside 0..{self.capacity}"
            )


@dataclass(frozen=True)
class Instance:
    """A full problem instance.

    `origin_lot[r]` is the fixed pickup lot of driver r (nearest lot to the
    trip origin); it is a parameter of the instance, never optimized.
    `walking_speed` is in distance units per hour.
    """

    trips: tuple[Trip, ...]
    lots: tuple[Lot, ...]
    horizon: int
    walking_speed: float
    origin_lot: tuple[int, ...]

    def __post_init__(self):
        if not self.lots:
            raise ValueError("instance needs at least one lot")
        if self.walking_speed <= 0:
            raise ValueError(f"walking speed must be positive, got {self.walking_speed}")
        if len(self.origin_lot) != len(self.trips):
            raise ValueError("origin_lot length must match trips")
        for trip in self.trips:
            if trip.end_period > self.horizon or trip.start_period > self.horizon:
                raise ValueError(f"trip {trip.id} extends past horizon {self.horizon}")
        for r, lot in enumerate(self.origin_lot):
            if not 0 <= lot < len(self.lots):
                raise ValueError(f"origin_lot[{r}] = {lot} is not a lot index")

    @classmethod
    def build(cls, trips, lots, horizon: int, walking_speed: float) -> "Instance":
        """Construct an instance, deriving origin lots from trip origins."""
        trips = tuple(trips)
        lots = tuple(lots)
        return cls(
            trips=trips,
            lots=lots,
            horizon=horizon,
            walking_speed=walking_speed,
            origin_lot=tuple(compute_origin_lots(trips, lots)),
        )

    @property
    def n_drivers(self) -> int:
        return len(self.trips)

    @property
    def n_lots(self) -> int:
        return len(self.lots)


@dataclass(frozen=True)
class Assignment:
    """Destination lot per driver plus the implied walking times (hours)."""

    dest_lot: tuple[int, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        if len(self.dest_lot) != len(self.beta):
            raise ValueError("dest_lot and beta must have equal length")


@dataclass(frozen=True)
class OccupancyLedger:
    """Arrivals, departures and occupancy per lot and period.

    occupancy[l, j] = occupancy[l, j-1] + arrivals[l, j] - departures[l, j],
    seeded with each lot's initial occupancy. Arrays are read-only.
    """

    arrivals: np.ndarray
    departures: np.ndarray
    occupancy: np.ndarray


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the feasibility check.

    `capacity_violations` lists (lot, period) pairs where occupancy exceeds
    capacity. `negative_occupancy` lists (lot, period) pairs where occupancy
    dropped below zero; those are diagnostics only and do not affect the
    verdict.
    """

    feasible: bool
    capacity_violations: tuple[tuple[int, int], ...]
    negative_occupancy: tuple[tuple[int, int], ...]


def compute_origin_lots(trips, lots) -> list[int]:
    """Nearest lot (L1) to each trip origin; ties go to the lowest lot index."""
    if not lots:
        raise ValueError("no lots to choose from")
    result = []
    for trip in trips:
        best, best_dist = 0, math.inf
        for idx, lot in enumerate(lots):
            d = l1_distance(trip.origin, lot.location)
            if d < best_dist:
                best, best_dist = idx, d
        result.append(best)
    return result


def assignment_from_lots(instance: Instance, dest_lot) -> Assignment:
    """Build an Assignment from destination lot choices, deriving beta.

    Walking time uses the same definition as fairness.walking_time:
    L1 distance divided by the instance's walking speed.
    """
    dest_lot = tuple(int(x) for x in dest_lot)
    if len(dest_lot) != instance.n_drivers:
        raise ValueError("dest_lot length must equal driver count")
    beta = []
    for r, lot in enumerate(dest_lot):
        if not 0 <= lot < instance.n_lots:
            raise ValueError(f"dest_lot[{r}] = {lot} is not a lot index")
        d = l1_distance(instance.trips[r].destination, instance.lots[lot].location)
        beta.append(d / instance.walking_speed)
    return Assignment(dest_lot=dest_lot, beta=tuple(beta))


def build_ledger(instance: Instance, assignment: Assignment) -> OccupancyLedger:
    """Tally arrivals/departures per lot and period and run the occupancy
    recurrence from each lot's initial occupancy."""
    n_lots, horizon = instance.n_lots, instance.horizon
    arrivals = np.zeros((n_lots, horizon), dtype=np.int64)
    departures = np.zeros((n_lots, horizon), dtype=np.int64)
    for r, trip in enumerate(instance.trips):
        lot = assignment.dest_lot[r]
        if not 0 <= lot < n_lots:
            raise ValueError(f"dest_lot[{r}] = {lot} is not a lot index")
        arrivals[lot, trip.end_period - 1] += 1
        departures[instance.origin_lot[r], trip.start_period - 1] += 1
    initial = np.array([lot.initial_occupancy for lot in instance.lots], dtype=np.int64)
    occupancy = initial[:, None] + np.cumsum(arrivals - departures, axis=1)
    for arr in (arrivals, departures, occupancy):
        arr.setflags(write=False)
    return OccupancyLedger(arrivals=arrivals, departures=departures, occupancy=occupancy)


def check_feasible(instance: Instance, assignment: Assignment) -> FeasibilityReport:
    """Verify lot capacities over the whole horizon.

    One destination per driver is structural in the dense encoding; lot
    indices are validated while building the ledger. Negative occupancy is
    reported (and warned about once) but never counts as a violation.
    """
    ledger = build_ledger(instance, assignment)
    caps = np.array([lot.capacity for lot in instance.lots], dtype=np.int64)
    over = np.argwhere(ledger.occupancy > caps[:, None])
    negative = np.argwhere(ledger.occupancy < 0)
    violations = tuple((int(l), int(t) + 1) for l, t in over)
    negatives = tuple((int(l), int(t) + 1) for l, t in negative)
    if negatives:
        warnings.warn(_NEGATIVE_OCCUPANCY_MSG, RuntimeWarning, stacklevel=2)
    return FeasibilityReport(
        feasible=not violations,
        capacity_violations=violations,
        negative_occupancy=negatives,
    )


# --- JSON serialization -----------------------------------------------------
#
# Schema (round-trip stable, deterministic byte output):
# {
#   "trips": [{"id", "origin": [x, y], "destination": [x, y],
#              "start_period", "end_period"}, ...],
#   "lots":  [{"id", "location": [x, y], "capacity", "initial_occupancy"}, ...],
#   "horizon": int,
#   "walking_speed": float,
#   "origin_lot": [int, ...]
# }


def instance_to_json(instance: Instance) -> str:
    doc = {
        "trips": [
            {
                "id": t.id,
                "origin": list(t.origin),
                "destination": list(t.destination),
                "start_period": t.start_period,
                "end_period": t.end_period,
            }
            for t in instance.trips
        ],
        "lots": [
            {
                "id": lot.id,
                "location": list(lot.location),
                "capacity": lot.capacity,
                "initial_occupancy": lot.initial_occupancy,
            }
            for lot in instance.lots
        ],
        "horizon": instance.horizon,
        "walking_speed": instance.walking_speed,
        "origin_lot": list(instance.origin_lot),
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    trips = tuple(
        Trip(
            id=t["id"],
            origin=tuple(t["origin"]),
            destination=tuple(t["destination"]),
            start_period=t["start_period"],
            end_period=t["end_period"],
        )
        for t in doc["trips"]
    )
    lots = tuple(
        Lot(
            id=l["id"],
            location=tuple(l["location"]),
            capacity=l["capacity"],
            initial_occupancy=l["initial_occupancy"],
        )
        for l in doc["lots"]
    )
    return Instance(
        trips=trips,
        lots=lots,
        horizon=doc["horizon"],
        walking_speed=doc["walking_speed"],
        origin_lot=tuple(doc["origin_lot"]),
    )


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(instance_to_json(instance) + "\n")


def load_instance(path) -> Instance:
    return instance_from_json(Path(path).read_text())
