"""Trip ingestion, lot synthesis and trial sampling.

Raw trips carry geographic coordinates (degrees) and timestamps (seconds).
Planar instances are produced by an equirectangular projection about the
region center (x = dlon * cos(lat0) * 69.17 miles/deg, y = dlat * 69.17),
hourly flooring of timestamps into periods, k-means lot placement on trip
destinations, and randomized lot capacities.

Every generator is a pure function of its inputs and a 64-bit seed
(numpy's PCG64 via default_rng); per-trial seeds are derived from the master
seed with a splitmix-style mix so any trial can be reproduced in isolation.
"""

from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .model import Instance, Lot, Point, Trip

MILES_PER_DEGREE = 69.17
DEFAULT_WALKING_SPEED = 3.106856  # miles/hour, i.e. 5 km/h
DAY_SECONDS = 86400.0

# default bounding box: lower Manhattan-ish, handy for synthetic pools
DEFAULT_REGION_BOUNDS = (-74.02, 40.70, -73.93, 40.80)

_EPOCH = datetime(1970, 1, 1)
_MASK64 = (1 << 64) - 1


def derive_seed(master: int, index: int) -> int:
    """Per-trial 64-bit seed: splitmix64 finalizer over master + index."""
    z = (int(master) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class Region:
    """Geographic bounding box, degrees."""

    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def __post_init__(self):
        if self.min_lon >= self.max_lon or self.min_lat >= self.max_lat:
            raise ValueError("region bounds are empty or inverted")

    @property
    def center(self) -> Point:
        return ((self.min_lon + self.max_lon) / 2.0, (self.min_lat + self.max_lat) / 2.0)

    def contains(self, point: Point) -> bool:
        lon, lat = point
        return self.min_lon <= lon <= self.max_lon and self.min_lat <= lat <= self.max_lat


@dataclass(frozen=True)
class RawTrip:
    """One recorded trip; points are (lon, lat) degrees, times are seconds."""

    pickup_time: float
    dropoff_time: float
    pickup_point: Point
    dropoff_point: Point

    def __post_init__(self):
        if self.dropoff_time < self.pickup_time:
            raise ValueError("dropoff before pickup")


@dataclass(frozen=True)
class PlanarTrip:
    """Trip after projection: points are (x, y) miles, times unchanged."""

    origin: Point
    destination: Point
    pickup_time: float
    dropoff_time: float


@dataclass(frozen=True)
class TripSchema:
    """Column-name mapping for trip CSVs.

    Timestamp columns may hold raw seconds (any float) or datetime strings;
    strings are parsed with `time_format` (strptime) when given, otherwise
    ISO 8601. Naive datetimes are taken as-is (no timezone applied).
    """

    pickup_time: str = "pickup_datetime"
    dropoff_time: str = "dropoff_datetime"
    pickup_lon: str = "pickup_longitude"
    pickup_lat: str = "pickup_latitude"
    dropoff_lon: str = "dropoff_longitude"
    dropoff_lat: str = "dropoff_latitude"
    time_format: str | None = None

    def columns(self) -> tuple[str, ...]:
        return (
            self.pickup_time,
            self.dropoff_time,
            self.pickup_lon,
            self.pickup_lat,
            self.dropoff_lon,
            self.dropoff_lat,
        )


@dataclass(frozen=True)
class ParsedTrips:
    trips: tuple[RawTrip, ...]
    dropped: int


@dataclass(frozen=True)
class TrialConfig:
    n_drivers: int = 100
    n_lots: int = 10
    horizon: int = 24
    seed: int = 0
    region: Region | None = None
    walking_speed: float = DEFAULT_WALKING_SPEED

    def __post_init__(self):
        if self.n_drivers < 1 or self.n_lots < 1:
            raise ValueError("n_drivers and n_lots must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def _parse_time(text: str, time_format: str | None) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    if time_format:
        dt = datetime.strptime(text, time_format)
    else:
        dt = datetime.fromisoformat(text)
    return (dt - _EPOCH).total_seconds()


def parse_trip_csv(path, schema: TripSchema | None = None, region: Region | None = None) -> ParsedTrips:
    """Read trips from a CSV file, dropping (and counting) rows with
    unparseable fields or points outside the region."""
    schema = schema or TripSchema()
    path = Path(path)
    trips: list[RawTrip] = []
    dropped = 0
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in schema.columns() if c not in header]
        if missing:
            raise ValueError(f"{path}: missing configured columns {missing}")
        for row in reader:
            try:
                trip = RawTrip(
                    pickup_time=_parse_time(row[schema.pickup_time], schema.time_format),
                    dropoff_time=_parse_time(row[schema.dropoff_time], schema.time_format),
                    pickup_point=(float(row[schema.pickup_lon]), float(row[schema.pickup_lat])),
                    dropoff_point=(float(row[schema.dropoff_lon]), float(row[schema.dropoff_lat])),
                )
            except (ValueError, TypeError):
                dropped += 1
                continue
            if region and not (region.contains(trip.pickup_point) and region.contains(trip.dropoff_point)):
                dropped += 1
                continue
            trips.append(trip)
    return ParsedTrips(trips=tuple(trips), dropped=dropped)


def write_trip_csv(trips, path, schema: TripSchema | None = None) -> None:
    """Export trips in the same schema parse_trip_csv reads (times as raw
    seconds), so export/import round-trips exactly."""
    schema = schema or TripSchema()
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.columns())
        for t in trips:
            writer.writerow(
                [
                    repr(t.pickup_time),
                    repr(t.dropoff_time),
                    repr(t.pickup_point[0]),
                    repr(t.pickup_point[1]),
                    repr(t.dropoff_point[0]),
                    repr(t.dropoff_point[1]),
                ]
            )


def parse_sumo_trips(
    path,
    default_duration_s: float = 900.0,
    region: Region | None = None,
) -> ParsedTrips:
    """Read trips from a SUMO-style trip XML file.

    Expected document: a root element containing <trip> elements with
    attributes `depart` (seconds), `fromLon`, `fromLat`, `toLon`, `toLat`
    and optionally `arrival` (seconds). Trips without `arrival` get
    depart + default_duration_s. Malformed XML raises; malformed individual
    trips are dropped and counted.
    """
    tree = ET.parse(Path(path))
    trips: list[RawTrip] = []
    dropped = 0
    for el in tree.getroot().iter("trip"):
        try:
            depart = float(el.attrib["depart"])
            arrival_attr = el.attrib.get("arrival")
            arrival = float(arrival_attr) if arrival_attr is not None else depart + default_duration_s
            trip = RawTrip(
                pickup_time=depart,
                dropoff_time=arrival,
                pickup_point=(float(el.attrib["fromLon"]), float(el.attrib["fromLat"])),
                dropoff_point=(float(el.attrib["toLon"]), float(el.attrib["toLat"])),
            )
        except (KeyError, ValueError):
            dropped += 1
            continue
        if region and not (region.contains(trip.pickup_point) and region.contains(trip.dropoff_point)):
            dropped += 1
            continue
        trips.append(trip)
    return ParsedTrips(trips=tuple(trips), dropped=dropped)


def project_to_plane(raw_trips, region: Region) -> list[PlanarTrip]:
    """Equirectangular projection of trip endpoints about the region center."""
    lon0, lat0 = region.center
    cos_lat = math.cos(math.radians(lat0))

    def proj(p: Point) -> Point:
        return (
            (p[0] - lon0) * cos_lat * MILES_PER_DEGREE,
            (p[1] - lat0) * MILES_PER_DEGREE,
        )

    return [
        PlanarTrip(
            origin=proj(t.pickup_point),
            destination=proj(t.dropoff_point),
            pickup_time=t.pickup_time,
            dropoff_time=t.dropoff_time,
        )
        for t in raw_trips
    ]


def kmeans_lots(destinations, k: int, seed: int) -> list[Point]:
    """Lot locations as k-means centroids of trip destinations.

    Lloyd's iterations from a farthest-point seeding (first center drawn by
    seed, each next center the point farthest from all chosen so far). Runs
    until the largest centroid shift drops below 1e-9 or 100 iterations.
    Empty clusters are reseeded to the point farthest from its assigned
    centroid. Fully deterministic given the seed.
    """
    pts = np.asarray(destinations, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("destinations must be an (n, 2) array")
    distinct = np.unique(pts, axis=0)
    if distinct.shape[0] < k:
        raise ValueError(f"need at least {k} distinct destinations, got {distinct.shape[0]}")
    rng = np.random.default_rng(seed)
    n = pts.shape[0]

    centers = np.empty((k, 2))
    centers[0] = pts[int(rng.integers(n))]
    min_d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        centers[j] = pts[int(np.argmax(min_d2))]
        min_d2 = np.minimum(min_d2, ((pts - centers[j]) ** 2).sum(axis=1))

    for _ in range(100):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        nearest_d2 = d2[np.arange(n), labels]
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
            else:
                new_centers[j] = pts[int(np.argmax(nearest_d2))]
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if shift < 1e-9:
            break
    return [tuple(c) for c in centers]


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def gen_capacities(n_drivers: int, n_lots: int, seed: int) -> list[tuple[int, int]]:
    """Per-lot (capacity, initial occupancy).

    capacity ~ uniform over {floor(R/L)+1, floor(R/L)+2}; initial occupancy
    ~ uniform over [round(capacity/4), round(3*capacity/4)] (round half up),
    i.e. each lot starts between one-quarter and three-quarters full. Draw
    order is capacity then occupancy, lot by lot.
    """
    if n_lots < 1:
        raise ValueError("n_lots must be >= 1")
    rng = np.random.default_rng(seed)
    base = n_drivers // n_lots
    out = []
    for _ in range(n_lots):
        cap = int(rng.integers(base + 1, base + 3))
        lo = _round_half_up(cap / 4.0)
        hi = _round_half_up(3.0 * cap / 4.0)
        occ = int(rng.integers(lo, hi + 1))
        out.append((cap, occ))
    return out


def gen_synthetic_trips(
    n: int,
    seed: int,
    region: Region | None = None,
    window_hours: float = 24.0,
    n_hotspots: int = 6,
    hotspot_spread: float = 0.10,
) -> list[RawTrip]:
    """Random trips inside a region over a time window.

    Origins are uniform over the region; destinations cluster around
    n_hotspots random hot spots (Gaussian, std = hotspot_spread of the box
    size, clipped to the region), mimicking the concentration of real urban
    destinations. n_hotspots=0 gives uniform destinations. Trip durations are
    uniform between 5 and 45 minutes, clamped to the window.
    """
    region = region or Region(*DEFAULT_REGION_BOUNDS)
    rng = np.random.default_rng(seed)
    window = window_hours * 3600.0
    dlon = region.max_lon - region.min_lon
    dlat = region.max_lat - region.min_lat

    origins = np.column_stack(
        [
            rng.uniform(region.min_lon, region.max_lon, n),
            rng.uniform(region.min_lat, region.max_lat, n),
        ]
    )
    if n_hotspots > 0:
        hubs = np.column_stack(
            [
                rng.uniform(region.min_lon + 0.15 * dlon, region.max_lon - 0.15 * dlon, n_hotspots),
                rng.uniform(region.min_lat + 0.15 * dlat, region.max_lat - 0.15 * dlat, n_hotspots),
            ]
        )
        pick = rng.integers(0, n_hotspots, n)
        dests = hubs[pick] + rng.normal(0.0, [hotspot_spread * dlon, hotspot_spread * dlat], (n, 2))
        dests[:, 0] = np.clip(dests[:, 0], region.min_lon, region.max_lon)
        dests[:, 1] = np.clip(dests[:, 1], region.min_lat, region.max_lat)
    else:
        dests = np.column_stack(
            [
                rng.uniform(region.min_lon, region.max_lon, n),
                rng.uniform(region.min_lat, region.max_lat, n),
            ]
        )

    pickups = rng.uniform(0.0, window, size=n)
    durations = rng.uniform(300.0, 2700.0, size=n)
    trips = []
    for i in range(n):
        pickup = float(pickups[i])
        dropoff = min(pickup + float(durations[i]), window)
        trips.append(
            RawTrip(
                pickup_time=pickup,
                dropoff_time=dropoff,
                pickup_point=(float(origins[i, 0]), float(origins[i, 1])),
                dropoff_point=(float(dests[i, 0]), float(dests[i, 1])),
            )
        )
    return trips


def region_from_trips(raw_trips) -> Region:
    lons = [p for t in raw_trips for p in (t.pickup_point[0], t.dropoff_point[0])]
    lats = [p for t in raw_trips for p in (t.pickup_point[1], t.dropoff_point[1])]
    pad = 1e-6  # keep boundary points strictly inside
    return Region(min(lons) - pad, min(lats) - pad, max(lons) + pad, max(lats) + pad)


def extrapolation_rule(window_seconds: float) -> str:
    """Name of the rule mapping source timestamps onto the day grid."""
    return "linear-stretch" if window_seconds <= DAY_SECONDS else "day-wrap"


def _to_periods(pickup: float, dropoff: float, w0: float, duration: float, horizon: int) -> tuple[int, int]:
    if duration <= 0:
        return 1, 1
    if duration <= DAY_SECONDS:
        # linear-stretch: map the source window onto the full day grid
        f0 = (pickup - w0) / duration
        f1 = (dropoff - w0) / duration
        start = min(int(f0 * horizon) + 1, horizon)
        end = min(int(f1 * horizon) + 1, horizon)
    else:
        # day-wrap: take time-of-day; trips crossing midnight clamp to the
        # final period (single-day horizon)
        h0 = ((pickup - w0) / 3600.0) % 24.0
        h1 = h0 + (dropoff - pickup) / 3600.0
        start = min(int(h0 * horizon / 24.0) + 1, horizon)
        end = min(int(h1 * horizon / 24.0) + 1, horizon)
    return start, max(start, end)


def sample_trial(raw_trips, config: TrialConfig) -> Instance:
    """Draw one experiment instance from a pool of raw trips.

    Samples n_drivers trips without replacement, projects them to the plane,
    maps timestamps onto the period grid (see extrapolation_rule), places
    n_lots lots at k-means centroids of the sampled destinations and draws
    capacities. Deterministic given config.seed.
    """
    raw_trips = list(raw_trips)
    region = config.region or region_from_trips(raw_trips)
    pool = [
        t
        for t in raw_trips
        if region.contains(t.pickup_point) and region.contains(t.dropoff_point)
    ]
    if len(pool) < config.n_drivers:
        raise ValueError(
            f"need {config.n_drivers} trips inside the region, only {len(pool)} available"
        )
    rng = np.random.default_rng(config.seed)
    idx = rng.choice(len(pool), size=config.n_drivers, replace=False)
    sampled = [pool[int(i)] for i in idx]

    w0 = min(t.pickup_time for t in pool)
    w1 = max(t.dropoff_time for t in pool)
    duration = w1 - w0

    planar = project_to_plane(sampled, region)
    trips = []
    for r, (raw, flat) in enumerate(zip(sampled, planar)):
        start, end = _to_periods(raw.pickup_time, raw.dropoff_time, w0, duration, config.horizon)
        trips.append(
            Trip(
                id=r,
                origin=flat.origin,
                destination=flat.destination,
                start_period=start,
                end_period=end,
            )
        )

    kmeans_seed = int(rng.integers(1 << 63))
    cap_seed = int(rng.integers(1 << 63))
    centers = kmeans_lots([t.destination for t in trips], config.n_lots, kmeans_seed)
    caps = gen_capacities(config.n_drivers, config.n_lots, cap_seed)
    lots = [
        Lot(id=i, location=centers[i], capacity=caps[i][0], initial_occupancy=caps[i][1])
        for i in range(config.n_lots)
    ]
    return Instance.build(trips, lots, horizon=config.horizon, walking_speed=config.walking_speed)
