"""Scalar fairness metrics over driver walking times.

All times are hours internally. Walking time is L1 distance divided by
walking speed: the distance/speed form is the dimensionally consistent one
(distance times speed would not yield a time), and both the mean-envy and
Jain metrics are scale-(in)variant, so minimizers are unaffected by the
choice of time vs distance units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import Point, l1_distance


@dataclass(frozen=True)
class MetricReport:
    """Summary metrics for one assignment: mean envy and mean walk in hours,
    Jain's index dimensionless in (0, 1]."""

    mean_envy: float
    mean_walk: float
    jains: float
    per_driver_beta: tuple[float, ...]


def walking_time(destination: Point, lot_location: Point, walking_speed: float) -> float:
    """Hours to walk from an assigned lot to the trip destination."""
    if walking_speed <= 0:
        raise ValueError(f"walking speed must be positive, got {walking_speed}")
    return l1_distance(destination, lot_location) / walking_speed


def walking_time_matrix(destinations, lot_locations, walking_speed: float) -> np.ndarray:
    """(n_lots, n_drivers) matrix of walking times for every lot choice."""
    if walking_speed <= 0:
        raise ValueError(f"walking speed must be positive, got {walking_speed}")
    dest = np.asarray(destinations, dtype=float)
    lots = np.asarray(lot_locations, dtype=float)
    dist = np.abs(lots[:, None, :] - dest[None, :, :]).sum(axis=2)
    return dist / walking_speed


def envy(beta_r1: float, beta_r2: float) -> float:
    """Envy between two drivers: absolute walking-time difference."""
    return abs(beta_r1 - beta_r2)


def mean_envy(beta) -> float:
    """Mean envy over all ordered driver pairs (diagonal included).

    Computed via the sorted-prefix identity
        sum_{i<j} (b_(j) - b_(i)) = sum_i (2i - n + 1) * b_(i)   (0-based i)
    which is exact and O(n log n); mean_envy_pairs is the definitional
    quadratic form kept as its oracle.
    """
    b = np.asarray(beta, dtype=float)
    if b.size == 0:
        raise ValueError("mean envy needs at least one driver")
    n = b.size
    s = np.sort(b)
    coeff = 2.0 * np.arange(n) - n + 1.0
    unordered = float(np.dot(coeff, s))
    return 2.0 * unordered / (n * n)


def mean_envy_pairs(beta) -> float:
    """Definitional mean envy: average |b_i - b_j| over all ordered pairs."""
    b = np.asarray(beta, dtype=float)
    if b.size == 0:
        raise ValueError("mean envy needs at least one driver")
    return float(np.abs(b[:, None] - b[None, :]).sum()) / (b.size * b.size)


def mean_walk(beta) -> float:
    """Mean walking time (hours)."""
    b = np.asarray(beta, dtype=float)
    if b.size == 0:
        raise ValueError("mean walk needs at least one driver")
    return float(b.mean())


def objective_G(beta, target_mean: float, excluded_set: Iterable[int] = ()) -> float:
    """Sum of |beta_r - target_mean| over drivers outside the excluded set."""
    if target_mean < 0:
        raise ValueError(f"target mean must be >= 0, got {target_mean}")
    b = np.asarray(beta, dtype=float)
    excluded = set(excluded_set)
    total = 0.0
    for r in range(b.size):
        if r not in excluded:
            total += abs(float(b[r]) - target_mean)
    return total


def jains_index(beta) -> float:
    """Jain's fairness index (sum b)^2 / (n * sum b^2), in [1/n, 1].

    Equal positive walking times score 1. The all-zero vector makes the
    ratio 0/0; that degenerate case is reported as 1 (everyone is equally
    well off).
    """
    b = np.asarray(beta, dtype=float)
    if b.size == 0:
        raise ValueError("Jain's index needs at least one driver")
    sq = float(np.dot(b, b))
    if sq == 0.0:
        return 1.0
    total = float(b.sum())
    return total * total / (b.size * sq)


def select_S(beta, epsilon: float) -> set[int]:
    """Drivers whose walking time lies within +-epsilon (relative) of the
    mean; both band endpoints are inclusive."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    b = np.asarray(beta, dtype=float)
    h = mean_walk(b)
    lo, hi = (1.0 - epsilon) * h, (1.0 + epsilon) * h
    return {r for r in range(b.size) if lo <= b[r] <= hi}


def compute_metrics(beta) -> MetricReport:
    b = tuple(float(x) for x in beta)
    return MetricReport(
        mean_envy=mean_envy(b),
        mean_walk=mean_walk(b),
        jains=jains_index(b),
        per_driver_beta=b,
    )
