import csv
import warnings

import numpy as np
import pytest

from fairpark import fairness
from fairpark.algos import (
    IterationTrace,
    MinEnvyParams,
    NoSpaceError,
    beta_matrix,
    min_envy,
    min_sum,
    no_scheme,
)
from fairpark.assign import brute_force_assign, scale_costs, solve_exact
from fairpark.flowcore import Infeasible
from fairpark.model import Instance, Lot, Trip, check_feasible

from tests.util import make_tiny_instance


def _quiet_check(instance, assignment):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return check_feasible(instance, assignment)


def _lot(l, loc, cap, occ=0):
    return Lot(id=l, location=loc, capacity=cap, initial_occupancy=occ)


def _trip(r, origin, dest, start, end):
    return Trip(id=r, origin=origin, destination=dest, start_period=start, end_period=end)


def _feasible_tiny(seed):
    """Tiny instance guaranteed solvable by all three algorithms."""
    inst = make_tiny_instance(seed, min_capacity=2, max_capacity=4)
    try:
        no_scheme(inst)
        min_sum(inst)
    except Infeasible:
        return None
    return inst


class TestMinSum:
    def test_single_driver_nearest_lot(self):
        lots = [_lot(0, (0.0, 0.0), cap=2), _lot(1, (4.0, 0.0), cap=2)]
        trips = [_trip(0, (2.0, 2.0), (0.5, 0.0), start=1, end=2)]
        inst = Instance.build(trips, lots, horizon=3, walking_speed=3.0)
        assert min_sum(inst).dest_lot == (0,)

    def test_matches_brute_force_on_beta_costs(self):
        checked = 0
        for seed in range(12):
            inst = make_tiny_instance(seed + 300, max_drivers=5, max_lots=2)
            costs = beta_matrix(inst)
            try:
                got = min_sum(inst)
            except Infeasible:
                with pytest.raises(Infeasible):
                    brute_force_assign(inst, costs)
                continue
            brute = brute_force_assign(inst, costs)
            scaled = scale_costs(costs)
            got_cost = sum(int(scaled[l, r]) for r, l in enumerate(got.dest_lot))
            brute_cost = sum(int(scaled[l, r]) for r, l in enumerate(brute.dest_lot))
            assert got_cost == brute_cost
            checked += 1
        assert checked >= 5

    def test_ample_capacity_gives_individual_nearest(self):
        inst = make_tiny_instance(9, min_capacity=3, max_capacity=3)
        roomy_lots = [
            Lot(id=l.id, location=l.location, capacity=50, initial_occupancy=0)
            for l in inst.lots
        ]
        roomy = Instance(
            trips=inst.trips,
            lots=tuple(roomy_lots),
            horizon=inst.horizon,
            walking_speed=inst.walking_speed,
            origin_lot=inst.origin_lot,
        )
        betas = beta_matrix(roomy)
        got = min_sum(roomy)
        for r, lot in enumerate(got.dest_lot):
            assert betas[lot, r] == betas[:, r].min()


class TestNoScheme:
    def test_full_lot_overflows_to_second(self):
        lots = [_lot(0, (0.0, 0.0), cap=1, occ=1), _lot(1, (3.0, 0.0), cap=1, occ=0)]
        trips = [_trip(0, (9.0, 9.0), (0.0, 0.0), start=1, end=1)]
        inst = Instance.build(trips, lots, horizon=2, walking_speed=3.0)
        assert no_scheme(inst).dest_lot == (1,)

    def test_lower_id_wins_contested_slot(self):
        lots = [_lot(0, (0.0, 0.0), cap=1, occ=0), _lot(1, (3.0, 0.0), cap=5, occ=0)]
        trips = [
            _trip(0, (9.0, 9.0), (0.1, 0.0), start=1, end=2),
            _trip(1, (9.0, 9.0), (0.0, 0.0), start=1, end=2),
        ]
        inst = Instance.build(trips, lots, horizon=3, walking_speed=3.0)
        got = no_scheme(inst)
        assert got.dest_lot == (0, 1)

    def test_departure_frees_slot_before_arrival(self):
        # lot 0 starts full; its only occupant-equivalent departs at t=2
        lots = [_lot(0, (0.0, 0.0), cap=1, occ=1), _lot(1, (8.0, 0.0), cap=5, occ=0)]
        trips = [
            _trip(0, (0.1, 0.0), (7.0, 0.0), start=2, end=3),  # departs lot 0
            _trip(1, (9.0, 9.0), (0.0, 0.0), start=1, end=2),  # wants lot 0 at t=2
        ]
        inst = Instance.build(trips, lots, horizon=3, walking_speed=3.0)
        got = no_scheme(inst)
        assert got.dest_lot[1] == 0

    def test_no_space_error(self):
        lots = [_lot(0, (0.0, 0.0), cap=1, occ=0)]
        trips = [
            _trip(0, (0.0, 0.0), (0.0, 0.0), start=2, end=1),
            _trip(1, (0.0, 0.0), (0.0, 0.0), start=2, end=1),
        ]
        inst = Instance.build(trips, lots, horizon=2, walking_speed=3.0)
        with pytest.raises(NoSpaceError) as err:
            no_scheme(inst)
        assert err.value.driver == 1
        assert err.value.period == 1

    def test_resimulation_deterministic_and_feasible(self):
        for seed in range(10):
            inst = _feasible_tiny(seed + 40)
            if inst is None:
                continue
            first = no_scheme(inst)
            second = no_scheme(inst)
            assert first == second
            assert _quiet_check(inst, first).feasible


class TestMinEnvy:
    def test_single_driver_terminates_immediately(self):
        lots = [_lot(0, (0.0, 0.0), cap=2), _lot(1, (4.0, 0.0), cap=2)]
        trips = [_trip(0, (2.0, 2.0), (0.5, 0.0), start=1, end=2)]
        inst = Instance.build(trips, lots, horizon=3, walking_speed=3.0)
        assignment, trace = min_envy(inst)
        assert fairness.mean_envy(assignment.beta) == 0.0
        assert len(trace.records) == 1

    def test_all_in_band_fixed_point(self):
        # destinations sit exactly on distinct lots: every beta is 0, the
        # band contains everyone, and the loop is a single no-op iteration
        lots = [_lot(0, (0.0, 0.0), cap=2), _lot(1, (4.0, 0.0), cap=2)]
        trips = [
            _trip(0, (1.0, 1.0), (0.0, 0.0), start=1, end=2),
            _trip(1, (3.0, 1.0), (4.0, 0.0), start=1, end=2),
        ]
        inst = Instance.build(trips, lots, horizon=3, walking_speed=3.0)
        initial = no_scheme(inst)
        assignment, trace = min_envy(inst)
        assert assignment.dest_lot == initial.dest_lot
        assert len(trace.records) == 1
        assert trace.records[0].frozen_size == 2

    def test_terminates_within_maxiter_plus_one(self):
        for seed in range(12):
            inst = _feasible_tiny(seed + 600)
            if inst is None:
                continue
            params = MinEnvyParams(delta=1e-12, maxiter=4)  # force the cap to bind
            _, trace = min_envy(inst, params)
            assert len(trace.records) <= params.maxiter + 1

    def test_every_iterate_feasible_and_subproblem_optimal(self):
        for seed in range(10):
            inst = _feasible_tiny(seed + 900)
            if inst is None:
                continue
            assignment, trace = min_envy(inst)
            assert _quiet_check(inst, assignment).feasible
            # re-derive each iteration's subproblem and confirm the solved
            # cost never exceeds the cost of keeping the previous assignment
            params = MinEnvyParams()
            current = no_scheme(inst)
            betas = beta_matrix(inst)
            for rec in trace.records:
                beta_prev = np.asarray(current.beta)
                h_prev = fairness.mean_walk(beta_prev)
                frozen_set = fairness.select_S(beta_prev, params.epsilon)
                frozen = {r: current.dest_lot[r] for r in frozen_set}
                costs = np.abs(betas - h_prev)
                solved = solve_exact(inst, costs, frozen)
                scaled = scale_costs(costs)
                solved_cost = sum(
                    int(scaled[l, r]) for r, l in enumerate(solved.dest_lot) if r not in frozen_set
                )
                retained_cost = sum(
                    int(scaled[l, r]) for r, l in enumerate(current.dest_lot) if r not in frozen_set
                )
                assert solved_cost <= retained_cost
                assert rec.frozen_size == len(frozen_set)
                current = solved

    def test_initializer_recorded_and_configurable(self):
        inst = _feasible_tiny(15)
        assert inst is not None
        _, trace_default = min_envy(inst)
        assert trace_default.initializer == "no-scheme"
        _, trace_alt = min_envy(inst, MinEnvyParams(initializer="min-sum"))
        assert trace_alt.initializer == "min-sum"
        assert trace_alt.initial_mean_walk == pytest.approx(
            fairness.mean_walk(min_sum(inst).beta), rel=1e-12
        )

    def test_params_validation(self):
        with pytest.raises(ValueError):
            MinEnvyParams(epsilon=0.0)
        with pytest.raises(ValueError):
            MinEnvyParams(delta=-1.0)
        with pytest.raises(ValueError):
            MinEnvyParams(maxiter=0)
        with pytest.raises(ValueError):
            MinEnvyParams(initializer="nope")


class TestCrossAlgorithm:
    def test_min_sum_never_beaten_on_total_walk(self):
        for seed in range(12):
            inst = _feasible_tiny(seed + 70)
            if inst is None:
                continue
            total_sum = sum(min_sum(inst).beta)
            total_greedy = sum(no_scheme(inst).beta)
            assert total_sum <= total_greedy + 1e-9

    def test_mean_walk_within_per_driver_envelope(self):
        for seed in range(8):
            inst = _feasible_tiny(seed + 130)
            if inst is None:
                continue
            betas = beta_matrix(inst)
            lo = betas.min(axis=0).mean()
            hi = betas.max(axis=0).mean()
            for algo in (min_sum, no_scheme):
                h = fairness.mean_walk(algo(inst).beta)
                assert lo - 1e-12 <= h <= hi + 1e-12
            assignment, _ = min_envy(inst)
            h = fairness.mean_walk(assignment.beta)
            assert lo - 1e-12 <= h <= hi + 1e-12


class TestTrace:
    def test_csv_round_trip(self, tmp_path):
        inst = _feasible_tiny(31)
        assert inst is not None
        _, trace = min_envy(inst)
        out = tmp_path / "trace.csv"
        trace.write_csv(out)
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(trace.records) + 1
        assert rows[0]["iter"] == "0"
        assert rows[0]["S_size"] == ""
        assert float(rows[0]["F_minutes"]) == pytest.approx(
            trace.initial_mean_envy * 60.0, rel=1e-12
        )
        for row, rec in zip(rows[1:], trace.records):
            assert int(row["iter"]) == rec.iteration
            assert float(row["H_minutes"]) == pytest.approx(rec.mean_walk * 60.0, rel=1e-12)
