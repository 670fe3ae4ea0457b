import json
import math
from pathlib import Path

import numpy as np
import pytest

from fairpark import cli, data
from fairpark.cli import (
    ExperimentConfig,
    bootstrap_ci,
    config_from_dict,
    exceedance_curve,
    load_config_file,
    relative_improvement,
    run_batch,
    run_smartpark_compare,
    write_batch_outputs,
    write_smartpark_outputs,
)
from fairpark.model import load_instance


def small_config(**overrides):
    base = dict(
        n_drivers=12,
        n_lots=3,
        trials=3,
        seed=7,
        pool_size=150,
        maxiter=8,
        bootstrap_samples=200,
        exceedance_points=11,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExceedance:
    def test_strictly_greater(self):
        curve = exceedance_curve([1.0, 2.0, 3.0], [2.0])
        assert curve == [(2.0, pytest.approx(1.0 / 3.0))]

    def test_below_min_is_one(self):
        curve = exceedance_curve([1.0, 2.0, 3.0], [0.5])
        assert curve[0][1] == 1.0

    def test_matches_sorted_ecdf_oracle(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0, 5, 200)
        grid = np.linspace(0, 6, 40)
        curve = exceedance_curve(values, grid)
        sorted_vals = np.sort(values)
        for g, p in curve:
            # 1 - ECDF(g) with ECDF counting values <= g
            expected = 1.0 - np.searchsorted(sorted_vals, g, side="right") / len(values)
            assert p == pytest.approx(expected, abs=1e-12)

    def test_monotone_nonincreasing(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(0, 3, 100)
        curve = exceedance_curve(values, np.linspace(0, 4, 50))
        probs = [p for _, p in curve]
        assert all(a >= b for a, b in zip(probs, probs[1:]))
        assert all(0.0 <= p <= 1.0 for p in probs)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            exceedance_curve([], [1.0])


class TestImprovement:
    def test_halving_is_100_pct(self):
        stat = relative_improvement([1.0], [2.0])
        assert stat.mean_pct == pytest.approx(100.0)

    def test_equal_is_zero(self):
        stat = relative_improvement([2.0, 3.0], [2.0, 3.0])
        assert stat.mean_pct == 0.0

    def test_cologne_scale_arithmetic(self):
        stat = relative_improvement([1.0], [2.396])
        assert stat.mean_pct == pytest.approx(139.6, rel=1e-12)

    def test_zero_ours_excluded_and_counted(self):
        stat = relative_improvement([0.0, 1.0], [2.0, 2.0])
        assert stat.excluded == 1
        assert stat.mean_pct == pytest.approx(100.0)

    def test_baseline_denominator_variant(self):
        stat = relative_improvement([1.0], [2.0], denominator="baseline")
        assert stat.mean_pct == pytest.approx(50.0)

    def test_higher_is_better_by_swapping(self):
        # Jain-style: ours 0.91 vs baseline 0.86 -> (ours-base)/base
        stat = relative_improvement([0.86], [0.91])
        assert stat.mean_pct == pytest.approx(100 * (0.91 - 0.86) / 0.86, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            relative_improvement([1.0], [1.0, 2.0])


class TestBootstrap:
    def test_degenerate_constant(self):
        lo, hi = bootstrap_ci([2.0, 2.0, 2.0], n_boot=100, seed=1)
        assert lo == hi == 2.0

    def test_contains_mean_for_reasonable_samples(self):
        rng = np.random.default_rng(2)
        values = rng.normal(5.0, 1.0, 60)
        lo, hi = bootstrap_ci(values, n_boot=500, seed=3)
        assert lo < values.mean() < hi
        assert hi - lo < 2.0

    def test_deterministic(self):
        values = [1.0, 2.0, 3.0, 4.0]
        assert bootstrap_ci(values, seed=9) == bootstrap_ci(values, seed=9)


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            config_from_dict({"n_driverz": 10})

    def test_nested_sections(self):
        cfg = config_from_dict(
            {
                "n_drivers": 30,
                "region": {"min_lon": -74.1, "min_lat": 40.6, "max_lon": -73.9, "max_lat": 40.9},
                "csv_schema": {"pickup_time": "pt"},
                "smartpark": {"n_drivers": 12},
            }
        )
        assert cfg.n_drivers == 30
        assert cfg.region.min_lon == -74.1
        assert cfg.csv_schema.pickup_time == "pt"
        assert cfg.smartpark.n_drivers == 12

    def test_json_config_file(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text(json.dumps({"trials": 9, "seed": 4}))
        assert load_config_file(path) == {"trials": 9, "seed": 4}

    def test_toml_config_file(self, tmp_path):
        path = tmp_path / "conf.toml"
        path.write_text('trials = 9\nseed = 4\n')
        try:
            import tomllib  # noqa: F401
            have_toml = True
        except ImportError:
            try:
                import tomli  # noqa: F401
                have_toml = True
            except ImportError:
                have_toml = False
        if have_toml:
            assert load_config_file(path) == {"trials": 9, "seed": 4}
        else:
            with pytest.raises(RuntimeError, match="JSON config"):
                load_config_file(path)


class TestRunBatch:
    def test_rows_and_summary_shape(self):
        report = run_batch(small_config())
        assert len(report.rows) == 9  # 3 trials x 3 methods
        assert set(report.summary["methods"]) == {"min-envy", "min-sum", "no-scheme"}
        assert set(report.summary["improvements"]) == {"min-sum", "no-scheme"}
        for row in report.rows:
            if row.feasible:
                assert row.f_minutes >= 0
                assert row.h_minutes >= 0
                assert 0 < row.jains <= 1.0 + 1e-12

    def test_deterministic_reports(self):
        a = run_batch(small_config())
        b = run_batch(small_config())
        assert a.rows == b.rows
        assert a.summary == b.summary
        assert a.exceedance == b.exceedance
        assert a.traces == b.traces

    def test_zero_trials(self):
        report = run_batch(small_config(trials=0))
        assert report.rows == ()
        assert report.summary["methods"]["min-envy"]["trials_ok"] == 0

    def test_worker_count_does_not_change_results(self):
        seq = run_batch(small_config())
        par = run_batch(small_config(workers=2))
        assert seq.rows == par.rows
        assert seq.summary == par.summary

    def test_mean_envy_at_most_min_sum_in_aggregate(self):
        report = run_batch(small_config(trials=12, n_drivers=30, n_lots=5, pool_size=400))
        means = report.summary["methods"]
        assert (
            means["min-envy"]["mean_F_minutes"]
            <= means["min-sum"]["mean_F_minutes"] + 1e-9
        )

    def test_outputs_written_and_deterministic(self, tmp_path):
        report = run_batch(small_config())
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        write_batch_outputs(report, out1)
        write_batch_outputs(run_batch(small_config()), out2)
        for name in ("results.csv", "summary.json", "exceedance.csv", "traces.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        assert (out1 / "timings.csv").exists()

    def test_failed_trials_recorded_not_raised(self):
        # pool whose trips all arrive at period 1 and depart at period 2:
        # with tight capacities some trials cannot place every driver
        rng = np.random.default_rng(5)
        pool = []
        for i in range(60):
            lon = float(rng.uniform(-74.0, -73.9))
            lat = float(rng.uniform(40.7, 40.8))
            lon2 = float(rng.uniform(-74.0, -73.9))
            lat2 = float(rng.uniform(40.7, 40.8))
            pool.append(data.RawTrip(80000.0, 80000.0, (lon, lat), (lon2, lat2)))
        # every sampled trip lands on (start=24, end=24) after stretching;
        # occupancies make same-period arrivals exceed some capacity draws
        config = small_config(trials=4, n_drivers=40, n_lots=4)
        rows = []
        for trial in range(config.trials):
            trial_seed = data.derive_seed(config.seed, trial)
            instance = data.sample_trial(pool, config.trial_config(trial_seed))
            rows.append(instance)
        report_rows, _ = cli._run_trial((config, pool, 0))
        assert len(report_rows) == 3  # one per method, failed or not


class TestSmartparkCompare:
    def test_report_shape_and_determinism(self, tmp_path):
        config = small_config(trials=3)
        config = ExperimentConfig(
            **{**config.__dict__, "smartpark": config.smartpark.__class__(n_drivers=10, n_lots=3)}
        )
        a = run_smartpark_compare(config)
        b = run_smartpark_compare(config)
        assert a.summary == b.summary

        def strip_runtime(rows):
            return [{k: v for k, v in r.items() if k != "runtime_ms"} for r in rows]

        assert strip_runtime(a.smartpark_rows) == strip_runtime(b.smartpark_rows)
        assert len(a.rows) == 6  # 3 trials x 2 modes
        assert a.summary["total_cost_violations"] == 0
        out1, out2 = tmp_path / "x", tmp_path / "y"
        write_smartpark_outputs(a, out1)
        write_smartpark_outputs(b, out2)
        for name in ("smartpark_results.csv", "smartpark_summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_single_driver_trivial_zero_improvement(self):
        config = small_config(trials=2)
        config = ExperimentConfig(
            **{**config.__dict__, "smartpark": config.smartpark.__class__(n_drivers=1, n_lots=2)}
        )
        report = run_smartpark_compare(config)
        # one driver: F = 0 in both modes, excluded from the ratio
        assert report.summary["mean_envy_excluded"] == report.summary["trials_compared"]


class TestMainEntry:
    def test_gen_solve_pipeline(self, tmp_path, capsys):
        out = tmp_path / "inst.json"
        rc = cli.main(
            ["gen", "--seed", "3", "--n-drivers", "10", "--n-lots", "3", "--out", str(out)]
        )
        assert rc == 0
        instance = load_instance(out)
        assert instance.n_drivers == 10
        rc = cli.main(["solve", "--instance", str(out), "--method", "min-envy"])
        assert rc == 0
        printed = capsys.readouterr().out
        assert "F = " in printed and "min" in printed

    def test_ingest_writes_instances(self, tmp_path):
        pool = data.gen_synthetic_trips(200, 9)
        src = tmp_path / "pool.csv"
        data.write_trip_csv(pool, src)
        outdir = tmp_path / "instances"
        rc = cli.main(
            [
                "ingest", "--format", "csv", "--input", str(src),
                "--trials", "2", "--n-drivers", "15", "--n-lots", "3",
                "--seed", "1", "--out", str(outdir),
            ]
        )
        assert rc == 0
        files = sorted(outdir.glob("instance_*.json"))
        assert len(files) == 2
        assert load_instance(files[0]).n_drivers == 15

    def test_batch_cli_byte_identical(self, tmp_path):
        args = [
            "batch", "--seed", "42", "--trials", "2", "--n-drivers", "12",
            "--n-lots", "3", "--maxiter", "6",
        ]
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli.main(args + ["--out", str(out1)]) == 0
        assert cli.main(args + ["--out", str(out2)]) == 0
        for name in ("results.csv", "summary.json", "exceedance.csv", "traces.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_config_file_plus_override(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"n_drivers": 10, "n_lots": 3, "trials": 1, "pool_size": 120}))
        out = tmp_path / "r"
        rc = cli.main(["batch", "--config", str(conf), "--seed", "5", "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["n_drivers"] == 10
        assert summary["config"]["seed"] == 5
