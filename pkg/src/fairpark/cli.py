"""Experiment harness and command line interface.

Subcommands:
  gen                synthesize one instance JSON
  ingest             dataset file -> per-trial instance JSONs
  solve              run one method on one instance, print metrics
  batch              seeded batch over trials, all methods, full reports
  compare-smartpark  utility-mode vs fair-mode dynamic simulation batch

All CLI output quotes times in minutes (internally everything is hours).
Written reports (results.csv, summary.json, exceedance.csv, traces.csv) are
deterministic functions of the config and master seed; wall-clock timings go
to a separate timings.csv that is excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import algos, data, fairness, smartpark
from .flowcore import Infeasible
from .model import Instance, load_instance, save_instance

METHODS = ("min-envy", "min-sum", "no-scheme")

# seed-stream tags so trials, pools and bootstraps never collide
_POOL_STREAM = 1 << 40
_BOOTSTRAP_STREAM = (1 << 40) + 1

_RESULT_FIELDS = ["trial", "seed", "method", "feasible", "F_minutes", "H_minutes", "jains", "iterations"]
_TRACE_FIELDS = ["trial", "iter", "H_minutes", "F_minutes", "S_size", "subproblem_cost"]
_SMARTPARK_FIELDS = [
    "trial", "seed", "mode", "n_drivers", "assigned", "unassigned",
    "F_minutes", "H_minutes", "jains", "mean_utility", "cost_violations",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Harness configuration; every key can come from a JSON/TOML config
    file (same names) and be overridden by CLI flags."""

    # instance shape
    n_drivers: int = 100
    n_lots: int = 10
    horizon: int = 24
    walking_speed: float = data.DEFAULT_WALKING_SPEED
    region: data.Region | None = None
    # batch control
    trials: int = 500
    seed: int = 0
    workers: int = 1
    source: str = "synthetic"  # synthetic | csv | sumo
    input_path: str | None = None
    pool_size: int = 2000
    synthetic_hotspots: int = 6
    synthetic_hotspot_spread: float = 0.10
    # algorithm parameters
    epsilon: float = 0.1
    delta: float = 1e-4
    maxiter: int = 20
    initializer: str = "no-scheme"
    # reporting
    improvement_denominator: str = "ours"  # or "baseline"
    exceedance_points: int = 101
    bootstrap_samples: int = 2000
    # ingestion
    csv_schema: data.TripSchema = field(default_factory=data.TripSchema)
    sumo_default_duration_s: float = 900.0
    # dynamic comparison generator
    smartpark: smartpark.ScenarioConfig = field(default_factory=smartpark.ScenarioConfig)
    smartpark_maxiter: int = 10

    def min_envy_params(self) -> algos.MinEnvyParams:
        return algos.MinEnvyParams(
            epsilon=self.epsilon,
            delta=self.delta,
            maxiter=self.maxiter,
            initializer=self.initializer,
        )

    def trial_config(self, trial_seed: int) -> data.TrialConfig:
        return data.TrialConfig(
            n_drivers=self.n_drivers,
            n_lots=self.n_lots,
            horizon=self.horizon,
            seed=trial_seed,
            region=self.region,
            walking_speed=self.walking_speed,
        )


def load_config_file(path) -> dict:
    """Read a JSON or TOML config document into a plain dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # Python 3.11+
        except ImportError:
            try:
                import tomli as tomllib  # type: ignore[no-redef]
            except ImportError as exc:
                raise RuntimeError(
                    "TOML configs need Python 3.11+ or the tomli package; "
                    "use a JSON config instead"
                ) from exc
        return tomllib.loads(text)
    return json.loads(text)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from a plain dict, rejecting unknown keys."""
    doc = dict(doc)
    kwargs = {}
    if "region" in doc:
        reg = doc.pop("region")
        kwargs["region"] = data.Region(**reg) if reg is not None else None
    if "csv_schema" in doc:
        kwargs["csv_schema"] = data.TripSchema(**doc.pop("csv_schema"))
    if "smartpark" in doc:
        kwargs["smartpark"] = smartpark.ScenarioConfig(**doc.pop("smartpark"))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs.update(doc)
    return ExperimentConfig(**kwargs)


# --- report primitives --------------------------------------------------------


def exceedance_curve(values, grid) -> list[tuple[float, float]]:
    """Empirical survival function: P(value > gamma) for each grid point."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValueError("exceedance curve needs at least one value")
    return [(float(g), float(np.mean(vals > g))) for g in np.asarray(grid, dtype=float)]


@dataclass(frozen=True)
class ImprovementStat:
    """Mean per-trial relative improvement of `ours` over `baseline`, as a
    percentage. Trials with a nonpositive denominator are excluded and
    counted."""

    mean_pct: float
    excluded: int
    per_trial_pct: tuple[float, ...]


def relative_improvement(ours, baseline, denominator: str = "ours") -> ImprovementStat:
    """Per-trial (baseline - ours) / denominator as a percentage, averaged.

    With denominator="ours" (default) a halving of the metric reports 100%.
    For higher-is-better metrics call with the roles swapped:
    relative_improvement(baseline_vals, ours_vals, "ours") gives
    (ours - baseline)/baseline.
    """
    if denominator not in ("ours", "baseline"):
        raise ValueError("denominator must be 'ours' or 'baseline'")
    ours = np.asarray(ours, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if ours.shape != baseline.shape:
        raise ValueError("ours and baseline must have the same length")
    pcts = []
    excluded = 0
    for o, b in zip(ours, baseline):
        den = o if denominator == "ours" else b
        if den <= 0:
            excluded += 1
            continue
        pcts.append(100.0 * (b - o) / den)
    mean = float(np.mean(pcts)) if pcts else float("nan")
    return ImprovementStat(mean_pct=mean, excluded=excluded, per_trial_pct=tuple(pcts))


def bootstrap_ci(values, n_boot: int = 2000, seed: int = 0, alpha: float = 0.05) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean of `values`."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return (float("nan"), float("nan"))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, vals.size, size=(n_boot, vals.size))
    means = vals[idx].mean(axis=1)
    return (
        float(np.quantile(means, alpha / 2.0)),
        float(np.quantile(means, 1.0 - alpha / 2.0)),
    )


# --- static batch ---------------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    method: str
    feasible: bool
    f_minutes: float | None
    h_minutes: float | None
    jains: float | None
    iterations: int
    # wall clock is reporting metadata, not part of the result's identity
    runtime_ms: float = field(compare=False, default=0.0)


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[TrialRow, ...]
    summary: dict
    exceedance: tuple[dict, ...] = ()
    traces: tuple[dict, ...] = ()
    smartpark_rows: tuple[dict, ...] = ()


def _load_pool(config: ExperimentConfig) -> list[data.RawTrip]:
    if config.source == "synthetic":
        pool_n = max(config.pool_size, 10 * config.n_drivers)
        return data.gen_synthetic_trips(
            pool_n,
            data.derive_seed(config.seed, _POOL_STREAM),
            region=config.region,
            n_hotspots=config.synthetic_hotspots,
            hotspot_spread=config.synthetic_hotspot_spread,
        )
    if config.input_path is None:
        raise ValueError(f"source '{config.source}' needs input_path")
    if config.source == "csv":
        parsed = data.parse_trip_csv(config.input_path, config.csv_schema, config.region)
    elif config.source == "sumo":
        parsed = data.parse_sumo_trips(
            config.input_path, config.sumo_default_duration_s, config.region
        )
    else:
        raise ValueError(f"unknown source '{config.source}'")
    if parsed.dropped:
        print(f"note: dropped {parsed.dropped} unusable rows from {config.input_path}")
    return list(parsed.trips)


def _run_trial(args) -> tuple[list[TrialRow], list[dict]]:
    config, pool, trial = args
    trial_seed = data.derive_seed(config.seed, trial)
    instance = data.sample_trial(pool, config.trial_config(trial_seed))
    rows: list[TrialRow] = []
    trace_rows: list[dict] = []
    for method in METHODS:
        start = time.perf_counter()
        iterations = 0
        try:
            if method == "min-envy":
                assignment, trace = algos.min_envy(instance, config.min_envy_params())
                iterations = len(trace.records)
                for row in trace.csv_rows():
                    trace_rows.append({"trial": trial, **row})
            elif method == "min-sum":
                assignment = algos.min_sum(instance)
            else:
                assignment = algos.no_scheme(instance)
        except Infeasible:
            rows.append(
                TrialRow(trial, trial_seed, method, False, None, None, None, 0,
                         (time.perf_counter() - start) * 1e3)
            )
            continue
        report = fairness.compute_metrics(assignment.beta)
        rows.append(
            TrialRow(
                trial=trial,
                seed=trial_seed,
                method=method,
                feasible=True,
                f_minutes=report.mean_envy * 60.0,
                h_minutes=report.mean_walk * 60.0,
                jains=report.jains,
                iterations=iterations,
                runtime_ms=(time.perf_counter() - start) * 1e3,
            )
        )
    return rows, trace_rows


def run_batch(config: ExperimentConfig) -> ExperimentReport:
    """Sample `trials` instances and run every method on each.

    Infeasible trials are recorded as failed rows and the batch continues.
    Deterministic in (config, seed) regardless of worker count.
    """
    pool = _load_pool(config)
    jobs = [(config, pool, t) for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            outcomes = list(ex.map(_run_trial, jobs))
    else:
        outcomes = [_run_trial(j) for j in jobs]

    rows: list[TrialRow] = []
    traces: list[dict] = []
    for trial_rows, trace_rows in outcomes:
        rows.extend(trial_rows)
        traces.extend(trace_rows)
    rows.sort(key=lambda r: (r.trial, METHODS.index(r.method)))
    traces.sort(key=lambda r: (r["trial"], r["iter"]))

    summary = _summarize_batch(config, rows)
    exceed = _exceedance_rows(config, rows)
    return ExperimentReport(
        rows=tuple(rows), summary=summary, exceedance=tuple(exceed), traces=tuple(traces)
    )


def _method_values(rows, method: str, attr: str) -> dict[int, float]:
    return {
        r.trial: getattr(r, attr)
        for r in rows
        if r.method == method and r.feasible and getattr(r, attr) is not None
    }


def _summarize_batch(config: ExperimentConfig, rows) -> dict:
    summary: dict = {
        "config": {
            "n_drivers": config.n_drivers,
            "n_lots": config.n_lots,
            "horizon": config.horizon,
            "trials": config.trials,
            "seed": config.seed,
            "source": config.source,
            "epsilon": config.epsilon,
            "delta_hours": config.delta,
            "maxiter": config.maxiter,
            "initializer": config.initializer,
            "walking_speed": config.walking_speed,
            "improvement_denominator": config.improvement_denominator,
        },
        "methods": {},
        "improvements": {},
    }
    for method in METHODS:
        f_vals = _method_values(rows, method, "f_minutes")
        h_vals = _method_values(rows, method, "h_minutes")
        j_vals = _method_values(rows, method, "jains")
        ok = len(f_vals)
        summary["methods"][method] = {
            "trials_ok": ok,
            "trials_failed": sum(1 for r in rows if r.method == method and not r.feasible),
            "mean_F_minutes": float(np.mean(list(f_vals.values()))) if ok else None,
            "median_F_minutes": float(np.median(list(f_vals.values()))) if ok else None,
            "mean_H_minutes": float(np.mean(list(h_vals.values()))) if ok else None,
            "mean_jains": float(np.mean(list(j_vals.values()))) if ok else None,
        }

    ours_f = _method_values(rows, "min-envy", "f_minutes")
    ours_j = _method_values(rows, "min-envy", "jains")
    boot_seed = data.derive_seed(config.seed, _BOOTSTRAP_STREAM)
    for baseline in ("min-sum", "no-scheme"):
        base_f = _method_values(rows, baseline, "f_minutes")
        base_j = _method_values(rows, baseline, "jains")
        common = sorted(set(ours_f) & set(base_f))
        if not common:
            summary["improvements"][baseline] = None
            continue
        o = [ours_f[t] for t in common]
        b = [base_f[t] for t in common]
        imp = relative_improvement(o, b, config.improvement_denominator)
        diff = [bv - ov for ov, bv in zip(o, b)]
        diff_ci = bootstrap_ci(diff, config.bootstrap_samples, boot_seed)
        # Jain is higher-is-better: swap roles so positive means we improved
        common_j = sorted(set(ours_j) & set(base_j))
        jain_imp = relative_improvement(
            [base_j[t] for t in common_j], [ours_j[t] for t in common_j], "ours"
        )
        summary["improvements"][baseline] = {
            "trials": len(common),
            "F_mean_improvement_pct": imp.mean_pct,
            "F_improvement_excluded": imp.excluded,
            "F_diff_minutes_ci95": list(diff_ci),
            "jains_mean_improvement_pct": jain_imp.mean_pct,
            "jains_improvement_excluded": jain_imp.excluded,
        }
    return summary


def _exceedance_rows(config: ExperimentConfig, rows) -> list[dict]:
    out: list[dict] = []
    f_by_method = {m: list(_method_values(rows, m, "f_minutes").values()) for m in METHODS}
    max_f = max((max(v) for v in f_by_method.values() if v), default=0.0)
    f_grid = np.linspace(0.0, max_f if max_f > 0 else 1.0, config.exceedance_points)
    j_grid = np.linspace(0.0, 1.0, config.exceedance_points)
    for method in METHODS:
        f_vals = f_by_method[method]
        j_vals = list(_method_values(rows, method, "jains").values())
        if f_vals:
            for g, p in exceedance_curve(f_vals, f_grid):
                out.append({"metric": "F_minutes", "method": method, "gamma": g, "probability": p})
        if j_vals:
            for g, p in exceedance_curve(j_vals, j_grid):
                out.append({"metric": "jains", "method": method, "gamma": g, "probability": p})
    return out


def _fmt(value) -> str:
    """Deterministic CSV cell rendering (floats via repr round-trip)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_batch_outputs(report: ExperimentReport, outdir) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "results.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RESULT_FIELDS)
        for r in report.rows:
            writer.writerow(
                [r.trial, r.seed, r.method, _fmt(r.feasible), _fmt(r.f_minutes),
                 _fmt(r.h_minutes), _fmt(r.jains), r.iterations]
            )
    (outdir / "summary.json").write_text(json.dumps(report.summary, sort_keys=True, indent=2) + "\n")
    with (outdir / "exceedance.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "method", "gamma", "probability"])
        for row in report.exceedance:
            writer.writerow([row["metric"], row["method"], _fmt(row["gamma"]), _fmt(row["probability"])])
    with (outdir / "traces.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_FIELDS)
        for row in report.traces:
            writer.writerow([_fmt(row[k]) for k in _TRACE_FIELDS])
    # wall-clock sidecar; the only non-deterministic output
    with (outdir / "timings.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "method", "runtime_ms"])
        for r in report.rows:
            writer.writerow([r.trial, r.method, _fmt(r.runtime_ms)])


# --- dynamic comparison ---------------------------------------------------------


def run_smartpark_compare(config: ExperimentConfig) -> ExperimentReport:
    """Per trial: generate a scenario, simulate both objective modes, and
    aggregate fairness improvements of fair mode over utility mode."""
    params = algos.MinEnvyParams(
        epsilon=config.epsilon, delta=config.delta, maxiter=config.smartpark_maxiter,
        initializer=config.initializer,
    )
    rows: list[dict] = []
    per_mode_f: dict[str, dict[int, float]] = {"utility": {}, "fair": {}}
    per_mode_j: dict[str, dict[int, float]] = {"utility": {}, "fair": {}}
    for trial in range(config.trials):
        trial_seed = data.derive_seed(config.seed, trial)
        scenario = smartpark.gen_scenario(config.smartpark, trial_seed)
        spec = smartpark.build_utility_spec(scenario)
        for mode in smartpark.MODES:
            start = time.perf_counter()
            sim = smartpark.simulate(scenario, spec, mode, params)
            runtime_ms = (time.perf_counter() - start) * 1e3
            violations = smartpark.cost_improvement_violations(sim)
            assigned = [u for u in sim.final_utility.values() if u is not None]
            row = {
                "trial": trial,
                "seed": trial_seed,
                "mode": mode,
                "n_drivers": scenario.n_drivers,
                "assigned": len(assigned),
                "unassigned": len(sim.unassigned),
                "F_minutes": sim.metrics.mean_envy * 60.0 if sim.metrics else None,
                "H_minutes": sim.metrics.mean_walk * 60.0 if sim.metrics else None,
                "jains": sim.metrics.jains if sim.metrics else None,
                "mean_utility": float(np.mean(assigned)) if assigned else None,
                "cost_violations": len(violations),
                "runtime_ms": runtime_ms,
            }
            rows.append(row)
            if sim.metrics:
                per_mode_f[mode][trial] = sim.metrics.mean_envy * 60.0
                per_mode_j[mode][trial] = sim.metrics.jains

    common = sorted(set(per_mode_f["utility"]) & set(per_mode_f["fair"]))
    boot_seed = data.derive_seed(config.seed, _BOOTSTRAP_STREAM)
    f_imp = relative_improvement(
        [per_mode_f["fair"][t] for t in common],
        [per_mode_f["utility"][t] for t in common],
        config.improvement_denominator,
    )
    j_imp = relative_improvement(
        [per_mode_j["utility"][t] for t in common],
        [per_mode_j["fair"][t] for t in common],
        "ours",
    )
    f_imp_ci = bootstrap_ci(f_imp.per_trial_pct, config.bootstrap_samples, boot_seed)
    j_imp_ci = bootstrap_ci(j_imp.per_trial_pct, config.bootstrap_samples, boot_seed + 1)
    summary = {
        "config": {
            "trials": config.trials,
            "seed": config.seed,
            "n_drivers": config.smartpark.n_drivers,
            "n_lots": config.smartpark.n_lots,
            "horizon": config.smartpark.horizon,
            "epsilon": config.epsilon,
            "delta": config.delta,
            "maxiter": config.smartpark_maxiter,
            "improvement_denominator": config.improvement_denominator,
        },
        "trials_compared": len(common),
        "mean_envy_improvement_pct": f_imp.mean_pct,
        "mean_envy_improvement_ci95": list(f_imp_ci),
        "mean_envy_excluded": f_imp.excluded,
        "jains_improvement_pct": j_imp.mean_pct,
        "jains_improvement_ci95": list(j_imp_ci),
        "jains_excluded": j_imp.excluded,
        "total_cost_violations": sum(r["cost_violations"] for r in rows),
    }
    trial_rows = tuple(
        TrialRow(
            trial=r["trial"], seed=r["seed"], method=r["mode"],
            feasible=r["F_minutes"] is not None,
            f_minutes=r["F_minutes"], h_minutes=r["H_minutes"], jains=r["jains"],
            iterations=0, runtime_ms=r["runtime_ms"],
        )
        for r in rows
    )
    return ExperimentReport(rows=trial_rows, summary=summary, smartpark_rows=tuple(rows))


def write_smartpark_outputs(report: ExperimentReport, outdir) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = report.smartpark_rows
    with (outdir / "smartpark_results.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SMARTPARK_FIELDS)
        for r in rows:
            writer.writerow([_fmt(r[k]) for k in _SMARTPARK_FIELDS])
    (outdir / "smartpark_summary.json").write_text(
        json.dumps(report.summary, sort_keys=True, indent=2) + "\n"
    )
    with (outdir / "timings.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "mode", "runtime_ms"])
        for r in rows:
            writer.writerow([r["trial"], r["mode"], _fmt(r["runtime_ms"])])


# --- command line ----------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--config", type=str, default=None, help="JSON/TOML config file")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None, help="convergence tolerance, hours")
    parser.add_argument("--maxiter", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--n-drivers", type=int, default=None)
    parser.add_argument("--n-lots", type=int, default=None)
    parser.add_argument("--out", type=str, default=None, help="output directory")


def _merged_config(args) -> ExperimentConfig:
    doc = load_config_file(args.config) if args.config else {}
    config = config_from_dict(doc)
    overrides = {}
    for flag, key in [
        ("seed", "seed"), ("trials", "trials"), ("epsilon", "epsilon"),
        ("delta", "delta"), ("maxiter", "maxiter"), ("workers", "workers"),
        ("n_drivers", "n_drivers"), ("n_lots", "n_lots"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    for flag, key in [("source", "source"), ("input", "input_path")]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return replace(config, **overrides)


def _print_metrics(label: str, report: fairness.MetricReport, iterations: int | None = None) -> None:
    bits = [
        f"F = {report.mean_envy * 60.0:.3f} min",
        f"H = {report.mean_walk * 60.0:.3f} min",
        f"Jain = {report.jains:.4f}",
    ]
    if iterations is not None:
        bits.append(f"iterations = {iterations}")
    print(f"{label}: " + ", ".join(bits))


def cmd_gen(args) -> int:
    config = _merged_config(args)
    pool = _load_pool(config)
    instance = data.sample_trial(pool, config.trial_config(data.derive_seed(config.seed, 0)))
    out = Path(args.out or "instance.json")
    if out.is_dir():
        out = out / "instance.json"
    save_instance(instance, out)
    print(f"wrote {out} ({instance.n_drivers} drivers, {instance.n_lots} lots)")
    return 0


def cmd_ingest(args) -> int:
    config = _merged_config(args)
    if config.input_path is None:
        print("ingest needs --input", file=sys.stderr)
        return 2
    pool = _load_pool(config)
    outdir = Path(args.out or "instances")
    outdir.mkdir(parents=True, exist_ok=True)
    for trial in range(config.trials):
        trial_seed = data.derive_seed(config.seed, trial)
        instance = data.sample_trial(pool, config.trial_config(trial_seed))
        save_instance(instance, outdir / f"instance_{trial:04d}.json")
    print(f"wrote {config.trials} instances to {outdir}")
    return 0


def cmd_solve(args) -> int:
    config = _merged_config(args)
    instance = load_instance(args.instance)
    if args.method == "min-envy":
        assignment, trace = algos.min_envy(instance, config.min_envy_params())
        _print_metrics("min-envy", fairness.compute_metrics(assignment.beta), len(trace.records))
        if args.trace_out:
            trace.write_csv(args.trace_out)
            print(f"trace written to {args.trace_out}")
    elif args.method == "min-sum":
        assignment = algos.min_sum(instance)
        _print_metrics("min-sum", fairness.compute_metrics(assignment.beta))
    else:
        assignment = algos.no_scheme(instance)
        _print_metrics("no-scheme", fairness.compute_metrics(assignment.beta))
    return 0


def cmd_batch(args) -> int:
    config = _merged_config(args)
    report = run_batch(config)
    outdir = Path(args.out or "batch_out")
    write_batch_outputs(report, outdir)
    for method, stats in report.summary["methods"].items():
        mean_f = stats["mean_F_minutes"]
        shown = f"{mean_f:.3f}" if mean_f is not None else "n/a"
        print(f"{method}: mean F = {shown} min over {stats['trials_ok']} trials")
    for baseline, imp in report.summary["improvements"].items():
        if imp:
            print(f"min-envy vs {baseline}: F improvement {imp['F_mean_improvement_pct']:.1f}%")
    print(f"reports written to {outdir}")
    return 0


def cmd_compare_smartpark(args) -> int:
    config = _merged_config(args)
    report = run_smartpark_compare(config)
    outdir = Path(args.out or "smartpark_out")
    write_smartpark_outputs(report, outdir)
    s = report.summary
    print(
        f"fair vs utility over {s['trials_compared']} trials: "
        f"mean envy improvement {s['mean_envy_improvement_pct']:.2f}%, "
        f"Jain improvement {s['jains_improvement_pct']:.2f}%"
    )
    print(f"reports written to {outdir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fairpark",
        description="Fair parking-lot assignment experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize one instance JSON")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest", help="dataset file -> per-trial instance JSONs")
    _add_common(p)
    p.add_argument("--format", dest="source", choices=["csv", "sumo"], required=True)
    p.add_argument("--input", type=str, required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("solve", help="run one method on one instance JSON")
    _add_common(p)
    p.add_argument("--instance", type=str, required=True)
    p.add_argument("--method", choices=list(METHODS), default="min-envy")
    p.add_argument("--trace-out", type=str, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("batch", help="run a seeded batch of trials")
    _add_common(p)
    p.add_argument("--source", choices=["synthetic", "csv", "sumo"], default=None)
    p.add_argument("--input", type=str, default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("compare-smartpark", help="utility vs fair dynamic simulation")
    _add_common(p)
    p.set_defaults(func=cmd_compare_smartpark)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
