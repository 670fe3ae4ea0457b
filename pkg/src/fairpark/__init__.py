"""fairpark: fair parking-lot assignment via iterative envy minimization.

Core layers: `model` (instances, assignments, feasibility), `fairness`
(metrics), `flowcore` (integer min-cost flow), `assign` (exact subproblem
solver + enumeration oracle), `algos` (min-envy, min-sum, no-scheme),
`smartpark` (dynamic allocation comparison), `data` (ingestion and
generators) and `cli` (experiment harness).
"""

from .algos import IterationTrace, MinEnvyParams, min_envy, min_sum, no_scheme
from .fairness import (
    MetricReport,
    compute_metrics,
    envy,
    jains_index,
    mean_envy,
    mean_walk,
    objective_G,
    select_S,
    walking_time,
)
from .flowcore import FlowNetwork, FlowResult, Infeasible, min_cost_flow
from .model import (
    Assignment,
    FeasibilityReport,
    Instance,
    Lot,
    OccupancyLedger,
    Trip,
    assignment_from_lots,
    build_ledger,
    check_feasible,
    compute_origin_lots,
    instance_from_json,
    instance_to_json,
    load_instance,
    save_instance,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "FeasibilityReport",
    "FlowNetwork",
    "FlowResult",
    "Infeasible",
    "Instance",
    "IterationTrace",
    "Lot",
    "MetricReport",
    "MinEnvyParams",
    "OccupancyLedger",
    "Trip",
    "assignment_from_lots",
    "build_ledger",
    "check_feasible",
    "compute_metrics",
    "compute_origin_lots",
    "envy",
    "instance_from_json",
    "instance_to_json",
    "jains_index",
    "load_instance",
    "mean_envy",
    "mean_walk",
    "min_cost_flow",
    "min_envy",
    "min_sum",
    "no_scheme",
    "objective_G",
    "save_instance",
    "select_S",
    "walking_time",
]
