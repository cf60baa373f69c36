"""Newton-type minimization methods with convergence-area analysis.

Classical Newton, damped Newton (fixed step and Armijo backtracking),
regularized Newton and the damped regularized Newton method, plus tools to
compute convergence-area radii and step bounds and to audit traces.
"""

from .analysis import (
    AuditReport,
    BasinCell,
    RateClassification,
    RegionReport,
    affine_invariance_check,
    audit_decrease,
    basin_map_1d,
    classify_rate,
    region_report,
    region_report_for,
    sublevel_radius,
)
from .directions import conditioning, direction_quality, newton_direction, regularized_direction
from .errors import NewtonLabError
from .problems import (
    AnalyticConstants,
    Objective,
    ProblemInstance,
    RootFunction,
    builtin_problems,
    check_oracle,
    get_problem,
)
from .solvers import (
    IterationRecord,
    SolveResult,
    SolverConfig,
    Status,
    classical_newton,
    dnm_backtracking,
    dnm_fixed,
    drnm,
    newton_root_1d,
    rnm_pure,
    solve,
)
from .traceio import read_trace, write_trace

__version__ = "0.1.0"
