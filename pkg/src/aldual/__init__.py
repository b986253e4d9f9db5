"""Exact rational augmented-Lagrangian duality toolkit for mixed integer QP."""

from .numkit import (
    Rat,
    RatMat,
    RatVec,
    ceil_sqrt,
    format_rat,
    ldl_psd_check,
    parse_rat,
    rat,
    solve_linear,
)
from .convexsolve import (
    BoundednessReport,
    INFEASIBLE,
    LinearProgram,
    OPTIMAL,
    QuadraticProgram,
    SolveReport,
    UNBOUNDED,
    check_boundedness,
    solve_lp,
    solve_qp,
)
from .instance import (
    GenConfig,
    MiqpInstance,
    clamp_box,
    generate,
    read_instance,
    validate,
    write_instance,
)
from .penalty import (
    L1,
    LINF,
    Penalty,
    SCALED_LINF,
    SQL2,
    epigraph_rows,
    evaluate,
    level_diam,
    norm_constants,
    parse_penalty,
)
from .ald import (
    IntegerBox,
    RelaxReport,
    SweepRow,
    dual_ascent,
    eval_lr_plus,
    gap_sweep,
    integer_box,
    lambda_bar,
    solve_ip,
    violation_bound_check,
)
from .exactrho import (
    RhoCertificate,
    certify,
    rho_bisect_empirical,
    rho_dual_linf,
    rho_for_lambda,
    rho_for_norm,
    rho_sufficient,
)

__version__ = "0.1.0"

__all__ = [
    "Rat", "RatMat", "RatVec", "ceil_sqrt", "format_rat", "ldl_psd_check",
    "parse_rat", "rat", "solve_linear",
    "BoundednessReport", "INFEASIBLE", "LinearProgram", "OPTIMAL",
    "QuadraticProgram", "SolveReport", "UNBOUNDED", "check_boundedness",
    "solve_lp", "solve_qp",
    "GenConfig", "MiqpInstance", "clamp_box", "generate", "read_instance",
    "validate", "write_instance",
    "L1", "LINF", "Penalty", "SCALED_LINF", "SQL2", "epigraph_rows",
    "evaluate", "level_diam", "norm_constants", "parse_penalty",
    "IntegerBox", "RelaxReport", "SweepRow", "dual_ascent", "eval_lr_plus",
    "gap_sweep", "integer_box", "lambda_bar", "solve_ip",
    "violation_bound_check",
    "RhoCertificate", "certify", "rho_bisect_empirical", "rho_dual_linf",
    "rho_for_lambda", "rho_for_norm", "rho_sufficient",
]
