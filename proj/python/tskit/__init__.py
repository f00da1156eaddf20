"""Matrix-free tools for black-box cycle maps.

Fixed points by the Recursive Projection Method, Floquet multipliers by
Arnoldi, pseudo-arclength continuation, and coarse projective integration.
"""

from ._tskit import (
    AdsorptionColumnModel,
    BranchPoint,
    BranchResult,
    CflViolation,
    ConfigError,
    DirectResult,
    EnvelopeTrajectory,
    Error,
    FixedPointResult,
    FloquetResult,
    FoldRecord,
    ForcedOscillatorModel,
    FunctionTimestepper,
    IncomparableRuns,
    InitialSolveFailed,
    LinearMapModel,
    NegativeConcentration,
    NotAFixedPoint,
    QuadraticMap,
    RitzPair,
    RunReport,
    Timestepper,
    UnstableEnvelope,
    adaptive_jump_cap,
    detect_fold,
    direct_simulation,
    floquet_multipliers,
    projective_run,
    rpm_solve,
    run_config,
    speedup,
    trace_branch,
    validate_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
