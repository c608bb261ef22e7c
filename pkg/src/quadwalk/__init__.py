"""Numerics for reflected random walks in the quadrant.

The package declares piecewise-homogeneous walks on the lattice quadrant,
validates them, and computes the analytic quantities governing their
long-range behavior: kernel roots, implicit branches, the critical angle
and its rationality verdict, stationary measures and escape speeds of the
induced chains, exact and Monte-Carlo Green functions, escape
probabilities, and the Martin-kernel limit family along the critical
direction.
"""

__version__ = "0.1.0"

from .model import (
    DriftVector,
    InducedChain,
    ModelReport,
    QuadrantModel,
    StepDistribution,
    drift,
    induced_chain,
    moment_transform,
    validate_model,
)
from .modelio import load_model, parse_model_text
from .kernel import (
    KernelAnalysis,
    KernelEvaluator,
    RationalityVerdict,
    analyze,
    branch_Y0,
    branch_Y1,
    classify_t0,
    critical_angle,
    derivatives_at_one,
    item8_check,
    one_d_root,
    torus_check,
)
from .chains import ChainSolution, TailEstimate, solve_chain, stationary, speed, tail_constant
from .simulate import (
    HittingReport,
    PathConfig,
    fluid_limit_experiment,
    hitting_times,
    simulate_path,
    transience_probe,
)
from .green import (
    ContourOracle,
    EscapeProbabilities,
    EscapeSolve,
    GeneratingFunctions,
    GreenTable,
    Truncation,
    contour_green_oracle,
    escape_exact,
    escape_mc,
    green_exact,
    green_mc,
)
from .asymptotics import (
    MartinLimitSet,
    Thm1Report,
    Thm2Report,
    Thm3Report,
    boundary_spectrum,
    martin_kernel,
    verify_thm1,
    verify_thm2,
    verify_thm3,
)

__all__ = [name for name in dir() if not name.startswith("_")]
