"""Newton's method for singularities of vector fields on Riemannian manifolds."""

from .analysis import (
    RateReport,
    RateThresholds,
    SpreadEstimate,
    classify_distances,
    classify_rate,
    estimate_spread,
    holder_field,
)
from .chart import ChartManifold, ChartSpec, OdeSettings, stereographic_sphere_chart
from .core import Manifold, TangentOperator, banach_invert, operator_norm
from .errors import (
    BasePointError,
    ChartExitError,
    DomainError,
    InjectivityError,
    ManifoldError,
    NonConvergenceError,
    NotOnManifoldError,
    SingularOperatorError,
    UndefinedResidualError,
)
from .manifolds import SPD, Euclidean, Hyperboloid, Sphere, make_manifold
from .newton import ConvergenceTrace, NewtonConfig, Termination, inverse_bound_scan, newton_solve, newton_step
from .problems import ProblemSpec, build_problem, builtin_problems, load_problem_file, lookup
from .vectorfield import VectorField, covariant_derivative, expansion_residual, fd_covariant_derivative

__version__ = "0.1.0"
