"""Exact finite-n laboratory for conditional limit theorems of the method of types."""

from .conditioning import (
    Ball,
    ConditionalReport,
    DegenerateWeights,
    OverlappingBalls,
    PrefixQuery,
    TypeList,
    ball_concentrations,
    conditional_mass,
    default_epsilon,
    jeffreys_conditional_mass,
    lemma_bound,
    mixture_prediction,
    prefix_given_type,
    prefix_law_exact,
    residual_ratio,
)
from .core import (
    Alphabet,
    Pmf,
    TypeVec,
    count_types,
    enumerate_types,
    kl_divergence,
    log_multiplicity,
    log_type_probability,
    multiplicity,
    symmetric_kl,
    total_variation,
    type_probability,
)
from .feasible import (
    ConvexPiece,
    EmptyTypeSet,
    FeasibleSet,
    InfeasibleSet,
    LinearConstraint,
    contains,
    is_isolated,
    piece_dimension,
    restrict_to_types,
)
from .montecarlo import MCEstimate, mc_conditional
from .optimize import SolverError, SolverOptions
from .projections import (
    NearTieWarning,
    ProjectionSet,
    gamma_projections,
    i_projections,
    j_projections,
    mu_projections,
    or_projections,
    project,
    projection_distance,
)
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
