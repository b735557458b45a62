"""Count time series: simulation, Poisson QMLE and penalized model selection.

The package covers observation-driven count models whose conditional mean
follows an INGARCH(p, q) or piecewise-linear ("knot") recursion, with Poisson,
negative binomial or Bernoulli emissions.  Models are fitted by Poisson
quasi-maximum likelihood whatever the emission, robust sandwich standard
errors are available, and finite collections are compared through the
penalized contrast -2 * loglik + kappa_n * |m|.
"""

from .errors import (
    AllFitsFailed,
    ConstraintViolation,
    ContractionViolation,
    CountselError,
    DataFormatError,
    DomainError,
    FamilyMismatch,
    OptimFailure,
    SingularInformation,
)
from .model import (
    C_LOWER,
    EPS_MARGIN,
    EmissionFamily,
    Ingarch,
    Knot,
    MeanPath,
    ModelSpec,
    ParamVector,
    ValidatedPair,
    contraction_pair,
    knot_basis,
    lambda_path,
    moment_condition_nb,
    stationarity_margin,
    validate,
)
from .montecarlo import (
    CoverageReport,
    ExperimentConfig,
    FrequencyTable,
    IngarchCollection,
    KnotCollection,
    OutcomeClass,
    classify_outcome,
    coverage_study,
    preset,
    run_experiment,
)
from .qmle import FitOptions, FitResult, SandwichInfo, fit, quasi_loglik, quasi_score, sandwich
from .select import (
    Penalty,
    SelectionResult,
    criterion,
    enumerate_ingarch,
    enumerate_knots,
    penalty_value,
    select,
    select_with_penalties,
)
from .simulate import SimConfig, make_rng, read_csv, sample_emission, simulate, write_csv

__version__ = "0.1.0"
