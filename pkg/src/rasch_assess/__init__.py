"""Rasch rating-scale calibration for success-factor readiness assessments.

Pipeline: parse a factor catalog, team responses, and an organization target
profile; code target-minus-current gaps into ordinal categories; calibrate
item difficulties, person measures, and shared thresholds by joint maximum
likelihood; validate with infit/outfit; and rank factors from hardest to
easiest to implement.
"""

from .backend import ACTIVE_BACKEND, available_backends
from .catalog import (
    FactorCatalog,
    FactorGroup,
    SuccessFactor,
    default_catalog,
    load_catalog,
    serialize_catalog,
)
from .engine import (
    CalibrationConfig,
    CalibrationResult,
    ItemParameters,
    PersonParameters,
    calibrate,
    category_probability,
    expected_score,
    initialize,
    score_variance,
    standard_errors,
)
from .errors import (
    DegenerateCellError,
    InsufficientDataError,
    RaschAssessError,
    ValidationError,
)
from .fit import (
    DEFAULT_BAND,
    STRICT_BAND,
    FitFlag,
    FitReport,
    FitStatistic,
    fit_statistics,
    flag_fit,
    standardized_residual,
)
from .ingest import (
    CodedMatrix,
    RespondentRecord,
    TargetProfile,
    build_coded_matrix,
    code_delta,
    compute_delta,
    parse_responses,
    parse_targets,
)
from .oracle import GridSpec, OracleEstimates, SimulationSpec, grid_calibrate, simulate
from .report import (
    RankedItem,
    RankingReport,
    rank_items,
    render,
    report_from_json,
    wright_map,
)

__version__ = "0.1.0"
