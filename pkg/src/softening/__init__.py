"""Nonlinear softening indicators for noisy time series approaching a fold."""

__version__ = "0.1.0"

from ._types import Density, TimeSeries
from .dynamics import (
    EnsembleParams,
    EnsembleResult,
    FpGrid,
    FpSolution,
    SnfParams,
    conditional_ensemble,
    simulate_linear,
    simulate_snf,
    stationary_fp_solve,
)
from .errors import EstimationError, ExtinctionError, GridError, SofteningError
from .estimators import (
    IndicatorTrack,
    PotentialSurface,
    TrackConfig,
    WindowIndicators,
    detrend,
    drift_ratio,
    estimate_density,
    estimate_sigma2,
    fit_fp1,
    fit_fp2,
    fit_kappa_acf,
    indicator_track,
    potential_surface,
    sample_skewness,
    skewness,
)
from .pipeline_io import RecordSpec, ingest
from .significance import SensitivityGrid, SurrogateReport, calibration_run, sensitivity_scan, surrogate_test
