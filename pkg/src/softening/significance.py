"""Significance of nonlinear indicators against matched linear surrogates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._types import TimeSeries
from .dynamics import SnfParams, simulate_linear, simulate_snf
from .errors import EstimationError, SofteningError
from .estimators import INDICATORS, MIN_WINDOW, TrackConfig, indicator_track

__all__ = [
    "NONLINEAR",
    "CONTOUR_LEVELS",
    "CALIBRATION_CONFIG",
    "SurrogateReport",
    "SensitivityGrid",
    "CalibrationResult",
    "percentile_of",
    "surrogate_test",
    "sensitivity_scan",
    "calibration_run",
]

NONLINEAR = ("c_emp", "n2", "gamma")
CONTOUR_LEVELS = (10, 20, 30, 40, 50, 60, 70, 80, 90, 95)

# one window over a stationary series, trend close to the series mean
CALIBRATION_CONFIG = TrackConfig(window=1.0, detrend_bandwidth=1.0)


def percentile_of(observed, values):
    """Percentile of ``observed`` among finite ``values``, ties counted half."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0 or not math.isfinite(observed):
        return math.nan
    below = np.count_nonzero(v < observed)
    equal = np.count_nonzero(v == observed)
    return 100.0 * (below + 0.5 * equal) / v.size


@dataclass(frozen=True)
class SurrogateReport:
    indicator_name: str
    observed_mean: float
    surrogate_values: np.ndarray
    percentile: float
    n_surrogates: int
    matched_kappa: float
    matched_sigma2: float
    matched_length: int
    matched_dt: float
    config_digest: str = ""

    @property
    def n_valid(self):
        return int(np.count_nonzero(np.isfinite(self.surrogate_values)))

    def extreme(self, lo=5.0, hi=95.0):
        return self.percentile < lo or self.percentile > hi


def surrogate_test(
    ts: TimeSeries,
    config: TrackConfig | None = None,
    indicator_set=NONLINEAR,
    n_surrogates=500,
    seed=0,
    how="mean",
):
    """Compare each indicator's window average with linear surrogates.

    Surrogate ``i`` is a full-length linear series generated with seed
    ``seed ^ i`` whose decay rate and noise variance are the window averages
    of ``kappa_acf`` and ``sigma2_emp`` on ``ts``. Every surrogate is
    analysed with the same configuration. Returns ``{name: SurrogateReport}``.
    """
    config = config or TrackConfig()
    unknown = set(indicator_set) - set(INDICATORS)
    if unknown:
        raise ValueError(f"unknown indicators {sorted(unknown)}")
    if n_surrogates < 1:
        raise ValueError("n_surrogates must be at least 1")
    observed = indicator_track(ts, config)
    kappa = observed.summary("kappa_acf", how)
    sigma2 = observed.summary("sigma2_emp", how)
    if not (math.isfinite(kappa) and kappa > 0):
        raise EstimationError("decay rate out of domain on the observed series; no matched surrogate exists")
    if not (math.isfinite(sigma2) and sigma2 > 0):
        raise EstimationError("noise variance could not be estimated on the observed series")
    n, dt = len(ts), ts.dt

    values = {k: np.full(n_surrogates, math.nan) for k in indicator_set}
    for i in range(n_surrogates):
        sur = simulate_linear(kappa, math.sqrt(sigma2), dt, n, seed=int(seed) ^ i, t0=float(ts.times[0]))
        track = indicator_track(sur, config)
        if track.config_digest != observed.config_digest:
            raise RuntimeError("surrogate analysed with a different configuration")
        for k in indicator_set:
            values[k][i] = track.summary(k, how)

    reports = {}
    for k in indicator_set:
        obs = observed.summary(k, how)
        reports[k] = SurrogateReport(
            indicator_name=k,
            observed_mean=obs,
            surrogate_values=values[k],
            percentile=percentile_of(obs, values[k]),
            n_surrogates=n_surrogates,
            matched_kappa=kappa,
            matched_sigma2=sigma2,
            matched_length=n,
            matched_dt=dt,
            config_digest=observed.config_digest,
        )
    return reports


def _log2_grid(lo, hi, n):
    return np.exp2(np.linspace(lo, hi, n))


@dataclass(frozen=True)
class SensitivityGrid:
    """Surrogate percentiles over (window, bandwidth) pairs.

    ``percentile[name]`` has shape ``(len(window_fractions),
    len(bandwidth_fractions))``; failed cells are NaN.
    """

    window_fractions: np.ndarray
    bandwidth_fractions: np.ndarray
    percentile: dict
    n_surrogates: int
    contour_levels: tuple = CONTOUR_LEVELS
    errors: dict = field(default_factory=dict, compare=False)


def sensitivity_scan(
    ts: TimeSeries,
    window_fractions=None,
    bandwidth_fractions=None,
    indicator_set=NONLINEAR,
    n_surrogates=100,
    seed=0,
    base_config: TrackConfig | None = None,
) -> SensitivityGrid:
    """Rerun :func:`surrogate_test` for every window and detrending bandwidth.

    Fractions are relative to the series length. Defaults are seven
    log2-spaced values over [1/8, 1] for windows and [1/64, 1/2] for
    bandwidths.
    """
    base = base_config or TrackConfig()
    wf = _log2_grid(-3, 0, 7) if window_fractions is None else np.asarray(window_fractions, dtype=float)
    bf = _log2_grid(-6, -1, 7) if bandwidth_fractions is None else np.asarray(bandwidth_fractions, dtype=float)
    n = len(ts)
    if np.any(wf <= 0) or np.any(wf > 1) or np.any(bf <= 0):
        raise ValueError("window fractions must lie in (0, 1] and bandwidth fractions be positive")
    if np.any(np.round(wf * n) < MIN_WINDOW):
        raise ValueError(f"every window must hold at least {MIN_WINDOW} samples")
    out = {k: np.full((wf.size, bf.size), math.nan) for k in indicator_set}
    errors = {}
    for i, w in enumerate(wf):
        for j, b in enumerate(bf):
            # config values above 1 are sample counts
            cfg = replace(base, window=float(w), detrend_bandwidth=float(b) if b <= 1 else float(b) * n)
            try:
                reports = surrogate_test(ts, cfg, indicator_set, n_surrogates, seed)
            except SofteningError as exc:
                errors[(i, j)] = str(exc)
                continue
            for k in indicator_set:
                out[k][i, j] = reports[k].percentile
    return SensitivityGrid(wf, bf, out, n_surrogates, CONTOUR_LEVELS, errors)


@dataclass(frozen=True)
class CalibrationResult:
    """Indicator values per series for the normal-form and linear branches.

    Series too short to analyse contribute NaN.
    """

    mu: float
    snf: dict
    linear: dict
    snf_lengths: np.ndarray

    def quartiles(self, branch, name):
        v = getattr(self, branch)[name]
        return np.nanpercentile(v, [25, 50, 75])

    def iqr_disjoint(self, name):
        a, b = self.quartiles("snf", name), self.quartiles("linear", name)
        return bool(a[2] < b[0] or b[2] < a[0])


def _summaries(ts, config, names):
    try:
        track = indicator_track(ts, config)
    except SofteningError:
        return dict.fromkeys(names, math.nan)
    return {k: track.summary(k) for k in names}


def calibration_run(
    mu=1.0,
    sigma=1.0,
    n_series=100,
    n_max=2000,
    dt=0.1,
    escape_level=-1.0,
    seed=0,
    config: TrackConfig = CALIBRATION_CONFIG,
    indicator_set=INDICATORS,
) -> CalibrationResult:
    """Normal-form series against linear series with decay rate 2 sqrt(mu).

    Normal-form series start at the stable state and stop at ``n_max``
    samples or on escape (the escape sample is dropped before analysis);
    linear series always have ``n_max`` samples.
    """
    seeds = np.random.SeedSequence(seed).generate_state(2 * n_series, dtype=np.uint64)
    snf = {k: np.full(n_series, math.nan) for k in indicator_set}
    lin = {k: np.full(n_series, math.nan) for k in indicator_set}
    lengths = np.empty(n_series, dtype=int)
    for i in range(n_series):
        p = SnfParams(mu0=mu, sigma=sigma, dt=dt, n_max=n_max, escape_level=escape_level, seed=int(seeds[i]))
        s = simulate_snf(p)
        lengths[i] = len(s)
        for k, v in _summaries(s.trimmed(), config, indicator_set).items():
            snf[k][i] = v
        ln = simulate_linear(2.0 * math.sqrt(mu), sigma, dt, n_max, seed=int(seeds[n_series + i]))
        for k, v in _summaries(ln, config, indicator_set).items():
            lin[k][i] = v
    return CalibrationResult(mu, snf, lin, lengths)
