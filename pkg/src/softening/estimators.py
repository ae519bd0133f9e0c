"""Linear and nonlinear indicators from quasi-stationary densities.

The procedure per series:

1. detrend with a Gaussian kernel smoother, giving residuals ``xt``;
2. for each sliding window, estimate the density ``p`` of ``xt`` by KDE;
3. fit the integrated stationary Fokker-Planck relation

       p'/2 = -kappa_u * xt * p + c_emp                    (linear drift)
       p'/2 = (-kappa_u * xt + n2 * xt^2) * p + c_emp2     (quadratic drift)

   over the supported grid, take the skewness of ``p``, and the lag-1
   decay rate ``kappa_acf`` of ``xt``; ``sigma2_emp = kappa_acf / kappa_u``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from ._types import Density, TimeSeries, trapz
from .bandwidth import select_bandwidth
from .errors import EstimationError, SofteningError

__all__ = [
    "DetrendResult",
    "AcfFit",
    "Fp1Fit",
    "Fp2Fit",
    "DriftRatio",
    "TrackConfig",
    "WindowIndicators",
    "IndicatorTrack",
    "PotentialSurface",
    "detrend",
    "estimate_density",
    "fit_kappa_acf",
    "fit_fp1",
    "fit_fp2",
    "skewness",
    "sample_skewness",
    "estimate_sigma2",
    "drift_ratio",
    "indicator_track",
    "empirical_potential",
    "potential_surface",
    "INDICATORS",
]

INDICATORS = ("kappa_acf", "kappa_u", "c_emp", "n2", "c_emp2", "gamma", "sigma2_emp")

MIN_WINDOW = 30


@dataclass(frozen=True)
class DetrendResult:
    trend: np.ndarray
    residual: np.ndarray
    bandwidth: float


def detrend(ts: TimeSeries, bandwidth) -> DetrendResult:
    """Gaussian-kernel moving average, renormalised near the ends.

    ``bandwidth`` is the kernel standard deviation in time units.
    """
    n = len(ts)
    if n < 3:
        raise EstimationError("detrending needs at least 3 samples")
    bandwidth = float(bandwidth)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    t, x = ts.times, ts.values
    spacing = float(np.min(np.diff(t)))
    if bandwidth < spacing:
        raise EstimationError(f"bandwidth {bandwidth:g} below sample spacing {spacing:g}")
    if ts.uniform_dt is not None:
        lags = min(n - 1, int(math.ceil(10.0 * bandwidth / ts.uniform_dt)))
        u = np.arange(lags + 1) * (ts.uniform_dt / bandwidth)
        trend = np.asarray(kernels.smooth_uniform(x, np.exp(-0.5 * u * u)))
    else:
        trend = np.empty(n)
        for start in range(0, n, 512):
            d = (t[start:start + 512, None] - t[None, :]) / bandwidth
            w = np.exp(-0.5 * d * d)
            trend[start:start + 512] = (w @ x) / w.sum(axis=1)
    return DetrendResult(trend, x - trend, bandwidth)


def estimate_density(samples, grid=256, bandwidth="isj", support_floor=1e-3) -> Density:
    """Gaussian KDE of a window of residuals.

    ``grid`` is a point count (the grid then spans the data range padded by
    five bandwidths, so at most ~6e-7 of the mass falls outside) or an explicit ascending array. The derivative is the
    exact derivative of the kernel sum.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape[0] < MIN_WINDOW:
        raise EstimationError(f"density needs at least {MIN_WINDOW} samples, got {x.shape[0]}")
    h, method = select_bandwidth(x, bandwidth)
    if np.ndim(grid) == 0:
        g = np.linspace(x.min() - 5.0 * h, x.max() + 5.0 * h, int(grid))
    else:
        g = np.asarray(grid, dtype=float)
    p, dp = kernels.kde_eval(x, g, h)
    total = trapz(p, g)
    if not abs(total - 1.0) <= 1e-3:
        raise EstimationError(f"grid of {g.size} points does not resolve bandwidth {h:.3g} (mass {total:.4g})")
    return Density(g, p, dp, h, x.shape[0], p >= support_floor * p.max(), method)


@dataclass(frozen=True)
class AcfFit:
    alpha: float
    kappa: float
    in_domain: bool


def fit_kappa_acf(x, dt) -> AcfFit:
    """Lag-1 regression ``x[k+1] = alpha x[k]`` (no intercept).

    ``kappa = -log(alpha)/dt`` when 0 < alpha < 1; otherwise ``kappa`` is NaN
    and ``in_domain`` is False.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 3:
        raise EstimationError("autocorrelation fit needs at least 3 samples")
    den = float(np.dot(x[:-1], x[:-1]))
    if den == 0.0:
        raise EstimationError("zero-variance window")
    alpha = float(np.dot(x[1:], x[:-1])) / den
    if 0.0 < alpha < 1.0:
        return AcfFit(alpha, -math.log(alpha) / dt, True)
    return AcfFit(alpha, math.nan, False)


@dataclass(frozen=True)
class Fp1Fit:
    kappa_u: float
    c_emp: float


@dataclass(frozen=True)
class Fp2Fit:
    kappa_u: float
    n2: float
    c_emp2: float


def _lstsq(columns, target, names):
    a = np.column_stack(columns)
    coef, _, rank, sv = np.linalg.lstsq(a, target, rcond=None)
    if rank < a.shape[1] or sv[-1] <= 1e-12 * sv[0]:
        raise EstimationError(f"rank-deficient design for {names}")
    return coef


def _supported(density: Density):
    m = density.support_mask
    if np.count_nonzero(m) < 10:
        raise EstimationError("fewer than 10 supported grid points")
    return density.grid[m], density.p[m], density.dp[m]


def fit_fp1(density: Density) -> Fp1Fit:
    """Least squares for ``p'/2 = -kappa_u x p + c_emp``, unweighted over the support."""
    x, p, dp = _supported(density)
    k, c = _lstsq([-x * p, np.ones_like(x)], 0.5 * dp, "kappa_u, c_emp")
    return Fp1Fit(float(k), float(c))


def fit_fp2(density: Density) -> Fp2Fit:
    """Least squares for ``p'/2 = (-kappa_u x + n2 x^2) p + c_emp2``."""
    x, p, dp = _supported(density)
    k, n2, c = _lstsq([-x * p, x * x * p, np.ones_like(x)], 0.5 * dp, "kappa_u, n2, c_emp2")
    return Fp2Fit(float(k), float(n2), float(c))


def skewness(density: Density) -> float:
    """Third standardised moment of the gridded density."""
    _, var, m3 = density.moments()
    if not var > 0:
        raise EstimationError("zero-variance density")
    return m3 / var ** 1.5


def sample_skewness(x) -> float:
    """Biased sample skewness, for cross-checks against :func:`skewness`."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    var = float(np.mean(d * d))
    if not var > 0:
        raise EstimationError("zero-variance sample")
    return float(np.mean(d ** 3)) / var ** 1.5


def estimate_sigma2(kappa_acf, kappa_u):
    """Noise variance ``kappa_acf / kappa_u``.

    Preferred to the residual of the autocorrelation regression, which runs
    low for the normal form.
    """
    if not kappa_u > 0:
        raise EstimationError("kappa_u must be positive")
    return kappa_acf / kappa_u


@dataclass(frozen=True)
class DriftRatio:
    """Slope of the decay rate against the equilibrium estimate.

    Near a fold, ``kappa = 2 a (x_eq - x_fold)``, so ``quadratic = ratio / 2``
    estimates the quadratic coefficient ``a`` of the normal form.
    """

    ratio: float
    quadratic: float
    in_domain: bool


def drift_ratio(track, trend) -> DriftRatio:
    kappa = np.asarray(track.kappa_acf if isinstance(track, IndicatorTrack) else track, dtype=float)
    x_eq = np.asarray(trend, dtype=float)
    if kappa.shape != x_eq.shape:
        raise ValueError("track and trend must be aligned")
    ok = np.isfinite(kappa) & np.isfinite(x_eq)
    if np.count_nonzero(ok) < 2:
        raise EstimationError("need at least two windows with finite estimates")
    k, e = kappa[ok], x_eq[ok]
    de = e - e.mean()
    sxx = float(np.dot(de, de))
    if sxx <= 1e-24 * max(1.0, float(np.dot(e, e))):
        return DriftRatio(math.nan, math.nan, False)
    ratio = float(np.dot(de, k - k.mean())) / sxx
    return DriftRatio(ratio, ratio / 2.0, True)


def _resolve(value, n):
    return float(value) * n if value <= 1 else float(value)


@dataclass(frozen=True)
class TrackConfig:
    """Sliding-window settings.

    ``window`` and ``detrend_bandwidth`` are fractions of the series length
    when at most 1, sample counts otherwise. The detrending bandwidth is the
    kernel standard deviation.
    """

    window: float = 0.5
    detrend_bandwidth: float = 0.05
    step: int = 1
    kde_bandwidth: str | float = "isj"
    n_grid: int = 256
    support_floor: float = 1e-3
    skew_source: str = "density"

    def __post_init__(self):
        if self.skew_source not in ("density", "sample"):
            raise ValueError("skew_source must be 'density' or 'sample'")
        if not (self.window > 0 and self.detrend_bandwidth > 0 and self.step >= 1):
            raise ValueError("window and detrend_bandwidth must be positive and step at least 1")

    def window_len(self, n):
        w = int(round(_resolve(self.window, n)))
        if w < MIN_WINDOW:
            raise EstimationError(f"window of {w} samples is below the minimum of {MIN_WINDOW}")
        if w > n:
            raise EstimationError(f"window of {w} samples exceeds series length {n}")
        return w

    def detrend_samples(self, n):
        return _resolve(self.detrend_bandwidth, n)

    def resolved(self, n):
        d = asdict(self)
        d.update(window=self.window_len(n), detrend_bandwidth=self.detrend_samples(n))
        return d

    def digest(self, n):
        blob = json.dumps(self.resolved(n), sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class WindowIndicators:
    t_center: float
    kappa_acf: float
    kappa_u: float
    c_emp: float
    n2: float
    c_emp2: float
    gamma: float
    sigma2_emp: float


@dataclass(frozen=True)
class IndicatorTrack:
    """Per-window indicators as columns; iterating yields :class:`WindowIndicators`.

    Failed estimates are NaN gaps. ``x_eq`` is the trend at each window
    centre and ``center_index`` the centre sample.
    """

    t_center: np.ndarray
    kappa_acf: np.ndarray
    kappa_u: np.ndarray
    c_emp: np.ndarray
    n2: np.ndarray
    c_emp2: np.ndarray
    gamma: np.ndarray
    sigma2_emp: np.ndarray
    x_eq: np.ndarray
    center_index: np.ndarray
    window_len: int
    config_digest: str
    errors: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return self.t_center.shape[0]

    def __getitem__(self, i):
        return WindowIndicators(*(float(getattr(self, k)[i]) for k in ("t_center",) + INDICATORS))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def column(self, name):
        return getattr(self, name)

    def summary(self, name, how="mean"):
        v = getattr(self, name)
        v = v[np.isfinite(v)]
        if v.size == 0:
            return math.nan
        return float(np.mean(v) if how == "mean" else np.median(v))


def _window_centers(n, w, step):
    half = w // 2
    return np.arange(half, n - (w - half) + 1, max(1, int(step)))


def _window_values(residual, dt, config, grid=None):
    """Indicators for one window; failures leave NaNs and return the message."""
    out = dict.fromkeys(INDICATORS, math.nan)
    if np.ptp(residual) == 0.0:
        return out, None, "zero-variance window"
    problems = []
    density = None
    try:
        acf = fit_kappa_acf(residual, dt)
        out["kappa_acf"] = acf.kappa
        if not acf.in_domain:
            problems.append(f"alpha={acf.alpha:.4g} out of domain")
    except SofteningError as exc:
        problems.append(str(exc))
    try:
        density = estimate_density(
            residual, config.n_grid if grid is None else grid, config.kde_bandwidth, config.support_floor
        )
        fp1 = fit_fp1(density)
        out["kappa_u"], out["c_emp"] = fp1.kappa_u, fp1.c_emp
        fp2 = fit_fp2(density)
        out["n2"], out["c_emp2"] = fp2.n2, fp2.c_emp2
        if config.skew_source == "density":
            out["gamma"] = skewness(density)
        else:
            out["gamma"] = sample_skewness(residual)
    except (SofteningError, np.linalg.LinAlgError) as exc:
        problems.append(str(exc))
    if out["kappa_u"] > 0 and math.isfinite(out["kappa_acf"]):
        out["sigma2_emp"] = out["kappa_acf"] / out["kappa_u"]
    return out, density, "; ".join(problems)


def indicator_track(ts: TimeSeries, config: TrackConfig | None = None) -> IndicatorTrack:
    """Detrend once, then estimate every indicator in each sliding window.

    Windows of ``w`` samples are centred on sample indices starting at
    ``w // 2`` and advancing by ``config.step``; each window's result depends
    only on its centre, so tracks computed with different steps agree where
    their centres coincide.
    """
    config = config or TrackConfig()
    n = len(ts)
    dt = ts.dt
    w = config.window_len(n)
    trend = detrend(ts, config.detrend_samples(n) * dt)
    centers = _window_centers(n, w, config.step)
    cols = {k: np.full(centers.shape[0], math.nan) for k in INDICATORS}
    t_center = np.empty(centers.shape[0])
    errors = {}
    half = w // 2
    for j, c in enumerate(centers):
        lo = c - half
        window = trend.residual[lo:lo + w]
        t_center[j] = 0.5 * (ts.times[lo] + ts.times[lo + w - 1])
        vals, _, msg = _window_values(window, dt, config)
        for k in INDICATORS:
            cols[k][j] = vals[k]
        if msg:
            errors[int(c)] = msg
    return IndicatorTrack(
        t_center=t_center,
        x_eq=trend.trend[centers],
        center_index=centers,
        window_len=w,
        config_digest=config.digest(n),
        errors=errors,
        **cols,
    )


@dataclass(frozen=True)
class PotentialSurface:
    """Empirical potential per window on a common state grid.

    Arrays are indexed ``[window, state]``; unsupported cells are NaN.
    """

    time_centers: np.ndarray
    state_grid: np.ndarray
    u_emp: np.ndarray
    parabola_dev: np.ndarray
    support_mask: np.ndarray
    sigma2_emp: np.ndarray


def empirical_potential(density: Density, sigma2):
    """``U = -(sigma2/2) log p`` on the support, and its deviation from the
    least-squares parabola through the supported points.

    Returns ``(u, dev)`` with NaN outside the support.
    """
    m = density.support_mask
    u = np.full(density.grid.shape[0], math.nan)
    dev = np.full_like(u, math.nan)
    if not (math.isfinite(sigma2) and sigma2 > 0) or np.count_nonzero(m) < 3:
        return u, dev
    x = density.grid[m]
    u[m] = -0.5 * sigma2 * np.log(density.p[m])
    coef = np.polynomial.polynomial.polyfit(x, u[m], 2)
    dev[m] = u[m] - np.polynomial.polynomial.polyval(x, coef)
    return u, dev


def potential_surface(ts: TimeSeries, config: TrackConfig | None = None, n_state=128) -> PotentialSurface:
    """Sliding-window empirical potential, coloured by deviation from a parabola.

    Every window's KDE is evaluated on one state grid covering all residuals
    so the columns line up; windows whose noise estimate fails are masked.
    """
    config = config or TrackConfig()
    n = len(ts)
    dt = ts.dt
    w = config.window_len(n)
    trend = detrend(ts, config.detrend_samples(n) * dt)
    centers = _window_centers(n, w, config.step)
    half = w // 2
    windows = [trend.residual[c - half:c - half + w] for c in centers]
    pad = 5.0 * max(select_bandwidth(x, config.kde_bandwidth)[0] for x in windows)
    grid = np.linspace(trend.residual.min() - pad, trend.residual.max() + pad, n_state)

    shape = (centers.shape[0], n_state)
    u_emp = np.full(shape, math.nan)
    dev = np.full(shape, math.nan)
    mask = np.zeros(shape, dtype=bool)
    sig = np.full(centers.shape[0], math.nan)
    t_center = np.empty(centers.shape[0])
    for j, (c, x) in enumerate(zip(centers, windows)):
        lo = c - half
        t_center[j] = 0.5 * (ts.times[lo] + ts.times[lo + w - 1])
        vals, density, _ = _window_values(x, dt, config, grid=grid)
        if density is None or not math.isfinite(vals["sigma2_emp"]) or vals["sigma2_emp"] <= 0:
            continue
        sig[j] = vals["sigma2_emp"]
        u_emp[j], dev[j] = empirical_potential(density, sig[j])
        mask[j] = density.support_mask
    return PotentialSurface(t_center, grid, u_emp, dev, mask, sig)
