"""Synthetic series, conditioned ensembles and the stationary Fokker-Planck oracle.

The noisy saddle-node normal form is

    dx = (mu - x^2) dt + sigma dW,    dmu = -epsilon dt,

with stable equilibrium sqrt(mu) and unstable equilibrium -sqrt(mu).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._types import Density, TimeSeries, trapz
from .errors import ExtinctionError, GridError

__all__ = [
    "SnfParams",
    "EnsembleParams",
    "EnsembleResult",
    "FpGrid",
    "FpSolution",
    "simulate_snf",
    "simulate_linear",
    "conditional_ensemble",
    "stationary_fp_solve",
]


@dataclass(frozen=True)
class SnfParams:
    mu0: float
    epsilon: float = 0.0
    sigma: float = 1.0
    dt: float = 0.1
    n_max: int = 2000
    x0: float | None = None
    escape_level: float | None = -1.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.sigma < 0 or self.epsilon < 0:
            raise ValueError("sigma and epsilon must be non-negative")

    @property
    def start(self) -> float:
        if self.x0 is not None:
            return float(self.x0)
        return math.sqrt(max(self.mu0, 0.0))


def simulate_snf(params: SnfParams) -> TimeSeries:
    """Integrate the drifting saddle-node normal form by Euler-Maruyama.

    One sample is stored per step. Integration stops after ``n_max`` samples
    or at the first sample at or below ``escape_level``; that sample is kept
    and its index recorded as ``censored_index``. A non-finite state also
    ends the series as censored, without storing the non-finite value.
    """
    rng = np.random.default_rng(params.seed)
    z = rng.standard_normal(params.n_max - 1)
    level = -math.inf if params.escape_level is None else float(params.escape_level)
    values, cut = kernels.snf_path(
        params.start, float(params.mu0), float(params.epsilon), float(params.sigma), float(params.dt), z, level
    )
    return TimeSeries.uniform(
        np.array(values), params.dt, censored_index=None if cut < 0 else int(cut)
    )


def simulate_linear(kappa, sigma, dt, n, seed=0, x0=0.0, method="exact", t0=0.0):
    """Linear (Ornstein-Uhlenbeck) series dx = -kappa x dt + sigma dW.

    ``method="exact"`` uses the exact transition over one step, so the lag-1
    autocorrelation is exp(-kappa dt) and the stationary variance is
    sigma^2 / (2 kappa) at any dt. ``method="euler"`` uses Euler-Maruyama.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if sigma < 0 or not dt > 0 or n < 1:
        raise ValueError("need sigma >= 0, dt > 0, n >= 1")
    z = np.random.default_rng(seed).standard_normal(int(n) - 1)
    if method == "exact":
        alpha = math.exp(-kappa * dt)
        scale = sigma * math.sqrt(-math.expm1(-2.0 * kappa * dt) / (2.0 * kappa))
    elif method == "euler":
        alpha = 1.0 - kappa * dt
        scale = sigma * math.sqrt(dt)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TimeSeries.uniform(kernels.ou_path(alpha, scale, z, float(x0)), dt, t0=t0)


@dataclass(frozen=True)
class EnsembleParams:
    n_realizations: int = 100_000
    mu: float = 1.0
    sigma: float = 1.0
    b: float = 1.0
    dt: float = 0.01
    burn_in: int = 1000
    horizon: int = 3000
    seed: int = 0
    n_bins: int = 400
    n_groups: int = 50

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("escape offset b must be non-negative")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not 0 <= self.burn_in < self.horizon:
            raise ValueError("need 0 <= burn_in < horizon")
        if self.n_realizations < 2:
            raise ValueError("need at least two realizations")

    @property
    def boundary(self) -> float:
        return -math.sqrt(self.mu) - self.b


@dataclass(frozen=True)
class EnsembleResult:
    params: EnsembleParams
    density: Density
    mean: float
    variance: float
    skewness: float
    stderr: dict
    n_escaped: int
    n_pooled: int


def _moments_from_sums(s, shift):
    n, s1, s2, s3 = s
    m1 = s1 / n
    var = s2 / n - m1 * m1
    m3 = s3 / n - 3.0 * m1 * s2 / n + 2.0 * m1 ** 3
    return shift + m1, var, m3


def _skew(var, m3, scale):
    if var <= (1e-12 * max(1.0, abs(scale))) ** 2:
        return 0.0
    return m3 / var ** 1.5


def conditional_ensemble(params: EnsembleParams) -> EnsembleResult:
    """Density of non-escaped realizations of the fixed-mu normal form.

    Realizations reaching ``-sqrt(mu) - b`` are replaced by copies of
    uniformly chosen survivors, drawn from the same seeded stream as the
    noise. States after ``burn_in`` steps are pooled into a histogram and
    into moment sums per realization group; the spread across groups gives
    the Monte Carlo standard errors.
    """
    p = params
    n = int(p.n_realizations)
    rng = np.random.default_rng(p.seed)
    root = math.sqrt(p.mu)
    boundary = p.boundary
    x = np.full(n, root)
    escaped = np.empty(n, dtype=np.int64)
    groups = (np.arange(n) % min(p.n_groups, n)).astype(np.int64)
    sums = np.zeros((min(p.n_groups, n), 4))
    top = root + 8.0 * max(p.sigma, 1e-12) ** (2.0 / 3.0)
    width = (top - boundary) / p.n_bins
    counts = np.zeros(p.n_bins + 1, dtype=np.int64)
    noise = p.sigma * math.sqrt(p.dt)
    n_escaped = 0

    for step in range(p.horizon):
        z = rng.standard_normal(n)
        k = kernels.ensemble_advance(x, z, float(p.mu), float(p.dt), noise, boundary, escaped)
        if k == n:
            raise ExtinctionError(f"all realizations escaped in one step (mu={p.mu}, b={p.b})")
        if k:
            picks = rng.integers(0, n - k, size=k)
            kernels.ensemble_refill(x, escaped, k, picks)
            n_escaped += k
        if step >= p.burn_in:
            kernels.ensemble_accumulate(x, root, groups, sums, boundary, width, counts)

    total = sums.sum(axis=0)
    mean, var, m3 = _moments_from_sums(total, root)
    skew = _skew(var, m3, mean)
    per_group = np.array([_moments_from_sums(s, root) for s in sums])
    group_skew = np.array([_skew(v, m, mu_) for mu_, v, m in per_group])
    g = sums.shape[0]
    stderr = {
        "mean": float(np.std(per_group[:, 0], ddof=1) / math.sqrt(g)),
        "variance": float(np.std(per_group[:, 1], ddof=1) / math.sqrt(g)),
        "skewness": float(np.std(group_skew, ddof=1) / math.sqrt(g)),
    }

    centers = boundary + width * (np.arange(p.n_bins) + 0.5)
    hist = counts[:-1].astype(float)
    if np.count_nonzero(hist) > 1:
        dens = hist / trapz(hist, centers)
    else:
        # all mass in one bin: a spike whose trapezoid area is one bin width
        dens = hist / (hist.sum() * width)
        centers = np.concatenate([[centers[0] - width], centers, [centers[-1] + width]])
        dens = np.concatenate([[0.0], dens, [0.0]])
    dp = np.gradient(dens, centers)
    density = Density(
        grid=centers,
        p=dens,
        dp=dp,
        bandwidth=width,
        n_samples=int(total[0]),
        support_mask=dens >= 1e-3 * dens.max(),
        method="histogram",
    )
    return EnsembleResult(p, density, float(mean), float(var), float(skew), stderr, n_escaped, int(total[0]))


@dataclass(frozen=True)
class FpGrid:
    """Quadrature domain for :func:`stationary_fp_solve`.

    Defaults span ``sqrt(mu) +- (sqrt(mu) + 5 sigma^(2/3))`` with a spacing
    fine enough that central differences resolve the well.
    """

    lower: float | None = None
    upper: float | None = None
    spacing: float | None = None
    max_points: int = 4_000_001

    def resolve(self, mu, sigma):
        root = math.sqrt(max(mu, 0.0))
        reach = 5.0 * sigma ** (2.0 / 3.0)
        lower = -root - reach if self.lower is None else float(self.lower)
        upper = root + reach if self.upper is None else float(self.upper)
        if lower > -root - reach * (1 - 1e-12) or upper < root + reach * (1 - 1e-12):
            raise GridError(
                f"grid [{lower:g}, {upper:g}] must span at least "
                f"[{-root - reach:g}, {root + reach:g}] for mu={mu:g}, sigma={sigma:g}"
            )
        if self.spacing is None:
            rate = max(2.0 * root, sigma ** (2.0 / 3.0))
            # resolve both the well and the absorbing layer at the lower end
            layer = sigma ** 2 / (2.0 * (lower * lower - mu))
            spacing = min(5e-4 * sigma / math.sqrt(rate), layer / 300.0)
        else:
            spacing = float(self.spacing)
        n = int(math.ceil((upper - lower) / spacing)) + 1
        if n > self.max_points:
            raise GridError(f"grid would need {n} points (limit {self.max_points})")
        return np.linspace(lower, upper, n)


@dataclass(frozen=True)
class FpSolution:
    mu: float
    sigma: float
    grid: np.ndarray
    p: np.ndarray
    c: float
    log_abs_c: float
    mean: float
    variance: float
    skewness: float

    def ode_residual(self):
        """Max interior |(s^2/2) p' - (mu - x^2) p + c| relative to max |(mu - x^2) p|."""
        x, p = self.grid, self.p
        drift_p = (self.mu - x * x) * p
        dpdx = (p[2:] - p[:-2]) / (x[2:] - x[:-2])
        r = 0.5 * self.sigma ** 2 * dpdx - drift_p[1:-1] + self.c
        return float(np.max(np.abs(r)) / np.max(np.abs(drift_p)))


def stationary_fp_solve(mu, sigma, grid_spec: FpGrid | None = None) -> FpSolution:
    """Stationary density of the normal form with re-injection.

    Solves ``(sigma^2/2) p' = (mu - x^2) p - c`` on ``[lower, upper]`` with
    p(lower) = 0: probability absorbed at ``lower`` re-enters at ``upper``
    with constant flux ``c < 0``. With F(x) = mu x - x^3/3 and a = 2/sigma^2,

        p(x) = -(2c/sigma^2) exp(a F(x)) * integral_lower^x exp(-a F(y)) dy,

    evaluated in log space, and ``c`` is fixed by normalisation. Moments come
    from trapezoid integration over the grid.

    Between the wells the density decays only like |c| / x^2, so the upper
    end must sit in that flux-dominated tail; otherwise the grid is too
    narrow and :class:`GridError` is raised.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = (grid_spec or FpGrid()).resolve(mu, sigma)
    a = 2.0 / sigma ** 2
    log_g = np.asarray(kernels.fp_log_density(x, a, float(mu)))
    if not np.all(np.isfinite(log_g[1:])):
        raise GridError("non-finite quadrature values; grid spacing too coarse for this sigma")
    top = float(np.max(log_g))
    scaled = np.exp(log_g - top)
    z = trapz(scaled, x)
    p = scaled / z
    log_z = top + math.log(z)
    log_abs_c = math.log(0.5 * sigma ** 2) - log_z
    c = -math.exp(log_abs_c)

    tail = abs(c) / (x[-1] ** 2 - mu)
    if p[-1] > max(1e-8 * p.max(), 1.05 * tail):
        raise GridError(f"density at upper end {p[-1]:.3g} is not in the flux tail; widen the grid")

    mean = trapz(x * p, x)
    d = x - mean
    var = trapz(d * d * p, x)
    m3 = trapz(d ** 3 * p, x)
    return FpSolution(float(mu), float(sigma), x, p, c, log_abs_c, mean, var, m3 / var ** 1.5)
