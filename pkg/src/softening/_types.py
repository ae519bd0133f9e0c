"""Core value types shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_trapz = getattr(np, "trapezoid", None) or np.trapz


def trapz(y, x):
    return float(_trapz(y, x))


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped scalar samples.

    ``censored_index`` is the index of the last sample when the series ended
    by escape (that sample is kept), otherwise None.
    """

    times: np.ndarray
    values: np.ndarray
    uniform_dt: float | None = None
    censored_index: int | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError(f"times and values must be 1-d of equal length, got {t.shape} and {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if self.uniform_dt is not None:
            dt = float(self.uniform_dt)
            if dt <= 0:
                raise ValueError("uniform_dt must be positive")
            if t.size > 1 and np.max(np.abs(np.diff(t) - dt)) > 1e-9 * dt:
                raise ValueError("sample spacing deviates from uniform_dt")
            object.__setattr__(self, "uniform_dt", dt)

    @classmethod
    def uniform(cls, values, dt, t0=0.0, **kwargs):
        values = np.asarray(values, dtype=float)
        times = t0 + dt * np.arange(values.shape[0])
        return cls(times, values, uniform_dt=dt, **kwargs)

    @property
    def censored(self) -> bool:
        return self.censored_index is not None

    @property
    def dt(self) -> float:
        if self.uniform_dt is None:
            raise ValueError("series is not uniformly sampled; resample it first")
        return self.uniform_dt

    def __len__(self):
        return self.values.shape[0]

    def trimmed(self):
        """Copy without the escape sample, if the series was censored."""
        if not self.censored:
            return self
        k = self.censored_index
        return TimeSeries(self.times[:k], self.values[:k], self.uniform_dt, None, dict(self.provenance))


@dataclass(frozen=True)
class Density:
    """Probability density on an ascending grid, with its derivative."""

    grid: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    bandwidth: float
    n_samples: int
    support_mask: np.ndarray
    method: str = ""

    def __post_init__(self):
        if np.any(self.p < 0):
            raise ValueError("density must be non-negative")
        total = trapz(self.p, self.grid)
        if not 1 - 1e-3 <= total <= 1 + 1e-3:
            raise ValueError(f"density integrates to {total:.6g}, expected 1")

    def moments(self):
        """(mean, variance, third central moment) by trapezoid integration."""
        x, p = self.grid, self.p
        mean = trapz(x * p, x)
        d = x - mean
        return mean, trapz(d * d * p, x), trapz(d ** 3 * p, x)
