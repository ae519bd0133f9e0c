"""Pure-numpy kernels. Reference path, and the fallback when numba is off."""

import math

import numpy as np
from scipy.signal import lfilter

_KDE_CHUNK = 1 << 22


def snf_path(x0, mu0, epsilon, sigma, dt, z, escape_level):
    """Euler-Maruyama path of dx = (mu - x^2) dt + sigma dW, dmu = -epsilon dt.

    Returns ``(values, censored_at)``; ``censored_at`` is -1 when the path ran
    to full length, otherwise the index of the last stored sample.
    """
    n = z.shape[0] + 1
    out = np.empty(n)
    out[0] = x0
    if x0 <= escape_level:
        return out[:1], 0
    noise = sigma * math.sqrt(dt)
    x = float(x0)
    for k in range(n - 1):
        mu = mu0 - epsilon * (k * dt)
        x = x + (mu - x * x) * dt + noise * float(z[k])
        if not math.isfinite(x):
            return out[: k + 1], k
        out[k + 1] = x
        if x <= escape_level:
            return out[: k + 2], k + 1
    return out, -1


def ou_path(alpha, scale, z, x0):
    """x[k+1] = alpha * x[k] + scale * z[k], x[0] = x0."""
    u = scale * np.asarray(z, dtype=float)
    out = np.empty(u.shape[0] + 1)
    out[0] = x0
    if u.shape[0]:
        out[1:], _ = lfilter([1.0], [1.0, -alpha], u, zi=[alpha * x0])
    return out


def ensemble_advance(x, z, mu, dt, noise, boundary, escaped):
    x += (mu - x * x) * dt + noise * z
    idx = np.flatnonzero(x <= boundary)
    escaped[: idx.shape[0]] = idx
    return idx.shape[0]


def ensemble_refill(x, escaped, k, picks):
    mask = np.ones(x.shape[0], dtype=bool)
    mask[escaped[:k]] = False
    survivors = np.flatnonzero(mask)
    x[escaped[:k]] = x[survivors[picks]]


def ensemble_accumulate(x, shift, groups, sums, lo, width, counts):
    n_groups = sums.shape[0]
    d = x - shift
    d2 = d * d
    sums[:, 0] += np.bincount(groups, minlength=n_groups)
    sums[:, 1] += np.bincount(groups, weights=d, minlength=n_groups)
    sums[:, 2] += np.bincount(groups, weights=d2, minlength=n_groups)
    sums[:, 3] += np.bincount(groups, weights=d2 * d, minlength=n_groups)
    b = np.floor((x - lo) / width)
    inside = (b >= 0) & (b < counts.shape[0] - 1)
    bins = np.where(inside, b, counts.shape[0] - 1).astype(np.int64)
    counts += np.bincount(bins, minlength=counts.shape[0])


def kde_eval(samples, grid, h):
    """Gaussian KDE and its analytic derivative on ``grid``."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    p = np.zeros(grid.shape[0])
    dp = np.zeros(grid.shape[0])
    step = max(1, _KDE_CHUNK // max(1, grid.shape[0]))
    for start in range(0, n, step):
        u = (grid[:, None] - samples[None, start:start + step]) / h
        k = np.exp(-0.5 * u * u)
        p += k.sum(axis=1)
        dp -= (u * k).sum(axis=1)
    norm = 1.0 / (n * h * math.sqrt(2.0 * math.pi))
    return p * norm, dp * (norm / h)


def smooth_uniform(x, lag_weights):
    """Kernel-weighted average with boundary renormalisation, uniform spacing."""
    n = x.shape[0]
    w = lag_weights[: min(lag_weights.shape[0], n)]
    lags = w.shape[0] - 1
    full = np.concatenate([w[::-1], w[1:]])
    num = np.convolve(x, full, mode="full")[lags:lags + n]
    den = np.convolve(np.ones(n), full, mode="full")[lags:lags + n]
    return num / den


def fp_log_density(x, a, mu):
    """log of the unnormalised stationary density, absorbing at x[0].

    Cell integrals of exp(-a F) use Simpson's rule with F(x) = mu x - x^3/3.
    """
    F = mu * x - x ** 3 / 3.0
    xm = 0.5 * (x[1:] + x[:-1])
    Fm = mu * xm - xm ** 3 / 3.0
    h = np.diff(x)
    e1 = a * (F[1:] - F[:-1])
    em = a * (F[1:] - Fm)
    log_cell = np.log(h / 6.0 * (np.exp(e1) + 4.0 * np.exp(em) + 1.0))
    terms = np.empty(x.shape[0])
    terms[0] = -np.inf
    terms[1:] = log_cell - a * F[1:]
    log_int = np.logaddexp.accumulate(terms)
    return a * F + log_int


def isj_fixed_point(t, n, k2, a2):
    """Fixed-point functional of the improved Sheather-Jones selector."""
    ell = 7
    f = 2.0 * math.pi ** (2 * ell) * np.sum(k2 ** ell * a2 * np.exp(-k2 * math.pi ** 2 * t))
    for s in range(ell - 1, 1, -1):
        k0 = float(np.prod(np.arange(1, 2 * s, 2))) / math.sqrt(2.0 * math.pi)
        const = (1.0 + 0.5 ** (s + 0.5)) / 3.0
        if f <= 0.0:
            return math.nan
        time = (2.0 * const * k0 / (n * f)) ** (2.0 / (3.0 + 2.0 * s))
        f = 2.0 * math.pi ** (2 * s) * np.sum(k2 ** s * a2 * np.exp(-k2 * math.pi ** 2 * time))
    if f <= 0.0:
        return math.nan
    return t - (2.0 * n * math.sqrt(math.pi) * f) ** (-0.4)
