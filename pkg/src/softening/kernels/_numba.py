"""numba-compiled kernels with the same signatures as ``_numpy``."""

import math

import numpy as np
from numba import config, njit, prange

from . import _numpy

# Probe OpenMP first; the bundled TBB is often too old and warns on import.
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# The SDE path is an inherently sequential loop; compile the reference body.
snf_path = njit(cache=True)(_numpy.snf_path)


@njit(cache=True)
def ou_path(alpha, scale, z, x0):
    n = z.shape[0] + 1
    out = np.empty(n)
    out[0] = x0
    x = x0
    for k in range(n - 1):
        x = scale * z[k] + alpha * x
        out[k + 1] = x
    return out


@njit(cache=True)
def ensemble_advance(x, z, mu, dt, noise, boundary, escaped):
    k = 0
    for i in range(x.shape[0]):
        xi = x[i]
        xi += (mu - xi * xi) * dt + noise * z[i]
        x[i] = xi
        if xi <= boundary:
            escaped[k] = i
            k += 1
    return k


@njit(cache=True)
def ensemble_refill(x, escaped, k, picks):
    n = x.shape[0]
    survivors = np.empty(n - k, dtype=np.int64)
    j = 0
    e = 0
    for i in range(n):
        if e < k and escaped[e] == i:
            e += 1
        else:
            survivors[j] = i
            j += 1
    for e in range(k):
        x[escaped[e]] = x[survivors[picks[e]]]


@njit(cache=True)
def ensemble_accumulate(x, shift, groups, sums, lo, width, counts):
    n_groups = sums.shape[0]
    step = np.zeros((n_groups, 4))
    last = counts.shape[0] - 1
    for i in range(x.shape[0]):
        g = groups[i]
        d = x[i] - shift
        d2 = d * d
        step[g, 0] += 1.0
        step[g, 1] += d
        step[g, 2] += d2
        step[g, 3] += d2 * d
        b = math.floor((x[i] - lo) / width)
        if b >= 0 and b < last:
            counts[int(b)] += 1
        else:
            counts[last] += 1
    for g in range(n_groups):
        for c in range(4):
            sums[g, c] += step[g, c]


@njit(cache=True, parallel=True)
def _kde_sorted(s, grid, h):
    m = grid.shape[0]
    p = np.empty(m)
    dp = np.empty(m)
    cut = 9.0 * h
    for j in prange(m):
        g = grid[j]
        lo = np.searchsorted(s, g - cut)
        hi = np.searchsorted(s, g + cut)
        acc = 0.0
        dacc = 0.0
        for i in range(lo, hi):
            u = (g - s[i]) / h
            kv = math.exp(-0.5 * u * u)
            acc += kv
            dacc -= u * kv
        p[j] = acc
        dp[j] = dacc
    return p, dp


def kde_eval(samples, grid, h):
    s = np.sort(np.asarray(samples, dtype=np.float64))
    p, dp = _kde_sorted(s, np.ascontiguousarray(grid, dtype=np.float64), float(h))
    norm = 1.0 / (s.shape[0] * h * math.sqrt(2.0 * math.pi))
    return p * norm, dp * (norm / h)


# np.convolve outruns a compiled direct sum here
smooth_uniform = _numpy.smooth_uniform


@njit(cache=True)
def fp_log_density(x, a, mu):
    m = x.shape[0]
    out = np.empty(m)
    out[0] = -np.inf
    f_prev = mu * x[0] - x[0] ** 3 / 3.0
    for k in range(m - 1):
        f_next = mu * x[k + 1] - x[k + 1] ** 3 / 3.0
        xm = 0.5 * (x[k] + x[k + 1])
        fm = mu * xm - xm ** 3 / 3.0
        h = x[k + 1] - x[k]
        e1 = a * (f_next - f_prev)
        em = a * (f_next - fm)
        log_cell = math.log(h / 6.0 * (math.exp(e1) + 4.0 * math.exp(em) + 1.0))
        prev = out[k] + e1
        if prev == -np.inf:
            out[k + 1] = log_cell
        elif prev > log_cell:
            out[k + 1] = prev + math.log1p(math.exp(log_cell - prev))
        else:
            out[k + 1] = log_cell + math.log1p(math.exp(prev - log_cell))
        f_prev = f_next
    return out


@njit(cache=True)
def _weighted_heat(k2, a2, s, c):
    # sum of k^(2s) a2_k exp(-k^2 c) for k = 1, 2, ...; exp(-k^2 c) by recurrence
    e = math.exp(-c)
    r = math.exp(-3.0 * c)
    q = math.exp(-2.0 * c)
    f = 0.0
    for i in range(k2.shape[0]):
        f += k2[i] ** s * a2[i] * e
        e *= r
        r *= q
    return f


@njit(cache=True)
def isj_fixed_point(t, n, k2, a2):
    ell = 7
    pi2 = math.pi ** 2
    f = 2.0 * math.pi ** (2 * ell) * _weighted_heat(k2, a2, ell, pi2 * t)
    for s in range(ell - 1, 1, -1):
        k0 = 1.0
        for j in range(1, 2 * s, 2):
            k0 *= j
        k0 /= math.sqrt(2.0 * math.pi)
        const = (1.0 + 0.5 ** (s + 0.5)) / 3.0
        if f <= 0.0:
            return math.nan
        time = (2.0 * const * k0 / (n * f)) ** (2.0 / (3.0 + 2.0 * s))
        f = 2.0 * math.pi ** (2 * s) * _weighted_heat(k2, a2, s, pi2 * time)
    if f <= 0.0:
        return math.nan
    return t - (2.0 * n * math.sqrt(math.pi) * f) ** (-0.4)
