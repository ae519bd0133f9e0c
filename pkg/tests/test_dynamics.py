import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from softening import (
    EnsembleParams,
    FpGrid,
    SnfParams,
    conditional_ensemble,
    simulate_linear,
    simulate_snf,
    stationary_fp_solve,
)
from softening._types import trapz
from softening.errors import ExtinctionError, GridError


def test_snf_same_seed_bitwise():
    p = SnfParams(mu0=1.0, seed=99)
    a, b = simulate_snf(p), simulate_snf(p)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.censored_index == b.censored_index


def test_snf_noise_free_decays_to_root():
    ts = simulate_snf(SnfParams(mu0=1, sigma=0, dt=0.1, n_max=500, x0=2.0))
    assert len(ts) == 500 and not ts.censored
    assert np.all(np.diff(ts.values) <= 0)
    assert abs(ts.values[-1] - 1.0) < 1e-6


def test_snf_noise_free_below_saddle_is_censored():
    ts = simulate_snf(SnfParams(mu0=1, sigma=0, x0=-1.01, escape_level=-5.0))
    assert ts.censored and ts.values[-1] <= -5.0
    assert np.all(ts.values[:-1] > -5.0)


def test_snf_drifting_branch():
    ts = simulate_snf(SnfParams(mu0=2, epsilon=0.01, sigma=1, dt=0.1, n_max=1223, x0=math.sqrt(2), seed=4))
    assert 1 <= len(ts) <= 1223
    assert ts.values[0] == math.sqrt(2)


def test_snf_overflow_never_stores_nonfinite():
    ts = simulate_snf(SnfParams(mu0=0.0, sigma=1.0, dt=0.5, n_max=5000, x0=-5.0, escape_level=None))
    assert ts.censored
    assert np.all(np.isfinite(ts.values))


def test_snf_trimmed_drops_escape_sample():
    ts = simulate_snf(SnfParams(mu0=0.3, seed=1))
    assert ts.censored
    tr = ts.trimmed()
    assert len(tr) == ts.censored_index and not tr.censored
    assert np.all(tr.values > -1.0)


def test_snf_first_passage_matches_theory():
    # mean time to reach x=-1 from x=1 at mu=1, sigma=1 from the exact
    # first-passage integral, against fine-step simulation
    mu, s = 1.0, 1.0
    phi = lambda x: 2.0 * (-mu * x + x ** 3 / 3.0) / s ** 2
    inner = lambda y: quad(lambda z: math.exp(phi(y) - phi(z)), y, 8.0, limit=200)[0]
    t_exact = 2.0 / s ** 2 * quad(inner, -1.0, 1.0, limit=200)[0]
    dt = 0.01
    hits = [len(simulate_snf(SnfParams(mu0=1, dt=dt, n_max=10 ** 6, seed=7000 + i))) * dt for i in range(800)]
    assert np.mean(hits) == pytest.approx(t_exact, rel=0.1)


def test_linear_variance():
    ts = simulate_linear(2.0, 1.0, 0.1, 2000, seed=3)
    assert np.var(ts.values) == pytest.approx(0.25, rel=0.15)


def test_linear_zero_noise():
    assert np.all(simulate_linear(2.0, 0.0, 0.1, 100).values == 0.0)


def test_linear_exact_lag_one_correlation():
    ts = simulate_linear(2.0, 1.0, 0.1, 200_000, seed=1)
    x = ts.values
    assert np.dot(x[1:], x[:-1]) / np.dot(x[:-1], x[:-1]) == pytest.approx(math.exp(-0.2), abs=5e-3)


def test_linear_euler_option():
    a = simulate_linear(2.0, 1.0, 0.1, 100, seed=1, method="euler")
    b = simulate_linear(2.0, 1.0, 0.1, 100, seed=1)
    assert not np.array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        simulate_linear(-1.0, 1.0, 0.1, 100)


def test_ensemble_boundary():
    assert EnsembleParams(mu=4.0, b=1.5).boundary == -3.5
    with pytest.raises(ValueError):
        EnsembleParams(b=-0.1)


def small(**kw):
    base = dict(n_realizations=4000, dt=0.01, burn_in=300, horizon=1300, seed=5)
    base.update(kw)
    return EnsembleParams(**base)


def test_ensemble_deterministic():
    a, b = conditional_ensemble(small(mu=1.0)), conditional_ensemble(small(mu=1.0))
    assert a.skewness == b.skewness and a.mean == b.mean
    np.testing.assert_array_equal(a.density.p, b.density.p)


def test_ensemble_deep_well_small_skew():
    r = conditional_ensemble(small(mu=4.0, b=1.0, n_realizations=20000))
    assert abs(r.skewness) < 0.3


def test_ensemble_deep_well_matches_quadrature():
    # escape is negligible at mu=4, so re-injection does not matter
    fp = stationary_fp_solve(4.0, 1.0)
    r = conditional_ensemble(small(mu=4.0, b=1.0, n_realizations=20000, dt=0.002, burn_in=1000, horizon=6000))
    assert r.n_escaped == 0
    for k in ("mean", "variance"):
        assert abs(getattr(r, k) - getattr(fp, k)) < 3 * r.stderr[k] + 2e-3


def test_ensemble_noise_free_is_degenerate():
    r = conditional_ensemble(small(mu=2.0, sigma=0.0, n_realizations=1000))
    assert r.skewness == 0.0 and r.variance == pytest.approx(0.0, abs=1e-20)
    assert r.mean == pytest.approx(math.sqrt(2.0))
    assert r.density.grid[np.argmax(r.density.p)] == pytest.approx(math.sqrt(2.0), abs=r.density.bandwidth)


def test_ensemble_extinction_names_parameters():
    with pytest.raises(ExtinctionError, match=r"mu=0.0.*b=0.0"):
        conditional_ensemble(small(mu=0.0, b=0.0, sigma=50.0, n_realizations=2, burn_in=0, horizon=10000))


@pytest.mark.parametrize("mu", [0.1, 0.5, 1.0, 2.0, 4.0])
def test_fp_structure(mu):
    s = stationary_fp_solve(mu, 1.0)
    assert s.c < 0
    assert s.ode_residual() <= 1e-6
    assert s.skewness < 0
    assert s.variance > 1.0 / (2 * 2 * math.sqrt(mu))
    assert s.p[0] == 0.0


def test_fp_small_noise_limit():
    s = stationary_fp_solve(4.0, 0.1)
    assert abs(s.mean - 2.0) < 1e-3
    # leading-order skewness of exp(-(2/sigma^2)(kappa x^2/2 + x^3/3)), kappa = 2 sqrt(mu)
    v = 0.1 ** 2 / (2 * 4.0)
    assert s.skewness == pytest.approx(-4 * v ** 1.5 / 0.1 ** 2, rel=0.05)
    assert s.variance == pytest.approx(v, rel=0.02)


def test_fp_flux_decreases_with_mu():
    cs = [abs(stationary_fp_solve(m, 1.0).c) for m in (0.2, 0.8, 1.6, 3.2)]
    assert all(a > b for a, b in zip(cs, cs[1:]))


def test_fp_grid_too_narrow():
    with pytest.raises(GridError):
        stationary_fp_solve(1.0, 1.0, FpGrid(lower=-2.0, upper=2.0))


def test_fp_grid_point_limit():
    with pytest.raises(GridError):
        stationary_fp_solve(1.0, 1.0, FpGrid(spacing=1e-6, max_points=1000))


@given(st.floats(0.2, 3.0), st.floats(0.5, 1.5))
def test_fp_normalised(mu, sigma):
    s = stationary_fp_solve(mu, sigma, FpGrid(spacing=None))
    assert trapz(s.p, s.grid) == pytest.approx(1.0, abs=1e-9)
    assert np.all(s.p >= 0)
