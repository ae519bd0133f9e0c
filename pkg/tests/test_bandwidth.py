import numpy as np
import pytest

from softening.bandwidth import improved_sheather_jones, select_bandwidth, silverman
from softening.errors import EstimationError


def test_isj_gaussian_near_amise_optimum(rng):
    x = rng.standard_normal(2000)
    # AMISE-optimal width for a standard normal is (4/3)^(1/5) n^(-1/5)
    assert improved_sheather_jones(x) == pytest.approx((4 / 3) ** 0.2 * 2000 ** -0.2, rel=0.15)


def test_isj_narrower_than_silverman_on_bimodal(rng):
    x = np.concatenate([rng.normal(-2, 0.3, 1000), rng.normal(2, 0.3, 1000)])
    assert improved_sheather_jones(x) < 0.5 * silverman(x)


def test_isj_scales_with_data(rng):
    x = rng.standard_normal(500)
    assert improved_sheather_jones(3.0 * x) == pytest.approx(3.0 * improved_sheather_jones(x), rel=1e-10)


def test_isj_zero_range():
    with pytest.raises(EstimationError):
        improved_sheather_jones(np.ones(10))


def test_select_fixed_and_degenerate(rng):
    assert select_bandwidth(rng.standard_normal(50), 0.3) == (0.3, "fixed")
    h, how = select_bandwidth(np.full(40, 2.0))
    assert how == "degenerate" and h > 0
    with pytest.raises(ValueError):
        select_bandwidth(rng.standard_normal(50), "scott")
    with pytest.raises(ValueError):
        select_bandwidth(rng.standard_normal(50), -1.0)


def test_select_falls_back_to_silverman():
    # two distinct values: the fixed-point equation has no root
    x = np.array([0.0] * 20 + [1.0] * 20)
    with pytest.raises(EstimationError):
        improved_sheather_jones(x)
    assert select_bandwidth(x) == (silverman(x), "silverman")
