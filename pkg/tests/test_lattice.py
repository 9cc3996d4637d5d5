import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsl.errors import ContractError, LatticeRangeError, ValidationError
from qsl.lattice import (GridFunction, LatticeSpec, Scaled, bilinear_pairing, delta_q, interior_pairing,
                         jackson_integral, lambda_inv_dq, point, q_derivative, wronskian, wronskian_profile,
                         resolve, scaled_cumsum)

finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: abs(v) > 1e-6)


def test_lattice_validation():
    with pytest.raises(ValidationError, match=r"q must lie in \(0,1\)"):
        LatticeSpec(1.5, -30, 50)
    with pytest.raises(ValidationError):
        LatticeSpec(0.8, 5, 5)
    with pytest.raises(ValidationError):
        LatticeSpec(0.8, 0, 3)          # fewer than 8 points
    with pytest.raises(ValidationError):
        LatticeSpec(0.8, 0.5, 20)


def test_points_and_positions(lat):
    assert lat.size == 81
    assert point(lat, 0) == 1.0
    assert point(lat, 3) == pytest.approx(0.8 ** 3, rel=1e-15)
    assert lat.pos(lat.n_outer) == 0 and lat.pos(lat.n_inner) == lat.size - 1
    with pytest.raises(LatticeRangeError):
        lat.pos(51)


@pytest.mark.parametrize("k", [0, 1, 2, 3.5])
def test_jackson_integral_of_powers(lat, k):
    # (1-q) sum_{n=a}^{b} q^{n(k+1)} as a finite geometric series
    q, a, b = lat.q, lat.n_outer, lat.n_inner
    r = q ** (k + 1)
    exact = (1 - q) * r ** a * (1 - r ** (b - a + 1)) / (1 - r)
    f = GridFunction.from_callable(lat, lambda x: x ** k)
    assert jackson_integral(f) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_q_derivative_of_powers(lat, k):
    q = lat.q
    f = GridFunction.from_callable(lat, lambda x: x ** k)
    bracket = (1 - q ** k) / (1 - q)
    for n in (-5, 0, 7, 30):
        x = point(lat, n)
        assert q_derivative(f, n) == pytest.approx(bracket * x ** (k - 1), rel=1e-12)
        # D_q evaluated at x/q
        assert lambda_inv_dq(f, n) == pytest.approx(bracket * (x / q) ** (k - 1), rel=1e-12)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_q_laplacian_of_powers(lat, k):
    q = lat.q
    f = GridFunction.from_callable(lat, lambda x: x ** k)
    c = q ** -k - (1 + q) / q + q ** (k - 1)
    for n in (-10, 0, 20):
        x = point(lat, n)
        assert delta_q(f, n) == pytest.approx(c * x ** (k - 2), rel=1e-10, abs=1e-12 * x ** (k - 2))


def test_stencils_need_neighbours(lat):
    f = GridFunction.from_callable(lat, lambda x: x)
    with pytest.raises(LatticeRangeError):
        delta_q(f, lat.n_outer)
    with pytest.raises(LatticeRangeError):
        q_derivative(f, lat.n_inner)


def test_wronskian_of_one_and_x(lat):
    # W(1, x) = ((1-q)/x)(x/q - x) = (1-q)^2 / q at every point
    one = GridFunction.from_callable(lat, lambda x: np.ones_like(x))
    xs = GridFunction.from_callable(lat, lambda x: x)
    target = (1 - lat.q) ** 2 / lat.q
    m, l = wronskian_profile(one, xs)
    assert np.allclose(resolve(m, l), target, rtol=1e-12)
    assert wronskian(one, xs, 4) == pytest.approx(target, rel=1e-12)
    assert wronskian(xs, one, 4) == pytest.approx(-target, rel=1e-12)


def test_pairings(lat):
    rng = np.random.default_rng(0)
    f = GridFunction(lat, rng.normal(size=lat.size) + 1j * rng.normal(size=lat.size))
    g = GridFunction(lat, rng.normal(size=lat.size))
    w = lat.weights
    assert complex(bilinear_pairing(f, g)) == pytest.approx(np.sum(w * f.values * g.values), rel=1e-13)
    assert complex(bilinear_pairing(f, g)) == pytest.approx(complex(bilinear_pairing(g, f)), rel=1e-15)
    inner = np.sum((w * f.values * g.values)[1:-1])
    assert complex(interior_pairing(f, g)) == pytest.approx(inner, rel=1e-13)


def test_different_lattices_rejected(lat):
    other = LatticeSpec(0.7, -30, 50)
    with pytest.raises(ContractError):
        wronskian_profile(GridFunction(lat, np.ones(lat.size)), GridFunction(other, np.ones(other.size)))


@given(finite, finite, st.integers(-600, 600), st.integers(-600, 600))
def test_scaled_products_match_logs(a, b, ea, eb):
    x = Scaled(complex(a), ea * 1.0).normalized()
    y = Scaled(complex(b), eb * 1.0).normalized()
    p = x * y
    assert p.log_abs() == pytest.approx(math.log(abs(a)) + ea + math.log(abs(b)) + eb, abs=1e-9)
    assert np.sign(complex(p.mantissa).real) == np.sign(a * b)


@given(finite, finite)
def test_scaled_sum_matches_floats(a, b):
    s = Scaled.of(a) + Scaled.of(b)
    assert complex(s) == pytest.approx(a + b, rel=1e-12, abs=1e-9 * (abs(a) + abs(b)))


def test_scaled_survives_overflow():
    big = Scaled(1.0, 800.0)
    tiny = Scaled(1.0, -800.0)
    assert (big * tiny).log_abs() == pytest.approx(0.0, abs=1e-12)
    assert not big.fits()
    assert complex((big * tiny).collapse()) == pytest.approx(1.0)


def test_gridfunction_renormalises_into_band(lat):
    mant = np.full(lat.size, 1e200)
    f = GridFunction(lat, mant, np.zeros(lat.size)).renormalized()
    assert np.all(np.abs(f.mantissa) <= 1e100)
    assert np.allclose(f.log_abs(), math.log(1e200))


def test_gridfunction_sum_with_zeros(lat):
    a = GridFunction(lat, np.zeros(lat.size))
    b = GridFunction(lat, np.arange(lat.size, dtype=float))
    assert np.array_equal((a + b).values, b.values)


@settings(max_examples=30)
@given(st.lists(st.floats(-700, 700), min_size=3, max_size=40))
def test_scaled_cumsum_matches_logsumexp(logs):
    logs = np.array(logs)
    mant = np.ones_like(logs)
    m, l = scaled_cumsum(mant, logs)
    expect = np.logaddexp.accumulate(logs)
    assert np.allclose(np.log(np.abs(m)) + l, expect, atol=1e-9)
