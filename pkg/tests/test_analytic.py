from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psmooth.analytic import (
    DickmanTable,
    default_table,
    dickman_rho,
    li_classic,
    li_poly,
    li_poly_weighted,
    mertens_rho,
    singular_series,
    singular_series_exact,
)
from psmooth.errors import DomainError, RangeError
from psmooth.polycore import FactoredPoly

from .oracles import li_oracle, rho_oracle, twin_constant_product

F = FactoredPoly.parse


# ---------------------------------------------------------------------------
# Dickman rho


def test_rho_examples():
    assert dickman_rho(0.7) == 1
    assert dickman_rho(0.0) == 1
    assert dickman_rho(2.0) == pytest.approx(1 - math.log(2), abs=1e-12)
    assert dickman_rho(3.0) == pytest.approx(rho_oracle(3.0), abs=1e-8)
    with pytest.raises(RangeError):
        dickman_rho(10.5)
    with pytest.raises(DomainError):
        dickman_rho(-1)


def test_rho_large_u():
    assert abs(dickman_rho(10.0) - 2.77017183772596e-11) <= 1e-12
    assert 0 < dickman_rho(12.0, u_max=12) < dickman_rho(11.0, u_max=12) < dickman_rho(10.0)


@settings(max_examples=200)
@given(st.floats(1.0, 2.0))
def test_rho_closed_form_on_1_2(u):
    assert abs(dickman_rho(u) - (1 - math.log(u))) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(2.0, 3.0))
def test_rho_closed_form_on_2_3(u):
    assert abs(dickman_rho(u) - rho_oracle(u)) <= 1e-9


def test_rho_dde_residual():
    # a small step keeps the jump of rho'' at the integers out of the difference
    h = 1e-6
    for u in np.linspace(1.05, 9.95, 891):
        d = (dickman_rho(u + h) - dickman_rho(u - h)) / (2 * h)
        assert abs(u * d + dickman_rho(u - 1)) <= 1e-6, u


def test_rho_decreasing_and_positive():
    v = default_table().values
    assert (v > 0).all()
    assert (np.diff(v) <= 0).all()


def test_table_csv_roundtrip():
    t = DickmanTable.build(4.0, 1 / 64)
    back = DickmanTable.from_csv(t.to_csv())
    assert back.step == t.step
    assert np.allclose(back.values, t.values, rtol=1e-11, atol=0)
    with pytest.raises(DomainError):
        DickmanTable.build(4.0, 0.3)


# ---------------------------------------------------------------------------
# logarithmic integrals


def test_li_classic_examples():
    assert li_classic(2) == 0
    assert li_classic(100) == pytest.approx(li_oracle(100), abs=1e-9)
    assert li_classic(-100) == -li_classic(100)
    assert li_classic(1e9) == pytest.approx(li_oracle(1e9), rel=1e-12)


@pytest.mark.parametrize("x", [1e3, 1e6, 1e9])
def test_calclem_grid(x):
    lx = math.log(x)
    for y in np.geomspace(2, x - 2, 60):
        lhs = li_classic(x) - li_classic(x - y) - y / lx
        assert abs(lhs) <= 5 * y / lx**2, (x, y)


def test_li_poly_examples():
    assert li_poly(F("t"), 100) == pytest.approx(li_classic(100), abs=1e-8)
    assert li_poly(F("t^2+1"), 0.5) == 0
    q, b, x = 5, 3, 20
    direct = li_poly(F(f"{q}t+{b}"), x)
    closed = (li_classic(q * x + b) - li_classic(max(b, 2))) / q
    assert abs(direct - closed) <= 1e-6
    with pytest.raises(DomainError):
        li_poly(F("t"), -1)


@pytest.mark.parametrize("q,b", [(3, 1), (7, 2), (10, 9), (1, 5)])
def test_li_poly_linear_closed_form(q, b):
    x = 1e5
    direct = li_poly(F(f"{q}t+{b}"), x)
    assert abs(direct - (li_classic(q * x + b) - li_classic(b)) / q) <= 1


def test_li_poly_weighted():
    f = F("t^2+2t+2")
    assert li_poly_weighted(f, [1], 1000) == pytest.approx(li_poly(f, 1000), rel=1e-12)
    w = li_poly_weighted(f, [5], 1000)
    assert 0 < w
    assert li_poly_weighted(f, [5], 0.5) == 0
    with pytest.raises(DomainError):
        li_poly_weighted(f, [1, 2], 10)


def test_li_poly_weighted_matches_quadrature():
    import mpmath

    mpmath.mp.dps = 20
    # 5 t^2 + 4 t + 1 >= 10 from t ~ 1.05 on: region boundary found independently
    g = lambda t: (t * t + 2 * t + 2) / 5
    t0 = float(mpmath.findroot(lambda t: g(t) - 2, 2.0))
    want = float(mpmath.quad(lambda t: 1 / mpmath.log(g(t)), [t0, 10, 100, 1000]))
    assert li_poly_weighted(F("t^2+2t+2"), [5], 1000) == pytest.approx(want, rel=1e-9)


# ---------------------------------------------------------------------------
# singular series


def test_singular_series_examples():
    assert singular_series(F("t"), 1000).value == 1.0
    assert singular_series(F("t"), 10**6).value == 1.0
    c = singular_series(F("[t;t+1]"), 1000)
    assert c.value == 0 and not c.admissible and c.witness_prime == 2
    assert not singular_series(F("2*[t^2+1]"), 100).admissible


def test_twin_constant():
    c = singular_series(F("[t;t+2]"), 10**7)
    assert abs(c.value - twin_constant_product(10**7)) <= 1e-5
    assert c.value == pytest.approx(1.3203236, abs=1e-6)


def test_exact_matches_float():
    polys = F("[t;t+2]").polys
    exact = singular_series_exact(polys, 2000)
    assert isinstance(exact, Fraction)
    assert float(exact) == pytest.approx(singular_series(F("[t;t+2]"), 2000).value, rel=1e-12)


@pytest.mark.parametrize("text", ["t^2+1", "[t;t+2]", "t^3-2", "[t+2;2t+3]", "t^2+2t+2", "[t^2+1;t^2+t+1]"])
def test_singular_series_stability(text):
    P = 10**5
    a = singular_series(F(text), P)
    b = singular_series(F(text), 2 * P)
    assert abs(b.value - a.value) <= a.tail_estimate


def test_singular_series_bad_truncation():
    with pytest.raises(DomainError):
        singular_series(F("t"), 1)


# ---------------------------------------------------------------------------
# Mertens surrogate


@given(st.floats(1.0, 2.0), st.floats(100, 1e12))
def test_mertens_exact_below_two(u, t):
    assert mertens_rho(u, t) == 1 - math.log(u)


def test_mertens_examples():
    assert mertens_rho(1.5, 1e6) == 1 - math.log(1.5)
    assert abs(mertens_rho(2.5, 1e8) - dickman_rho(2.5)) <= 0.05
    assert abs(mertens_rho(3.0, 1e10) - dickman_rho(3.0)) <= 0.03
    with pytest.raises(DomainError):
        mertens_rho(3.5, 1e8)
