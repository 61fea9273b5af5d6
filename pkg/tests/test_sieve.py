from __future__ import annotations

import random
from itertools import accumulate, combinations
from math import gcd

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from psmooth.errors import DomainError, ResourceError
from psmooth.polycore import FactoredPoly, parse_poly
from psmooth.sieve import (
    M_count,
    PrimeTable,
    cache_path,
    error_term,
    is_prime,
    load_or_build,
    poly_smooth_count,
    prime_count,
    prime_count_ap,
    prime_values_count,
    prime_values_probable,
    shifted_prime_smooth_count,
    sieve_chunk,
    smooth_count,
    smooth_count_ap,
)

from .oracles import is_smooth, simple_primes

F = FactoredPoly.parse

SIEVE_FIXTURES = [
    "t",
    "[t;t+2]",
    "t^2+1",
    "[t;t^2+1]",
    "[t^2+2;t+3;t+5]",
    "t-3",
    "2t+3",
    "t^3-2",
    "t^2+2t+2",
]
X_CHECKS = [1, 2, 10, 99, 1000, 4321, 10_000]


@pytest.mark.parametrize("text", SIEVE_FIXTURES)
def test_poly_smooth_count_matches_trial_division(text):
    Fp = F(text)
    f = Fp.expand()
    for y in (2, 3, 5, 10, 50, 1000):
        prefix = [0] + list(accumulate(int(is_smooth(f(n), y)) for n in range(1, 10_001)))
        for x in X_CHECKS:
            assert poly_smooth_count(Fp, x, y) == prefix[x], (text, x, y)


def test_smooth_count_examples():
    assert smooth_count(100, 10) == 46
    assert smooth_count(10, 2) == 4
    assert smooth_count(57, 100) == 57
    assert smooth_count(57.9, 1000) == 57
    assert smooth_count(0, 5) == 0


def test_smooth_count_ap_examples():
    assert smooth_count_ap(100, 10, 1, 0) == 46
    assert smooth_count_ap(100, 10, 2, 1) == 15
    assert smooth_count_ap(0, 10, 3, 1) == 0


@pytest.mark.parametrize("q", [1, 2, 3, 4, 7, 12])
def test_smooth_count_splits_over_residues(q):
    x, y = 20_000, 30
    assert sum(smooth_count_ap(x, y, q, a) for a in range(q)) == smooth_count(x, y)


def test_poly_smooth_examples():
    assert poly_smooth_count(F("t"), 1000, 7) == smooth_count(1000, 7)
    assert poly_smooth_count(F("t^2+1"), 10, 5) == 4
    assert poly_smooth_count(F("t-3"), 5, 2) == 4


def test_content_must_be_smooth():
    assert poly_smooth_count(F("7*[t]"), 100, 5) == 0
    assert poly_smooth_count(F("3*[t]"), 100, 5) == smooth_count(100, 5)


def test_threshold_does_not_change_counts():
    for text in ["t^2+1", "[t;t+2]", "t^3-2"]:
        base = poly_smooth_count(F(text), 5000, 1000)
        for T in (3, 50, 200):
            assert poly_smooth_count(F(text), 5000, 1000, threshold=T) == base
            assert poly_smooth_count(F(text), 5000, 1000, chunk=777, threshold=T) == base
    assert smooth_count(30_000, 500, threshold=20) == smooth_count(30_000, 500)


def test_values_beyond_int64():
    Fp = F("t^6+1")
    f = Fp.expand()
    want = sum(is_smooth(f(n), 200) for n in range(1, 2001))
    assert poly_smooth_count(Fp, 2000, 200) == want


def test_sieve_chunk_residuals_divide_values():
    g = parse_poly("t^3-2")
    ch = sieve_chunk(g, 50, 400, 30, 10)
    small = [p for p in simple_primes(10)]
    for i, n in enumerate(range(50, 400)):
        r = int(ch.residual[i])
        assert abs(g(n)) % r == 0
        assert all(r % p for p in small)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SIEVE_FIXTURES), st.integers(1, 3000), st.integers(1, 3000), st.integers(2, 200), st.integers(2, 200))
def test_monotone_in_x_and_y(text, x1, x2, y1, y2):
    x1, x2 = sorted((x1, x2))
    y1, y2 = sorted((y1, y2))
    Fp = F(text)
    a = poly_smooth_count(Fp, x1, y1)
    assert a <= poly_smooth_count(Fp, x2, y1)
    assert a <= poly_smooth_count(Fp, x1, y2)


# ---------------------------------------------------------------------------
# primes


def test_prime_counts():
    assert prime_count(10) == 4
    assert prime_count(10**6) == 78498
    assert prime_count_ap(100, 4, 1) == 11
    assert prime_count_ap(12345, 1, 0) == prime_count(12345)


@settings(max_examples=200)
@given(st.integers(-10, 10**12))
def test_is_prime_matches_sympy(n):
    assert is_prime(n) == sympy.isprime(abs(n))


def test_is_prime_large():
    for n in [2**61 - 1, 2**89 - 1, 10**18 + 3, 3825123056546413051, 318665857834031151167461]:
        assert is_prime(n) == sympy.isprime(abs(n))


def test_prime_table_self_test_and_cap():
    t = PrimeTable.build(10**6)
    assert t.count(100) == 25 and t.count(10**6) == 78498
    assert list(t.primes(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    with pytest.raises(ResourceError):
        PrimeTable.build(10**6, cap=1000)
    with pytest.raises(ResourceError):
        t.count(10**7)


def test_prime_table_cache_roundtrip(tmp_path):
    t = load_or_build(200_000, tmp_path)
    path = cache_path(tmp_path, 200_000)
    assert path.exists()
    assert path.read_bytes()[:5] == b"PSPT1"
    again = load_or_build(100_000, tmp_path)
    assert again.meta.get("source") == "cache"
    assert again.limit == t.limit
    assert np.array_equal(again.odd_flags, t.odd_flags)
    path.write_bytes(b"junk" + path.read_bytes())
    with pytest.raises(DomainError):
        PrimeTable.load(path)


def test_shifted_prime_examples():
    assert shifted_prime_smooth_count(1, 20, 3) == 7
    assert shifted_prime_smooth_count(1, 2, 2) == 1
    assert shifted_prime_smooth_count(-1, 20, 3) == 6
    with pytest.raises(DomainError):
        shifted_prime_smooth_count(5, 4, 2)
    with pytest.raises(DomainError):
        shifted_prime_smooth_count(0, 100, 2)


@pytest.mark.parametrize("a", [1, -1, 2, 3, -5])
def test_shifted_prime_against_enumeration(a):
    x, y = 30_000, 50
    want = sum(1 for q in simple_primes(x) if q != a and is_smooth(q - a, y))
    assert shifted_prime_smooth_count(a, x, y) == want
    assert shifted_prime_smooth_count(a, x, y) <= prime_count(x)


def test_shifted_prime_full_smoothness_bound():
    # with y >= x every nonzero q - a is smooth; only q = a drops out
    assert shifted_prime_smooth_count(1, 5000, 5000) == prime_count(5000)
    assert shifted_prime_smooth_count(3, 5000, 5000) == prime_count(5000) - 1


def test_prime_values_examples():
    assert prime_values_count(F("t"), 10) == 4
    assert prime_values_count(F("[t;t+2]"), 10) == 2
    assert prime_values_count(F("t^2+1"), 10) == 5
    with pytest.raises(DomainError):
        prime_values_count(F("[(t+1)^2]"), 10)
    assert not prime_values_probable(F("t^2+1"), 10**6)


def test_prime_values_linear_matches_progressions():
    rng = random.Random(3)
    done = 0
    while done < 20:
        q, b = rng.randint(1, 30), rng.randint(1, 60)
        if gcd(q, b) != 1:
            continue
        x = 3000
        want = prime_count_ap(q * x + b, q, b) - prime_count_ap(b, q, b)
        assert prime_values_count(F(f"{q}t+{b}"), x) == want, (q, b)
        done += 1


def test_prime_values_against_enumeration():
    for text in ["t^2+1", "[t;t+2]", "[t;t+4;t+6]", "t^3-2"]:
        Fp = F(text)
        want = sum(all(sympy.isprime(abs(g(n))) for g in Fp.polys) for n in range(1, 3001))
        assert prime_values_count(Fp, 3000) == want, text


def test_M_count_examples():
    assert M_count(F("t"), 20, 3) == 10
    assert M_count(F("[t;t+2]"), 10, 2) == 5
    assert M_count(F("t^2+1"), 30, 10**4) == 0


def test_inclusion_exclusion_identity():
    for text in ["[t;t+2]", "[t;t^2+1]", "[t^2+2;t+3;t+5]"]:
        Fp = F(text)
        for x in (1000, 10_000):
            for y in (10, 100):
                rhs = x
                for k in range(1, Fp.K + 1):
                    for S in combinations(Fp.polys, k):
                        rhs += (-1) ** k * M_count(FactoredPoly(1, 1, tuple((g, 1) for g in S)), x, y)
                assert poly_smooth_count(Fp, x, y) == rhs


def test_error_term_examples():
    e = error_term(F("t"), 100)
    assert e.count == 25
    assert e.error == pytest.approx(25 - 29.0809778, abs=1e-6)
    e = error_term(F("[t;t+1]"), 1000)
    assert e.constant == 0 and e.error == e.count == prime_values_count(F("[t;t+1]"), 1000)
    e = error_term(F("t"), 10**6)
    assert e.count == 78498 and abs(e.normalized) < 5
    with pytest.raises(DomainError):
        error_term(F("2*[t]"), 100)
