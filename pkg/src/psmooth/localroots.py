"""Roots of integer polynomials modulo primes, prime powers and composites.

sigma(f; n) counts residues a mod n with n | f(a).  Prime powers go through
Hensel lifting; composites through the Chinese remainder theorem.  The
derived functions sigma_star and G_value are returned as exact Fractions.

sigma_at_primes evaluates sigma(f; p) for a whole numpy array of primes at
once (Frobenius t^p mod f, then a gcd degree), which is what the Euler
products in psmooth.analytic and psmooth.meanvalue run on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from math import gcd, prod
from typing import Sequence

import numpy as np
from sympy import factorint

from psmooth.errors import DomainError, NotAdmissibleError, ResourceError
from psmooth.polycore import modp
from psmooth.polycore.poly import Poly, content, discriminant

HENSEL_CAP = 1 << 40
DEFAULT_SEED = 0

RationalValue = Fraction


def _ord(p: int, n: int) -> int:
    k = 0
    while n and n % p == 0:
        n //= p
        k += 1
    return k


# ---------------------------------------------------------------------------
# primes


def roots_mod_p(f: Poly, p: int, seed: int = DEFAULT_SEED) -> list[int]:
    """Sorted distinct roots of f in [0, p)."""
    return _roots_mod_p(f.coeffs, p, seed)


@lru_cache(maxsize=1 << 16)
def _roots_mod_p(coeffs: tuple[int, ...], p: int, seed: int) -> list[int]:
    return modp.roots_mod_prime(coeffs, p, seed)


# ---------------------------------------------------------------------------
# prime powers


@dataclass(frozen=True)
class LocalRootData:
    prime: int
    level: int
    roots: tuple[int, ...]
    simple: tuple[int, ...]  # level-1 roots with f'(r) != 0 mod p
    singular: tuple[int, ...]  # level-1 roots with f'(r) = 0 mod p

    @property
    def count(self) -> int:
        return len(self.roots)

    @property
    def modulus(self) -> int:
        return self.prime**self.level

    def as_dict(self) -> dict:
        return {
            "prime": self.prime,
            "level": self.level,
            "count": self.count,
            "roots": list(self.roots),
            "simple": list(self.simple),
            "singular": list(self.singular),
        }


def _lift(f: Poly, df: Poly, p: int, roots: Sequence[int], j: int) -> list[int]:
    """Roots mod p^(j+1) lying over the given roots mod p^j."""
    m = p**j
    M = m * p
    out = []
    for r in roots:
        d = df.eval_mod(r, p)
        if d:
            fr = f.eval_mod(r, M) // m
            i = (-fr * pow(d, -1, p)) % p
            out.append(r + i * m)
        elif p < modp.ENUMERATION_LIMIT:
            out.extend(r + i * m for i in range(p) if f.eval_mod(r + i * m, M) == 0)
        elif f.eval_mod(r, M) == 0:
            # f(r + i p^j) = f(r) mod p^(j+1) when p | f'(r): all lifts or none
            out.extend(r + i * m for i in range(p))
    return sorted(out)


def hensel_sigma_table(
    f: Poly, p: int, max_level: int, cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED
) -> list[LocalRootData]:
    """Root sets of a primitive f modulo p, p^2, ..., p^max_level."""
    if max_level < 1:
        raise DomainError("max_level must be at least 1")
    if p**max_level > cap:
        raise ResourceError(f"{p}^{max_level} exceeds the Hensel cap {cap}")
    if content(f) % p == 0:
        raise DomainError(f"f vanishes identically modulo {p}")
    df = f.derivative()
    level1 = roots_mod_p(f, p, seed)
    simple = tuple(r for r in level1 if df.eval_mod(r, p))
    singular = tuple(r for r in level1 if not df.eval_mod(r, p))
    out = []
    roots = level1
    for j in range(1, max_level + 1):
        if j > 1:
            roots = _lift(f, df, p, roots, j - 1)
        out.append(LocalRootData(p, j, tuple(roots), simple, singular))
    return out


@lru_cache(maxsize=1 << 16)
def _sigma_pp(coeffs: tuple[int, ...], p: int, nu: int, cap: int, seed: int) -> int:
    f = Poly(coeffs)
    if nu == 0:
        return 1
    e = _ord(p, content(f))
    if nu <= e:
        return p**nu
    if e:
        return p**e * _sigma_pp(f.exact_div(p**e).coeffs, p, nu - e, cap, seed)
    roots = roots_mod_p(f, p, seed)
    if nu == 1 or not roots:
        return len(roots)
    df = f.derivative()
    singular = [r for r in roots if df.eval_mod(r, p) == 0]
    count = len(roots) - len(singular)  # simple roots lift uniquely
    if singular:
        if p**nu > cap:
            raise ResourceError(f"singular Hensel lifting to {p}^{nu} exceeds the cap {cap}")
        level = singular
        for j in range(1, nu):
            level = _lift(f, df, p, level, j)
            if not level:
                break
        count += len(level)
    return count


def sigma_prime_power(f: Poly, p: int, nu: int, cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED) -> int:
    if not f:
        raise DomainError("zero polynomial")
    return _sigma_pp(f.coeffs, p, nu, cap, seed)


def sigma(f: Poly, n: int, cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED) -> int:
    """#{a mod n : f(a) = 0 mod n}."""
    if n <= 0:
        raise DomainError("modulus must be a positive integer")
    if not f:
        raise DomainError("zero polynomial")
    out = 1
    for p, nu in factorint(n).items():
        out *= _sigma_pp(f.coeffs, p, nu, cap, seed)
        if not out:
            return 0
    return out


def sigma_star(f: Poly, n: int, cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED) -> Fraction:
    """prod over p^nu || n of sigma(f;p^nu) - sigma(f;p^(nu+1))/p."""
    if n <= 0:
        raise DomainError("modulus must be a positive integer")
    out = Fraction(1)
    for p, nu in factorint(n).items():
        out *= _sigma_pp(f.coeffs, p, nu, cap, seed) - Fraction(_sigma_pp(f.coeffs, p, nu + 1, cap, seed), p)
    return out


def G_value(f: Poly, n: int, seed: int = DEFAULT_SEED) -> Fraction:
    """prod over p | n of (1 - sigma(f;p)/p)^(-1)."""
    if n <= 0:
        raise DomainError("modulus must be a positive integer")
    out = Fraction(1)
    for p in factorint(n):
        s = _sigma_pp(f.coeffs, p, 1, HENSEL_CAP, seed)
        if s >= p:
            raise NotAdmissibleError(p)
        out *= Fraction(p, p - s)
    return out


# ---------------------------------------------------------------------------
# root sets


def _roots_prime_power(f: Poly, p: int, nu: int, cap: int, seed: int) -> list[int]:
    e = _ord(p, content(f))
    if e:
        if nu <= e:
            return list(range(p**nu))
        # roots of f/p^e mod p^(nu-e), each extended to all classes mod p^nu
        base = _roots_prime_power(f.exact_div(p**e), p, nu - e, cap, seed)
        m = p ** (nu - e)
        return sorted(r + k * m for r in base for k in range(p**e))
    if p**nu > cap:
        raise ResourceError(f"{p}^{nu} exceeds the Hensel cap {cap}")
    return list(hensel_sigma_table(f, p, nu, cap, seed)[-1].roots)


def _crt_combine(parts: list[tuple[int, list[int]]]) -> list[int]:
    """All x mod prod(m) with x = r_i mod m_i for some choice of r_i in each list."""
    M = prod(m for m, _ in parts)
    coefs = []
    for m, _ in parts:
        Mi = M // m
        coefs.append(Mi * pow(Mi, -1, m) % M if m > 1 else 0)
    out = []
    for choice in iproduct(*(rs for _, rs in parts)):
        out.append(sum(c * r for c, r in zip(coefs, choice)) % M)
    return sorted(out)


def root_set(f: Poly, h: int, cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED) -> list[int]:
    """{1 <= b <= h : h | f(b)}, residue 0 written as h."""
    return root_set_multi([f], [h], cap, seed)


def root_set_multi(
    fs: Sequence[Poly], hs: Sequence[int], cap: int = HENSEL_CAP, seed: int = DEFAULT_SEED
) -> list[int]:
    """{1 <= b <= h_1...h_k : h_i | f_i(b) for each i} for pairwise coprime h_i."""
    if len(fs) != len(hs):
        raise DomainError("need one modulus per polynomial")
    for i in range(len(hs)):
        if hs[i] <= 0:
            raise DomainError("moduli must be positive")
        for j in range(i):
            if gcd(hs[i], hs[j]) != 1:
                raise DomainError(f"moduli {hs[j]} and {hs[i]} are not coprime")
    parts: list[tuple[int, list[int]]] = []
    for f, h in zip(fs, hs):
        for p, nu in factorint(h).items():
            rs = _roots_prime_power(f, p, nu, cap, seed)
            if not rs:
                return []
            parts.append((p**nu, rs))
    H = prod(hs)
    if not parts:
        return [H]
    return sorted(r if r else H for r in _crt_combine(parts))


# ---------------------------------------------------------------------------
# sigma(f; p) for many primes at once

_VEC_LIMIT = 1 << 31  # p^2 must fit in int64


def _vec_powmod(base: np.ndarray, exps: np.ndarray, p: np.ndarray) -> np.ndarray:
    result = np.ones_like(p)
    b = base % p
    e = exps.copy()
    while e.any():
        odd = (e & 1).astype(bool)
        result = np.where(odd, result * b % p, result)
        b = b * b % p
        e >>= 1
    return result


def _vec_mulmod(a: np.ndarray, b: np.ndarray, f: np.ndarray, p: np.ndarray) -> np.ndarray:
    """a*b mod (monic f, p); a, b have shape (d, N), f holds the d low coefficients."""
    d = a.shape[0]
    c = np.zeros((2 * d - 1, a.shape[1]), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            c[i + j] = (c[i + j] + a[i] * b[j] % p) % p
    return _vec_reduce(c, f, p)


def _vec_reduce(c: np.ndarray, f: np.ndarray, p: np.ndarray) -> np.ndarray:
    d = f.shape[0]
    c = c.copy()
    for k in range(c.shape[0] - 1, d - 1, -1):
        lead = c[k]
        for j in range(d):
            c[k - d + j] = (c[k - d + j] - lead * f[j] % p) % p
    return c[:d]


def _vec_degree(a: np.ndarray) -> np.ndarray:
    nz = a != 0
    rev = nz[::-1]
    has = nz.any(axis=0)
    return np.where(has, a.shape[0] - 1 - rev.argmax(axis=0), -1)


def _vec_gcd_degree(A: np.ndarray, B: np.ndarray, p: np.ndarray) -> np.ndarray:
    """deg gcd(A, B) lane by lane, using only cross-multiplied eliminations."""
    A, B = A.copy(), B.copy()
    L = A.shape[0]
    lanes = np.arange(A.shape[1])
    rows = np.arange(L)[:, None]
    dA, dB = _vec_degree(A), _vec_degree(B)
    while True:
        active = dB >= 0
        if not active.any():
            return dA
        swap = active & (dA < dB)
        if swap.any():
            A[:, swap], B[:, swap] = B[:, swap], A[:, swap].copy()
            dA, dB = np.where(swap, dB, dA), np.where(swap, dA, dB)
        step = dB >= 0
        if not step.any():
            return dA
        s = np.where(step, dA - dB, 0)
        la = A[np.maximum(dA, 0), lanes]
        lb = B[np.maximum(dB, 0), lanes]
        idx = rows - s[None, :]
        shifted = np.where(idx >= 0, np.take_along_axis(B, np.clip(idx, 0, L - 1), axis=0), 0)
        newA = (A * lb % p - shifted * la % p) % p
        A = np.where(step[None, :], newA, A)
        dA = np.where(step, _vec_degree(A), dA)


def _batch_generic(f: Poly, primes: np.ndarray) -> np.ndarray:
    """sigma(f; p) for primes p < 2^31 not dividing lc(f), p > deg f."""
    D = f.degree
    p = primes.astype(np.int64)
    N = p.shape[0]
    if D == 1:
        return np.ones(N, dtype=np.int64)
    rows = []
    for c in f.coeffs:
        if abs(c) < (1 << 62):
            rows.append(np.int64(c) % p)
        else:
            rows.append(np.array([c % int(q) for q in p], dtype=np.int64))
    coeffs = np.stack(rows)
    inv = _vec_powmod(coeffs[D], p - 2, p)
    mon = coeffs[:D] * inv % p  # low coefficients of the monic reduction
    # x = t^p mod f by left-to-right square-and-multiply; multiplying by t is a shift
    x = np.zeros((D, N), dtype=np.int64)
    x[0] = 1
    nbits = int(p.max()).bit_length()
    for bit in range(nbits - 1, -1, -1):
        x = _vec_mulmod(x, x, mon, p)
        on = ((p >> bit) & 1).astype(bool)
        if on.any():
            shifted = np.zeros((D + 1, N), dtype=np.int64)
            shifted[1:] = x
            shifted = _vec_reduce(shifted, mon, p)
            x = np.where(on[None, :], shifted, x)
    x[1] = (x[1] - 1) % p  # t^p - t
    full = np.zeros((D + 1, N), dtype=np.int64)
    full[:D] = mon
    full[D] = 1
    padded = np.zeros((D + 1, N), dtype=np.int64)
    padded[:D] = x
    return _vec_gcd_degree(full, padded, p)


def sigma_at_primes(f: Poly, primes, seed: int = DEFAULT_SEED) -> np.ndarray:
    """sigma(f; p) for every prime in the array."""
    primes = np.asarray(primes, dtype=np.int64)
    out = np.zeros(primes.shape[0], dtype=np.int64)
    if primes.size == 0:
        return out
    D = f.degree
    if D < 1:
        c = f[0]
        return np.where(c % primes == 0, primes, 0) if f else primes.copy()
    lc = f.lc
    cont = content(f)
    special = (primes <= D) | (primes >= _VEC_LIMIT) | (lc % primes == 0) | (cont % primes == 0)
    gen = ~special
    if gen.any():
        out[gen] = _batch_generic(f, primes[gen])
    for i in np.flatnonzero(special):
        out[i] = _sigma_pp(f.coeffs, int(primes[i]), 1, HENSEL_CAP, seed)
    return out


def generic_prime_filter(f: Poly) -> int:
    """An integer whose prime divisors are exactly the primes where sigma(f;p^nu)
    may differ from sigma(f;p) for some nu >= 2 (divisors of lc * disc * content)."""
    d = discriminant(f) if f.degree >= 1 else 1
    return abs(f.lc * d * content(f)) or 1
