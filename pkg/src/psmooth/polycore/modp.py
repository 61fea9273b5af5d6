"""Polynomial arithmetic over the prime field F_p.

Polynomials are plain lists of ints in [0, p), ascending degree, with no
trailing zeros.  Everything here is scalar Python; the vectorised
many-primes path lives in psmooth.localroots.
"""

from __future__ import annotations

import random

import numpy as np

from psmooth.errors import DomainError

ENUMERATION_LIMIT = 1 << 14


def reduce(coeffs, p: int) -> list[int]:
    c = [int(a) % p for a in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return c


def monic(a: list[int], p: int) -> list[int]:
    if not a:
        return a
    inv = pow(a[-1], -1, p)
    return [c * inv % p for c in a]


def divmod_p(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero mod p")
    r = list(a)
    db = len(b) - 1
    if len(r) - 1 < db:
        return [], r
    inv = pow(b[-1], -1, p)
    q = [0] * (len(r) - db)
    for s in range(len(r) - 1 - db, -1, -1):
        c = r[s + db] * inv % p
        q[s] = c
        if c:
            for i, bi in enumerate(b):
                r[s + i] = (r[s + i] - c * bi) % p
    while r and r[-1] == 0:
        r.pop()
    return q, r


def rem_p(a: list[int], b: list[int], p: int) -> list[int]:
    return divmod_p(a, b, p)[1]


def gcd_p(a: list[int], b: list[int], p: int) -> list[int]:
    """Monic gcd (empty list when both are zero)."""
    while b:
        a, b = b, rem_p(a, b, p)
    return monic(a, p)


def mul_p(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return reduce(out, p)


def mulmod_p(a: list[int], b: list[int], f: list[int], p: int) -> list[int]:
    return rem_p(mul_p(a, b, p), f, p)


def powmod_p(base: list[int], e: int, f: list[int], p: int) -> list[int]:
    result = [1]
    base = rem_p(base, f, p)
    while e:
        if e & 1:
            result = mulmod_p(result, base, f, p)
        base = mulmod_p(base, base, f, p)
        e >>= 1
    return rem_p(result, f, p)


def sub_p(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    return reduce(((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)), p)


def eval_all_residues(coeffs, p: int) -> np.ndarray:
    """f(r) mod p for every r in [0, p); p must be below 2^31 / p-safe range."""
    r = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in reversed(list(coeffs)):
        acc = (acc * r + (int(c) % p)) % p
    return acc


def distinct_root_part(f: list[int], p: int) -> list[int]:
    """gcd(f, t^p - t): the product of (t - r) over the roots r of f in F_p."""
    if len(f) <= 1:
        return [1]
    tp = powmod_p([0, 1], p, f, p)
    return gcd_p(f, sub_p(tp, [0, 1], p), p)


def _split(g: list[int], p: int, rng: random.Random, out: list[int]) -> None:
    # g is monic, squarefree, and splits into distinct linear factors over F_p
    d = len(g) - 1
    if d == 0:
        return
    if d == 1:
        out.append((-g[0]) % p)
        return
    while True:
        a = rng.randrange(p)
        h = powmod_p([a, 1], (p - 1) // 2, g, p)
        h = sub_p(h, [1], p)
        w = gcd_p(g, h, p)
        if 0 < len(w) - 1 < d:
            _split(w, p, rng, out)
            _split(divmod_p(g, w, p)[0], p, rng, out)
            return


def roots_mod_prime(coeffs, p: int, seed: int = 0) -> list[int]:
    """Sorted distinct roots in [0, p) of the integer polynomial with the given
    ascending coefficients.  Raises DomainError when it vanishes identically mod p."""
    f = reduce(coeffs, p)
    if not f:
        raise DomainError(f"polynomial vanishes identically modulo {p}")
    if len(f) == 1:
        return []
    if p < ENUMERATION_LIMIT:
        vals = eval_all_residues(f, p)
        return [int(r) for r in np.flatnonzero(vals == 0)]
    f = monic(f, p)
    g = distinct_root_part(f, p)
    out: list[int] = []
    _split(g, p, random.Random(seed ^ p), out)
    return sorted(out)


def has_common_root(a, b, p: int) -> int | None:
    """A common root of a and b in F_p, or None."""
    fa, fb = reduce(a, p), reduce(b, p)
    if not fa:
        fa, fb = fb, fa
    if not fa:
        return 0
    g = gcd_p(fa, fb, p) if fb else monic(fa, p)
    if len(g) <= 1:
        return None
    rts = roots_mod_prime(g, p)
    return rts[0] if rts else None
