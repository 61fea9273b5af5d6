"""Exact real-root isolation with Sturm sequences.

Used to locate the points where a polynomial crosses a given level, e.g.
the boundaries |F(t)| = 2 that split the domain of the logarithmic
integral.  Interval endpoints are Fractions; refinement is plain bisection.
"""

from __future__ import annotations

from fractions import Fraction

from psmooth.errors import DomainError
from psmooth.polycore.poly import Poly

QPoly = list  # ascending list of Fractions, no trailing zeros


def _q(p: Poly) -> QPoly:
    return [Fraction(c) for c in p.coeffs]


def _trim(c: QPoly) -> QPoly:
    while c and c[-1] == 0:
        c.pop()
    return c


def _rem(a: QPoly, b: QPoly) -> QPoly:
    r = list(a)
    db = len(b) - 1
    while len(r) - 1 >= db and r:
        f = r[-1] / b[-1]
        s = len(r) - 1 - db
        for i, c in enumerate(b):
            r[s + i] -= f * c
        r.pop()
        _trim(r)
    return r


def _eval(c: QPoly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def sturm_sequence(p: Poly) -> list[QPoly]:
    if p.degree < 1:
        raise DomainError("Sturm sequence needs a nonconstant polynomial")
    seq = [_q(p), _q(p.derivative())]
    while True:
        r = _rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return seq


def _variations(seq: list[QPoly], x: Fraction) -> int:
    signs = [s for s in (_sign(_eval(c, x)) for c in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(p: Poly, lo: Fraction, hi: Fraction, seq=None) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    seq = seq or sturm_sequence(p)
    return _variations(seq, Fraction(lo)) - _variations(seq, Fraction(hi))


def root_bound(p: Poly) -> Fraction:
    """Cauchy bound: every complex root has modulus < this."""
    lc = abs(p.lc)
    return 1 + Fraction(max(abs(c) for c in p.coeffs[:-1]), lc) if p.degree else Fraction(1)


def isolate_real_roots(p: Poly, lo=None, hi=None, tol: float = 1e-12) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals (a, b], each holding exactly one real root of p,
    with width at most tol.  Exact roots come back as degenerate (r, r)."""
    seq = sturm_sequence(p)
    B = root_bound(p)
    lo = Fraction(-B if lo is None else lo)
    hi = Fraction(B if hi is None else hi)
    tol = Fraction(tol)
    out: list[tuple[Fraction, Fraction]] = []
    stack = [(lo, hi, count_real_roots(p, lo, hi, seq))]
    while stack:
        a, b, n = stack.pop()
        if n == 0:
            continue
        if n == 1:
            out.append(_refine(seq[0], a, b, tol))
            continue
        m = (a + b) / 2
        stack.append((m, b, count_real_roots(p, m, b, seq)))
        stack.append((a, m, count_real_roots(p, a, m, seq)))
    out.sort()
    return out


def _refine(c: QPoly, a: Fraction, b: Fraction, tol: Fraction) -> tuple[Fraction, Fraction]:
    # exactly one simple-or-multiple root in (a, b]; squarefree part not needed
    # for sign tests at the ends when the root has odd multiplicity, so fall back
    # to Sturm counting when the signs agree.
    fb = _sign(_eval(c, b))
    if fb == 0:
        return (b, b)
    fa = _sign(_eval(c, a))
    if fa != 0 and fa != fb:
        while b - a > tol:
            m = (a + b) / 2
            fm = _sign(_eval(c, m))
            if fm == 0:
                return (m, m)
            if fm == fb:
                b = m
            else:
                a = m
        return (a, b)
    # even multiplicity: bisect by counting roots
    seq = sturm_sequence(Poly(_to_int(c)))
    while b - a > tol:
        m = (a + b) / 2
        if _sign(_eval(c, m)) == 0:
            return (m, m)
        if _variations(seq, a) - _variations(seq, m) == 1:
            b = m
        else:
            a = m
    return (a, b)


def _to_int(c: QPoly) -> list[int]:
    from math import lcm

    d = 1
    for a in c:
        d = lcm(d, a.denominator)
    return [int(a * d) for a in c]


def level_crossings(p: Poly, level: int, lo=None, hi=None, tol: float = 1e-12) -> list[float]:
    """Approximate real solutions of p(t) = level, each to within tol."""
    q = p - level
    if q.degree < 1:
        return []
    return [float((a + b) / 2) for a, b in isolate_real_roots(q, lo, hi, tol)]


def nonnegative_on_ray(p: Poly, lo) -> tuple[bool, Fraction | None]:
    """Decide exactly whether p(t) >= 0 for every real t >= lo.

    Returns (flag, witness) where witness is a rational point with p < 0
    when the flag is False.
    """
    lo = Fraction(lo)
    if p.degree < 1:
        ok = p.degree < 0 or p.lc >= 0
        return ok, (None if ok else lo)
    c = _q(p)
    if _eval(c, lo) < 0:
        return False, lo
    hi = max(lo, root_bound(p)) + 1
    if p.lc < 0:
        return False, hi
    seq = sturm_sequence(p)
    # p has constant sign strictly between consecutive roots; sample each gap.
    # With roots r_i in (a_i, b_i], b_i >= r_i and b_i < r_{i+1}.
    left = lo
    for _, b in isolate_real_roots(p, lo, hi, tol=1.0):
        m = b
        while count_real_roots(p, left, m, seq) > 0:
            m = (left + m) / 2
        if _eval(c, m) < 0:
            return False, m
        left = b
    return True, None
