"""Dense univariate polynomials with integer coefficients.

Coefficients are stored in ascending degree order as Python ints, so
arithmetic is exact at any size.  The zero polynomial has an empty
coefficient tuple and degree -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Sequence

from psmooth.errors import DomainError, PreconditionError


def _trim(coeffs: Iterable[int]) -> tuple[int, ...]:
    c = [int(a) for a in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Poly:
    coeffs: tuple[int, ...]

    def __init__(self, coeffs: Iterable[int] = ()):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    @classmethod
    def const(cls, c: int) -> Poly:
        return cls((c,))

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> Poly:
        return cls([0] * k + [c])

    @classmethod
    def linear(cls, a: int, b: int) -> Poly:
        """The polynomial a*t + b."""
        return cls((b, a))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lc(self) -> int:
        if not self.coeffs:
            raise DomainError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __getitem__(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def __call__(self, x):
        # Horner; works for ints, Fractions, floats and numpy arrays alike.
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_mod(self, x: int, m: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % m
        return acc

    def reduce_mod(self, m: int) -> Poly:
        return Poly(c % m for c in self.coeffs)

    # arithmetic -------------------------------------------------------

    def __neg__(self) -> Poly:
        return Poly(-c for c in self.coeffs)

    def __add__(self, other) -> Poly:
        other = _as_poly(other)
        n = max(len(self), len(other))
        return Poly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __sub__(self, other) -> Poly:
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> Poly:
        return _as_poly(other) - self

    def __mul__(self, other) -> Poly:
        if isinstance(other, int):
            return Poly(c * other for c in self.coeffs)
        other = _as_poly(other)
        if not self or not other:
            return Poly()
        out = [0] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        if k < 0:
            raise DomainError("negative polynomial power")
        result, base = Poly.const(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def exact_div(self, d: int) -> Poly:
        """Divide every coefficient by the integer d, which must divide all of them."""
        if d == 0:
            raise DomainError("division by zero")
        if any(c % d for c in self.coeffs):
            raise PreconditionError(f"{d} does not divide every coefficient of {self}")
        return Poly(c // d for c in self.coeffs)

    def derivative(self) -> Poly:
        return Poly(i * c for i, c in enumerate(self.coeffs) if i)

    def taylor_shift(self, a: int) -> Poly:
        """Return p(t + a)."""
        c = list(self.coeffs)
        n = len(c)
        for i in range(n - 1):
            for j in range(n - 2, i - 1, -1):
                c[j] += a * c[j + 1]
        return Poly(c)

    def scale_arg(self, q: int) -> Poly:
        """Return p(q t)."""
        return Poly(c * q**i for i, c in enumerate(self.coeffs))

    def pseudo_rem(self, other: Poly) -> Poly:
        """lc(other)^(deg self - deg other + 1) * self mod other."""
        if not other:
            raise DomainError("pseudo-remainder by zero polynomial")
        r = list(self.coeffs)
        db, lb = other.degree, other.lc
        delta = len(r) - 1 - db
        if delta < 0:
            return self
        e = delta + 1
        while len(r) - 1 >= db and r:
            lr = r[-1]
            shift = len(r) - 1 - db
            r = [lb * c for c in r]
            for i, b in enumerate(other.coeffs):
                r[i + shift] -= lr * b
            r = list(_trim(r))
            e -= 1
        q = lb**e
        return Poly(q * c for c in r)

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Poly({format_poly(self)!r})"


def _as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, int):
        return Poly.const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Poly")


def format_poly(p: Poly, var: str = "t") -> str:
    if not p:
        return "0"
    parts = []
    for k in range(p.degree, -1, -1):
        c = p.coeffs[k]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if k == 0:
            body = str(a)
        else:
            mono = var if k == 1 else f"{var}^{k}"
            body = mono if a == 1 else f"{a}*{mono}"
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


# ---------------------------------------------------------------------------
# module-level operations


def content(p: Poly) -> int:
    """Greatest common divisor of the coefficients (positive)."""
    if not p:
        raise DomainError("content of the zero polynomial is undefined")
    g = 0
    for c in p.coeffs:
        g = gcd(g, c)
    return g


def primitivize(p: Poly) -> Poly:
    """Divide out the content; the sign of the leading coefficient is kept."""
    return p.exact_div(content(p))


def restrict_to_progression(F: Poly, Q: int, a: int) -> Poly:
    """F(Q t + a), with exact integer coefficients."""
    if Q <= 0:
        raise DomainError("modulus Q must be positive")
    return F.taylor_shift(a).scale_arg(Q)


def fhb_transform(f: Poly, h: int, b: int) -> Poly:
    """The polynomial f(h t + b) / h; requires h | f(b)."""
    if h <= 0:
        raise DomainError("h must be a positive integer")
    fb = f(b)
    if fb % h:
        raise PreconditionError(f"h = {h} does not divide f({b}) = {fb}")
    return restrict_to_progression(f, h, b).exact_div(h)


def resultant(p: Poly, q: Poly) -> int:
    """Res(p, q) by the subresultant pseudo-remainder sequence.

    All intermediate divisions are exact in Z.
    """
    if not p or not q:
        raise DomainError("resultant with the zero polynomial")
    A, B = p, q
    da, db = A.degree, B.degree
    if da == 0 or db == 0:
        # Res(c, q) = c^deg q ; Res(p, c) = c^deg p
        return A.lc**db if da == 0 else B.lc**da
    a, b = content(A), content(B)
    A, B = A.exact_div(a), B.exact_div(b)
    t = a**db * b**da
    s = 1
    if da < db:
        A, B = B, A
        if da % 2 and db % 2:
            s = -s
    g = h = 1
    while True:
        da, db = A.degree, B.degree
        delta = da - db
        if da % 2 and db % 2:
            s = -s
        R = A.pseudo_rem(B)
        if not R:
            return 0
        A = B
        B = R.exact_div(g * h**delta)
        g = A.lc
        if delta == 0:
            pass
        else:
            h = g**delta // h ** (delta - 1)
        if B.degree == 0:
            dA = A.degree
            h = B.lc**dA // h ** (dA - 1) if dA >= 1 else 1
            return s * t * h


def discriminant(p: Poly) -> int:
    """disc(p) = (-1)^(D(D-1)/2) Res(p, p') / lc(p)."""
    D = p.degree
    if D < 1:
        raise DomainError("discriminant of a constant polynomial")
    if D == 1:
        return 1
    r = resultant(p, p.derivative())
    sign = -1 if (D * (D - 1) // 2) % 2 else 1
    q, rem = divmod(sign * r, p.lc)
    assert rem == 0
    return q


def poly_gcd_degree_positive(p: Poly, q: Poly) -> bool:
    """True iff p and q share a nonconstant common factor over Q."""
    return resultant(p, q) == 0


def product(polys: Sequence[Poly]) -> Poly:
    out = Poly.const(1)
    for f in polys:
        out = out * f
    return out
