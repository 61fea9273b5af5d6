"""Factored polynomials and their structural predicates.

A FactoredPoly is sign * content * prod g_i^{m_i} with each g_i primitive,
of positive leading coefficient, and pairwise distinct.  Irreducibility of
the g_i is an input contract: it is trusted, never certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from sympy import factorint, divisors

from psmooth.errors import DomainError, ParseError, PreconditionError, UnfactoredInputError
from psmooth.polycore import modp
from psmooth.polycore.parse import parse_factored_parts, parse_poly
from psmooth.polycore.poly import (
    Poly,
    content,
    discriminant,
    primitivize,
    product,
    restrict_to_progression,
    resultant,
)
from psmooth.polycore.sturm import nonnegative_on_ray


def _primes_upto(n: int) -> list[int]:
    return [p for p in range(2, n + 1) if all(p % q for q in range(2, int(p**0.5) + 1))]


@dataclass(frozen=True)
class FactoredPoly:
    sign: int
    content: int
    factors: tuple[tuple[Poly, int], ...]

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign}")
        if not isinstance(self.content, int) or self.content < 1:
            raise DomainError(f"content must be a positive integer, got {self.content}")
        seen = set()
        for g, m in self.factors:
            if m < 1:
                raise DomainError(f"multiplicity of {g} must be positive")
            if g.degree < 1:
                raise DomainError("factors must be nonconstant; fold constants into the content")
            if content(g) != 1:
                raise DomainError(f"factor {g} is not primitive (content {content(g)})")
            if g.lc < 0:
                raise DomainError(f"factor {g} has negative leading coefficient")
            if g.coeffs in seen:
                raise DomainError(f"factor {g} listed twice; merge multiplicities")
            seen.add(g.coeffs)
        object.__setattr__(self, "factors", tuple((g, int(m)) for g, m in self.factors))

    # construction ----------------------------------------------------

    @classmethod
    def build(cls, sign: int, content_: int, factors: Iterable[tuple[Poly, int]]) -> FactoredPoly:
        """Normalise negative leading coefficients into the sign and merge repeats.
        Non-primitive factors are rejected."""
        merged: dict[tuple[int, ...], int] = {}
        for g, m in factors:
            if g.degree < 1:
                raise ParseError(f"constant factor {g}; put constants in the content field")
            if content(g) != 1:
                raise ParseError(f"declared factor {g} is not primitive (content {content(g)})")
            if g.lc < 0:
                g = -g
                if m % 2:
                    sign = -sign
            merged[g.coeffs] = merged.get(g.coeffs, 0) + m
        return cls(sign, content_, tuple((Poly(c), m) for c, m in merged.items()))

    @classmethod
    def from_poly(cls, p: Poly, check_composite: bool = True) -> FactoredPoly:
        """Treat p as sign * content * (one irreducible factor).

        With check_composite, inputs that are visibly reducible (repeated
        roots, a rational root at degree >= 2) are refused rather than
        factored."""
        if not p:
            raise DomainError("zero polynomial")
        c = content(p)
        g = p.exact_div(c)
        sign = 1
        if g.lc < 0:
            g, sign = -g, -1
        if g.degree < 1:
            return cls(sign, c, ())
        if check_composite:
            reason = composite_reason(g)
            if reason:
                raise UnfactoredInputError(
                    f"{p} is reducible ({reason}); give it in factored form, e.g. [t;t+2]"
                )
        return cls(sign, c, ((g, 1),))

    @classmethod
    def parse(cls, text: str, check_composite: bool = True) -> FactoredPoly:
        """Factored text ``[...]`` or a single polynomial (see psmooth.polycore.parse)."""
        if "[" in text:
            sign, c, factors = parse_factored_parts(text)
            return cls.build(sign, c, factors)
        return cls.from_poly(parse_poly(text), check_composite=check_composite)

    # views -----------------------------------------------------------

    @property
    def polys(self) -> tuple[Poly, ...]:
        return tuple(g for g, _ in self.factors)

    @property
    def K(self) -> int:
        return len(self.factors)

    @property
    def degree(self) -> int:
        return sum(g.degree * m for g, m in self.factors)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(g.degree for g, _ in self.factors)

    def is_squarefree_form(self) -> bool:
        return all(m == 1 for _, m in self.factors)

    def expand(self) -> Poly:
        out = Poly.const(self.sign * self.content)
        for g, m in self.factors:
            out = out * g**m
        return out

    def radical(self) -> Poly:
        """Product of the distinct factors (no sign, content or multiplicity)."""
        return product(self.polys)

    def __call__(self, x):
        return self.expand()(x)

    def __str__(self) -> str:
        parts = []
        for g, m in self.factors:
            s = str(g)
            parts.append(f"({s})^{m}" if m > 1 else s)
        return f"{self.sign}*{self.content}*[{';'.join(parts)}]"


def composite_reason(g: Poly) -> str | None:
    """A cheap certificate that the primitive polynomial g is reducible, or None.

    Detects repeated factors and rational roots only; a product of two
    irreducible quadratics passes unnoticed."""
    if g.degree < 2:
        return None
    if g[0] == 0:
        return "divisible by t"
    if discriminant(g) == 0:
        return "repeated factor"
    a0, ad = abs(g[0]), abs(g.lc)
    if a0 <= 10**12 and ad <= 10**12:
        for q in divisors(ad):
            for r in divisors(a0):
                for s in (1, -1):
                    x = Fraction(s * r, q)
                    if g(x) == 0:
                        return f"rational root {x}"
    return None


# ---------------------------------------------------------------------------
# structural predicates


@dataclass
class StructuralReport:
    squarefree: bool
    primitive: bool
    balanced: bool
    effective: bool
    admissible: bool
    exclusive: bool
    witnesses: dict = field(default_factory=dict)

    FLAGS = ("squarefree", "primitive", "balanced", "effective", "admissible", "exclusive")

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.FLAGS}
        d["witnesses"] = self.witnesses
        return d


def squarefree_witness(F: FactoredPoly) -> dict | None:
    for g, m in F.factors:
        if m > 1:
            return {"factor": str(g), "multiplicity": m}
        if g.degree >= 2 and discriminant(g) == 0:
            return {"factor": str(g), "discriminant": 0}
    for g, h in combinations(F.polys, 2):
        if resultant(g, h) == 0:
            return {"pair": [str(g), str(h)], "resultant": 0}
    return None


def effective_witness(g: Poly, t0: int = 0) -> dict | None:
    """None if g(t0) >= 2 and g'(t) >= 1 for all t >= t0, else the failing condition."""
    v = g(t0)
    if v < 2:
        return {"factor": str(g), "reason": f"g({t0}) = {v} < 2"}
    ok, where = nonnegative_on_ray(g.derivative() - 1, t0)
    if not ok:
        return {"factor": str(g), "reason": f"g'({where}) < 1"}
    return None


def admissible_witness(F: FactoredPoly) -> int | None:
    """Smallest prime p with F(n) = 0 mod p for every n, or None."""
    c = F.content
    bad = [p for p in factorint(c)] if c > 1 else []
    G = F.expand().exact_div(F.sign * F.content) if F.factors else Poly.const(1)
    for p in _primes_upto(F.degree):
        vals = modp.eval_all_residues(G.coeffs, p)
        if not vals.any():
            bad.append(p)
    return min(bad) if bad else None


def exclusive_witness(F: FactoredPoly) -> dict | None:
    """A pair of distinct factors with a common root modulo some prime, or None.

    A common root mod p forces p | Res(g, h), so only those primes are tried."""
    for g, h in combinations(F.polys, 2):
        R = resultant(g, h)
        if R == 0:
            return {"pair": [str(g), str(h)], "resultant": 0}
        for p in sorted(factorint(abs(R))):
            r = modp.has_common_root(g.coeffs, h.coeffs, p)
            if r is not None:
                return {"pair": [str(g), str(h)], "prime": p, "root": r, "resultant": R}
    return None


def structural_report(F: FactoredPoly) -> StructuralReport:
    w: dict = {}
    sq = squarefree_witness(F)
    if sq:
        w["squarefree"] = sq
    primitive = F.content == 1
    if not primitive:
        w["primitive"] = {"content": F.content}
    degs = set(F.degrees)
    balanced = sq is None and len(degs) <= 1
    if not balanced:
        w["balanced"] = {"degrees": list(F.degrees), "squarefree": sq is None}
    eff = None
    for g in F.polys:
        eff = effective_witness(g)
        if eff:
            w["effective"] = eff
            break
    adm = admissible_witness(F)
    if adm is not None:
        w["admissible"] = {"prime": adm}
    exc = exclusive_witness(F)
    if exc:
        w["exclusive"] = exc
    return StructuralReport(
        squarefree=sq is None,
        primitive=primitive,
        balanced=balanced,
        effective=eff is None,
        admissible=adm is None,
        exclusive=exc is None,
        witnesses=w,
    )


# ---------------------------------------------------------------------------
# constructions


def _ord(p: int, n: int) -> int:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def compute_Q(F1: FactoredPoly) -> int:
    """Modulus making every restriction F1(Qt + a) admissible and exclusive after
    primitivization: prod_{p <= D} p^(ord_p(disc)+1) times, for each pair of
    factors, prod_{p | Res} p^(ord_p(Res)+1)."""
    if not F1.is_squarefree_form():
        raise DomainError("compute_Q needs a squarefree polynomial")
    D = F1.degree
    if D < 1:
        return 1
    disc = discriminant(F1.expand())
    if disc == 0:
        raise DomainError("compute_Q needs a squarefree polynomial (discriminant 0)")
    Q = 1
    for p in _primes_upto(D):
        Q *= p ** (_ord(p, disc) + 1)
    for g, h in combinations(F1.polys, 2):
        R = resultant(g, h)
        for p, e in factorint(abs(R)).items():
            Q *= p ** (e + 1)
    return Q


def make_effective_balanced(F: FactoredPoly, alpha: float | None = None) -> tuple[FactoredPoly, int]:
    """Keep the top-degree factors and shift by the least t0 >= 0 making each
    one effective.  Returns (F1, t0) with F1(t) = F0(t + t0)."""
    if F.degree < 1:
        raise DomainError("make_effective_balanced needs a nonconstant polynomial")
    d = max(F.degrees)
    if alpha is not None and alpha <= d - 1:
        raise DomainError(f"alpha must exceed d - 1 = {d - 1}")
    top = [g for g in F.polys if g.degree == d]
    t0 = 0
    while any(effective_witness(g, t0) for g in top):
        t0 += 1
    shifted = [(g.taylor_shift(t0), 1) for g in top]
    return FactoredPoly(1, 1, tuple(shifted)), t0


def salvation_pipeline(F1: FactoredPoly, a: int, Q: int | None = None) -> FactoredPoly:
    """Primitivization of F1(Qt + a), factor by factor."""
    if not F1.is_squarefree_form():
        raise PreconditionError("salvation_pipeline needs a squarefree polynomial")
    Q = compute_Q(F1) if Q is None else Q
    if not 0 <= a < Q:
        raise PreconditionError(f"residue a = {a} must lie in [0, {Q})")
    factors = tuple((primitivize(restrict_to_progression(g, Q, a)), m) for g, m in F1.factors)
    return FactoredPoly(F1.sign, 1, factors)
