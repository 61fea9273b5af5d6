"""Mean values of nonnegative multiplicative functions.

A multiplicative function is described by a MultFnSpec: its values on
prime powers plus a declared kappa (the average of g(p) log p / p per
log w).  Summatory functions are computed exactly by sieving g over all
n <= x; the constants c(g), c_q(g) and c(g_1, ..., g_k) are truncated
Euler products with an empirical tail estimate.

Local series S_p(g) = sum_{nu >= 0} g(p^nu) / p^nu for the root-count
families have closed forms at primes not dividing lc * disc: sigma(f; p^nu)
is then constant in nu, so S_p(sigma) = 1 + s/(p - 1), S_p(sigma*) = 1 + s/p,
and so on.  The remaining primes are summed exactly with the stabilised
tail in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lgamma
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from psmooth.analytic import (
    _divisible_mask,
    _quad_geometric,
    _tail_from_increments,
    local_sigmas,
    singular_series,
)
from psmooth.errors import DomainError, NotAdmissibleError, ResourceError
from psmooth.localroots import G_value, sigma_prime_power
from psmooth.polycore.factored import FactoredPoly, structural_report
from psmooth.polycore.poly import Poly, discriminant
from psmooth.primes import primes_upto

SIEVE_CAP = 10**7
MULTISUM_WORK_CAP = 2 * 10**8
WEIGHTED_TERM_CAP = 10**6


# ---------------------------------------------------------------------------
# multiplicative function descriptions


@dataclass(frozen=True)
class MultFnSpec:
    """A multiplicative function given on prime powers.

    prime_power(p, nu) returns g(p^nu) for nu >= 1.  at_primes and
    local_series are optional vectorised shortcuts for g(p) and
    S_p = sum_{nu>=0} g(p^nu)/p^nu over an array of primes."""

    name: str
    kappa: float
    prime_power: Callable[[int, int], float]
    alpha: float = 0.0
    at_primes: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    local_series: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    nonnegative: bool = True

    def __post_init__(self):
        if self.kappa < 0:
            raise DomainError("only real kappa >= 0 is supported")
        if self.alpha >= 0.5:
            raise DomainError("growth exponent alpha must be below 1/2")

    def values_at_primes(self, primes: np.ndarray) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        if self.at_primes is not None:
            return np.asarray(self.at_primes(primes), dtype=float)
        return np.array([float(self.prime_power(int(p), 1)) for p in primes], dtype=float)

    def series_at(self, primes: np.ndarray) -> np.ndarray:
        primes = np.asarray(primes, dtype=np.int64)
        if self.local_series is not None:
            return np.asarray(self.local_series(primes), dtype=float)
        return np.array([_series_by_summation(self, int(p)) for p in primes], dtype=float)

    def __call__(self, n: int) -> float:
        if n < 1:
            raise DomainError("multiplicative functions are defined on n >= 1")
        out = 1.0
        for p, e in _factor(n):
            out *= float(self.prime_power(p, e))
        return out


def _factor(n: int) -> list[tuple[int, int]]:
    from sympy import factorint

    return sorted(factorint(n).items())


def _series_by_summation(g: MultFnSpec, p: int, max_terms: int = 200) -> float:
    total, pk = 1.0, 1
    for nu in range(1, max_terms):
        pk *= p
        term = float(g.prime_power(p, nu)) / pk
        total += term
        if pk > 1 << 62 or (term < 1e-18 * total and nu > 2):
            break
    return total


def _ord(p: int, n: int) -> int:
    k = 0
    while n and n % p == 0:
        n //= p
        k += 1
    return k


def _stable_series(values: Callable[[int], Fraction], p: int, start: int) -> Fraction:
    """sum_{nu >= 0} v(nu)/p^nu with v(0) = 1, given that v is constant from
    level `start` on; the tail is a geometric series."""
    total = Fraction(1)
    for nu in range(1, start + 1):
        total += Fraction(values(nu)) / p**nu
    return total + Fraction(values(start)) / (p**start * (p - 1))


class _RootFamily:
    """Shared data for sigma-type functions of a factored polynomial."""

    def __init__(self, F: FactoredPoly):
        if not F.factors:
            raise DomainError("need a nonconstant polynomial")
        if not F.is_squarefree_form():
            raise DomainError(f"{F} must be squarefree")
        self.F = F
        self.expanded = F.expand().exact_div(F.sign * F.content)
        disc = discriminant(self.expanded) if self.expanded.degree > 1 else 1
        if disc == 0:
            raise DomainError(f"{F} must be squarefree")
        self.bad_number = disc * self.expanded.lc
        self.content = F.content
        self.full = F.expand()

    def sigma_at(self, primes: np.ndarray) -> np.ndarray:
        s = local_sigmas(list(self.F.polys), primes).astype(float)
        if self.content > 1:
            s[_divisible_mask(self.content, primes)] = primes[_divisible_mask(self.content, primes)]
        return s

    def special(self, primes: np.ndarray) -> np.ndarray:
        out = primes <= self.expanded.degree
        out |= _divisible_mask(self.bad_number, primes)
        if self.content > 1:
            out |= _divisible_mask(self.content, primes)
        return out

    def stable_level(self, p: int) -> int:
        return 2 * _ord(p, self.bad_number) + 2 + _ord(p, self.content)

    def sigma_pp(self, p: int, nu: int) -> int:
        return sigma_prime_power(self.full, p, nu)

    def sigma_star_pp(self, p: int, nu: int) -> Fraction:
        return self.sigma_pp(p, nu) - Fraction(self.sigma_pp(p, nu + 1), p)

    def G_p(self, p: int) -> Fraction:
        return G_value(self.full, p)


@lru_cache(maxsize=64)
def _family(text: str) -> _RootFamily:
    return _RootFamily(FactoredPoly.parse(text))


def _patched(generic: np.ndarray, primes: np.ndarray, special: np.ndarray, exact: Callable[[int], Fraction]) -> np.ndarray:
    out = np.array(generic, dtype=float)
    for i in np.flatnonzero(special):
        out[i] = float(exact(int(primes[i])))
    return out


def one() -> MultFnSpec:
    return MultFnSpec(
        "one",
        1.0,
        lambda p, nu: 1.0,
        at_primes=lambda ps: np.ones(ps.shape[0]),
        local_series=lambda ps: ps / (ps - 1.0),
    )


def sigma_fn(text: str) -> MultFnSpec:
    fam = _family(text)

    def series(ps):
        s = fam.sigma_at(ps)
        lvl = fam.stable_level
        return _patched(1 + s / (ps - 1.0), ps, fam.special(ps), lambda p: _stable_series(lambda nu: fam.sigma_pp(p, nu), p, lvl(p)))

    return MultFnSpec(f"sigma:{text}", float(fam.F.K), fam.sigma_pp, at_primes=fam.sigma_at, local_series=series)


def sigma_star_fn(text: str) -> MultFnSpec:
    fam = _family(text)

    def at(ps):
        s = fam.sigma_at(ps)
        sp = fam.special(ps)
        return _patched(s * (1 - 1 / ps), ps, sp, lambda p: fam.sigma_star_pp(p, 1))

    def series(ps):
        s = fam.sigma_at(ps)
        return _patched(1 + s / ps, ps, fam.special(ps), lambda p: _stable_series(lambda nu: fam.sigma_star_pp(p, nu), p, fam.stable_level(p)))

    return MultFnSpec(f"sigma_star:{text}", float(fam.F.K), fam.sigma_star_pp, at_primes=at, local_series=series)


def _G_at(fam: _RootFamily, ps: np.ndarray) -> np.ndarray:
    s = fam.sigma_at(ps)
    bad = s >= ps
    if bad.any():
        raise NotAdmissibleError(int(ps[np.flatnonzero(bad)[0]]), f"{fam.F} is not admissible")
    return 1.0 / (1.0 - s / ps)


def G_fn(text: str) -> MultFnSpec:
    fam = _family(text)
    return MultFnSpec(
        f"G:{text}",
        1.0,
        lambda p, nu: fam.G_p(p),
        at_primes=lambda ps: _G_at(fam, ps),
        local_series=lambda ps: 1 + _G_at(fam, ps) / (ps - 1.0),
    )


def _split_pair(text: str) -> tuple[str, str]:
    # "factor|full": G taken over the full polynomial, sigma over the factor
    if "|" in text:
        a, b = text.split("|", 1)
        return a.strip(), b.strip()
    return text, text


def G_sigma_fn(text: str) -> MultFnSpec:
    fi, full = _split_pair(text)
    fam, famF = _family(fi), _family(full)

    def pp(p, nu):
        return famF.G_p(p) * fam.sigma_pp(p, nu)

    def series(ps):
        G = _G_at(famF, ps)
        s = fam.sigma_at(ps)
        sp = fam.special(ps) | famF.special(ps)
        return _patched(1 + G * s / (ps - 1.0), ps, sp, lambda p: _stable_series(lambda nu: pp(p, nu), p, max(fam.stable_level(p), famF.stable_level(p))))

    return MultFnSpec(f"Gsigma:{text}", float(fam.F.K), pp, at_primes=lambda ps: _G_at(famF, ps) * fam.sigma_at(ps), local_series=series)


def G_sigma_star_fn(text: str) -> MultFnSpec:
    fi, full = _split_pair(text)
    fam, famF = _family(fi), _family(full)

    def pp(p, nu):
        return famF.G_p(p) * fam.sigma_star_pp(p, nu)

    def at(ps):
        G = _G_at(famF, ps)
        s = fam.sigma_at(ps)
        sp = fam.special(ps) | famF.special(ps)
        return _patched(G * s * (1 - 1 / ps), ps, sp, lambda p: pp(p, 1))

    def series(ps):
        G = _G_at(famF, ps)
        s = fam.sigma_at(ps)
        sp = fam.special(ps) | famF.special(ps)
        return _patched(1 + G * s / ps, ps, sp, lambda p: _stable_series(lambda nu: pp(p, nu), p, max(fam.stable_level(p), famF.stable_level(p)) + 1))

    return MultFnSpec(f"Gsigma_star:{text}", float(fam.F.K), pp, at_primes=at, local_series=series)


REGISTRY: dict[str, Callable[[str], MultFnSpec]] = {
    "sigma": sigma_fn,
    "sigma_star": sigma_star_fn,
    "G": G_fn,
    "Gsigma": G_sigma_fn,
    "Gsigma_star": G_sigma_star_fn,
}


def mult_fn(name: str) -> MultFnSpec:
    """Look up `one`, `sigma:<poly>`, `sigma_star:<poly>`, `G:<poly>`,
    `Gsigma:<poly>` or `Gsigma_star:<poly>`.

    For the two G-products the argument may be `<factor>|<full>`: G uses the
    full polynomial and sigma the factor."""
    name = name.strip()
    if name == "one":
        return one()
    kind, sep, arg = name.partition(":")
    if not sep or kind not in REGISTRY:
        raise DomainError(f"unknown multiplicative function {name!r}; known: one, " + ", ".join(f"{k}:<poly>" for k in REGISTRY))
    return REGISTRY[kind](arg.strip())


# ---------------------------------------------------------------------------
# summatory functions


def g_table(g: MultFnSpec, x: float, q: int = 1, cap: int = SIEVE_CAP) -> np.ndarray:
    """Array v with v[n] = g(n) for 1 <= n <= x (v[n] = 0 when gcd(n, q) > 1)."""
    N = int(math.floor(x))
    if N > cap:
        raise ResourceError(f"x = {N} exceeds the sieve capacity {cap}")
    v = np.ones(max(N, 0) + 1)
    v[0] = 0.0
    if N < 2:
        return v
    primes = primes_upto(N)
    gp = g.values_at_primes(primes)
    root = math.isqrt(N)
    for p, val in zip(primes.tolist(), gp.tolist()):
        if q % p == 0:
            v[p::p] = 0.0
            continue
        if p > root:
            v[p::p] *= val
            continue
        # values g(p^nu) on the multiples of p, indexed by the cofactor
        w = np.full(N // p, val)
        pk, nu = p, 1
        while pk * p <= N:
            pk *= p
            nu += 1
            w[pk // p - 1 :: pk // p] = float(g.prime_power(p, nu))
        v[p::p] *= w
    return v


def _weighted(v: np.ndarray) -> np.ndarray:
    n = np.arange(v.shape[0], dtype=float)
    n[0] = 1.0
    return v / n


def Mg_sum(g: MultFnSpec, x: float, cap: int = SIEVE_CAP) -> float:
    """sum_{n <= x} g(n)/n."""
    if x < 1:
        raise DomainError("Mg_sum needs x >= 1")
    return math.fsum(_weighted(g_table(g, x, cap=cap)))


def Mg_sum_coprime(g: MultFnSpec, x: float, q: int, cap: int = SIEVE_CAP) -> float:
    """sum_{n <= x, (n, q) = 1} g(n)/n."""
    if x < 1 or q < 1:
        raise DomainError("Mg_sum_coprime needs x >= 1 and q >= 1")
    return math.fsum(_weighted(g_table(g, x, q=q, cap=cap)))


def _mobius(N: int) -> np.ndarray:
    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes_upto(N).tolist():
        mu[p::p] *= -1
        if p * p <= N:
            mu[p * p :: p * p] = 0
    return mu


def _multiples_sum(a: np.ndarray, N: int) -> np.ndarray:
    """A[d] = sum_{d | m} a[m] for 1 <= d <= N."""
    A = np.zeros(N + 1)
    for d in range(1, N + 1):
        A[d] = math.fsum(a[d::d])
    return A


def _pair_sum_mobius(a: np.ndarray, b: np.ndarray) -> float:
    N = min(a.shape[0], b.shape[0]) - 1
    if N < 1:
        return 0.0
    mu = _mobius(N)
    A = _multiples_sum(a, N)
    B = _multiples_sum(b, N)
    return math.fsum((mu[1:] * A[1:] * B[1:]).tolist())


def _nested_sum(ws: list[np.ndarray]) -> float:
    """Pairwise-coprime nested summation with gcd pruning."""
    idx = np.arange(ws[-1].shape[0])
    last = ws[-1]
    terms: list[float] = []

    def rec(level: int, L: int, acc: float) -> None:
        w = ws[level]
        if level == len(ws) - 1:
            mask = np.gcd(idx, L) == 1
            terms.append(acc * math.fsum(last[mask].tolist()))
            return
        for n in np.flatnonzero(w).tolist():
            if gcd(n, L) == 1:
                rec(level + 1, L * n, acc * w[n])

    rec(0, 1, 1.0)
    return math.fsum(terms)


def coprime_multisum(gs: Sequence[MultFnSpec], xs: Sequence[float], method: str = "auto", cap: int = SIEVE_CAP) -> float:
    """sum over pairwise coprime n_1..n_k with n_i <= x_i of prod g_i(n_i)/n_i."""
    k = len(gs)
    if k != len(xs) or k < 1:
        raise DomainError("need one bound per function")
    if k > 4:
        raise ResourceError("coprime_multisum supports k <= 4")
    if any(x < 1 for x in xs):
        return 0.0
    ws = [_weighted(g_table(g, x, cap=cap)) for g, x in zip(gs, xs)]
    if k == 1:
        return math.fsum(ws[0].tolist())
    if method not in ("auto", "mobius", "nested"):
        raise DomainError(f"unknown method {method!r}")
    if k == 2 and method != "nested":
        return _pair_sum_mobius(ws[0], ws[1])
    work = math.prod(int(np.count_nonzero(w)) for w in ws[:-1]) * ws[-1].shape[0]
    if work > MULTISUM_WORK_CAP:
        raise ResourceError(f"nested enumeration needs about {work} steps (cap {MULTISUM_WORK_CAP})")
    return _nested_sum(ws)


# ---------------------------------------------------------------------------
# Euler-product constants


@dataclass(frozen=True)
class MeanValueConstant:
    value: float
    truncation: int
    tail_estimate: float

    def as_dict(self) -> dict:
        return {"value": self.value, "truncation": self.truncation, "tail_estimate": self.tail_estimate}


def _euler(log_terms: np.ndarray, primes: np.ndarray, P: int, prefactor_log: float) -> MeanValueConstant:
    cs = np.concatenate([[0.0], np.cumsum(log_terms)])
    at = lambda Q: float(cs[np.searchsorted(primes, Q, side="right")])
    L, L2, L4 = at(P), at(P // 2), at(P // 4)
    value = math.exp(L + prefactor_log)
    tail = _tail_from_increments(L2 - L4, L - L2)
    return MeanValueConstant(value, P, value * math.expm1(tail))


def _check_P(P: int) -> np.ndarray:
    if P < 2:
        raise DomainError("truncation prime must be at least 2")
    return primes_upto(P)


def c_of_g(g: MultFnSpec, P: int) -> MeanValueConstant:
    """Gamma(kappa+1)^-1 prod_{p <= P} (1 - 1/p)^kappa S_p(g)."""
    primes = _check_P(P)
    pf = primes.astype(float)
    terms = g.kappa * np.log1p(-1.0 / pf) + np.log(g.series_at(primes))
    return _euler(terms, primes, P, -lgamma(g.kappa + 1))


def c_q_of_g(g: MultFnSpec, q: int, P: int, form: str = "quotient") -> MeanValueConstant:
    """c_q(g) either as c(g) prod_{p|q} S_p^-1 ("quotient") or directly as
    Gamma^-1 (phi(q)/q)^kappa prod_{p <= P, p not | q} (1-1/p)^kappa S_p ("direct")."""
    if q < 1:
        raise DomainError("q must be positive")
    qp = [p for p, _ in _factor(q)] if q > 1 else []
    if qp and max(qp) > P:
        raise DomainError(f"prime factors of q must not exceed the truncation P = {P}")
    primes = _check_P(P)
    pf = primes.astype(float)
    S = g.series_at(primes)
    divq = np.isin(primes, np.array(qp, dtype=np.int64))
    if form == "quotient":
        base = c_of_g(g, P)
        factor = math.exp(-math.fsum(np.log(S[divq]).tolist()))
        return MeanValueConstant(base.value * factor, P, base.tail_estimate * factor)
    if form != "direct":
        raise DomainError(f"unknown form {form!r}")
    terms = np.where(divq, 0.0, g.kappa * np.log1p(-1.0 / pf) + np.log(S))
    phi_log = g.kappa * math.fsum(math.log1p(-1.0 / p) for p in qp)
    return _euler(terms, primes, P, -lgamma(g.kappa + 1) + phi_log)


def c_multi(gs: Sequence[MultFnSpec], P: int) -> MeanValueConstant:
    """prod Gamma(kappa_i+1)^-1 prod_p (1-1/p)^(sum kappa) (1 + sum_i (S_p(g_i) - 1))."""
    if not gs:
        raise DomainError("need at least one function")
    primes = _check_P(P)
    pf = primes.astype(float)
    local = 1.0 + sum(g.series_at(primes) - 1.0 for g in gs)
    kap = sum(g.kappa for g in gs)
    terms = kap * np.log1p(-1.0 / pf) + np.log(local)
    return _euler(terms, primes, P, -sum(lgamma(g.kappa + 1) for g in gs))


def delta_q(g: MultFnSpec, q: int) -> float:
    """1 + sum_{p | q} g(p) log p / p."""
    if q < 1:
        raise DomainError("q must be positive")
    if q == 1:
        return 1.0
    return 1.0 + math.fsum(float(g.prime_power(p, 1)) * math.log(p) / p for p, _ in _factor(q))


def kappa_estimate(g: MultFnSpec, w: float) -> float:
    """sum_{p <= w} g(p) log p / p - kappa log w."""
    if w < 2:
        raise DomainError("kappa_estimate needs w >= 2")
    primes = primes_upto(int(w))
    pf = primes.astype(float)
    s = math.fsum((g.values_at_primes(primes) * np.log(pf) / pf).tolist())
    return s - g.kappa * math.log(w)


# ---------------------------------------------------------------------------
# weighted pairwise-coprime sum with shifted logarithmic integrals


def _li_effective(polys: Sequence[Poly], hs: Sequence[int], x: float) -> float:
    """li_{h_1..h_k}(f; x) for effective factors (each f_i increasing on t >= 0)."""
    start = 0.0
    for g, h in zip(polys, hs):
        if g(0) >= 2 * h:
            continue
        if float(g(x)) < 2 * h:
            return 0.0
        start = max(start, optimize.brentq(lambda t: float(g(t)) - 2 * h, 0.0, x, xtol=1e-13, rtol=1e-15))
    if start >= x:
        return 0.0

    def integrand(t: float) -> float:
        out = 1.0
        for g, h in zip(polys, hs):
            out *= math.log(max(float(g(t)) / h, 2.0))
        return 1.0 / out

    return _quad_geometric(integrand, start, x)


@dataclass
class WeightedSumResult:
    value: float
    prediction: float
    ratio: float
    terms: int
    y: float
    bounds: list[float]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def weighted_coprime_sum(f: FactoredPoly, x: float, u: float, P: int = 10**6) -> WeightedSumResult:
    """sum over pairwise coprime h_i <= f_i(x)/y of
    G(f; h_1...h_k) prod sigma*(f_i; h_i) li_{h}(f; x) / (h_1...h_k),
    with y = x^(1/u), next to C(f)^-1 x log^k(d u)."""
    rep = structural_report(f)
    missing = [k for k in ("balanced", "effective", "admissible", "exclusive") if not getattr(rep, k)]
    if missing or f.content != 1:
        raise DomainError(f"{f} must be balanced, effective, admissible and exclusive (fails: {', '.join(missing) or 'primitive'})")
    if x < 1 or u <= 0:
        raise DomainError("need x >= 1 and u > 0")
    k, d = f.K, f.degrees[0]
    y = x ** (1.0 / u)
    bounds = [float(g(x)) / y for g in f.polys]
    if math.prod(max(b, 1.0) for b in bounds) > WEIGHTED_TERM_CAP * 10 or sum(bounds) > WEIGHTED_TERM_CAP:
        raise ResourceError(f"h ranges {bounds} exceed the term cap {WEIGHTED_TERM_CAP}")
    full = str(f)
    C = singular_series(f, P).value
    prediction = x * math.log(d * u) ** k / C if d * u > 0 else 0.0
    if any(b < 1 for b in bounds):
        return WeightedSumResult(0.0, prediction, 0.0 if prediction else math.nan, 0, y, bounds)
    gs = [G_sigma_star_fn(f"{_fp(g)}|{full}") for g in f.polys]
    ws = [g_table(g, b) for g, b in zip(gs, bounds)]
    total: list[float] = []
    count = 0

    def rec(level: int, hs: list[int], L: int, acc: float) -> None:
        nonlocal count
        if level == k:
            count += 1
            total.append(acc * _li_effective(f.polys, hs, x) / math.prod(hs))
            return
        for h in np.flatnonzero(ws[level]).tolist():
            if gcd(h, L) == 1:
                rec(level + 1, hs + [h], L * h, acc * ws[level][h])

    rec(0, [], 1, 1.0)
    value = math.fsum(total)
    return WeightedSumResult(value, prediction, value / prediction if prediction else math.nan, count, y, bounds)


def _fp(g: Poly) -> str:
    return "[" + str(g) + "]"
