"""Continuous-side quantities: Dickman rho, logarithmic integrals, singular series.

The Dickman function is tabulated on a grid of step 2^-10.  On each unit
interval [k, k+1] the integrand rho(t-1)/t only needs rho on [k-1, k], so a
whole unit interval is filled at once with composite Simpson panels.  The
lagged midpoint values come from cubic interpolation whose stencil never
leaves the unit interval (rho has kinks at the integers).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import integrate, special

from psmooth.errors import DomainError, RangeError
from psmooth.localroots import sigma_at_primes
from psmooth.polycore import modp
from psmooth.polycore.factored import FactoredPoly
from psmooth.polycore.poly import Poly, content, resultant
from psmooth.polycore.sturm import isolate_real_roots
from psmooth.primes import primes_between, primes_upto

DEFAULT_STEP = 2.0**-10
DEFAULT_UMAX = 10.0

# ---------------------------------------------------------------------------
# Dickman rho

# cubic Lagrange weights for the value halfway between nodes 1 and 2 of a
# 4-point stencil, and the one-sided versions at either end of an interval
_MID = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_LEFT = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
_MID_RIGHT = np.array([1.0, -5.0, 15.0, 5.0]) / 16.0


def _midpoints(y: np.ndarray) -> np.ndarray:
    """Interpolated values halfway between consecutive entries of y (len M+1 -> M)."""
    M = len(y) - 1
    out = np.empty(M)
    out[1 : M - 1] = _MID[0] * y[:-3] + _MID[1] * y[1:-2] + _MID[2] * y[2:-1] + _MID[3] * y[3:]
    out[0] = _MID_LEFT @ y[:4]
    out[M - 1] = _MID_RIGHT @ y[-4:]
    return out


def _lagrange4(y4: np.ndarray, s: float) -> float:
    """Cubic through y4 at nodes 0..3, evaluated at s."""
    w = np.array(
        [
            -(s - 1) * (s - 2) * (s - 3) / 6,
            s * (s - 2) * (s - 3) / 2,
            -s * (s - 1) * (s - 3) / 2,
            s * (s - 1) * (s - 2) / 6,
        ]
    )
    return float(w @ y4)


@dataclass(frozen=True)
class DickmanTable:
    step: float
    values: np.ndarray  # rho at 0, step, 2 step, ...

    @classmethod
    def build(cls, u_max: float = DEFAULT_UMAX, step: float = DEFAULT_STEP) -> DickmanTable:
        M = round(1 / step)
        if abs(M * step - 1) > 1e-15 or M < 4:
            raise DomainError("step must be 1/M for an integer M >= 4")
        K = max(1, math.ceil(u_max))
        vals = np.ones(K * M + 1)
        for k in range(1, K):
            lag = vals[(k - 1) * M : k * M + 1]
            t = k + step * np.arange(M + 1)
            tm = t[:-1] + step / 2
            g = lag / t
            gm = _midpoints(lag) / tm
            panels = step / 6 * (g[:-1] + 4 * gm + g[1:])
            vals[k * M + 1 : (k + 1) * M + 1] = vals[k * M] - np.cumsum(panels)
        return cls(step, vals)

    @property
    def u_max(self) -> float:
        return (len(self.values) - 1) * self.step

    @property
    def per_unit(self) -> int:
        return round(1 / self.step)

    def _interp_lag(self, v: float) -> float:
        """rho(v) by cubic interpolation inside the unit interval holding v."""
        if v <= 1:
            return 1.0
        M = self.per_unit
        k = min(math.ceil(v) - 1, len(self.values) // M - 1)
        base = k * M
        pos = (v - k) * M
        j = min(max(int(pos) - 1, 0), M - 3)
        return _lagrange4(self.values[base + j : base + j + 4], pos - j)

    def __call__(self, u: float) -> float:
        if u < 0:
            raise DomainError("rho is defined for u >= 0")
        if u > self.u_max + 1e-12:
            raise RangeError(f"u = {u} exceeds the table range {self.u_max}")
        if u <= 1:
            return 1.0
        n = min(int(u / self.step), len(self.values) - 1)
        un = n * self.step
        if u - un <= 0:
            return float(self.values[n])
        um = (un + u) / 2
        part = (u - un) / 6 * (
            self._interp_lag(un - 1) / un + 4 * self._interp_lag(um - 1) / um + self._interp_lag(u - 1) / u
        )
        return float(self.values[n] - part)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for i, v in enumerate(self.values):
            buf.write(f"{i * self.step:.12g},{v:.12g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> DickmanTable:
        rows = [(float(a), float(b)) for a, b in csv.reader(io.StringIO(text)) if a.strip()]
        if len(rows) < 2:
            raise DomainError("Dickman table CSV needs at least two rows")
        step = rows[1][0] - rows[0][0]
        M = round(1 / step)
        return cls(1.0 / M, np.array([b for _, b in rows]))


@lru_cache(maxsize=4)
def default_table(u_max: float = DEFAULT_UMAX, step: float = DEFAULT_STEP) -> DickmanTable:
    return DickmanTable.build(u_max, step)


def dickman_rho(u: float, u_max: float = DEFAULT_UMAX) -> float:
    return default_table(max(DEFAULT_UMAX, math.ceil(u_max)))(u)


# ---------------------------------------------------------------------------
# logarithmic integrals

_EI2 = float(special.expi(math.log(2.0)))


def li_classic(x: float) -> float:
    """Integral of 1/log t from 2 to x; 0 for |x| <= 2 and odd beyond -2."""
    if abs(x) <= 2:
        return 0.0
    if x < 0:
        return -li_classic(-x)
    return float(special.expi(math.log(x))) - _EI2


def _crossings(g: Poly, level: int, lo: float, hi: float) -> list[float]:
    q = g - level
    if q.degree < 1:
        return []
    lo_f = Fraction(lo).limit_denominator(1 << 30) - 1
    hi_f = Fraction(hi).limit_denominator(1 << 30) + 1
    return [float((a + b) / 2) for a, b in isolate_real_roots(q, lo_f, hi_f, tol=1e-12)]


def _quad_geometric(fn, a: float, b: float) -> float:
    """quad over [a, b] split into pieces of geometrically growing length."""
    total = 0.0
    left = a
    while left < b:
        right = min(b, max(2 * left, left + 1.0))
        val, _ = integrate.quad(fn, left, right, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
        left = right
    return total


def _li_region_integral(polys: Sequence[Poly], scales: Sequence[int], x: float) -> float:
    """Integral over 0 < t < x with min |g_i(t)|/h_i >= 2 of dt / prod log(|g_i(t)|/h_i)."""
    if x <= 0 or not polys:
        return 0.0
    cuts = {0.0, float(x)}
    for g, h in zip(polys, scales):
        for lev in (2 * h, -2 * h):
            cuts.update(c for c in _crossings(g, lev, 0.0, x) if 0 < c < x)
    cuts = sorted(cuts)

    def inside(t: float) -> bool:
        return all(abs(float(g(t))) / h >= 2 for g, h in zip(polys, scales))

    def integrand(t: float) -> float:
        out = 1.0
        for g, h in zip(polys, scales):
            out *= math.log(abs(float(g(t))) / h)
        return 1.0 / out

    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        if b - a <= 0 or not inside((a + b) / 2):
            continue
        total += _quad_geometric(integrand, a, b)
    return total


def li_poly(F: FactoredPoly, x: float) -> float:
    """li(F; x) over the distinct irreducible factors of F."""
    if x < 0:
        raise DomainError("li_poly needs x >= 0")
    return _li_region_integral(F.polys, [1] * F.K, x)


def li_poly_weighted(f: FactoredPoly, hs: Sequence[int], x: float) -> float:
    """The same integral with each factor f_i replaced by f_i / h_i."""
    if len(hs) != f.K:
        raise DomainError("need one h_i per irreducible factor")
    if any(h < 1 for h in hs):
        raise DomainError("h_i must be positive integers")
    return _li_region_integral(f.polys, list(hs), x)


# ---------------------------------------------------------------------------
# singular series


@dataclass(frozen=True)
class SingularSeriesValue:
    value: float
    truncation_prime: int
    tail_estimate: float
    admissible: bool
    log_value: float = 0.0
    witness_prime: int | None = None

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "truncation_prime": self.truncation_prime,
            "tail_estimate": self.tail_estimate,
            "admissible": self.admissible,
            "witness_prime": self.witness_prime,
        }


def _divisible_mask(n: int, primes: np.ndarray) -> np.ndarray:
    n = abs(int(n))
    if n == 0:
        return np.ones(primes.shape[0], dtype=bool)
    if n < 1 << 62:
        return np.int64(n) % primes == 0
    return np.array([n % int(p) == 0 for p in primes], dtype=bool)


def _union_roots(polys: Sequence[Poly], p: int) -> int:
    roots: set[int] = set()
    for g in polys:
        if content(g) % p == 0:
            return p
        roots.update(modp.roots_mod_prime(g.coeffs, p))
    return len(roots)


def local_sigmas(polys: Sequence[Poly], primes: np.ndarray) -> np.ndarray:
    """sigma(g_1 ... g_k; p) for each prime, for pairwise coprime nonzero g_i."""
    primes = np.asarray(primes, dtype=np.int64)
    D = sum(g.degree for g in polys)
    special = primes <= D
    for g in polys:
        special |= _divisible_mask(content(g), primes) | _divisible_mask(g.lc, primes)
    for g, h in combinations(polys, 2):
        R = resultant(g, h)
        if R == 0:
            raise DomainError(f"factors {g} and {h} share a common factor")
        special |= _divisible_mask(R, primes)
    out = np.zeros(primes.shape[0], dtype=np.int64)
    gen = ~special
    if gen.any():
        for g in polys:
            out[gen] += sigma_at_primes(g, primes[gen])
    for i in np.flatnonzero(special):
        out[i] = _union_roots(polys, int(primes[i]))
    return out


def _log_terms(K: int, sig: np.ndarray, primes: np.ndarray) -> np.ndarray:
    pf = primes.astype(float)
    return -K * np.log1p(-1.0 / pf) + np.log1p(-sig / pf)


def _tail_from_increments(d1: float, d2: float) -> float:
    """Empirical bound on the omitted tail of a log-sum from two successive
    increments (over (P/4, P/2] and (P/2, P]), extrapolated geometrically."""
    a1, a2 = abs(d1), abs(d2)
    tail = max(a1, a2)
    if d1 and d2 and d1 * d2 > 0 and a2 < a1:
        r = a2 / a1
        tail = max(tail, a2 * r / (1 - r))
    return tail


def euler_log_sum(polys: Sequence[Poly], P: int, K: int | None = None, sig_fn=None):
    """(log partial product at P, at P/2, at P/4, first prime with sigma = p)."""
    primes = primes_upto(P)
    K = len(polys) if K is None else K
    sig = local_sigmas(polys, primes) if sig_fn is None else sig_fn(primes)
    bad = np.flatnonzero(sig >= primes)
    if bad.size:
        return None, int(primes[bad[0]])
    terms = _log_terms(K, sig, primes)
    cs = np.concatenate([[0.0], np.cumsum(terms)])
    at = lambda Q: float(cs[np.searchsorted(primes, Q, side="right")])
    return (at(P), at(P // 2), at(P // 4)), None


def singular_series_of(polys: Sequence[Poly], P: int) -> SingularSeriesValue:
    """prod_{p <= P} (1 - 1/p)^(-k) (1 - sigma(g_1...g_k; p)/p) for raw factors g_i."""
    if P < 2:
        raise DomainError("truncation prime must be at least 2")
    logs, bad = euler_log_sum(polys, P)
    if bad is not None:
        return SingularSeriesValue(0.0, P, 0.0, False, -math.inf, bad)
    L, L2, L4 = logs
    tail_log = _tail_from_increments(L2 - L4, L - L2)
    value = math.exp(L)
    return SingularSeriesValue(value, P, value * math.expm1(tail_log), True, L)


def singular_series(F: FactoredPoly, P: int) -> SingularSeriesValue:
    """Truncated C(F); a prime with sigma(F;p) = p gives value 0, admissible False."""
    polys = list(F.polys)
    if not polys:
        raise DomainError("singular series of a constant")
    if F.content > 1:
        # every prime dividing the content has sigma = p
        p = min(int(q) for q in primes_upto(F.content) if F.content % int(q) == 0)
        return SingularSeriesValue(0.0, P, 0.0, False, -math.inf, p)
    return singular_series_of(polys, P)


def _product_tree(nums: Sequence[int]) -> int:
    nums = list(nums)
    if not nums:
        return 1
    while len(nums) > 1:
        nxt = [nums[i] * nums[i + 1] for i in range(0, len(nums) - 1, 2)]
        if len(nums) % 2:
            nxt.append(nums[-1])
        nums = nxt
    return nums[0]


def singular_series_exact(polys: Sequence[Poly], P: int, K: int | None = None) -> Fraction:
    """The same truncated product as an exact rational number."""
    primes = primes_upto(P)
    K = len(polys) if K is None else K
    sig = local_sigmas(polys, primes)
    if (sig >= primes).any():
        return Fraction(0)
    ps = [int(p) for p in primes]
    num = _product_tree([p**K * (p - int(s)) for p, s in zip(ps, sig)])
    den = _product_tree([(p - 1) ** K * p for p in ps])
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# Mertens-sum surrogate for rho on [1, 3]


def mertens_rho(u: float, t: float) -> float:
    """1 - log u + sum over t^(1/u) < p <= t^(1/2) of log(log(t/p)/log p)/p."""
    if not 1 <= u <= 3:
        raise DomainError("mertens_rho needs 1 <= u <= 3")
    if t <= 1 or t ** (1 / u) < 2:
        raise DomainError("mertens_rho needs t^(1/u) >= 2")
    base = 1 - math.log(u)
    if u <= 2:
        return base
    lo = t ** (1 / u)
    hi = math.isqrt(int(t)) if t == int(t) else t**0.5
    ps = primes_between(math.floor(lo), int(hi))
    ps = ps[ps > lo].astype(float)
    if ps.size == 0:
        return base
    lt = math.log(t)
    lp = np.log(ps)
    return base + float(np.sum(np.log((lt - lp) / lp) / ps))
