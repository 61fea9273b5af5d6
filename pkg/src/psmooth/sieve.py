"""Exact counting: primes, smooth numbers, smooth and prime polynomial values.

Conventions: smoothness of a negative value means smoothness of its
absolute value; 0 is never smooth (every prime divides it); 1 is smooth.

Smoothness is decided from residual cofactors.  Every prime p <= min(y, T)
dividing a value is divided out (T is the progression threshold).  If the
residual r then satisfies r <= y, all its prime factors are <= y, so the
value is smooth.  If r > y but r < T^2 then r is a single prime above y.
The rare remaining residuals are trial-divided by the primes in (T, y].
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import sympy

from psmooth.errors import DomainError, ResourceError
from psmooth.localroots import roots_mod_p, sigma_at_primes
from psmooth.polycore.factored import FactoredPoly
from psmooth.polycore.poly import Poly
from psmooth.primes import primes_between, primes_upto

DEFAULT_THRESHOLD = 10**5
DEFAULT_CHUNK = 1 << 20
PRIME_TABLE_CAP = 10**8
_MAGIC = b"PSPT1"
_I64_SAFE = 1 << 62

# ---------------------------------------------------------------------------
# prime table


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    odd_flags: np.ndarray  # odd_flags[i] is True iff 2i+1 is prime
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, limit: int, cap: int = PRIME_TABLE_CAP) -> PrimeTable:
        limit = int(limit)
        if limit > cap:
            raise ResourceError(f"prime table limit {limit} exceeds the cap {cap}")
        limit = max(limit, 2)
        flags = np.zeros((limit + 1) // 2 + 1, dtype=bool)
        odd = primes_upto(limit)[1:]
        flags[(odd - 1) // 2] = True
        flags = flags[: (limit - 1) // 2 + 1]
        table = cls(limit, flags, {"generator": "odd-only Eratosthenes"})
        table.self_test()
        return table

    def self_test(self) -> None:
        if self.limit >= 100 and self.count(100) != 25:
            raise ResourceError("prime table self-test failed at 100")
        if self.limit >= 10**6 and self.count(10**6) != 78498:
            raise ResourceError("prime table self-test failed at 10^6")

    def primes(self, upto: int | None = None) -> np.ndarray:
        upto = self.limit if upto is None else min(int(upto), self.limit)
        if upto < 2:
            return np.zeros(0, dtype=np.int64)
        m = (upto - 1) // 2
        odd = 2 * np.flatnonzero(self.odd_flags[: m + 1]).astype(np.int64) + 1
        return np.concatenate([np.array([2], dtype=np.int64), odd])

    def count(self, x: float) -> int:
        x = math.floor(x)
        if x > self.limit:
            raise ResourceError(f"x = {x} is beyond the prime table limit {self.limit}")
        if x < 2:
            return 0
        return 1 + int(np.count_nonzero(self.odd_flags[: (x - 1) // 2 + 1]))

    def is_prime_array(self, n: np.ndarray) -> np.ndarray:
        n = np.abs(np.asarray(n, dtype=np.int64))
        if n.size and int(n.max()) > self.limit:
            raise ResourceError("value beyond the prime table limit")
        out = n == 2
        odd = (n % 2 == 1) & (n > 1)
        out[odd] = self.odd_flags[(n[odd] - 1) // 2]
        return out

    # disk cache ------------------------------------------------------

    def to_bytes(self) -> bytes:
        bits = np.packbits(self.odd_flags, bitorder="little")
        return _MAGIC + int(self.limit).to_bytes(8, "little") + bits.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> PrimeTable:
        if data[:5] != _MAGIC:
            raise DomainError("not a prime table file (bad magic)")
        limit = int.from_bytes(data[5:13], "little")
        n = (limit - 1) // 2 + 1
        bits = np.frombuffer(data[13:], dtype=np.uint8)
        flags = np.unpackbits(bits, bitorder="little")[:n].astype(bool)
        table = cls(limit, flags, {"source": "cache"})
        table.self_test()
        return table

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".pspt-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(self.to_bytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> PrimeTable:
        return cls.from_bytes(Path(path).read_bytes())


def cache_path(cache_dir: str | os.PathLike, limit: int) -> Path:
    return Path(cache_dir) / f"primes-{int(limit)}.pspt"


def load_or_build(limit: int, cache_dir: str | os.PathLike | None = None, cap: int = PRIME_TABLE_CAP) -> PrimeTable:
    """A prime table covering limit, read from or written to cache_dir when given."""
    if cache_dir is not None:
        d = Path(cache_dir)
        if d.is_dir():
            best = None
            for f in d.glob("primes-*.pspt"):
                try:
                    lim = int(f.stem.split("-", 1)[1])
                except ValueError:
                    continue
                if lim >= limit and (best is None or lim < best[0]):
                    best = (lim, f)
            if best is not None:
                return PrimeTable.load(best[1])
    table = PrimeTable.build(limit, cap)
    if cache_dir is not None:
        table.save(cache_path(cache_dir, table.limit))
    return table


@lru_cache(maxsize=8)
def _table(limit: int) -> PrimeTable:
    return PrimeTable.build(limit)


def prime_table(limit: int) -> PrimeTable:
    """Process-wide table, grown in powers of two to limit reuse."""
    size = 1 << max(10, math.ceil(math.log2(max(limit, 2))))
    return _table(min(max(size, int(limit)), max(PRIME_TABLE_CAP, int(limit))))


# ---------------------------------------------------------------------------
# primality

_MR_BASES_64 = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_MR_BASES_13 = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
DETERMINISTIC_LIMIT = 3317044064679887385961981


def _strong_probable_prime(n: int, a: int) -> bool:
    a %= n
    if a == 0:
        return True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(a, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Primality of |n|.  Deterministic below 3.3e24; BPSW probable prime above (see is_prime_certain)."""
    n = abs(int(n))
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    if n < 1 << 64:
        return all(_strong_probable_prime(n, a) for a in _MR_BASES_64)
    if n < DETERMINISTIC_LIMIT:
        return all(_strong_probable_prime(n, a) for a in _MR_BASES_13)
    return bool(sympy.isprime(n))


def is_prime_certain(n: int) -> bool:
    """True when is_prime(n) is a proof rather than a probable-prime verdict."""
    return abs(int(n)) < DETERMINISTIC_LIMIT


# ---------------------------------------------------------------------------
# prime counts


def prime_count(x: float) -> int:
    x = math.floor(x)
    if x < 2:
        return 0
    return prime_table(x).count(x)


def prime_count_ap(x: float, q: int, a: int) -> int:
    """#{p <= x prime : p = a mod q}."""
    if q < 1:
        raise DomainError("modulus q must be positive")
    x = math.floor(x)
    if x < 2:
        return 0
    ps = prime_table(x).primes(x)
    return int(np.count_nonzero(ps % q == a % q))


def prime_count_segment_ap(x: float, y: float, q: int, a: int) -> int:
    """#{x - y < p <= x prime : p = a mod q}."""
    x, lo = math.floor(x), math.floor(x - y)
    ps = primes_between(max(lo, 0), x)
    return int(np.count_nonzero(ps % q == a % q))


# ---------------------------------------------------------------------------
# residual sieving


def _as_values(vals) -> np.ndarray:
    """int64 when every |value| fits comfortably, object (Python ints) otherwise."""
    arr = np.asarray(vals, dtype=object)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    mx = max(abs(int(arr.max())), abs(int(arr.min())))
    if mx < _I64_SAFE:
        return np.abs(arr.astype(np.int64))
    return np.abs(arr)


def poly_values(g: Poly, lo: int, hi: int) -> np.ndarray:
    """|g(n)| for lo <= n < hi, exact."""
    D = g.degree
    bound = sum(abs(c) for c in g.coeffs) * max(abs(lo), abs(hi), 1) ** max(D, 0)
    if bound < _I64_SAFE:
        n = np.arange(lo, hi, dtype=np.int64)
        acc = np.zeros(hi - lo, dtype=np.int64)
        for c in reversed(g.coeffs):
            acc = acc * n + c
        return np.abs(acc)
    n = np.arange(lo, hi, dtype=object)
    acc = np.zeros(hi - lo, dtype=object)
    for c in reversed(g.coeffs):
        acc = acc * n + c
    return np.abs(acc)


def _divide_out(res: np.ndarray, idx: np.ndarray, p: int) -> None:
    """Remove every factor p from res at the given positions (values nonzero)."""
    while idx.size:
        v = res[idx]
        hit = v % p == 0
        idx = idx[hit]
        if not idx.size:
            return
        res[idx] = res[idx] // p


@dataclass
class SmoothnessSieveChunk:
    n_lo: int
    n_hi: int
    residual: np.ndarray  # |F(n)| with the primes <= min(y, T) removed
    zero: np.ndarray  # F(n) == 0
    unit: np.ndarray  # |F(n)| == 1
    y: float
    threshold: int

    def smooth_mask(self, extra_primes: np.ndarray | None = None) -> np.ndarray:
        """Mask of n in [n_lo, n_hi) with F(n) nonzero and y-smooth."""
        r = self.residual
        y, T = self.y, self.threshold
        ok = (r <= y).astype(bool) & ~self.zero
        if y <= T:
            return ok
        # primes in (T, y] were not sieved; residual factors all exceed T
        hard = np.flatnonzero(~ok & ~self.zero & (r >= T * T).astype(bool))
        if hard.size:
            ps = extra_primes if extra_primes is not None else primes_between(T, int(y))
            for i in hard:
                ok[i] = _smooth_after_trial(int(r[i]), ps, y)
        return ok


def _smooth_after_trial(r: int, ps: np.ndarray, y: float) -> bool:
    """r has no prime factor <= T; is it y-smooth?  ps are the primes in (T, y]."""
    if r <= y:
        return True
    if r < 1 << 62:
        hits = ps[np.int64(r) % ps == 0]
    else:
        hits = [p for p in ps if r % int(p) == 0]
    for p in hits:
        p = int(p)
        while r % p == 0:
            r //= p
    return r == 1


def _roots_for(g: Poly, primes: np.ndarray) -> list[tuple[int, list[int]]]:
    """(p, roots of g mod p) for primes where g has roots, skipping the rest quickly."""
    sig = sigma_at_primes(g, primes)
    out = []
    for p, s in zip(primes, sig):
        if s:
            out.append((int(p), roots_mod_p(g, int(p))))
    return out


@lru_cache(maxsize=64)
def _roots_cached(coeffs: tuple[int, ...], bound: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    g = Poly(coeffs)
    return tuple((p, tuple(r)) for p, r in _roots_for(g, primes_upto(bound)))


def sieve_chunk(
    g: Poly, lo: int, hi: int, y: float, threshold: int = DEFAULT_THRESHOLD, values: np.ndarray | None = None
) -> SmoothnessSieveChunk:
    """Residuals of |g(n)| for lo <= n < hi after removing primes <= min(y, threshold)."""
    res = poly_values(g, lo, hi) if values is None else values.copy()
    zero = res == 0
    res[zero] = 1
    unit = res == 1
    bound = int(min(y, threshold))
    for p, rts in _roots_cached(g.coeffs, bound):
        for r in rts:
            start = (r - lo) % p
            _divide_out(res, np.arange(start, hi - lo, p), p)
    res[zero] = 0
    return SmoothnessSieveChunk(lo, hi, res, zero, unit & ~zero, y, threshold)


def _smooth_integers_mask(lo: int, hi: int, y: float, threshold: int = DEFAULT_THRESHOLD) -> np.ndarray:
    """Mask of y-smooth n in [lo, hi), lo >= 1."""
    ch = sieve_chunk(Poly((0, 1)), lo, hi, y, threshold)
    return ch.smooth_mask()


_progress = None


def set_progress(callback) -> None:
    """Install callback(done, total) called after every sieved chunk (None to remove)."""
    global _progress
    _progress = callback


def _chunks(lo: int, hi: int, size: int):
    a = lo
    while a < hi:
        b = min(hi, a + size)
        yield a, b
        if _progress is not None:
            _progress(b - lo, hi - lo)
        a = b


def smooth_count(x: float, y: float, chunk: int = DEFAULT_CHUNK, threshold: int = DEFAULT_THRESHOLD) -> int:
    """Psi(x, y): #{1 <= n <= x : n is y-smooth}."""
    if y < 1:
        raise DomainError("y must be at least 1")
    X = math.floor(x)
    if X < 1:
        return 0
    if y >= X:
        return X
    return sum(int(_smooth_integers_mask(a, b, y, threshold).sum()) for a, b in _chunks(1, X + 1, chunk))


def smooth_count_ap(x: float, y: float, q: int, a: int, chunk: int = DEFAULT_CHUNK, threshold: int = DEFAULT_THRESHOLD) -> int:
    """Psi(x, y; q, a)."""
    if q < 1:
        raise DomainError("modulus q must be positive")
    X = math.floor(x)
    total = 0
    for lo, hi in _chunks(1, X + 1, chunk):
        m = _smooth_integers_mask(lo, hi, y, threshold)
        n = np.arange(lo, hi)
        total += int(np.count_nonzero(m & (n % q == a % q)))
    return total


def _content_smooth(c: int, y: float) -> bool:
    return all(p <= y for p in sympy.factorint(c)) if c > 1 else True


def poly_smooth_count(
    F: FactoredPoly, x: float, y: float, chunk: int = DEFAULT_CHUNK, threshold: int = DEFAULT_THRESHOLD
) -> int:
    """Psi(F; x, y): #{1 <= n <= x : F(n) != 0 and |F(n)| is y-smooth}."""
    X = math.floor(x)
    if X < 1:
        return 0
    if not _content_smooth(F.content, y):
        return 0
    R = F.radical() if F.factors else Poly.const(1)
    extra = primes_between(threshold, int(y)) if y > threshold else None
    total = 0
    for lo, hi in _chunks(1, X + 1, chunk):
        total += int(sieve_chunk(R, lo, hi, y, threshold).smooth_mask(extra).sum())
    return total


def has_large_prime_mask(g: Poly, lo: int, hi: int, y: float, threshold: int = DEFAULT_THRESHOLD, extra=None) -> np.ndarray:
    """n in [lo, hi) such that some prime p > y divides g(n) (true when g(n) = 0)."""
    ch = sieve_chunk(g, lo, hi, y, threshold)
    return ~ch.smooth_mask(extra)


def M_count(f: FactoredPoly, x: float, y: float, chunk: int = DEFAULT_CHUNK, threshold: int = DEFAULT_THRESHOLD) -> int:
    """#{n <= x : every irreducible factor g of f has a prime p > y dividing g(n)}."""
    X = math.floor(x)
    if X < 1 or not f.factors:
        return 0
    extra = primes_between(threshold, int(y)) if y > threshold else None
    total = 0
    for lo, hi in _chunks(1, X + 1, chunk):
        m = np.ones(hi - lo, dtype=bool)
        for g in f.polys:
            m &= has_large_prime_mask(g, lo, hi, y, threshold, extra)
        total += int(m.sum())
    return total


# ---------------------------------------------------------------------------
# shifted primes and prime values


def shifted_prime_smooth_count(a: int, x: float, y: float, chunk: int = DEFAULT_CHUNK, threshold: int = DEFAULT_THRESHOLD) -> int:
    """Phi_a(x, y): #{q <= x prime : |q - a| is y-smooth}; q = a never counts."""
    if a == 0:
        raise DomainError("a must be nonzero")
    X = math.floor(x)
    if X < 1 + max(a, 0):
        raise DomainError(f"need x >= 1 + max(a, 0) = {1 + max(a, 0)}")
    table = prime_table(X)
    ps = table.primes(X)
    m = np.abs(ps - a)
    m = m[m > 0]
    if m.size == 0:
        return 0
    mmax = int(m.max())
    smooth = np.zeros(mmax + 1, dtype=bool)
    for lo, hi in _chunks(1, mmax + 1, chunk):
        smooth[lo:hi] = _smooth_integers_mask(lo, hi, y, threshold)
    return int(np.count_nonzero(smooth[m]))


_SMALL_SIEVE = 1 << 12


def _prime_value_mask(g: Poly, lo: int, hi: int) -> np.ndarray:
    vals = poly_values(g, lo, hi)
    if vals.size == 0:
        return np.zeros(0, dtype=bool)
    vmax = int(vals.max())
    if vmax <= PRIME_TABLE_CAP and vals.dtype != object:
        return prime_table(max(vmax, 2)).is_prime_array(vals)
    # composite prefilter by small primes along root progressions, then Miller-Rabin
    cand = vals > 1
    for p, rts in _roots_cached(g.coeffs, _SMALL_SIEVE):
        for r in rts:
            idx = np.arange((r - lo) % p, hi - lo, p)
            cand[idx] &= vals[idx] == p
    out = np.zeros(hi - lo, dtype=bool)
    for i in np.flatnonzero(cand):
        out[i] = is_prime(int(vals[i]))
    return out


def prime_values_count(F: FactoredPoly, x: float, chunk: int = DEFAULT_CHUNK) -> int:
    """pi(F; x): #{1 <= n <= x : |g(n)| is prime for every distinct factor g}."""
    if not F.is_squarefree_form():
        raise DomainError("prime_values_count needs a squarefree factorisation")
    X = math.floor(x)
    if X < 1 or not F.factors:
        return 0
    total = 0
    for lo, hi in _chunks(1, X + 1, chunk):
        m = np.ones(hi - lo, dtype=bool)
        for g in F.polys:
            m &= _prime_value_mask(g, lo, hi)
            if not m.any():
                break
        total += int(m.sum())
    return total


def prime_values_probable(F: FactoredPoly, x: float) -> bool:
    """True when some value tested by prime_values_count is past the deterministic range."""
    X = math.floor(x)
    return any(max(abs(g(0)), abs(g(X)), abs(g(-X))) >= DETERMINISTIC_LIMIT for g in F.polys)


# ---------------------------------------------------------------------------
# error term


@dataclass(frozen=True)
class ErrorTermValue:
    count: int
    constant: float
    li_value: float
    error: float
    normalized: float | None
    truncation_prime: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def error_term(F: FactoredPoly, x: float, P: int = 10**6) -> ErrorTermValue:
    """E(F; x) = pi(F; x) - C(F) li(F; x), with E / (C x / log^(K+1) x) when C > 0."""
    from psmooth.analytic import li_poly, singular_series

    if F.content != 1:
        raise DomainError("error_term needs a primitive polynomial")
    cnt = prime_values_count(F, x)
    C = singular_series(F, P)
    if not C.admissible:
        return ErrorTermValue(cnt, 0.0, 0.0, float(cnt), None, P)
    L = li_poly(F, x)
    E = cnt - C.value * L
    norm = E / (C.value * x / math.log(x) ** (F.K + 1)) if x > 1 else None
    return ErrorTermValue(cnt, C.value, L, E, norm, P)
