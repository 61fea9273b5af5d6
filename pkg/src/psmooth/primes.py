"""Small prime utilities shared by the analytic and sieve layers."""

from __future__ import annotations

import numpy as np


def primes_upto(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (odd-only sieve of Eratosthenes)."""
    n = int(n)
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    m = (n - 1) // 2  # index i stands for 2i + 1, i = 1..m
    flags = np.ones(m + 1, dtype=bool)
    flags[0] = False
    r = int(n**0.5)
    for i in range(1, (r - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[(p * p - 1) // 2 :: p] = False
    odd = 2 * np.flatnonzero(flags).astype(np.int64) + 1
    return np.concatenate([np.array([2], dtype=np.int64), odd])


def primes_between(lo: int, hi: int, base: np.ndarray | None = None) -> np.ndarray:
    """Primes p with lo < p <= hi, by a segmented sieve over (lo, hi]."""
    lo, hi = max(int(lo), 1), int(hi)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    if hi < 1 << 22:
        ps = primes_upto(hi)
        return ps[ps > lo]
    base = primes_upto(int(hi**0.5) + 1) if base is None else base
    seg = np.ones(hi - lo, dtype=bool)  # seg[k] stands for lo + 1 + k
    for p in base:
        p = int(p)
        if p * p > hi:
            break
        start = max(p * p, ((lo + 1 + p - 1) // p) * p)
        seg[start - lo - 1 :: p] = False
    if lo < 1:
        seg[: 2 - lo - 1] = False
    return np.flatnonzero(seg).astype(np.int64) + lo + 1
