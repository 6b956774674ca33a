"""Prime tables and the certified prime-gap window check.

A PrimeTable is an immutable sorted array of all primes up to a limit,
built with a segmented sieve of Eratosthenes.  It can be saved to and
loaded from a compact bitmap cache.  dusart_gap_holds verifies that a
short interval above x contains a prime, using a conservatively rounded
window end so a True answer is a certificate.
"""

from __future__ import annotations

import struct
from fractions import Fraction
from math import isqrt
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DomainError, TableTooSmallError
from .intervals import (
    DEFAULT_PRECISION_BITS,
    iv_add,
    iv_div,
    iv_from_fraction,
    iv_from_int,
    iv_log,
    iv_mul,
)

# Short prime gaps are guaranteed above this bound: for x >= it, the
# interval (x, x(1 + (1/5000)/log^2 x)] contains a prime.
DUSART_GAP_THRESHOLD = 468991632
DUSART_GAP_COEFF = Fraction(1, 5000)

_CACHE_MAGIC = b"RBSV1"

_DEFAULT_SEGMENT = 1 << 20


def _simple_sieve(limit: int) -> np.ndarray:
    """Boolean array s with s[i] true iff i is prime, for 0 <= i <= limit."""
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return sieve


def _sieve_odd_segment(lo: int, hi: int, base_primes: np.ndarray) -> np.ndarray:
    """Odd primes in [lo, hi), as int64.  lo must be odd, lo >= 3."""
    n = (hi - lo + 1) // 2  # odd numbers lo, lo+2, ...
    flags = np.ones(n, dtype=bool)
    for p in base_primes:
        p = int(p)
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start % 2 == 0:
            start += p
        if start >= hi:
            continue
        flags[(start - lo) // 2 :: p] = False
    return (lo + 2 * np.flatnonzero(flags)).astype(np.int64)


class PrimeTable:
    """All primes up to ``limit`` as a sorted int64 array, 1-based indexing."""

    __slots__ = ("limit", "_primes")

    def __init__(self, limit: int, primes: np.ndarray):
        self.limit = int(limit)
        self._primes = primes

    @classmethod
    def build(cls, limit: int, segment_size: int = _DEFAULT_SEGMENT) -> "PrimeTable":
        if limit < 2:
            return cls(max(limit, 0), np.empty(0, dtype=np.int64))
        root = isqrt(limit)
        base = _simple_sieve(max(root, 3))
        base_primes = np.flatnonzero(base).astype(np.int64)
        odd_base = base_primes[base_primes > 2]
        chunks = [np.array([2], dtype=np.int64)]
        lo = 3
        while lo <= limit:
            hi = min(lo + segment_size, limit + 1)
            chunks.append(_sieve_odd_segment(lo, hi, odd_base))
            lo = hi
            if lo % 2 == 0:
                lo += 1
        return cls(limit, np.concatenate(chunks))

    def __len__(self) -> int:
        return int(self._primes.size)

    def nth_prime(self, i: int) -> int:
        """The i-th prime, 1-based: nth_prime(1) == 2."""
        if i < 1:
            raise DomainError(f"prime index must be >= 1, got {i}")
        if i > self._primes.size:
            raise TableTooSmallError(
                f"table holds {self._primes.size} primes, index {i} requested",
                needed=i,
            )
        return int(self._primes[i - 1])

    def prime_index(self, p: int) -> int:
        """Inverse of nth_prime; raises if p is not prime or beyond limit."""
        if p > self.limit:
            raise TableTooSmallError(
                f"{p} beyond table limit {self.limit}", needed=p
            )
        pos = int(np.searchsorted(self._primes, p))
        if pos >= self._primes.size or int(self._primes[pos]) != p:
            raise DomainError(f"{p} is not prime")
        return pos + 1

    def is_prime(self, n: int) -> bool:
        if n > self.limit:
            raise TableTooSmallError(
                f"{n} beyond table limit {self.limit}", needed=n
            )
        pos = int(np.searchsorted(self._primes, n))
        return pos < self._primes.size and int(self._primes[pos]) == n

    def next_prime(self, x: int) -> int:
        """Smallest prime strictly greater than x."""
        pos = int(np.searchsorted(self._primes, x, side="right"))
        if pos >= self._primes.size:
            raise TableTooSmallError(
                f"no prime > {x} within table limit {self.limit}", needed=x + 1
            )
        return int(self._primes[pos])

    def prev_prime(self, x: int) -> int:
        """Largest prime strictly less than x."""
        pos = int(np.searchsorted(self._primes, x, side="left"))
        if pos == 0:
            raise DomainError(f"no prime < {x}")
        return int(self._primes[pos - 1])

    def count_up_to(self, x: int) -> int:
        """pi(x) for x <= limit."""
        if x > self.limit:
            raise TableTooSmallError(
                f"{x} beyond table limit {self.limit}", needed=x
            )
        return int(np.searchsorted(self._primes, x, side="right"))

    def slice(self, i: int, j: int) -> np.ndarray:
        """Primes p_i..p_j inclusive (1-based) as an int64 view."""
        if i < 1 or j < i - 1:
            raise DomainError(f"bad prime index range [{i}, {j}]")
        if j > self._primes.size:
            raise TableTooSmallError(
                f"table holds {self._primes.size} primes, index {j} requested",
                needed=j,
            )
        return self._primes[i - 1 : j]

    def primes_in(self, lo: int, hi: int) -> np.ndarray:
        """Primes in [lo, hi] as an int64 view."""
        if hi > self.limit:
            raise TableTooSmallError(
                f"{hi} beyond table limit {self.limit}", needed=hi
            )
        a = int(np.searchsorted(self._primes, lo, side="left"))
        b = int(np.searchsorted(self._primes, hi, side="right"))
        return self._primes[a:b]

    # Bitmap cache: magic, little-endian uint64 limit, then packed bits for
    # odd numbers 1, 3, 5, ... up to limit (bit t <-> 2t+1, 1 iff prime).
    def save(self, path: Union[str, Path]) -> None:
        n_odd = (self.limit + 1) // 2
        bits = np.zeros(n_odd, dtype=np.uint8)
        odd = self._primes[self._primes > 2]
        bits[(odd - 1) // 2] = 1
        packed = np.packbits(bits, bitorder="little")
        with open(path, "wb") as fh:
            fh.write(_CACHE_MAGIC)
            fh.write(struct.pack("<Q", self.limit))
            fh.write(packed.tobytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PrimeTable":
        with open(path, "rb") as fh:
            magic = fh.read(len(_CACHE_MAGIC))
            if magic != _CACHE_MAGIC:
                raise DomainError(f"bad prime cache magic {magic!r}")
            (limit,) = struct.unpack("<Q", fh.read(8))
            raw = np.frombuffer(fh.read(), dtype=np.uint8)
        n_odd = (limit + 1) // 2
        bits = np.unpackbits(raw, bitorder="little")[:n_odd]
        odd = (2 * np.flatnonzero(bits) + 1).astype(np.int64)
        primes = np.concatenate([np.array([2], dtype=np.int64), odd]) if limit >= 2 else odd
        return cls(int(limit), primes)


_GAP_BASE_TABLE: Optional[PrimeTable] = None


def _gap_base_primes(root: int) -> np.ndarray:
    global _GAP_BASE_TABLE
    if _GAP_BASE_TABLE is None or _GAP_BASE_TABLE.limit < root:
        _GAP_BASE_TABLE = PrimeTable.build(max(root, 40000))
    return _GAP_BASE_TABLE.primes_in(2, root)


def dusart_window_end(x: int, prec: int = DEFAULT_PRECISION_BITS) -> int:
    """Certified lower bound for x(1 + (1/5000)/log^2 x) as an integer.

    Searching (x, end] for a prime therefore searches a subset of the
    guaranteed window, so a hit certifies the gap bound at x.
    """
    lg = iv_log(iv_from_int(x), prec)
    rel = iv_div(iv_from_fraction(DUSART_GAP_COEFF, prec), iv_mul(lg, lg, prec), prec)
    end = iv_mul(iv_from_int(x), iv_add(iv_from_int(1), rel, prec), prec)
    end_int = int(end.lo)  # Fraction floor
    if end_int <= x:
        raise DomainError(f"degenerate gap window at {x}")
    return end_int


def dusart_gap_holds(x: int, table: Optional[PrimeTable] = None,
                     prec: int = DEFAULT_PRECISION_BITS) -> bool:
    """True iff a prime lies in (x, end] with end the certified window bound.

    True is a certificate.  False only means no prime was found in the
    conservatively shortened window, not that the underlying bound fails.
    """
    if x < DUSART_GAP_THRESHOLD:
        raise DomainError(
            f"gap bound applies for x >= {DUSART_GAP_THRESHOLD}, got {x}"
        )
    end = dusart_window_end(x, prec)
    if table is not None and table.limit >= end:
        try:
            return table.next_prime(x) <= end
        except TableTooSmallError:
            return False
    # Sieve just the window (x, end].
    root = isqrt(end)
    base = _gap_base_primes(root)
    lo = x + 1
    size = end - lo + 1
    flags = np.ones(size, dtype=bool)
    for p in base:
        p = int(p)
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start <= end:
            flags[start - lo :: p] = False
    return bool(flags.any())
