"""Certified interval arithmetic on arbitrary-precision binary endpoints.

Every ``IntervalScalar`` is an enclosure [lo, hi] of an exact real number.
All operations round endpoints outward, so the exact value of an expression
always stays inside the computed interval, and comparisons issue a strict
verdict only when the enclosures are disjoint.  Endpoints are raw mpmath
mpf tuples (sign, mantissa, exponent, bitcount); the exponent is an
unbounded Python int, so no operation here can overflow to infinity.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from mpmath.libmp import (
    finf,
    fnan,
    fninf,
    from_int,
    from_man_exp,
    from_rational,
    from_str,
    fzero,
    mpf_cmp,
    mpf_euler,
    mpf_neg,
    to_rational,
    to_str,
)
from mpmath.libmp import libmpi as _mpi

from .errors import DomainError

DEFAULT_PRECISION_BITS = 128
MIN_PRECISION_BITS = 64

# Largest fractional bit count serialized as an exact decimal string.  An
# endpoint with a smaller binary exponent has no bounded decimal expansion
# worth emitting; round outward to working precision before serializing.
_MAX_SERIAL_FRACTION_BITS = 1 << 16

_ROUND_DOWN = "f"
_ROUND_UP = "c"

_SPECIALS = (finf, fninf, fnan)


class Comparison(Enum):
    """Outcome of a certified comparison of two enclosures."""

    CERTAINLY_LESS = "certainly_less"
    CERTAINLY_GREATER = "certainly_greater"
    OVERLAPPING = "overlapping"


def _check_finite(t: tuple) -> tuple:
    if t in _SPECIALS:
        raise DomainError("non-finite interval endpoint")
    return t


@dataclass(frozen=True, slots=True)
class IntervalScalar:
    """Enclosure of one real number; lo <= hi, both finite dyadic rationals."""

    _lo: tuple
    _hi: tuple

    def __post_init__(self):
        _check_finite(self._lo)
        _check_finite(self._hi)
        if mpf_cmp(self._lo, self._hi) > 0:
            raise DomainError("interval endpoints out of order")

    @property
    def lo(self) -> Fraction:
        p, q = to_rational(self._lo)
        return Fraction(int(p), int(q))

    @property
    def hi(self) -> Fraction:
        p, q = to_rational(self._hi)
        return Fraction(int(p), int(q))

    @property
    def lo_float(self) -> float:
        return float(self.lo)

    @property
    def hi_float(self) -> float:
        return float(self.hi)

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Union[int, Fraction, "IntervalScalar"]) -> bool:
        if isinstance(value, IntervalScalar):
            return self.lo <= value.lo and value.hi <= self.hi
        value = Fraction(value)
        return self.lo <= value <= self.hi

    def is_point(self) -> bool:
        return mpf_cmp(self._lo, self._hi) == 0

    def __repr__(self) -> str:
        return "IntervalScalar[%s, %s]" % (
            to_str(self._lo, 24),
            to_str(self._hi, 24),
        )


def _iv(lo: tuple, hi: tuple) -> IntervalScalar:
    return IntervalScalar(lo, hi)


def _as_mpi(a: IntervalScalar) -> tuple:
    return (a._lo, a._hi)


def _from_mpi(t: tuple) -> IntervalScalar:
    return IntervalScalar(t[0], t[1])


IntervalLike = Union[IntervalScalar, int, Fraction]


def iv_from_int(n: int) -> IntervalScalar:
    """Exact degenerate enclosure of a Python int (no rounding)."""
    t = from_int(n)
    return _iv(t, t)


def iv_from_int_rounded(n: int, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """Enclosure of an int rounded outward to ``prec`` mantissa bits.

    Use for huge integers whose exact mantissa would slow later operations.
    """
    return _iv(from_int(n, prec, _ROUND_DOWN), from_int(n, prec, _ROUND_UP))


def iv_from_fraction(x: Union[int, Fraction], prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """Enclosure of an exact rational, outward-rounded to ``prec`` bits."""
    if isinstance(x, int):
        return iv_from_int(x)
    x = Fraction(x)
    return _iv(
        from_rational(x.numerator, x.denominator, prec, _ROUND_DOWN),
        from_rational(x.numerator, x.denominator, prec, _ROUND_UP),
    )


def iv_from_decimal(text: Union[str, Decimal], prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """Enclosure of a decimal literal, outward-rounded to ``prec`` bits."""
    s = str(text)
    return _iv(from_str(s, prec, _ROUND_DOWN), from_str(s, prec, _ROUND_UP))


def iv_make(lo: Union[int, Fraction], hi: Union[int, Fraction],
            prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """Enclosure [lo, hi] from exact rational endpoints (outward-rounded)."""
    lo = Fraction(lo)
    hi = Fraction(hi)
    if lo > hi:
        raise DomainError("interval endpoints out of order")
    return _iv(
        from_rational(lo.numerator, lo.denominator, prec, _ROUND_DOWN),
        from_rational(hi.numerator, hi.denominator, prec, _ROUND_UP),
    )


def _coerce(x: IntervalLike, prec: int) -> IntervalScalar:
    if isinstance(x, IntervalScalar):
        return x
    if isinstance(x, int):
        return iv_from_int(x)
    if isinstance(x, Fraction):
        return iv_from_fraction(x, prec)
    raise TypeError(f"cannot treat {type(x).__name__} as an interval")


def iv_add(a: IntervalLike, b: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    b = _coerce(b, prec)
    return _from_mpi(_mpi.mpi_add(_as_mpi(a), _as_mpi(b), prec))


def iv_sub(a: IntervalLike, b: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    b = _coerce(b, prec)
    return _from_mpi(_mpi.mpi_sub(_as_mpi(a), _as_mpi(b), prec))


def iv_mul(a: IntervalLike, b: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    b = _coerce(b, prec)
    return _from_mpi(_mpi.mpi_mul(_as_mpi(a), _as_mpi(b), prec))


def iv_div(a: IntervalLike, b: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    b = _coerce(b, prec)
    if mpf_cmp(b._lo, fzero) <= 0 <= mpf_cmp(b._hi, fzero):
        raise DomainError("division by an interval containing zero")
    return _from_mpi(_mpi.mpi_div(_as_mpi(a), _as_mpi(b), prec))


def iv_neg(a: IntervalScalar) -> IntervalScalar:
    return _iv(mpf_neg(a._hi), mpf_neg(a._lo))


def iv_abs(a: IntervalScalar, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    return _from_mpi(_mpi.mpi_abs(_as_mpi(a), prec))


def iv_log(a: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    if mpf_cmp(a._lo, fzero) <= 0:
        raise DomainError("log of an interval not certainly positive")
    return _from_mpi(_mpi.mpi_log(_as_mpi(a), prec))


def iv_exp(a: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    return _from_mpi(_mpi.mpi_exp(_as_mpi(a), prec))


def iv_sqrt(a: IntervalLike, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    a = _coerce(a, prec)
    if mpf_cmp(a._lo, fzero) < 0:
        raise DomainError("sqrt of an interval not certainly nonnegative")
    return _from_mpi(_mpi.mpi_sqrt(_as_mpi(a), prec))


def iv_pow(a: IntervalLike, k: Union[int, Fraction, IntervalScalar],
           prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """a**k.  Integer k uses exact repeated squaring of the endpoints;
    fractional or interval k requires a certainly positive base."""
    a = _coerce(a, prec)
    if isinstance(k, int):
        if k < 0 and mpf_cmp(a._lo, fzero) <= 0 <= mpf_cmp(a._hi, fzero):
            raise DomainError("negative power of an interval containing zero")
        return _from_mpi(_mpi.mpi_pow_int(_as_mpi(a), k, prec))
    if mpf_cmp(a._lo, fzero) <= 0:
        raise DomainError("fractional power of a base not certainly positive")
    if isinstance(k, Fraction):
        k = iv_from_fraction(k, prec)
    return _from_mpi(_mpi.mpi_pow(_as_mpi(a), _as_mpi(k), prec))


def iv_round(a: IntervalScalar, prec: int) -> IntervalScalar:
    """Outward re-rounding of both endpoints to ``prec`` mantissa bits."""
    return _from_mpi(_mpi.mpi_pos(_as_mpi(a), prec))


def iv_hull(a: IntervalScalar, b: IntervalScalar) -> IntervalScalar:
    lo = a._lo if mpf_cmp(a._lo, b._lo) <= 0 else b._lo
    hi = a._hi if mpf_cmp(a._hi, b._hi) >= 0 else b._hi
    return _iv(lo, hi)


def iv_compare(a: IntervalLike, b: IntervalLike,
               prec: int = DEFAULT_PRECISION_BITS) -> Comparison:
    """Certified order of the exact values enclosed by a and b.

    CERTAINLY_LESS / CERTAINLY_GREATER require strictly disjoint enclosures;
    anything else (including shared endpoints) is OVERLAPPING.
    """
    a = _coerce(a, prec)
    b = _coerce(b, prec)
    if mpf_cmp(a._hi, b._lo) < 0:
        return Comparison.CERTAINLY_LESS
    if mpf_cmp(a._lo, b._hi) > 0:
        return Comparison.CERTAINLY_GREATER
    return Comparison.OVERLAPPING


def iv_floor(a: IntervalScalar) -> Optional[int]:
    """Common floor of all values in the enclosure, or None if it straddles
    an integer boundary (the indeterminate case)."""
    import math

    lo_floor = math.floor(a.lo)
    hi_floor = math.floor(a.hi)
    if lo_floor == hi_floor:
        return lo_floor
    return None


def _mpf_to_decimal_str(t: tuple) -> str:
    """Exact decimal expansion of a finite dyadic mpf value."""
    sign, man, exp, _bc = t
    man = int(man)
    if man == 0:
        return "0"
    if sign:
        man = -man
    exp = int(exp)
    if exp >= 0:
        return str(man << exp)
    k = -exp
    if k > _MAX_SERIAL_FRACTION_BITS:
        raise DomainError(
            "endpoint too fine for exact decimal serialization; "
            "iv_round to working precision first"
        )
    digits = man * 5**k
    neg = digits < 0
    s = str(abs(digits)).rjust(k + 1, "0")
    whole, frac = s[:-k], s[-k:]
    frac = frac.rstrip("0") or "0"
    return ("-" if neg else "") + whole + "." + frac


def _decimal_str_to_mpf(s: str, rnd: str, prec: int) -> tuple:
    x = Fraction(s)
    den = x.denominator
    # Dyadic decimals (the ones we emit) convert exactly.
    if den & (den - 1) == 0:
        return from_man_exp(x.numerator, -(den.bit_length() - 1))
    return from_rational(x.numerator, x.denominator, prec, rnd)


def interval_to_json(a: IntervalScalar) -> dict:
    """{"lo": str, "hi": str} with exact decimal endpoint expansions."""
    return {"lo": _mpf_to_decimal_str(a._lo), "hi": _mpf_to_decimal_str(a._hi)}


def interval_from_json(obj: dict, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """Inverse of interval_to_json.  Endpoints we emitted parse exactly;
    foreign non-dyadic decimals are rounded outward."""
    try:
        lo_s, hi_s = obj["lo"], obj["hi"]
    except (TypeError, KeyError) as e:
        raise DomainError(f"interval object missing endpoint: {e}") from e
    return _iv(
        _decimal_str_to_mpf(lo_s, _ROUND_DOWN, prec),
        _decimal_str_to_mpf(hi_s, _ROUND_UP, prec),
    )


@dataclass(frozen=True)
class Constants:
    """Frozen numeric constants at one working precision.

    The transcendental members are certified enclosures; the decimal members
    are exact literals and must be outward-rounded (iv_from_decimal) before
    entering any interval comparison.
    """

    precision_bits: int
    gamma: IntervalScalar
    exp_gamma: IntervalScalar
    # n must exceed 10^(10^13.099); checked against log10(log10 n).
    size_floor_log10_log10: Decimal = Decimal("13.099")
    # log n <= p_r * (1 + c / log p_r) for the least counterexample.
    log_window_slack: Decimal = Decimal("0.005589")
    # Alternative one-sided form: p_r > (log n)(1 - c' / log log n).
    log_window_slack_alt: Decimal = Decimal("0.005587")
    # log n <= c * p_r once the size floor is known.
    log_over_pr_bound: Decimal = Decimal("1.000235")
    # p_s must lie in (lower * sqrt(p_r), upper * sqrt(p_r)).
    s_window_upper: Decimal = Decimal("1.414342")
    s_window_lower: Decimal = Decimal("0.999999")
    # The least counterexample has more than this many prime factors.
    min_prime_count: int = 969672728


@functools.lru_cache(maxsize=None)
def constants(prec: int = DEFAULT_PRECISION_BITS) -> Constants:
    g = _iv(mpf_euler(prec, _ROUND_DOWN), mpf_euler(prec, _ROUND_UP))
    return Constants(precision_bits=prec, gamma=g, exp_gamma=iv_exp(g, prec))
