"""Necessary-condition audit for least-counterexample candidates.

Every check returns a certified verdict: Pass and Fail are backed by
disjoint enclosures or exact integer comparisons, Unknown means the
comparison stayed indeterminate at the working precision, NotApplicable
means the condition's preconditions are unmet.  A candidate is excluded
the moment any single check certifies Fail.

Per-index window checks run in O(#runs): inside a run the exponent is
constant while the bounds U and L are monotone in the prime, so only run
endpoints need testing and violations sit at a known end of the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import (
    DomainError,
    InvariantError,
    PrecisionError,
    TableTooSmallError,
)
from .factored import (
    CandidateFactorization,
    g_ratio_divide,
    g_ratio_swap,
    is_sum_of_two_squares,
    log_n,
    n_over_phi,
    rho,
)
from .intervals import (
    DEFAULT_PRECISION_BITS,
    Comparison,
    IntervalScalar,
    constants,
    interval_to_json,
    iv_add,
    iv_compare,
    iv_div,
    iv_exp,
    iv_from_decimal,
    iv_from_fraction,
    iv_from_int,
    iv_log,
    iv_mul,
    iv_neg,
    iv_pow,
    iv_round,
    iv_sqrt,
    iv_sub,
)
from .primes import PrimeTable

CHECK_IDS = (
    "size_floor_C",
    "log_window_1",
    "log_window_2",
    "upper_window_3",
    "lower_window_4",
    "shape_B1",
    "shape_B2",
    "shape_B3",
    "shape_B4",
    "shape_B5",
    "density_B6",
    "vojak_D1",
    "vojak_D2",
    "vojak_D3",
    "vojak_D4",
    "exponents_E",
    "two_squares_F",
    "s_window_56",
)

# Strict lower bounds on the first five exponents of the least counterexample.
EXPONENT_FLOORS = ((1, 19), (2, 12), (3, 7), (4, 6), (5, 5))

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"
NOT_APPLICABLE = "not_applicable"

_MAX_ESCALATIONS = 4
_B2_PAIR_LIMIT = 512
_EXACT_POW_BITS = 1 << 14


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: dict
    precision_used: int

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": self.witness,
            "precision_used": self.precision_used,
        }


class _Indeterminate(Exception):
    """Internal: a certified decision needs more precision."""


def _wit_iv(v: IntervalScalar, prec: int) -> dict:
    return interval_to_json(iv_round(v, prec))


def int_log_floor(x: int, p: int) -> int:
    """Largest m >= 0 with p^m <= x, exact."""
    if x < 1 or p < 2:
        raise DomainError(f"int_log_floor needs x >= 1 and p >= 2, got {x}, {p}")
    m = 0
    v = p
    while v <= x:
        v *= p
        m += 1
    return m


def compute_l(p_r: int, p: int) -> int:
    """L(p) = floor(log p_r / log p), exact integer arithmetic."""
    if p < 2 or p_r < 2:
        raise DomainError(f"compute_l needs primes >= 2, got p_r={p_r}, p={p}")
    return int_log_floor(p_r, p)


class _UpperBounds:
    """U(p) = floor(log(k log n) / log p) where k is the bracket index with
    x_{k+1} < p <= x_k and x_k = (k log n)^(1/k).

    The ladder x_k is strictly decreasing for log n > 2, so the bracket is
    found by walking k upward; the floor is then certified against exact
    powers of p, which doubles as the consistency cross-check (the bracket
    index and the floor must coincide)."""

    def __init__(self, lg: IntervalScalar, prec: int):
        if lg.lo <= 2:
            raise DomainError("upper window bounds need log n certainly > 2")
        self.lg = lg
        self.prec = prec
        self._x: dict[int, IntervalScalar] = {}
        self._kl: dict[int, IntervalScalar] = {}

    def _x_at(self, k: int) -> IntervalScalar:
        if k not in self._x:
            kl = iv_mul(iv_from_int(k), self.lg, self.prec)
            self._kl[k] = kl
            self._x[k] = iv_pow(kl, Fraction(1, k), self.prec) if k > 1 else kl
        return self._x[k]

    def bracket(self, p: int) -> int:
        pv = iv_from_int(p)
        k = 1
        if iv_compare(pv, self._x_at(1)) is not Comparison.CERTAINLY_LESS:
            raise DomainError(f"bracket undefined: {p} not certainly below log n")
        while True:
            k += 1
            if k > 200:
                raise InvariantError(f"bracket walk for {p} did not terminate")
            cmp = iv_compare(pv, self._x_at(k))
            if cmp is Comparison.CERTAINLY_GREATER:
                return k - 1
            if cmp is Comparison.OVERLAPPING:
                raise _Indeterminate(f"x_{k} straddles {p}")

    def u(self, p: int) -> int:
        k = self.bracket(p)
        kl = self._kl[k]
        pk = Fraction(p) ** k
        if pk > kl.hi:
            raise InvariantError(
                f"bracket {k} for {p} disagrees with the floor (too high)"
            )
        if pk * p <= kl.lo:
            raise InvariantError(
                f"bracket {k} for {p} disagrees with the floor (too low)"
            )
        if pk <= kl.lo and kl.hi < pk * p:
            return k
        raise _Indeterminate(f"floor at {p} straddles a power boundary")


def compute_u_from_log(lg: IntervalScalar, p: int,
                       prec: int = DEFAULT_PRECISION_BITS) -> int:
    """U(p) for a given enclosure of log n (single precision, no retry)."""
    try:
        return _UpperBounds(lg, prec).u(p)
    except _Indeterminate as e:
        raise PrecisionError(str(e), suggested_precision_bits=prec * 2) from e


def compute_u(c: CandidateFactorization, i: int, t: PrimeTable,
              prec: int = DEFAULT_PRECISION_BITS) -> int:
    """U(p_i) for the candidate, retrying at doubled precision when a
    bracket or floor stays indeterminate."""
    p = t.nth_prime(i)
    work = prec
    for _ in range(_MAX_ESCALATIONS + 1):
        lg = log_n(c, t, work)
        cmp = iv_compare(iv_from_int(p), lg)
        if cmp is Comparison.CERTAINLY_GREATER:
            raise DomainError(f"U undefined at p_{i}={p}: log n is below it")
        if cmp is Comparison.OVERLAPPING:
            work *= 2
            continue
        try:
            return _UpperBounds(lg, work).u(p)
        except _Indeterminate:
            work *= 2
    raise PrecisionError(
        f"U(p_{i}) indeterminate up to {work // 2} bits",
        suggested_precision_bits=work,
    )


def compute_m(k: int, t: PrimeTable, prec: int = DEFAULT_PRECISION_BITS) -> IntervalScalar:
    """M(k) = exp(e^(-gamma) f(N_k)) - log N_k for the k-th primorial N_k,
    with f(N_k) = prod_{i<=k} p_i/(p_i - 1)."""
    if k < 1:
        raise DomainError(f"compute_m needs k >= 1, got {k}")
    primorial = CandidateFactorization.from_runs([(1, k)])
    f = n_over_phi(primorial, t, prec)
    lg = log_n(primorial, t, prec)
    inner = iv_mul(iv_exp(iv_neg(constants(prec).gamma), prec), f, prec)
    return iv_sub(iv_exp(inner, prec), lg, prec)


class _AuditContext:
    """Shared lazily-computed quantities for one audit run."""

    def __init__(self, c: CandidateFactorization, t: PrimeTable, prec: int):
        self.c = c
        self.t = t
        self.prec = prec
        self.r = c.r
        self.covered = self.r <= len(t)
        self.p_r = t.nth_prime(self.r) if self.covered else None
        self._log_n: Optional[IntervalScalar] = None
        self._rho: Optional[IntervalScalar] = None
        self._nphi: Optional[IntervalScalar] = None
        self._ub: Optional[_UpperBounds] = None

    @property
    def log_n(self) -> IntervalScalar:
        if self._log_n is None:
            self._log_n = log_n(self.c, self.t, self.prec)
        return self._log_n

    @property
    def rho(self) -> IntervalScalar:
        if self._rho is None:
            self._rho = rho(self.c, self.t, self.prec)
        return self._rho

    @property
    def nphi(self) -> IntervalScalar:
        if self._nphi is None:
            self._nphi = n_over_phi(self.c, self.t, self.prec)
        return self._nphi

    def upper_bounds(self) -> _UpperBounds:
        if self._ub is None:
            self._ub = _UpperBounds(self.log_n, self.prec)
        return self._ub

    def uncovered(self) -> Verdict:
        return Verdict(
            UNKNOWN,
            {
                "reason": "prime table does not cover the candidate",
                "needed_index": self.r,
                "table_primes": len(self.t),
            },
            self.prec,
        )


def _check_size_floor(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    ln10 = iv_log(iv_from_int(10), prec)
    log10_n = iv_div(ctx.log_n, ln10, prec)
    bound = iv_from_decimal(constants(prec).size_floor_log10_log10, prec)
    if log10_n.lo <= 1:
        # n <= 10^10 is certainly below any double-exponential floor
        return Verdict(
            FAIL,
            {"log_n": _wit_iv(ctx.log_n, prec),
             "bound_log10_log10": str(constants(prec).size_floor_log10_log10)},
            prec,
        )
    val = iv_div(iv_log(log10_n, prec), ln10, prec)
    cmp = iv_compare(val, bound)
    witness = {
        "log10_log10_n": _wit_iv(val, prec),
        "bound_log10_log10": str(constants(prec).size_floor_log10_log10),
    }
    if cmp is Comparison.CERTAINLY_GREATER:
        return Verdict(PASS, witness, prec)
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def _check_log_window_1(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    cmp = iv_compare(ctx.log_n, iv_from_int(ctx.p_r))
    witness = {"log_n": _wit_iv(ctx.log_n, prec), "p_r": ctx.p_r}
    if cmp is Comparison.CERTAINLY_GREATER:
        return Verdict(PASS, witness, prec)
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def _log_window_upper_bound(p_r: int, prec: int) -> IntervalScalar:
    slack = iv_from_decimal(constants(prec).log_window_slack, prec)
    lp = iv_log(iv_from_int(p_r), prec)
    return iv_mul(
        iv_from_int(p_r),
        iv_add(iv_from_int(1), iv_div(slack, lp, prec), prec),
        prec,
    )


def _check_log_window_2(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    bound = _log_window_upper_bound(ctx.p_r, prec)
    cmp = iv_compare(ctx.log_n, bound)
    witness = {
        "log_n": _wit_iv(ctx.log_n, prec),
        "upper_bound": _wit_iv(bound, prec),
        "p_r": ctx.p_r,
    }
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(PASS, witness, prec)
    if cmp is Comparison.CERTAINLY_GREATER:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def check_log_window_alt(c: CandidateFactorization, t: PrimeTable,
                         prec: int = DEFAULT_PRECISION_BITS) -> Verdict:
    """Alternative one-sided window: p_r > (log n)(1 - c'/log log n).

    Informational companion to log_window_2; not part of the audit ledger.
    """
    ctx = _AuditContext(c, t, prec)
    if not ctx.covered:
        return ctx.uncovered()
    lg = ctx.log_n
    if lg.lo <= 1:
        return Verdict(
            NOT_APPLICABLE,
            {"reason": "log log n undefined", "log_n": _wit_iv(lg, prec)},
            prec,
        )
    slack = iv_from_decimal(constants(prec).log_window_slack_alt, prec)
    factor = iv_sub(iv_from_int(1), iv_div(slack, iv_log(lg, prec), prec), prec)
    bound = iv_mul(lg, factor, prec)
    cmp = iv_compare(iv_from_int(ctx.p_r), bound)
    witness = {"p_r": ctx.p_r, "lower_bound": _wit_iv(bound, prec)}
    if cmp is Comparison.CERTAINLY_GREATER:
        return Verdict(PASS, witness, prec)
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def _check_upper_window(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    cmp = iv_compare(ctx.log_n, iv_from_int(ctx.p_r))
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(
            NOT_APPLICABLE,
            {"reason": "log n is below p_r; U is undefined at the top prime",
             "log_n": _wit_iv(ctx.log_n, prec), "p_r": ctx.p_r},
            prec,
        )
    if cmp is Comparison.OVERLAPPING:
        return Verdict(
            UNKNOWN,
            {"reason": "log n vs p_r indeterminate",
             "log_n": _wit_iv(ctx.log_n, prec), "p_r": ctx.p_r},
            prec,
        )
    try:
        ub = ctx.upper_bounds()
        runs_checked = 0
        for start, end, e in ctx.c.run_bounds():
            if e == 0:
                continue
            u_end = ub.u(ctx.t.nth_prime(end))
            runs_checked += 1
            if e <= u_end:
                continue
            # violations form a suffix of the run; locate the first one
            lo, hi = start, end
            while lo < hi:
                mid = (lo + hi) // 2
                if e > ub.u(ctx.t.nth_prime(mid)):
                    hi = mid
                else:
                    lo = mid + 1
            p_v = ctx.t.nth_prime(lo)
            return Verdict(
                FAIL,
                {"index": lo, "prime": p_v, "exponent": e,
                 "upper_bound": ub.u(p_v)},
                prec,
            )
        return Verdict(PASS, {"runs_checked": runs_checked}, prec)
    except _Indeterminate as e:
        return Verdict(
            UNKNOWN,
            {"reason": str(e), "suggested_precision_bits": prec * 2},
            prec,
        )


def _lower_violation(ctx: _AuditContext, first_index: int) -> Optional[tuple[int, int, int]]:
    """First index >= first_index with a_i < L(p_i), else None.  Exact."""
    for start, end, e in ctx.c.run_bounds():
        if end < first_index:
            continue
        probe = max(start, first_index)
        l_probe = compute_l(ctx.p_r, ctx.t.nth_prime(probe))
        if e >= l_probe:
            continue  # L only shrinks along the run
        return probe, ctx.t.nth_prime(probe), l_probe
    return None


def _check_lower_window(ctx: _AuditContext, first_index: int) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    if ctx.r < 2:
        return Verdict(
            NOT_APPLICABLE,
            {"reason": "needs at least two prime factors", "r": ctx.r},
            prec,
        )
    hit = _lower_violation(ctx, first_index)
    if hit is None:
        return Verdict(PASS, {"first_index": first_index, "p_r": ctx.p_r}, prec)
    i, p, l_val = hit
    return Verdict(
        FAIL,
        {"index": i, "prime": p, "exponent": ctx.c.a(i), "lower_bound": l_val},
        prec,
    )


def _check_shape_b1(ctx: _AuditContext) -> Verdict:
    c = ctx.c
    if c.canonical:
        return Verdict(PASS, {"canonical": True}, ctx.prec)
    prev_end, prev_e = 0, None
    for start, end, e in c.run_bounds():
        if prev_e is not None and e > prev_e:
            return Verdict(
                FAIL,
                {"index_i": prev_end, "index_j": start,
                 "exponent_i": prev_e, "exponent_j": e},
                ctx.prec,
            )
        prev_end, prev_e = end, e
    return Verdict(PASS, {"canonical": False, "non_increasing": True}, ctx.prec)


def _b2_pred(ctx: _AuditContext, i: int, j: int) -> int:
    """floor(a_i log p_i / log p_j) = largest m with p_j^m <= p_i^(a_i)."""
    p_i = ctx.t.nth_prime(i)
    p_j = ctx.t.nth_prime(j)
    a_i = ctx.c.a(i)
    if a_i * p_i.bit_length() + 1 <= _EXACT_POW_BITS:
        return int_log_floor(p_i**a_i, p_j)
    # interval route for astronomically large exponents
    prec = ctx.prec
    for _ in range(_MAX_ESCALATIONS + 1):
        x = iv_div(
            iv_mul(iv_from_int(a_i), iv_log(iv_from_int(p_i), prec), prec),
            iv_log(iv_from_int(p_j), prec),
            prec,
        )
        m = math.floor(x.lo)
        if math.floor(x.hi) == m:
            return m
        prec *= 2
    raise _Indeterminate(f"floor(a_{i} log p_{i} / log p_{j}) straddles an integer")


def _check_shape_b2(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    c, prec = ctx.c, ctx.prec

    def bad(i: int, j: int) -> Optional[dict]:
        pred = _b2_pred(ctx, i, j)
        if abs(c.a(j) - pred) > 1:
            return {
                "index_i": i, "index_j": j, "exponent_j": c.a(j),
                "predicted": pred,
            }
        return None

    bounds = list(c.run_bounds())
    try:
        if c.canonical:
            # the floor grows with p_i and shrinks with p_j, so over a pair
            # of runs it is extremal at two corners; within one run only the
            # low side can violate
            pairs = 0
            for bi, (s_i, t_i, _e_i) in enumerate(bounds):
                for s_j, t_j, _e_j in bounds[bi:]:
                    if s_i == s_j:
                        corners = [(s_i, t_i)] if t_i > s_i else []
                    else:
                        corners = [(t_i, s_j), (s_i, t_j)]
                    pairs += len(corners)
                    for i, j in corners:
                        w = bad(i, j)
                        if w:
                            return Verdict(FAIL, w, prec)
            return Verdict(PASS, {"corner_pairs_checked": pairs}, prec)
        if c.r > _B2_PAIR_LIMIT:
            return Verdict(
                UNKNOWN,
                {"reason": "non-canonical candidate too wide for the "
                           "all-pairs cross-check", "r": c.r},
                prec,
            )
        for i in range(1, c.r + 1):
            if c.a(i) == 0:
                continue
            for j in range(i + 1, c.r + 1):
                if c.a(j) == 0:
                    continue
                w = bad(i, j)
                if w:
                    return Verdict(FAIL, w, prec)
        return Verdict(PASS, {"pairs": c.r * (c.r - 1) // 2}, prec)
    except _Indeterminate as e:
        return Verdict(UNKNOWN, {"reason": str(e)}, prec)


def _check_shape_b3(ctx: _AuditContext) -> Verdict:
    c = ctx.c
    a_r = c.runs[-1].exponent
    if a_r == 1:
        return Verdict(PASS, {"last_exponent": 1}, ctx.prec)
    # the two known exceptions to a_r = 1: n = 4 and n = 36
    if c.runs in (((2, 1),), ((2, 2),)):
        return Verdict(PASS, {"last_exponent": a_r, "exception": True}, ctx.prec)
    return Verdict(FAIL, {"last_exponent": a_r, "index": c.r}, ctx.prec)


def _check_shape_b4(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    c, t, prec = ctx.c, ctx.t, ctx.prec
    if c.r < 2:
        return Verdict(PASS, {"reason": "no index above 1"}, prec)
    a1 = c.a(1)
    try:
        for start, end, e in c.run_bounds():
            if e == 0:
                continue
            check_at = end if end >= 2 else None
            if check_at is None:
                continue
            p = t.nth_prime(check_at)
            # p^e < 2^(a1+2), worst within the run at its top prime
            if not _power_below(ctx, p, e, 2, a1 + 2):
                idx = _first_b4_violation(ctx, max(start, 2), end, e, a1)
                return Verdict(
                    FAIL,
                    {"index": idx, "prime": t.nth_prime(idx),
                     "exponent": e, "bound_exponent": a1 + 2},
                    prec,
                )
        return Verdict(PASS, {"bound_exponent": a1 + 2}, prec)
    except _Indeterminate as e:
        return Verdict(UNKNOWN, {"reason": str(e)}, prec)


def _power_below(ctx: _AuditContext, p: int, e: int, q: int, f: int) -> bool:
    """Certified p^e < q^f; raises _Indeterminate when undecidable."""
    if e * p.bit_length() + 1 <= _EXACT_POW_BITS and f * q.bit_length() + 1 <= _EXACT_POW_BITS:
        return p**e < q**f
    prec = ctx.prec
    for _ in range(_MAX_ESCALATIONS + 1):
        lhs = iv_mul(iv_from_int(e), iv_log(iv_from_int(p), prec), prec)
        rhs = iv_mul(iv_from_int(f), iv_log(iv_from_int(q), prec), prec)
        cmp = iv_compare(lhs, rhs)
        if cmp is Comparison.CERTAINLY_LESS:
            return True
        if cmp is Comparison.CERTAINLY_GREATER:
            return False
        prec *= 2
    raise _Indeterminate(f"{p}^{e} vs {q}^{f} indeterminate")


def _first_b4_violation(ctx: _AuditContext, start: int, end: int, e: int, a1: int) -> int:
    lo, hi = start, end
    while lo < hi:
        mid = (lo + hi) // 2
        if not _power_below(ctx, ctx.t.nth_prime(mid), e, 2, a1 + 2):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _check_density_b6(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    lp = iv_log(iv_from_int(ctx.p_r), prec)
    inv = iv_div(iv_from_int(1), lp, prec)
    eps = iv_mul(
        inv,
        iv_add(iv_from_int(1),
               iv_div(iv_from_fraction(Fraction(3, 2), prec), lp, prec), prec),
        prec,
    )
    bound = iv_mul(iv_sub(iv_from_int(1), eps, prec), ctx.nphi, prec)
    cmp = iv_compare(ctx.rho, bound)
    witness = {
        "rho": _wit_iv(ctx.rho, prec),
        "bound": _wit_iv(bound, prec),
        "epsilon_p_r": _wit_iv(eps, prec),
    }
    if cmp is Comparison.CERTAINLY_GREATER:
        return Verdict(PASS, witness, prec)
    if cmp is Comparison.CERTAINLY_LESS:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def _check_vojak_d1(ctx: _AuditContext) -> Verdict:
    floor = constants(ctx.prec).min_prime_count
    omega = ctx.c.omega
    status = PASS if omega > floor else FAIL
    return Verdict(status, {"prime_factors": omega, "floor": floor}, ctx.prec)


def _check_vojak_d2(ctx: _AuditContext) -> Verdict:
    c = ctx.c
    r = c.r
    count = sum(run.count for run in c.runs if run.exponent != 1)
    status = PASS if 14 * count < r else FAIL
    return Verdict(
        status, {"count_exponent_not_one": count, "r": r}, ctx.prec
    )


def _check_vojak_d3(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    lp = iv_log(iv_from_int(ctx.p_r), prec)
    lower = iv_exp(iv_neg(iv_div(iv_from_int(1), lp, prec)), prec)
    mid = iv_div(iv_from_int(ctx.p_r), ctx.log_n, prec)
    c1 = iv_compare(lower, mid)
    c2 = iv_compare(mid, iv_from_int(1))
    witness = {
        "ratio": _wit_iv(mid, prec),
        "lower": _wit_iv(lower, prec),
    }
    if c1 is Comparison.CERTAINLY_LESS and c2 is Comparison.CERTAINLY_LESS:
        return Verdict(PASS, witness, prec)
    if c1 is Comparison.CERTAINLY_GREATER or c2 is Comparison.CERTAINLY_GREATER:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


def _check_vojak_d4(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    c, t, prec = ctx.c, ctx.t, ctx.prec
    if c.r < 2:
        return Verdict(PASS, {"reason": "no index above 1"}, prec)
    a1 = c.a(1)
    m_r = compute_m(c.r, t, prec)
    witness_m = _wit_iv(m_r, prec)
    try:
        for start, end, e in c.run_bounds():
            if e == 0 or end < 2:
                continue
            p = t.nth_prime(end)
            ok1 = _power_below(ctx, p, e, 2, a1 + 2)
            # p^e < p e^M(r)  <=>  (e-1) log p < M(r)
            lhs = iv_mul(iv_from_int(e - 1), iv_log(iv_from_int(p), prec), prec)
            cmp2 = iv_compare(lhs, m_r)
            if cmp2 is Comparison.OVERLAPPING:
                raise _Indeterminate(f"(a-1) log p vs M(r) at index {end}")
            ok2 = cmp2 is Comparison.CERTAINLY_LESS
            if not (ok1 and ok2):
                return Verdict(
                    FAIL,
                    {"index": end, "prime": p, "exponent": e,
                     "below_power_bound": ok1, "below_m_bound": ok2,
                     "m_r": witness_m},
                    prec,
                )
        return Verdict(PASS, {"m_r": witness_m}, prec)
    except _Indeterminate as e:
        return Verdict(UNKNOWN, {"reason": str(e), "m_r": witness_m}, prec)


def _check_exponents_e(ctx: _AuditContext) -> Verdict:
    c = ctx.c
    for i, floor in EXPONENT_FLOORS:
        if c.a(i) <= floor:
            return Verdict(
                FAIL,
                {"index": i, "exponent": c.a(i), "strict_floor": floor},
                ctx.prec,
            )
    return Verdict(PASS, {"floors": [f for _, f in EXPONENT_FLOORS]}, ctx.prec)


def _check_two_squares(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    representable = is_sum_of_two_squares(ctx.c, ctx.t)
    # a least counterexample cannot be a sum of two squares
    status = FAIL if representable else PASS
    return Verdict(status, {"sum_of_two_squares": representable}, ctx.prec)


def _check_s_window(ctx: _AuditContext) -> Verdict:
    if not ctx.covered:
        return ctx.uncovered()
    prec = ctx.prec
    s = ctx.c.s_index()
    if s is None or s >= ctx.r:
        return Verdict(
            NOT_APPLICABLE,
            {"reason": "no index s < r with exponent >= 2",
             "s": s, "r": ctx.r},
            prec,
        )
    p_s = ctx.t.nth_prime(s)
    root = iv_sqrt(iv_from_int(ctx.p_r), prec)
    cst = constants(prec)
    lower = iv_mul(iv_from_decimal(cst.s_window_lower, prec), root, prec)
    upper = iv_mul(iv_from_decimal(cst.s_window_upper, prec), root, prec)
    c1 = iv_compare(iv_from_int(p_s), lower)
    c2 = iv_compare(iv_from_int(p_s), upper)
    witness = {
        "s": s, "p_s": p_s, "p_r": ctx.p_r,
        "lower": _wit_iv(lower, prec), "upper": _wit_iv(upper, prec),
    }
    if c1 is Comparison.CERTAINLY_GREATER and c2 is Comparison.CERTAINLY_LESS:
        return Verdict(PASS, witness, prec)
    if c1 is Comparison.CERTAINLY_LESS or c2 is Comparison.CERTAINLY_GREATER:
        return Verdict(FAIL, witness, prec)
    return Verdict(UNKNOWN, witness, prec)


_CHECK_FUNCS: dict[str, Callable[[_AuditContext], Verdict]] = {
    "size_floor_C": _check_size_floor,
    "log_window_1": _check_log_window_1,
    "log_window_2": _check_log_window_2,
    "upper_window_3": _check_upper_window,
    "lower_window_4": lambda ctx: _check_lower_window(ctx, 1),
    "shape_B1": _check_shape_b1,
    "shape_B2": _check_shape_b2,
    "shape_B3": _check_shape_b3,
    "shape_B4": _check_shape_b4,
    "shape_B5": lambda ctx: _check_lower_window(ctx, 2),
    "density_B6": _check_density_b6,
    "vojak_D1": _check_vojak_d1,
    "vojak_D2": _check_vojak_d2,
    "vojak_D3": _check_vojak_d3,
    "vojak_D4": _check_vojak_d4,
    "exponents_E": _check_exponents_e,
    "two_squares_F": _check_two_squares,
    "s_window_56": _check_s_window,
}

SURVIVES = "survives_all_checks"
EXCLUDED = "excluded"
INCONCLUSIVE = "inconclusive"


@dataclass
class AuditReport:
    candidate: CandidateFactorization
    precision_bits: int
    checks: list[tuple[str, Verdict]]
    extra_checks: list[tuple[str, Verdict]]

    @property
    def excluded_by(self) -> list[str]:
        return [cid for cid, v in self.checks if v.status == FAIL]

    @property
    def unknown_checks(self) -> list[str]:
        return [cid for cid, v in self.checks if v.status == UNKNOWN]

    @property
    def result(self) -> str:
        if self.excluded_by:
            return EXCLUDED
        if self.unknown_checks:
            return INCONCLUSIVE
        return SURVIVES

    def verdict_for(self, check_id: str) -> Verdict:
        for cid, v in self.checks:
            if cid == check_id:
                return v
        raise KeyError(check_id)

    def to_json(self) -> dict:
        out = {
            "candidate": self.candidate.to_json(),
            "precision_bits": self.precision_bits,
            "checks": [
                {"id": cid, **v.to_json()} for cid, v in self.checks
            ],
            "summary": {
                "result": self.result,
                "excluded_by": self.excluded_by,
                "unknown_checks": self.unknown_checks,
            },
        }
        if self.extra_checks:
            out["extra_checks"] = [
                {"id": cid, **v.to_json()} for cid, v in self.extra_checks
            ]
        return out


def run_check(check_id: str, c: CandidateFactorization, t: PrimeTable,
              prec: int = DEFAULT_PRECISION_BITS) -> Verdict:
    """Run a single check by id (mostly useful for tests and exploration)."""
    if check_id not in _CHECK_FUNCS:
        raise DomainError(f"unknown check id {check_id!r}")
    return _CHECK_FUNCS[check_id](_AuditContext(c, t, prec))


def full_audit(c: CandidateFactorization, t: PrimeTable,
               prec: int = DEFAULT_PRECISION_BITS,
               include_alt_log_window: bool = False) -> AuditReport:
    """Every necessary-condition check, in the fixed ledger order."""
    ctx = _AuditContext(c, t, prec)
    checks = [(cid, _CHECK_FUNCS[cid](ctx)) for cid in CHECK_IDS]
    extra = []
    if include_alt_log_window:
        extra.append(("log_window_alt", check_log_window_alt(c, t, prec)))
    return AuditReport(
        candidate=c, precision_bits=prec, checks=checks, extra_checks=extra
    )


IN_WINDOW = "in_window"
STEP_LIMIT = "step_limit"
BLOCKED_EXPONENT = "blocked_exponent"
BLOCKED_LOG_WINDOW = "blocked_log_window"
INDETERMINATE = "indeterminate"


@dataclass
class NormalizationResult:
    candidate: CandidateFactorization
    status: str
    trace: list[dict]

    @property
    def steps(self) -> int:
        return len(self.trace)

    def to_json(self) -> dict:
        return {
            "candidate": self.candidate.to_json(),
            "status": self.status,
            "trace": self.trace,
        }


def _largest_upper_violation(ctx: _AuditContext) -> Optional[int]:
    ub = ctx.upper_bounds()
    for start, end, e in reversed(list(ctx.c.run_bounds())):
        if e == 0:
            continue
        if e > ub.u(ctx.t.nth_prime(end)):
            return end  # violations are a suffix; the end is the largest
    return None


def _largest_lower_violation(ctx: _AuditContext) -> Optional[int]:
    for start, end, e in reversed(list(ctx.c.run_bounds())):
        l_start = compute_l(ctx.p_r, ctx.t.nth_prime(start))
        if e >= l_start:
            continue  # no violation anywhere in this run
        # violations are a prefix; binary-search its last index
        lo, hi = start, end
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if e < compute_l(ctx.p_r, ctx.t.nth_prime(mid)):
                lo = mid
            else:
                hi = mid - 1
        return lo
    return None


def normalize(c: CandidateFactorization, t: PrimeTable,
              prec: int = DEFAULT_PRECISION_BITS,
              step_limit: int = 10000) -> NormalizationResult:
    """Drive a candidate into the exponent window L <= a_i <= U.

    Divide steps (a_s > U(p_s), removing one factor p_s) run first, scanning
    from the largest index; then swap steps (a_s < L(p_s), trading the top
    prime for one more factor of p_s, which needs a_r = 1).  Each step logs
    a certified enclosure of G(n)/G(n') and whether it is certainly < 1.
    """
    if step_limit < 1:
        raise DomainError(f"step limit must be >= 1, got {step_limit}")
    cur = c
    trace: list[dict] = []
    for _ in range(step_limit):
        ctx = _AuditContext(cur, t, prec)
        if not ctx.covered:
            raise TableTooSmallError(
                f"candidate spans {ctx.r} primes, table holds {len(t)}",
                needed=ctx.r,
            )
        state = iv_compare(ctx.log_n, iv_from_int(ctx.p_r))
        upper_ok = state is Comparison.CERTAINLY_GREATER
        if state is Comparison.OVERLAPPING:
            return NormalizationResult(cur, INDETERMINATE, trace)

        s_div: Optional[int] = None
        if upper_ok:
            try:
                s_div = _largest_upper_violation(ctx)
            except _Indeterminate:
                return NormalizationResult(cur, INDETERMINATE, trace)
        if s_div is not None:
            step = _apply_divide(ctx, s_div, prec)
            trace.append(step)
            cur = _rebuild(cur, s_div, -1)
            continue

        s_swap = _largest_lower_violation(ctx)
        if s_swap is not None:
            if cur.a(ctx.r) != 1:
                return NormalizationResult(cur, BLOCKED_EXPONENT, trace)
            step = _apply_swap(ctx, s_swap, prec)
            trace.append(step)
            exps = cur.exponents_list()
            exps[s_swap - 1] += 1
            exps.pop()
            cur = CandidateFactorization.from_exponents(exps)
            continue

        if upper_ok:
            return NormalizationResult(cur, IN_WINDOW, trace)
        return NormalizationResult(cur, BLOCKED_LOG_WINDOW, trace)
    return NormalizationResult(cur, STEP_LIMIT, trace)


def _ratio_entry(ratio: Optional[IntervalScalar], prec: int) -> dict:
    if ratio is None:
        return {"ratio": None, "ratio_certainly_below_one": None}
    below = iv_compare(ratio, iv_from_int(1)) is Comparison.CERTAINLY_LESS
    return {
        "ratio": _wit_iv(ratio, prec),
        "ratio_certainly_below_one": below,
    }


def _apply_divide(ctx: _AuditContext, s: int, prec: int) -> dict:
    try:
        ratio = g_ratio_divide(ctx.c, s, ctx.t, prec)
    except DomainError:
        ratio = None
    return {
        "action": "divide",
        "index": s,
        "prime": ctx.t.nth_prime(s),
        **_ratio_entry(ratio, prec),
    }


def _apply_swap(ctx: _AuditContext, s: int, prec: int) -> dict:
    try:
        ratio = g_ratio_swap(ctx.c, s, ctx.t, prec)
    except DomainError:
        ratio = None
    return {
        "action": "swap",
        "index": s,
        "prime": ctx.t.nth_prime(s),
        "removed_prime": ctx.p_r,
        **_ratio_entry(ratio, prec),
    }


def _rebuild(c: CandidateFactorization, s: int, delta: int) -> CandidateFactorization:
    exps = c.exponents_list()
    exps[s - 1] += delta
    if exps[s - 1] == 0 and s != len(exps):
        raise InvariantError(f"divide at interior index {s} would leave a hole")
    return CandidateFactorization.from_exponents(exps)


def report_to_json_str(report: AuditReport) -> str:
    """Deterministic serialization (stable key order, no whitespace drift)."""
    return json.dumps(report.to_json(), sort_keys=True, indent=2)
