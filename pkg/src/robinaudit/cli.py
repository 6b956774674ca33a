"""Command line front end.

Exit codes: 0 positive result (no violations, survives, in window),
1 negative result (violations found, candidate excluded, no candidate at
this epsilon), 2 inconclusive (unknown verdicts, blocked normalization,
precision exhausted), 64 usage, 65 resource budget, 66 candidate format.
"""

from __future__ import annotations

import argparse
import csv
import decimal
import io
import json
import os
import sys
from fractions import Fraction
from typing import Optional

from . import __version__
from .audit import full_audit, normalize, IN_WINDOW
from .errors import (
    CandidateFormatError,
    DomainError,
    PrecisionError,
    ResourceBudgetError,
)
from .factored import CandidateFactorization, materialize
from .generators import ca_candidate, ca_sweep, superabundant_up_to, verify_range
from .intervals import (
    DEFAULT_PRECISION_BITS,
    MIN_PRECISION_BITS,
    interval_to_json,
    iv_round,
)
from .primes import PrimeTable

_ENV_PRECISION = "ROBIN_PRECISION_BITS"
_DEFAULT_PRIME_LIMIT = 1_000_000

EX_OK = 0
EX_NEGATIVE = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64
EX_RESOURCE = 65
EX_FORMAT = 66


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the contract here wants 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _int_arg(text: str) -> int:
    try:
        return int(text.replace("_", ""), 10)
    except ValueError:
        pass
    try:
        d = decimal.Decimal(text)
    except decimal.InvalidOperation:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def _positive_int(text: str) -> int:
    v = _int_arg(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--precision", type=_positive_int, default=None, metavar="BITS",
        help=f"working precision in bits (default {DEFAULT_PRECISION_BITS}, "
             f"or the {_ENV_PRECISION} environment variable)",
    )
    p.add_argument(
        "--prime-limit", type=_positive_int, default=None, metavar="N",
        help=f"sieve primes up to N when a table is needed "
             f"(default {_DEFAULT_PRIME_LIMIT})",
    )
    p.add_argument(
        "--format", choices=("json", "csv", "text"), default=None,
        help="output format (default json)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="robinaudit",
        description="Certified checks for the divisor-sum inequality and "
                    "audits of least-counterexample candidates.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser)

    p = sub.add_parser(
        "verify", help="certify the inequality for every integer in a range"
    )
    p.add_argument("--from", dest="lo", type=_int_arg, required=True,
                   metavar="N", help="start of the range (clamped up to 3)")
    p.add_argument("--to", dest="hi", type=_int_arg, required=True,
                   metavar="N", help="end of the range, inclusive")
    _add_common(p)

    p = sub.add_parser(
        "sa", help="record-setters of sigma(n)/n up to a limit"
    )
    p.add_argument("--limit", type=_positive_int, required=True, metavar="N")
    _add_common(p)

    p = sub.add_parser(
        "ca", help="extremal candidates from the one-parameter construction"
    )
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--epsilon", type=_fraction_arg, metavar="EPS",
                   help="single candidate at this parameter (fraction or decimal)")
    g.add_argument("--count", type=_positive_int, metavar="K",
                   help="sweep the parameter downward until K distinct candidates")
    _add_common(p)

    p = sub.add_parser(
        "audit", help="run every necessary-condition check on a candidate"
    )
    p.add_argument("candidate", metavar="CANDIDATE",
                   help="candidate JSON, @file, or - for stdin")
    p.add_argument("--alt-log-window", action="store_true",
                   help="append the informational alternative log window check")
    _add_common(p)

    p = sub.add_parser(
        "normalize", help="drive a candidate into the exponent window"
    )
    p.add_argument("candidate", metavar="CANDIDATE",
                   help="candidate JSON, @file, or - for stdin")
    p.add_argument("--step-limit", type=_positive_int, default=10000,
                   metavar="K", help="maximum number of steps (default 10000)")
    _add_common(p)

    p = sub.add_parser("selftest", help="run built-in consistency checks")
    _add_common(p)

    return parser


def _resolve_precision(args, parser: _Parser) -> int:
    prec = getattr(args, "precision", None)
    if prec is None:
        raw = os.environ.get(_ENV_PRECISION)
        if raw is not None:
            try:
                prec = int(raw)
            except ValueError:
                parser.error(f"{_ENV_PRECISION} is not an integer: {raw!r}")
        else:
            prec = DEFAULT_PRECISION_BITS
    if prec < MIN_PRECISION_BITS:
        parser.error(
            f"precision must be at least {MIN_PRECISION_BITS} bits, got {prec}"
        )
    return prec


def _load_candidate(arg: str) -> CandidateFactorization:
    if arg == "-":
        text = sys.stdin.read()
    elif arg.startswith("@"):
        try:
            with open(arg[1:], "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise CandidateFormatError("file", str(e)) from e
    else:
        text = arg
    return CandidateFactorization.from_json(text)


def _emit_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _emit_csv(header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())


def _record_json(rec, prec: int) -> dict:
    rho = rec.rho
    return {
        "n": rec.n,
        "sigma": rec.sigma,
        "rho": {"num": rho.numerator, "den": rho.denominator},
        "threshold": interval_to_json(iv_round(rec.threshold, prec)),
        "verdict": rec.verdict,
    }


def _record_row(rec) -> list:
    rho = rec.rho
    return [rec.n, rec.sigma, rho.numerator, rho.denominator, rec.verdict]


def _cmd_verify(args, prec: int) -> int:
    lo = max(3, args.lo)
    hi = args.hi
    if hi < lo:
        raise DomainError(f"empty range: [{lo}, {hi}]")
    result = verify_range(lo, hi, prec=prec)
    flagged = list(result.violations) + list(result.unknowns)
    if args.format == "csv":
        _emit_csv(
            ["n", "sigma", "rho_num", "rho_den", "verdict"],
            [_record_row(r) for r in flagged],
        )
    elif args.format == "text":
        print(f"checked {result.checked} integers in [{result.lo}, {result.hi}]")
        for rec in flagged:
            print(f"  n={rec.n} sigma={rec.sigma} verdict={rec.verdict}")
        print(f"violations: {len(result.violations)}  "
              f"unknowns: {len(result.unknowns)}")
    else:
        _emit_json({
            "from": result.lo,
            "to": result.hi,
            "checked": result.checked,
            "violations": [_record_json(r, prec) for r in result.violations],
            "unknowns": [_record_json(r, prec) for r in result.unknowns],
        })
    if result.violations:
        return EX_NEGATIVE
    if result.unknowns:
        return EX_INCONCLUSIVE
    return EX_OK


def _cmd_sa(args, prec: int) -> int:
    records = superabundant_up_to(args.limit)
    if args.format == "csv":
        rows = [[r.n, r.sigma, r.rho.numerator, r.rho.denominator]
                for r in records]
        _emit_csv(["n", "sigma", "rho_num", "rho_den"], rows)
    elif args.format == "text":
        for r in records:
            print(f"n={r.n} sigma={r.sigma}")
        print(f"records: {len(records)}")
    else:
        _emit_json({
            "limit": args.limit,
            "records": [
                {"n": r.n, "sigma": r.sigma,
                 "rho": {"num": r.rho.numerator, "den": r.rho.denominator}}
                for r in records
            ],
        })
    return EX_OK


def _candidate_entry(c: CandidateFactorization, t: PrimeTable) -> dict:
    entry = dict(c.to_json())
    entry["r"] = c.r
    try:
        entry["n"] = materialize(c, t, max_bits=1 << 12)
    except ResourceBudgetError:
        entry["n"] = None
    return entry


def _cmd_ca(args, prec: int, table: PrimeTable) -> int:
    if args.epsilon is not None:
        if args.epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {args.epsilon}")
        try:
            c = ca_candidate(args.epsilon, table, prec=prec)
        except DomainError as e:
            print(f"no candidate at epsilon = {args.epsilon}: {e}",
                  file=sys.stderr)
            return EX_NEGATIVE
        entry = _candidate_entry(c, table)
        if args.format == "csv":
            _emit_csv(["r", "n", "runs"],
                      [[entry["r"], entry["n"], str(c)]])
        elif args.format == "text":
            print(f"epsilon={args.epsilon} r={c.r} n={entry['n']} {c}")
        else:
            _emit_json({"epsilon": str(args.epsilon), "candidate": entry})
        return EX_OK
    cands = ca_sweep(args.count, table, prec=prec)
    entries = [_candidate_entry(c, table) for c in cands]
    if args.format == "csv":
        _emit_csv(["r", "n", "runs"],
                  [[e["r"], e["n"], str(c)] for e, c in zip(entries, cands)])
    elif args.format == "text":
        for e, c in zip(entries, cands):
            print(f"r={e['r']} n={e['n']} {c}")
    else:
        _emit_json({"count": args.count, "candidates": entries})
    return EX_OK


def _cmd_audit(args, prec: int, table: PrimeTable) -> int:
    c = _load_candidate(args.candidate)
    report = full_audit(c, table, prec=prec,
                        include_alt_log_window=args.alt_log_window)
    if args.format == "csv":
        rows = [[cid, v.status, v.precision_used]
                for cid, v in report.checks + report.extra_checks]
        _emit_csv(["check_id", "status", "precision_used"], rows)
    elif args.format == "text":
        for cid, v in report.checks + report.extra_checks:
            print(f"{cid:16s} {v.status}")
        print(f"result: {report.result}")
        if report.excluded_by:
            print("excluded_by: " + " ".join(report.excluded_by))
        if report.unknown_checks:
            print("unknown: " + " ".join(report.unknown_checks))
    else:
        _emit_json(report.to_json())
    if report.result == "excluded":
        return EX_NEGATIVE
    if report.result == "inconclusive":
        return EX_INCONCLUSIVE
    return EX_OK


def _cmd_normalize(args, prec: int, table: PrimeTable) -> int:
    c = _load_candidate(args.candidate)
    result = normalize(c, table, prec=prec, step_limit=args.step_limit)
    if args.format == "csv":
        rows = [
            [i + 1, s["action"], s["index"], s["prime"],
             s.get("removed_prime", "")]
            for i, s in enumerate(result.trace)
        ]
        _emit_csv(["step", "action", "index", "prime", "removed_prime"], rows)
    elif args.format == "text":
        for i, s in enumerate(result.trace):
            print(f"step {i + 1}: {s['action']} at index {s['index']} "
                  f"(prime {s['prime']})")
        print(f"status: {result.status} after {result.steps} steps")
        print(f"candidate: {result.candidate}")
    else:
        _emit_json(result.to_json())
    return EX_OK if result.status == IN_WINDOW else EX_INCONCLUSIVE


def _selftest_checks(prec: int):
    from .audit import compute_l, compute_u_from_log
    from .intervals import (
        Comparison, constants, interval_from_json, iv_compare, iv_from_int,
    )
    from .factored import big_g

    def prime_count():
        return len(PrimeTable.build(10**5)) == 9592

    def classical_exceptions():
        res = verify_range(3, 5040, prec=prec)
        ns = [r.n for r in res.violations]
        return not res.unknowns and len(ns) == 26 and ns[-1] == 5040

    def g_straddles_threshold():
        t = PrimeTable.build(100)
        g1 = big_g(CandidateFactorization.from_exponents([4, 2, 1, 1]), t, prec)
        g2 = big_g(CandidateFactorization.from_exponents([4, 2, 1, 1, 1]), t, prec)
        eg = constants(prec).exp_gamma
        return (iv_compare(g1, eg) is Comparison.CERTAINLY_GREATER
                and iv_compare(g2, eg) is Comparison.CERTAINLY_LESS)

    def window_bounds():
        lg = iv_from_int(100)
        return (compute_u_from_log(lg, 2) == 9
                and compute_u_from_log(lg, 7) == 2
                and compute_l(97, 2) == 6)

    def interval_round_trip():
        g = constants(prec).gamma
        back = interval_from_json(interval_to_json(g))
        return back.lo == g.lo and back.hi == g.hi

    return [
        ("prime_count_1e5", prime_count),
        ("classical_exceptions", classical_exceptions),
        ("g_straddles_threshold", g_straddles_threshold),
        ("window_bounds", window_bounds),
        ("interval_round_trip", interval_round_trip),
    ]


def _cmd_selftest(args, prec: int) -> int:
    results = []
    for name, fn in _selftest_checks(prec):
        try:
            ok = bool(fn())
        except Exception as e:  # a selftest must report, not crash
            ok = False
            results.append({"name": name, "ok": False, "error": str(e)})
            continue
        results.append({"name": name, "ok": ok})
    all_ok = all(r["ok"] for r in results)
    if args.format == "csv":
        _emit_csv(["name", "ok"], [[r["name"], r["ok"]] for r in results])
    elif args.format == "text":
        for r in results:
            print(f"{'ok' if r['ok'] else 'FAIL'} {r['name']}")
    else:
        _emit_json({"checks": results, "ok": all_ok})
    return EX_OK if all_ok else EX_NEGATIVE


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a command is required")
    if args.format is None:
        args.format = "json"
    prec = _resolve_precision(args, parser)
    limit = args.prime_limit or _DEFAULT_PRIME_LIMIT

    try:
        if args.command == "verify":
            return _cmd_verify(args, prec)
        if args.command == "sa":
            return _cmd_sa(args, prec)
        if args.command == "ca":
            return _cmd_ca(args, prec, PrimeTable.build(limit))
        if args.command == "audit":
            return _cmd_audit(args, prec, PrimeTable.build(limit))
        if args.command == "normalize":
            return _cmd_normalize(args, prec, PrimeTable.build(limit))
        if args.command == "selftest":
            return _cmd_selftest(args, prec)
        parser.error(f"unknown command {args.command!r}")
    except CandidateFormatError as e:
        print(f"robinaudit: candidate format error: {e}", file=sys.stderr)
        return EX_FORMAT
    except ResourceBudgetError as e:
        print(f"robinaudit: resource budget exceeded: {e}", file=sys.stderr)
        return EX_RESOURCE
    except PrecisionError as e:
        hint = ""
        if e.suggested_precision_bits:
            hint = f" (retry with --precision {e.suggested_precision_bits})"
        print(f"robinaudit: could not certify: {e}{hint}", file=sys.stderr)
        return EX_INCONCLUSIVE
    except DomainError as e:
        print(f"robinaudit: invalid input: {e}", file=sys.stderr)
        return EX_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
