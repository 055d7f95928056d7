"""nlab command line.

Exit codes: 0 success, 1 invariant violation (svcheck / eta sandwich), 2 usage
or range error.  Output is deterministic for identical flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import blocks, eta, primes
from .digits import Kind, StreamSpec, required_limit
from .errors import InvariantViolation, NlabError, UsageError
from .svfun import SvFunction, SvParams, check_construction

SIEVE_CAP = 10**8
PRESET_LIMIT = 10**7
TABLE_ENTRIES = 10**7

PRESETS = {
    "table1": dict(seq=Kind.PRIME_COUNT, base=10, entries=TABLE_ENTRIES, start=0),
    "table2": dict(seq=Kind.FLOOR_SQRT, base=10, entries=TABLE_ENTRIES, start=1),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def _cache_path(limit: int, explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    cache_dir = os.environ.get("NLAB_CACHE_DIR")
    if cache_dir:
        return Path(cache_dir) / f"sieve-{limit}.nlab"
    return None


def get_tables(limit: int, cache: str | None = None, workers: int = 1) -> primes.PrimeTables:
    limit = max(limit, 2)
    if limit > SIEVE_CAP:
        raise UsageError(f"required sieve limit {limit} exceeds the cap {SIEVE_CAP}")
    path = _cache_path(limit, cache)
    if path is not None and path.exists():
        tables = primes.load_cache(path)
        if tables.limit == limit:
            return tables
    tables = primes.build_tables(limit, workers=workers)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        primes.save_cache(tables, path)
    return tables


def _spec(args) -> StreamSpec:
    return StreamSpec(Kind(args.seq), args.base, args.start)


def _tables_for(spec: StreamSpec, args) -> primes.PrimeTables | None:
    if spec.kind not in (Kind.PRIME_COUNT, Kind.PRIMES):
        return None
    return get_tables(required_limit(spec), args.cache, args.workers)


def _emit(text: str) -> None:
    sys.stdout.write(text)


def cmd_sieve(args) -> int:
    if args.limit < 2:
        raise UsageError(f"sieve limit must be >= 2, got {args.limit}")
    tables = get_tables(args.limit, args.cache, args.workers)
    doc = {
        "limit": tables.limit,
        "pi": tables.pi(tables.limit),
        "largest_prime": tables.largest_prime,
    }
    _emit(_render_mapping(doc, args.format or "md"))
    return 0


def _freq(args, seq, base, entries, start, order=1) -> int:
    spec = StreamSpec(Kind(seq), base, start, entries)
    tables = _tables_for(spec, args)
    c = blocks.census(spec, order, tables, n_entries=entries)
    _emit(blocks.frequency_report(c).render(args.format or "md"))
    return 0


def cmd_freq(args) -> int:
    return _freq(args, args.seq, args.base, args.entries, args.start, args.order)


def cmd_preset(args) -> int:
    return _freq(args, **PRESETS[args.command])


def cmd_blocks(args) -> int:
    spec = _spec(args)
    # every entry contributes at least one digit
    tables = _tables_for(StreamSpec(spec.kind, spec.base, spec.start_index, args.digits), args)
    c = blocks.census(spec, args.order, tables, n_digits=args.digits)
    _emit(blocks.frequency_report(c).render(args.format or "md"))
    return 0


def cmd_benford(args) -> int:
    spec = StreamSpec(Kind(args.seq), args.base, args.start, args.entries)
    tables = _tables_for(spec, args)
    _emit(blocks.benford_leading(spec, args.entries, tables).render(args.format or "md"))
    return 0


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def cmd_svcheck(args) -> int:
    params = SvParams(args.eps, args.delta)
    need = required_limit(StreamSpec(Kind.PRIMES, 10, 1, args.mmax + 1))
    tables = get_tables(need, args.cache, args.workers)
    report = check_construction(SvFunction(tables, params), args.mmax, args.samples, args.seed)
    _emit(report.to_json())
    return 0 if report.ok else 1


def _big_m(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--big-m takes 'auto' or a positive number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("--big-m must be positive")
    return v


def cmd_eta(args) -> int:
    if not args.x_lo < args.x_hi:
        raise UsageError(f"--from {args.x_lo} must be below --to {args.x_hi}")
    if args.x_hi > SIEVE_CAP:
        raise UsageError(f"--to exceeds the sieve cap {SIEVE_CAP}")
    tables = primes.build_covering(int(args.x_hi), workers=args.workers)
    fn = SvFunction(tables, SvParams(args.eps, args.delta))
    samples = eta.eta_sweep(fn, args.target, args.x_lo, args.x_hi, args.points, args.big_m)
    fmt = args.format or "csv"
    render = {"csv": eta.sweep_csv, "json": eta.sweep_json, "md": eta.sweep_markdown}[fmt]
    _emit(render(samples))
    if any(not s.holds for s in samples if s.target is not eta.Target.RH):
        sys.stderr.write("nlab: sandwich violated at one or more points\n")
        return 1
    return 0


def cmd_cramer(args) -> int:
    tables = get_tables(args.limit, args.cache, args.workers)
    stats = primes.cramer_stats(tables, m_min=args.from_m)
    doc = {
        "limit": tables.limit,
        "m_min": args.from_m,
        "max_ratio": stats.max_ratio,
        "argmax_m": stats.argmax_m,
        "p_argmax": tables.nth_prime(stats.argmax_m),
        "gap_argmax": tables.gap(stats.argmax_m),
        "M": primes.default_big_m(stats),
    }
    _emit(_render_mapping(doc, args.format or "md"))
    return 0


def _render_mapping(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        return "key,value\n" + "".join(f"{k},{v!r}\n" for k, v in doc.items())
    lines = ["| key | value |", "|---|---|"]
    for k, v in doc.items():
        lines.append(f"| {k} | {v:.6g} |" if isinstance(v, float) else f"| {k} | {v} |")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json", "md"], default=None)
    common.add_argument("--cache", default=None, help="sieve cache file (NLAB1 format)")
    common.add_argument("--workers", type=int, default=1)

    seq = argparse.ArgumentParser(add_help=False)
    seq.add_argument("--seq", required=True, choices=[k.value for k in Kind])
    seq.add_argument("--base", type=int, default=10)
    seq.add_argument("--start", type=int, choices=[0, 1], default=1)

    parser = _Parser(prog="nlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sieve", parents=[common], help="build (and optionally cache) a prime sieve")
    p.add_argument("--limit", type=int, required=True)
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("freq", parents=[common, seq], help="block frequencies over N entries")
    p.add_argument("--entries", type=int, required=True)
    p.add_argument("--order", type=int, default=1)
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("blocks", parents=[common, seq], help="block census over a digit prefix")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--digits", type=int, required=True)
    p.set_defaults(func=cmd_blocks)

    for name, text in (
        ("table1", "digit frequencies of pi(n), n = 0 .. 10^7 - 1"),
        ("table2", "digit frequencies of floor(sqrt(n)), n = 1 .. 10^7"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=cmd_preset)

    p = sub.add_parser("benford", parents=[common, seq], help="leading-digit distribution")
    p.add_argument("--entries", type=int, required=True)
    p.set_defaults(func=cmd_benford)

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--eps", type=_fraction, default=Fraction(1, 25))
    params.add_argument("--delta", type=_fraction, default=Fraction(1, 25))

    p = sub.add_parser("svcheck", parents=[common, params], help="certify the interpolant f")
    p.add_argument("--mmax", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_svcheck)

    p = sub.add_parser("eta", parents=[common, params], help="log-ratio sweeps with bound curves")
    p.add_argument("--target", required=True, choices=[t.value for t in eta.Target])
    p.add_argument("--from", dest="x_lo", type=float, required=True)
    p.add_argument("--to", dest="x_hi", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--big-m", type=_big_m, default=None)
    p.set_defaults(func=cmd_eta)

    p = sub.add_parser("cramer", parents=[common], help="max of g_m / ln^2 p_m")
    p.add_argument("--limit", type=int, required=True)
    p.add_argument("--from-m", type=int, default=1)
    p.set_defaults(func=cmd_cramer)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        sys.stderr.write(f"nlab: invariant violation: {exc}\n")
        return 1
    except NlabError as exc:
        sys.stderr.write(f"nlab: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
