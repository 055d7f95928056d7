"""A C^1 interpolant f of the prime-counting function with floor(f) = pi.

On [0, 3] f is a fixed pair of quadratics joined to x - 1.  On each prime
interval [p_m, p_{m+1}] (m >= 2) the derivative f' is a two-piece linear
function h^(m) running from 1/g_{m-1} at p_m through a midpoint value at the
knot p_m + eps (or p_m + delta) down/up to 1/g_m at p_{m+1}, chosen so that
the integral over the interval is exactly 1.  When g_{m-1} = g_m, h^(m) is the
constant 1/g_m.

Everything here is exact rational arithmetic.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

from .errors import ConsistencyError, DomainError, OutOfRangeError, UsageError
from .primes import PrimeTables, cramer_stats, default_big_m

Number = Union[int, float, str, Fraction]

THREE_HALVES = Fraction(3, 2)
DEFAULT_EPS = Fraction(1, 25)
UPPER_SLOPE = Fraction(51, 100)


def as_fraction(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class SvParams:
    eps: Fraction = DEFAULT_EPS
    delta: Fraction = DEFAULT_EPS

    def __post_init__(self):
        for name in ("eps", "delta"):
            v = as_fraction(getattr(self, name))
            if not 0 < v < 1:
                raise UsageError(f"{name} must lie in (0, 1), got {v}")
            object.__setattr__(self, name, v)


class Case(str, Enum):
    EPS = "eps"  # g_{m-1} < g_m: slope drops below 1/g_m after p_m
    DELTA = "delta"  # g_{m-1} > g_m: slope overshoots 1/g_m
    NULL = "null"  # equal gaps: constant slope


@dataclass(frozen=True)
class SvCoefficients:
    m: int
    p_lo: int
    p_hi: int
    g_prev: int
    g_cur: int
    case: Case
    knot: Fraction  # p_lo + eps / p_lo + delta; p_lo in the null case
    a: Fraction  # 1/g_{m-1}
    b: Fraction  # 1/g_m
    mid: Fraction  # q_2 / r_2; b in the null case

    def left_line(self) -> tuple[Fraction, Fraction]:
        """(slope, intercept) of h on [p_lo, knot]."""
        if self.case is Case.NULL:
            return Fraction(0), self.b
        G, p, q1, q2 = self.g_prev, self.p_lo, self.knot, self.mid
        den = G * (p - q1)
        return (1 - q2 * G) / den, (q2 * G * p - q1) / den

    def right_line(self) -> tuple[Fraction, Fraction]:
        """(slope, intercept) of h on [knot, p_hi]."""
        if self.case is Case.NULL:
            return Fraction(0), self.b
        g, p, q1, q2 = self.g_cur, self.p_hi, self.knot, self.mid
        den = g * (p - q1)
        return (1 - q2 * g) / den, (q2 * g * p - q1) / den

    def left(self, x: Fraction) -> Fraction:
        s, c = self.left_line()
        return s * x + c

    def right(self, x: Fraction) -> Fraction:
        s, c = self.right_line()
        return s * x + c


def reduced_mid(g_prev: int, g_cur: int, t: Fraction) -> Fraction:
    """t (1/g_m - 1/g_{m-1}) / g_m + 1/g_m."""
    b = Fraction(1, g_cur)
    return t * (b - Fraction(1, g_prev)) / g_cur + b


def raw_mid_eps(p_m: int, g_prev: int, g_cur: int, q1: Fraction) -> Fraction:
    den = g_prev * g_cur**2
    return q1 * (g_prev - g_cur) / den + Fraction(g_cur * p_m - g_prev * p_m + g_prev * g_cur, den)


def raw_mid_delta(p_m: int, p_next: int, g_prev: int, g_cur: int, r1: Fraction) -> Fraction:
    den = g_prev * g_cur**2
    return r1 * (g_prev - g_cur) / den + Fraction(
        g_cur * p_m - g_prev * p_next + 2 * g_prev * g_cur, den
    )


def interval_coeffs(tables: PrimeTables, m: int, params: SvParams = SvParams()) -> SvCoefficients:
    if m < 2:
        raise UsageError(f"prime intervals start at m = 2, got {m}")
    if m + 1 > tables.count:
        raise OutOfRangeError(f"interval m={m} needs p_{m + 1}, sieve limit {tables.limit}")
    p_prev, p_lo, p_hi = (int(v) for v in tables.primes[m - 2 : m + 1])
    g_prev, g_cur = p_lo - p_prev, p_hi - p_lo
    a, b = Fraction(1, g_prev), Fraction(1, g_cur)
    if a > b:
        case, t = Case.EPS, params.eps
        mid = reduced_mid(g_prev, g_cur, t)
        raw = raw_mid_eps(p_lo, g_prev, g_cur, p_lo + t)
    elif a < b:
        case, t = Case.DELTA, params.delta
        mid = reduced_mid(g_prev, g_cur, t)
        raw = raw_mid_delta(p_lo, p_hi, g_prev, g_cur, p_lo + t)
    else:
        return SvCoefficients(m, p_lo, p_hi, g_prev, g_cur, Case.NULL, Fraction(p_lo), a, b, b)
    if raw != mid:
        raise ConsistencyError(f"m={m}: raw midpoint {raw} != reduced {mid}")
    return SvCoefficients(m, p_lo, p_hi, g_prev, g_cur, case, p_lo + t, a, b, mid)


def h_eval(coeffs: SvCoefficients, x: Number) -> Fraction:
    x = as_fraction(x)
    if not coeffs.p_lo <= x <= coeffs.p_hi:
        raise DomainError(f"x={x} outside [{coeffs.p_lo}, {coeffs.p_hi}]")
    return coeffs.left(x) if x <= coeffs.knot else coeffs.right(x)


def _partial_integral(c: SvCoefficients, x: Fraction) -> Fraction:
    """Integral of h^(m) from p_lo to x (trapezoids over the linear pieces)."""
    p = c.p_lo
    if x <= c.knot:
        return (x - p) * (c.left(Fraction(p)) + c.left(x)) / 2
    head = (c.knot - p) * (c.left(Fraction(p)) + c.left(c.knot)) / 2
    return head + (x - c.knot) * (c.right(c.knot) + c.right(x)) / 2


def interval_integral(coeffs: SvCoefficients) -> Fraction:
    return _partial_integral(coeffs, Fraction(coeffs.p_hi))


class SvFunction:
    """f and f' over [0, largest sieved prime], coefficients cached per interval."""

    def __init__(self, tables: PrimeTables, params: SvParams = SvParams()):
        self.tables = tables
        self.params = params
        self.n0 = 0
        self._cache: dict[int, SvCoefficients] = {}

    @property
    def x_max(self) -> int:
        return self.tables.largest_prime

    def coeffs(self, m: int) -> SvCoefficients:
        c = self._cache.get(m)
        if c is None:
            c = self._cache.setdefault(m, interval_coeffs(self.tables, m, self.params))
        return c

    def _locate(self, x: Number) -> tuple[Fraction, int]:
        x = as_fraction(x)
        if x < 0 or x > self.x_max:
            raise DomainError(f"x={x} outside [0, {self.x_max}]")
        return x, self.tables.pi(math.floor(x))

    def f(self, x: Number) -> Fraction:
        x, m = self._locate(x)
        if x <= THREE_HALVES:
            return (4 * x * x + 12 * x + 39) / 96
        if x <= 2:
            return (3 * x * x - 8 * x + 8) / 4
        if x <= 3:
            return x - 1
        if x == int(self.tables.primes[m - 1]):
            return Fraction(m)
        return m + _partial_integral(self.coeffs(m), x)

    def f_prime(self, x: Number) -> Fraction:
        x, m = self._locate(x)
        if x <= THREE_HALVES:
            return (2 * x + 3) / 24
        if x <= 2:
            return (6 * x - 8) / 4
        if x <= 3:
            return Fraction(1)
        if x == int(self.tables.primes[m - 1]):
            # h^(m-1)(p_m) = h^(m)(p_m); the left side needs no p_{m+1}
            return self.coeffs(m - 1).right(x)
        return h_eval(self.coeffs(m), x)


def f_eval(fn: SvFunction, x: Number) -> Fraction:
    return fn.f(x)


def f_prime_eval(fn: SvFunction, x: Number) -> Fraction:
    return fn.f_prime(x)


# --- certification --------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    count: int = 0
    failures: int = 0
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, **witness) -> None:
        self.count += 1
        if not ok:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = {k: str(v) for k, v in witness.items()}


@dataclass
class CheckReport:
    m_max: int
    samples: int
    seed: int
    params: SvParams
    big_m: float
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> list[str]:
        return [n for n, c in self.checks.items() if not c.passed]

    def to_json(self) -> str:
        doc = {
            "ok": self.ok,
            "m_max": self.m_max,
            "samples": self.samples,
            "seed": self.seed,
            "params": {"eps": str(self.params.eps), "delta": str(self.params.delta), "M": self.big_m},
            "checks": {
                n: {
                    "status": "pass" if c.passed else "fail",
                    "count": c.count,
                    "failures": c.failures,
                    "counterexample": c.counterexample,
                }
                for n, c in self.checks.items()
            },
        }
        return json.dumps(doc, indent=2) + "\n"


SAMPLE_DENOMINATOR = 1 << 20

CHECK_NAMES = (
    "raw_reduced",
    "unit_integral",
    "seam_continuity",
    "fprime_positive",
    "floor_identity",
    "bound_chain",
    "cramer_sandwich",
)


def sample_points(upper: int, count: int, seed: int) -> list[Fraction]:
    """Seeded pseudo-random rationals in [0, upper] with denominator 2^20."""
    rng = random.Random(seed)
    top = upper * SAMPLE_DENOMINATOR
    return [Fraction(rng.randint(0, top), SAMPLE_DENOMINATOR) for _ in range(count)]


def check_construction(
    fn: SvFunction, m_max: int, sample_count: int, seed: int, big_m: float | None = None
) -> CheckReport:
    """Verify every construction invariant of f on [0, p_{m_max+1}].

    Checks (all exact except cramer_sandwich, which compares against a log):
    midpoint raw form == reduced form, unit integral per interval, matching
    one-sided derivative limits at every seam, f' > 0 at knots and samples,
    floor(f(x)) == pi(x) at samples, the per-case slope bound chain, and
    1/(M ln^2 p_pi(x)) <= f'(x) <= 0.51 for sampled x >= 5.
    """
    tables = fn.tables
    if m_max < 2:
        raise UsageError("m_max must be >= 2")
    if m_max + 1 > tables.count:
        raise OutOfRangeError(f"m_max={m_max} needs p_{m_max + 1}, sieve limit {tables.limit}")
    if big_m is None:
        big_m = default_big_m(cramer_stats(tables))
    report = CheckReport(m_max, sample_count, seed, fn.params, big_m)
    chk = {name: CheckResult(name) for name in CHECK_NAMES}
    report.checks = chk
    params = fn.params

    # interval-level checks; raw/reduced recomputed independently of the cache
    for m in range(2, m_max + 1):
        c = fn.coeffs(m)
        if c.case is not Case.NULL:
            t = params.eps if c.case is Case.EPS else params.delta
            if c.case is Case.EPS:
                raw = raw_mid_eps(c.p_lo, c.g_prev, c.g_cur, c.p_lo + t)
            else:
                raw = raw_mid_delta(c.p_lo, c.p_hi, c.g_prev, c.g_cur, c.p_lo + t)
            chk["raw_reduced"].record(raw == c.mid, m=m, raw=raw, mid=c.mid)
        integral = interval_integral(c)
        chk["unit_integral"].record(integral == 1, m=m, integral=integral)
        knot = c.knot
        if c.case is not Case.NULL:
            lv, rv = c.left(knot), c.right(knot)
            chk["seam_continuity"].record(lv == rv, m=m, x=knot, left=lv, right=rv)
            chk["fprime_positive"].record(lv > 0, m=m, x=knot, fprime=lv)
        lo_v = c.left(Fraction(c.p_lo))
        if m == 2:
            chk["seam_continuity"].record(lo_v == 1, m=m, x=3, left=1, right=lo_v)
        else:
            prev = fn.coeffs(m - 1).right(Fraction(c.p_lo))
            chk["seam_continuity"].record(prev == lo_v, m=m, x=c.p_lo, left=prev, right=lo_v)
    # right end of the last interval: only the value 1/g_m is pinned
    last = fn.coeffs(m_max)
    end_v = last.right(Fraction(last.p_hi))
    chk["seam_continuity"].record(end_v == last.b, m=m_max, x=last.p_hi, left=end_v, right=last.b)

    # polynomial seams on [0, 3]
    for x, lv, rv in (
        (THREE_HALVES, (2 * THREE_HALVES + 3) / 24, (6 * THREE_HALVES - 8) / 4),
        (Fraction(2), (6 * Fraction(2) - 8) / 4, Fraction(1)),
    ):
        chk["seam_continuity"].record(lv == rv, m=0, x=x, left=lv, right=rv)

    upper = int(tables.primes[m_max])
    for x in sample_points(upper, sample_count, seed):
        fx = fn.f(x)
        pix = tables.pi(math.floor(x))
        chk["floor_identity"].record(math.floor(fx) == pix, m=pix, x=x, f=fx)
        d = fn.f_prime(x)
        chk["fprime_positive"].record(d > 0, m=pix, x=x, fprime=d)
        if x > 3 and x != int(tables.primes[pix - 1]):
            c = fn.coeffs(pix)
            if c.case is Case.EPS:
                lo, hi = reduced_mid(c.g_prev, c.g_cur, params.eps), Fraction(1, c.g_prev)
            elif c.case is Case.DELTA:
                lo, hi = Fraction(1, c.g_prev), reduced_mid(c.g_prev, c.g_cur, params.delta)
            else:
                lo = hi = Fraction(1, c.g_cur)
            chk["bound_chain"].record(0 < lo <= d <= hi, m=pix, x=x, low=lo, fprime=d, high=hi)
        if x >= 5:
            p = int(tables.primes[pix - 1])
            floor_v = 1.0 / (big_m * math.log(p) ** 2)
            chk["cramer_sandwich"].record(
                floor_v <= float(d) and d <= UPPER_SLOPE, m=pix, x=x, low=floor_v, fprime=d
            )
    return report
