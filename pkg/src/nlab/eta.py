"""Finite-x log-ratio samples ln f(x)/ln x and ln f'(x)/ln x with their bound curves.

The limits themselves are never reported; each sample carries the explicit
lower/upper curves that pinch it, and sweeps expose the trend.  Binary64
throughout, with an absolute slack of 1e-12 on every sandwich comparison.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import InvariantViolation, OutOfRangeError, ThresholdError, UsageError
from .primes import X_HIGH, PrimeTables, cramer_stats, default_big_m
from .svfun import SvFunction

SLACK = 1e-12
FPRIME_THRESHOLD = 5.0
RH_THRESHOLD = 3.0
UPPER_SLOPE = 0.51


class Target(str, Enum):
    F = "f"
    FPRIME = "fprime"
    RH = "rh"


@dataclass(frozen=True)
class EtaSample:
    x: float
    value: float
    lower_bound: float
    upper_bound: float
    target: Target

    @property
    def holds(self) -> bool:
        return self.lower_bound - SLACK <= self.value <= self.upper_bound + SLACK


def nested_log(x: float) -> float:
    """ln( x ln( x ln(x/(ln x - 1.1)) / (ln x - 1.1) ) / (ln x - 1.1) ).

    An upper estimate of ln p_pi(x) built from pi(x) <= x/(ln x - 1.1) and
    p_n <= n ln(n ln n) style bounds.
    """
    d = math.log(x) - 1.1
    inner = math.log(x / d)
    middle = math.log(x * inner / d)
    return math.log(x * middle / d)


def _check_x(x: float, threshold: float, x_max: float, what: str) -> float:
    x = float(x)
    if x < threshold:
        raise ThresholdError(f"{what} sample needs x >= {threshold}, got {x}")
    if x > x_max:
        raise OutOfRangeError(f"x={x} beyond the sieved range (max {x_max})")
    return x


def _finish(sample: EtaSample, strict: bool) -> EtaSample:
    if strict and not sample.holds:
        raise InvariantViolation(
            f"{sample.target.value} sandwich fails at x={sample.x}: "
            f"{sample.lower_bound} <= {sample.value} <= {sample.upper_bound}"
        )
    return sample


def eta_f_sample(fn: SvFunction, x: float, strict: bool = False) -> EtaSample:
    """ln f(x)/ln x between ln(x/(ln x - 1))/ln x and ln(x/(ln x - 1.1) + 1)/ln x."""
    x = _check_x(x, X_HIGH, fn.x_max, "f")
    lx = math.log(x)
    value = math.log(float(fn.f(x))) / lx
    lower = math.log(x / (lx - 1.0)) / lx
    upper = math.log(x / (lx - 1.1) + 1.0) / lx
    return _finish(EtaSample(x, value, lower, upper, Target.F), strict)


def eta_fprime_sample(fn: SvFunction, x: float, big_m: float, strict: bool = False) -> EtaSample:
    """ln f'(x)/ln x between -ln(M L(x)^2)/ln x and ln(0.51)/ln x."""
    x = _check_x(x, FPRIME_THRESHOLD, fn.x_max, "f'")
    lx = math.log(x)
    value = math.log(float(fn.f_prime(x))) / lx
    lower = -math.log(big_m * nested_log(x) ** 2) / lx
    upper = math.log(UPPER_SLOPE) / lx
    return _finish(EtaSample(x, value, lower, upper, Target.FPRIME), strict)


def rh_lower_sample(tables: PrimeTables, x: float, big_m: float) -> EtaSample:
    """ln(1/(M sqrt(p) ln p))/ln x with p = p_pi(x): the RH-only slope floor.

    lower_bound is the value itself and upper_bound is ln(0.51)/ln x; the
    first tends to -1/2 and the second to 0, so the pair never pinches.
    """
    x = _check_x(x, RH_THRESHOLD, tables.limit, "rh")
    lx = math.log(x)
    p = tables.nth_prime(tables.pi(math.floor(x)))
    value = -math.log(big_m * math.sqrt(p) * math.log(p)) / lx
    return EtaSample(x, value, value, math.log(UPPER_SLOPE) / lx, Target.RH)


def auto_big_m(tables: PrimeTables) -> float:
    return default_big_m(cramer_stats(tables))


def geometric_grid(x_lo: float, x_hi: float, points: int) -> list[float]:
    if points < 2:
        raise UsageError("a sweep needs at least 2 points")
    if not x_lo < x_hi:
        raise UsageError(f"empty range [{x_lo}, {x_hi}]")
    return np.geomspace(x_lo, x_hi, points).tolist()


def eta_sweep(
    fn: SvFunction,
    target: Target | str,
    x_lo: float,
    x_hi: float,
    points: int,
    big_m: float | None = None,
) -> list[EtaSample]:
    """Samples at a geometric grid of ``points`` values, ascending in x.

    ``big_m=None`` means auto: max(2.2, 1.05 * empirical Cramer max).
    """
    target = Target(target)
    xs = geometric_grid(x_lo, x_hi, points)
    if target is Target.F:
        return [eta_f_sample(fn, x) for x in xs]
    m = auto_big_m(fn.tables) if big_m is None else big_m
    if target is Target.FPRIME:
        return [eta_fprime_sample(fn, x, m) for x in xs]
    return [rh_lower_sample(fn.tables, x, m) for x in xs]


def sweep_csv(samples: list[EtaSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "value", "lower", "upper", "target"])
    for s in samples:
        w.writerow([repr(s.x), repr(s.value), repr(s.lower_bound), repr(s.upper_bound), s.target.value])
    return buf.getvalue()


def sweep_json(samples: list[EtaSample]) -> str:
    rows = []
    for s in samples:
        d = asdict(s)
        d["target"] = s.target.value
        d["holds"] = s.holds if s.target is not Target.RH else None
        rows.append(d)
    return json.dumps(rows, indent=2) + "\n"


def sweep_markdown(samples: list[EtaSample]) -> str:
    lines = ["| x | value | lower | upper |", "|---|---|---|---|"]
    for s in samples:
        lines.append(f"| {s.x:.6g} | {s.value:.6g} | {s.lower_bound:.6g} | {s.upper_bound:.6g} |")
    return "\n".join(lines) + "\n"
