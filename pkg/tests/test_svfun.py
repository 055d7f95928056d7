import dataclasses
import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlab.errors import DomainError, OutOfRangeError, UsageError
from nlab.primes import build_tables, cramer_stats, default_big_m
from nlab.svfun import (
    Case,
    SvFunction,
    SvParams,
    check_construction,
    f_eval,
    f_prime_eval,
    h_eval,
    interval_coeffs,
    interval_integral,
    raw_mid_delta,
    raw_mid_eps,
    reduced_mid,
)


def interp(points, x):
    """Piecewise-linear through sorted (x, y) knots; independent of the line formulas."""
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x0 <= x <= x1:
            if x1 == x0:
                return y0
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    raise ValueError(x)


def oracle_knots(c):
    return [(F(c.p_lo), c.a), (c.knot, c.mid), (F(c.p_hi), c.b)]


# --- interval coefficients --------------------------------------------------


def test_coeffs_m4_eps_half(small):
    c = interval_coeffs(small, 4, SvParams(F(1, 2), F(1, 25)))
    assert (c.p_lo, c.p_hi, c.g_prev, c.g_cur) == (7, 11, 2, 4)
    assert c.case is Case.EPS
    assert c.knot == F(15, 2)
    # both printed forms, evaluated by hand
    q1, G, g, p = F(15, 2), 2, 4, 7
    raw = q1 * (G - g) / (G * g * g) + F(g * p - G * p + G * g, G * g * g)
    assert q1 * (G - g) / (G * g * g) == F(-15, 32)
    assert F(g * p - G * p + G * g, G * g * g) == F(22, 32)
    reduced = F(1, 2) * (F(1, g) - F(1, G)) / g + F(1, g)
    assert raw == reduced == c.mid == F(7, 32)
    assert 0 < c.mid < c.b


def test_coeffs_m3_null(small):
    c = interval_coeffs(small, 3)
    assert (c.p_lo, c.p_hi, c.g_prev, c.g_cur) == (5, 7, 2, 2)
    assert c.case is Case.NULL
    assert c.mid == c.a == c.b == F(1, 2)


def test_coeffs_m5_delta(small):
    c = interval_coeffs(small, 5, SvParams(delta=F(1, 25)))
    assert (c.p_lo, c.p_hi, c.g_prev, c.g_cur) == (11, 13, 4, 2)
    assert c.case is Case.DELTA
    r1, G, g, p, pn = 11 + F(1, 25), 4, 2, 11, 13
    raw = r1 * (G - g) / (G * g * g) + F(g * p - G * pn + 2 * G * g, G * g * g)
    assert raw == (11 + F(1, 25)) / 8 - F(7, 8)
    assert raw == c.mid == F(101, 200)
    assert c.mid > c.b


def test_coeffs_errors(small):
    with pytest.raises(UsageError):
        interval_coeffs(small, 1)
    with pytest.raises(OutOfRangeError):
        interval_coeffs(small, small.count)


def test_raw_reduced_equivalence_many(small):
    t = build_tables(110_000)  # p_10001 = 104759
    rng = random.Random(11)
    params = [F(rng.randint(1, 999), 1000) for _ in range(20)]
    p = t.primes.tolist()
    for m in range(2, 10_001):
        G, g = p[m - 1] - p[m - 2], p[m] - p[m - 1]
        if G == g:
            continue
        for tv in params:
            if G < g:
                raw = raw_mid_eps(p[m - 1], G, g, p[m - 1] + tv)
            else:
                raw = raw_mid_delta(p[m - 1], p[m], G, g, p[m - 1] + tv)
            assert raw == reduced_mid(G, g, tv)


def test_case_invariants(small):
    fn = SvFunction(small)
    for m in range(2, 1000):
        c = fn.coeffs(m)
        if c.case is Case.EPS:
            assert 0 < c.mid < c.b < c.a
        elif c.case is Case.DELTA:
            assert c.a < c.b < c.mid
        else:
            assert c.mid == c.a == c.b


def test_params_validation():
    with pytest.raises(UsageError):
        SvParams(F(0))
    with pytest.raises(UsageError):
        SvParams(delta=F(1))
    assert SvParams("1/3").eps == F(1, 3)


# --- h, integral ------------------------------------------------------------


def test_h_examples(small):
    c = interval_coeffs(small, 4, SvParams(F(1, 2)))
    assert h_eval(c, 7) == F(1, 2)
    assert h_eval(c, F(15, 2)) == F(7, 32)
    assert h_eval(c, 11) == F(1, 4)
    # both printed pieces reach q2 at q1
    assert c.left(c.knot) == c.right(c.knot) == F(7, 32)
    null = interval_coeffs(small, 3)
    for x in (5, F(11, 2), 6, 7):
        assert h_eval(null, x) == F(1, 2)
    with pytest.raises(DomainError):
        h_eval(c, 12)


def test_h_matches_interpolation_oracle(small):
    rng = random.Random(3)
    fn = SvFunction(small, SvParams(F(3, 7), F(2, 9)))
    for m in range(2, 600):
        c = fn.coeffs(m)
        pts = oracle_knots(c)
        for _ in range(5):
            x = c.p_lo + F(rng.randint(0, 10**6), 10**6) * (c.p_hi - c.p_lo)
            assert h_eval(c, x) == interp(pts, x)


def test_integral_examples(small):
    assert interval_integral(interval_coeffs(small, 4, SvParams(F(1, 2)))) == 1
    assert interval_integral(interval_coeffs(small, 3)) == 1
    assert interval_integral(interval_coeffs(small, 5, SvParams(delta=F(1, 25)))) == 1


@settings(max_examples=200)
@given(
    m=st.integers(min_value=2, max_value=1200),
    eps=st.fractions(min_value=F(1, 10**6), max_value=F(999_999, 10**6)),
    delta=st.fractions(min_value=F(1, 10**6), max_value=F(999_999, 10**6)),
)
def test_unit_mass_any_params(m, eps, delta):
    t = _tables()
    c = interval_coeffs(t, m, SvParams(eps, delta))
    t_ = eps if c.case is Case.EPS else delta
    g = c.g_cur
    if c.case is Case.NULL:
        expected = g * c.b
    else:
        expected = t_ * (c.a + c.mid) / 2 + (g - t_) * (c.mid + c.b) / 2
    assert interval_integral(c) == expected == 1


_T = {}


def _tables():
    if "t" not in _T:
        _T["t"] = build_tables(10_000)
    return _T["t"]


# --- f and f' ---------------------------------------------------------------


def test_f_examples(fn_small):
    assert f_eval(fn_small, 0) == F(13, 32)
    assert f_eval(fn_small, 2) == 1
    assert f_eval(fn_small, 3) == 2
    assert f_eval(fn_small, 11) == 5
    # polynomial seams
    assert (4 * F(9, 4) + 12 * F(3, 2) + 39) / 96 == f_eval(fn_small, F(3, 2)) == F(11, 16)
    assert (3 * F(9, 4) - 8 * F(3, 2) + 8) / 4 == F(11, 16)


def test_f_at_primes_is_pi(fn_small, small):
    for m in range(2, small.count):
        assert f_eval(fn_small, small.nth_prime(m)) == m


def test_f_against_oracle_integral(fn_small, small):
    rng = random.Random(8)
    for _ in range(500):
        m = rng.randint(2, small.count - 1)
        c = fn_small.coeffs(m)
        x = c.p_lo + F(rng.randint(1, 10**6 - 1), 10**6) * c.g_cur
        pts = [p for p in oracle_knots(c) if p[0] <= x] + [(x, interp(oracle_knots(c), x))]
        area = sum((x1 - x0) * (y0 + y1) / 2 for (x0, y0), (x1, y1) in zip(pts, pts[1:]))
        assert f_eval(fn_small, x) == m + area


def test_f_prime_examples(small):
    fn = SvFunction(small)
    assert f_prime_eval(fn, 0) == F(1, 8)
    assert f_prime_eval(fn, 3) == 1 == fn.coeffs(2).left(F(3))
    assert fn.coeffs(2).a == F(1, small.gap(1)) == 1
    fn_half = SvFunction(small, SvParams(F(1, 2)))
    assert f_prime_eval(fn_half, F(15, 2)) == F(7, 32)


def test_c1_seams(fn_small, small):
    assert (2 * F(3, 2) + 3) / 24 == (6 * F(3, 2) - 8) / 4 == F(1, 4)
    assert (6 * 2 - 8) / 4 == 1
    for m in range(2, small.count - 2):
        p = F(small.nth_prime(m + 1))
        assert fn_small.coeffs(m).right(p) == F(1, small.gap(m)) == fn_small.coeffs(m + 1).left(p)


def test_domain_errors(fn_small, small):
    with pytest.raises(DomainError):
        f_eval(fn_small, -1)
    with pytest.raises(DomainError):
        f_eval(fn_small, small.largest_prime + F(1, 2))
    assert f_eval(fn_small, small.largest_prime) == small.count
    assert f_prime_eval(fn_small, small.largest_prime) == F(1, small.gap(small.count - 1))


@settings(max_examples=300)
@given(st.fractions(min_value=0, max_value=9973))
def test_floor_identity_property(x):
    t = _tables()
    fn = _fn()
    assert math.floor(fn.f(x)) == t.pi(math.floor(x))
    assert fn.f_prime(x) > 0


def _fn():
    if "fn" not in _T:
        _T["fn"] = SvFunction(_tables())
    return _T["fn"]


def test_monotone_on_grid(fn_small):
    xs = [F(k, 8) for k in range(0, 8 * 2000)]
    vals = [fn_small.f(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_finite_difference(fn_small, small):
    """Central differences agree with f' within 10 h |f''| away from seams."""
    rng = random.Random(21)
    h = F(1, 10**6)
    checked = 0
    while checked < 1000:
        x = F(rng.randint(0, small.largest_prime * 10**4), 10**4)
        seams = [F(3, 2), F(2), F(3)]
        if x > 3:
            m = small.pi(math.floor(x))
            if m + 1 > small.count - 1:
                continue
            c = fn_small.coeffs(m)
            seams += [F(c.p_lo), c.knot, F(c.p_hi)]
            curv = abs((c.left_line() if x <= c.knot else c.right_line())[0])
        elif x <= F(3, 2):
            curv = F(1, 12)
        elif x <= 2:
            curv = F(3, 2)
        else:
            curv = F(0)
        if x - h < 0 or any(abs(x - s) <= h for s in seams):
            continue
        fd = (fn_small.f(x + h) - fn_small.f(x - h)) / (2 * h)
        assert abs(fd - fn_small.f_prime(x)) <= 10 * h * curv
        checked += 1


def test_eq14_sandwich_samples(t6):
    fn = SvFunction(t6)
    big_m = default_big_m(cramer_stats(t6))
    rng = random.Random(4)
    for _ in range(3000):
        x = F(rng.randint(5 * 1024, (t6.largest_prime - 1) * 1024), 1024)
        d = fn.f_prime(x)
        p = t6.nth_prime(t6.pi(math.floor(x)))
        assert 1 / (big_m * math.log(p) ** 2) <= float(d)
        assert d <= F(51, 100)


# --- certification ----------------------------------------------------------


def test_check_construction_passes(small):
    fn = SvFunction(small)
    report = check_construction(fn, 1000, 5000, seed=1)
    assert report.ok, report.to_json()
    assert report.checks["unit_integral"].count == 999
    assert report.checks["floor_identity"].count == 5000


def test_check_construction_reproducible(small):
    a = check_construction(SvFunction(small), 300, 500, seed=9).to_json()
    b = check_construction(SvFunction(small), 300, 500, seed=9).to_json()
    assert a == b


def test_mutation_breaks_unit_integral(small):
    fn = SvFunction(small)
    c = fn.coeffs(4)
    assert c.case is Case.EPS
    fn._cache[4] = dataclasses.replace(c, mid=c.b)
    report = check_construction(fn, 100, 200, seed=0)
    assert not report.ok
    bad = report.checks["unit_integral"]
    assert bad.failures == 1
    assert bad.counterexample["m"] == "4"
    assert bad.counterexample["integral"] != "1"


def test_check_beyond_sieve(small):
    with pytest.raises(OutOfRangeError):
        check_construction(SvFunction(small), small.count, 10, seed=0)
