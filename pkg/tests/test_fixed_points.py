from __future__ import annotations

import json

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import dense_fixed_points, m
from topoconj.errors import GridTooCoarseError, UnpairedPeriodTwoError
from topoconj.fixed_points import (
    FixedPointKind,
    SideBehavior,
    classify_fixed_point,
    find_fixed_points,
    find_period2,
    fixed_point_report,
    pair_period2,
    signature,
)
from topoconj.maps import Interval, make_map

A, R = SideBehavior.ATTRACTING, SideBehavior.REPELLING

# maps used for oracle comparison: (expression, lo, hi)
CORPUS = [
    ("x+0.1-x^2", -0.45, 0.45),
    ("x+x^2", -0.4, 0.4),
    ("x+x^4", -0.5, 0.5),
    ("x-x^3", -0.5, 0.5),
    ("x+x^3", -1, 1),
    ("x+0.25*x-x^3", -0.6, 0.6),
    ("x/2+0.1", -1, 1),
    ("x-0.01-x^2", -0.4, 0.4),
    ("x-x^2", -0.4, 0.4),
    ("x+0.3*(x-0.2)*(x+0.3)", -0.8, 0.8),
]


def _py(expr):
    return eval("lambda x: " + expr.replace("^", "**"))


@pytest.mark.parametrize("expr, lo, hi", CORPUS)
def test_matches_dense_oracle(expr, lo, hi):
    want = dense_fixed_points(_py(expr), lo, hi)
    got = [p.location for p in find_fixed_points(m(expr, lo, hi))]
    assert len(got) == len(want)
    assert np.allclose(got, want, rtol=0, atol=1e-8)


def test_two_transverse_points():
    # [-1, 0.5]: the map turns over at 0.5, so the domain stops there
    fps = find_fixed_points(m("x+0.25-x^2", -1, 0.5))
    assert [p.location for p in fps] == pytest.approx([-0.5, 0.5], abs=1e-12)
    assert (fps[0].left, fps[0].right, fps[0].kind) == (R, R, FixedPointKind.TRANSVERSE)
    # 0.5 is the right endpoint: only its left side is classified
    assert (fps[1].left, fps[1].right, fps[1].kind) == (A, None, FixedPointKind.TRANSVERSE)


def test_mixed_point():
    # x + x^2 turns over at -0.5, so stay inside (-0.5, 0.5)
    (p,) = find_fixed_points(m("x+x^2", -0.4, 0.4))
    assert p.location == pytest.approx(0.0, abs=1e-7)
    assert (p.left, p.right, p.kind) == (A, R, FixedPointKind.MIXED)


def test_non_hyperbolic_transverse_point():
    (p,) = find_fixed_points(m("x+x^3", -1, 1))
    assert p.location == pytest.approx(0.0, abs=1e-7)
    assert (p.left, p.right, p.kind) == (R, R, FixedPointKind.TRANSVERSE)


@pytest.mark.parametrize(
    "expr, lo, hi, probe, left, right",
    [
        ("x/2", -1, 1, 0.1, A, A),
        ("x+x^2", -0.4, 0.4, 0.1, A, R),
        ("-1.04*x+x^3", -0.5, 0.5, 0.05, R, R),
        ("-x/2", -1, 1, 0.1, A, A),
    ],
)
def test_classify_fixed_point(expr, lo, hi, probe, left, right):
    p = classify_fixed_point(m(expr, lo, hi), 0.0, probe)
    assert (p.left, p.right) == (left, right)


def test_decreasing_repelling_oracle():
    # iterate f^2 from +-0.05 and watch the orbit leave 0
    f = m("-1.04*x+x^3", -0.5, 0.5)
    for x in (-0.05, 0.05):
        y = x
        for _ in range(20):
            y = f(f(y))
        assert abs(y) > abs(x)


def test_endpoint_side_absent():
    p = classify_fixed_point(m("x/2", 0, 1), 0.0, 0.1)
    assert p.left is None and p.right is A


def test_signature_examples():
    s = signature(m("x+0.25-x^2", -1, 0.5))
    assert [e[0] for e in s.entries] == [R, A]
    s = signature(m("x/2", -1, 1))
    assert s.entries == ((A, A),)
    s = signature(m("x+0.25*x-x^3", -0.6, 0.6))
    assert s.entries == ((A, A), (R, R), (A, A))
    assert s.left_sign == 1 and s.right_sign == -1


def test_signature_consistency_over_corpus():
    for expr, lo, hi in CORPUS:
        f = m(expr, lo, hi)
        fps = find_fixed_points(f)
        s = signature(f, fps)
        assert s.is_consistent()
        # oracle: sign of f(x) - x between neighbours fixes both facing sides
        for p, q in zip(fps, fps[1:]):
            mid = 0.5 * (p.location + q.location)
            up = _py(expr)(mid) > mid
            assert (p.right is R) == up
            assert (q.left is A) == up


def test_signature_reversal():
    s = signature(m("x+x^2", -0.4, 0.4))
    r = s.reversed()
    assert r.entries == ((R, A),)
    assert signature(m("x-x^2", -0.4, 0.4)).entries == r.entries


def test_zero_fixed_points():
    s = signature(m("x-0.01-x^2", -0.4, 0.4))
    assert s.count == 0 and s.sign == -1


def test_decreasing_maps_are_transverse():
    for expr in ("-1.04*x+x^3", "-0.96*x-x^3", "-x/2", "-x-x^3"):
        for p in find_fixed_points(m(expr, -0.5, 0.5)):
            assert p.kind is FixedPointKind.TRANSVERSE


def _f2_oracle(fn, lo, hi):
    """Period-2 points via brentq on a dense grid of f(f(x)) - x, fixed points removed."""
    xs = np.linspace(lo, hi, 200_001)
    d = fn(fn(xs)) - xs
    pts = [float(x) for x in xs[d == 0.0] if abs(fn(x) - x) > 1e-9]
    for i in np.flatnonzero(d[:-1] * d[1:] < 0):
        r = brentq(lambda t: fn(fn(t)) - t, xs[i], xs[i + 1], xtol=1e-15)
        if abs(fn(r) - r) > 1e-9:
            pts.append(r)
    return sorted(pts)


@pytest.mark.parametrize(
    "expr, stability",
    [("-1.04*x+x^3", A), ("-0.96*x-x^3", R)],
)
def test_period_two_orbits(expr, stability):
    f = m(expr, -0.5, 0.5)
    (o,) = find_period2(f)
    want = _f2_oracle(_py(expr), -0.5, 0.5)
    assert [o.x_left, o.x_right] == pytest.approx(want, abs=1e-9)
    assert [o.x_left, o.x_right] == pytest.approx([-0.2, 0.2], abs=1e-9)
    assert o.stability is stability
    assert abs(f(o.x_left) - o.x_right) <= 1e-11
    assert abs(f(o.x_right) - o.x_left) <= 1e-11


def test_period_two_stability_oracle():
    # repelling orbit: f^2 pushes 0.2 +- 0.01 away from 0.2
    f = m("-0.96*x-x^3", -0.5, 0.5)
    for x in (0.19, 0.21):
        assert abs(f(f(x)) - 0.2) > abs(x - 0.2)


def test_no_period_two_for_linear_flip():
    assert find_period2(m("-x/2", -1, 1)) == []


def test_unpaired_candidate_is_reported():
    f = m("-1.04*x+x^3", -0.5, 0.5)
    with pytest.raises(UnpairedPeriodTwoError):
        pair_period2(f, [-0.2, 0.2, 0.3])
    assert pair_period2(f, [0.2, -0.2]) == [(-0.2, 0.2)]


def test_grid_too_coarse():
    # two roots 2e-6 apart sit in one cell of a 64-point grid
    c = 0.309375 + 1e-4
    f = make_map(lambda x: x + (x - c) ** 2 - 1e-12, Interval(-0.15, 0.45))
    with pytest.raises(GridTooCoarseError):
        find_fixed_points(f, grid_n=64)
    got = [p.location for p in find_fixed_points(f)]
    assert got == pytest.approx([c - 1e-6, c + 1e-6], abs=1e-8)


def test_grid_minimum():
    with pytest.raises(ValueError):
        find_fixed_points(m("x/2", 0, 1), grid_n=32)


def test_report_json_fields():
    f = m("-1.04*x+x^3", -0.5, 0.5)
    rep = fixed_point_report(f, find_fixed_points(f), find_period2(f))
    rep = json.loads(json.dumps(rep))
    assert set(rep) == {"map", "domain", "fixed_points", "period2"}
    assert set(rep["fixed_points"][0]) == {"x", "left", "right", "kind"}
    assert set(rep["period2"][0]) == {"xl", "xr", "stability"}
