from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import m
from topoconj.conjugacy import Anchor, ConjugacyMap, build_between, build_flip, build_full
from topoconj.maps import Interval
from topoconj.errors import AllSamplesExcludedError, OrbitEscapeError
from topoconj.verify import monotonicity_check, orbit_check, residual_report


@pytest.fixture(scope="module")
def lin():
    return build_full(m("x/2", 0, 1), m("x/3", 0, 1), anchors=Anchor(1.0, 1.0))


@pytest.fixture(scope="module")
def flip():
    return build_flip(m("-1.04*x+x^3", -0.5, 0.5), m("-1.09*x+x^3", -0.5, 0.5))


def test_linear_pair_residual(lin):
    r = residual_report(lin, n=10_000, exclusion=1e-4)
    assert r.sup_residual <= 1e-10
    assert r.sup_residual >= r.mean_residual >= 0
    assert 9000 < r.n_samples <= 10_000


def test_identity_residual_is_rounding():
    f = m("x+0.25*x*(1-x)", 0, 1)
    c = build_full(f, f)
    r = residual_report(c)
    # rounding level: a few ulps of the unit-size domain
    assert r.sup_residual <= 8 * np.finfo(float).eps


def test_bump_is_detected(lin):
    xs = lin.domain.linspace(10_000)
    x0 = float(xs[1234])
    bumped = lambda x: lin(x) + (0.01 if abs(x - x0) < 1e-12 else 0.0)  # noqa: E731
    r = residual_report(lin, h=bumped)
    assert r.sup_residual >= 0.005
    assert r.worst_point == pytest.approx(2 * x0, abs=1e-12) or r.worst_point == pytest.approx(x0, abs=1e-12)


def test_reordered_samples_flagged(lin):
    xs = lin.domain.linspace(1000)
    x1, x2 = float(xs[100]), float(xs[200])
    swap = {x1: lin(x2), x2: lin(x1)}
    res = monotonicity_check(lin, h=lambda x: swap.get(x, lin(x)))
    assert not res.ok
    assert res.pair[0] in (float(xs[99]), x1, float(xs[199]), x2)


def test_corrupted_segment_ordering_flagged():
    f = m("x+0.25*x-x^3", -0.5, 0.5)
    good = build_full(f, f)
    assert monotonicity_check(good).ok
    # the left segment is paired with the right target segment
    s1 = build_between(f, f, Interval(-0.5, 0), Interval(0, 0.5))
    s2 = build_between(f, f, Interval(0, 0.5), Interval(0, 0.5))
    bad = ConjugacyMap.from_segments(f, f, [s1, s2])
    res = monotonicity_check(bad)
    assert not res.ok and res.pair[0] >= -1e-3


def test_wrong_pairing_flagged(lin):
    # the same segments checked against a different target map
    other = ConjugacyMap(lin.f, m("x/4", 0, 1), lin.segments)
    assert residual_report(other).sup_residual > 1e-3


def test_reversed_build_passes_decreasing():
    c = build_full(m("x+x^2", -0.4, 0.4), m("x-x^2", -0.4, 0.4))
    assert monotonicity_check(c, n=1000).ok


def test_all_samples_excluded(lin):
    with pytest.raises(AllSamplesExcludedError):
        residual_report(lin, exclusion=2.0)


def test_sample_minimum(lin):
    with pytest.raises(ValueError):
        residual_report(lin, n=10)
    with pytest.raises(ValueError):
        monotonicity_check(lin, n=1)


def test_orbit_check_linear(lin):
    assert orbit_check(lin, 1.0, 20) <= 1e-9
    # oracle: h(2^-j) = 3^-j exactly along the anchor orbit
    for j in range(20):
        assert abs(lin(2.0**-j) - 3.0**-j) <= 1e-15


def test_orbit_check_flip(flip):
    assert orbit_check(flip, 0.1, 10) <= 1e-6


def test_orbit_check_anchor_orbit(lin):
    a = lin.anchors[0].a
    assert orbit_check(lin, a, 20) <= 1e-6


def test_orbit_escape_reports_step():
    c = build_full(m("2*x", 0, 1), m("3*x", 0, 1))
    with pytest.raises(OrbitEscapeError) as exc:
        orbit_check(c, 0.3, 5)
    assert exc.value.step == 2


def test_report_json(lin):
    d = residual_report(lin).to_json(1e-9)
    d = json.loads(json.dumps(d))
    assert set(d) == {"sup", "mean", "n", "exclusion", "worst_x", "pass"}
    assert d["pass"] is True
    assert residual_report(lin).to_json()["pass"] is None
