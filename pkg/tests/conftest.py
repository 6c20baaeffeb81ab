from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from topoconj.maps import Interval, make_map


def m(expr: str, lo: float, hi: float, **kw):
    return make_map(expr, Interval(lo, hi), **kw)


def dense_fixed_points(fn, lo, hi, n=1_000_000, touch=1e-7):
    """Independent fixed-point oracle on a dense grid of n+1 samples.

    Consecutive samples with |f(x) - x| < touch form runs. A run with sign
    changes contributes one brentq root per change; a run without one is a
    tangential point, refined by bounded minimisation of |f(x) - x|.
    Sign changes outside any run are refined with brentq as well.
    """
    xs = np.linspace(lo, hi, n + 1)
    d = fn(xs) - xs
    small = np.abs(d) < touch
    root = lambda t: fn(t) - t  # noqa: E731
    out = []

    def changes(i0, i1):
        idx = [i for i in range(i0, i1 + 1) if d[i] != 0.0]
        found = []
        for p, q in zip(idx, idx[1:]):
            if d[p] * d[q] < 0:
                found.append(brentq(root, xs[p], xs[q], xtol=1e-15))
        return found

    i = 0
    covered = np.zeros(n + 1, dtype=bool)
    while i <= n:
        if not small[i]:
            i += 1
            continue
        j = i
        while j + 1 <= n and small[j + 1]:
            j += 1
        a, b = max(i - 1, 0), min(j + 1, n)
        covered[a:b + 1] = True
        found = changes(a, b)
        if not found:
            seg = np.abs(d[i:j + 1])
            ties = np.flatnonzero(seg == seg.min())
            # a flat stretch of exact zeros stands for one point: take its middle
            k = i + int(ties[len(ties) // 2])
            if d[k] == 0.0:
                out.append(float(xs[k]))
                i = j + 1
                continue
            r = minimize_scalar(
                lambda t: abs(root(t)), bounds=(xs[max(k - 1, 0)], xs[min(k + 1, n)]),
                method="bounded", options={"xatol": 1e-15},
            )
            x = float(r.x) if abs(root(r.x)) <= abs(d[k]) else float(xs[k])
            if abs(root(x)) < 1e-12:
                found = [x]
        out.extend(found)
        i = j + 1
    s = np.sign(d)
    for c in np.flatnonzero(s[:-1] * s[1:] < 0):
        if not (covered[c] and covered[c + 1]):
            out.append(brentq(root, xs[c], xs[c + 1], xtol=1e-15))
    return sorted(out)


def closed_form_pair(k: int):
    return 2.0 ** -k, 3.0 ** -k


@pytest.fixture
def linear_pair():
    return m("x/2", 0, 1), m("x/3", 0, 1)


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
