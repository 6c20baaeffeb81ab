"""Numerical checks of a constructed conjugacy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .conjugacy import ConjugacyMap
from .errors import AllSamplesExcludedError, DomainError, OrbitEscapeError
from .maps import DOMAIN_SLACK, Interval, Orientation

__all__ = [
    "DEFAULT_EXCLUSION",
    "ResidualReport",
    "MonotonicityResult",
    "residual_report",
    "monotonicity_check",
    "orbit_check",
]

DEFAULT_EXCLUSION = 1e-4


@dataclass(frozen=True)
class ResidualReport:
    sup_residual: float
    mean_residual: float
    n_samples: int
    exclusion_radius: float
    worst_point: float

    def passes(self, tol: float) -> bool:
        return self.sup_residual <= tol

    def to_json(self, tol: Optional[float] = None) -> dict:
        return {
            "sup": self.sup_residual,
            "mean": self.mean_residual,
            "n": self.n_samples,
            "exclusion": self.exclusion_radius,
            "worst_x": self.worst_point,
            "pass": None if tol is None else self.passes(tol),
        }


def residual_report(
    c: ConjugacyMap,
    n: int = 10_000,
    exclusion: float = DEFAULT_EXCLUSION,
    h: Optional[Callable[[float], float]] = None,
    region: Optional[Sequence[Interval]] = None,
) -> ResidualReport:
    """Sup and mean of |g(h(x)) - h(f(x))| over a uniform grid.

    The grid covers the conjugacy's domain (or the given ``region``
    intervals). Points within ``exclusion`` of a pinned point, and points
    whose image leaves the domain, are dropped. ``h`` replaces the
    conjugacy's own evaluation, which is how corrupted candidates and
    closed-form guesses are checked.
    """
    if n < 100:
        raise ValueError("n must be at least 100")
    parts = list(region) if region is not None else [c.domain]
    dom = c.domain
    pins = np.array([p for p, _ in c.pins], dtype=float)
    per = max(2, n // len(parts))
    xs = np.concatenate([p.linspace(per) for p in parts])
    if pins.size:
        near = np.min(np.abs(xs[:, None] - pins[None, :]), axis=1) <= exclusion
        xs = xs[~near]
    fx = c.f.values(xs)
    keep = (fx >= dom.lo - DOMAIN_SLACK) & (fx <= dom.hi + DOMAIN_SLACK)
    xs, fx = xs[keep], np.clip(fx[keep], dom.lo, dom.hi)
    if h is None:
        hx, hfx = c.values(xs), c.values(fx)
    else:
        hx = np.array([h(float(x)) for x in xs])
        hfx = np.array([h(float(x)) for x in fx])
    gd = c.g.domain
    ok = (hx >= gd.lo - DOMAIN_SLACK) & (hx <= gd.hi + DOMAIN_SLACK)
    xs, hx, hfx = xs[ok], hx[ok], hfx[ok]
    if xs.size == 0:
        raise AllSamplesExcludedError(
            f"all samples excluded (exclusion {exclusion} vs domain [{dom.lo}, {dom.hi}])"
        )
    res = np.abs(c.g.values(np.clip(hx, gd.lo, gd.hi)) - hfx)
    where = xs
    r = np.asarray(res)
    i = int(np.argmax(r))
    return ResidualReport(float(r[i]), float(r.mean()), len(r), exclusion, float(where[i]))


@dataclass(frozen=True)
class MonotonicityResult:
    ok: bool
    pair: Optional[tuple[float, float]] = None

    def __bool__(self) -> bool:
        return self.ok


def monotonicity_check(
    c: ConjugacyMap,
    n: int = 1000,
    h: Optional[Callable[[float], float]] = None,
) -> MonotonicityResult:
    """Check h is strictly monotone, in c's orientation, on n sorted samples."""
    if n < 2:
        raise ValueError("n must be at least 2")
    xs = c.domain.linspace(n)
    ys = c.values(xs) if h is None else np.array([h(float(x)) for x in xs])
    dy = np.diff(ys)
    if c.orientation is Orientation.DECREASING:
        dy = -dy
    bad = np.flatnonzero(dy <= 0)
    if bad.size:
        i = int(bad[0])
        return MonotonicityResult(False, (float(xs[i]), float(xs[i + 1])))
    return MonotonicityResult(True)


def orbit_check(c: ConjugacyMap, x0: float, k: int) -> float:
    """max over j <= k of |h(f^j(x0)) - g^j(h(x0))|.

    Along repelling directions float error grows with j, so the tolerance
    is left to the caller.
    """
    x = x0
    y = c(x0)
    worst = 0.0
    for j in range(1, k + 1):
        try:
            x = c.f(x)
            y = c.g(y)
            hx = c(x)
        except DomainError as exc:
            raise OrbitEscapeError(f"orbit of {x0!r} left the domain at step {j}: {exc}", j) from exc
        worst = max(worst, abs(hx - y))
    return worst
