"""Fixed points, period-2 orbits and stability signatures of monotone maps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridTooCoarseError, HypothesisError, UnpairedPeriodTwoError
from .maps import DOMAIN_SLACK, Interval, MonotoneMap

__all__ = [
    "SideBehavior",
    "FixedPointKind",
    "FixedPoint",
    "StabilitySignature",
    "PeriodTwoOrbit",
    "find_fixed_points",
    "classify_fixed_point",
    "signature",
    "find_period2",
    "pair_period2",
    "second_iterate_domain",
    "fixed_point_report",
]

GRID_N = 4096
ROOT_TOL = 1e-12
TOUCH_TOL = 1e-7
PAIR_TOL = 1e-9
SUB_GRID = 1024

_EPS = np.finfo(float).eps


class SideBehavior(enum.Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"


class FixedPointKind(enum.Enum):
    TRANSVERSE = "transverse"
    MIXED = "mixed"


Side = Optional[SideBehavior]


@dataclass(frozen=True)
class FixedPoint:
    location: float
    left: Side
    right: Side

    @property
    def kind(self) -> FixedPointKind:
        if self.left is not None and self.right is not None and self.left != self.right:
            return FixedPointKind.MIXED
        return FixedPointKind.TRANSVERSE

    @property
    def stability(self) -> Side:
        """The common side behaviour of a transverse point, else None."""
        if self.kind is FixedPointKind.MIXED:
            return None
        return self.left or self.right

    def to_json(self) -> dict:
        return {
            "x": self.location,
            "left": self.left.value if self.left else None,
            "right": self.right.value if self.right else None,
            "kind": self.kind.value,
        }


def _flip_sign(s: Optional[int]) -> Optional[int]:
    return None if s is None else -s


@dataclass(frozen=True)
class StabilitySignature:
    """Ordered (left, right) behaviours of every fixed point of an increasing map.

    ``left_sign`` / ``right_sign`` give the sign of f(x) - x on the exterior
    segments beyond the first and last fixed point (None when the segment is
    empty). With no fixed points ``sign`` holds the constant sign of f(x) - x.
    """

    entries: tuple[tuple[Side, Side], ...]
    left_sign: Optional[int] = None
    right_sign: Optional[int] = None
    sign: Optional[int] = None

    @property
    def count(self) -> int:
        return len(self.entries)

    def reversed(self) -> "StabilitySignature":
        """Signature of the map conjugated by a reflection of its domain."""
        return StabilitySignature(
            tuple((r, l) for l, r in reversed(self.entries)),
            _flip_sign(self.right_sign),
            _flip_sign(self.left_sign),
            _flip_sign(self.sign),
        )

    def is_consistent(self) -> bool:
        for (_, right), (left, _) in zip(self.entries, self.entries[1:]):
            if right is None or left is None:
                return False
            if (right is SideBehavior.REPELLING) != (left is SideBehavior.ATTRACTING):
                return False
        return True

    def labels(self) -> list[list[Optional[str]]]:
        return [[l.value if l else None, r.value if r else None] for l, r in self.entries]


@dataclass(frozen=True)
class PeriodTwoOrbit:
    x_left: float
    x_right: float
    stability: SideBehavior

    def to_json(self) -> dict:
        return {"xl": self.x_left, "xr": self.x_right, "stability": self.stability.value}


def _bisect_root(d: Callable[[float], float], a: float, b: float, da: float) -> tuple[float, float]:
    """Refine a sign change of ``d`` on [a, b] until the bracket collapses."""
    while True:
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        dm = d(m)
        if dm == 0.0:
            return m, 0.0
        if (dm > 0) == (da > 0):
            a, da = m, dm
        else:
            b = m
    da, db = d(a), d(b)
    return (a, abs(da)) if abs(da) <= abs(db) else (b, abs(db))


def _ternary_min(d: Callable[[float], float], a: float, b: float, side: float = 0.0) -> float:
    """Minimise |d| on [a, b] by ternary search.

    With ``side`` = +1 or -1 the search minimises side*d instead, so a dip
    through zero is followed rather than stopping at the first root.
    """
    key = (lambda t: abs(d(t))) if side == 0.0 else (lambda t: side * d(t))
    for _ in range(300):
        if b - a <= 2 * _EPS * max(abs(a), abs(b)):
            break
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if m1 <= a or m2 >= b:
            break
        if key(m1) <= key(m2):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def _split_roots(d, d_vec, a: float, b: float, floor: float) -> list[tuple[float, float]]:
    """Sign changes of ``d`` on a fine grid over [a, b], ignoring values at rounding level."""
    xs = np.linspace(a, b, SUB_GRID + 1)
    ds = d_vec(xs)
    sig = np.flatnonzero(np.abs(ds) > floor)
    out = []
    for p, q in zip(sig[:-1], sig[1:]):
        if ds[p] * ds[q] < 0:
            out.append(_bisect_root(d, float(xs[p]), float(xs[q]), float(ds[p])))
    return out


def _scan_roots(
    d: Callable[[float], float],
    d_vec: Callable[[np.ndarray], np.ndarray],
    domain: Interval,
    grid_n: int,
    root_tol: float,
    touch_tol: float,
    scale: Callable[[float], float],
) -> list[tuple[float, float]]:
    """Roots of ``d`` on ``domain`` as (location, |d|), sorted and deduplicated."""
    xs = domain.linspace(grid_n + 1)
    ds = d_vec(xs)
    found: list[tuple[float, float]] = []

    for i in np.flatnonzero(ds == 0.0):
        found.append((float(xs[i]), 0.0))

    for i in np.flatnonzero(ds[:-1] * ds[1:] < 0):
        found.append(_bisect_root(d, float(xs[i]), float(xs[i + 1]), float(ds[i])))

    ad = np.abs(ds)
    sg = np.sign(ds)
    n = len(xs)
    for i in np.flatnonzero(ds == 0.0):
        # a grid zero whose neighbours agree in sign may hide a second root
        if 0 < i < n - 1 and sg[i - 1] == sg[i + 1] != 0:
            a, b = float(xs[i - 1]), float(xs[i + 1])
            found.extend(_split_roots(d, d_vec, a, b, 64 * _EPS * scale(float(xs[i]))))

    cand = (ad < touch_tol) & (ds != 0.0)
    for i in np.flatnonzero(cand):
        nbrs = [j for j in (i - 1, i + 1) if 0 <= j < n]
        if any(ad[j] < ad[i] or sg[j] != sg[i] for j in nbrs):
            continue
        a = float(xs[max(i - 1, 0)])
        b = float(xs[min(i + 1, n - 1)])
        # two transverse roots closer than the grid spacing look tangential
        # from outside; a fine rescan separates them
        split = _split_roots(d, d_vec, a, b, 64 * _EPS * scale(0.5 * (a + b)))
        if split:
            found.extend(split)
            continue
        xm = _ternary_min(d, a, b, float(sg[i]))
        dm = d(xm)
        if dm != 0.0 and np.sign(dm) != sg[i]:
            if abs(dm) > 64 * _EPS * scale(xm):
                raise GridTooCoarseError(
                    f"two roots inside grid cell [{a!r}, {b!r}]; increase grid_n"
                )
        if abs(dm) <= touch_tol:
            found.append((xm, abs(dm)))

    found.sort()
    merged: list[tuple[float, float]] = []
    for x, r in found:
        if merged and x - merged[-1][0] <= 2 * root_tol:
            if r < merged[-1][1]:
                merged[-1] = (x, r)
            continue
        merged.append((x, r))
    return merged


def _displacement(m: MonotoneMap):
    fn = m._raw

    def d(x: float) -> float:
        return fn(x) - x

    def d_vec(xs: np.ndarray) -> np.ndarray:
        return m.values(xs) - xs

    def scale(x: float) -> float:
        return abs(x) + abs(fn(x))

    return d, d_vec, scale


def second_iterate_domain(m: MonotoneMap) -> Interval:
    """The sub-interval of ``m.domain`` on which m(m(x)) is defined."""
    dom, img = m.domain, m.image
    if m.increasing:
        lo = dom.lo if dom.lo <= img.lo else m.inverse(dom.lo)
        hi = dom.hi if dom.hi >= img.hi else m.inverse(dom.hi)
    else:
        lo = dom.lo if dom.hi >= img.hi else m.inverse(dom.hi)
        hi = dom.hi if dom.lo <= img.lo else m.inverse(dom.lo)
    return Interval(lo, hi)


def _f2_roots(m: MonotoneMap, grid_n: int, root_tol: float, touch_tol: float) -> tuple[Interval, list]:
    s = second_iterate_domain(m)
    fn = m._raw

    def d(x: float) -> float:
        return fn(fn(x)) - x

    def d_vec(xs: np.ndarray) -> np.ndarray:
        return m.values(m.values(xs)) - xs

    def scale(x: float) -> float:
        return abs(x) + abs(fn(fn(x)))

    return s, _scan_roots(d, d_vec, s, grid_n, root_tol, touch_tol, scale)


def _probe_for(x: float, others: list[float], domain: Interval) -> float:
    gaps = [abs(x - o) for o in others if abs(x - o) > 0]
    probe = min(gaps) * 0.5 if gaps else domain.width / 4
    return min(probe, domain.width / 4)


def _side_probe(m: MonotoneMap, x_star: float, probe: float, direction: int) -> Optional[float]:
    dom = m.domain
    room = (x_star - dom.lo) if direction < 0 else (dom.hi - x_star)
    if room <= DOMAIN_SLACK:
        return None
    return min(probe / 2, room / 2)


def classify_fixed_point(m: MonotoneMap, x_star: float, probe: float) -> FixedPoint:
    """Left/right behaviour of the fixed point ``x_star``.

    Increasing maps: the sign of f(x) - x at ``x_star -/+ probe/2``.
    Decreasing maps: whether f(f(x)) lands closer to ``x_star`` than x on
    both probes (attracting) or not (repelling); such points are always
    transverse. A side is absent when ``x_star`` sits on that domain end.
    """
    if probe <= 0:
        raise ValueError("probe must be positive")
    fn = m._raw
    sides: dict[int, Side] = {}
    if m.increasing:
        for direction in (-1, 1):
            t = _side_probe(m, x_star, probe, direction)
            if t is None:
                sides[direction] = None
                continue
            for _ in range(40):
                dx = fn(x_star + direction * t) - (x_star + direction * t)
                if dx != 0.0:
                    break
                t /= 2
            else:
                raise HypothesisError(f"fixed point {x_star!r} is not isolated")
            # left side attracts when f pushes right (dx > 0); right side when dx < 0
            attracting = dx > 0 if direction < 0 else dx < 0
            sides[direction] = SideBehavior.ATTRACTING if attracting else SideBehavior.REPELLING
        return FixedPoint(x_star, sides[-1], sides[1])

    dom = m.domain
    attracting = True
    present = {}
    for direction in (-1, 1):
        t = _side_probe(m, x_star, probe, direction)
        present[direction] = t is not None
        if t is None:
            continue
        x = x_star + direction * t
        for _ in range(60):
            y = fn(x)
            if dom.contains(y):
                break
            t /= 2
            x = x_star + direction * t
        x2 = fn(fn(x))
        if not abs(x2 - x_star) < abs(x - x_star):
            attracting = False
    stab = SideBehavior.ATTRACTING if attracting else SideBehavior.REPELLING
    return FixedPoint(
        x_star, stab if present[-1] else None, stab if present[1] else None
    )


def find_fixed_points(
    m: MonotoneMap,
    grid_n: int = GRID_N,
    root_tol: float = ROOT_TOL,
    touch_tol: float = TOUCH_TOL,
) -> list[FixedPoint]:
    """All isolated fixed points of ``m``, ascending, classified.

    Transverse roots come from sign changes of f(x) - x on the grid, refined
    by bisection. Tangential roots (no sign change) come from grid-local
    minima of |f(x) - x| below ``touch_tol``, refined by ternary search.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    d, d_vec, scale = _displacement(m)
    roots = [x for x, _ in _scan_roots(d, d_vec, m.domain, grid_n, root_tol, touch_tol, scale)]
    neighbours = list(roots)
    if not m.increasing and roots:
        _, f2 = _f2_roots(m, grid_n, root_tol, touch_tol)
        neighbours += [x for x, _ in f2]
    return [classify_fixed_point(m, x, _probe_for(x, neighbours, m.domain)) for x in roots]


def _constant_sign(d: Callable[[float], float], a: float, b: float) -> int:
    return 1 if d(0.5 * (a + b)) > 0 else -1


def signature(m: MonotoneMap, fixed_points: list[FixedPoint] | None = None, **kwargs) -> StabilitySignature:
    """Stability signature of an increasing map."""
    if not m.increasing:
        raise ValueError("signature() needs an increasing map")
    fps = find_fixed_points(m, **kwargs) if fixed_points is None else fixed_points
    d, _, _ = _displacement(m)
    dom = m.domain
    if not fps:
        return StabilitySignature((), sign=_constant_sign(d, dom.lo, dom.hi))
    first, last = fps[0].location, fps[-1].location
    left_sign = _constant_sign(d, dom.lo, first) if first - dom.lo > DOMAIN_SLACK else None
    right_sign = _constant_sign(d, last, dom.hi) if dom.hi - last > DOMAIN_SLACK else None
    return StabilitySignature(tuple((p.left, p.right) for p in fps), left_sign, right_sign)


def _orbit_stability(m: MonotoneMap, x: float, neighbours: list[float], s: Interval) -> SideBehavior:
    fn = m._raw
    probe = _probe_for(x, neighbours, s)
    for direction in (-1, 1):
        room = (x - s.lo) if direction < 0 else (s.hi - x)
        if room <= DOMAIN_SLACK:
            continue
        t = min(probe / 2, room / 2)
        p = x + direction * t
        if not abs(fn(fn(p)) - x) < abs(p - x):
            return SideBehavior.REPELLING
    return SideBehavior.ATTRACTING


def pair_period2(
    m: MonotoneMap,
    candidates: list[float],
    pair_tol: float = PAIR_TOL,
) -> list[tuple[float, float]]:
    """Group period-2 candidates into orbits {x, m(x)}.

    Raises :class:`UnpairedPeriodTwoError` when m(x) does not land on another
    candidate within ``pair_tol``.
    """
    pts = sorted(candidates)
    used = [False] * len(pts)
    pairs = []
    for i, c in enumerate(pts):
        if used[i]:
            continue
        fc = m._raw(c)
        best, best_err = None, math.inf
        for j, o in enumerate(pts):
            if j != i and not used[j] and abs(o - fc) < best_err:
                best, best_err = j, abs(o - fc)
        if best is None or best_err > pair_tol:
            raise UnpairedPeriodTwoError(
                f"period-2 candidate {c!r} maps to {fc!r}, which matches no other candidate",
                c,
            )
        used[i] = used[best] = True
        pairs.append((min(c, pts[best]), max(c, pts[best])))
    return pairs


def find_period2(
    m: MonotoneMap,
    grid_n: int = GRID_N,
    root_tol: float = ROOT_TOL,
    touch_tol: float = TOUCH_TOL,
    pair_tol: float = PAIR_TOL,
) -> list[PeriodTwoOrbit]:
    """Period-2 orbits of a decreasing map, found as fixed points of m∘m."""
    if m.increasing:
        raise ValueError("find_period2() needs a decreasing map")
    s, roots = _f2_roots(m, grid_n, root_tol, touch_tol)
    fixed = [p.location for p in find_fixed_points(m, grid_n, root_tol, touch_tol)]
    fn = m._raw
    cands = [
        x for x, _ in roots
        if not any(abs(x - z) <= 2 * root_tol for z in fixed) and abs(fn(x) - x) > 10 * root_tol
    ]
    neighbours = [x for x, _ in roots]
    orbits = []
    for xl, xr in pair_period2(m, cands, pair_tol):
        orbits.append(PeriodTwoOrbit(xl, xr, _orbit_stability(m, xr, neighbours, s)))
    return orbits


def fixed_point_report(
    m: MonotoneMap,
    fixed_points: list[FixedPoint],
    period2: list[PeriodTwoOrbit] | None = None,
) -> dict:
    return {
        "map": str(m),
        "domain": m.domain.as_list(),
        "fixed_points": [p.to_json() for p in fixed_points],
        "period2": [o.to_json() for o in (period2 or [])],
    }
