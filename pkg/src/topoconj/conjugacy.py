"""Construction and evaluation of conjugacies h with g∘h = h∘f.

Every piece of a conjugacy is described the same way: a step map F (f or
its inverse) and its partner G, a fundamental domain D0 between a point u0
and u1 = F^p(u0) (p = 2 for decreasing maps), and a seed h0 sending u0 to
the matching g-side point v0 and u1 to v1 = G^p(v0). A point x is pulled
into D0 by counting steps n with x = F^n(y), and then

    h(x) = G^n(h0(y)),

which is the usual extension h_n = g^n ∘ h0 ∘ f^-n written for whichever
of f, f^-1 the segment iterates with. Because G^n h0 F^-n is the same
expression whether F is f or f^-1, all configurations (attracting or
repelling sides, between two fixed points, flip orbits) share one
evaluation loop.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, HypothesisError, SignatureMismatchError
from .fixed_points import (
    FixedPoint,
    SideBehavior,
    StabilitySignature,
    find_fixed_points,
    find_period2,
    signature,
)
from .maps import DOMAIN_SLACK, Interval, MonotoneMap, Orientation, inverse_map, reflect

__all__ = [
    "Rule",
    "SegmentSide",
    "Anchor",
    "FundamentalSeed",
    "SegmentConjugacy",
    "ConjugacyMap",
    "seed_linear",
    "seed_cubic",
    "build_one_sided",
    "build_between",
    "build_full",
    "build_flip",
    "evaluate_h",
    "evaluate_h_inverse",
]

MAX_STEPS = 10_000
SNAP_TOL = 1e-11
FIXED_TOL = 1e-9
HYPOTHESIS_GRID = 256


class Rule(enum.Enum):
    ONE_SIDED_FORWARD = "one_sided_forward"
    ONE_SIDED_BACKWARD = "one_sided_backward"
    TWO_SIDED = "two_sided"
    FLIP_TWO_SIDED = "flip_two_sided"
    FLIP_OUTSIDE = "flip_outside"
    FLIP_COLLAPSED = "flip_collapsed"
    FREE = "free"


class SegmentSide(enum.Enum):
    """Where a one-sided segment lies relative to its fixed point."""

    LEFT_OF_FIXED = "left"
    RIGHT_OF_FIXED = "right"


@dataclass(frozen=True)
class Anchor:
    a: float
    b: float


@dataclass(frozen=True)
class FundamentalSeed:
    """Monotone correspondence between a fundamental domain and its image.

    ``kappa = 0`` is the affine seed; ``0 < kappa < 1`` blends in the
    smoothstep cubic 3t^2 - 2t^3, which keeps the endpoints and stays
    strictly monotone.
    """

    domain: Interval
    image: Interval
    orientation: Orientation
    kappa: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.kappa < 1.0:
            raise ValueError("kappa must lie in [0, 1)")

    def _phi(self, t: float) -> float:
        k = self.kappa
        return (1 - k) * t + k * t * t * (3 - 2 * t)

    def __call__(self, x: float) -> float:
        d, im = self.domain, self.image
        if x <= d.lo:
            t = 0.0
        elif x >= d.hi:
            t = 1.0
        else:
            t = (x - d.lo) / d.width
        s = self._phi(t)
        if self.orientation is Orientation.DECREASING:
            s = 1.0 - s
        if s == 0.0:
            return im.lo
        if s == 1.0:
            return im.hi
        return im.lo + im.width * s

    def inverse(self, y: float) -> float:
        d, im = self.domain, self.image
        s = min(max((y - im.lo) / im.width, 0.0), 1.0)
        if self.orientation is Orientation.DECREASING:
            s = 1.0 - s
        if s == 0.0:
            return d.lo
        if s == 1.0:
            return d.hi
        if self.kappa == 0.0:
            t = s
        else:
            lo, hi = 0.0, 1.0
            while True:
                t = 0.5 * (lo + hi)
                if t == lo or t == hi:
                    break
                if self._phi(t) < s:
                    lo = t
                else:
                    hi = t
        return d.lo + d.width * t


    def values(self, xs) -> np.ndarray:
        d, im = self.domain, self.image
        t = np.clip((np.asarray(xs, dtype=float) - d.lo) / d.width, 0.0, 1.0)
        k = self.kappa
        s = (1 - k) * t + k * t * t * (3 - 2 * t)
        if self.orientation is Orientation.DECREASING:
            s = 1.0 - s
        return np.where(s == 0.0, im.lo, np.where(s == 1.0, im.hi, im.lo + im.width * s))

    def inverse_values(self, ys) -> np.ndarray:
        return np.array([self.inverse(float(y)) for y in np.asarray(ys, dtype=float)])


def seed_linear(D0: Interval, D0p: Interval, orientation: Orientation) -> FundamentalSeed:
    return FundamentalSeed(D0, D0p, orientation)


def seed_cubic(D0: Interval, D0p: Interval, orientation: Orientation, kappa: float = 0.5) -> FundamentalSeed:
    return FundamentalSeed(D0, D0p, orientation, kappa)


_SEED_KAPPA = {"linear": 0.0, "cubic": 0.5}


def _seed_through(u0: float, u1: float, v0: float, v1: float, seed: str) -> FundamentalSeed:
    if u0 == u1 or v0 == v1:
        raise HypothesisError("degenerate fundamental domain: the anchor is a fixed point")
    orient = Orientation.INCREASING if (u1 - u0) * (v1 - v0) > 0 else Orientation.DECREASING
    return FundamentalSeed(
        Interval(min(u0, u1), max(u0, u1)),
        Interval(min(v0, v1), max(v0, v1)),
        orient,
        _SEED_KAPPA[seed],
    )


def _run_chain(
    x: float,
    step: MonotoneMap,
    out: MonotoneMap,
    seed: Callable[[float], float],
    u0: float,
    u1: float,
    period: int,
    pivot: Optional[float],
    max_steps: int,
) -> Optional[float]:
    """Pull x into [u0, u1] with ``step``, apply ``seed``, push out with ``out``.

    Returns None when ``max_steps`` is exhausted (saturation).
    """
    n = 0
    y = x
    if pivot is not None and (y - pivot) * (u0 - pivot) < 0:
        y = step.inverse(y)
        n = 1
    s = 1.0 if u1 > u0 else -1.0
    moved = 0
    for _ in range(max_steps + 1):
        if (y - u1) * s > 0:
            if moved < 0:
                y = u1
                break
            for _ in range(period):
                y = step.inverse(y)
            n += period
            moved = 1
        elif (y - u0) * s < 0:
            if moved > 0:
                y = u0
                break
            for _ in range(period):
                y = step(y)
            n -= period
            moved = -1
        else:
            break
        if abs(n) > max_steps:
            return None
    w = seed(y)
    if n > 0:
        for _ in range(n):
            w = out(w)
    else:
        for _ in range(-n):
            w = out.inverse(w)
    return w


def _run_chain_vec(
    xs: np.ndarray,
    step: MonotoneMap,
    out: MonotoneMap,
    seed: Callable[[np.ndarray], np.ndarray],
    u0: float,
    u1: float,
    period: int,
    pivot: Optional[float],
    max_steps: int,
) -> np.ndarray:
    """Array version of :func:`_run_chain`; saturated entries come back as NaN."""
    y = np.array(xs, dtype=float)
    n = np.zeros(y.size, dtype=np.int64)
    if pivot is not None:
        m = (y - pivot) * (u0 - pivot) < 0
        if m.any():
            y[m] = step.inverse_values(y[m])
            n[m] = 1
    s = 1.0 if u1 > u0 else -1.0
    moved = np.zeros(y.size, dtype=np.int8)
    saturated = np.zeros(y.size, dtype=bool)
    limit = max_steps
    # k holds the entries still walking; it only ever shrinks
    k = np.arange(y.size)
    while k.size:
        yk = y[k]
        beyond = (yk - u1) * s > 0
        before = (yk - u0) * s < 0
        clamp_hi = beyond & (moved[k] < 0)
        clamp_lo = before & (moved[k] > 0)
        y[k[clamp_hi]] = u1
        y[k[clamp_lo]] = u0
        beyond &= ~clamp_hi
        before &= ~clamp_lo
        kb, kf = k[beyond], k[before]
        if kb.size:
            v = y[kb]
            for _ in range(period):
                v = step.inverse_values(v)
            y[kb] = v
            n[kb] += period
            moved[kb] = 1
        if kf.size:
            v = y[kf]
            for _ in range(period):
                v = step.values(v)
            y[kf] = v
            n[kf] -= period
            moved[kf] = -1
        k = k[beyond | before]
        over = np.abs(n[k]) > limit
        saturated[k[over]] = True
        k = k[~over]
    w = seed(y)
    todo = np.flatnonzero(~saturated)
    up, down = todo[n[todo] > 0], todo[n[todo] < 0]
    j = 0
    while up.size or down.size:
        if up.size:
            w[up] = out.values(w[up])
        if down.size:
            w[down] = out.inverse_values(w[down])
        j += 1
        up = up[n[up] > j]
        down = down[-n[down] > j]
    w[saturated] = np.nan
    return w


@dataclass(frozen=True)
class SegmentConjugacy:
    """One piece of a conjugacy, in the working coordinates of f.

    ``f_parts`` / ``g_parts`` are the intervals the piece covers (two of
    them for the outside region of a flip orbit). ``fixed_point_images``
    pins fixed and period-2 points exactly.
    """

    f_segment: Interval
    g_segment: Interval
    seed: FundamentalSeed
    direction_rule: Rule
    fixed_point_images: tuple[tuple[float, float], ...]
    anchor: Anchor
    step_f: MonotoneMap = field(repr=False)
    step_g: MonotoneMap = field(repr=False)
    u1: float = 0.0
    v1: float = 0.0
    period: int = 1
    f_parts: tuple[Interval, ...] = ()
    g_parts: tuple[Interval, ...] = ()
    pivot: Optional[tuple[float, float]] = None

    @property
    def orientation(self) -> Orientation:
        return self.seed.orientation

    def covers_f(self, x: float) -> bool:
        return any(p.contains(x, DOMAIN_SLACK) for p in self.f_parts)

    def covers_g(self, y: float) -> bool:
        return any(p.contains(y, DOMAIN_SLACK) for p in self.g_parts)

    def forward(self, x: float, max_steps: int = MAX_STEPS) -> float:
        v = _run_chain(
            x, self.step_f, self.step_g, self.seed, self.anchor.a, self.u1,
            self.period, self.pivot[0] if self.pivot else None, max_steps,
        )
        if v is None:
            return min(self.fixed_point_images, key=lambda p: abs(p[0] - x))[1]
        return v

    def backward(self, y: float, max_steps: int = MAX_STEPS) -> float:
        v = _run_chain(
            y, self.step_g, self.step_f, self.seed.inverse, self.anchor.b, self.v1,
            self.period, self.pivot[1] if self.pivot else None, max_steps,
        )
        if v is None:
            return min(self.fixed_point_images, key=lambda p: abs(p[1] - y))[0]
        return v

    def _fill_saturated(self, src: np.ndarray, w: np.ndarray, col: int) -> np.ndarray:
        bad = np.isnan(w)
        if bad.any():
            pins = np.array(self.fixed_point_images, dtype=float)
            j = np.argmin(np.abs(src[bad, None] - pins[None, :, col]), axis=1)
            w[bad] = pins[j, 1 - col]
        return w

    def forward_values(self, xs: np.ndarray, max_steps: int = MAX_STEPS) -> np.ndarray:
        w = _run_chain_vec(
            xs, self.step_f, self.step_g, self.seed.values, self.anchor.a, self.u1,
            self.period, self.pivot[0] if self.pivot else None, max_steps,
        )
        return self._fill_saturated(xs, w, 0)

    def backward_values(self, ys: np.ndarray, max_steps: int = MAX_STEPS) -> np.ndarray:
        w = _run_chain_vec(
            ys, self.step_g, self.step_f, self.seed.inverse_values, self.anchor.b, self.v1,
            self.period, self.pivot[1] if self.pivot else None, max_steps,
        )
        return self._fill_saturated(ys, w, 1)

    def covers_f_values(self, xs: np.ndarray) -> np.ndarray:
        m = np.zeros(xs.shape, dtype=bool)
        for p in self.f_parts:
            m |= (xs >= p.lo - DOMAIN_SLACK) & (xs <= p.hi + DOMAIN_SLACK)
        return m

    def covers_g_values(self, ys: np.ndarray) -> np.ndarray:
        m = np.zeros(ys.shape, dtype=bool)
        for p in self.g_parts:
            m |= (ys >= p.lo - DOMAIN_SLACK) & (ys <= p.hi + DOMAIN_SLACK)
        return m

    def piece(self, x: float, n: int) -> float:
        """Evaluate the n-th piece G^n ∘ h0 ∘ F^-n at x without locating n."""
        y = self.step_f.iterate(x, -n)
        w = self.seed(y)
        return self.step_g.iterate(w, n)


def _hull(parts: Sequence[Interval]) -> Interval:
    return Interval(min(p.lo for p in parts), max(p.hi for p in parts))


@dataclass(frozen=True)
class ConjugacyMap:
    """A constructed conjugacy h from f to g.

    When ``reversed`` is set the segments were built for the reflection
    r∘f∘r (r(x) = lo + hi - x on f's domain) and h = h_r ∘ r is decreasing.
    """

    f: MonotoneMap
    g: MonotoneMap
    segments: tuple[SegmentConjugacy, ...]
    reversed: bool = False
    max_steps: int = MAX_STEPS
    snap_tol: float = SNAP_TOL

    @classmethod
    def from_segments(cls, f, g, segments, reversed=False, max_steps=MAX_STEPS, snap_tol=SNAP_TOL):
        return cls(f, g, tuple(segments), reversed, max_steps, snap_tol)

    def _to_work(self, x: float) -> float:
        if not self.reversed:
            return x
        return self.f.domain.lo + self.f.domain.hi - x

    _from_work = _to_work

    @property
    def domain(self) -> Interval:
        h = _hull([p for s in self.segments for p in s.f_parts])
        if not self.reversed:
            return h
        return Interval(self._from_work(h.hi), self._from_work(h.lo))

    @property
    def image(self) -> Interval:
        return _hull([p for s in self.segments for p in s.g_parts])

    @property
    def orientation(self) -> Orientation:
        seg = self.segments[0].orientation
        if self.reversed:
            return seg.compose(Orientation.DECREASING)
        return seg

    @property
    def pins(self) -> list[tuple[float, float]]:
        """Pinned (x_f, x_g) pairs in the original coordinates of f."""
        seen = {}
        for s in self.segments:
            for xf, yg in s.fixed_point_images:
                seen[self._from_work(xf)] = yg
        return sorted(seen.items())

    @property
    def anchors(self) -> list[Anchor]:
        return [Anchor(self._from_work(s.anchor.a), s.anchor.b) for s in self.segments]

    def __call__(self, x: float) -> float:
        return evaluate_h(self, x)

    def inverse(self, y: float) -> float:
        return evaluate_h_inverse(self, y)

    def values(self, xs) -> np.ndarray:
        """h on an array of points; all chains are advanced in lockstep."""
        xs = np.asarray(xs, dtype=float)
        dom = self.domain
        if np.any((xs < dom.lo - DOMAIN_SLACK) | (xs > dom.hi + DOMAIN_SLACK)):
            raise DomainError(f"points outside the conjugacy domain [{dom.lo}, {dom.hi}]")
        xs = np.clip(xs, dom.lo, dom.hi)
        out = np.full(xs.shape, np.nan)
        done = np.zeros(xs.shape, dtype=bool)
        for xf, yg in self.pins:
            m = ~done & (np.abs(xs - xf) <= self.snap_tol)
            out[m] = yg
            done |= m
        xw = self._to_work(xs)
        for seg in self.segments:
            m = ~done & seg.covers_f_values(xw)
            if m.any():
                out[m] = seg.forward_values(xw[m], self.max_steps)
                done |= m
        if not done.all():
            raise DomainError("some points are not covered by any segment")
        return out

    def inverse_values(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        img = self.image
        if np.any((ys < img.lo - DOMAIN_SLACK) | (ys > img.hi + DOMAIN_SLACK)):
            raise DomainError(f"points outside the conjugacy image [{img.lo}, {img.hi}]")
        ys = np.clip(ys, img.lo, img.hi)
        out = np.full(ys.shape, np.nan)
        done = np.zeros(ys.shape, dtype=bool)
        for xf, yg in self.pins:
            m = ~done & (np.abs(ys - yg) <= self.snap_tol)
            out[m] = xf
            done |= m
        for seg in self.segments:
            m = ~done & seg.covers_g_values(ys)
            if m.any():
                out[m] = self._from_work(seg.backward_values(ys[m], self.max_steps))
                done |= m
        if not done.all():
            raise DomainError("some points are not covered by any segment")
        return out

    def metadata(self) -> dict:
        return {
            "f": str(self.f),
            "g": str(self.g),
            "segments": len(self.segments),
            "reversed": self.reversed,
            "anchors": [{"a": a.a, "b": a.b} for a in self.anchors],
            "max_steps": self.max_steps,
            "snap_tol": self.snap_tol,
        }


def evaluate_h(c: ConjugacyMap, x: float) -> float:
    """h(x): snap to pinned points, else locate the segment and run its chain."""
    dom = c.domain
    if not dom.contains(x, DOMAIN_SLACK):
        raise DomainError(f"x={x!r} outside the conjugacy domain [{dom.lo}, {dom.hi}]")
    x = dom.clamp(x)
    for xf, yg in c.pins:
        if abs(x - xf) <= c.snap_tol:
            return yg
    xw = c._to_work(x)
    for seg in c.segments:
        if seg.covers_f(xw):
            return seg.forward(xw, c.max_steps)
    raise DomainError(f"x={x!r} is not covered by any segment")


def evaluate_h_inverse(c: ConjugacyMap, y: float) -> float:
    img = c.image
    if not img.contains(y, DOMAIN_SLACK):
        raise DomainError(f"y={y!r} outside the conjugacy image [{img.lo}, {img.hi}]")
    y = img.clamp(y)
    for xf, yg in c.pins:
        if abs(y - yg) <= c.snap_tol:
            return xf
    for seg in c.segments:
        if seg.covers_g(y):
            return c._from_work(seg.backward(y, c.max_steps))
    raise DomainError(f"y={y!r} is not covered by any segment")


# -- hypothesis checks ------------------------------------------------------

def _displacement_signs(m: MonotoneMap, seg: Interval, iterate: int = 1) -> set[int]:
    xs = np.linspace(seg.lo, seg.hi, HYPOTHESIS_GRID + 2)[1:-1]
    ys = xs
    for _ in range(iterate):
        ys = m.values(ys)
    return set(np.sign(ys - xs).astype(int).tolist())


def _constant_sign(m: MonotoneMap, seg: Interval, what: str, iterate: int = 1) -> int:
    signs = _displacement_signs(m, seg, iterate)
    if len(signs) != 1 or 0 in signs:
        raise HypothesisError(
            f"{what}: f(x) - x changes sign inside [{seg.lo}, {seg.hi}] "
            "(an interior fixed point violates the uniqueness hypothesis)"
        )
    return signs.pop()


def _check_fixed(m: MonotoneMap, x: float, what: str) -> None:
    r = m._raw(x) - x
    if abs(r) > FIXED_TOL:
        raise HypothesisError(f"{what}: {x!r} is not a fixed point (f(x) - x = {r:.3g})")


def _interior(seg: Interval, p: float, what: str) -> None:
    if not seg.lo < p < seg.hi:
        raise HypothesisError(f"{what}: anchor {p!r} is not inside ({seg.lo}, {seg.hi})")


# -- increasing builders ----------------------------------------------------

def _one_sided(
    f: MonotoneMap,
    g: MonotoneMap,
    fseg: Interval,
    gseg: Interval,
    fixed_at_hi: bool,
    anchors: Optional[Anchor],
    seed: str,
) -> SegmentConjugacy:
    xf = fseg.hi if fixed_at_hi else fseg.lo
    yg = gseg.hi if fixed_at_hi else gseg.lo
    _check_fixed(f, xf, "f")
    _check_fixed(g, yg, "g")
    sf = _constant_sign(f, fseg, "f")
    sg = _constant_sign(g, gseg, "g")
    if sf != sg:
        raise SignatureMismatchError(
            f"sign of f(x) - x ({sf:+d}) differs from g(x) - x ({sg:+d}) on the one-sided segment"
        )
    toward = sf > 0 if fixed_at_hi else sf < 0
    F, G = (f, g) if toward else (inverse_map(f), inverse_map(g))
    if anchors is None:
        anchors = Anchor(fseg.lo if fixed_at_hi else fseg.hi, gseg.lo if fixed_at_hi else gseg.hi)
    for seg, p, who in ((fseg, anchors.a, "f"), (gseg, anchors.b, "g")):
        if not seg.contains(p) or p == (seg.hi if fixed_at_hi else seg.lo):
            raise HypothesisError(f"{who}: anchor {p!r} must lie in the segment, away from the fixed point")
    u1, v1 = F(anchors.a), G(anchors.b)
    return SegmentConjugacy(
        fseg, gseg,
        _seed_through(anchors.a, u1, anchors.b, v1, seed),
        Rule.ONE_SIDED_FORWARD if toward else Rule.ONE_SIDED_BACKWARD,
        ((xf, yg),),
        anchors, F, G, u1, v1, 1, (fseg,), (gseg,),
    )


def build_one_sided(
    f: MonotoneMap,
    g: MonotoneMap,
    side: Optional[SegmentSide] = None,
    anchors: Optional[Anchor] = None,
    seed: str = "linear",
) -> SegmentConjugacy:
    """Conjugacy on a segment with one fixed point at its end.

    ``side`` says where the segment (each map's whole domain) lies relative
    to the fixed point: RIGHT_OF_FIXED puts the fixed point at the left end.
    With ``side=None`` the fixed end is detected from f. Anchors default to
    the free ends. Repelling configurations are built from the inverse maps.
    """
    if not (f.increasing and g.increasing):
        raise HypothesisError("one-sided construction needs increasing maps")
    if side is None:
        d_lo = abs(f(f.domain.lo) - f.domain.lo)
        d_hi = abs(f(f.domain.hi) - f.domain.hi)
        side = SegmentSide.RIGHT_OF_FIXED if d_lo <= d_hi else SegmentSide.LEFT_OF_FIXED
    return _one_sided(f, g, f.domain, g.domain, side is SegmentSide.LEFT_OF_FIXED, anchors, seed)


def build_between(
    f: MonotoneMap,
    g: MonotoneMap,
    Jseg: Interval,
    Iseg: Interval,
    anchors: Optional[Anchor] = None,
    seed: str = "linear",
) -> SegmentConjugacy:
    """Conjugacy between two consecutive fixed points of f and of g.

    Matching signs of f - x and g - x give an increasing piece; opposite
    signs give a decreasing piece (the seed reverses orientation) that
    sends the left fixed point of f to the right one of g.
    """
    for p in (Jseg.lo, Jseg.hi):
        _check_fixed(f, p, "f segment end")
    for p in (Iseg.lo, Iseg.hi):
        _check_fixed(g, p, "g segment end")
    sf = _constant_sign(f, Jseg, "f")
    sg = _constant_sign(g, Iseg, "g")
    if anchors is None:
        anchors = Anchor(Jseg.mid, Iseg.mid)
    _interior(Jseg, anchors.a, "f")
    _interior(Iseg, anchors.b, "g")
    u1, v1 = f(anchors.a), g(anchors.b)
    if sf == sg:
        pins = ((Jseg.lo, Iseg.lo), (Jseg.hi, Iseg.hi))
    else:
        pins = ((Jseg.lo, Iseg.hi), (Jseg.hi, Iseg.lo))
    return SegmentConjugacy(
        Jseg, Iseg, _seed_through(anchors.a, u1, anchors.b, v1, seed), Rule.TWO_SIDED,
        pins, anchors, f, g, u1, v1, 1, (Jseg,), (Iseg,),
    )


def _free_segment(f: MonotoneMap, g: MonotoneMap, sign: int, seed: str, max_steps: int) -> SegmentConjugacy:
    """Maps without fixed points: h is defined on as many chain pieces as both domains hold."""
    a = f.domain.lo if sign > 0 else f.domain.hi
    b = g.domain.lo if sign > 0 else g.domain.hi

    def chain_length(m: MonotoneMap, p: float) -> int:
        k = 0
        while k < max_steps:
            q = m._raw(p)
            if not m.domain.contains(q):
                break
            p, k = q, k + 1
        return k

    n = min(chain_length(f, a), chain_length(g, b))
    if n == 0:
        raise HypothesisError("no fundamental domain fits inside both domains")
    fa, gb = f.iterate(a, n), g.iterate(b, n)
    fpart = Interval(min(a, fa), max(a, fa))
    gpart = Interval(min(b, gb), max(b, gb))
    u1, v1 = f(a), g(b)
    return SegmentConjugacy(
        fpart, gpart, _seed_through(a, u1, b, v1, seed), Rule.FREE, (),
        Anchor(a, b), f, g, u1, v1, 1, (fpart,), (gpart,),
    )


def _describe(entry) -> str:
    l, r = entry
    return f"(left={l.value if l else None}, right={r.value if r else None})"


def _mismatch_message(sf: StabilitySignature, sg: StabilitySignature) -> str:
    if sf.count != sg.count:
        return f"signature mismatch: f has {sf.count} fixed points, g has {sg.count}"
    parts = []
    for label, s in (("direct", sf), ("reversed", sf.reversed())):
        for i, (ef, eg) in enumerate(zip(s.entries, sg.entries)):
            if ef != eg:
                parts.append(f"{label}: entry {i} f{_describe(ef)} vs g{_describe(eg)}")
                break
        else:
            parts.append(
                f"{label}: exterior signs f({s.left_sign}, {s.right_sign}, {s.sign}) "
                f"vs g({sg.left_sign}, {sg.right_sign}, {sg.sign})"
            )
    return "signature mismatch in both orders; " + "; ".join(parts)


def build_full(
    f: MonotoneMap,
    g: MonotoneMap,
    seed: str = "linear",
    max_steps: int = MAX_STEPS,
    snap_tol: float = SNAP_TOL,
    fixed_f: Optional[list[FixedPoint]] = None,
    fixed_g: Optional[list[FixedPoint]] = None,
    anchors: Optional[Anchor] = None,
) -> ConjugacyMap:
    """Conjugacy between increasing maps with equal or mirrored signatures.

    ``anchors`` (in the original coordinates of f) replaces the default
    anchor of the segment containing ``anchors.a``.
    """
    if not (f.increasing and g.increasing):
        raise HypothesisError("build_full needs increasing maps; use build_flip for decreasing ones")
    fps_f = find_fixed_points(f) if fixed_f is None else fixed_f
    fps_g = find_fixed_points(g) if fixed_g is None else fixed_g
    sf, sg = signature(f, fps_f), signature(g, fps_g)
    if sf == sg:
        rev = False
        work = f
        xs = [p.location for p in fps_f]
    elif sf.reversed() == sg:
        rev = True
        work = reflect(f)
        s = f.domain.lo + f.domain.hi
        xs = [s - p.location for p in reversed(fps_f)]
    else:
        raise SignatureMismatchError(_mismatch_message(sf, sg))
    ys = [p.location for p in fps_g]
    fd, gd = work.domain, g.domain
    if anchors is not None and rev:
        anchors = Anchor(fd.lo + fd.hi - anchors.a, anchors.b)
    used = [False]

    def pick(J: Interval, I: Interval) -> Optional[Anchor]:
        if anchors is None or used[0] or not J.contains(anchors.a):
            return None
        if not I.contains(anchors.b):
            raise HypothesisError(f"anchor b={anchors.b!r} is not in the g segment [{I.lo}, {I.hi}] matching a")
        used[0] = True
        return anchors

    if not xs:
        if anchors is not None:
            raise HypothesisError("anchors are fixed by the domain ends when there are no fixed points")
        segs = [_free_segment(work, g, sg.sign, seed, max_steps)]
        return ConjugacyMap(f, g, tuple(segs), rev, max_steps, snap_tol)

    segs = []
    if xs[0] - fd.lo > DOMAIN_SLACK:
        J, I = Interval(fd.lo, xs[0]), Interval(gd.lo, ys[0])
        segs.append(_one_sided(work, g, J, I, True, pick(J, I), seed))
    for i in range(len(xs) - 1):
        J, I = Interval(xs[i], xs[i + 1]), Interval(ys[i], ys[i + 1])
        segs.append(build_between(work, g, J, I, pick(J, I), seed))
    if fd.hi - xs[-1] > DOMAIN_SLACK:
        J, I = Interval(xs[-1], fd.hi), Interval(ys[-1], gd.hi)
        segs.append(_one_sided(work, g, J, I, False, pick(J, I), seed))
    if anchors is not None and not used[0]:
        raise HypothesisError(f"anchor a={anchors.a!r} is not inside any segment")
    return ConjugacyMap(f, g, tuple(segs), rev, max_steps, snap_tol)


# -- decreasing maps --------------------------------------------------------

def _intersect(a: Interval, b: Interval) -> Interval:
    return Interval(max(a.lo, b.lo), min(a.hi, b.hi))


def _outer_anchor(F: MonotoneMap, J: Interval, z: float) -> float:
    """Largest a > z with a and F(a) inside both J and F's domain."""
    A = _intersect(J, F.domain)
    a = A.hi
    if F(a) < A.lo:
        a = F.inverse(A.lo)
    return a


def _flip_inventory(m: MonotoneMap, who: str):
    fps = find_fixed_points(m)
    if len(fps) != 1:
        raise HypothesisError(f"{who} must have exactly one fixed point, found {len(fps)}")
    orbits = find_period2(m)
    if len(orbits) > 1:
        raise HypothesisError(f"{who} has {len(orbits)} period-2 orbits; at most one is supported")
    return fps[0], (orbits[0] if orbits else None)


def build_flip(
    f: MonotoneMap,
    g: MonotoneMap,
    anchors: Optional[Anchor] = None,
    seed: str = "linear",
    max_steps: int = MAX_STEPS,
    snap_tol: float = SNAP_TOL,
) -> ConjugacyMap:
    """Increasing conjugacy between decreasing maps with one fixed point each.

    With a period-2 orbit {xL, xR} the result has an inside piece on
    [xL, xR] and an outside piece on [F(a), xL] ∪ [xR, a]; without one it is
    a single piece on [F(a), a]. F is f when f attracts toward the orbit (or
    toward the fixed point when there is no orbit) and f^-1 otherwise.
    """
    if f.increasing or g.increasing:
        raise HypothesisError("build_flip needs decreasing maps")
    zf, of = _flip_inventory(f, "f")
    zg, og = _flip_inventory(g, "g")
    inv_f = (zf.stability, of.stability if of else None)
    inv_g = (zg.stability, og.stability if og else None)
    if inv_f != inv_g:
        def show(inv):
            z, o = inv
            return f"fixed point {z.value}, " + (f"{o.value} period-2 orbit" if o else "no period-2 orbit")
        raise SignatureMismatchError(f"period-2 inventory mismatch: f has {show(inv_f)}; g has {show(inv_g)}")
    z_stab, o_stab = inv_f
    if o_stab is not None and o_stab == z_stab:
        raise HypothesisError("fixed point and period-2 orbit with the same stability are not covered")
    if o_stab is None:
        forward = z_stab is SideBehavior.ATTRACTING
    else:
        forward = o_stab is SideBehavior.ATTRACTING
    F, G = (f, g) if forward else (inverse_map(f), inverse_map(g))
    z, w = zf.location, zg.location
    pivot = (z, w)
    segs = []

    a_out = _outer_anchor(F, f.domain, z)
    b_out = _outer_anchor(G, g.domain, w)

    if of is None:
        if anchors is not None:
            a_out, b_out = anchors.a, anchors.b
        if not (a_out > z and b_out > w):
            raise HypothesisError("anchors must lie right of the fixed points")
        for M, lo, hi, who in ((F, z, a_out, "f"), (G, w, b_out, "g")):
            if _displacement_signs(M, Interval(lo, hi), 2) != {-1}:
                raise HypothesisError(f"{who}: second iterate does not contract toward the fixed point")
        u1 = F(F(a_out))
        v1 = G(G(b_out))
        fpart = Interval(F(a_out), a_out)
        gpart = Interval(G(b_out), b_out)
        segs.append(SegmentConjugacy(
            fpart, gpart, _seed_through(a_out, u1, b_out, v1, seed), Rule.FLIP_COLLAPSED,
            ((z, w),), Anchor(a_out, b_out), F, G, u1, v1, 2, (fpart,), (gpart,), pivot,
        ))
        return ConjugacyMap(f, g, tuple(segs), False, max_steps, snap_tol)

    xl, xr = of.x_left, of.x_right
    yl, yr = og.x_left, og.x_right
    if not (xl < z < xr and yl < w < yr):
        raise HypothesisError("period-2 orbit does not enclose the fixed point")
    a = anchors.a if anchors else 0.5 * (z + xr)
    b = anchors.b if anchors else 0.5 * (w + yr)
    if not (z < a < xr and w < b < yr):
        raise HypothesisError("inside anchors must lie between the fixed point and the right orbit point")
    u1, v1 = F(F(a)), G(G(b))
    fpart, gpart = Interval(xl, xr), Interval(yl, yr)
    pins = ((z, w), (xl, yl), (xr, yr))
    segs.append(SegmentConjugacy(
        fpart, gpart, _seed_through(a, u1, b, v1, seed), Rule.FLIP_TWO_SIDED,
        pins, Anchor(a, b), F, G, u1, v1, 2, (fpart,), (gpart,), pivot,
    ))

    margin_f = a_out - xr
    margin_g = b_out - yr
    if margin_f > FIXED_TOL and margin_g > FIXED_TOL:
        for M, lo, hi, who in ((F, xr, a_out, "f"), (G, yr, b_out, "g")):
            if _displacement_signs(M, Interval(lo, hi), 2) != {-1}:
                raise HypothesisError(f"{who}: second iterate does not move outside points toward the orbit")
        u1o, v1o = F(F(a_out)), G(G(b_out))
        fparts = (Interval(F(a_out), xl), Interval(xr, a_out))
        gparts = (Interval(G(b_out), yl), Interval(yr, b_out))
        segs.append(SegmentConjugacy(
            _hull(fparts), _hull(gparts), _seed_through(a_out, u1o, b_out, v1o, seed), Rule.FLIP_OUTSIDE,
            ((xl, yl), (xr, yr)), Anchor(a_out, b_out), F, G, u1o, v1o, 2, fparts, gparts, pivot,
        ))
    return ConjugacyMap(f, g, tuple(segs), False, max_steps, snap_tol)
