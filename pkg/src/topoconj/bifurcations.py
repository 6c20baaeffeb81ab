"""Structural classification of one-parameter families and fiber conjugacies.

A family is sampled at a few parameter values on each side of 0 and at 0.
Each fiber is reduced to its fixed-point signature (and period-2 inventory
for decreasing fibers) and the three pictures are matched against the
fold, transcritical, pitchfork and flip patterns. Classification is purely
structural; no derivative conditions are evaluated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conjugacy import ConjugacyMap, build_flip, build_full
from .errors import HypothesisError, NonMonotoneError, SignatureMismatchError
from .expr import MapExpr, parse_expression
from .fixed_points import (
    FixedPoint,
    FixedPointKind,
    PeriodTwoOrbit,
    SideBehavior,
    find_fixed_points,
    find_period2,
    signature,
)
from .maps import Interval, MonotoneMap, Orientation, make_map

__all__ = [
    "BifurcationType",
    "Family",
    "NormalForm",
    "FiberSample",
    "BifurcationReport",
    "normal_form",
    "monotone_window",
    "classify_family",
    "conjugate_to_normal_form",
]

DEFAULT_X_WINDOW = Interval(-0.75, 0.75)
DEFAULT_MU_WINDOW = Interval(-0.1, 0.1)
N_MU = 9
MU_DECADES = 3
CLUSTER_MARGIN = 0.1
TRIM_GRID = 2048

A, R = SideBehavior.ATTRACTING, SideBehavior.REPELLING


class BifurcationType(enum.Enum):
    FOLD = "fold"
    TRANSCRITICAL = "transcritical"
    PITCHFORK = "pitchfork"
    FLIP = "flip"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class Family:
    expr: MapExpr
    x_window: Interval = DEFAULT_X_WINDOW
    mu_window: Interval = DEFAULT_MU_WINDOW

    def __post_init__(self):
        object.__setattr__(self, "x_window", Interval.coerce(self.x_window))
        object.__setattr__(self, "mu_window", Interval.coerce(self.mu_window))

    @classmethod
    def parse(cls, text: str, x_window: Interval = DEFAULT_X_WINDOW, mu_window: Interval = DEFAULT_MU_WINDOW):
        return cls(parse_expression(text), x_window, mu_window)

    def fiber(self, mu: float, window: Optional[Interval] = None) -> MonotoneMap:
        return make_map(self.expr, window or self.x_window, mu=mu)

    def raw(self, mu: float):
        return self.expr.bind(mu)


@dataclass(frozen=True)
class NormalForm:
    type: BifurcationType
    sign_mu: int
    sign_x: int

    def text(self) -> str:
        pm = lambda s: "+" if s > 0 else "-"
        t = self.type
        if t is BifurcationType.FOLD:
            return f"x {pm(self.sign_mu)} mu {pm(self.sign_x)} x^2"
        if t is BifurcationType.TRANSCRITICAL:
            return f"x {pm(self.sign_mu)} mu*x {pm(self.sign_x)} x^2"
        if t is BifurcationType.PITCHFORK:
            return f"x {pm(self.sign_mu)} mu*x {pm(self.sign_x)} x^3"
        if t is BifurcationType.FLIP:
            return f"-x {pm(self.sign_mu)} mu*x {pm(self.sign_x)} x^3"
        raise ValueError(f"no normal form for {t}")

    def family(self) -> Family:
        return Family.parse(self.text())


def normal_form(type: BifurcationType, sign_mu: int, sign_x: int) -> Family:
    """The truncated normal-form family with default windows."""
    if sign_mu not in (1, -1) or sign_x not in (1, -1):
        raise ValueError("signs must be +1 or -1")
    return NormalForm(BifurcationType(type), sign_mu, sign_x).family()


# Sign choices whose rich side is mu > 0 (so the family's sigma is +1).
_CANDIDATES = {
    BifurcationType.FOLD: [(1, -1), (-1, 1)],
    BifurcationType.TRANSCRITICAL: [(1, -1), (1, 1)],
    BifurcationType.PITCHFORK: [(1, -1), (-1, 1)],
    BifurcationType.FLIP: [(-1, 1), (1, -1)],
}


@dataclass(frozen=True)
class FiberSample:
    mu: float
    orientation: Orientation
    fixed_points: tuple[FixedPoint, ...]
    period2: tuple[PeriodTwoOrbit, ...] = ()

    @property
    def shape(self) -> tuple:
        pts = tuple((p.kind, p.left, p.right) for p in self.fixed_points)
        return (self.orientation, pts, tuple(o.stability for o in self.period2))

    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "n_fixed": len(self.fixed_points),
            "signature": [[p.left.value if p.left else None, p.right.value if p.right else None]
                          for p in self.fixed_points],
            "period2": [o.to_json() for o in self.period2],
        }

    def describe(self) -> str:
        pts = ", ".join(
            f"{p.location:.4g}:{p.kind.value}({p.left.value if p.left else '-'}/{p.right.value if p.right else '-'})"
            for p in self.fixed_points
        )
        orb = f" period2={[o.stability.value for o in self.period2]}" if self.period2 else ""
        return f"mu={self.mu:.4g} [{pts}]{orb}"


@dataclass(frozen=True)
class BifurcationReport:
    type: BifurcationType
    sigma: int
    samples: tuple[FiberSample, ...]
    x_window: Interval
    mu_window: Interval
    requested_x_window: Interval
    pattern: str = ""

    @property
    def mu_samples(self) -> int:
        return len(self.samples)

    @property
    def classified(self) -> bool:
        return self.type is not BifurcationType.UNCLASSIFIED

    def to_json(self) -> dict:
        return {
            "type": self.type.value,
            "sigma": self.sigma if self.classified else None,
            "samples": [s.to_json() for s in self.samples],
            "windows": {
                "x": self.x_window.as_list(),
                "x_requested": self.requested_x_window.as_list(),
                "mu": self.mu_window.as_list(),
            },
        }


def monotone_window(fn, window: Interval, center: float = 0.0, grid_n: int = TRIM_GRID) -> Interval:
    """Largest grid interval around ``center`` on which ``fn`` is strictly monotone."""
    xs = window.linspace(grid_n + 1)
    with np.errstate(all="ignore"):
        ys = np.asarray(fn(xs), dtype=float)
    if ys.shape != xs.shape:
        ys = np.array([fn(float(x)) for x in xs])
    dy = np.sign(np.diff(ys))
    c = int(np.clip(np.searchsorted(xs, center) - 1, 0, grid_n - 1))
    s = dy[c]
    if s == 0:
        raise NonMonotoneError(f"map is flat at x={center}", (float(xs[c]), float(xs[c + 1])))
    i = c
    while i > 0 and dy[i - 1] == s:
        i -= 1
    j = c
    while j < grid_n - 1 and dy[j + 1] == s:
        j += 1
    return Interval(float(xs[i]), float(xs[j + 1]))


def _mu_grid(mu_window: Interval, n_mu: int) -> list[float]:
    k = (n_mu - 1) // 2
    pos = np.geomspace(mu_window.hi, mu_window.hi * 10.0 ** -MU_DECADES, k) if k > 1 else np.array([mu_window.hi])
    neg = np.geomspace(mu_window.lo, mu_window.lo * 10.0 ** -MU_DECADES, k) if k > 1 else np.array([mu_window.lo])
    return [float(m) for m in neg] + [0.0] + [float(m) for m in pos[::-1]]


def _sample(fam: Family, mu: float, window: Interval) -> FiberSample:
    try:
        m = fam.fiber(mu, window)
    except NonMonotoneError as exc:
        raise NonMonotoneError(f"fiber at mu={mu!r}: {exc}", exc.pair) from exc
    fps = tuple(find_fixed_points(m))
    orbits = () if m.increasing else tuple(find_period2(m))
    return FiberSample(mu, m.orientation, fps, orbits)


def _transverse(s: FiberSample) -> bool:
    return all(p.kind is FixedPointKind.TRANSVERSE for p in s.fixed_points)


def _stabs(s: FiberSample) -> list:
    return [p.stability for p in s.fixed_points]


def _is_fold_rich(s):
    return len(s.fixed_points) == 2 and _transverse(s) and set(_stabs(s)) == {A, R}


def _is_pitch_rich(s):
    if len(s.fixed_points) != 3 or not _transverse(s):
        return False
    a, b, c = _stabs(s)
    return a == c and a != b


def _is_single_transverse(s):
    return len(s.fixed_points) == 1 and _transverse(s)


def _is_single_mixed(s):
    return len(s.fixed_points) == 1 and s.fixed_points[0].kind is FixedPointKind.MIXED


def _is_flip_rich(s):
    return (
        s.orientation is Orientation.DECREASING
        and len(s.fixed_points) == 1
        and len(s.period2) == 1
        and s.period2[0].stability is not s.fixed_points[0].stability
    )


def _is_flip_plain(s):
    return s.orientation is Orientation.DECREASING and len(s.fixed_points) == 1 and not s.period2


def _transcritical_sigma(pos: list[FiberSample]) -> int:
    # at mu > 0, is the fixed point nearest x = 0 repelling?
    votes = []
    for s in pos:
        p = min(s.fixed_points, key=lambda p: abs(p.location))
        votes.append(1 if p.stability is R else -1)
    return 1 if sum(votes) >= 0 else -1


def _match(neg: list[FiberSample], zero: FiberSample, pos: list[FiberSample]) -> tuple[BifurcationType, int]:
    def every(side, pred):
        return all(pred(s) for s in side)

    increasing = all(s.orientation is Orientation.INCREASING for s in neg + pos + [zero])
    decreasing = all(s.orientation is Orientation.DECREASING for s in neg + pos + [zero])
    empty = lambda s: not s.fixed_points
    if increasing:
        if _is_single_mixed(zero):
            if every(pos, _is_fold_rich) and every(neg, empty):
                return BifurcationType.FOLD, 1
            if every(neg, _is_fold_rich) and every(pos, empty):
                return BifurcationType.FOLD, -1
            if every(pos, _is_fold_rich) and every(neg, _is_fold_rich):
                return BifurcationType.TRANSCRITICAL, _transcritical_sigma(pos)
        if _is_single_transverse(zero):
            if every(pos, _is_pitch_rich) and every(neg, _is_single_transverse):
                return BifurcationType.PITCHFORK, 1
            if every(neg, _is_pitch_rich) and every(pos, _is_single_transverse):
                return BifurcationType.PITCHFORK, -1
    if decreasing and _is_flip_plain(zero):
        if every(pos, _is_flip_rich) and every(neg, _is_flip_plain):
            return BifurcationType.FLIP, 1
        if every(neg, _is_flip_rich) and every(pos, _is_flip_plain):
            return BifurcationType.FLIP, -1
    return BifurcationType.UNCLASSIFIED, 0


def classify_family(fam: Family, n_mu: int = N_MU, trim: bool = True) -> BifurcationReport:
    """Match the fiber structure across mu against the four patterns.

    With ``trim`` the x-window is first cut down to the largest interval
    around 0 on which every sampled fiber is monotone.
    """
    if n_mu < 3 or n_mu % 2 == 0:
        raise ValueError("n_mu must be odd and at least 3")
    mw = fam.mu_window
    if not mw.lo < 0.0 < mw.hi:
        raise ValueError("0 must lie strictly inside the mu window")
    mus = _mu_grid(mw, n_mu)
    window = fam.x_window
    if trim:
        center = fam.x_window.clamp(0.0)
        for mu in mus:
            w = monotone_window(fam.raw(mu), window, center)
            window = Interval(max(window.lo, w.lo), min(window.hi, w.hi))
    samples = [_sample(fam, mu, window) for mu in mus]
    k = (n_mu - 1) // 2
    neg, zero, pos = samples[:k], samples[k], samples[k + 1:]
    kind, sigma = _match(neg, zero, pos)
    pattern = "; ".join(s.describe() for s in samples)
    return BifurcationReport(kind, sigma, tuple(samples), window, mw, fam.x_window, pattern)


# -- fiber conjugacy --------------------------------------------------------

def _cluster_window(m: MonotoneMap, window: Interval) -> Interval:
    fps = find_fixed_points(m)
    pts = [p.location for p in fps]
    if not m.increasing:
        for o in find_period2(m):
            pts += [o.x_left, o.x_right]
    if not pts:
        xs = window.linspace(TRIM_GRID + 1)
        d = np.abs(m.values(xs) - xs)
        c = float(xs[int(np.argmin(d))])
        half = CLUSTER_MARGIN * window.width
        return Interval(max(window.lo, c - half), min(window.hi, c + half))
    lo, hi = min(pts), max(pts)
    margin = CLUSTER_MARGIN * (hi - lo) if hi > lo else CLUSTER_MARGIN * window.width
    return Interval(max(window.lo, lo - margin), min(window.hi, hi + margin))


def _restricted(fam: Family, mu: float, window: Interval) -> MonotoneMap:
    m = fam.fiber(mu, window)
    return fam.fiber(mu, _cluster_window(m, window))


def _flip_inventory(m: MonotoneMap):
    fps = find_fixed_points(m)
    orbits = find_period2(m)
    return tuple(p.stability for p in fps), tuple(o.stability for o in orbits)


def conjugate_to_normal_form(
    fam: Family,
    mu: float,
    report: Optional[BifurcationReport] = None,
    nf_type: Optional[BifurcationType] = None,
    seed: str = "linear",
) -> tuple[ConjugacyMap, NormalForm]:
    """Conjugate the fiber at ``mu`` to the matching normal form at sigma*mu.

    Both maps are first restricted to their fixed-point cluster (plus
    period-2 points for flips) with a 10% margin. Returns the conjugacy and
    the normal form used.
    """
    if report is None:
        report = classify_family(fam)
    kind = report.type if nf_type is None else BifurcationType(nf_type)
    if kind is BifurcationType.UNCLASSIFIED:
        raise HypothesisError(f"family is unclassified: {report.pattern}")
    sigma = report.sigma if report.classified else 1
    f = _restricted(fam, mu, report.x_window)
    mu_n = sigma * mu

    tried = []
    reversed_ok = None
    for sm, sx in _CANDIDATES[kind]:
        nf = NormalForm(kind, sm, sx)
        nfam = nf.family()
        nwin = monotone_window(nfam.raw(mu_n), nfam.x_window, 0.0)
        g = _restricted(nfam, mu_n, nwin)
        if f.increasing != g.increasing:
            tried.append(f"{nf.text()}: orientation differs")
            continue
        if f.increasing:
            sf, sg = signature(f), signature(g)
            if sf == sg:
                return build_full(f, g, seed=seed), nf
            if sf.reversed() == sg and reversed_ok is None:
                reversed_ok = (f, g, nf)
            tried.append(f"{nf.text()}: {sg.labels()}")
        else:
            if _flip_inventory(f) == _flip_inventory(g):
                return build_flip(f, g, seed=seed), nf
            tried.append(f"{nf.text()}: {_flip_inventory(g)}")
    if reversed_ok is not None:
        f, g, nf = reversed_ok
        return build_full(f, g, seed=seed), nf
    locs = [round(p.location, 12) for p in find_fixed_points(f)]
    raise SignatureMismatchError(
        f"fiber at mu={mu!r} (fixed points {locs}) matches no {kind.value} normal form at mu={mu_n!r}; "
        + "; ".join(tried)
    )
