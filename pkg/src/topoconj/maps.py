"""Monotone interval maps: evaluation, bisection inverse and iteration."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, EvaluationError, NonMonotoneError, OrbitEscapeError
from .expr import MapExpr, parse_expression

__all__ = [
    "DOMAIN_SLACK",
    "Interval",
    "Orientation",
    "MonotoneMap",
    "check_monotone",
    "make_map",
    "evaluate",
    "inverse",
    "iterate",
    "reflect",
    "inverse_map",
]

DOMAIN_SLACK = 1e-12
DEFAULT_INVERSE_TOL = 1e-13
DEFAULT_MONOTONE_GRID = 1024
_XTOL = 1e-300
INVERSE_TABLE = 1024
CHORD_STEPS = 4
SMALL_SOLVE = 4  # below this many targets the float loop beats array overhead
_EPS = np.finfo(float).eps
_RTOL = 4 * _EPS


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite: [{lo}, {hi}]")
        if not lo < hi:
            raise ValueError(f"degenerate interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``"lo,hi"``."""
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'lo,hi', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))

    @classmethod
    def coerce(cls, value) -> "Interval":
        """Accept an Interval, a ``"lo,hi"`` string or a (lo, hi) pair."""
        if isinstance(value, Interval):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        return cls(*value)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def linspace(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)

    def __str__(self) -> str:
        return f"{self.lo!r},{self.hi!r}"

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


class Orientation(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"

    @property
    def sign(self) -> int:
        return 1 if self is Orientation.INCREASING else -1

    def compose(self, other: "Orientation") -> "Orientation":
        return Orientation.INCREASING if self.sign * other.sign > 0 else Orientation.DECREASING


def _clip(a, lo, hi):
    # np.clip carries enough dispatch overhead to matter on tiny arrays
    return np.minimum(np.maximum(a, lo), hi)


def _vector_call(fn: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(all="ignore"):
            ys = np.asarray(fn(xs), dtype=float)
        if ys.shape == xs.shape:
            return ys
    except Exception:  # callable is scalar-only
        pass
    return np.fromiter((fn(float(x)) for x in xs), dtype=float, count=len(xs))


def check_monotone(
    fn: Union[Callable, MapExpr],
    domain: Interval,
    grid_n: int = DEFAULT_MONOTONE_GRID,
    mu: float | None = None,
) -> Orientation:
    """Classify ``fn`` as increasing or decreasing on ``domain``.

    Samples ``grid_n + 1`` equally spaced points and requires every
    consecutive pair to move strictly in the same direction. This is a
    necessary condition only: a map that wiggles between grid points passes.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    if isinstance(fn, MapExpr):
        fn = fn.bind(mu)
    xs = domain.linspace(grid_n + 1)
    ys = _vector_call(fn, xs)
    if not np.all(np.isfinite(ys)):
        bad = int(np.flatnonzero(~np.isfinite(ys))[0])
        raise EvaluationError(f"non-finite value at x={xs[bad]!r}")
    dy = np.diff(ys)
    if np.all(dy > 0):
        return Orientation.INCREASING
    if np.all(dy < 0):
        return Orientation.DECREASING
    inc = int(np.count_nonzero(dy > 0))
    # report the first pair that breaks the majority direction
    bad = np.flatnonzero(dy <= 0) if inc >= len(dy) - inc else np.flatnonzero(dy >= 0)
    i = int(bad[0])
    pair = (float(xs[i]), float(xs[i + 1]))
    raise NonMonotoneError(
        f"map is not strictly monotone on [{domain.lo}, {domain.hi}]: "
        f"f({pair[0]!r})={ys[i]!r}, f({pair[1]!r})={ys[i + 1]!r}",
        pair,
    )


@dataclass(frozen=True)
class MonotoneMap:
    """A strictly monotone continuous map on a closed interval.

    ``fn`` is the raw scalar function. ``inv_fn``, when given, is an exact
    inverse used instead of bisection (inverse maps carry the original map
    here, so inverting twice is free).
    """

    fn: Callable[[float], float]
    domain: Interval
    orientation: Orientation
    inverse_tol: float = DEFAULT_INVERSE_TOL
    expr: MapExpr | None = None
    inv_fn: Callable[[float], float] | None = field(default=None, repr=False)
    label: str = ""
    vec: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    inv_vec: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @property
    def increasing(self) -> bool:
        return self.orientation is Orientation.INCREASING

    @cached_property
    def image(self) -> Interval:
        a = self._raw(self.domain.lo)
        b = self._raw(self.domain.hi)
        return Interval(min(a, b), max(a, b))

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(f(x_i), x_i, dx/dy per cell) on a grid, sorted by f(x_i); seeds inverse solves."""
        xs = self.domain.linspace(INVERSE_TABLE + 1)
        ys = self.values(xs)
        if not self.increasing:
            xs, ys = xs[::-1], ys[::-1]
        with np.errstate(all="ignore"):
            slope = np.diff(xs) / np.diff(ys)
        slope[~np.isfinite(slope)] = 0.0
        return ys, xs, slope

    def _guess(self, y):
        ys, xs, slope = self._table
        x0 = np.interp(y, ys, xs)
        i = _clip(np.searchsorted(ys, y) - 1, 0, len(slope) - 1)
        return x0, slope[i]

    def __str__(self) -> str:
        return self.label or (str(self.expr) if self.expr is not None else repr(self.fn))

    def _raw(self, x: float) -> float:
        try:
            return float(self.fn(x))
        except ZeroDivisionError as exc:
            raise EvaluationError(f"division by zero evaluating {self} at x={x!r}") from exc

    def __call__(self, x: float) -> float:
        d = self.domain
        if x < d.lo or x > d.hi:
            if x < d.lo - DOMAIN_SLACK or x > d.hi + DOMAIN_SLACK:
                raise DomainError(f"x={x!r} outside domain [{d.lo}, {d.hi}] of {self}")
            x = d.clamp(x)
        return self._raw(x)

    def values(self, xs) -> np.ndarray:
        """Vectorised forward evaluation without domain checks."""
        xs = np.asarray(xs, dtype=float)
        if self.vec is not None:
            return np.asarray(self.vec(xs), dtype=float)
        return _vector_call(self.fn, xs)

    def inverse_values(self, ys) -> np.ndarray:
        """Vectorised inverse; ys are clipped onto the image."""
        img = self.image
        ys = _clip(np.asarray(ys, dtype=float), img.lo, img.hi)
        if self.inv_vec is not None:
            return _clip(np.asarray(self.inv_vec(ys), dtype=float), self.domain.lo, self.domain.hi)
        if self.inv_fn is not None:
            return np.array([self.domain.clamp(float(self.inv_fn(y))) for y in ys])
        if ys.size <= SMALL_SOLVE and ys.ndim == 1:
            return self._solve_small(ys)
        return self._solve_vec(ys)

    def _solve_small(self, y: np.ndarray) -> np.ndarray:
        """Secant iteration in plain floats, seeded like the array solver."""
        lo, hi = self.domain.lo, self.domain.hi
        fn = self.fn
        x0s, slopes = self._guess(y)
        out = np.empty(y.size)
        for i in range(y.size):
            t = float(y[i])
            x = float(x0s[i])
            try:
                r = float(fn(x)) - t
                xp, rp = x, r
                x = min(max(x - r * float(slopes[i]), lo), hi)
                for _ in range(12):
                    r = float(fn(x)) - t
                    if abs(r) <= 4 * _EPS * max(abs(t), abs(x)):
                        break
                    if r == rp:
                        x = None
                        break
                    x, xp, rp = min(max(x - r * (x - xp) / (r - rp), lo), hi), x, r
                else:
                    x = None
            except (ArithmeticError, ValueError):
                x = None
            out[i] = self._solve_vec(y[i : i + 1])[0] if x is None else x
        return out

    def _solve_vec(self, y: np.ndarray) -> np.ndarray:
        """Array version of the inverse.

        A few chord steps with the table slope settle smooth cases to
        rounding level; whatever is left goes to the bracketed solver.
        """
        lo, hi = self.domain.lo, self.domain.hi
        f = self.values
        x, dxdy = self._guess(y)
        for _ in range(CHORD_STEPS):
            r = f(x) - y
            left = np.abs(r) > 4 * _EPS * np.maximum(np.abs(y), np.abs(x))
            if not left.any():
                return x
            x = np.where(left, _clip(x - r * dxdy, lo, hi), x)
        r = f(x) - y
        left = np.abs(r) > 4 * _EPS * np.maximum(np.abs(y), np.abs(x))
        if left.any():
            x[left] = self._solve_bracketed(y[left])
        return x

    def _solve_bracketed(self, y: np.ndarray) -> np.ndarray:
        """Bracket each target, then Illinois regula falsi with a bisection
        step every third round."""
        lo, hi = self.domain.lo, self.domain.hi
        up = self.increasing
        f = self.values
        x0, dxdy = self._guess(y)
        dxdy = np.abs(dxdy)
        r0 = f(x0) - y
        out = x0.copy()
        idx = np.flatnonzero(r0 != 0.0)
        if idx.size == 0:
            return out
        yy = y[idx]
        a, ra = x0[idx], r0[idx]
        b, rb = a.copy(), ra.copy()
        step = np.maximum(1.5 * np.abs(ra) * dxdy[idx], 1e-16 * (hi - lo))
        left = (ra > 0) == up
        expanding = np.ones(idx.size, dtype=bool)
        while expanding.any():
            k = np.flatnonzero(expanding)
            x1 = _clip(np.where(left[k], a[k] - step[k], a[k] + step[k]), lo, hi)
            r1 = f(x1) - yy[k]
            crossed = ((r1 > 0) != (ra[k] > 0)) | (r1 == 0.0)
            edge = ~crossed & ((x1 == lo) | (x1 == hi))
            go = ~crossed & ~edge
            b[k[crossed]], rb[k[crossed]] = x1[crossed], r1[crossed]
            # no sign change up to the boundary: the target sat on the image edge
            a[k[edge]], b[k[edge]] = x1[edge], x1[edge]
            ra[k[edge]], rb[k[edge]] = 0.0, 0.0
            a[k[go]], ra[k[go]] = x1[go], r1[go]
            step[k[go]] *= 2.0
            expanding[k[~go]] = False
        fa, fb = ra.copy(), rb.copy()
        last = np.zeros(idx.size, dtype=int)
        active = (a != b) & (ra != 0.0) & (rb != 0.0)
        for it in range(400):
            k = np.flatnonzero(active)
            if k.size == 0:
                break
            A, B, FA, FB = a[k], b[k], fa[k], fb[k]
            c = (A * FB - B * FA) / (FB - FA)
            mid = 0.5 * (A + B)
            lo_ab, hi_ab = np.minimum(A, B), np.maximum(A, B)
            use_mid = ~((c > lo_ab) & (c < hi_ab)) | (it % 3 == 2)
            c = np.where(use_mid, mid, c)
            fc = f(c) - yy[k]
            repl_a = (fc > 0) == (FA > 0)
            # Illinois: halve the kept end's value when the same end is kept twice
            halve_b = repl_a & (last[k] == 1)
            halve_a = ~repl_a & (last[k] == -1)
            ka, kb = k[repl_a], k[~repl_a]
            a[ka], fa[ka], ra[ka] = c[repl_a], fc[repl_a], fc[repl_a]
            b[kb], fb[kb], rb[kb] = c[~repl_a], fc[~repl_a], fc[~repl_a]
            fb[k[halve_b]] *= 0.5
            fa[k[halve_a]] *= 0.5
            last[k] = np.where(repl_a, 1, -1)
            width = np.abs(b[k] - a[k])
            floor = 2 * _EPS * np.maximum(np.abs(yy[k]), np.abs(c))
            stop = (fc == 0.0) | (np.abs(fc) <= floor) | (width <= 4 * _EPS * np.maximum(np.abs(a[k]), np.abs(b[k])))
            stop |= (c == A) | (c == B)
            active[k[stop]] = False
        pick_a = np.abs(ra) <= np.abs(rb)
        out[idx] = np.where(pick_a, a, b)
        return out

    def inverse(self, y: float) -> float:
        img = self.image
        if y < img.lo or y > img.hi:
            if y < img.lo - DOMAIN_SLACK or y > img.hi + DOMAIN_SLACK:
                raise DomainError(f"y={y!r} outside image [{img.lo}, {img.hi}] of {self}")
            y = img.clamp(y)
        if self.inv_fn is not None:
            return self.domain.clamp(float(self.inv_fn(y)))
        return self._bisect(y)

    def _bisect(self, y: float) -> float:
        """Solve f(x) = y: expand a bracket around a guess, then refine it."""
        lo, hi = self.domain.lo, self.domain.hi
        f = self._raw
        tol = self.inverse_tol
        up = self.increasing
        x0, dxdy = self._guess(y)
        x0 = float(x0)
        r0 = f(x0) - y
        if abs(r0) <= tol:
            return x0
        go_left = (r0 > 0) == up
        step = max(1.5 * abs(r0) * abs(float(dxdy)), 1e-16 * (hi - lo))
        # expand a bracket from the guess
        while True:
            x1 = x0 - step if go_left else x0 + step
            x1 = min(max(x1, lo), hi)
            r1 = f(x1) - y
            if abs(r1) <= tol:
                return x1
            if (r1 > 0) != (r0 > 0):
                break
            if x1 == lo or x1 == hi:
                # no sign change up to the boundary: y was clamped onto the image edge
                return x1
            x0, r0 = x1, r1
            step *= 2.0
        a, b = (x0, x1) if x0 < x1 else (x1, x0)
        # Brent's method on the bracket: superlinear, and never leaves it
        return brentq(lambda x: f(x) - y, a, b, xtol=_XTOL, rtol=_RTOL)

    def iterate(self, x: float, n: int) -> float:
        """Apply the map ``n`` times (its inverse ``|n|`` times when n < 0)."""
        for step in range(abs(n)):
            try:
                x = self(x) if n > 0 else self.inverse(x)
            except DomainError as exc:
                raise OrbitEscapeError(f"iterate escaped at step {step}: {exc}", step) from exc
        return x


def make_map(
    source: Union[str, MapExpr, Callable[[float], float]],
    domain: Interval,
    mu: float | None = None,
    grid_n: int = DEFAULT_MONOTONE_GRID,
    inverse_tol: float = DEFAULT_INVERSE_TOL,
    label: str = "",
) -> MonotoneMap:
    """Build a :class:`MonotoneMap`, checking monotonicity on a grid.

    ``source`` may be expression text, a parsed expression, or a plain
    callable (the black-box extension point).
    """
    domain = Interval.coerce(domain)
    expr = None
    if isinstance(source, str):
        expr = parse_expression(source)
    elif isinstance(source, MapExpr):
        expr = source
    if expr is not None:
        if expr.uses_mu and mu is None:
            raise ValueError(f"expression {expr} uses mu; pass mu=")
        fn = expr.bind(mu)
        if not label:
            label = str(expr) if mu is None or not expr.uses_mu else f"{expr} @ mu={mu!r}"
    else:
        fn = source
    orientation = check_monotone(fn, domain, grid_n)
    return MonotoneMap(fn, domain, orientation, inverse_tol, expr=expr, label=label)


def evaluate(m: MonotoneMap, x: float) -> float:
    return m(x)


def inverse(m: MonotoneMap, y: float) -> float:
    return m.inverse(y)


def iterate(m: MonotoneMap, x: float, n: int) -> float:
    return m.iterate(x, n)


def reflect(m: MonotoneMap) -> MonotoneMap:
    """Conjugate ``m`` by the reflection ``x -> lo + hi - x`` of its domain."""
    s = m.domain.lo + m.domain.hi
    fn = m.fn
    return MonotoneMap(
        lambda x: s - fn(s - x),
        m.domain,
        m.orientation,
        m.inverse_tol,
        inv_fn=lambda y: s - m.inverse(s - y),
        label=f"reflect({m})",
        vec=lambda xs: s - m.values(s - xs),
        inv_vec=lambda ys: s - m.inverse_values(s - ys),
    )


def inverse_map(m: MonotoneMap) -> MonotoneMap:
    """The inverse of ``m`` as a map on ``m.image``."""
    return MonotoneMap(
        m.inverse,
        m.image,
        m.orientation,
        m.inverse_tol,
        inv_fn=m.__call__,
        label=f"inverse({m})",
        vec=m.inverse_values,
        inv_vec=m.values,
    )
