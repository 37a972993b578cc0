"""Monotone scalar functions used for edge latencies and variances.

Every edge of a routing network carries two of these: a mean latency
function and a variance function, both evaluated at the edge flow.  All
variants are continuous, non-decreasing and nonnegative on [0, inf), and
all of them support closed-form definite integrals from zero, which the
equilibrium solver needs to line-search the congestion potential exactly.

Variants:
    Constant(value)            value everywhere
    Affine(slope, intercept)   slope * x + intercept
    Polynomial(coeffs)         sum(c_k * x**k), nonnegative coefficients
    PiecewiseLinear(points)    linear interpolation through breakpoints,
                               constant left of the first breakpoint and
                               extended with the final slope past the last
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field


class LatencyFn:
    """Base type for the four function variants.

    Subclasses are immutable value objects: equality is structural, so a
    round-trip through the text serialization reproduces an equal object.
    Negative arguments (tiny float underflows of a nonnegative flow) are
    clamped to zero.
    """

    def __call__(self, x: float) -> float:
        raise NotImplementedError

    def integral(self, x: float) -> float:
        """Definite integral of the function from 0 to x."""
        raise NotImplementedError

    def knots_between(self, lo: float, hi: float) -> list[float] | None:
        """Slope-change points strictly inside (lo, hi).

        Returns None when the function is not piecewise linear, in which
        case callers must fall back to iterative line search.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(LatencyFn):
    value: float

    def __post_init__(self) -> None:
        if not self.value >= 0.0:
            raise ValueError(f"constant function must be nonnegative, got {self.value}")

    def __call__(self, x: float) -> float:
        return self.value

    def integral(self, x: float) -> float:
        return self.value * max(x, 0.0)

    def knots_between(self, lo: float, hi: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Affine(LatencyFn):
    slope: float
    intercept: float

    def __post_init__(self) -> None:
        if not self.slope >= 0.0:
            raise ValueError(f"affine slope must be nonnegative, got {self.slope}")
        if not self.intercept >= 0.0:
            raise ValueError(f"affine intercept must be nonnegative, got {self.intercept}")

    def __call__(self, x: float) -> float:
        return self.slope * max(x, 0.0) + self.intercept

    def integral(self, x: float) -> float:
        x = max(x, 0.0)
        return 0.5 * self.slope * x * x + self.intercept * x

    def knots_between(self, lo: float, hi: float) -> list[float]:
        return []


@dataclass(frozen=True)
class Polynomial(LatencyFn):
    """Polynomial with nonnegative coefficients, ascending powers."""

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            coeffs = (0.0,)
        if any(c < 0.0 for c in coeffs):
            raise ValueError(f"polynomial coefficients must be nonnegative, got {coeffs}")
        # trim trailing zeros so the reported degree is meaningful
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: float) -> float:
        x = max(x, 0.0)
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def integral(self, x: float) -> float:
        x = max(x, 0.0)
        acc = 0.0
        for k in range(len(self.coeffs) - 1, -1, -1):
            acc = acc * x + self.coeffs[k] / (k + 1)
        return acc * x

    def knots_between(self, lo: float, hi: float) -> list[float] | None:
        if self.degree <= 1:
            return []
        return None


@dataclass(frozen=True)
class PiecewiseLinear(LatencyFn):
    """Piecewise-linear function through sorted breakpoints.

    Breakpoint x values must be strictly increasing and start at x >= 0;
    y values must be non-decreasing and nonnegative.  Left of the first
    breakpoint the function is constant at the first y value; right of the
    last it continues with the slope of the final segment (or stays
    constant when there is a single breakpoint).
    """

    points: tuple[tuple[float, float], ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if not pts:
            raise ValueError("piecewise-linear function needs at least one breakpoint")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if xs[0] < 0.0:
            raise ValueError(f"breakpoints must lie in [0, inf), got x={xs[0]}")
        for a, b in zip(xs, xs[1:]):
            if not b > a:
                raise ValueError(f"breakpoint x values must be strictly increasing, got {a} then {b}")
        for a, b in zip(ys, ys[1:]):
            if b < a:
                raise ValueError(f"breakpoint y values must be non-decreasing, got {a} then {b}")
        if ys[0] < 0.0:
            raise ValueError(f"breakpoint y values must be nonnegative, got {ys[0]}")
        object.__setattr__(self, "points", pts)
        # cumulative integral from 0 up to each breakpoint
        cum = [xs[0] * ys[0]]
        for k in range(1, len(pts)):
            seg = (xs[k] - xs[k - 1]) * 0.5 * (ys[k] + ys[k - 1])
            cum.append(cum[-1] + seg)
        object.__setattr__(self, "_cum", tuple(cum))

    @property
    def _xs(self) -> list[float]:
        return [p[0] for p in self.points]

    def _final_slope(self) -> float:
        if len(self.points) == 1:
            return 0.0
        (x0, y0), (x1, y1) = self.points[-2], self.points[-1]
        return (y1 - y0) / (x1 - x0)

    def __call__(self, x: float) -> float:
        x = max(x, 0.0)
        pts = self.points
        xs = [p[0] for p in pts]
        i = bisect_right(xs, x)
        if i == 0:
            return pts[0][1]
        if i == len(pts):
            xk, yk = pts[-1]
            return yk + self._final_slope() * (x - xk)
        (xa, ya), (xb, yb) = pts[i - 1], pts[i]
        return ya + (yb - ya) * (x - xa) / (xb - xa)

    def integral(self, x: float) -> float:
        x = max(x, 0.0)
        pts = self.points
        xs = [p[0] for p in pts]
        i = bisect_right(xs, x)
        if i == 0:
            return pts[0][1] * x
        if i == len(pts):
            xk, yk = pts[-1]
            t = x - xk
            return self._cum[-1] + yk * t + 0.5 * self._final_slope() * t * t
        (xa, ya) = pts[i - 1]
        yx = self(x)
        return self._cum[i - 1] + (x - xa) * 0.5 * (ya + yx)

    def knots_between(self, lo: float, hi: float) -> list[float]:
        return [x for x, _ in self.points if lo < x < hi]
