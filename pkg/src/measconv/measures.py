"""Probability measures: exact finite support and seeded samplers.

Finite measures hold ``(point, weight)`` atoms in canonical order (sorted by
point, duplicates merged, zero weights dropped).  Weights are either all
``Fraction`` (exact mode) or all ``float`` (float mode).

Sampled measures wrap a counter-based sampler ``(seed, stream, start, n)``
so that a fixed seed reproduces the same stream regardless of how the draws
are chunked.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from math import lcm
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, NamedTuple

import numpy as np

from measconv import _backend
from measconv.groups import ActionSystem, ArcUnion, CircleSpace, preimage_set

FLOAT_TOL = 1e-12
FLOAT_DRIFT_MAX = 1e-9
DEFAULT_DELTA = 0.05
FORMAT_TAG = "measconv.measure/1"


class MeasureError(ValueError):
    pass


class Estimate(NamedTuple):
    """Monte Carlo estimate with its Hoeffding half-width at the requested delta."""

    value: float
    half_width: float
    n: int


def hoeffding_half_width(width: float, n: int, delta: float = DEFAULT_DELTA) -> float:
    """Two-sided Hoeffding radius for the mean of ``n`` draws in a range of ``width``."""
    if n <= 0:
        raise MeasureError("sample count must be positive")
    if not 0.0 < delta < 1.0:
        raise MeasureError("delta must lie in (0, 1)")
    return width * math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def derive_stream(stream: int, tag: int) -> int:
    """Child stream id; distinct tags give independent streams."""
    return _backend.stream_key(stream, tag)


def _is_exact(w) -> bool:
    return isinstance(w, Rational) and not isinstance(w, bool)


@dataclass(frozen=True)
class FiniteMeasure:
    """Probability measure with finite support.

    ``atoms`` may be given in any order with repeats; the stored form is
    canonical, so ``FiniteMeasure(m.atoms) == m`` holds bit for bit.
    ``space`` is an optional tag used only to reject cross-space comparisons.
    """

    atoms: tuple
    space: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        merged: dict = {}
        exact = True
        for point, w in self.atoms:
            if isinstance(point, np.generic):
                point = point.item()
            if isinstance(w, bool):
                raise MeasureError("boolean weight")
            if isinstance(w, np.floating):
                w = float(w)
            elif isinstance(w, np.integer):
                w = int(w)
            if type(w) is Fraction:
                pass
            elif _is_exact(w):
                w = Fraction(w)
            elif isinstance(w, float):
                exact = False
            else:
                raise MeasureError(f"unsupported weight type {type(w).__name__}")
            if w < 0 or (isinstance(w, float) and not math.isfinite(w)):
                raise MeasureError(f"invalid weight {w!r} at {point!r}")
            prev = merged.get(point)
            merged[point] = w if prev is None else prev + w
        if not exact:
            merged = {p: float(w) for p, w in merged.items()}
        try:
            points = sorted(p for p, w in merged.items() if w != 0)
        except TypeError:
            raise MeasureError("support points are not mutually comparable") from None
        atoms = tuple((p, merged[p]) for p in points)
        if not atoms:
            raise MeasureError("measure has empty support")
        if exact:
            # integer arithmetic over the common denominator; summing Fractions is slow
            den = lcm(*(w.denominator for _, w in atoms))
            total = Fraction(sum(w.numerator * (den // w.denominator) for _, w in atoms), den)
            if total != 1:
                raise MeasureError(f"exact weights sum to {total}, not 1")
        else:
            total = math.fsum(w for _, w in atoms)
            drift = abs(total - 1.0)
            if drift > FLOAT_DRIFT_MAX:
                raise MeasureError(f"float weights sum to {total!r}; drift exceeds {FLOAT_DRIFT_MAX}")
            if drift > FLOAT_TOL:
                atoms = tuple((p, w / total) for p, w in atoms)
        object.__setattr__(self, "atoms", atoms)

    @property
    def support(self) -> tuple:
        return tuple(p for p, _ in self.atoms)

    @property
    def weights(self) -> tuple:
        return tuple(w for _, w in self.atoms)

    @property
    def mode(self) -> str:
        return "exact" if isinstance(self.atoms[0][1], Fraction) else "float"

    def weight(self, point):
        for p, w in self.atoms:
            if p == point:
                return w
        return Fraction(0) if self.mode == "exact" else 0.0

    def as_dict(self) -> dict:
        return dict(self.atoms)

    def to_float(self) -> "FiniteMeasure":
        return FiniteMeasure(tuple((p, float(w)) for p, w in self.atoms), self.space)

    def with_space(self, space) -> "FiniteMeasure":
        return FiniteMeasure(self.atoms, space)

    def vector(self, size: int) -> list:
        """Weights as a dense list over points ``0..size-1`` (finite spaces)."""
        zero = Fraction(0) if self.mode == "exact" else 0.0
        out = [zero] * size
        for p, w in self.atoms:
            out[p] = w
        return out

    def __len__(self):
        return len(self.atoms)


@dataclass(frozen=True)
class SampledMeasure:
    """Measure known through a deterministic counter-based sampler.

    ``sampler(seed, stream, start, n)`` returns draws for counters
    ``start..start+n-1``.  ``exact`` optionally evaluates measurable sets and
    ``expect`` optionally integrates vectorized functions exactly or by
    quadrature.  ``invariant`` marks a rotation-invariant (Haar) measure on
    the circle.
    """

    sampler: Callable[[int, int, int, int], np.ndarray]
    space: object
    exact: Callable | None = None
    expect: Callable | None = None
    label: str = "sampled"
    invariant: bool = False

    def draw(self, n: int, seed: int = 0, stream: int = 0, start: int = 0) -> np.ndarray:
        if n < 0:
            raise MeasureError("negative sample count")
        return self.sampler(seed, stream, start, n)

    def __repr__(self):
        return f"SampledMeasure({self.label})"


Measure = FiniteMeasure | SampledMeasure


# -- test functions ----------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Bounded continuous function with a declared bound ``|f| <= bound``.

    ``lower``/``upper`` narrow the declared range (defaults ``-bound``,
    ``bound``); the range width drives Hoeffding half-widths.  With
    ``vectorized`` the evaluator accepts NumPy arrays.
    """

    __test__ = False

    fn: Callable
    bound: float
    label: str = "f"
    lower: float | None = None
    upper: float | None = None
    vectorized: bool = False

    def __post_init__(self):
        if self.bound < 0:
            raise MeasureError("bound must be non-negative")
        lo = -self.bound if self.lower is None else self.lower
        hi = self.bound if self.upper is None else self.upper
        if not -self.bound <= lo <= hi <= self.bound:
            raise MeasureError("declared range must sit inside [-bound, bound]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self):
        return self.upper - self.lower

    def __call__(self, x):
        v = self.fn(x)
        if isinstance(v, np.generic):
            v = v.item()
        if not self.lower <= v <= self.upper:
            raise MeasureError(f"{self.label}({x!r}) = {v!r} leaves declared range [{self.lower}, {self.upper}]")
        return v

    def many(self, xs) -> np.ndarray:
        xs = np.asarray(xs)
        if self.vectorized:
            vals = np.asarray(self.fn(xs), dtype=np.float64)
            if vals.shape != xs.shape:
                vals = np.broadcast_to(vals, xs.shape).astype(np.float64)
        else:
            vals = np.fromiter((float(self.fn(x.item())) for x in xs), dtype=np.float64, count=xs.size)
        if vals.size and (vals.min() < self.lower or vals.max() > self.upper):
            raise MeasureError(f"{self.label} left its declared range on a sample")
        return vals

    def __add__(self, other: "TestFunction") -> "TestFunction":
        if not isinstance(other, TestFunction):
            return NotImplemented
        f, h = self.fn, other.fn
        return TestFunction(
            lambda x: f(x) + h(x),
            self.bound + other.bound,
            f"({self.label} + {other.label})",
            self.lower + other.lower,
            self.upper + other.upper,
            self.vectorized and other.vectorized,
        )

    def __mul__(self, c) -> "TestFunction":
        if isinstance(c, TestFunction):
            return NotImplemented
        f = self.fn
        lo, hi = sorted((c * self.lower, c * self.upper))
        return TestFunction(lambda x: c * f(x), abs(c) * self.bound, f"{c}*{self.label}", lo, hi, self.vectorized)

    __rmul__ = __mul__


def constant(c, label: str | None = None) -> TestFunction:
    return TestFunction(lambda x: c, abs(c), label or f"const:{c}", c, c, vectorized=True)


def indicator(E, label: str | None = None) -> TestFunction:
    """Indicator of a measurable set; exact integer values on finite spaces."""
    if isinstance(E, ArcUnion):
        return TestFunction(
            lambda x: E.contains_many(x).astype(np.int64) if isinstance(x, np.ndarray) else int(x in E),
            1,
            label or f"ind:{list(E.arcs)}",
            0,
            1,
            vectorized=True,
        )
    return TestFunction(lambda x: int(x in E), 1, label or f"ind:{sorted(E)}", 0, 1)


def cosine(k: int = 1) -> TestFunction:
    return TestFunction(lambda t: np.cos(2 * np.pi * k * t), 1.0, f"cos:{k}", vectorized=True)


def sine(k: int = 1) -> TestFunction:
    return TestFunction(lambda t: np.sin(2 * np.pi * k * t), 1.0, f"sin:{k}", vectorized=True)


def cosine_squared(k: int = 1) -> TestFunction:
    return TestFunction(lambda t: np.cos(2 * np.pi * k * t) ** 2, 1.0, f"cos2:{k}", 0.0, 1.0, vectorized=True)


# -- constructors ------------------------------------------------------------


def dirac(x, space=None) -> FiniteMeasure:
    """Unit mass at ``x`` (exact weight 1)."""
    return FiniteMeasure(((x, Fraction(1)),), space)


def average_of_points(points: Iterable, space=None) -> FiniteMeasure:
    """Uniform average ``(1/n) sum delta_{p_i}`` with repeated points merged."""
    points = list(points)
    if not points:
        raise MeasureError("cannot average an empty list of points")
    n = len(points)
    counts = Counter(p.item() if isinstance(p, np.generic) else p for p in points)
    return FiniteMeasure(tuple((p, Fraction(c, n)) for p, c in counts.items()), space)


def uniform_circle() -> SampledMeasure:
    """Lebesgue (Haar) measure on the circle ``[0, 1)``."""
    return SampledMeasure(
        lambda seed, stream, start, n: _backend.uniforms(seed, stream, start, n),
        CircleSpace(),
        exact=lambda E: E.length(),
        expect=_periodic_quadrature,
        label="uniform",
        invariant=True,
    )


QUADRATURE_NODES = 4096


def _periodic_quadrature(fn) -> float:
    # trapezoid on a periodic integrand: exact for trig polynomials of degree < nodes
    nodes = np.arange(QUADRATURE_NODES, dtype=np.float64) / QUADRATURE_NODES
    return math.fsum(np.asarray(fn(nodes), dtype=np.float64)) / QUADRATURE_NODES


def uniform_arc(start: float, length: float) -> SampledMeasure:
    """Uniform measure on the arc ``[start, start + length)`` of the circle."""
    if not 0.0 < length <= 1.0:
        raise MeasureError("arc length must lie in (0, 1]")
    arc = ArcUnion.of([(start, start + length)])

    def sampler(seed, stream, begin, n):
        t = np.mod(start + length * _backend.uniforms(seed, stream, begin, n), 1.0)
        t[t >= 1.0] = 0.0
        return t

    def exact(E):
        return math.fsum(E.overlap(a, b) for a, b in arc.arcs) / length

    def expect(fn):
        # Gauss-Legendre on the arc; exact for the smooth test functions used here
        x, w = np.polynomial.legendre.leggauss(64)
        t = np.mod(start + length * (x + 1) / 2, 1.0)
        return math.fsum(np.asarray(fn(t), dtype=np.float64) * w) / 2

    return SampledMeasure(sampler, CircleSpace(), exact, expect, f"uniform[{start},{start + length})")


def as_sampled(mu: FiniteMeasure) -> SampledMeasure:
    """Inverse-CDF sampler over the canonical support order of ``mu``."""
    support = list(mu.support)
    cdf = np.cumsum([float(w) for w in mu.weights])
    cdf[-1] = 1.0
    dtype = np.float64 if any(isinstance(p, float) for p in support) else np.int64
    pts = np.asarray(support, dtype=dtype)

    def sampler(seed, stream, start, n):
        idx = np.searchsorted(cdf, _backend.uniforms(seed, stream, start, n), side="right")
        return pts[np.minimum(idx, len(support) - 1)]

    def exact(E):
        return float(measure_of(mu, E))

    def expect(fn):
        vals = np.asarray(fn(pts), dtype=np.float64)
        return math.fsum(float(w) * v for w, v in zip(mu.weights, np.broadcast_to(vals, pts.shape)))

    return SampledMeasure(sampler, mu.space, exact, expect, f"sampled({len(support)} atoms)")


def draw_points(nu: Measure, n: int, seed: int = 0, stream: int = 0) -> np.ndarray:
    if isinstance(nu, FiniteMeasure):
        nu = as_sampled(nu)
    return nu.draw(n, seed, stream)


# -- operations --------------------------------------------------------------


def measure_of(nu: Measure, E, budget: int | None = None, seed: int = 0, stream: int = 0,
               delta: float = DEFAULT_DELTA):
    """Mass of the set ``E``.

    Exact for finite measures and for sampled measures with an exact
    evaluator; otherwise an :class:`Estimate` from ``budget`` draws.
    """
    if isinstance(nu, FiniteMeasure):
        zero = Fraction(0) if nu.mode == "exact" else 0.0
        return sum((w for p, w in nu.atoms if p in E), zero)
    if nu.exact is not None:
        return nu.exact(E)
    if not budget:
        raise MeasureError("sampled measure without an exact evaluator needs a positive budget")
    pts = nu.draw(budget, seed, stream)
    if isinstance(E, ArcUnion):
        hits = E.contains_many(pts)
    else:
        hits = np.fromiter((p in E for p in pts.tolist()), dtype=bool, count=len(pts))
    return Estimate(float(hits.mean()), hoeffding_half_width(1.0, budget, delta), budget)


def pushforward(sys: ActionSystem, g, nu: Measure) -> Measure:
    """Image measure of ``nu`` under ``x -> g.x``; ``(g.nu)(A) = nu(g^-1 A)``."""
    sys.group.check(g)
    if isinstance(nu, FiniteMeasure):
        return FiniteMeasure(tuple((sys.act(g, x), w) for x, w in nu.atoms), sys.space)
    base = nu
    exact = None
    if base.exact is not None:
        exact = lambda E: base.exact(preimage_set(sys, g, E))
    expect = None
    if base.expect is not None:
        expect = lambda fn: base.expect(lambda xs: fn(sys.act_many(np.full(np.shape(xs), g), xs)))
    return SampledMeasure(
        lambda seed, stream, start, n: sys.act_many(
            np.full(n, g), base.sampler(seed, stream, start, n)
        ),
        sys.space,
        exact,
        expect,
        f"{sys.group.label(g)}.{base.label}",
        invariant=base.invariant,
    )


def integrate(f: TestFunction, nu: Measure, budget: int | None = None, seed: int = 0,
              stream: int = 0, delta: float = DEFAULT_DELTA):
    """Integral of ``f`` against ``nu``.

    Finite measures give ``sum w_i f(x_i)`` in canonical order (exact when
    weights and values are rational).  Sampled measures give an
    :class:`Estimate` over ``budget`` draws.
    """
    if isinstance(nu, FiniteMeasure):
        if f.vectorized and isinstance(nu.atoms[0][0], float):
            # circle points: float values anyway, so evaluate in one pass
            vals = f.many(np.fromiter(nu.support, dtype=np.float64, count=len(nu)))
            return math.fsum(float(w) * v for w, v in zip(nu.weights, vals.tolist()))
        acc = Fraction(0) if nu.mode == "exact" else 0.0
        for x, w in nu.atoms:
            acc += w * f(x)
        return acc
    if not budget or budget <= 0:
        raise MeasureError("integrating a sampled measure needs a positive budget")
    vals = f.many(nu.draw(budget, seed, stream))
    return Estimate(float(vals.mean()), hoeffding_half_width(f.width, budget, delta), budget)


def tv_distance(nu1: FiniteMeasure, nu2: FiniteMeasure):
    """Total variation distance ``1/2 sum |w1(x) - w2(x)|``."""
    if not isinstance(nu1, FiniteMeasure) or not isinstance(nu2, FiniteMeasure):
        raise MeasureError("tv_distance needs finite measures")
    if nu1.space is not None and nu2.space is not None and nu1.space != nu2.space:
        raise MeasureError("measures live on different spaces")
    a, b = nu1.as_dict(), nu2.as_dict()
    exact = nu1.mode == nu2.mode == "exact"
    zero = Fraction(0) if exact else 0.0
    total = zero
    for p in sorted(set(a) | set(b)):
        diff = a.get(p, zero) - b.get(p, zero)
        total += abs(diff if exact else float(diff))
    return total / 2


# -- serialization -----------------------------------------------------------


def to_record(nu: FiniteMeasure) -> dict:
    if nu.mode == "exact":
        atoms = [[p, w.numerator, w.denominator] for p, w in nu.atoms]
    else:
        atoms = [[p, w] for p, w in nu.atoms]
    return {"format": FORMAT_TAG, "mode": nu.mode, "atoms": atoms}


def from_record(rec: dict, space=None) -> FiniteMeasure:
    if rec.get("format", FORMAT_TAG) != FORMAT_TAG:
        raise MeasureError(f"unknown measure format {rec.get('format')!r}")
    mode = rec.get("mode", "exact")
    atoms = []
    for item in rec["atoms"]:
        if mode == "exact":
            if len(item) != 3:
                raise MeasureError("exact atoms are [point, numerator, denominator]")
            atoms.append((item[0], Fraction(int(item[1]), int(item[2]))))
        elif mode == "float":
            if len(item) != 2:
                raise MeasureError("float atoms are [point, weight]")
            atoms.append((item[0], float(item[1])))
        else:
            raise MeasureError(f"unknown mode {mode!r}")
    return FiniteMeasure(tuple(atoms), space)


def dumps(nu: FiniteMeasure) -> str:
    return json.dumps(to_record(nu), sort_keys=True)


def loads(text: str, space=None) -> FiniteMeasure:
    return from_record(json.loads(text), space)
