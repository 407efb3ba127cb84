"""Product measures on G x X, slicing, and the convolution action.

The convolution ``mu * nu`` is the image of the product ``mu x nu`` under the
action map ``(g, x) -> g.x``.  For finite supports everything is computed on
the weight grid ``w(g, x) = mu(g) nu(x)``; rational weights make every
identity in this module hold with equality.  Sampled measures are convolved
by pairing independent draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import NamedTuple

import numpy as np

from measconv import _backend
from measconv.groups import (
    ActionSystem,
    ArcUnion,
    CircleGroup,
    CircleSpace,
    FiniteGroup,
    FiniteSpace,
    preimage_set,
    section_set,
)
from measconv.measures import (
    DEFAULT_DELTA,
    Estimate,
    FiniteMeasure,
    MeasureError,
    SampledMeasure,
    TestFunction,
    as_sampled,
    derive_stream,
    hoeffding_half_width,
    measure_of,
)

LEFT, RIGHT = "left", "right"


class ConvolutionError(ValueError):
    pass


def _sampler(m):
    return as_sampled(m).sampler if isinstance(m, FiniteMeasure) else m.sampler


# -- product sets ------------------------------------------------------------


@dataclass(frozen=True)
class PairSet:
    """Explicit set of ``(g, x)`` pairs."""

    pairs: frozenset

    def __init__(self, pairs):
        object.__setattr__(self, "pairs", frozenset((g, x) for g, x in pairs))

    def __contains__(self, gx) -> bool:
        return tuple(gx) in self.pairs

    def left_section(self, g):
        """``W_g = {x : (g, x) in W}``."""
        return frozenset(x for h, x in self.pairs if h == g)

    def right_section(self, x):
        """``W^x = {g : (g, x) in W}``."""
        return frozenset(g for g, y in self.pairs if y == x)


@dataclass(frozen=True)
class RectangleUnion:
    """Finite union of ``arc x arc`` rectangles on the torus.

    Stored canonically as disjoint vertical strips ``[a, b) x B`` with
    adjacent equal strips merged.
    """

    strips: tuple

    @classmethod
    def of(cls, rects) -> "RectangleUnion":
        rects = [(ArcUnion.of([a]) if isinstance(a, tuple) else a,
                  ArcUnion.of([b]) if isinstance(b, tuple) else b) for a, b in rects]
        xs = sorted({0.0, 1.0} | {t for A, _ in rects for arc in A.arcs for t in arc})
        strips: list = []
        for lo, hi in zip(xs, xs[1:]):
            mid = (lo + hi) / 2
            arcs = [arc for A, B in rects if mid in A for arc in B.arcs]
            if not arcs:
                continue
            B = ArcUnion.of(arcs)
            if strips and strips[-1][1] == lo and strips[-1][2] == B:
                strips[-1] = (strips[-1][0], hi, B)
            else:
                strips.append((lo, hi, B))
        return cls(tuple(strips))

    def __contains__(self, gx) -> bool:
        g, x = gx
        return any(a <= g < b and x in B for a, b, B in self.strips)

    def left_section(self, g) -> ArcUnion:
        for a, b, B in self.strips:
            if a <= g < b:
                return B
        return ArcUnion.empty()

    def right_section(self, x) -> ArcUnion:
        return ArcUnion.of([(a, b) for a, b, B in self.strips if x in B])


# -- product measure ---------------------------------------------------------


@dataclass(frozen=True)
class ProductMeasure:
    """``mu x nu`` on G x X.

    With two finite factors ``grid`` lists ``(g, x, mu(g) nu(x))`` in
    row-major canonical order; otherwise ``grid`` is ``None`` and pairs are
    drawn from independent streams.
    """

    left: object
    right: object
    grid: tuple | None

    @property
    def is_finite(self) -> bool:
        return self.grid is not None

    def mass(self, W, budget: int | None = None, seed: int = 0, stream: int = 0,
             delta: float = DEFAULT_DELTA):
        """Direct mass of ``W``: grid summation, or an estimate from pair draws."""
        if self.grid is not None:
            exact = all(isinstance(w, Fraction) for *_, w in self.grid)
            return sum((w for g, x, w in self.grid if (g, x) in W), Fraction(0) if exact else 0.0)
        if not budget:
            raise MeasureError("sampled product needs a positive budget")
        gs, xs = self.draw(budget, seed, stream)
        hits = np.fromiter(((g, x) in W for g, x in zip(gs.tolist(), xs.tolist())), dtype=bool, count=budget)
        return Estimate(float(hits.mean()), hoeffding_half_width(1.0, budget, delta), budget)

    def draw(self, n: int, seed: int = 0, stream: int = 0, start: int = 0):
        """Paired draws; the two coordinates use independent child streams."""
        gs = _sampler(self.left)(seed, derive_stream(stream, 1), start, n)
        xs = _sampler(self.right)(seed, derive_stream(stream, 2), start, n)
        return gs, xs


def product(mu, nu) -> ProductMeasure:
    """Product measure; on finite factors the rectangle formula holds exactly."""
    if isinstance(mu, FiniteMeasure) and isinstance(nu, FiniteMeasure):
        grid = tuple((g, x, a * b) for g, a in mu.atoms for x, b in nu.atoms)
        return ProductMeasure(mu, nu, grid)
    return ProductMeasure(mu, nu, None)


def slice_integral(lam: ProductMeasure, W, axis: str = LEFT, budget: int | None = None,
                   seed: int = 0, stream: int = 0, delta: float = DEFAULT_DELTA):
    """Iterated integral of the indicator of ``W``.

    ``axis="left"`` integrates ``nu(W_g)`` against ``mu``; ``axis="right"``
    integrates ``mu(W^x)`` against ``nu``.  The outer integral is a finite sum
    for a finite outer factor and a Monte Carlo :class:`Estimate` otherwise;
    the inner measure must be finite or carry an exact evaluator.
    """
    if not hasattr(W, "left_section"):
        raise ConvolutionError(f"inadmissible product set {type(W).__name__}")
    if axis == LEFT:
        outer, inner, section = lam.left, lam.right, W.left_section
    elif axis == RIGHT:
        outer, inner, section = lam.right, lam.left, W.right_section
    else:
        raise ConvolutionError(f"axis must be 'left' or 'right', not {axis!r}")
    if isinstance(inner, SampledMeasure) and inner.exact is None:
        raise ConvolutionError("inner measure needs an exact evaluator")
    if isinstance(outer, FiniteMeasure):
        acc = Fraction(0) if outer.mode == "exact" else 0.0
        for p, w in outer.atoms:
            acc += w * measure_of(inner, section(p))
        return acc
    if not budget:
        raise ConvolutionError("sampled outer factor needs a positive budget")
    pts = outer.draw(budget, seed, stream)
    vals = np.fromiter((float(measure_of(inner, section(p))) for p in pts.tolist()),
                       dtype=np.float64, count=budget)
    return Estimate(float(vals.mean()), hoeffding_half_width(1.0, budget, delta), budget)


# -- convolution -------------------------------------------------------------


def _check_system(sys: ActionSystem, mu, nu) -> None:
    for m, target, what in ((mu, sys.group, "group"), (nu, sys.space, "space")):
        if isinstance(m, FiniteMeasure):
            try:
                for p in m.support:
                    target.check(p)
            except ValueError as exc:
                raise ConvolutionError(f"measure does not live on the system's {what}: {exc}") from None
        elif isinstance(m, SampledMeasure) and m.space is not None and what == "space":
            if getattr(m.space, "kind", None) != sys.space.kind:
                raise ConvolutionError(f"sampled measure lives on {m.space!r}, not the system's space")


def _scaled_numerators(m: FiniteMeasure):
    den = lcm(*(w.denominator for w in m.weights))
    return [(p, w.numerator * (den // w.denominator)) for p, w in m.atoms], den


def convolve(sys: ActionSystem, mu, nu):
    """The convolution ``mu * nu``: push-forward of ``mu x nu`` through the action.

    Finite inputs give ``sum mu(g) nu(x) delta_{g.x}`` as a
    :class:`FiniteMeasure` on ``sys.space``.  Any sampled input gives a
    :class:`SampledMeasure` drawing ``g_i.x_i`` from independent streams.
    """
    _check_system(sys, mu, nu)
    if isinstance(mu, FiniteMeasure) and isinstance(nu, FiniteMeasure):
        if mu.mode == nu.mode == "exact":
            return _convolve_exact(sys, mu, nu)
        if sys.is_finite:
            m = sys.space.size
            out = _backend.table_convolve_float(
                sys.table_array(),
                [float(w) for w in mu.vector(sys.group.order)],
                [float(w) for w in nu.vector(m)],
            )
            return FiniteMeasure(tuple((y, float(out[y])) for y in range(m) if out[y] > 0), sys.space)
        acc: dict = {}
        for g, a in mu.atoms:
            for x, b in nu.atoms:
                y = sys.act(g, x)
                acc[y] = acc.get(y, 0.0) + float(a) * float(b)
        return FiniteMeasure(tuple(acc.items()), sys.space)
    return _convolve_sampled(sys, mu, nu)


def _convolve_exact(sys: ActionSystem, mu: FiniteMeasure, nu: FiniteMeasure) -> FiniteMeasure:
    # integer numerators over a common denominator keep the grid sum cheap and exact
    left, dl = _scaled_numerators(mu)
    right, dr = _scaled_numerators(nu)
    acc: dict = {}
    if sys.is_finite:
        table = sys.table
        for g, a in left:
            row = table[g]
            for x, b in right:
                y = row[x]
                acc[y] = acc.get(y, 0) + a * b
    else:
        for g, a in left:
            for x, b in right:
                y = sys.act(g, x)
                acc[y] = acc.get(y, 0) + a * b
    den = dl * dr
    return FiniteMeasure(tuple((y, Fraction(c, den)) for y, c in acc.items()), sys.space)


def _convolve_sampled(sys: ActionSystem, mu, nu) -> SampledMeasure:
    gsamp, xsamp = _sampler(mu), _sampler(nu)

    def sampler(seed, stream, start, n):
        gs = gsamp(seed, derive_stream(stream, 1), start, n)
        xs = xsamp(seed, derive_stream(stream, 2), start, n)
        return sys.act_many(gs, xs)

    exact = expect = None
    invariant = False
    circle = isinstance(sys.group, CircleGroup)
    if circle and (getattr(mu, "invariant", False) or getattr(nu, "invariant", False)):
        # Haar absorbs: mu * Haar = Haar * nu = Haar
        haar = mu if getattr(mu, "invariant", False) else nu
        exact, expect, invariant = haar.exact, haar.expect, True
    elif isinstance(mu, FiniteMeasure):
        if nu.exact is not None:
            exact = lambda E: math.fsum(
                float(w) * nu.exact(preimage_set(sys, g, E)) for g, w in mu.atoms
            )
        if nu.expect is not None:
            expect = lambda fn: math.fsum(
                float(w) * nu.expect(lambda xs, g=g: fn(sys.act_many(np.full(np.shape(xs), g), xs)))
                for g, w in mu.atoms
            )
    label = f"({getattr(mu, 'label', 'finite')} * {getattr(nu, 'label', 'finite')})"
    return SampledMeasure(sampler, sys.space, exact, expect, label, invariant)


def convolve_via_group_integral(sys: ActionSystem, mu, nu, E, budget: int | None = None,
                                seed: int = 0, stream: int = 0, delta: float = DEFAULT_DELTA):
    """``(mu * nu)(E)`` as ``integral of nu(g^-1 E) d mu(g)``."""
    if isinstance(nu, SampledMeasure) and nu.exact is None:
        raise ConvolutionError("group-integral formula needs nu to be finite or exactly evaluable")
    if isinstance(mu, FiniteMeasure):
        acc = Fraction(0) if mu.mode == "exact" else 0.0
        for g, w in mu.atoms:
            acc += w * measure_of(nu, preimage_set(sys, g, E))
        return acc
    if not budget:
        raise ConvolutionError("sampled mu needs a positive budget")
    gs = mu.draw(budget, seed, stream)
    vals = np.fromiter((float(measure_of(nu, preimage_set(sys, g, E))) for g in gs.tolist()),
                       dtype=np.float64, count=budget)
    return Estimate(float(vals.mean()), hoeffding_half_width(1.0, budget, delta), budget)


def convolve_via_section_integral(sys: ActionSystem, mu, nu, E, budget: int | None = None,
                                  seed: int = 0, stream: int = 0, delta: float = DEFAULT_DELTA):
    """``(mu * nu)(E)`` as ``integral of mu(E:x) d nu(x)``."""
    if isinstance(mu, SampledMeasure) and mu.exact is None:
        raise ConvolutionError("section-integral formula needs mu to be finite or exactly evaluable")
    if isinstance(nu, FiniteMeasure):
        acc = Fraction(0) if nu.mode == "exact" else 0.0
        for x, w in nu.atoms:
            acc += w * measure_of(mu, section_set(sys, E, x))
        return acc
    if not budget:
        raise ConvolutionError("sampled nu needs a positive budget")
    xs = nu.draw(budget, seed, stream)
    vals = np.fromiter((float(measure_of(mu, section_set(sys, E, x))) for x in xs.tolist()),
                       dtype=np.float64, count=budget)
    return Estimate(float(vals.mean()), hoeffding_half_width(1.0, budget, delta), budget)


class FubiniTriple(NamedTuple):
    """``integral f d(mu*nu)`` and the two iterated integrals of ``f(g.x)``.

    Half-widths are zero for exact values.
    """

    direct: object
    mu_inner: object
    nu_inner: object
    half_widths: tuple = (0, 0, 0)

    def values(self) -> tuple:
        return (self.direct, self.mu_inner, self.nu_inner)

    def agree(self) -> bool:
        """Pairwise agreement within the sum of the two half-widths."""
        vals, hws = self.values(), self.half_widths
        return all(
            abs(vals[i] - vals[j]) <= hws[i] + hws[j] for i in range(3) for j in range(i + 1, 3)
        )


def _atoms_or_sample(m, budget: int, seed: int, stream: int):
    """Points and float weights: the atoms of a finite measure, else ``budget`` draws."""
    if isinstance(m, FiniteMeasure):
        return np.asarray(m.support), np.asarray([float(w) for w in m.weights]), False
    return m.draw(budget, seed, stream), np.full(budget, 1.0 / budget), True


def _iterated(sys: ActionSystem, f: TestFunction, outer, inner, inner_is_group: bool,
              budget: int, seed: int, stream: int, delta: float):
    """``integral [integral f(g.x) d inner] d outer`` by nested sums.

    Sampled factors are replaced by ``budget`` draws on their own child
    streams.  With both factors sampled the double average has bounded
    differences ``width/n`` in ``2n`` independent draws, so McDiarmid gives the
    half-width ``width * sqrt(ln(2/delta) / n)``; with one sampled factor it
    is the plain Hoeffding radius.
    """
    po, wo, so = _atoms_or_sample(outer, budget, seed, derive_stream(stream, 1))
    pi, wi, si = _atoms_or_sample(inner, budget, seed, derive_stream(stream, 2))
    total = 0.0
    chunk = max(1, (1 << 20) // max(1, len(pi)))
    for lo in range(0, len(po), chunk):
        block = po[lo:lo + chunk]
        if inner_is_group:
            pts = sys.act_many(np.broadcast_to(pi[None, :], (len(block), len(pi))),
                               np.broadcast_to(block[:, None], (len(block), len(pi))))
        else:
            pts = sys.act_many(np.broadcast_to(block[:, None], (len(block), len(pi))),
                               np.broadcast_to(pi[None, :], (len(block), len(pi))))
        vals = f.many(pts.ravel()).reshape(pts.shape)
        total += float(wo[lo:lo + chunk] @ (vals @ wi))
    if so and si:
        hw = f.width * math.sqrt(math.log(2.0 / delta) / budget)
    elif so or si:
        hw = hoeffding_half_width(f.width, budget, delta)
    else:
        hw = 0.0
    return total, hw


def fubini_triple(sys: ActionSystem, f: TestFunction, mu, nu, budget: int | None = None,
                  seed: int = 0, stream: int = 0, delta: float = DEFAULT_DELTA) -> FubiniTriple:
    """The three sides of the Fubini identity for the convolution.

    Returns ``(integral f d(mu*nu), iint f(g.x) dmu dnu, iint f(g.x) dnu dmu)``
    where the middle value integrates over ``mu`` first.  With finite
    measures all three are computed exactly.  Otherwise each is a Monte Carlo
    estimate on its own streams, reported with its half-width.
    """
    if isinstance(mu, FiniteMeasure) and isinstance(nu, FiniteMeasure):
        direct = _integrate_finite(f, convolve(sys, mu, nu))
        zero = Fraction(0) if mu.mode == nu.mode == "exact" else 0.0
        mu_inner = zero
        for x, b in nu.atoms:
            inner = zero
            for g, a in mu.atoms:
                inner += a * f(sys.act(g, x))
            mu_inner += b * inner
        nu_inner = zero
        for g, a in mu.atoms:
            inner = zero
            for x, b in nu.atoms:
                inner += b * f(sys.act(g, x))
            nu_inner += a * inner
        return FubiniTriple(direct, mu_inner, nu_inner)
    if not budget:
        raise ConvolutionError("sampled Fubini check needs a positive budget")
    conv = convolve(sys, mu, nu)
    if isinstance(conv, FiniteMeasure):
        direct, hw_direct = float(_integrate_finite(f, conv)), 0.0
    else:
        direct = float(f.many(conv.draw(budget, seed, derive_stream(stream, 11))).mean())
        hw_direct = hoeffding_half_width(f.width, budget, delta)

    mu_inner, hw_mu = _iterated(sys, f, nu, mu, True, budget, seed, derive_stream(stream, 12), delta)
    nu_inner, hw_nu = _iterated(sys, f, mu, nu, False, budget, seed, derive_stream(stream, 13), delta)
    return FubiniTriple(direct, mu_inner, nu_inner, (hw_direct, hw_mu, hw_nu))


def _integrate_finite(f: TestFunction, m: FiniteMeasure):
    acc = Fraction(0) if m.mode == "exact" else 0.0
    for x, w in m.atoms:
        acc += w * f(x)
    return acc


@lru_cache(maxsize=64)
def _regular(group) -> ActionSystem:
    if isinstance(group, FiniteGroup):
        return ActionSystem(group, FiniteSpace(group.order, group.labels), group.table, "regular")
    return ActionSystem(group, CircleSpace(), None, "regular")


def convolve_group(group, mu1, mu2):
    """Convolution of two measures on a group (left translation on itself).

    ``group`` may be a group presentation or an action system whose group is
    used.
    """
    if isinstance(group, ActionSystem):
        group = group.group
    return convolve(_regular(group), mu1, mu2)


def full_pairs(sys: ActionSystem) -> PairSet:
    """All of G x X for a finite system."""
    return PairSet((g, x) for g in sys.group.elements() for x in sys.space.points())

