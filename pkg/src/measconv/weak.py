"""Basic weak-open neighbourhoods of measures and the continuity witness.

A neighbourhood is a finite list of constraints ``lower < integral f dnu < upper``.
Membership is exact for finite measures (boundary hits count as outside,
the sets being open) and statistical for sampled measures.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from measconv.groups import ActionSystem, ArcUnion, PointSet
from measconv.measures import (
    DEFAULT_DELTA,
    FiniteMeasure,
    MeasureError,
    TestFunction,
    constant,
    cosine,
    cosine_squared,
    hoeffding_half_width,
    indicator,
    integrate,
    sine,
)


class Verdict(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Constraint:
    f: TestFunction
    lower: object
    upper: object

    def __post_init__(self):
        if not self.lower < self.upper:
            raise MeasureError(f"constraint on {self.f.label}: lower {self.lower} must be < upper {self.upper}")


@dataclass(frozen=True)
class WeakNeighborhood:
    constraints: tuple

    @classmethod
    def of(cls, triples) -> "WeakNeighborhood":
        return cls(tuple(c if isinstance(c, Constraint) else Constraint(*c) for c in triples))

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)


class Membership(NamedTuple):
    verdict: Verdict
    margin: object
    values: tuple
    half_widths: tuple

    @property
    def inside(self) -> bool:
        return self.verdict is Verdict.INSIDE


def member(nu, N: WeakNeighborhood, budget: int | None = None, seed: int = 0, stream: int = 0,
           delta: float = DEFAULT_DELTA) -> Membership:
    """Is ``nu`` in the neighbourhood ``N``?

    ``margin`` is the smallest distance from an integral to its nearest
    bound (exact mode) or that distance minus the half-width (sampled mode);
    a non-positive margin means not inside.
    """
    if isinstance(nu, FiniteMeasure):
        values = tuple(integrate(c.f, nu) for c in N)
        margin = min(min(v - c.lower, c.upper - v) for v, c in zip(values, N))
        verdict = Verdict.INSIDE if margin > 0 else Verdict.OUTSIDE
        return Membership(verdict, margin, values, (0,) * len(N))
    if not budget:
        raise MeasureError("sampled membership needs a positive budget")
    pts = nu.draw(budget, seed, stream)
    values, hws = [], []
    inside, outside = True, False
    margin = None
    for c in N:
        v = float(c.f.many(pts).mean())
        hw = hoeffding_half_width(c.f.width, budget, delta)
        values.append(v)
        hws.append(hw)
        m = min(v - c.lower, c.upper - v) - hw
        margin = m if margin is None else min(margin, m)
        if m <= 0:
            inside = False
        if v + hw <= c.lower or v - hw >= c.upper:
            outside = True
    verdict = Verdict.OUTSIDE if outside else Verdict.INSIDE if inside else Verdict.UNDECIDED
    return Membership(verdict, margin, tuple(values), tuple(hws))


def dirac_embedding_check(x, y, testset: Sequence[TestFunction]):
    """``max_i |f_i(x) - f_i(y)|``: how far apart ``delta_x`` and ``delta_y`` look."""
    return max((abs(f(x) - f(y)) for f in testset), default=0)


def pulled_back(sys: ActionSystem, mu, f: TestFunction, budget: int | None = None,
                seed: int = 0, stream: int = 0) -> TestFunction:
    """``H(x) = integral f(g.x) d mu(g)`` as a test function on the space.

    A sampled ``mu`` is replaced by a frozen sample of ``budget`` elements so
    that ``H`` is an honest deterministic function.
    """
    if isinstance(mu, FiniteMeasure):
        atoms = mu.atoms
    else:
        if not budget:
            raise MeasureError("pulling back through a sampled measure needs a budget")
        gs = mu.draw(budget, seed, stream)
        atoms = tuple((g, 1.0 / budget) for g in gs.tolist())
    gs_arr = np.asarray([g for g, _ in atoms])
    ws_arr = np.asarray([float(w) for _, w in atoms])

    def H(x):
        if isinstance(x, np.ndarray):
            out = np.zeros(x.shape, dtype=np.float64)
            for g, w in zip(gs_arr, ws_arr):
                out += w * f.many(sys.act_many(np.full(x.shape, g), x))
            return out
        acc = Fraction(0) if isinstance(atoms[0][1], Fraction) else 0.0
        for g, w in atoms:
            acc += w * f(sys.act(g, x))
        return acc

    return TestFunction(H, f.bound, f"H[{f.label}]", f.lower, f.upper, vectorized=True)


def pull_back_neighborhood(sys: ActionSystem, mu, N: WeakNeighborhood, budget: int | None = None,
                           seed: int = 0, stream: int = 0) -> WeakNeighborhood:
    """Neighbourhood ``N'`` with ``nu' in N' => mu * nu' in N``.

    Each constraint ``(f, r, s)`` becomes ``(H, r, s)`` with
    ``H(x) = integral f(g.x) d mu(g)``, since ``integral f d(mu*nu') = integral H dnu'``.
    """
    return WeakNeighborhood(tuple(
        Constraint(pulled_back(sys, mu, c.f, budget, seed, stream), c.lower, c.upper) for c in N
    ))


# -- catalog -----------------------------------------------------------------


def resolve_test_function(label: str, space=None) -> TestFunction:
    """Build a test function from a catalog label.

    ``const:<c>``; ``ind:<p>,<q>,...`` on finite spaces (labels or indices);
    ``ind:<a>-<b>`` for the arc ``[a, b)`` on the circle; ``cos:<k>``,
    ``sin:<k>``, ``cos2:<k>`` for trigonometric functions of frequency ``k``.
    """
    kind, _, arg = label.partition(":")
    try:
        if kind == "const":
            return constant(Fraction(arg) if "." not in arg and "e" not in arg else float(arg), label)
        if kind in ("cos", "sin", "cos2"):
            k = int(arg or 1)
            return {"cos": cosine, "sin": sine, "cos2": cosine_squared}[kind](k)
        if kind == "ind":
            if space is None or space.kind == "circle":
                a, b = (float(t) for t in arg.split("-"))
                return indicator(ArcUnion.of([(a, b)]), label)
            pts = [space.index(p.strip()) for p in arg.split(",") if p.strip()]
            return indicator(PointSet.of(pts, space.size), label)
    except (ValueError, KeyError) as exc:
        raise MeasureError(f"bad test-function label {label!r}: {exc}") from None
    raise MeasureError(f"unknown test-function label {label!r}")
