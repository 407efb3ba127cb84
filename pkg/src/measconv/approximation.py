"""Approximating the action of a measure by an empirical average of Diracs.

Given a target ``mu`` on the group, pinned measures ``nu_i``, test functions
``f_i`` and bounds ``(r_i, s_i)``, find ``g_1..g_n`` such that
``Av(g) * nu_i`` satisfies every constraint.  With
``H_i(g) = integral f_i(g.x) d nu_i(x)`` the constraint values are means of
``H_i`` over the sample, so Hoeffding plus a union bound over the ``k``
constraints gives an explicit ``n`` for failure probability ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from measconv.convolution import convolve
from measconv.groups import ActionSystem
from measconv.measures import (
    FiniteMeasure,
    MeasureError,
    TestFunction,
    as_sampled,
    average_of_points,
    derive_stream,
    integrate,
)

DEFAULT_MAX_RETRIES = 3
TARGET_BUDGET = 200_000


class UnsolvableRequest(ValueError):
    """The slack condition ``r_i + eps < target_i < s_i - eps`` fails."""


def hoeffding_samples(eps: float, delta: float, k: int = 1, width: float = 1.0) -> int:
    """Smallest ``n`` with ``2k exp(-2 n eps^2 / width^2) <= delta``.

    ``width`` is the length of the range of the averaged functions; constant
    functions (width 0) need a single draw.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if k < 1:
        raise ValueError("need at least one constraint")
    if width < 0:
        raise ValueError("width must be non-negative")
    if width == 0:
        return 1
    return max(1, math.ceil(width**2 * math.log(2 * k / delta) / (2 * eps**2)))


def draw_elements(mu, n: int, seed: int = 0, stream: int = 0) -> list:
    """``n`` i.i.d. draws from ``mu`` (inverse CDF for finite measures)."""
    if n < 1:
        raise ValueError("need at least one draw")
    sampler = as_sampled(mu) if isinstance(mu, FiniteMeasure) else mu
    return sampler.draw(n, seed, stream).tolist()


def exact_elements(mu: FiniteMeasure, n: int | None = None) -> list:
    """Deterministic ``g`` with ``Av(g) == mu``; ``n`` must be a multiple of the weights' lcm."""
    if mu.mode != "exact":
        raise MeasureError("exact enumeration needs rational weights")
    base = lcm(*(w.denominator for w in mu.weights))
    n = base if n is None else n
    if n % base:
        raise ValueError(f"n={n} is not a multiple of {base}")
    return [g for g, w in mu.atoms for _ in range(int(w * n))]


def empirical_average(mu, n: int, seed: int = 0, stream: int = 0, exact: bool = False,
                      space=None) -> FiniteMeasure:
    """``Av(g)`` for ``g`` drawn i.i.d. from ``mu`` (or enumerated when ``exact``)."""
    gbar = exact_elements(mu, n) if exact else draw_elements(mu, n, seed, stream)
    return average_of_points(gbar, space)


@dataclass(frozen=True)
class PinnedConstraint:
    """``lower < integral f d(mu * nu) < upper`` for the pinned measure ``nu``."""

    nu: object
    f: TestFunction
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("constraint needs lower < upper")


@dataclass(frozen=True)
class ApproximationRequest:
    system: ActionSystem
    target: object
    constraints: tuple
    eps: float
    delta: float = 0.05
    max_retries: int = DEFAULT_MAX_RETRIES
    exact: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.constraints:
            raise ValueError("request needs at least one constraint")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.exact and not isinstance(self.target, FiniteMeasure):
            raise ValueError("exact mode needs a finite target measure")


@dataclass
class ApproximationReport:
    n: int
    seed: int
    attempts: int
    inside: bool
    records: list = field(default_factory=list)

    def as_records(self) -> list:
        return [dict(r, n=self.n, seed=self.seed, attempts=self.attempts) for r in self.records]


def action_profile(sys: ActionSystem, f: TestFunction, nu) -> TestFunction:
    """``H(g) = integral f(g.x) d nu(x)`` as a test function on the group."""
    if isinstance(nu, FiniteMeasure):
        atoms = nu.atoms

        def H(g):
            if isinstance(g, np.ndarray):
                out = np.zeros(g.shape, dtype=np.float64)
                for x, w in atoms:
                    out += float(w) * f.many(sys.act_many(g, np.full(g.shape, x)))
                return out
            acc = Fraction(0) if nu.mode == "exact" else 0.0
            for x, w in atoms:
                acc += w * f(sys.act(g, x))
            return acc
    elif nu.expect is not None:
        def one(g):
            return float(nu.expect(lambda xs: f.many(sys.act_many(np.full(np.shape(xs), g), xs))))

        def H(g):
            if isinstance(g, np.ndarray):
                return np.fromiter((one(t) for t in g.tolist()), dtype=np.float64, count=g.size)
            return one(g)
    else:
        raise MeasureError("pinned sampled measure needs an expectation hook")
    return TestFunction(H, f.bound, f"H[{f.label}]", f.lower, f.upper, vectorized=True)


def _expectation(f: TestFunction, m):
    if isinstance(m, FiniteMeasure):
        return integrate(f, m)
    if m.expect is None:
        raise MeasureError("no exact expectation available")
    return float(m.expect(f.many))


def _target(H: TestFunction, mu, seed: int):
    """``integral H d mu`` and its uncertainty (0 when computed exactly)."""
    if isinstance(mu, FiniteMeasure):
        return integrate(H, mu), 0.0
    if mu.expect is not None:
        return float(mu.expect(H.many)), 0.0
    est = integrate(H, mu, TARGET_BUDGET, seed, derive_stream(seed, 0xA11))
    return est.value, est.half_width


def approximate_action(req: ApproximationRequest, seed: int = 0):
    """Find ``g`` with ``(Av(g) * -)`` inside the pinned neighbourhood.

    Returns ``(gbar, report)``.  Raises :class:`UnsolvableRequest` when the
    targets do not clear their bounds by ``eps``.  A statistical miss is
    retried on fresh streams up to ``max_retries`` times; the report records
    every attempt count and the final verdict.
    """
    sys = req.system
    profiles = [action_profile(sys, c.f, c.nu) for c in req.constraints]
    targets = [_target(H, req.target, seed) for H in profiles]
    bad = [
        i for i, (c, (t, _)) in enumerate(zip(req.constraints, targets))
        if not c.lower + req.eps < t < c.upper - req.eps
    ]
    if bad:
        detail = ", ".join(
            f"#{i}: target {float(targets[i][0]):.6g} not in "
            f"({req.constraints[i].lower} + eps, {req.constraints[i].upper} - eps)"
            for i in bad
        )
        raise UnsolvableRequest(f"slack condition violated for eps={req.eps}: {detail}")

    k = len(req.constraints)
    width = max(H.width for H in profiles)
    if req.exact:
        gbar_fixed = exact_elements(req.target)
        n = len(gbar_fixed)
    else:
        gbar_fixed = None
        n = hoeffding_samples(req.eps, req.delta, k, width)
    half_width = 0.0 if req.exact else (
        width * math.sqrt(math.log(2 * k / req.delta) / (2 * n)) if width else 0.0
    )

    attempt = 0
    while True:
        attempt += 1
        gbar = gbar_fixed or draw_elements(req.target, n, seed, stream=attempt - 1)
        av = average_of_points(gbar, sys.group)
        records = []
        for i, (c, H, (t, t_hw)) in enumerate(zip(req.constraints, profiles, targets)):
            achieved = _expectation(c.f, convolve(sys, av, c.nu))
            ok = c.lower < achieved < c.upper
            records.append({
                "constraint": i,
                "function": c.f.label,
                "lower": c.lower,
                "upper": c.upper,
                "target": t,
                "target_half_width": t_hw,
                "achieved": achieved,
                "profile_mean": _expectation(H, av),
                "half_width": half_width,
                "verdict": "inside" if ok else "outside",
            })
        inside = all(r["verdict"] == "inside" for r in records)
        if inside or req.exact or attempt > req.max_retries:
            break
    return gbar, ApproximationReport(n, seed, attempt, inside, records)
