"""Property suites over random rational instances.

Each suite returns a flat record ``{"check": ..., "passed": ..., ...}``.  The
CLI ``verify`` command and the acceptance tests both run these.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

from measconv.convolution import (
    LEFT,
    RIGHT,
    PairSet,
    RectangleUnion,
    convolve,
    convolve_group,
    convolve_via_group_integral,
    convolve_via_section_integral,
    fubini_triple,
    product,
    slice_integral,
)
from measconv.ellis import measure_action_matrix
from measconv.groups import ActionSystem, ArcUnion, PointSet, preimage_set, section_set
from measconv.measures import (
    FiniteMeasure,
    TestFunction,
    average_of_points,
    cosine,
    cosine_squared,
    dirac,
    measure_of,
    pushforward,
    sine,
    tv_distance,
    uniform_arc,
    uniform_circle,
)
from measconv.weak import Constraint, WeakNeighborhood, member, pull_back_neighborhood


def rng_for(seed: int, suite: str) -> random.Random:
    return random.Random(f"{seed}:{suite}")


def random_measure(rng: random.Random, n: int, max_den: int = 12, mode: str = "exact",
                   space=None) -> FiniteMeasure:
    """Random measure on ``0..n-1``; exact weights have small denominators."""
    k = rng.randint(1, n)
    support = rng.sample(range(n), k)
    raw = [rng.randint(1, max_den) for _ in support]
    total = sum(raw)
    if mode == "exact":
        return FiniteMeasure(tuple((p, Fraction(r, total)) for p, r in zip(support, raw)), space)
    return FiniteMeasure(tuple((p, r / total) for p, r in zip(support, raw)), space)


def random_function(rng: random.Random, m: int, q: int = 8) -> TestFunction:
    """Random rational function on ``0..m-1`` with values in ``[-1, 1]``."""
    vals = [Fraction(rng.randint(-q, q), q) for _ in range(m)]
    return TestFunction(vals.__getitem__, 1, "rand")


def _close(a, b, tol) -> bool:
    return a == b if tol == 0 else abs(float(a) - float(b)) <= tol


def _record(check: str, trials: int, failures: int, **extra) -> dict:
    return {"check": check, "trials": trials, "failures": failures, "passed": failures == 0, **extra}


# -- finite-system suites ----------------------------------------------------


def associativity(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
                  tol: float = 0) -> dict:
    rng = rng_for(seed, "associativity")
    n, m = sys.group.order, sys.space.size
    bad = 0
    worst = Fraction(0) if tol == 0 else 0.0
    for _ in range(trials):
        mu1 = random_measure(rng, n, mode=mode)
        mu2 = random_measure(rng, n, mode=mode)
        nu = random_measure(rng, m, mode=mode, space=sys.space)
        lhs = convolve(sys, convolve_group(sys, mu1, mu2), nu)
        rhs = convolve(sys, mu1, convolve(sys, mu2, nu))
        d = tv_distance(lhs, rhs)
        worst = max(worst, d)
        bad += not _close(d, 0, tol)
    return _record("associativity", trials, bad, max_tv=str(worst))


def identity_laws(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
                  tol: float = 0) -> dict:
    """Identity, Dirac-on-measure and Dirac-on-Dirac laws.

    The Dirac laws run over every ``(g, x)``; random ``nu`` fill in the rest.
    """
    rng = rng_for(seed, "identity")
    e = sys.group.identity
    bad = count = 0
    one = dirac(e) if mode == "exact" else dirac(e).to_float()
    for g in sys.group.elements():
        dg = dirac(g) if mode == "exact" else dirac(g).to_float()
        for x in sys.space.points():
            count += 1
            dx = dirac(x) if mode == "exact" else dirac(x).to_float()
            bad += not _close(tv_distance(convolve(sys, dg, dx), dirac(sys.act(g, x))), 0, tol)
        for _ in range(max(1, trials // max(1, sys.group.order))):
            nu = random_measure(rng, sys.space.size, mode=mode)
            count += 1
            bad += not _close(tv_distance(convolve(sys, dg, nu), pushforward(sys, g, nu)), 0, tol)
    for _ in range(trials):
        nu = random_measure(rng, sys.space.size, mode=mode)
        count += 1
        out = convolve(sys, one, nu)
        bad += (out != nu) if tol == 0 else not _close(tv_distance(out, nu), 0, tol)
    return _record("identity_and_dirac", count, bad)


def three_formulas(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
                   tol: float = 0, max_exhaustive: int = 4) -> dict:
    rng = rng_for(seed, "three_formulas")
    n, m = sys.group.order, sys.space.size
    bad = count = 0
    for _ in range(trials):
        mu = random_measure(rng, n, mode=mode)
        nu = random_measure(rng, m, mode=mode)
        conv = convolve(sys, mu, nu)
        if m <= max_exhaustive:
            sets = PointSet.all_subsets(m)
        else:
            sets = (PointSet(rng.getrandbits(m), m) for _ in range(16))
        for E in sets:
            count += 1
            a = measure_of(conv, E)
            b = convolve_via_group_integral(sys, mu, nu, E)
            c = convolve_via_section_integral(sys, mu, nu, E)
            bad += not (_close(a, b, tol) and _close(b, c, tol))
    return _record("three_formulas", count, bad)


def fubini_finite(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
                  tol: float = 0) -> dict:
    rng = rng_for(seed, "fubini")
    n, m = sys.group.order, sys.space.size
    bad = 0
    for _ in range(trials):
        mu = random_measure(rng, n, mode=mode)
        nu = random_measure(rng, m, mode=mode)
        t = fubini_triple(sys, random_function(rng, m), mu, nu)
        bad += not (_close(t.direct, t.mu_inner, tol) and _close(t.mu_inner, t.nu_inner, tol))
    return _record("fubini", trials, bad)


def slice_formula(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
                  tol: float = 0) -> dict:
    rng = rng_for(seed, "slice")
    n, m = sys.group.order, sys.space.size
    bad = 0
    for _ in range(trials):
        mu = random_measure(rng, n, mode=mode)
        nu = random_measure(rng, m, mode=mode)
        W = PairSet((g, x) for g in range(n) for x in range(m) if rng.random() < 0.5)
        lam = product(mu, nu)
        direct = lam.mass(W)
        bad += not (_close(direct, slice_integral(lam, W, LEFT), tol)
                    and _close(direct, slice_integral(lam, W, RIGHT), tol))
    return _record("slice", trials, bad)


def homomorphism(sys: ActionSystem, trials: int, seed: int = 0) -> dict:
    rng = rng_for(seed, "homomorphism")
    n = sys.group.order
    bad = 0
    for _ in range(trials):
        mu1, mu2 = random_measure(rng, n), random_measure(rng, n)
        P = measure_action_matrix(sys, convolve_group(sys, mu1, mu2))
        Q = measure_action_matrix(sys, mu1) @ measure_action_matrix(sys, mu2)
        bad += P != Q
    return _record("homomorphism", trials, bad)


def random_neighborhood(rng: random.Random, m: int, q: int = 8) -> WeakNeighborhood:
    constraints = []
    for _ in range(rng.randint(1, 3)):
        f = random_function(rng, m, q)
        r = Fraction(rng.randint(-q, q), q)
        s = r + Fraction(rng.randint(1, q), q)
        constraints.append(Constraint(f, r, s))
    return WeakNeighborhood(tuple(constraints))


def continuity(sys: ActionSystem, trials: int, seed: int = 0) -> dict:
    """Soundness of the pulled-back neighbourhood, with the exact integral identity."""
    rng = rng_for(seed, "continuity")
    n, m = sys.group.order, sys.space.size
    bad = inside = 0
    for _ in range(trials):
        mu = random_measure(rng, n)
        nu2 = random_measure(rng, m)
        N = random_neighborhood(rng, m)
        Np = pull_back_neighborhood(sys, mu, N)
        pulled = member(nu2, Np)
        pushed = member(convolve(sys, mu, nu2), N)
        inside += pulled.inside
        bad += pulled.values != pushed.values or (pulled.inside and not pushed.inside)
    return _record("continuity", trials, bad, inside_cases=inside)


FINITE_SUITES = ("associativity", "identity_and_dirac", "three_formulas", "fubini", "slice",
                 "homomorphism", "continuity")


def run_finite(sys: ActionSystem, trials: int, seed: int = 0, mode: str = "exact",
               tol: float = 0) -> list:
    records = [
        associativity(sys, trials, seed, mode, tol),
        identity_laws(sys, trials, seed, mode, tol),
        three_formulas(sys, trials, seed, mode, tol),
        fubini_finite(sys, trials, seed, mode, tol),
        slice_formula(sys, trials, seed, mode, tol),
    ]
    if mode == "exact":
        records.append(homomorphism(sys, trials, seed))
        records.append(continuity(sys, trials, seed))
    return records


# -- circle suites -----------------------------------------------------------

CIRCLE_FUNCTIONS = (cosine(1), sine(1), cosine_squared(1))


def circle_action_laws(sys: ActionSystem, trials: int, seed: int = 0, tol: float = 1e-12) -> dict:
    rng = rng_for(seed, "circle_laws")
    bad = 0
    for _ in range(trials):
        g, h, x = rng.random(), rng.random(), rng.random()
        lhs = sys.act(sys.group.mul(g, h), x)
        rhs = sys.act(g, sys.act(h, x))
        d = abs(lhs - rhs)
        bad += min(d, 1 - d) > tol or sys.act(sys.group.identity, x) != x
    return _record("circle_action_laws", trials, bad)


def circle_haar_invariance(sys: ActionSystem, trials: int, seed: int = 0, tol: float = 1e-12) -> dict:
    """Rotating Lebesgue measure leaves every arc union's mass unchanged."""
    rng = rng_for(seed, "circle_haar")
    u = uniform_circle()
    bad = 0
    for _ in range(trials):
        g = rng.random()
        E = ArcUnion.of([(rng.random(), rng.random()) for _ in range(rng.randint(1, 3))])
        bad += abs(measure_of(pushforward(sys, g, u), E) - measure_of(u, E)) > tol
    return _record("circle_haar_invariance", trials, bad)


def circle_fubini(sys: ActionSystem, runs: int, budget: int, seed: int = 0, delta: float = 0.05) -> list:
    """Monte Carlo Fubini with uniform ``mu``, ``nu``; one record per test function."""
    u = uniform_circle()
    out = []
    for f in CIRCLE_FUNCTIONS:
        ok = 0
        for r in range(runs):
            ok += fubini_triple(sys, f, u, u, budget, seed=seed, stream=r, delta=delta).agree()
        rate = ok / runs
        out.append({"check": f"circle_fubini[{f.label}]", "trials": runs, "failures": runs - ok,
                    "agreement_rate": rate, "passed": rate >= 1 - delta})
    return out


def circle_group_formula(sys: ActionSystem, trials: int, seed: int = 0, tol: float = 1e-12) -> dict:
    """Finite ``mu`` against an arc-uniform ``nu``: the group-integral formula
    matches the convolution's exact evaluator."""
    rng = rng_for(seed, "circle_group_formula")
    bad = 0
    for _ in range(trials):
        mu = average_of_points([rng.random() for _ in range(rng.randint(1, 5))])
        nu = uniform_arc(rng.random(), rng.uniform(0.05, 1.0))
        E = ArcUnion.of([(rng.random(), rng.random())])
        direct = measure_of(convolve(sys, mu, nu), E)
        via = convolve_via_group_integral(sys, mu, nu, E)
        bad += abs(float(direct) - float(via)) > tol
    return _record("circle_group_formula", trials, bad)


def circle_slice(sys: ActionSystem, runs: int, budget: int, seed: int = 0, delta: float = 0.05) -> dict:
    """Slice integrals of a rectangle union under uniform x uniform vs. its area."""
    rng = rng_for(seed, "circle_slice")
    u = uniform_circle()
    lam = product(u, u)
    ok = 0
    for r in range(runs):
        W = RectangleUnion.of([((rng.random(), rng.random()), (rng.random(), rng.random()))
                               for _ in range(2)])
        area = math.fsum((b - a) * B.length() for a, b, B in W.strips)
        est = slice_integral(lam, W, LEFT, budget, seed=seed, stream=r, delta=delta)
        ok += abs(est.value - area) <= est.half_width
    rate = ok / runs
    return {"check": "circle_slice", "trials": runs, "failures": runs - ok, "agreement_rate": rate,
            "passed": rate >= 1 - delta}


def run_circle(sys: ActionSystem, trials: int, seed: int = 0, budget: int = 400,
               runs: int = 100, delta: float = 0.05) -> list:
    return [
        circle_action_laws(sys, trials, seed),
        circle_haar_invariance(sys, trials, seed),
        circle_group_formula(sys, trials, seed),
        *circle_fubini(sys, runs, budget, seed, delta),
        circle_slice(sys, runs, budget, seed, delta),
    ]


def exhaustive_sets(sys: ActionSystem):
    """Every subset of a finite space (use only for small spaces)."""
    return list(PointSet.all_subsets(sys.space.size))


def section_consistency(sys: ActionSystem) -> bool:
    """``x in g^-1 E  <=>  g in E:x  <=>  g.x in E`` over all ``g, x, E``."""
    for E in exhaustive_sets(sys):
        for g, x in itertools.product(sys.group.elements(), sys.space.points()):
            a = x in preimage_set(sys, g, E)
            b = g in section_set(sys, E, x)
            c = sys.act(g, x) in E
            if not a == b == c:
                return False
    return True

