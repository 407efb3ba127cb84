import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from measconv.approximation import (
    ApproximationRequest,
    PinnedConstraint,
    UnsolvableRequest,
    action_profile,
    approximate_action,
    draw_elements,
    empirical_average,
    exact_elements,
    hoeffding_samples,
)
from measconv.convolution import convolve
from measconv.groups import PointSet, builtin_system
from measconv.measures import (
    FiniteMeasure,
    average_of_points,
    constant,
    cosine,
    dirac,
    indicator,
    integrate,
    sine,
    uniform_circle,
)

HALF = FiniteMeasure(((0, F(1, 2)), (1, F(1, 2))))


def test_hoeffding_examples():
    assert hoeffding_samples(0.1, 0.05, 1, 1.0) == 185
    assert hoeffding_samples(0.5, 0.5, 1, 1.0) == 3
    assert hoeffding_samples(0.1, 0.05, 1, 0.0) == 1


def test_hoeffding_closed_form():
    # width 2, two constraints, as in the circle scenario
    assert hoeffding_samples(0.05, 0.05, 2, 2.0) == math.ceil(4 * math.log(80) / (2 * 0.0025))


@pytest.mark.parametrize("bad", [(0, 0.05), (0.1, 0), (0.1, 1), (-1, 0.5)])
def test_hoeffding_rejects(bad):
    with pytest.raises(ValueError):
        hoeffding_samples(*bad)


@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.01, 0.99), st.floats(0.01, 0.99),
       st.integers(1, 5))
def test_hoeffding_monotone(e1, e2, d1, d2, k):
    e1, e2 = sorted((e1, e2))
    d1, d2 = sorted((d1, d2))
    assert hoeffding_samples(e1, d2, k) >= hoeffding_samples(e2, d2, k)
    assert hoeffding_samples(e2, d1, k) >= hoeffding_samples(e2, d2, k)


def test_empirical_dirac():
    assert empirical_average(dirac(1), 50, seed=3) == dirac(1)


def test_empirical_single_draw():
    g = draw_elements(HALF, 1, seed=9)[0]
    assert empirical_average(HALF, 1, seed=9) == dirac(g)


def test_empirical_z2_concentration():
    av = empirical_average(HALF, 10_000, seed=0)
    assert all(abs(float(av.weight(g)) - 0.5) < 0.02 for g in (0, 1))


def test_exact_elements():
    mu = FiniteMeasure(((0, F(1, 3)), (2, F(2, 3))))
    assert exact_elements(mu) == [0, 2, 2]
    assert average_of_points(exact_elements(mu, 6)) == mu
    with pytest.raises(ValueError):
        exact_elements(mu, 4)


def test_exact_mode_reproduces_av():
    s = builtin_system("z3-rotation")
    mu = average_of_points([0, 1, 1, 2])
    f = indicator(PointSet.of([0], 3))
    req = ApproximationRequest(s, mu, (PinnedConstraint(dirac(0), f, F(1, 8), F(1, 2)),), 0.05, exact=True)
    gbar, rep = approximate_action(req)
    assert rep.inside and rep.n == 4 and average_of_points(gbar) == mu
    assert rep.records[0]["achieved"] == F(1, 4)


def circle_request(eps=0.05, k=1, retries=3):
    fs = [cosine(1), sine(1)][:k]
    cons = tuple(PinnedConstraint(dirac(0.0), f, -0.1, 0.1) for f in fs)
    return ApproximationRequest(builtin_system("circle-rotation"), uniform_circle(), cons, eps,
                                max_retries=retries)


def test_circle_scenario():
    gbar, rep = approximate_action(circle_request(), seed=0)
    assert rep.inside and rep.n == hoeffding_samples(0.05, 0.05, 1, 2.0)
    assert abs(sum(math.cos(2 * math.pi * g) for g in gbar) / len(gbar)) < 0.05
    assert abs(rep.records[0]["target"]) < 1e-12


def test_achieved_equals_profile_mean_exactly():
    s = builtin_system("dihedral-4")
    nu = FiniteMeasure(((0, F(1, 2)), (3, F(1, 2))))
    f = indicator(PointSet.of([0, 1], 4))
    req = ApproximationRequest(s, average_of_points(range(8)), (PinnedConstraint(nu, f, F(1, 4), F(3, 4)),), 0.1)
    gbar, rep = approximate_action(req, seed=5)
    r = rep.records[0]
    assert r["achieved"] == r["profile_mean"]
    H = action_profile(s, f, nu)
    assert r["achieved"] == integrate(H, average_of_points(gbar))
    assert r["achieved"] == integrate(f, convolve(s, average_of_points(gbar), nu))


def test_identical_constraints_same_verdict():
    c = PinnedConstraint(dirac(0.0), cosine(1), -0.1, 0.1)
    req = ApproximationRequest(builtin_system("circle-rotation"), uniform_circle(), (c, c), 0.05)
    _, rep = approximate_action(req, seed=2)
    a, b = rep.records
    assert a["verdict"] == b["verdict"] and a["achieved"] == b["achieved"]


def test_unsolvable():
    with pytest.raises(UnsolvableRequest):
        approximate_action(circle_request(eps=0.2))


def test_unsolvable_constant():
    s = builtin_system("z2-swap")
    req = ApproximationRequest(s, HALF, (PinnedConstraint(dirac(0), constant(F(1)), F(0), F(1)),), 0.01)
    with pytest.raises(UnsolvableRequest):
        approximate_action(req)


def loose_request(retries):
    # delta near 1 gives a small n, so first attempts miss now and then
    c = PinnedConstraint(dirac(0.0), cosine(1), -0.1, 0.1)
    return ApproximationRequest(builtin_system("circle-rotation"), uniform_circle(), (c,), 0.099,
                                delta=0.99, max_retries=retries)


def test_retries_reported():
    runs = [approximate_action(loose_request(3), seed=s)[1] for s in range(60)]
    assert any(r.attempts > 1 for r in runs)
    assert all(1 <= r.attempts <= 4 for r in runs)
    assert all(r.inside for r in runs if r.attempts < 4)


def test_no_retries_keeps_miss():
    runs = [approximate_action(loose_request(0), seed=s)[1] for s in range(60)]
    assert all(r.attempts == 1 for r in runs)
    assert not all(r.inside for r in runs)


def test_request_validation():
    with pytest.raises(ValueError):
        ApproximationRequest(builtin_system("z2-swap"), HALF, (), 0.1)
    with pytest.raises(ValueError):
        PinnedConstraint(dirac(0), constant(1), 1, 1)
    with pytest.raises(ValueError):
        ApproximationRequest(builtin_system("circle-rotation"), uniform_circle(),
                             (PinnedConstraint(dirac(0.0), cosine(1), -0.1, 0.1),), 0.05, exact=True)


def test_report_records():
    _, rep = approximate_action(circle_request(k=2), seed=1)
    recs = rep.as_records()
    assert [r["constraint"] for r in recs] == [0, 1]
    assert {"target", "achieved", "half_width", "verdict", "n", "seed", "attempts"} <= set(recs[0])
