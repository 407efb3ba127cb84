import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from measconv.groups import ArcUnion, PointSet, builtin_system, preimage_set
from measconv.measures import (
    FiniteMeasure,
    MeasureError,
    TestFunction,
    as_sampled,
    average_of_points,
    constant,
    cosine,
    dirac,
    dumps,
    from_record,
    hoeffding_half_width,
    indicator,
    integrate,
    loads,
    measure_of,
    pushforward,
    to_record,
    tv_distance,
    uniform_arc,
    uniform_circle,
)

from conftest import rational_weights

A, B = 0, 1
HALF = FiniteMeasure(((A, F(1, 2)), (B, F(1, 2))))


def test_dirac_mass():
    assert measure_of(dirac(A), PointSet.of([A], 2)) == 1
    assert measure_of(dirac(A), PointSet.of([B], 2)) == 0


def test_integrate_dirac():
    f = indicator(PointSet.of([1], 3))
    assert integrate(f, dirac(1)) == 1 and integrate(f, dirac(2)) == 0


def test_measure_of_half():
    assert measure_of(HALF, PointSet.of([A], 2)) == F(1, 2)
    assert measure_of(HALF, PointSet.full(2)) == 1


def test_uniform_arc_mass():
    assert measure_of(uniform_circle(), ArcUnion.of([(0.25, 0.5)])) == pytest.approx(0.25)


def test_pushforward_swap():
    z2 = builtin_system("z2-swap")
    assert pushforward(z2, 1, dirac(A)) == dirac(B)
    assert pushforward(z2, 0, HALF) == HALF


def test_pushforward_rotation_keeps_uniform():
    c = builtin_system("circle-rotation")
    u = uniform_circle()
    v = pushforward(c, 0.25, u)
    for arc in [(0.1, 0.4), (0.7, 0.2), (0.0, 0.5)]:
        E = ArcUnion.of([arc])
        assert measure_of(v, E) == pytest.approx(measure_of(u, E), abs=1e-12)


def test_integrate_constant():
    assert integrate(constant(F(3, 7)), HALF) == F(3, 7)


def test_integrate_indicator_half():
    assert integrate(indicator(PointSet.of([A], 2)), HALF) == F(1, 2)


def test_integrate_cos_uniform():
    est = integrate(cosine(1), uniform_circle(), budget=20000, seed=3)
    assert abs(est.value) <= est.half_width
    assert est.n == 20000


def test_integrate_sampled_deterministic():
    a = integrate(cosine(1), uniform_circle(), budget=1000, seed=5, stream=2)
    b = integrate(cosine(1), uniform_circle(), budget=1000, seed=5, stream=2)
    assert a == b


def test_sampled_needs_budget():
    with pytest.raises(MeasureError):
        integrate(cosine(1), uniform_circle())


def test_tv():
    assert tv_distance(HALF, HALF) == 0
    assert tv_distance(dirac(A), dirac(B)) == 1
    assert tv_distance(HALF, dirac(A)) == F(1, 2)


def test_average_of_points():
    assert average_of_points([3]) == dirac(3)
    assert average_of_points([3, 3]) == dirac(3)
    assert average_of_points([0, 1]) == HALF


def test_weights_must_sum_to_one():
    with pytest.raises(MeasureError):
        FiniteMeasure(((0, F(1, 2)),))


def test_negative_weight():
    with pytest.raises(MeasureError):
        FiniteMeasure(((0, F(3, 2)), (1, F(-1, 2))))


def test_float_drift():
    with pytest.raises(MeasureError, match="drift"):
        FiniteMeasure(((0, 0.5), (1, 0.5 + 1e-8)))
    m = FiniteMeasure(((0, 0.5), (1, 0.5 + 1e-11)))
    assert math.fsum(m.weights) == pytest.approx(1.0, abs=1e-15)


def test_canonical_merge():
    m = FiniteMeasure(((2, F(1, 4)), (0, F(1, 2)), (2, F(1, 4)), (1, F(0))))
    assert m.atoms == ((0, F(1, 2)), (2, F(1, 2)))


def test_out_of_range_function():
    f = TestFunction(lambda x: 2.0, 1.0, "bad")
    with pytest.raises(MeasureError):
        f(0)
    with pytest.raises(MeasureError):
        f.many(np.zeros(3))


def test_hoeffding_half_width():
    assert hoeffding_half_width(1.0, 185, 0.05) == pytest.approx(math.sqrt(math.log(40) / 370))
    assert hoeffding_half_width(0.0, 10) == 0.0


def test_uniform_arc_sampler_in_arc():
    nu = uniform_arc(0.9, 0.3)
    pts = nu.draw(500, seed=1)
    assert ArcUnion.of([(0.9, 0.2)]).contains_many(pts).all()
    assert nu.exact(ArcUnion.of([(0.9, 0.0)])) == pytest.approx(1 / 3)


def test_as_sampled_frequencies():
    m = FiniteMeasure(((0, F(1, 4)), (1, F(3, 4))))
    pts = as_sampled(m).draw(20000, seed=0)
    assert abs((pts == 1).mean() - 0.75) < 0.02


def test_serialization_roundtrip_exact():
    m = FiniteMeasure(((0, F(1, 3)), (4, F(2, 3))))
    assert loads(dumps(m)) == m
    assert to_record(m)["atoms"] == [[0, 1, 3], [4, 2, 3]]


def test_serialization_float():
    m = FiniteMeasure(((0.25, 0.5), (0.75, 0.5)))
    assert from_record(to_record(m)) == m


def test_unknown_format():
    with pytest.raises(MeasureError):
        from_record({"format": "other", "atoms": []})


# -- properties --------------------------------------------------------------


def measures(n):
    return rational_weights(n).map(lambda ws: FiniteMeasure(tuple(enumerate(ws))))


@given(measures(4))
def test_canonical_idempotent(m):
    assert FiniteMeasure(m.atoms).atoms == m.atoms


@given(measures(4), st.integers(0, 7))
def test_pushforward_inverse(m, g):
    d4 = builtin_system("dihedral-4")
    back = pushforward(d4, d4.group.inv(g), pushforward(d4, g, m))
    assert back == m


@given(measures(4), st.integers(0, 7), st.integers(0, 15))
def test_pushforward_preimage(m, g, mask):
    d4 = builtin_system("dihedral-4")
    E = PointSet(mask, 4)
    assert measure_of(pushforward(d4, g, m), E) == measure_of(m, preimage_set(d4, g, E))


@given(measures(3), st.fractions(-3, 3), st.fractions(-3, 3), st.integers(0, 7), st.integers(0, 7))
def test_integrate_linear(m, a, b, s1, s2):
    f = indicator(PointSet(s1, 3))
    h = indicator(PointSet(s2, 3))
    assert integrate(a * f + b * h, m) == a * integrate(f, m) + b * integrate(h, m)


@given(measures(5), measures(5))
def test_tv_symmetric_bounded(m1, m2):
    d = tv_distance(m1, m2)
    assert d == tv_distance(m2, m1) and 0 <= d <= 1
