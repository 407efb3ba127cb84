from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from measconv.convolution import convolve, convolve_group
from measconv.ellis import (
    EllisError,
    StochasticMatrix,
    decompose,
    ellis_equality_check,
    enveloping_semigroup,
    linear_rank,
    measure_action_matrix,
    simplex_grid,
)
from measconv.groups import FINITE_BUILTINS, builtin_system
from measconv.measures import FiniteMeasure, dirac

from conftest import rational_weights

HALF = FiniteMeasure(((0, F(1, 2)), (1, F(1, 2))))


def test_enveloping_sizes():
    assert len(enveloping_semigroup(builtin_system("z3-rotation"))) == 3
    assert enveloping_semigroup(builtin_system("trivial")) == {(0,)}
    assert len(enveloping_semigroup(builtin_system("z2-swap"))) == 2


def test_enveloping_needs_finite():
    with pytest.raises(EllisError):
        enveloping_semigroup(builtin_system("circle-rotation"))


def test_matrix_dirac(finite_system):
    s = finite_system
    assert measure_action_matrix(s, dirac(s.group.identity)) == StochasticMatrix.identity(s.space.size)
    for g in s.group.elements():
        assert measure_action_matrix(s, dirac(g)) == StochasticMatrix.permutation(s.table[g])


def test_matrix_z2_half():
    P = measure_action_matrix(builtin_system("z2-swap"), HALF)
    assert P.rows == ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2)))


def test_grid_sizes():
    assert len(list(simplex_grid(3, F(1, 4)))) == 15
    assert len(list(simplex_grid(1, F(1, 4)))) == 1
    with pytest.raises(EllisError):
        list(simplex_grid(3, F(2, 5)))


def test_z3_check():
    rep = ellis_equality_check(builtin_system("z3-rotation"))
    assert rep["matrices_checked"] == 15 and rep["passed"]
    assert rep["decomposition_residual"] == "0" and rep["injective"]


def test_trivial_check():
    rep = ellis_equality_check(builtin_system("trivial"))
    assert rep["matrices_checked"] == 1 and rep["passed"]


def test_injectivity_fails_for_s3_and_d4():
    # permutation matrices of S3 on 3 points span only a 5-dimensional space
    assert linear_rank(builtin_system("s3-natural")) == 5
    assert linear_rank(builtin_system("dihedral-4")) == 6
    rep = ellis_equality_check(builtin_system("s3-natural"))
    assert rep["passed"] and not rep["injective"]


def test_order_bound():
    with pytest.raises(EllisError):
        ellis_equality_check(builtin_system("dihedral-4"), max_order=4)


def test_decompose_recovers_matrix():
    s = builtin_system("s3-natural")
    mu = FiniteMeasure(((0, F(1, 6)), (3, F(1, 2)), (5, F(1, 3))))
    P = measure_action_matrix(s, mu)
    weights, residual = decompose(s, P)
    assert residual.max_abs() == 0
    assert measure_action_matrix(s, FiniteMeasure(tuple(weights.items()))) == P


def pairs(name):
    n = builtin_system(name).group.order
    return st.tuples(st.just(name), rational_weights(n), rational_weights(n))


@given(st.sampled_from(FINITE_BUILTINS).flatmap(pairs))
def test_homomorphism(case):
    name, w1, w2 = case
    s = builtin_system(name)
    m1 = FiniteMeasure(tuple(enumerate(w1)))
    m2 = FiniteMeasure(tuple(enumerate(w2)))
    P = measure_action_matrix(s, convolve_group(s, m1, m2))
    assert P == measure_action_matrix(s, m1) @ measure_action_matrix(s, m2)
    assert P.is_column_stochastic()


@given(st.sampled_from(FINITE_BUILTINS).flatmap(
    lambda n: st.tuples(st.just(n), rational_weights(builtin_system(n).group.order),
                        rational_weights(builtin_system(n).space.size),
                        rational_weights(builtin_system(n).space.size), st.fractions(0, 1))))
def test_affine_and_agrees(case):
    name, wg, a, b, t = case
    s = builtin_system(name)
    mu = FiniteMeasure(tuple(enumerate(wg)))
    n1 = FiniteMeasure(tuple(enumerate(a)))
    n2 = FiniteMeasure(tuple(enumerate(b)))
    P = measure_action_matrix(s, mu)
    assert P.act(n1) == convolve(s, mu, n1) and P.act(n2) == convolve(s, mu, n2)
    mix = [t * x + (1 - t) * y for x, y in zip(a, b)]
    lhs = P.apply(mix)
    rhs = [t * x + (1 - t) * y for x, y in zip(P.apply(a), P.apply(b))]
    assert lhs == rhs
