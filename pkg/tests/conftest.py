"""Shared fixtures and independent oracles.

The oracles below recompute things from first principles (explicit
permutations and dictionary sums) without touching the library's own
convolution code.
"""

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from measconv.groups import FINITE_BUILTINS, builtin_system


def oracle_convolve(perms, mu, nu):
    """``mu * nu`` as a dict, by summing ``mu(g) nu(x)`` over every pair."""
    out = {}
    for g, a in mu.items():
        for x, b in nu.items():
            y = perms[g][x]
            out[y] = out.get(y, 0) + a * b
    return {y: w for y, w in out.items() if w}


def oracle_mass(d, E):
    return sum((w for p, w in d.items() if p in E), Fraction(0))


def dict_measure(m):
    return dict(m.atoms)


@pytest.fixture(params=FINITE_BUILTINS)
def finite_system(request):
    return builtin_system(request.param)


@pytest.fixture
def circle():
    return builtin_system("circle-rotation")


def rational_weights(n, max_den=12):
    """Strategy for ``n`` non-negative rationals summing to 1."""
    return st.lists(st.integers(0, max_den), min_size=n, max_size=n).filter(any).map(
        lambda cs: [Fraction(c, sum(cs)) for c in cs]
    )


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
