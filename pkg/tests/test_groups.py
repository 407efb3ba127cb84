import itertools

import pytest
from hypothesis import given, strategies as st

from measconv.groups import (
    BUILTIN_SYSTEMS,
    FINITE_BUILTINS,
    ActionError,
    ArcUnion,
    FiniteGroup,
    PointSet,
    act,
    builtin_system,
    dump_table,
    generated_permutations,
    load_table,
    parse_table,
    preimage_set,
    section_set,
    system_from_permutations,
    wrap,
)
from measconv.suites import section_consistency


def test_circle_act():
    c = builtin_system("circle-rotation")
    assert act(c, 0.25, 0.5) == 0.75
    assert act(c, 0.75, 0.5) == 0.25
    assert act(c, 0.0, 0.3) == 0.3


def test_circle_preimage():
    c = builtin_system("circle-rotation")
    pre = preimage_set(c, 0.25, ArcUnion.of([(0.5, 0.75)]))
    assert pre == ArcUnion.of([(0.25, 0.5)])


def test_circle_preimage_wraps():
    c = builtin_system("circle-rotation")
    pre = preimage_set(c, 0.5, ArcUnion.of([(0.25, 0.75)]))
    assert pre.length() == pytest.approx(0.5)
    assert 0.9 in pre and 0.1 in pre and 0.5 not in pre


def test_z2_sections():
    z2 = builtin_system("z2-swap")
    E = PointSet.of([0], 2)
    assert set(section_set(z2, E, 0)) == {0}
    assert set(section_set(z2, E, 1)) == {1}


def test_z2_act():
    z2 = builtin_system("z2-swap")
    assert act(z2, 1, 0) == 1 and act(z2, 1, 1) == 0


@pytest.mark.parametrize("name", FINITE_BUILTINS)
def test_builtin_orders(name):
    expected = {"z2-swap": (2, 2), "z3-rotation": (3, 3), "s3-natural": (6, 3), "dihedral-4": (8, 4)}
    s = builtin_system(name)
    assert (s.group.order, s.space.size) == expected[name]


@pytest.mark.parametrize("name", FINITE_BUILTINS + ("trivial",))
def test_action_axioms(name):
    s = builtin_system(name)
    G, X = s.group, s.space
    for x in X.points():
        assert s.act(G.identity, x) == x
    for g, h, x in itertools.product(G.elements(), G.elements(), X.points()):
        assert s.act(G.mul(g, h), x) == s.act(g, s.act(h, x))


@pytest.mark.parametrize("name", FINITE_BUILTINS)
def test_section_consistency(name):
    assert section_consistency(builtin_system(name))


def test_unknown_builtin():
    with pytest.raises(ActionError, match="unknown built-in"):
        builtin_system("z5")
    assert "circle-rotation" in BUILTIN_SYSTEMS


def test_group_rejects_nonassociative():
    # a Latin square with identity 0 that is not associative
    t = ((0, 1, 2, 3, 4), (1, 0, 3, 4, 2), (2, 4, 0, 1, 3), (3, 2, 4, 0, 1), (4, 3, 1, 2, 0))
    with pytest.raises(ActionError):
        FiniteGroup(t, 0)


def test_group_rejects_bad_identity():
    with pytest.raises(ActionError):
        FiniteGroup(((0, 1), (1, 0)), 1)


def test_not_closed():
    with pytest.raises(ActionError, match="closed"):
        system_from_permutations([(0, 1, 2), (1, 2, 0)])


def test_generated_d4():
    assert len(generated_permutations([(1, 2, 3, 0), (0, 3, 2, 1)])) == 8


TABLE = """\
# Z2 swapping two points
name swap
n 2
m 2
identity 0
group-labels e s
point-labels a b
operation
0 1
1 0
action
0 1
1 0
"""


def test_parse_table():
    s = parse_table(TABLE)
    assert s.name == "swap"
    assert s.act(1, 0) == 1
    assert s.space.index("b") == 1


@pytest.mark.parametrize("name", FINITE_BUILTINS)
def test_table_roundtrip(name, tmp_path):
    s = builtin_system(name)
    p = tmp_path / "t.table"
    p.write_text(dump_table(s))
    back = load_table(p)
    assert back.table == s.table and back.group.table == s.group.table


def test_table_non_bijective():
    bad = TABLE.replace("action\n0 1\n1 0", "action\n0 1\n0 0")
    with pytest.raises(ActionError, match="bijection"):
        parse_table(bad)


def test_table_error_line_number():
    bad = TABLE.replace("1 0\naction", "1 x\naction")
    with pytest.raises(ActionError, match="line 10"):
        parse_table(bad)


def test_table_missing_header():
    with pytest.raises(ActionError, match="header"):
        parse_table("operation\n0\naction\n0\n")


def test_pointset_complement():
    E = PointSet.of([0, 2], 4)
    assert set(E.complement()) == {1, 3}
    assert len(list(PointSet.all_subsets(3))) == 8


@given(st.floats(-10, 10, allow_nan=False))
def test_wrap_range(t):
    assert 0.0 <= wrap(t) < 1.0


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True),
       st.floats(0, 1, exclude_max=True))
def test_arc_shift_length(a, b, t):
    E = ArcUnion.of([(a, b)])
    assert E.shift(t).length() == pytest.approx(E.length(), abs=1e-12)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True),
       st.floats(0, 1, exclude_max=True))
def test_arc_preimage_membership(g, x, a):
    c = builtin_system("circle-rotation")
    E = ArcUnion.of([(a, wrap(a + 0.3))])
    y = c.act(g, x)
    # stay off the arc boundary, where float rounding may decide either way
    if min(abs(y - a), abs(y - wrap(a + 0.3))) > 1e-9:
        assert (x in preimage_set(c, g, E)) == (y in E)


@pytest.mark.parametrize("fname", ["z2-swap.table", "s3.table"])
def test_shipped_example_tables(fname):
    from pathlib import Path
    s = load_table(Path(__file__).parents[1] / "docs" / "examples" / fname)
    assert s.is_finite and section_consistency(s)
