"""Group presentations, spaces, actions and the measurable sets they move.

Two concrete presentations are supported:

* finite groups given by a multiplication table, acting on a finite set of
  points through an action table (``action[g][x] = g.x``);
* the circle group R/Z acting on the circle by rotation, with group elements
  and points both encoded as floats in ``[0, 1)``.

Measurable sets are bitmask subsets on finite spaces and finite unions of
half-open arcs on the circle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_CHECKED_ORDER = 256


class ActionError(ValueError):
    """Invalid group table, action table, or element/point reference."""


def wrap(t: float) -> float:
    """Reduce ``t`` into ``[0, 1)``."""
    r = t % 1.0
    return 0.0 if r >= 1.0 else r


# -- groups ------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group given by its multiplication table; elements are ``0..n-1``."""

    table: tuple[tuple[int, ...], ...]
    identity: int
    labels: tuple[str, ...] | None = None
    inverse: tuple[int, ...] = field(init=False, repr=False)

    kind = "finite-table"

    def __post_init__(self):
        table = tuple(tuple(int(v) for v in row) for row in self.table)
        object.__setattr__(self, "table", table)
        n = len(table)
        if n == 0:
            raise ActionError("group must have at least one element")
        if n > MAX_CHECKED_ORDER:
            raise ActionError(f"group order {n} exceeds {MAX_CHECKED_ORDER}")
        if any(len(row) != n for row in table):
            raise ActionError("operation table must be square")
        if any(not 0 <= v < n for row in table for v in row):
            raise ActionError("operation table entry out of range")
        e = self.identity
        if not 0 <= e < n:
            raise ActionError(f"identity index {e} out of range")
        for g in range(n):
            if table[e][g] != g or table[g][e] != g:
                raise ActionError(f"index {e} is not a two-sided identity (fails at {g})")
        inverse = []
        for g in range(n):
            hits = [h for h in range(n) if table[g][h] == e and table[h][g] == e]
            if not hits:
                raise ActionError(f"element {g} has no inverse")
            inverse.append(hits[0])
        object.__setattr__(self, "inverse", tuple(inverse))
        t = np.asarray(table, dtype=np.int32)
        if not np.array_equal(t[t, :], t[:, t]):
            a, b, c = np.argwhere(t[t, :] != t[:, t])[0]
            raise ActionError(f"operation table is not associative at ({a}, {b}, {c})")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != n or len(set(labels)) != n:
                raise ActionError("group labels must be distinct, one per element")
            object.__setattr__(self, "labels", labels)

    @property
    def order(self) -> int:
        return len(self.table)

    def elements(self) -> range:
        return range(self.order)

    def check(self, g) -> int:
        if isinstance(g, bool) or not isinstance(g, (int, np.integer)) or not 0 <= g < self.order:
            raise ActionError(f"group element {g!r} out of range for order {self.order}")
        return int(g)

    def mul(self, g, h) -> int:
        return self.table[self.check(g)][self.check(h)]

    def inv(self, g) -> int:
        return self.inverse[self.check(g)]

    def label(self, g) -> str:
        return self.labels[g] if self.labels else str(g)


@dataclass(frozen=True)
class CircleGroup:
    """Rotations of the circle; elements are angles in ``[0, 1)`` under addition mod 1."""

    kind = "circle-rotation"
    identity = 0.0

    def check(self, g) -> float:
        g = float(g)
        if not 0.0 <= g < 1.0:
            raise ActionError(f"rotation angle {g!r} not in [0, 1)")
        return g

    def mul(self, g, h) -> float:
        return wrap(self.check(g) + self.check(h))

    def inv(self, g) -> float:
        return wrap(-self.check(g))

    def label(self, g) -> str:
        return repr(float(g))


# -- spaces ------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSpace:
    size: int
    labels: tuple[str, ...] | None = None

    kind = "finite"

    def __post_init__(self):
        if self.size < 1:
            raise ActionError("finite space needs at least one point")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.size or len(set(labels)) != self.size:
                raise ActionError("point labels must be distinct, one per point")
            object.__setattr__(self, "labels", labels)

    def points(self) -> range:
        return range(self.size)

    def check(self, x) -> int:
        if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or not 0 <= x < self.size:
            raise ActionError(f"point {x!r} out of range for a space of {self.size} points")
        return int(x)

    def index(self, name) -> int:
        """Point index from a label or an index."""
        if self.labels and name in self.labels:
            return self.labels.index(name)
        try:
            return self.check(int(name))
        except (TypeError, ValueError):
            raise ActionError(f"unknown point {name!r}") from None

    def label(self, x) -> str:
        return self.labels[x] if self.labels else str(x)


@dataclass(frozen=True)
class CircleSpace:
    kind = "circle"

    def check(self, x) -> float:
        x = float(x)
        if not 0.0 <= x < 1.0:
            raise ActionError(f"circle point {x!r} not in [0, 1)")
        return x

    def label(self, x) -> str:
        return repr(float(x))


# -- measurable sets ---------------------------------------------------------


@dataclass(frozen=True)
class PointSet:
    """Subset of a finite set ``{0..size-1}`` stored as a bitmask."""

    mask: int
    size: int

    kind = "finite-subset"

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.size:
            raise ActionError("bitmask has bits outside the space")

    @classmethod
    def of(cls, points: Iterable[int], size: int) -> "PointSet":
        mask = 0
        for p in points:
            if not 0 <= p < size:
                raise ActionError(f"point {p!r} out of range")
            mask |= 1 << p
        return cls(mask, size)

    @classmethod
    def full(cls, size: int) -> "PointSet":
        return cls((1 << size) - 1, size)

    @classmethod
    def empty(cls, size: int) -> "PointSet":
        return cls(0, size)

    @classmethod
    def all_subsets(cls, size: int):
        return (cls(mask, size) for mask in range(1 << size))

    def __contains__(self, x) -> bool:
        return 0 <= x < self.size and bool(self.mask >> x & 1)

    def __iter__(self):
        return (x for x in range(self.size) if self.mask >> x & 1)

    def __len__(self):
        return bin(self.mask).count("1")

    def complement(self) -> "PointSet":
        return PointSet(((1 << self.size) - 1) ^ self.mask, self.size)


def _merge_arcs(arcs: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    out: list[list[float]] = []
    for a, b in sorted(arcs):
        if b <= a:
            continue
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class ArcUnion:
    """Finite union of half-open arcs ``[a, b)`` with ``0 <= a < b <= 1``.

    Arcs are kept sorted, disjoint and non-adjacent.  Use :meth:`of` to build
    from arbitrary (possibly wrapping) arcs.
    """

    arcs: tuple[tuple[float, float], ...] = ()

    kind = "arc-union"

    def __post_init__(self):
        arcs = tuple((float(a), float(b)) for a, b in self.arcs)
        for a, b in arcs:
            if not 0.0 <= a < b <= 1.0:
                raise ActionError(f"arc [{a}, {b}) is not inside [0, 1)")
        if _merge_arcs(arcs) != arcs:
            raise ActionError("arcs must be sorted and disjoint; use ArcUnion.of")
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def of(cls, arcs: Iterable[tuple[float, float]]) -> "ArcUnion":
        """Normalize arcs given as ``(start, end)`` pairs.

        An arc with ``a > b`` wraps through 0; an arc of length >= 1 is the
        whole circle.
        """
        pieces = []
        for a, b in arcs:
            a, b = float(a), float(b)
            if a > b:
                b += 1.0
            if b - a >= 1.0:
                return cls.full()
            pieces.extend(_split(wrap(a), b - a))
        return cls(_merge_arcs(pieces))

    @classmethod
    def full(cls) -> "ArcUnion":
        return cls(((0.0, 1.0),))

    @classmethod
    def empty(cls) -> "ArcUnion":
        return cls(())

    def __contains__(self, x) -> bool:
        return any(a <= x < b for a, b in self.arcs)

    def length(self) -> float:
        return math.fsum(b - a for a, b in self.arcs)

    def overlap(self, lo: float, hi: float) -> float:
        """Length of the intersection with ``[lo, hi)`` (no wrapping)."""
        return math.fsum(max(0.0, min(b, hi) - max(a, lo)) for a, b in self.arcs)

    def shift(self, t: float) -> "ArcUnion":
        """The rotated set ``{wrap(x + t) : x in self}``."""
        if self.arcs == ((0.0, 1.0),):
            return self
        pieces = []
        for a, b in self.arcs:
            pieces.extend(_split(wrap(a + t), b - a))
        return ArcUnion(_merge_arcs(pieces))

    def contains_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        hit = np.zeros(xs.shape, dtype=bool)
        for a, b in self.arcs:
            hit |= (xs >= a) & (xs < b)
        return hit


def _split(a: float, length: float) -> list[tuple[float, float]]:
    end = a + length
    if end <= 1.0:
        return [(a, end)]
    return [(a, 1.0), (0.0, min(end - 1.0, a))]


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class ActionSystem:
    """A group, a space and a jointly continuous action ``(g, x) -> g.x``.

    Finite systems carry ``table`` with ``table[g][x] = g.x``; circle systems
    act by rotation and have ``table=None``.
    """

    group: FiniteGroup | CircleGroup
    space: FiniteSpace | CircleSpace
    table: tuple[tuple[int, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        if self.is_finite:
            if self.table is None:
                raise ActionError("finite system needs an action table")
            table = tuple(tuple(int(v) for v in row) for row in self.table)
            object.__setattr__(self, "table", table)
            _validate_action(self.group, self.space, table)
        elif self.group.kind == "circle-rotation" and self.space.kind == "circle":
            if self.table is not None:
                raise ActionError("circle rotation takes no action table")
        else:
            raise ActionError(f"unsupported combination {self.group.kind} on {self.space.kind}")

    @property
    def is_finite(self) -> bool:
        return self.group.kind == "finite-table" and self.space.kind == "finite"

    def act(self, g, x):
        if self.is_finite:
            return self.table[self.group.check(g)][self.space.check(x)]
        return wrap(self.group.check(g) + self.space.check(x))

    def act_many(self, gs, xs) -> np.ndarray:
        """Vectorized action over paired arrays of elements and points."""
        if self.is_finite:
            return self.table_array()[np.asarray(gs, dtype=np.intp), np.asarray(xs, dtype=np.intp)]
        r = np.mod(np.asarray(gs, dtype=np.float64) + np.asarray(xs, dtype=np.float64), 1.0)
        r[r >= 1.0] = 0.0
        return r

    def table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.intp)

    def on_itself(self) -> "ActionSystem":
        """The left-translation action of the group on itself."""
        if self.group.kind == "finite-table":
            space = FiniteSpace(self.group.order, self.group.labels)
            return ActionSystem(self.group, space, self.group.table, f"{self.name}:regular")
        return ActionSystem(self.group, CircleSpace(), None, f"{self.name}:regular")

    def whole_space(self):
        if self.space.kind == "finite":
            return PointSet.full(self.space.size)
        return ArcUnion.full()


def _validate_action(group: FiniteGroup, space: FiniteSpace, table) -> None:
    n, m = group.order, space.size
    if len(table) != n or any(len(row) != m for row in table):
        raise ActionError(f"action table must be {n} x {m}")
    for g, row in enumerate(table):
        if any(not 0 <= y < m for y in row):
            raise ActionError(f"action row {g} has an entry out of range")
        if len(set(row)) != m:
            raise ActionError(f"action row {g} is not a bijection of the points")
    if table[group.identity] != tuple(range(m)):
        raise ActionError("identity element does not act trivially")
    for g, h in itertools.product(range(n), repeat=2):
        gh = group.table[g][h]
        for x in range(m):
            if table[gh][x] != table[g][table[h][x]]:
                raise ActionError(f"compatibility (gh).x = g.(h.x) fails at g={g}, h={h}, x={x}")


def act(sys: ActionSystem, g, x):
    """Return ``g.x``."""
    return sys.act(g, x)


def preimage_set(sys: ActionSystem, g, E):
    """Return ``g^-1 E = {x : g.x in E}``."""
    if sys.is_finite:
        if not isinstance(E, PointSet) or E.size != sys.space.size:
            raise ActionError("expected a PointSet over the action's space")
        row = sys.table[sys.group.check(g)]
        return PointSet.of((x for x in range(E.size) if row[x] in E), E.size)
    if not isinstance(E, ArcUnion):
        raise ActionError("circle sets must be arc unions")
    return E.shift(-sys.group.check(g))


def section_set(sys: ActionSystem, E, x):
    """Return ``E:x = {g : g.x in E}`` as a subset of the group."""
    if sys.is_finite:
        if not isinstance(E, PointSet) or E.size != sys.space.size:
            raise ActionError("expected a PointSet over the action's space")
        x = sys.space.check(x)
        n = sys.group.order
        return PointSet.of((g for g in range(n) if sys.table[g][x] in E), n)
    if not isinstance(E, ArcUnion):
        raise ActionError("section sets on the circle need an arc union")
    return E.shift(-sys.space.check(x))


# -- construction helpers ----------------------------------------------------


def system_from_permutations(
    perms: Sequence[Sequence[int]],
    name: str = "",
    point_labels: Sequence[str] | None = None,
    group_labels: Sequence[str] | None = None,
) -> ActionSystem:
    """Finite system whose group is the given set of permutations of ``0..m-1``.

    Composition is ``(gh).x = g.(h.x)``.  The set must be closed under
    composition and contain the identity.
    """
    perms = [tuple(p) for p in perms]
    index = {p: i for i, p in enumerate(perms)}
    if len(index) != len(perms):
        raise ActionError("duplicate permutations")
    m = len(perms[0])
    ident = tuple(range(m))
    if ident not in index:
        raise ActionError("permutation set lacks the identity")
    table = []
    for g in perms:
        row = []
        for h in perms:
            gh = tuple(g[h[x]] for x in range(m))
            if gh not in index:
                raise ActionError("permutation set is not closed under composition")
            row.append(index[gh])
        table.append(row)
    group = FiniteGroup(tuple(map(tuple, table)), index[ident], group_labels)
    space = FiniteSpace(m, tuple(point_labels) if point_labels else None)
    return ActionSystem(group, space, tuple(perms), name)


def generated_permutations(gens: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Closure of ``gens`` under composition, sorted lexicographically."""
    m = len(gens[0])
    seen = {tuple(range(m))}
    frontier = list(seen)
    while frontier:
        nxt = []
        for p in frontier:
            for s in gens:
                q = tuple(s[p[x]] for x in range(m))
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return sorted(seen)


def _cyclic(n: int, name: str) -> ActionSystem:
    perms = [tuple((x + k) % n for x in range(n)) for k in range(n)]
    return system_from_permutations(perms, name)


def builtin_system(name: str) -> ActionSystem:
    """Look up a built-in system by name (see ``BUILTIN_SYSTEMS``)."""
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ActionError(
            f"unknown built-in system {name!r}; choose from {', '.join(BUILTIN_SYSTEMS)}"
        ) from None


_BUILTINS = {
    "trivial": lambda: system_from_permutations([(0,)], "trivial"),
    "z2-swap": lambda: system_from_permutations(
        [(0, 1), (1, 0)], "z2-swap", point_labels=("a", "b"), group_labels=("e", "s")
    ),
    "z3-rotation": lambda: _cyclic(3, "z3-rotation"),
    "s3-natural": lambda: system_from_permutations(
        sorted(itertools.permutations(range(3))), "s3-natural"
    ),
    "dihedral-4": lambda: system_from_permutations(
        generated_permutations([(1, 2, 3, 0), (0, 3, 2, 1)]), "dihedral-4"
    ),
    "circle-rotation": lambda: ActionSystem(CircleGroup(), CircleSpace(), None, "circle-rotation"),
}
BUILTIN_SYSTEMS = tuple(_BUILTINS)
FINITE_BUILTINS = ("z2-swap", "z3-rotation", "s3-natural", "dihedral-4")


# -- table files -------------------------------------------------------------


def load_table(path) -> ActionSystem:
    """Read a finite action system from a table file (see docs/table_format.md)."""
    text = Path(path).read_text()
    return parse_table(text, name=Path(path).stem)


def parse_table(text: str, name: str = "") -> ActionSystem:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    header: dict[str, list[str]] = {}
    sections: dict[str, list[tuple[int, list[str]]]] = {"operation": [], "action": []}
    current = None
    for lineno, words in lines:
        key = words[0].lower()
        if key in sections:
            if len(words) != 1:
                raise ActionError(f"line {lineno}: section marker {key!r} takes no values")
            current = key
        elif key in ("n", "m", "identity", "group-labels", "point-labels", "name"):
            header[key] = words[1:]
            current = None
        elif current is not None:
            try:
                sections[current].append((lineno, [int(w) for w in words]))
            except ValueError:
                raise ActionError(f"line {lineno}: expected integers in {current} table") from None
        else:
            raise ActionError(f"line {lineno}: unexpected {words[0]!r}")
    try:
        n = int(header["n"][0])
        m = int(header["m"][0])
        identity = int(header["identity"][0])
    except (KeyError, IndexError, ValueError):
        raise ActionError("table file needs 'n', 'm' and 'identity' header lines") from None
    for key, rows, width in (("operation", sections["operation"], n), ("action", sections["action"], m)):
        if len(rows) != n:
            raise ActionError(f"{key} table has {len(rows)} rows, expected {n}")
        for lineno, row in rows:
            if len(row) != width:
                raise ActionError(f"line {lineno}: {key} row has {len(row)} entries, expected {width}")
    group = FiniteGroup(
        tuple(tuple(r) for _, r in sections["operation"]), identity, header.get("group-labels")
    )
    space = FiniteSpace(m, tuple(header["point-labels"]) if "point-labels" in header else None)
    nm = " ".join(header["name"]) if "name" in header else name
    return ActionSystem(group, space, tuple(tuple(r) for _, r in sections["action"]), nm)


def dump_table(sys: ActionSystem) -> str:
    if not sys.is_finite:
        raise ActionError("only finite systems have table files")
    out = []
    if sys.name:
        out.append(f"name {sys.name}")
    out += [f"n {sys.group.order}", f"m {sys.space.size}", f"identity {sys.group.identity}"]
    if sys.group.labels:
        out.append("group-labels " + " ".join(sys.group.labels))
    if sys.space.labels:
        out.append("point-labels " + " ".join(sys.space.labels))
    out.append("operation")
    out += [" ".join(map(str, row)) for row in sys.group.table]
    out.append("action")
    out += [" ".join(map(str, row)) for row in sys.table]
    return "\n".join(out) + "\n"
