"""Enveloping semigroups of finite systems and their lift to measures.

For a finite system every measure ``mu`` on G acts on the simplex of
measures on X through the column-stochastic matrix ``P_mu = sum_g mu(g) P_g``
(column ``x`` of ``P_mu`` is ``mu * delta_x``).  A finite group has
``M(G) = conv(G)``, so the equality of the two measure-level enveloping
semigroups reduces to an algebraic statement we check exactly: every matrix
induced by a measure decomposes as a convex combination of the ``P_g``, and
``mu -> P_mu`` is a semigroup homomorphism.  Nothing here says anything about
infinite groups; that case is handled statistically in ``approximation``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from measconv.convolution import convolve
from measconv.groups import ActionSystem
from measconv.measures import FiniteMeasure, dirac

DEFAULT_MAX_ORDER = 24


class EllisError(ValueError):
    pass


def _require_finite(sys: ActionSystem) -> None:
    if not sys.is_finite:
        raise EllisError("enveloping semigroups are computed for finite systems only")


def enveloping_semigroup(sys: ActionSystem) -> frozenset:
    """Distinct translation maps ``x -> g.x`` as index tuples.

    For a finite acting group the set of translations is already closed in
    ``X^X``, so no closure step is needed.
    """
    _require_finite(sys)
    return frozenset(sys.table)


@dataclass(frozen=True)
class StochasticMatrix:
    """Square matrix with exact entries; ``rows[y][x]`` is the mass sent from x to y.

    Columns sum to 1, so ``P @ v`` maps weight vectors to weight vectors.
    """

    rows: tuple

    @classmethod
    def identity(cls, m: int) -> "StochasticMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(m)) for i in range(m)))

    @classmethod
    def permutation(cls, images) -> "StochasticMatrix":
        m = len(images)
        rows = [[Fraction(0)] * m for _ in range(m)]
        for x, y in enumerate(images):
            rows[y][x] = Fraction(1)
        return cls(tuple(map(tuple, rows)))

    @property
    def size(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "StochasticMatrix") -> "StochasticMatrix":
        cols = list(zip(*other.rows))
        return StochasticMatrix(tuple(
            tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols)
            for row in self.rows
        ))

    def __sub__(self, other: "StochasticMatrix") -> "StochasticMatrix":
        return StochasticMatrix(tuple(
            tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)
        ))

    def apply(self, vec) -> list:
        return [sum((a * v for a, v in zip(row, vec)), Fraction(0)) for row in self.rows]

    def act(self, nu: FiniteMeasure) -> FiniteMeasure:
        out = self.apply(nu.vector(self.size))
        return FiniteMeasure(tuple((y, w) for y, w in enumerate(out)), nu.space)

    def is_column_stochastic(self) -> bool:
        return all(
            all(a >= 0 for a in col) and sum(col, Fraction(0)) == 1 for col in zip(*self.rows)
        )

    def max_abs(self):
        return max((abs(a) for row in self.rows for a in row), default=Fraction(0))


def measure_action_matrix(sys: ActionSystem, mu: FiniteMeasure) -> StochasticMatrix:
    """``P_mu`` with ``P_mu @ vec(nu) == vec(mu * nu)`` for every ``nu``."""
    _require_finite(sys)
    m = sys.space.size
    rows = [[Fraction(0)] * m for _ in range(m)]
    for g, w in mu.atoms:
        row = sys.table[sys.group.check(g)]
        for x in range(m):
            rows[row[x]][x] += w
    return StochasticMatrix(tuple(map(tuple, rows)))


def simplex_grid(n: int, step: Fraction):
    """All measures on ``0..n-1`` whose weights are multiples of ``step``."""
    step = Fraction(step)
    if step <= 0 or (1 / step).denominator != 1:
        raise EllisError("grid step must be 1/k for a positive integer k")
    k = int(1 / step)
    # stars and bars: bar positions split k units among n points
    for bars in itertools.combinations(range(k + n - 1), n - 1):
        prev, parts = -1, []
        for b in bars + (k + n - 1,):
            parts.append(b - prev - 1)
            prev = b
        yield FiniteMeasure(tuple((g, Fraction(c, k)) for g, c in enumerate(parts) if c))


def _solve(columns: list, target: list):
    """Exact solution of ``sum_j lam_j columns[j] == target``, or ``None``.

    Returns ``None`` when the columns are dependent or the system is
    inconsistent.
    """
    k = len(columns)
    rows = [[col[i] for col in columns] + [target[i]] for i in range(len(target))]
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            return None
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        r += 1
    if any(row[-1] != 0 for row in rows[r:]):
        return None
    return [rows[i][-1] for i in range(k)]


def decompose(sys: ActionSystem, P: StochasticMatrix):
    """Convex weights ``lam`` over group elements with ``sum lam_g P_g == P``.

    Carathéodory search: only elements whose permutation fits inside the
    support of ``P`` can carry weight, and some optimal decomposition uses
    linearly independent ``P_g``; we try such subsets by increasing size and
    solve each exactly.  Returns ``(weights, residual)`` or ``(None, None)``.
    """
    _require_finite(sys)
    m = sys.space.size
    reps: dict = {}
    for g in sys.group.elements():
        reps.setdefault(sys.table[g], g)
    candidates = [
        (images, g) for images, g in reps.items()
        if all(P.rows[images[x]][x] > 0 for x in range(m))
    ]
    flat = [a for row in P.rows for a in row] + [Fraction(1)]

    def vec(images):
        return [Fraction(int(images[x] == y)) for y in range(m) for x in range(m)] + [Fraction(1)]

    vecs = {images: vec(images) for images, _ in candidates}
    for size in range(1, len(candidates) + 1):
        for subset in itertools.combinations(candidates, size):
            lam = _solve([vecs[images] for images, _ in subset], flat)
            if lam is None or any(v < 0 for v in lam):
                continue
            weights = {g: v for (_, g), v in zip(subset, lam) if v != 0}
            rebuilt = measure_action_matrix(sys, FiniteMeasure(tuple(weights.items())))
            return weights, P - rebuilt
    return None, None


def linear_rank(sys: ActionSystem) -> int:
    """Dimension of the span of the permutation matrices ``P_g``."""
    m = sys.space.size
    rows = [[Fraction(int(sys.table[g][x] == y)) for y in range(m) for x in range(m)]
            for g in sys.group.elements()]
    rank = 0
    cols = len(rows[0])
    for c in range(cols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(rank + 1, len(rows)):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def ellis_equality_check(sys: ActionSystem, step=Fraction(1, 4),
                         max_order: int = DEFAULT_MAX_ORDER) -> dict:
    """Check both inclusions between the measure-level enveloping semigroups.

    For every grid measure ``mu`` (weights in multiples of ``step``):

    * ``P_mu`` agrees with the convolution on every vertex Dirac, so the map
      induced by ``mu`` in ``conv(G)`` is the one ``M(G)`` induces;
    * ``P_mu`` decomposes exactly into a convex combination of the ``P_g``
      with zero residual.
    """
    _require_finite(sys)
    n = sys.group.order
    if n > max_order:
        raise EllisError(f"group order {n} exceeds the configured bound {max_order}")
    step = Fraction(step)
    m = sys.space.size
    checked = 0
    agree = 0
    decomposed = 0
    max_residual = Fraction(0)
    failures = []
    for mu in simplex_grid(n, step):
        checked += 1
        P = measure_action_matrix(sys, mu)
        cols_ok = all(
            P.act(dirac(x)) == convolve(sys, mu, dirac(x)) for x in range(m)
        ) and P.is_column_stochastic()
        agree += cols_ok
        weights, residual = decompose(sys, P)
        if weights is None:
            failures.append({"measure": [[g, str(w)] for g, w in mu.atoms], "reason": "no convex decomposition"})
            continue
        r = residual.max_abs()
        max_residual = max(max_residual, r)
        if r == 0 and sum(weights.values()) == 1:
            decomposed += 1
        else:
            failures.append({"measure": [[g, str(w)] for g, w in mu.atoms], "reason": f"residual {r}"})
        if not cols_ok:
            failures.append({"measure": [[g, str(w)] for g, w in mu.atoms], "reason": "matrix disagrees with convolution"})
    rank = linear_rank(sys)
    return {
        "system": sys.name,
        "group_order": n,
        "points": m,
        "grid_step": str(step),
        "matrices_checked": checked,
        "conv_in_measures": agree == checked,
        "measures_in_conv": decomposed == checked,
        "decomposition_residual": str(max_residual),
        "translation_maps": len(enveloping_semigroup(sys)),
        "span_rank": rank,
        "injective": rank == n,
        "passed": not failures,
        "failures": failures,
    }
