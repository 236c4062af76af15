"""
Explicit constructions of perfect colorings of Q_n.

Each constructor returns a Coloring whose quotient matrix is known in closed form;
`verify_construction` checks an output against that form. `construction_catalog`
collects every output of the constructions on Q_n with degree at most 3.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from equicube.canonical import add_dummy_arg, canonical_form
from equicube.exceptions import EquicubeError, NotPerfectError
from equicube.hypercube import (
    Coloring,
    SignedPermutation,
    automorphism_table,
    check_dimension,
    linear_coloring,
    vertex_indices,
    vertex_weights,
)
from equicube.search import ColoringSearch
from equicube.spectral import QuotientMatrix, eigenvalues, essential_arguments, merge_groups, quotient_matrix

logger = logging.getLogger(__name__)


@dataclass
class ConstructionSpec:
    """A construction instance with the matrix and spectrum it must have."""

    name: str
    parameters: dict = field(default_factory=dict)
    matrix: Optional[QuotientMatrix] = None
    eigenvalues: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "matrix": self.matrix.to_list() if self.matrix is not None else None,
            "eigenvalues": list(self.eigenvalues) if self.eigenvalues is not None else None,
        }


def verify_construction(f: Coloring, spec: ConstructionSpec) -> QuotientMatrix:
    """Check f against its expected matrix (up to color renaming) and spectrum.

    Raises:
        NotPerfectError: f is not perfect
        EquicubeError: the matrix or the spectrum differ
    """
    matrix = quotient_matrix(f)
    if spec.matrix is not None and not matrix.equivalent(spec.matrix):
        raise EquicubeError(
            f"{spec.name} gave matrix {matrix.shorthand()}, expected {spec.matrix.shorthand()}", operation="construct", n=f.n, k=f.k
        )
    if spec.eigenvalues is not None:
        values = eigenvalues(matrix, f.n)
        if sorted(values) != sorted(spec.eigenvalues):
            raise EquicubeError(f"{spec.name} gave eigenvalues {values}, expected {spec.eigenvalues}", operation="construct", n=f.n, k=f.k)
    return matrix


def distance_coloring(n: int) -> Coloring:
    """Color of x is its weight; perfect with a tridiagonal matrix."""
    check_dimension(n)
    return Coloring(n, vertex_weights(n), relabel=False)


def coordinate_coloring(n: int) -> Coloring:
    """f(x) = x_0, the degree-1 perfect 2-coloring."""
    if n < 1:
        raise EquicubeError("coordinate coloring needs n >= 1", operation="construct", n=n)
    return linear_coloring(n, [0])


def constr0(f: Coloring) -> Coloring:
    """g(x, x_{n-1}) = f(x) + k x_{n-1}: block matrix (S, I; I, S), each eigenvalue of S shifted by +1 and -1."""
    quotient_matrix(f)
    check_dimension(f.n + 1)
    colors = f.colors.astype(np.int64)
    return Coloring(f.n + 1, np.concatenate((colors, colors + f.k)), relabel=False)


def _check_base(f: Coloring, m: int, b: int, name: str) -> np.ndarray:
    if f.n != m:
        raise EquicubeError(f"base coloring {name} lives on Q_{f.n}, expected Q_{m}", operation="constr1", n=m)
    if b == 0:
        if f.k != 1:
            raise EquicubeError(f"base coloring {name} must be constant when its parameter is 0", operation="constr1", n=m, k=f.k)
        return np.zeros(f.size, dtype=np.int64)
    expected = QuotientMatrix([[m - b, b], [b, m - b]])
    try:
        matrix = quotient_matrix(f) if f.k == 2 else None
    except NotPerfectError:
        matrix = None
    if matrix != expected:
        raise EquicubeError(f"base coloring {name} lacks the matrix {expected.shorthand()}", operation="constr1", n=m, k=f.k)
    return f.colors.astype(np.int64)


def constr1(f: Coloring, g: Coloring, b: int, c: int) -> Coloring:
    """Perfect 4-coloring of Q_{m+2} from 1- or 2-colorings f, g of Q_m.

    f has matrix (m-b, b; b, m-b) (or is constant with b = 0), g likewise with c. On
    the block (x_{n-2}, x_{n-1}) the color is f, 3 - g, 2 + g, 1 - f for (0,0), (1,0),
    (0,1), (1,1). Eigenvalues are n, n-4, n-2(b+1), n-2(c+1).
    """
    m = f.n
    fv = _check_base(f, m, b, "f")
    gv = _check_base(g, m, c, "g")
    colors = np.concatenate((fv, 3 - gv, 2 + gv, 1 - fv))
    return Coloring(m + 2, colors, relabel=False)


def constr1_spec(n: int, b: int, c: int) -> ConstructionSpec:
    m = n - 2
    matrix = QuotientMatrix([[m - b, b, 1, 1], [b, m - b, 1, 1], [1, 1, m - c, c], [1, 1, c, m - c]])
    return ConstructionSpec("constr1", {"n": n, "b": b, "c": c}, matrix, (n, n - 4, n - 2 * (b + 1), n - 2 * (c + 1)))


def _twin_matrix(n: int) -> QuotientMatrix:
    """Matrix of g: (n-3, 1, 2; 1, n-3, 2; 1, 1, n-2)."""
    return QuotientMatrix([[n - 3, 1, 2], [1, n - 3, 2], [1, 1, n - 2]])


def _double_twin_matrix(n: int) -> QuotientMatrix:
    """Matrix of g_ij: (n-4, 2, 2; 2, n-4, 2; 1, 1, n-2)."""
    return QuotientMatrix([[n - 4, 2, 2], [2, n - 4, 2], [1, 1, n - 2]])


def _swap_twins(colors: np.ndarray) -> np.ndarray:
    swapped = colors.copy()
    swapped[colors == 0] = 1
    swapped[colors == 1] = 0
    return swapped


@lru_cache(maxsize=None)
def _fab_table() -> np.ndarray:
    search = ColoringSearch(4, _twin_matrix(4))
    labeled = sorted(tuple(int(c) for c in colors) for colors in search.solve(search.initial_domains()))
    if not labeled:
        raise EquicubeError("no perfect 3-coloring of Q_4 with the twin matrix", operation="reconstruct_fab", n=4)
    f00 = np.array(labeled[0], dtype=np.int64)
    f11 = _swap_twins(f00)
    f01 = None
    for candidate in labeled:
        values = np.array(candidate, dtype=np.int64)
        if not np.array_equal(values == 2, f00 == 2):
            continue
        if np.array_equal(values, f00) or np.array_equal(values, f11):
            continue
        f01 = values
        break
    if f01 is None:
        raise EquicubeError("no consistent f_{a,b} family found", operation="reconstruct_fab", n=4)
    table = np.stack([np.stack([f00, f01]), np.stack([_swap_twins(f01), f11])])
    table.flags.writeable = False
    return table


def reconstruct_fab() -> dict:
    """The four 3-colorings f_{a,b} of Q_4.

    f_{0,0} is perfect with matrix (1,1,2;1,1,2;1,1,2); f_{1,1} swaps its twin colors;
    f_{0,1} is another such coloring with the same third color, and f_{1,0} swaps its
    twins. Any family of this shape makes every g_{i,j} perfect; the one returned is
    the least in vertex order and is checked before it is returned.

    Raises:
        EquicubeError: no consistent family exists, or a check fails
    """
    table = _fab_table()
    family = {(a, b): Coloring(4, table[a, b], relabel=False) for a in (0, 1) for b in (0, 1)}
    checks = [
        (g_of(4), _twin_matrix(4), 4),
        (g_ij(5, 4, 4), _double_twin_matrix(5), 5),
        (g_ij(6, 4, 5), _double_twin_matrix(6), 6),
    ]
    for coloring, expected, essential in checks:
        if quotient_matrix(coloring) != expected or len(essential_arguments(coloring)) != essential:
            raise EquicubeError("reconstructed f_{a,b} family fails its check", operation="reconstruct_fab", n=coloring.n)
    return family


def g_of(n: int) -> Coloring:
    """g(x) = f_{0,0}(x_0, ..., x_3), n >= 4."""
    if n < 4:
        raise EquicubeError("g needs n >= 4", operation="construct", n=n)
    check_dimension(n)
    table = _fab_table()
    return Coloring(n, table[0, 0][vertex_indices(n) & 15], relabel=False)


def g_ij(n: int, i: int, j: int) -> Coloring:
    """g_{i,j}(x) = f_{x_i, x_j}(x_0, ..., x_3), n >= 5, i and j in [4, n)."""
    if n < 5:
        raise EquicubeError("g_ij needs n >= 5", operation="construct", n=n)
    check_dimension(n)
    for coord in (i, j):
        if not 4 <= coord < n:
            raise EquicubeError(f"index {coord} out of range [4, {n})", operation="construct", n=n)
    idx = vertex_indices(n)
    table = _fab_table()
    colors = table[(idx >> i) & 1, (idx >> j) & 1, idx & 15]
    return Coloring(n, colors, relabel=False)


@lru_cache(maxsize=None)
def _complementing_automorphism() -> SignedPermutation:
    """An automorphism sigma of Q_4 with f(sigma x) = 1 - f(x) for f the merged 2-coloring of g."""
    merged = (_fab_table()[0, 0] == 2).astype(np.int64)
    for row in automorphism_table(4):
        if np.array_equal(merged[row.astype(np.int64)], 1 - merged):
            return SignedPermutation.from_table(4, row)
    raise EquicubeError("no automorphism exchanges the two colors", operation="constr3", n=4)


def _splitter(n: int, order: int, i: int, j: int) -> np.ndarray:
    if order == 1:
        return g_of(n).colors.astype(np.int64)
    return g_ij(n, i, j).colors.astype(np.int64)


def constr3(b: int, c: int, n: int, i: int = 4, j: Optional[int] = None, i2: int = 4, j2: Optional[int] = None) -> Coloring:
    """Split both colors of the 4-argument (n-2, 2; 2, n-2) coloring into twins.

    The first color is split like g (b = 1) or g_{i,j} (b = 2); the second like g or
    g_{i2,j2} transported by an automorphism that exchanges the two colors. j and j2
    default to the coordinate after i and i2 when there is one.
    Eigenvalues n, n-4, n-2b-2, n-2c-2.
    """
    if b not in (1, 2) or c not in (1, 2):
        raise EquicubeError(f"b and c must be 1 or 2, got {b}, {c}", operation="constr3", n=n)
    if n < 3 + max(b, c):
        raise EquicubeError(f"constr3 with b={b}, c={c} needs n >= {3 + max(b, c)}", operation="constr3", n=n)
    j = min(i + 1, n - 1) if j is None else j
    j2 = min(i2 + 1, n - 1) if j2 is None else j2
    idx = vertex_indices(n)
    first = _splitter(n, b, i, j)
    second = _splitter(n, c, i2, j2)
    sigma = _complementing_automorphism().table
    moved = (idx & ~15) | sigma[idx & 15]
    colors = np.where(first != 2, first, 2 + second[moved])
    return Coloring(n, colors, relabel=False)


def constr3_spec(n: int, b: int, c: int) -> ConstructionSpec:
    matrix = QuotientMatrix([[n - b - 2, b, 1, 1], [b, n - b - 2, 1, 1], [1, 1, n - c - 2, c], [1, 1, c, n - c - 2]])
    return ConstructionSpec("constr3", {"n": n, "b": b, "c": c}, matrix, (n, n - 4, n - 2 * b - 2, n - 2 * c - 2))


def eight_coloring_q6() -> Coloring:
    """Color 4a + 2b + c with a = x0+x1+x3+x4, b = x1+x2+x4+x5, c = x0+x1+x2 (mod 2)."""
    idx = vertex_indices(6)
    x = [(idx >> j) & 1 for j in range(6)]
    a = x[0] ^ x[1] ^ x[3] ^ x[4]
    b = x[1] ^ x[2] ^ x[4] ^ x[5]
    c = x[0] ^ x[1] ^ x[2]
    return Coloring(6, 4 * a + 2 * b + c, relabel=False)


# Q_9


Q9_VARIANTS = ("star-z2z2", "star-z4", "g-based", "quasigroup")


def _pair_args(idx: np.ndarray, base: int) -> np.ndarray:
    """(x_b + x_{b+1}, x_b + x_{b+2}) packed as 2u + v."""
    xb = (idx >> base) & 1
    u = xb ^ ((idx >> (base + 1)) & 1)
    v = xb ^ ((idx >> (base + 2)) & 1)
    return 2 * u + v


# pair 2u+v -> element of Z_4 in the Gray ordering 00, 01, 11, 10, and back
_GRAY = np.array([0, 1, 3, 2], dtype=np.int64)
_GRAY_INVERSE = np.array([0, 1, 3, 2], dtype=np.int64)


def q9_star_equation(group: str = "z2z2") -> Coloring:
    """First color: the solutions of A * B = C over the group Z_2^2 (xor) or Z_4 (2u+v mod 4)."""
    idx = vertex_indices(9)
    a, b, c = (_pair_args(idx, base) for base in (0, 3, 6))
    if group == "z2z2":
        solutions = (a ^ b) == c
    elif group == "z4":
        solutions = (a + b) % 4 == c
    else:
        raise EquicubeError(f"unknown group {group!r}, expected z2z2 or z4", operation="q9_colorings", n=9)
    return Coloring(9, np.where(solutions, 0, 1), relabel=False)


def q9_from_q6(g: Coloring) -> Coloring:
    """(g(y) + x0 + x1 + x2, y0 + ... + y5) for g a (3,3;3,3) coloring of Q_6, y on coordinates 3..8."""
    if g.n != 6 or g.k != 2 or quotient_matrix(g) != QuotientMatrix([[3, 3], [3, 3]]):
        raise EquicubeError("base coloring lacks the matrix (3,3;3,3) on Q_6", operation="q9_colorings", n=g.n, k=g.k)
    idx = vertex_indices(9)
    y = idx >> 3
    x = (idx ^ (idx >> 1) ^ (idx >> 2)) & 1
    first = g.colors.astype(np.int64)[y] ^ x
    second = vertex_weights(6)[y] & 1
    return Coloring(9, 2 * first + second, relabel=False)


def q9_quasigroup() -> Coloring:
    """(A * B) o C with * the Z_4 addition on 2u+v and o the Z_4 addition in Gray order."""
    idx = vertex_indices(9)
    a, b, c = (_pair_args(idx, base) for base in (0, 3, 6))
    ab = (a + b) % 4
    result = _GRAY_INVERSE[(_GRAY[ab] + _GRAY[c]) % 4]
    return Coloring(9, result)


def q9_colorings(variant: str, g: Optional[Coloring] = None) -> Coloring:
    if variant == "star-z2z2":
        return q9_star_equation("z2z2")
    if variant == "star-z4":
        return q9_star_equation("z4")
    if variant == "g-based":
        if g is None:
            raise EquicubeError("the g-based variant needs a base coloring of Q_6", operation="q9_colorings", n=9)
        return q9_from_q6(g)
    if variant == "quasigroup":
        return q9_quasigroup()
    raise EquicubeError(f"bad variant {variant!r}, expected one of {', '.join(Q9_VARIANTS)}", operation="q9_colorings", n=9)


def degree_two_colorings() -> list:
    """The perfect 2-colorings of Q_4 of degree exactly 2 with no inessential argument."""
    from equicube.classify import Constraint, classify

    report = classify(4, Constraint("degree", 2))
    return [r.coloring for r in report.records if r.k == 2 and r.degree == 2 and r.essential == 4]


# Catalog


def _linear_bases(m: int, b: int) -> list:
    """Colorings of Q_m with matrix (m-b, b; b, m-b) used as constr1 inputs."""
    if b == 0:
        return [Coloring.constant(m)]
    if b > m:
        return []
    bases = [linear_coloring(m, range(b))]
    if b == 2 and m >= 4:
        bases.append(merge_groups(g_of(m), [[0, 1], [2]]))
    return bases


def _placements(f: Coloring) -> list:
    """f composed with every automorphism of its cube, one per distinct coloring."""
    if f.n > 4:
        return [f]
    seen = {}
    for row in automorphism_table(f.n):
        moved = Coloring(f.n, f.colors[row.astype(np.int64)])
        seen.setdefault(moved.key(), moved)
    return list(seen.values())


def construction_catalog(n: int, lower: Sequence[Coloring] = (), previous: Sequence[Coloring] = ()) -> list:
    """Canonical forms of the construction outputs on Q_n with more than two colors and degree <= 3.

    Args:
        n (int): dimension, at most 6
        lower (list): perfect colorings of Q_{n-1} of degree <= 2, the constr0 inputs
        previous (list): catalog of Q_{n-1}, extended here by a dummy argument

    Returns:
        list of canonical Colorings, sorted by canonical key
    """
    found: dict = {}

    def add(f: Coloring) -> None:
        if f.k <= 2:
            return
        matrix = quotient_matrix(f)
        if min(eigenvalues(matrix, n)) < n - 6:
            return
        cf = canonical_form(f)
        found.setdefault(cf.key(), cf.canon)

    for f in previous:
        add(add_dummy_arg(f))
    for f in lower:
        if f.n == n - 1 and f.k >= 2:
            add(constr0(f))
    if n >= 2:
        m = n - 2
        for b, c in itertools.product(range(3), repeat=2):
            for f in _linear_bases(m, b):
                for g in _linear_bases(m, c):
                    for placed in _placements(g):
                        add(constr1(f, placed, b, c))
    for b, c in itertools.product((1, 2), repeat=2):
        if n < 3 + max(b, c):
            continue
        indices = range(4, n)
        for i, j, i2, j2 in itertools.product(indices, repeat=4):
            add(constr3(b, c, n, i, j, i2, j2))
    if n == 2:
        add(distance_coloring(2))
    if n == 3:
        add(distance_coloring(3))
    return [found[key] for key in sorted(found)]
