"""
Perfectness, quotient matrices, exact eigenvalues and Walsh-Hadamard analysis.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, singledispatch
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import sympy

from equicube.exceptions import EquicubeError, IrregularSpectrumError, MismatchError, NotPerfectError
from equicube.hypercube import Coloring, Fiber, odd_vertices, vertex_indices, vertex_weights

logger = logging.getLogger(__name__)

_LAMBDA = sympy.Symbol("lambda")


class QuotientMatrix:
    """k x k nonnegative integer matrix with constant row sum."""

    def __init__(self, rows: Iterable[Sequence[int]]) -> None:
        self.rows = tuple(tuple(int(x) for x in row) for row in rows)
        self.k = len(self.rows)
        if self.k == 0 or any(len(row) != self.k for row in self.rows):
            raise EquicubeError(f"quotient matrix must be square, got {self.rows}")
        if any(x < 0 for row in self.rows for x in row):
            raise EquicubeError(f"quotient matrix entries must be nonnegative, got {self.rows}")
        sums = {sum(row) for row in self.rows}
        if len(sums) != 1:
            raise EquicubeError(f"quotient matrix rows must have equal sums, got {self.rows}")
        self.n = sums.pop()
        self._key: Optional[tuple] = None

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        if not isinstance(other, QuotientMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"QuotientMatrix({self.shorthand()})"

    def shorthand(self) -> str:
        """The "a,b;c,d" form accepted by the command line."""
        return ";".join(",".join(str(x) for x in row) for row in self.rows)

    def to_list(self) -> list:
        return [list(row) for row in self.rows]

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64)

    def permuted(self, order: Sequence[int]) -> "QuotientMatrix":
        """Matrix with new color a being old color order[a]."""
        return QuotientMatrix([[self.rows[i][j] for j in order] for i in order])

    def is_symmetric(self) -> bool:
        return all(self.rows[i][j] == self.rows[j][i] for i in range(self.k) for j in range(self.k))

    def zero_pattern_symmetric(self) -> bool:
        return all((self.rows[i][j] == 0) == (self.rows[j][i] == 0) for i in range(self.k) for j in range(self.k))

    def canonical_key(self) -> tuple:
        if self._key is None:
            self._key = matrix_canonical_key(self)
        return self._key

    def equivalent(self, other: "QuotientMatrix") -> bool:
        """Equal up to a simultaneous permutation of rows and columns."""
        return self.k == other.k and self.n == other.n and self.canonical_key() == other.canonical_key()


def _color_invariant(rows, c) -> tuple:
    column = tuple(sorted(row[c] for row in rows))
    return (rows[c][c], tuple(sorted(rows[c])), column)


def matrix_canonical_key(matrix: QuotientMatrix) -> tuple:
    """Canonical form of a matrix under simultaneous row/column permutations.

    Colors are ordered by a permutation invariant first; within that constraint the
    entries are read in growing leading-principal-submatrix order and the least
    reading wins.
    """
    rows = matrix.rows
    k = matrix.k
    invariants = [_color_invariant(rows, c) for c in range(k)]
    best: list = []
    best_order: list = []

    def extend(order: list, reading: list):
        nonlocal best, best_order
        depth = len(order)
        if best and reading[: len(best)] > best[: len(reading)]:
            return
        if depth == k:
            if not best or reading < best:
                best = list(reading)
                best_order = list(order)
            return
        used = set(order)
        floor = invariants[order[-1]] if order else None
        candidates = sorted((c for c in range(k) if c not in used), key=lambda c: invariants[c])
        lowest = min(invariants[c] for c in candidates)
        for c in candidates:
            if invariants[c] != lowest:
                break
            if floor is not None and invariants[c] < floor:
                continue
            added = [rows[c][c]]
            for a in order:
                added.extend((rows[a][c], rows[c][a]))
            extend([*order, c], reading + added)

    extend([], [])
    return (k, matrix.n, tuple(sorted(invariants)), tuple(best))


def neighbor_color_counts(colors: np.ndarray, k: int, n: int) -> np.ndarray:
    """counts[v, j] = number of neighbors of v with color j."""
    idx = vertex_indices(n)
    onehot = np.eye(k, dtype=np.int32)[np.asarray(colors, dtype=np.int64)]
    counts = np.zeros((1 << n, k), dtype=np.int32)
    for j in range(n):
        counts += onehot[idx ^ (1 << j)]
    return counts


def quotient_matrix(f: Coloring) -> QuotientMatrix:
    """Quotient matrix of a perfect coloring.

    Raises:
        NotPerfectError: with a witness pair of same-colored vertices whose neighbor
            color counts differ
    """
    colors = f.colors.astype(np.int64)
    counts = neighbor_color_counts(colors, f.k, f.n)
    first = np.unique(colors, return_index=True)[1]
    expected = counts[first[colors]]
    bad = np.flatnonzero((counts != expected).any(axis=1))
    if bad.size:
        v = int(bad[0])
        u = int(first[colors[v]])
        raise NotPerfectError(f"vertices {u} and {v} share color {int(colors[v])} but not neighbor profiles", witness=(u, v), n=f.n, k=f.k)
    return QuotientMatrix(counts[first].tolist())


def is_perfect(f: Coloring) -> bool:
    try:
        quotient_matrix(f)
    except NotPerfectError:
        return False
    return True


def densities(f: Coloring) -> tuple:
    """Exact proportion of every color."""
    return tuple(Fraction(int(c), f.size) for c in f.counts)


def densities_consistent(matrix: QuotientMatrix, rho: Sequence[Fraction]) -> bool:
    """rho_i S_ij = rho_j S_ji for every pair."""
    return all(rho[i] * matrix[i, j] == rho[j] * matrix[j, i] for i in range(matrix.k) for j in range(matrix.k))


def is_irreducible(matrix: QuotientMatrix) -> bool:
    """True iff the colors are connected through positive entries."""
    reached = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(matrix.k):
            if matrix[i, j] > 0 and j not in reached:
                reached.add(j)
                stack.append(j)
    return len(reached) == matrix.k


def matrix_densities(matrix: QuotientMatrix) -> Optional[tuple]:
    """The density vector forced by double counting edges, or None if there is none.

    Solves rho_i S_ij = rho_j S_ji along positive entries with sum(rho) = 1.
    """
    if not is_irreducible(matrix):
        return None
    rho: list = [None] * matrix.k
    rho[0] = Fraction(1)
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(matrix.k):
            if matrix[i, j] == 0 or rho[j] is not None:
                continue
            if matrix[j, i] == 0:
                return None
            rho[j] = rho[i] * matrix[i, j] / matrix[j, i]
            stack.append(j)
    total = sum(rho)
    rho = [r / total for r in rho]
    if not densities_consistent(matrix, rho):
        return None
    return tuple(rho)


def class_sizes(matrix: QuotientMatrix, n: int) -> Optional[tuple]:
    """Color class sizes rho_i 2^n, or None when they are not all integers."""
    rho = matrix_densities(matrix)
    if rho is None:
        return None
    sizes = [r * (1 << n) for r in rho]
    if any(s.denominator != 1 for s in sizes):
        return None
    return tuple(int(s) for s in sizes)


def characteristic_polynomial(matrix: QuotientMatrix) -> sympy.Poly:
    return sympy.Poly(sympy.Matrix(matrix.rows).charpoly(_LAMBDA).as_expr(), _LAMBDA)


def eigenvalues(matrix: QuotientMatrix, n: Optional[int] = None) -> tuple:
    """Exact eigenvalues with multiplicity, largest first.

    Every eigenvalue of a quotient matrix of a coloring of Q_n is one of n - 2i,
    so the characteristic polynomial is divided down by those candidates only.

    Raises:
        IrregularSpectrumError: some root is not of the form n - 2i
    """
    if n is None:
        n = matrix.n
    if matrix.n != n:
        raise MismatchError(f"row sums are {matrix.n}, expected {n}", operation="eigenvalues", n=n, k=matrix.k)
    return _eigenvalues_of_rows(matrix.rows, n)


@lru_cache(maxsize=4096)
def _eigenvalues_of_rows(rows: tuple, n: int) -> tuple:
    matrix = QuotientMatrix(rows)
    poly = characteristic_polynomial(matrix)
    found = []
    for i in range(n + 1):
        root = n - 2 * i
        divisor = sympy.Poly(_LAMBDA - root, _LAMBDA)
        while poly.degree() > 0 and poly.eval(root) == 0:
            poly = poly.quo(divisor)
            found.append(root)
    if len(found) != matrix.k:
        raise IrregularSpectrumError(f"characteristic polynomial has roots outside n - 2i, leftover factor {poly.as_expr()}", matrix=matrix.rows, n=n)
    return tuple(sorted(found, reverse=True))


def eigenvalue_set(f_or_matrix: Union[Coloring, QuotientMatrix]) -> frozenset:
    matrix = quotient_matrix(f_or_matrix) if isinstance(f_or_matrix, Coloring) else f_or_matrix
    return frozenset(eigenvalues(matrix))


def second_eigenvalue(values: Sequence[int]) -> Optional[int]:
    """Largest eigenvalue after removing one copy of the main eigenvalue."""
    return values[1] if len(values) > 1 else None


class WalshSpectrum:
    """coeffs[S] = sum over v of (-1)^{|S & v|} t(v)."""

    def __init__(self, n: int, coeffs: np.ndarray) -> None:
        self.n = n
        self.coeffs = np.asarray(coeffs, dtype=np.int64)
        self.coeffs.flags.writeable = False

    def level(self, s: int) -> np.ndarray:
        return self.coeffs[vertex_weights(self.n) == s]

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs)

    def nonzero_levels(self) -> set:
        return {int(w) for w in np.unique(vertex_weights(self.n)[self.coeffs != 0])}

    def parseval_holds(self, weight: int) -> bool:
        return int((self.coeffs * self.coeffs).sum()) == (1 << self.n) * weight


def _fwht(values: np.ndarray, n: int) -> np.ndarray:
    a = np.asarray(values, dtype=np.int64).copy()
    h = 1
    size = 1 << n
    while h < size:
        a = a.reshape(-1, 2, h)
        x = a[:, 0, :].copy()
        y = a[:, 1, :]
        a = np.stack((x + y, x - y), axis=1).reshape(-1)
        h *= 2
    return a.reshape(-1)


def walsh(t: Fiber) -> WalshSpectrum:
    return WalshSpectrum(t.n, _fwht(t.array, t.n))


def walsh_matrix_rows(values: np.ndarray, n: int) -> np.ndarray:
    """Walsh transform of every row of a (m, 2^n) 0/1 matrix."""
    a = np.asarray(values, dtype=np.int64)
    m = a.shape[0]
    h = 1
    size = 1 << n
    while h < size:
        a = a.reshape(m, -1, 2, h)
        x = a[:, :, 0, :].copy()
        y = a[:, :, 1, :]
        a = np.stack((x + y, x - y), axis=2).reshape(m, size)
        h *= 2
    return a.reshape(m, size)


def inverse_walsh(spectrum: WalshSpectrum) -> Fiber:
    values = _fwht(spectrum.coeffs, spectrum.n)
    if (values % (1 << spectrum.n)).any():
        raise EquicubeError("spectrum is not the transform of a 0/1 function", operation="inverse_walsh", n=spectrum.n)
    values //= 1 << spectrum.n
    if ((values != 0) & (values != 1)).any():
        raise EquicubeError("spectrum is not the transform of a 0/1 function", operation="inverse_walsh", n=spectrum.n)
    return Fiber.from_array(spectrum.n, values)


def _fiber_degree(t: Fiber) -> int:
    spectrum = walsh(t)
    levels = spectrum.nonzero_levels()
    return max(levels) if levels else 0


def _first_nonzero_level(t: Fiber) -> Optional[int]:
    levels = walsh(t).nonzero_levels() - {0}
    return min(levels) if levels else None


@singledispatch
def degree(f) -> int:
    """Largest |S| with a nonzero Walsh coefficient; constants have degree 0."""
    raise TypeError(f"degree is not defined for {type(f).__name__}")


@degree.register
def _(t: Fiber) -> int:
    return _fiber_degree(t)


@degree.register
def _(f: Coloring) -> int:
    return max(_fiber_degree(t) for t in f.fibers)


@singledispatch
def correlation_immunity(f) -> int:
    """Largest t such that Walsh coefficients vanish on levels 1..t for every fiber."""
    raise TypeError(f"correlation_immunity is not defined for {type(f).__name__}")


@correlation_immunity.register
def _(t: Fiber) -> int:
    level = _first_nonzero_level(t)
    return t.n if level is None else level - 1


@correlation_immunity.register
def _(f: Coloring) -> int:
    return min(correlation_immunity(t) for t in f.fibers)


@singledispatch
def resilience(f) -> int:
    """Correlation-immunity order when all densities are equal, -1 otherwise."""
    raise TypeError(f"resilience is not defined for {type(f).__name__}")


@resilience.register
def _(t: Fiber) -> int:
    if 2 * t.size != 1 << t.n:
        return -1
    return correlation_immunity(t)


@resilience.register
def _(f: Coloring) -> int:
    if len(set(f.counts.tolist())) != 1:
        return -1
    return correlation_immunity(f)


@singledispatch
def essential_arguments(f) -> tuple:
    """Coordinates j with f(v) != f(v ^ 2^j) for some v, ascending."""
    raise TypeError(f"essential_arguments is not defined for {type(f).__name__}")


@essential_arguments.register
def _(f: Coloring) -> tuple:
    idx = vertex_indices(f.n)
    return tuple(j for j in range(f.n) if (f.colors != f.colors[idx ^ (1 << j)]).any())


@essential_arguments.register
def _(t: Fiber) -> tuple:
    idx = vertex_indices(t.n)
    values = t.array
    return tuple(j for j in range(t.n) if (values != values[idx ^ (1 << j)]).any())


def walsh_essential_arguments(f: Coloring) -> tuple:
    """Union of the coordinates of the Walsh supports of all fibers."""
    mask = 0
    for t in f.fibers:
        for s in walsh(t).support():
            mask |= int(s)
    mask &= (1 << f.n) - 1
    return tuple(j for j in range(f.n) if mask >> j & 1)


def bipartite_flip(t: Fiber) -> Fiber:
    """Complement the values on odd-weight vertices."""
    return Fiber(t.n, t.bits ^ odd_vertices(t.n).bits)


def merge_colors(f: Coloring, i: int, j: int) -> Coloring:
    """Relabel color j as i, labels renumbered by first occurrence."""
    if i == j:
        raise EquicubeError("cannot merge a color with itself", operation="merge_colors", n=f.n, k=f.k)
    for c in (i, j):
        if not 0 <= c < f.k:
            raise EquicubeError(f"color {c} out of range", operation="merge_colors", n=f.n, k=f.k)
    colors = f.colors.astype(np.int64)
    colors[colors == j] = i
    return Coloring(f.n, colors)


def merge_groups(f: Coloring, groups: Sequence[Iterable[int]]) -> Coloring:
    """Coloring whose color a is the union of the colors in groups[a]."""
    mapping = np.full(f.k, -1, dtype=np.int64)
    for a, group in enumerate(groups):
        for c in group:
            mapping[c] = a
    if (mapping < 0).any():
        raise EquicubeError("groups must cover every color", operation="merge_groups", n=f.n, k=f.k)
    return Coloring(f.n, mapping[f.colors.astype(np.int64)])


def combine(f: Coloring, g: Coloring) -> Coloring:
    """Common refinement by value pairs, renumbered by first occurrence."""
    if f.n != g.n:
        raise MismatchError("cannot combine colorings of different dimensions", operation="combine", n=f.n)
    return Coloring(f.n, f.colors.astype(np.int64) * g.k + g.colors.astype(np.int64))


def split_by_fiber(g: Coloring, t: Fiber) -> Coloring:
    """The coloring (g, t)."""
    return combine(g, t.as_coloring())


def ci_from_eigenvalues(n: int, values: Sequence[int]) -> int:
    """(n - theta)/2 - 1 for the second largest eigenvalue theta; n for one color."""
    theta = second_eigenvalue(values)
    if theta is None:
        return n
    return (n - theta) // 2 - 1


def ci_bound_holds(f: Coloring) -> bool:
    """Correlation immunity at most 2n/3 - 1 unless f is a balanced 2-coloring or constant.

    Raises:
        NotPerfectError: f is not a perfect coloring
    """
    if not is_perfect(f):
        raise NotPerfectError("the correlation-immunity bound applies to perfect colorings", operation="ci_bound_holds", n=f.n, k=f.k)
    if f.k == 1:
        return True
    if f.k == 2 and f.counts[0] == f.counts[1]:
        return True
    return 3 * (correlation_immunity(f) + 1) <= 2 * f.n


@dataclass
class SpectrumReport:
    n: int
    k: int
    matrix: QuotientMatrix
    eigenvalues: tuple
    degree: int
    ci_order: int
    resilience_order: int
    essential_args: tuple
    densities: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "matrix": self.matrix.to_list(),
            "eigenvalues": list(self.eigenvalues),
            "degree": self.degree,
            "ci_order": self.ci_order,
            "resilience_order": self.resilience_order,
            "essential_args": list(self.essential_args),
            "densities": [str(rho) for rho in self.densities],
        }


def spectrum_report(f: Coloring) -> SpectrumReport:
    """Full spectral summary of a perfect coloring; raises NotPerfectError otherwise."""
    matrix = quotient_matrix(f)
    values = eigenvalues(matrix, f.n)
    return SpectrumReport(
        n=f.n,
        k=f.k,
        matrix=matrix,
        eigenvalues=values,
        degree=(f.n - values[-1]) // 2,
        ci_order=correlation_immunity(f),
        resilience_order=resilience(f),
        essential_args=essential_arguments(f),
        densities=densities(f),
    )


def _subcube_density_vectors(f: Coloring, t: int):
    """Yield (fixed coordinates, counts) for every codimension-t subcube."""
    idx = vertex_indices(f.n)
    colors = f.colors.astype(np.int64)
    for coords in itertools.combinations(range(f.n), t):
        mask = 0
        for j in coords:
            mask |= 1 << j
        for values in range(1 << t):
            fixed = 0
            for pos, j in enumerate(coords):
                fixed |= ((values >> pos) & 1) << j
            members = (idx & mask) == fixed
            yield coords, np.bincount(colors[members], minlength=f.k)


def subcube_correlation_immunity(f: Coloring) -> int:
    """Correlation immunity from the retract-density definition (exponential, for checks)."""
    order = 0
    for t in range(1, f.n + 1):
        vectors = {tuple(counts.tolist()) for _, counts in _subcube_density_vectors(f, t)}
        if len(vectors) != 1:
            break
        order = t
    return order


def subcube_resilience(f: Coloring) -> int:
    """Resilience from the uniform-retract definition (exponential, for checks)."""
    if len(set(f.counts.tolist())) != 1:
        return -1
    order = 0
    for t in range(1, f.n + 1):
        if any(len(set(counts.tolist())) != 1 for _, counts in _subcube_density_vectors(f, t)):
            break
        order = t
    return order
