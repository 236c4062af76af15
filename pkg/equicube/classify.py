"""
Classification of perfect colorings of Q_n under a spectral constraint.

A constraint is either "degree <= d" (every eigenvalue at least n - 2d) or
"ci >= t" (second eigenvalue at most n - 2t - 2). The fiber library holds every
fiber of every perfect coloring meeting the constraint; the classification starts
from the constant coloring and repeatedly splits a known coloring g by a library
fiber t lying inside one color of g, refines, and keeps the new classes that meet
the constraint, until a round finds nothing new.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
from joblib import Parallel, delayed

from equicube.canonical import (
    canonical_form,
    fiber_canonical_form,
    orbit_closure,
    orbit_labels,
    projection,
    row_keys,
    standard_generator_tables,
)
from equicube.exceptions import CapExceededError, EquicubeError, FormatError, MismatchError
from equicube.hypercube import Coloring, Fiber, check_dimension, emit_hex, group_order, odd_vertices, vertex_indices
from equicube.io import Checkpoint, read_fibers
from equicube.refinement import coarsest_equitable_refinement
from equicube.spectral import (
    ci_from_eigenvalues,
    correlation_immunity,
    eigenvalues,
    essential_arguments,
    is_perfect,
    merge_groups,
    quotient_matrix,
    resilience,
    walsh_matrix_rows,
)

logger = logging.getLogger(__name__)

MAX_CLASSIFY_DIMENSION = 10
MAX_DATASET_DIMENSION = 10
# exhaustive enumeration, further bounded by MAX_FUNCTION_ROWS
MAX_EXHAUSTIVE_DIMENSION = 9
# libraries above this keep class representatives instead of orbit-closed rows
MAX_CLOSED_DIMENSION = 7
# functions on Q_m are listed outright for m up to this
MAX_BASE_DIMENSION = 4
MAX_FUNCTION_ROWS = 5_000_000
HARVEST_CHUNK = 2048
WALSH_CHUNK = 100_000
# branches times color size held by the fiber placement search
MAX_PLACEMENT_CELLS = 60_000_000
PLACEMENT_BLOCK_CELLS = 8_000_000
IMAGE_BLOCK_CELLS = 16_000_000

# coefficients of n^10, n^9, ..., n^0
KIRIENKO_COEFFICIENTS = (
    Fraction(1, 2),
    Fraction(7, 6),
    Fraction(890, 9),
    Fraction(-10903, 9),
    Fraction(64288, 45),
    Fraction(953308, 45),
    Fraction(-1341569, 18),
    Fraction(899251, 18),
    Fraction(365018, 5),
    Fraction(-1048961, 15),
    Fraction(2),
)


def kirienko_count(n: int) -> int:
    """Closed-form count from a degree-10 polynomial in n, evaluated exactly."""
    if n < 0:
        raise EquicubeError("n must be non-negative", operation="kirienko_count", n=n)
    value = Fraction(0)
    for coefficient in KIRIENKO_COEFFICIENTS:
        value = value * n + coefficient
    if value.denominator != 1:
        raise EquicubeError(f"polynomial is not integral at n={n}: {value}", operation="kirienko_count", n=n)
    return int(value)


@dataclass(frozen=True)
class Constraint:
    """`degree <= value` or `ci >= value`."""

    kind: str
    value: int

    def __post_init__(self):
        if self.kind not in ("degree", "ci"):
            raise EquicubeError(f"constraint kind must be 'degree' or 'ci', got {self.kind!r}", operation="classify")
        if self.value < 0:
            raise EquicubeError(f"constraint value must be non-negative, got {self.value}", operation="classify")

    def describe(self) -> str:
        return f"degree <= {self.value}" if self.kind == "degree" else f"ci >= {self.value}"

    def accepts(self, n: int, values: tuple) -> bool:
        if self.kind == "degree":
            return min(values) >= n - 2 * self.value
        return ci_from_eigenvalues(n, values) >= self.value

    def strict(self, n: int, values: tuple, f: Coloring) -> bool:
        """Degree below the bound, or resilient of the required order."""
        if self.kind == "degree":
            return min(values) > n - 2 * self.value
        return resilience(f) >= self.value

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


# Constraint-satisfying Boolean functions


def _level_mask(n: int, level: int) -> np.ndarray:
    idx = vertex_indices(n)
    weights = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        weights += (idx >> j) & 1
    return weights == level


def _all_functions(n: int, weight: Optional[int] = None) -> np.ndarray:
    if n > MAX_BASE_DIMENSION:
        raise CapExceededError(
            "listing every function of the cube", cap=MAX_BASE_DIMENSION, value=n, operation="build_fiber_library", n=n
        )
    size = 1 << n
    codes = np.arange(1 << size, dtype=np.int64)
    rows = ((codes[:, None] >> np.arange(size)[None, :]) & 1).astype(bool)
    if weight is not None:
        rows = rows[rows.sum(axis=1) == weight]
    return rows


def _pair_rows(lower: np.ndarray, n_low: int, c: int, first: np.ndarray) -> np.ndarray:
    """Concatenations (f0, f1) of rows of `lower` whose level-c Walsh coefficients are opposite."""
    size = 1 << n_low
    if len(lower) == 0 or len(first) == 0:
        return np.zeros((0, 2 * size), dtype=bool)
    mask = _level_mask(n_low, c)
    coeffs = np.concatenate(
        [walsh_matrix_rows(lower[i : i + WALSH_CHUNK], n_low)[:, mask].astype(np.int16) for i in range(0, len(lower), WALSH_CHUNK)]
    )
    buckets, inverse = np.unique(coeffs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    index = {row.tobytes(): i for i, row in enumerate(buckets)}
    members = [np.flatnonzero(inverse == b) for b in range(len(buckets))]
    total = 0
    plan = []
    for b, bucket in enumerate(buckets):
        partner = index.get((-bucket).tobytes())
        if partner is None:
            continue
        heads = np.intersect1d(members[b], first, assume_unique=True)
        if len(heads):
            plan.append((heads, members[partner]))
            total += len(heads) * len(members[partner])
    if total > MAX_FUNCTION_ROWS:
        raise CapExceededError("too many constraint functions", cap=MAX_FUNCTION_ROWS, value=total, operation="build_fiber_library", n=n_low + 1)
    out = np.zeros((total, 2 * size), dtype=bool)
    pos = 0
    for heads, tails in plan:
        count = len(heads) * len(tails)
        out[pos : pos + count, :size] = np.repeat(lower[heads], len(tails), axis=0)
        out[pos : pos + count, size:] = np.tile(lower[tails], (len(heads), 1))
        pos += count
    return out


@lru_cache(maxsize=None)
def _ci_functions(n: int, c: int, weight: int) -> np.ndarray:
    """Every function on Q_n of the given weight with correlation immunity at least c.

    A c-CI function is a pair of (c-1)-CI functions on Q_{n-1} of equal weight whose
    level-c Walsh coefficients are opposite.
    """
    size = 1 << n
    if weight < 0 or weight > size:
        return np.zeros((0, size), dtype=bool)
    if c == 0:
        rows = _all_functions(n, weight)
    elif n == 0 or weight % 2:
        rows = np.zeros((0, size), dtype=bool)
    else:
        lower = _ci_functions(n - 1, c - 1, weight // 2)
        rows = _pair_rows(lower, n - 1, c, np.arange(len(lower)))
    rows.flags.writeable = False
    logger.debug(f"{len(rows)} functions on Q_{n} of weight {weight} with ci >= {c}")
    return rows


def _ci_representatives(n: int, c: int, weight: int) -> np.ndarray:
    """Functions of the given weight and ci >= c, at least one per Aut(Q_n) orbit."""
    if c == 0:
        rows = _all_functions(n, weight)
        labels = orbit_labels(rows, standard_generator_tables(n))
        return rows[labels == np.arange(len(rows))]
    if n == 0 or weight % 2:
        return np.zeros((0, 1 << n), dtype=bool)
    lower = _ci_functions(n - 1, c - 1, weight // 2)
    if len(lower) == 0:
        return np.zeros((0, 1 << n), dtype=bool)
    labels = orbit_labels(lower, standard_generator_tables(n - 1))
    heads = np.flatnonzero(labels == np.arange(len(lower)))
    return _pair_rows(lower, n - 1, c, heads)


def constraint_functions(n: int, constraint: Constraint) -> np.ndarray:
    """Boolean functions meeting the constraint, at least one per Aut(Q_n) orbit.

    Degree mode lists the bipartite flips of the balanced (n-d-1)-resilient functions,
    which are exactly the functions of degree at most d.
    """
    size = 1 << n
    if constraint.kind == "degree":
        d = constraint.value
        if d >= n:
            rows = _all_functions(n)
            labels = orbit_labels(rows, standard_generator_tables(n))
            return rows[labels == np.arange(len(rows))]
        rows = _ci_representatives(n, n - d - 1, size // 2)
        return rows ^ odd_vertices(n).array[None, :]
    t = min(constraint.value, n)
    step = 1 << t
    parts = [_ci_representatives(n, t, weight) for weight in range(0, size + 1, step)]
    return np.concatenate(parts) if parts else np.zeros((0, size), dtype=bool)


# Fiber library


def _harvest(rows: np.ndarray, n: int, constraint: Constraint) -> list:
    """Fibers of the accepted coarsest equitable refinements of the given functions."""
    fibers = set()
    for row in rows:
        refined = coarsest_equitable_refinement(Coloring(n, row.astype(np.int64)))
        if not constraint.accepts(n, eigenvalues(quotient_matrix(refined), n)):
            continue
        for t in refined.fibers:
            fibers.add(t.bits)
    return sorted(fibers)


def fiber_class_key(t: Fiber) -> tuple:
    """Equivalence-class key of a fiber: its essential arguments and the set-canonical reduced fiber."""
    coords = essential_arguments(t)
    reduced = Fiber.from_array(len(coords), t.array[projection(coords)])
    canon, _ = fiber_canonical_form(reduced)
    return t.size, len(coords), canon.bits


def fiber_orbit_size(t: Fiber) -> int:
    """Number of images of t under Aut(Q_n), from the set-stabilizer of its reduced form."""
    coords = essential_arguments(t)
    reduced = Fiber.from_array(len(coords), t.array[projection(coords)])
    _, order = fiber_canonical_form(reduced)
    return group_order(t.n) // (order * group_order(t.n - len(coords)))


@dataclass
class FiberLibrary:
    """Fibers of the perfect colorings meeting a constraint.

    `representatives` holds one fiber per equivalence class and `orbit_sizes` the size
    of each class. Up to MAX_CLOSED_DIMENSION the orbit-closed set is also kept as 0/1
    `rows`; above it the classification places the representatives on demand.
    """

    n: int
    constraint: Constraint
    representatives: list = field(default_factory=list)
    rows: Optional[np.ndarray] = None
    source: str = "exhaustive"
    orbit_sizes: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows) if self.rows is not None else sum(self.orbit_sizes)

    def tallies(self) -> dict:
        """Number of fiber classes per fiber size."""
        counts: dict = {}
        for t in self.representatives:
            counts[t.size] = counts.get(t.size, 0) + 1
        return dict(sorted(counts.items()))

    def essential_counts(self) -> dict:
        """Sorted essential-argument counts of the classes, per fiber size."""
        counts: dict = {}
        for t in self.representatives:
            counts.setdefault(t.size, []).append(len(essential_arguments(t)))
        return {size: sorted(values) for size, values in sorted(counts.items())}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "constraint": self.constraint.to_dict(),
            "source": self.source,
            "fibers": len(self),
            "classes": len(self.representatives),
            "tallies": {str(size): count for size, count in self.tallies().items()},
            "essential_counts": {str(size): values for size, values in self.essential_counts().items()},
        }


def _library_from_bits(n: int, constraint: Constraint, bits: list, source: str, closed: bool) -> FiberLibrary:
    fibers = [Fiber(n, b) for b in bits]
    library = FiberLibrary(n, constraint, source=source)
    if closed:
        rows = np.array([t.array for t in fibers], dtype=bool).reshape(-1, 1 << n)
        rows = orbit_closure(rows, standard_generator_tables(n))
        labels = orbit_labels(rows, standard_generator_tables(n))
        library.rows = rows
        sizes = np.bincount(labels, minlength=len(rows))
        heads = np.flatnonzero(labels == np.arange(len(rows)))
        pairs = sorted(((Fiber.from_array(n, rows[i]), int(sizes[i])) for i in heads), key=lambda pair: fiber_class_key(pair[0]))
    else:
        classes: dict = {}
        for t in fibers:
            classes.setdefault(fiber_class_key(t), t)
        pairs = [(classes[key], fiber_orbit_size(classes[key])) for key in sorted(classes)]
    library.representatives = [t for t, _ in pairs]
    library.orbit_sizes = [size for _, size in pairs]
    logger.info(f"fiber library for {constraint.describe()} on Q_{n}: {len(library.representatives)} classes, tallies {library.tallies()}")
    return library


def _search_fibers(n: int, constraint: Constraint, colorings: list) -> list:
    """Fibers of the given perfect colorings whose spectrum meets the constraint."""
    fibers = set()
    for f in colorings:
        if f.n != n:
            raise MismatchError(f"coloring lives on Q_{f.n}", operation="build_fiber_library", n=n)
        values = eigenvalues(quotient_matrix(f), n)
        if not constraint.accepts(n, values):
            logger.warning(f"skipping a {f.k}-coloring with eigenvalues {values}: fails {constraint.describe()}")
            continue
        fibers.update(t.bits for t in f.fibers)
    return sorted(fibers)


def read_dataset(filepath: Union[str, Path], n: int, constraint: Constraint) -> np.ndarray:
    """Load hex-encoded functions and turn them into constraint functions.

    In degree mode every line must be (n-d-1)-resilient and is bipartite-flipped; in ci
    mode every line must have correlation immunity at least t.

    Raises:
        FormatError: unreadable file, malformed line, or a line failing its check
    """
    fibers = read_fibers(filepath, n)
    rows = []
    for lineno, t in enumerate(fibers, start=1):
        if constraint.kind == "degree":
            required = n - constraint.value - 1
            order = resilience(t)
            if order < required:
                logger.error(f"dataset entry {lineno} has resilience {order}, expected at least {required}")
                raise FormatError(
                    f"entry {lineno} has resilience {order}, expected at least {required}", operation="read_dataset", n=n, line=lineno
                )
            rows.append(t.array ^ odd_vertices(n).array)
        else:
            order = correlation_immunity(t)
            if order < constraint.value:
                logger.error(f"dataset entry {lineno} has correlation immunity {order}, expected at least {constraint.value}")
                raise FormatError(
                    f"entry {lineno} has correlation immunity {order}, expected at least {constraint.value}",
                    operation="read_dataset",
                    n=n,
                    line=lineno,
                )
            rows.append(t.array)
    logger.info(f"read {len(rows)} dataset functions from {filepath!s}")
    return np.array(rows, dtype=bool).reshape(-1, 1 << n)


def build_fiber_library(
    n: int,
    constraint: Constraint,
    dataset: Optional[Union[str, Path]] = None,
    threads: int = 1,
    closed: Optional[bool] = None,
    colorings: Optional[list] = None,
) -> FiberLibrary:
    """Collect the fibers of the accepted refinements of all constraint functions.

    Args:
        n (int): dimension
        constraint (Constraint): degree or ci bound
        dataset (Path): hex function list to use instead of exhaustive enumeration
        colorings (list): perfect colorings found by search; their accepted fibers form the library
        threads (int): joblib workers for the refinements
        closed (bool): keep the orbit-closed rows; by default for n <= MAX_CLOSED_DIMENSION

    Raises:
        CapExceededError: exhaustive enumeration out of reach, or n above MAX_DATASET_DIMENSION
        FormatError: unreadable or inconsistent dataset
        MismatchError: a supplied coloring lives on another cube
        NotPerfectError: a supplied coloring is not perfect
    """
    check_dimension(n)
    if n > MAX_DATASET_DIMENSION:
        raise CapExceededError("fiber libraries are built for n <= 10", cap=MAX_DATASET_DIMENSION, value=n, operation="build_fiber_library")
    if closed is None:
        closed = n <= MAX_CLOSED_DIMENSION
    elif closed and n > MAX_CLOSED_DIMENSION:
        raise CapExceededError(
            f"orbit-closed libraries need n <= {MAX_CLOSED_DIMENSION}", cap=MAX_CLOSED_DIMENSION, value=n, operation="build_fiber_library"
        )
    if colorings is not None:
        return _library_from_bits(n, constraint, _search_fibers(n, constraint, colorings), "search", closed)
    if dataset is not None:
        rows = read_dataset(dataset, n, constraint)
        source = "dataset"
    else:
        if n > MAX_EXHAUSTIVE_DIMENSION:
            raise CapExceededError(
                f"exhaustive fiber libraries need n <= {MAX_EXHAUSTIVE_DIMENSION}",
                cap=MAX_EXHAUSTIVE_DIMENSION,
                value=n,
                operation="build_fiber_library",
            )
        rows = constraint_functions(n, constraint)
        source = "exhaustive"
    if len(rows):
        _, first = np.unique(row_keys(rows), return_index=True)
        rows = rows[np.sort(first)]
    logger.info(f"refining {len(rows)} functions for {constraint.describe()} on Q_{n}")
    chunks = [rows[i : i + HARVEST_CHUNK] for i in range(0, len(rows), HARVEST_CHUNK)]
    results = Parallel(n_jobs=threads)(delayed(_harvest)(chunk, n, constraint) for chunk in chunks)
    bits = sorted(set(itertools.chain.from_iterable(results)))
    return _library_from_bits(n, constraint, bits, source, closed)


# Classification


@dataclass
class ClassRecord:
    coloring: Coloring
    k: int
    matrix: object
    eigenvalues: tuple
    essential: int
    degree: int
    ci: int
    resilience: int
    strict: bool
    aut_order: int
    round: int = 0

    def key(self) -> bytes:
        return self.coloring.key()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "matrix": self.matrix.to_list(),
            "eigenvalues": list(self.eigenvalues),
            "essential": self.essential,
            "degree": self.degree,
            "ci": self.ci,
            "resilience": self.resilience,
            "strict": self.strict,
            "aut_order": self.aut_order,
            "round": self.round,
            "coloring": self.coloring.to_dict(),
        }


def _record(canon: Coloring, aut_order: int, constraint: Constraint, found_in: int) -> ClassRecord:
    n = canon.n
    matrix = quotient_matrix(canon)
    values = eigenvalues(matrix, n)
    return ClassRecord(
        coloring=canon,
        k=canon.k,
        matrix=matrix,
        eigenvalues=values,
        essential=len(essential_arguments(canon)),
        degree=(n - values[-1]) // 2,
        ci=ci_from_eigenvalues(n, values),
        resilience=resilience(canon),
        strict=constraint.strict(n, values, canon),
        aut_order=aut_order,
        round=found_in,
    )


@dataclass
class ClassificationReport:
    n: int
    constraint: Constraint
    records: list = field(default_factory=list)
    rounds: list = field(default_factory=list)
    library: Optional[dict] = None

    def by_k(self, k: int) -> list:
        return [r for r in self.records if r.k == k]

    def counts_by_k(self) -> dict:
        """k -> (classes, strict classes)."""
        counts: dict = {}
        for r in self.records:
            total, strict = counts.get(r.k, (0, 0))
            counts[r.k] = (total + 1, strict + int(r.strict))
        return dict(sorted(counts.items()))

    def matrix_counts(self) -> dict:
        """k -> (distinct quotient matrices, distinct matrices of strict classes)."""
        result = {}
        for k in sorted({r.k for r in self.records}):
            records = self.by_k(k)
            every = {r.matrix.canonical_key() for r in records}
            strict = {r.matrix.canonical_key() for r in records if r.strict}
            result[k] = (len(every), len(strict))
        return result

    def with_matrix(self, matrix) -> list:
        return [r for r in self.records if r.k == matrix.k and r.matrix.equivalent(matrix)]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "constraint": self.constraint.to_dict(),
            "counts_by_k": {str(k): list(v) for k, v in self.counts_by_k().items()},
            "matrix_counts": {str(k): list(v) for k, v in self.matrix_counts().items()},
            "rounds": self.rounds,
            "library": self.library,
            "records": [r.to_dict() for r in self.records],
        }


def candidate_fibers(g: Coloring, rows: np.ndarray, generators: Optional[list] = None) -> np.ndarray:
    """Library rows t with g constant on the ones of t and t not a fiber of g, one per Stab(g) orbit."""
    if len(rows) == 0:
        return rows
    colors = g.colors.astype(np.int64)
    inside = np.zeros(len(rows), dtype=bool)
    is_fiber = np.zeros(len(rows), dtype=bool)
    for c in range(g.k):
        member = colors == c
        inside |= ~(rows & ~member[None, :]).any(axis=1)
        is_fiber |= (rows == member[None, :]).all(axis=1)
    chosen = rows[inside & ~is_fiber & rows.any(axis=1)]
    if generators and len(chosen):
        labels = orbit_labels(chosen, [e.aut.table for e in generators])
        chosen = chosen[labels == np.arange(len(chosen))]
    return chosen


def signed_coordinate_orbits(n: int, generators: list) -> np.ndarray:
    """Least signed coordinate 2j + s in each orbit of the group on the half cubes x_j = s."""
    idx = vertex_indices(n)
    halves = np.array([((idx >> j) & 1) == s for j in range(n) for s in (0, 1)], dtype=bool)
    labels = orbit_labels(halves, [e.aut.table for e in generators])
    return np.flatnonzero(labels == np.arange(2 * n))


def _place(members: np.ndarray, n: int, needs: list, essential: np.ndarray, free: np.ndarray, first: Optional[np.ndarray]) -> np.ndarray:
    """Signed coordinates 2j + s for the reduced coordinates of a fiber, one row per surviving placement.

    After m placements the members of the color split into 2^m slices; slice p must hold
    at least needs[m][p] members.
    """
    placed = np.zeros((1, 0), dtype=np.int64)
    used_free = np.zeros(1, dtype=np.int64)
    pattern = np.zeros((1, len(members)), dtype=np.int32)
    block = max(1, PLACEMENT_BLOCK_CELLS // (len(members) + (1 << (len(needs) - 1))))
    for m in range(len(needs) - 1):
        used = np.zeros((len(placed), n), dtype=bool)
        if m:
            used[np.arange(len(placed))[:, None], placed >> 1] = True
        rows, coords = np.nonzero(~used & essential[None, :])
        branch = np.concatenate((rows, rows))
        coord = np.concatenate((coords, coords))
        sign = np.concatenate((np.zeros(len(rows), dtype=np.int64), np.ones(len(rows), dtype=np.int64)))
        is_free = np.zeros(len(branch), dtype=np.int64)
        open_rows = np.flatnonzero(used_free < len(free))
        if len(open_rows):
            branch = np.concatenate((branch, open_rows))
            coord = np.concatenate((coord, free[used_free[open_rows]]))
            sign = np.concatenate((sign, np.zeros(len(open_rows), dtype=np.int64)))
            is_free = np.concatenate((is_free, np.ones(len(open_rows), dtype=np.int64)))
        signed = 2 * coord + sign
        if m == 0 and first is not None:
            keep = np.isin(signed, first)
            branch, signed, is_free = branch[keep], signed[keep], is_free[keep]
        if not len(branch):
            return np.zeros((0, m + 1), dtype=np.int64)
        width = 1 << (m + 1)
        kept = []
        for start in range(0, len(branch), block):
            stop = start + block
            bits = ((members[None, :] >> (signed[start:stop, None] >> 1)) & 1) ^ (signed[start:stop, None] & 1)
            extended = pattern[branch[start:stop]] | (bits << m).astype(np.int32)
            offsets = np.arange(len(extended), dtype=np.int64)[:, None] * width
            counts = np.bincount((offsets + extended).ravel(), minlength=len(extended) * width).reshape(len(extended), width)
            ok = np.flatnonzero((counts >= needs[m + 1][None, :]).all(axis=1))
            kept.append((start + ok, extended[ok]))
        chosen = np.concatenate([index for index, _ in kept])
        cells = len(chosen) * len(members)
        if cells > MAX_PLACEMENT_CELLS:
            raise CapExceededError("fiber placement frontier too large", cap=MAX_PLACEMENT_CELLS, value=cells, operation="classify", n=n)
        placed = np.concatenate((placed[branch[chosen]], signed[chosen][:, None]), axis=1)
        used_free = used_free[branch[chosen]] + is_free[chosen]
        pattern = np.concatenate([ext for _, ext in kept]).reshape(len(chosen), len(members))
        logger.debug(f"fiber placement level {m}: {len(chosen)} of {len(branch)} branches kept")
        if not len(chosen):
            break
    return placed


def _placed_images(placed: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    """The fibers x -> values[sum_b (x_{j_b} ^ s_b) 2^b] of the placements, distinct."""
    idx = vertex_indices(n)
    block = max(1, IMAGE_BLOCK_CELLS // (1 << n))
    images = []
    for start in range(0, len(placed), block):
        chunk = placed[start : start + block]
        pattern = np.zeros((len(chunk), 1 << n), dtype=np.int64)
        for b in range(chunk.shape[1]):
            pattern |= (((idx[None, :] >> (chunk[:, b, None] >> 1)) & 1) ^ (chunk[:, b, None] & 1)) << b
        rows = values[pattern]
        _, first = np.unique(row_keys(rows), return_index=True)
        images.append(rows[first])
    if not images:
        return np.zeros((0, 1 << n), dtype=bool)
    rows = np.concatenate(images)
    _, first = np.unique(row_keys(rows), return_index=True)
    return rows[np.sort(first)]


def fiber_placements(g: Coloring, t: Fiber, first: Optional[np.ndarray] = None) -> np.ndarray:
    """Images of t under Aut(Q_n) lying inside one color of g and smaller than it.

    Every Stab(g) orbit of such images is met at least once. The essential coordinates
    of t are placed one at a time on signed coordinates of the cube; coordinates g does
    not depend on are used in ascending order with sign 0, and `first`, when given,
    restricts the first placement to those signed coordinates 2j + s.

    Raises:
        MismatchError: g and t live on different cubes
        CapExceededError: the placement frontier grows past MAX_PLACEMENT_CELLS
    """
    n = g.n
    if t.n != n:
        raise MismatchError("g and t live on different cubes", operation="classify", n=n)
    coords = essential_arguments(t)
    e = len(coords)
    if t.size == 0 or e == 0:
        return np.zeros((0, 1 << n), dtype=bool)
    values = t.array[projection(coords)]
    ones = np.flatnonzero(values)
    scale = 1 << (n - e)
    needs = [np.bincount(ones & ((1 << m) - 1), minlength=1 << m) * scale for m in range(e + 1)]
    essential = np.zeros(n, dtype=bool)
    essential[list(essential_arguments(g))] = True
    free = np.flatnonzero(~essential)
    colors = g.colors.astype(np.int64)
    found = []
    for c in range(g.k):
        members = np.flatnonzero(colors == c)
        if len(members) <= t.size:
            continue
        placed = _place(members, n, needs, essential, free, first)
        if len(placed):
            found.append(_placed_images(placed, values, n))
    if not found:
        return np.zeros((0, 1 << n), dtype=bool)
    rows = np.concatenate(found)
    _, keep = np.unique(row_keys(rows), return_index=True)
    return rows[np.sort(keep)]


def placed_candidates(g: Coloring, representatives: list, generators: Optional[list] = None) -> np.ndarray:
    """Candidate fibers for g from class representatives, without an orbit-closed library."""
    first = signed_coordinate_orbits(g.n, generators) if generators else None
    parts = [fiber_placements(g, t, first) for t in representatives]
    parts = [rows for rows in parts if len(rows)]
    if not parts:
        return np.zeros((0, 1 << g.n), dtype=bool)
    return np.concatenate(parts)


def _expand(g: Coloring, library: FiberLibrary, constraint: Constraint) -> dict:
    """Step pairs of one known coloring: split, refine, keep accepted classes by canonical key."""
    cf = canonical_form(g, generators=True)
    if library.rows is not None:
        candidates = candidate_fibers(g, library.rows, cf.generators)
    else:
        candidates = placed_candidates(g, library.representatives, cf.generators)
    found = {}
    for t in candidates:
        split = Coloring(g.n, g.colors.astype(np.int64) * 2 + t.astype(np.int64))
        refined = coarsest_equitable_refinement(split)
        values = eigenvalues(quotient_matrix(refined), g.n)
        if not constraint.accepts(g.n, values):
            continue
        canon = canonical_form(refined)
        found.setdefault(canon.key(), (canon.canon.colors.tolist(), canon.aut_order))
    return found


def classify(
    n: int,
    constraint: Constraint,
    library: Optional[FiberLibrary] = None,
    threads: int = 1,
    checkpoint: Optional[Union[str, Path]] = None,
) -> ClassificationReport:
    """Close the split-and-refine loop from the constant coloring.

    Args:
        n (int): dimension, at most MAX_CLASSIFY_DIMENSION
        constraint (Constraint): degree or ci bound
        library (FiberLibrary): built by `build_fiber_library` when omitted
        threads (int): joblib workers, one known coloring per task
        checkpoint (Path): resumable state file written after every round

    Returns:
        ClassificationReport with one record per class, sorted by (k, canonical key)
    """
    check_dimension(n)
    if n > MAX_CLASSIFY_DIMENSION:
        raise CapExceededError(
            f"classification supports n <= {MAX_CLASSIFY_DIMENSION}", cap=MAX_CLASSIFY_DIMENSION, value=n, operation="classify"
        )
    if library is None:
        library = build_fiber_library(n, constraint, threads=threads)
    if library.n != n:
        raise MismatchError(f"library was built for Q_{library.n}", operation="classify", n=n)

    constant = Coloring.constant(n)
    known: dict = {constant.key(): (constant.colors.tolist(), canonical_form(constant).aut_order, 0)}
    frontier = [constant.key()]
    rounds: list = []
    store = None
    if checkpoint is not None:
        store = Checkpoint(checkpoint, kind="classify", params={"n": n, "constraint": constraint.to_dict(), "fibers": len(library)})
        state = store.load()
        if state is not None:
            known = {bytes.fromhex(key): tuple(value) for key, value in state["known"].items()}
            frontier = [bytes.fromhex(key) for key in state["frontier"]]
            rounds = state["rounds"]

    while frontier:
        round_index = len(rounds) + 1
        colorings = [Coloring(n, known[key][0]) for key in frontier]
        results = Parallel(n_jobs=threads)(delayed(_expand)(g, library, constraint) for g in colorings)
        fresh: dict = {}
        for found in results:
            for key, (colors, aut_order) in found.items():
                if key not in known and key not in fresh:
                    fresh[key] = (colors, aut_order, round_index)
        per_k: dict = {}
        for colors, _, _ in fresh.values():
            k = max(colors) + 1
            per_k[k] = per_k.get(k, 0) + 1
        rounds.append({"round": round_index, "new": {str(k): per_k[k] for k in sorted(per_k)}})
        logger.info(f"round {round_index}: {len(fresh)} new classes {dict(sorted(per_k.items()))}")
        known.update(fresh)
        frontier = sorted(fresh)
        if store is not None:
            store.save(
                {
                    "known": {key.hex(): list(value) for key, value in known.items()},
                    "frontier": [key.hex() for key in frontier],
                    "rounds": rounds,
                }
            )

    records = []
    for key in sorted(known, key=lambda key: (max(known[key][0]) + 1, key)):
        colors, aut_order, found_in = known[key]
        records.append(_record(Coloring(n, colors), aut_order, constraint, found_in))
    return ClassificationReport(n, constraint, records, rounds, library.to_dict())


# Tables


def _perfect_merge_keys(report: ClassificationReport) -> set:
    """Canonical keys of the perfect 2-colorings obtained by merging a reported coloring with more colors."""
    keys = set()
    for r in report.records:
        if r.k <= 2:
            continue
        for mask in range(1, 1 << (r.k - 1)):
            groups = [[c for c in range(r.k) if not (mask >> c) & 1], [c for c in range(r.k) if (mask >> c) & 1]]
            merged = merge_groups(r.coloring, groups)
            if is_perfect(merged):
                keys.add(canonical_form(merged).key())
    return keys


def essential_histogram(report: ClassificationReport) -> dict:
    """Row label -> {essential count: (main, parenthesised)}.

    Rows are the color counts k >= 2 plus "2'" for the 2-colorings that are merges of
    a reported coloring with more colors. In degree mode the main count is the classes
    of degree exactly d and the parenthesised one those of lower degree; in ci mode the
    main count is every class and the parenthesised one the resilient classes.
    """
    exclusive = report.constraint.kind == "degree"
    rows: dict = {}

    def add(label, record: ClassRecord) -> None:
        cell = rows.setdefault(label, {}).get(record.essential, (0, 0))
        main, strict = cell
        if record.strict:
            strict += 1
            if not exclusive:
                main += 1
        else:
            main += 1
        rows[label][record.essential] = (main, strict)

    merges = _perfect_merge_keys(report)
    for r in report.records:
        if r.k < 2:
            continue
        add(r.k, r)
    for r in report.records:
        if r.k == 2 and r.key() in merges:
            add("2'", r)
    ordered = {k: rows[k] for k in sorted(k for k in rows if isinstance(k, int))}
    if "2'" in rows:
        ordered["2'"] = rows["2'"]
    return ordered


def _cell(main: int, strict: int) -> str:
    if strict:
        return f"{main}({strict})"
    return str(main)


def table_rows(report: ClassificationReport) -> tuple:
    """(header, rows) of the essential-argument table, one column per count 1..n plus a total."""
    histogram = essential_histogram(report)
    header = ["k"] + [str(e) for e in range(1, report.n + 1)] + ["total"]
    rows = []
    grand = [0, 0]
    for label, cells in histogram.items():
        row = [str(label)]
        total = [0, 0]
        for e in range(1, report.n + 1):
            main, strict = cells.get(e, (0, 0))
            row.append(_cell(main, strict))
            total[0] += main
            total[1] += strict
        row.append(_cell(total[0], total[1]))
        if label != "2'":
            grand[0] += total[0]
            grand[1] += total[1]
        rows.append(row)
    if rows:
        rows.append(["k >= 2"] + [""] * report.n + [_cell(grand[0], grand[1])])
    return header, rows


def render_table(report: ClassificationReport) -> str:
    """Plain-text table: rows k, columns essential-argument counts, "a(b)" cells."""
    header, rows = table_rows(report)
    if not rows:
        return ""
    widths = [max(len(str(row[i])) for row in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(str(cell).rjust(width) for cell, width in zip(row, widths)) for row in [header, *rows]]
    return "\n".join(lines)


def library_table(library: FiberLibrary) -> tuple:
    header = ["ones", "classes", "essential arguments"]
    rows = [[size, count, " ".join(str(e) for e in library.essential_counts()[size])] for size, count in library.tallies().items()]
    return header, rows


def representative_hex(record: ClassRecord) -> list:
    return [emit_hex(t) for t in record.coloring.fibers] if record.coloring.n >= 2 else []
