"""
Canonical forms, equivalence tests and stabilizers under Aut(Q_n) and color renaming,
plus the argument operators (swap, flip, dummy, drop) used by the classification.

The canonical form of f is the least vertex-ordered color string among all f o alpha,
alpha a signed permutation, each string relabeled by first occurrence. The search
fixes alpha(0) first and then the images of e_0, e_1, ... one coordinate at a time;
after fixing m coordinates the first 2^m entries of the string are known, so the
frontier is cut back to the lexicographically least prefixes level by level. The
leaves that survive are exactly the elements of the stabilizer of f.

A coloring with inessential coordinates is canonized on its essential ones, which
become coordinates 0..e-1 of the canonical form; the stabilizer is then that of the
reduced coloring times the full group of the remaining coordinates.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from equicube.exceptions import CapExceededError, EquicubeError, MismatchError
from equicube.hypercube import (
    Coloring,
    ColoringEquivalence,
    Fiber,
    SignedPermutation,
    apply_aut,
    check_dimension,
    group_order,
    vertex_indices,
)
from equicube.spectral import essential_arguments

logger = logging.getLogger(__name__)

MAX_CANONICAL_DIMENSION = 10
MAX_STABILIZER_DIMENSION = 10
# frontier rows times row length held at one level
MAX_FRONTIER_CELLS = 60_000_000
# generator listing closes the group explicitly
MAX_GENERATOR_GROUP = 200_000


@dataclass
class _Leaves:
    string: np.ndarray
    images: np.ndarray
    perms: np.ndarray
    labels: Optional[np.ndarray] = None


def _lexmin_rows(rows: np.ndarray) -> np.ndarray:
    """Indices of the lexicographically least rows (all ties kept)."""
    candidates = np.arange(rows.shape[0])
    for col in range(rows.shape[1]):
        if len(candidates) == 1:
            break
        column = rows[candidates, col]
        candidates = candidates[column == column.min()]
    return candidates


def _relabel_extension(labels: np.ndarray, next_label: np.ndarray, raw: np.ndarray, k: int) -> tuple:
    """Give unseen colors of each row new labels in order of first position."""
    rows, length = raw.shape
    order = np.argsort(raw, axis=1, kind="stable")
    ordered = np.take_along_axis(raw, order, axis=1)
    starts = np.ones_like(ordered, dtype=bool)
    starts[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    r, c = np.nonzero(starts)
    first = np.full((rows, k), length, dtype=np.int64)
    first[r, ordered[r, c]] = order[r, c]

    newly = (labels < 0) & (first < length)
    keyed = np.where(newly, first, length)
    rank = np.empty((rows, k), dtype=np.int64)
    np.put_along_axis(rank, np.argsort(keyed, axis=1, kind="stable"), np.broadcast_to(np.arange(k), (rows, k)), axis=1)
    labels = np.where(newly, next_label[:, None] + rank, labels)
    next_label = next_label + newly.sum(axis=1)
    return labels, next_label, np.take_along_axis(labels, raw, axis=1)


def _lexmin_frontier(colors: np.ndarray, n: int, k: int, relabel: bool) -> _Leaves:
    size = 1 << n
    colors = np.asarray(colors, dtype=np.int64)
    images = vertex_indices(n).astype(np.int32)[:, None]
    if relabel:
        labels = np.full((size, k), -1, dtype=np.int64)
        labels[np.arange(size), colors] = 0
        next_label = np.ones(size, dtype=np.int64)
        prefix = np.zeros((size, 1), dtype=np.int64)
    else:
        prefix = colors[images]
    keep = _lexmin_rows(prefix)
    string = [prefix[keep[0]]]
    images = images[keep]
    if relabel:
        labels, next_label = labels[keep], next_label[keep]
    used = np.zeros((len(keep), n), dtype=bool)
    perms = np.zeros((len(keep), 0), dtype=np.int64)

    for m in range(n):
        rows, coords = np.nonzero(~used)
        cells = len(rows) * images.shape[1]
        if cells > MAX_FRONTIER_CELLS:
            raise CapExceededError(
                "canonical search frontier too large", cap=MAX_FRONTIER_CELLS, value=cells, operation="canonical_form", n=n, k=k
            )
        half = images[rows] ^ (np.int32(1) << coords.astype(np.int32))[:, None]
        raw = colors[half]
        if relabel:
            ext_labels, ext_next, prefix = _relabel_extension(labels[rows], next_label[rows], raw, k)
        else:
            prefix = raw
        keep = _lexmin_rows(prefix)
        string.append(prefix[keep[0]])
        parent = rows[keep]
        images = np.concatenate((images[parent], half[keep]), axis=1)
        used = used[parent].copy()
        used[np.arange(len(keep)), coords[keep]] = True
        perms = np.concatenate((perms[parent], coords[keep][:, None]), axis=1)
        if relabel:
            labels, next_label = ext_labels[keep], ext_next[keep]
        logger.debug(f"canonical search level {m}: {len(keep)} of {len(rows)} branches kept")

    return _Leaves(np.concatenate(string), images.astype(np.int64), perms, labels if relabel else None)


def _leaf_automorphism(n: int, base: int, perm) -> SignedPermutation:
    """The signed permutation x -> base ^ sum_j x_j 2^perm[j]."""
    flips = 0
    for j, p in enumerate(perm):
        flips |= ((base >> int(p)) & 1) << j
    return SignedPermutation(n, tuple(int(p) for p in perm), flips)


def _standard_generators(n: int, k: int) -> list:
    """Generators of the full group acting on a constant coloring."""
    gens = []
    if n >= 1:
        gens.append(ColoringEquivalence(SignedPermutation.inversion(n, 0), tuple(range(k))))
    if n >= 2:
        gens.append(ColoringEquivalence(SignedPermutation.transposition(n, 0, 1), tuple(range(k))))
    if n >= 3:
        cycle = tuple((j + 1) % n for j in range(n))
        gens.append(ColoringEquivalence(SignedPermutation(n, cycle, 0), tuple(range(k))))
    return gens


def _greedy_generators(tables: np.ndarray) -> list:
    """Indices of rows of `tables` (a whole group) that generate it, chosen greedily."""
    size = tables.shape[1]
    identity = np.arange(size, dtype=np.int64)
    seen = {identity.tobytes()}
    elements = [identity]
    chosen: list = []
    for i, table in enumerate(tables):
        if table.tobytes() in seen:
            continue
        chosen.append(i)
        queue = list(elements)
        while queue:
            x = queue.pop()
            for g in chosen:
                y = x[tables[g]]
                key = y.tobytes()
                if key not in seen:
                    seen.add(key)
                    elements.append(y)
                    queue.append(y)
        if len(elements) == len(tables):
            break
    return chosen


@dataclass
class CanonicalForm:
    """canon = apply_aut(f, to_canon); aut_order counts pairs (alpha, color bijection) fixing f."""

    canon: Coloring
    aut_order: int
    to_canon: ColoringEquivalence
    generators: Optional[list] = field(default=None)

    def key(self) -> bytes:
        return self.canon.key()

    def to_dict(self) -> dict:
        payload = {
            "canon": self.canon.to_dict(),
            "aut_order": self.aut_order,
            "to_canon": self.to_canon.to_dict(),
        }
        if self.generators is not None:
            payload["generators"] = [g.to_dict() for g in self.generators]
        return payload


def canonical_form(f: Coloring, generators: bool = False) -> CanonicalForm:
    """Least relabeled color string over all signed permutations.

    Args:
        f (Coloring): any coloring with n <= 10
        generators (bool): also list generators of the stabilizer (skipped, with a
            debug message, for groups larger than MAX_GENERATOR_GROUP)

    Returns:
        CanonicalForm

    Raises:
        CapExceededError: n above MAX_CANONICAL_DIMENSION, or the search frontier is too wide
    """
    n = f.n
    if n > MAX_CANONICAL_DIMENSION:
        raise CapExceededError(
            f"canonical form supports n <= {MAX_CANONICAL_DIMENSION}", cap=MAX_CANONICAL_DIMENSION, value=n, operation="canonical_form"
        )
    if f.k == 1:
        canon = Coloring.constant(n)
        gens = _standard_generators(n, 1) if generators else None
        return CanonicalForm(canon, group_order(n), ColoringEquivalence.identity(n, 1), gens)
    coords = essential_arguments(f)
    if len(coords) < n:
        return _reduced_canonical_form(f, coords, generators)

    leaves = _lexmin_frontier(f.colors, n, f.k, relabel=True)
    canon = Coloring(n, leaves.string)
    assert leaves.labels is not None
    to_canon = ColoringEquivalence(
        _leaf_automorphism(n, int(leaves.images[0, 0]), leaves.perms[0]),
        tuple(int(c) for c in leaves.labels[0]),
    )
    result = CanonicalForm(canon, len(leaves.images), to_canon)
    if generators:
        result.generators = _stabilizer_generators(f, leaves)
    return result


def lift_table(n: int, coords, low_table, high_table=None) -> np.ndarray:
    """Vertex table on Q_n acting by `low_table` on `coords` and by `high_table` on the other coordinates.

    The tables act on Q_m and Q_{n-m}, m = len(coords); an omitted `high_table` is the identity.
    """
    coords = list(coords)
    m = len(coords)
    rest = [j for j in range(n) if j not in coords]
    idx = vertex_indices(n)
    low = idx & ((1 << m) - 1)
    high = idx >> m
    if high_table is not None:
        high = np.asarray(high_table, dtype=np.int64)[high]
    return projection(coords)[np.asarray(low_table, dtype=np.int64)[low]] | projection(rest)[high]


def _reduced_canonical_form(f: Coloring, coords: tuple, generators: bool) -> CanonicalForm:
    """Canonical form through the essential coordinates, which end up as coordinates 0..e-1."""
    n, e = f.n, len(coords)
    inner = canonical_form(Coloring(e, f.colors[projection(coords)], relabel=False), generators=generators)
    canon = Coloring(n, np.tile(inner.canon.colors, 1 << (n - e)), relabel=False)
    aut = SignedPermutation.from_table(n, lift_table(n, coords, inner.to_canon.aut.table))
    result = CanonicalForm(canon, inner.aut_order * group_order(n - e), ColoringEquivalence(aut, inner.to_canon.color_map))
    if generators and inner.generators is not None:
        identity_low = vertex_indices(e)
        # gather: vertex of f -> its (coords, rest) bits as a vertex of the lifted cube
        gather = np.empty(1 << n, dtype=np.int64)
        gather[lift_table(n, coords, identity_low)] = vertex_indices(n)
        gens = [
            ColoringEquivalence(SignedPermutation.from_table(n, lift_table(n, coords, g.aut.table)[gather]), g.color_map)
            for g in inner.generators
        ]
        for g in _standard_generators(n - e, f.k):
            table = lift_table(n, coords, identity_low, g.aut.table)[gather]
            gens.append(ColoringEquivalence(SignedPermutation.from_table(n, table), g.color_map))
        result.generators = gens
    return result


def _stabilizer_generators(f: Coloring, leaves: _Leaves) -> Optional[list]:
    order = len(leaves.images)
    if order > MAX_GENERATOR_GROUP:
        logger.debug(f"stabilizer of order {order} too large to list generators")
        return None
    n = f.n
    alpha0_inv = _leaf_automorphism(n, int(leaves.images[0, 0]), leaves.perms[0]).inverse()
    tables = leaves.images[:, alpha0_inv.table]
    gens = []
    for i in _greedy_generators(tables):
        aut = SignedPermutation.from_table(n, tables[i])
        color_map = np.zeros(f.k, dtype=np.int64)
        color_map[f.colors[aut.table].astype(np.int64)] = f.colors
        gens.append(ColoringEquivalence(aut, tuple(int(c) for c in color_map)))
    return gens


def canonical_key(f: Coloring) -> bytes:
    return canonical_form(f).key()


def fiber_canonical_form(t: Fiber) -> tuple:
    """Least image of t as a set (no complementation), with its set-stabilizer order.

    Returns:
        tuple: (canonical Fiber, stabilizer order)
    """
    n = t.n
    if n > MAX_STABILIZER_DIMENSION:
        raise CapExceededError(
            f"set stabilizers supported for n <= {MAX_STABILIZER_DIMENSION}",
            cap=MAX_STABILIZER_DIMENSION,
            value=n,
            operation="stabilizer_order",
        )
    if t.size in (0, 1 << n):
        return t, group_order(n)
    leaves = _lexmin_frontier(t.array.astype(np.int64), n, 2, relabel=False)
    return Fiber.from_array(n, leaves.string), len(leaves.images)


def stabilizer_order(t: Fiber) -> int:
    """Order of the set-stabilizer of t in Aut(Q_n)."""
    return fiber_canonical_form(t)[1]


def are_equivalent(f: Coloring, g: Coloring) -> tuple:
    """Equivalence test with witness.

    Returns:
        tuple: (True, e) with g = apply_aut(f, e), or (False, None)

    Raises:
        MismatchError: different dimensions or color counts
    """
    if f.n != g.n:
        raise MismatchError(f"colorings of Q_{f.n} and Q_{g.n}", operation="are_equivalent", n=f.n)
    if f.k != g.k:
        raise MismatchError(f"{f.k}-coloring compared with a {g.k}-coloring", operation="are_equivalent", n=f.n, k=f.k)
    cf = canonical_form(f)
    cg = canonical_form(g)
    if cf.canon != cg.canon:
        return False, None
    witness = cg.to_canon.inverse().compose(cf.to_canon)
    if apply_aut(f, witness) != g:
        raise EquicubeError("equivalence witness does not map f to g", operation="are_equivalent", n=f.n, k=f.k)
    return True, witness


# Argument operators


def swap_args(f: Coloring, i: int, j: int) -> Coloring:
    """sigma_ij f: the coloring with arguments i and j exchanged."""
    aut = SignedPermutation.transposition(f.n, i, j)
    return apply_aut(f, ColoringEquivalence(aut, tuple(range(f.k))))


def flip_arg(f: Coloring, j: int) -> Coloring:
    """tau_j f: the coloring with argument j inverted."""
    aut = SignedPermutation.inversion(f.n, j)
    return apply_aut(f, ColoringEquivalence(aut, tuple(range(f.k))))


def add_dummy_arg(f: Coloring) -> Coloring:
    """Coloring of Q_{n+1} that ignores the new coordinate n."""
    check_dimension(f.n + 1)
    return Coloring(f.n + 1, np.concatenate((f.colors, f.colors)), relabel=False)


def projection(coords) -> np.ndarray:
    """Vertex of Q_n read by each vertex of Q_m, the unlisted coordinates fixed to 0."""
    coords = list(coords)
    idx = vertex_indices(len(coords))
    source = np.zeros(len(idx), dtype=np.int64)
    for b, j in enumerate(coords):
        source |= ((idx >> b) & 1) << j
    return source


def drop_nonessential(f: Coloring) -> Coloring:
    """Project onto the essential coordinates in ascending order."""
    coords = essential_arguments(f)
    return Coloring(len(coords), f.colors[projection(coords)], relabel=False)


def extension_witness(g: Coloring, t: Fiber) -> Optional[tuple]:
    """Search the extension of (g, t) by one dummy argument.

    With (g, t) reduced to its m essential coordinates and a dummy coordinate m added,
    look for i such that g' stays constant on the ones of sigma_{i,m} t', and the coloring
    (g', sigma_{i,m} t') has m+1 essential arguments and as many colors as (g, t).

    Returns:
        tuple: (i, extended coloring) for the first such i, or None

    Raises:
        MismatchError: g and t live on different cubes
        EquicubeError: g is not constant on the ones of t
    """
    if g.n != t.n:
        raise MismatchError("g and t live on different cubes", operation="extendable", n=g.n)
    ones = t.array
    if ones.any() and len(np.unique(g.colors[ones])) != 1:
        raise EquicubeError("g is not constant on the ones of t", operation="extendable", n=g.n, k=g.k)

    pair = Coloring(g.n, g.colors.astype(np.int64) * 2 + ones.astype(np.int64))
    coords = essential_arguments(pair)
    m = len(coords)
    source = projection(coords)
    g_m = add_dummy_arg(Coloring(m, g.colors[source], relabel=False))
    t_m = np.concatenate((ones[source], ones[source]))
    for i in range(m):
        swapped = t_m[SignedPermutation.transposition(m + 1, i, m).table]
        if swapped.any() and len(np.unique(g_m.colors[swapped])) != 1:
            continue
        extended = Coloring(m + 1, g_m.colors.astype(np.int64) * 2 + swapped.astype(np.int64))
        if extended.k == pair.k and len(essential_arguments(extended)) == m + 1:
            return i, extended
    return None


def extendable(g: Coloring, t: Fiber) -> bool:
    return extension_witness(g, t) is not None


# Orbits of sets of fibers


def standard_generator_tables(n: int) -> list:
    """Vertex tables of a generating set of Aut(Q_n)."""
    return [e.aut.table for e in _standard_generators(n, 1)]


def row_keys(rows: np.ndarray) -> np.ndarray:
    """One opaque, sortable key per 0/1 row (its packed bytes)."""
    rows = np.asarray(rows, dtype=bool)
    packed = np.ascontiguousarray(np.packbits(rows, axis=1, bitorder="little"))
    return packed.view(np.dtype((np.void, packed.shape[1]))).reshape(-1)


def _positions(keys: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Index in `keys` (distinct) of every query key, -1 when absent."""
    combined = np.concatenate((keys, queries))
    _, first, inverse = np.unique(combined, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    found = first[inverse[len(keys) :]]
    return np.where(found < len(keys), found, -1)


def orbit_labels(rows: np.ndarray, generator_tables: list) -> np.ndarray:
    """Label every row by the least row index of its orbit.

    Args:
        rows (np.ndarray): distinct 0/1 rows of length 2^n, closed under the group
        generator_tables (list): vertex tables of the group generators

    Raises:
        EquicubeError: the rows are not closed under a generator
    """
    rows = np.asarray(rows, dtype=bool)
    count = rows.shape[0]
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    keys = row_keys(rows)
    images = []
    for table in generator_tables:
        image = _positions(keys, row_keys(rows[:, table]))
        if (image < 0).any():
            raise EquicubeError("row set is not closed under the group", operation="orbit_labels")
        images.append(image)
    labels = np.arange(count, dtype=np.int64)
    while True:
        updated = labels.copy()
        for image in images:
            updated = np.minimum(updated, updated[image])
        updated = updated[updated]
        if np.array_equal(updated, labels):
            return labels
        labels = updated


def orbit_closure(rows: np.ndarray, generator_tables: list) -> np.ndarray:
    """All images of the rows under the group generated by the tables, distinct, in key order."""
    rows = np.asarray(rows, dtype=bool)
    if rows.shape[0] == 0:
        return rows
    keys, first = np.unique(row_keys(rows), return_index=True)
    seen = rows[first]
    frontier = seen
    while len(frontier):
        moved = np.concatenate([frontier[:, table] for table in generator_tables])
        moved_keys, first = np.unique(row_keys(moved), return_index=True)
        fresh = _positions(keys, moved_keys) < 0
        frontier = moved[first[fresh]]
        if len(frontier):
            seen = np.concatenate((seen, frontier))
            keys, first = np.unique(row_keys(seen), return_index=True)
            seen = seen[first]
    return seen
