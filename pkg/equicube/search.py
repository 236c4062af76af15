"""
Exhaustive isomorph-free search over Q_n.

Perfect colorings with a prescribed quotient matrix are found by depth-first
assignment with constraint propagation. The domain of every vertex is a set of
allowed colors; a vertex of color c must end with exactly S[c][j] neighbors of color
j, so the assigned neighbors give a lower bound, the still-possible neighbors an
upper bound, and a vertex whose bound is met pins its open neighbors. Class sizes
follow from the matrix and bound the columns. Every solution is reduced to its
canonical form, so the output lists one representative per equivalence class.

Codes, code splittings, partitions into codes and admissible quotient matrices are
all driven by the same search.
"""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from equicube.canonical import canonical_form, fiber_canonical_form
from equicube.exceptions import (
    CapExceededError,
    EquicubeError,
    InvariantViolation,
    IrregularSpectrumError,
    MismatchError,
    NotPerfectError,
)
from equicube.hypercube import Coloring, Fiber, antipodal_matching, check_dimension, emit_hex, group_order, vertex_indices
from equicube.io import Checkpoint
from equicube.spectral import (
    QuotientMatrix,
    ci_from_eigenvalues,
    class_sizes,
    eigenvalues,
    is_irreducible,
    is_perfect,
    quotient_matrix,
)

logger = logging.getLogger(__name__)

MAX_SEARCH_DIMENSION = 9
MAX_CODE_DIMENSION = 7
MAX_SPLIT_COMPONENTS = 20
# top-level branches handed to workers and recorded in checkpoints
BRANCH_TARGET = 64


def code_matrix(n: int, mu: int) -> QuotientMatrix:
    """Quotient matrix of a mu-fold 1-perfect code (color 0) and its complement."""
    if not 1 <= mu <= n:
        raise EquicubeError(f"multiplicity {mu} out of range [1, {n}]", operation="code_matrix", n=n)
    return QuotientMatrix([[mu - 1, n - mu + 1], [mu, n - mu]])


class ColoringSearch:
    """Backtracking search for the colorings of Q_n with quotient matrix `matrix`.

    Domains are an (2^n, k) boolean array; row v lists the colors still allowed at v.
    `nodes` counts the propagated search nodes.
    """

    def __init__(self, n: int, matrix: QuotientMatrix) -> None:
        self.n = check_dimension(n)
        if matrix.n != n:
            raise MismatchError(f"matrix rows sum to {matrix.n}", operation="search", n=n, k=matrix.k)
        self.matrix = matrix
        self.k = matrix.k
        self.S = matrix.array().astype(np.int32)
        sizes = class_sizes(matrix, n)
        self.sizes = None if sizes is None else np.array(sizes, dtype=np.int64)
        idx = vertex_indices(n)
        if n:
            self.neighbors = np.stack([idx ^ (1 << j) for j in range(n)])
        else:
            self.neighbors = np.zeros((0, 1), dtype=np.int64)
        self.nodes = 0

    @property
    def feasible(self) -> bool:
        """False when the matrix admits no integral class sizes on Q_n."""
        return self.sizes is not None

    def initial_domains(self) -> np.ndarray:
        return np.ones((1 << self.n, self.k), dtype=bool)

    def symmetry_broken_domains(self) -> np.ndarray:
        """Domains with vertex 0 in the smallest class and e_0, e_1, ... colored in ascending order.

        Any coloring can be moved there by a translation and a coordinate permutation.
        """
        domains = self.initial_domains()
        if self.sizes is None or self.n == 0:
            return domains
        root = int(np.argmin(self.sizes))
        domains[0] = False
        domains[0, root] = True
        ordered = [j for j in range(self.k) for _ in range(int(self.S[root, j]))]
        for pos, color in enumerate(ordered):
            domains[1 << pos] = False
            domains[1 << pos, color] = True
        return domains

    def propagate(self, domains: np.ndarray) -> Optional[np.ndarray]:
        """Shrink domains to a fixpoint; None on a contradiction."""
        if self.sizes is None:
            return None
        S = self.S
        P = domains.copy()
        while True:
            counts = P.sum(axis=1)
            if not counts.all():
                return None
            assigned = counts == 1
            A = (P & assigned[:, None]).astype(np.int32)
            asg = A[self.neighbors].sum(axis=0)
            pos = P.astype(np.int32)[self.neighbors].sum(axis=0)
            fits = ((asg[:, None, :] <= S[None, :, :]) & (S[None, :, :] <= pos[:, None, :])).all(axis=2)
            Q = P & fits

            need = A @ S
            full = assigned[:, None] & (asg == need)
            tight = assigned[:, None] & (pos == need)
            banned = full[self.neighbors].any(axis=0)
            forced = tight[self.neighbors].any(axis=0)
            free = ~assigned
            Q[free] &= ~banned[free]
            pinned = forced & Q & free[:, None]
            npinned = pinned.sum(axis=1)
            if (npinned > 1).any():
                return None
            rows = npinned == 1
            Q[rows] = pinned[rows]

            open_rows = Q.sum(axis=1) > 1
            taken = (Q & ~open_rows[:, None]).sum(axis=0)
            possible = Q.sum(axis=0)
            if (taken > self.sizes).any() or (possible < self.sizes).any():
                return None
            closed = taken == self.sizes
            if closed.any():
                Q[np.ix_(open_rows, closed)] = False
            short = (possible == self.sizes) & ~closed
            if short.any():
                needed = Q & short[None, :] & open_rows[:, None]
                nneeded = needed.sum(axis=1)
                if (nneeded > 1).any():
                    return None
                rows = nneeded == 1
                Q[rows] = needed[rows]

            if np.array_equal(Q, P):
                return Q
            P = Q

    def branch(self, domains: np.ndarray) -> list:
        """Children of a propagated node: the open vertex with fewest colors, lowest index first."""
        counts = domains.sum(axis=1)
        open_ = np.flatnonzero(counts > 1)
        if len(open_) == 0:
            return []
        v = int(open_[np.argmin(counts[open_])])
        children = []
        for c in np.flatnonzero(domains[v]):
            child = domains.copy()
            child[v] = False
            child[v, c] = True
            children.append(child)
        return children

    def solve(self, domains: np.ndarray) -> Iterator[np.ndarray]:
        """Yield the color array of every solution below `domains`."""
        P = self.propagate(domains)
        if P is None:
            return
        self.nodes += 1
        children = self.branch(P)
        if not children:
            yield P.argmax(axis=1)
            return
        for child in children:
            yield from self.solve(child)


def _frontier(search: ColoringSearch, domains: np.ndarray, target: int) -> list:
    """Split the root breadth-first until there are at least `target` open branches."""
    P = search.propagate(domains)
    if P is None:
        return []
    frontier = [P]
    while len(frontier) < target:
        expanded = []
        grew = False
        for node in frontier:
            children = search.branch(node)
            if not children:
                expanded.append(node)
                continue
            grew = True
            for child in children:
                propagated = search.propagate(child)
                if propagated is not None:
                    expanded.append(propagated)
        frontier = expanded
        if not grew:
            break
    return frontier


def _class_entry(colors: np.ndarray, n: int, mode: str) -> tuple:
    if mode == "code":
        canon, stabilizer = fiber_canonical_form(Fiber.from_array(n, colors == 0))
        key = emit_hex(canon) if n >= 2 else f"{canon.bits:x}"
        return key, {"bits": f"{canon.bits:x}", "stabilizer": stabilizer}
    cf = canonical_form(Coloring(n, colors))
    return cf.key().hex(), {"colors": [int(c) for c in cf.canon.colors], "aut_order": cf.aut_order}


def _run_branch(search: ColoringSearch, domains: np.ndarray, mode: str) -> tuple:
    found: dict = {}
    start = search.nodes
    for colors in search.solve(domains):
        key, payload = _class_entry(colors, search.n, mode)
        found.setdefault(key, payload)
    return found, search.nodes - start


def run_search(
    search: ColoringSearch,
    domains: np.ndarray,
    mode: str = "coloring",
    threads: int = 1,
    checkpoint: Optional[Union[str, Path]] = None,
) -> dict:
    """Enumerate every solution below `domains` and reduce it to a class key.

    Args:
        search (ColoringSearch): the problem
        domains (np.ndarray): starting domains
        mode (str): "coloring" keys by canonical form of the coloring, "code" by the
            set-canonical form of color 0
        threads (int): joblib workers for the top-level branches
        checkpoint (Path): resumable state file, updated after every chunk of branches

    Returns:
        dict: class key -> JSON-ready payload, sorted by key
    """
    frontier = _frontier(search, domains, BRANCH_TARGET)
    state = {"done": [], "found": {}}
    store = None
    if checkpoint is not None:
        store = Checkpoint(
            checkpoint,
            kind="search",
            params={"n": search.n, "matrix": search.matrix.to_list(), "mode": mode, "branches": len(frontier)},
        )
        state = store.load() or state
    done = set(state["done"])
    found = dict(state["found"])
    pending = [i for i in range(len(frontier)) if i not in done]
    logger.info(f"search on Q_{search.n} for {search.matrix.shorthand()}: {len(pending)} of {len(frontier)} branches to run")

    chunk = max(1, threads) * 4
    nodes = 0
    for start in range(0, len(pending), chunk):
        batch = pending[start : start + chunk]
        results = Parallel(n_jobs=threads)(delayed(_run_branch)(search, frontier[i], mode) for i in batch)
        for i, (branch_found, branch_nodes) in zip(batch, results):
            for key, payload in branch_found.items():
                found.setdefault(key, payload)
            nodes += branch_nodes
            done.add(i)
        logger.info(f"{len(done)} of {len(frontier)} branches done, {len(found)} classes, {nodes} nodes")
        if store is not None:
            store.save({"done": sorted(done), "found": found})
    return {key: found[key] for key in sorted(found)}


def _check_dimension_cap(n: int, cap: int, operation: str) -> None:
    if n > cap:
        raise CapExceededError(f"{operation} supports n <= {cap}", cap=cap, value=n, operation=operation)


def enumerate_perfect_colorings(
    n: int,
    matrix: QuotientMatrix,
    threads: int = 1,
    checkpoint: Optional[Union[str, Path]] = None,
) -> list:
    """One canonical representative per equivalence class of perfect colorings with `matrix`.

    Raises:
        CapExceededError: n > MAX_SEARCH_DIMENSION
        MismatchError: the rows of `matrix` do not sum to n
    """
    check_dimension(n)
    _check_dimension_cap(n, MAX_SEARCH_DIMENSION, "enumerate_perfect_colorings")
    if matrix.k == 1:
        if matrix.n != n:
            raise MismatchError(f"matrix rows sum to {matrix.n}", operation="enumerate_perfect_colorings", n=n, k=1)
        return [Coloring.constant(n)]
    search = ColoringSearch(n, matrix)
    if not search.feasible:
        logger.info(f"{matrix.shorthand()} has no integral class sizes on Q_{n}")
        return []
    found = run_search(search, search.symmetry_broken_domains(), "coloring", threads, checkpoint)
    return [Coloring(n, payload["colors"]) for payload in found.values()]


# Multifold codes


def ball_counts(t: Fiber) -> np.ndarray:
    """Number of members of t in the closed ball of radius one around every vertex."""
    values = t.array.astype(np.int64)
    counts = values.copy()
    idx = vertex_indices(t.n)
    for j in range(t.n):
        counts += values[idx ^ (1 << j)]
    return counts


def is_multifold_code(t: Fiber, mu: int) -> bool:
    return bool((ball_counts(t) == mu).all())


def cycle_lengths(c: Fiber) -> Optional[Counter]:
    """Cycle lengths of the subgraph induced by c, or None if it is not 2-regular."""
    members = c.vertices()
    inside = set(members)
    adjacency = {v: [v ^ (1 << j) for j in range(c.n) if v ^ (1 << j) in inside] for v in members}
    if any(len(adj) != 2 for adj in adjacency.values()):
        return None
    lengths: Counter = Counter()
    seen: set = set()
    for v in members:
        if v in seen:
            continue
        size = 0
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            size += 1
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        lengths[size] += 1
    return lengths


def render_cycle_lengths(lengths: Counter) -> str:
    return " ".join(f"{size}^{count}" for size, count in sorted(lengths.items()))


def cycle_structure(c: Fiber) -> Optional[str]:
    """Cycle type of the 2-factor induced by a code, e.g. "4^2 10^4"."""
    lengths = cycle_lengths(c)
    return None if lengths is None else render_cycle_lengths(lengths)


@lru_cache(maxsize=None)
def hamming_codes(n: int = 7) -> tuple:
    """Every labeled 1-perfect code of Q_n (empty unless n + 1 is a power of two)."""
    _check_dimension_cap(n, MAX_CODE_DIMENSION, "hamming_codes")
    if n < 1 or (n + 1) & n:
        return ()
    search = ColoringSearch(n, code_matrix(n, 1))
    codes = sorted(int(Fiber.from_array(n, colors == 0).bits) for colors in search.solve(search.initial_domains()))
    logger.debug(f"{len(codes)} perfect codes in Q_{n}, {search.nodes} nodes")
    return tuple(Fiber(n, bits) for bits in codes)


@dataclass
class SplitReport:
    contains_perfect_code: bool
    splits: bool
    parts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "contains_perfect_code": self.contains_perfect_code,
            "splits": self.splits,
            "parts": [emit_hex(t) for t in self.parts],
        }


def _exact_cover(target: int, codes: list) -> Optional[list]:
    if target == 0:
        return []
    lowest = (target & -target).bit_length() - 1
    for code in codes:
        if (code.bits >> lowest) & 1 and code.bits & ~target == 0:
            rest = _exact_cover(target & ~code.bits, codes)
            if rest is not None:
                return [code, *rest]
    return None


def splittability(c: Fiber, mu: int) -> SplitReport:
    """Whether a mu-fold 1-perfect code contains a 1-perfect code, and whether it is a disjoint union of mu of them.

    Raises:
        EquicubeError: c is not a mu-fold 1-perfect code
    """
    if not is_multifold_code(c, mu):
        raise EquicubeError(f"not a {mu}-fold 1-perfect code", operation="splittability", n=c.n)
    inside = [h for h in hamming_codes(c.n) if h.issubset(c)]
    parts = _exact_cover(c.bits, inside) if inside else None
    return SplitReport(bool(inside), parts is not None, parts or [])


@dataclass
class CodeClass:
    representative: Fiber
    stabilizer_order: int
    cycle_structure: Optional[str] = None
    contains_perfect_code: Optional[bool] = None
    splits: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "representative": emit_hex(self.representative) if self.representative.n >= 2 else f"{self.representative.bits:x}",
            "stabilizer_order": self.stabilizer_order,
            "cycle_structure": self.cycle_structure,
            "contains_perfect_code": self.contains_perfect_code,
            "splits": self.splits,
        }


@dataclass
class CodeEnumeration:
    n: int
    mu: int
    classes: list = field(default_factory=list)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    @property
    def labeled_count(self) -> int:
        return sum(group_order(self.n) // c.stabilizer_order for c in self.classes)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "class_count": self.class_count,
            "labeled_count": self.labeled_count,
            "classes": [c.to_dict() for c in self.classes],
        }


def enumerate_codes(n: int, mu: int, threads: int = 1, checkpoint: Optional[Union[str, Path]] = None) -> CodeEnumeration:
    """All mu-fold 1-perfect codes of Q_n up to Aut(Q_n), with stabilizer orders.

    Cycle structures are filled in for mu = 3 (the code induces a 2-factor), and
    splittability whenever 1-perfect codes exist in Q_n.
    """
    check_dimension(n)
    _check_dimension_cap(n, MAX_CODE_DIMENSION, "enumerate_codes")
    if not 1 <= mu <= n + 1:
        raise EquicubeError(f"multiplicity {mu} out of range [1, {n + 1}]", operation="enumerate_codes", n=n)
    result = CodeEnumeration(n, mu)
    if mu == n + 1:
        result.classes.append(CodeClass(Fiber.full(n), group_order(n)))
        return result
    search = ColoringSearch(n, code_matrix(n, mu))
    if not search.feasible:
        return result
    found = run_search(search, search.symmetry_broken_domains(), "code", threads, checkpoint)
    with_codes = bool(hamming_codes(n))
    for payload in found.values():
        rep = Fiber(n, int(payload["bits"], 16))
        entry = CodeClass(rep, int(payload["stabilizer"]))
        if mu == 3:
            entry.cycle_structure = cycle_structure(rep)
        if with_codes:
            report = splittability(rep, mu)
            entry.contains_perfect_code = report.contains_perfect_code
            entry.splits = report.splits
        result.classes.append(entry)
    logger.info(f"Q_{n}, mu={mu}: {result.class_count} classes, {result.labeled_count} codes")
    return result


# Splitting a color into independent sets


def _bipartite_components(f: Coloring, color: int) -> Optional[tuple]:
    """Component index and side (0/1) of every vertex of one color; None if a component has an odd cycle."""
    size = f.size
    component = np.full(size, -1, dtype=np.int64)
    side = np.zeros(size, dtype=np.int64)
    members = np.flatnonzero(f.colors == color)
    inside = f.colors == color
    count = 0
    for root in members:
        if component[root] >= 0:
            continue
        component[root] = count
        stack = [int(root)]
        while stack:
            u = stack.pop()
            for j in range(f.n):
                w = u ^ (1 << j)
                if not inside[w]:
                    continue
                if component[w] < 0:
                    component[w] = count
                    side[w] = side[u] ^ 1
                    stack.append(w)
                elif side[w] == side[u]:
                    return None
        count += 1
    return component, side, count


def independent_splits(f: Coloring, color: int, antipodal: bool = False) -> list:
    """Perfect colorings obtained by splitting one color class into two independent sets.

    Each connected component of the class is split along its bipartition, either way
    round; every combination is tried and the perfect results are kept, one per
    equivalence class. With `antipodal` only colorings with an antipodal color
    matching are kept.

    Raises:
        NotPerfectError: f is not perfect
        CapExceededError: more than MAX_SPLIT_COMPONENTS components
    """
    quotient_matrix(f)
    if not 0 <= color < f.k:
        raise EquicubeError(f"color {color} out of range", operation="independent_splits", n=f.n, k=f.k)
    parts = _bipartite_components(f, color)
    if parts is None:
        return []
    component, side, count = parts
    if count > MAX_SPLIT_COMPONENTS:
        raise CapExceededError(
            "too many components to split", cap=MAX_SPLIT_COMPONENTS, value=count, operation="independent_splits", n=f.n, k=f.k
        )
    inside = f.colors == color
    base = f.colors.astype(np.int64)
    found: dict = {}
    for mask in range(1 << max(count - 1, 0)):
        flips = np.array([0] + [(mask >> c) & 1 for c in range(count - 1)], dtype=np.int64)
        sides = side ^ flips[np.maximum(component, 0)]
        colors = base.copy()
        colors[inside & (sides == 1)] = f.k
        g = Coloring(f.n, colors)
        if g.k != f.k + 1 or not is_perfect(g):
            continue
        if antipodal:
            try:
                antipodal_matching(g)
            except (InvariantViolation, NotPerfectError):
                continue
        cf = canonical_form(g)
        found.setdefault(cf.key(), cf.canon)
    return [found[key] for key in sorted(found)]


# Partitions into multifold codes


@dataclass
class PartitionSpectrum:
    spectrum: tuple
    n: int
    representatives: list = field(default_factory=list)
    aut_orders: list = field(default_factory=list)

    @property
    def class_count(self) -> int:
        return len(self.representatives)

    @property
    def labeled_count(self) -> int:
        return sum(group_order(self.n) // order for order in self.aut_orders)

    def row(self) -> str:
        """The "(6,2):3:12180" summary form."""
        return f"({','.join(str(mu) for mu in self.spectrum)}):{self.class_count}:{self.labeled_count}"

    def to_dict(self) -> dict:
        return {
            "spectrum": list(self.spectrum),
            "n": self.n,
            "class_count": self.class_count,
            "labeled_count": self.labeled_count,
            "representatives": [f.to_dict() for f in self.representatives],
            "aut_orders": list(self.aut_orders),
        }


_PARTITION_CACHE: dict = {}


def _part_multiplicities(f: Coloring) -> list:
    matrix = quotient_matrix(f)
    return [matrix[i, i] + 1 for i in range(f.k)]


def _split_part(rep: Coloring, part: int, a: int) -> dict:
    """Every way to carve an a-fold code out of one part of `rep`, by canonical key."""
    n = rep.n
    search = ColoringSearch(n, code_matrix(n, a))
    domains = search.initial_domains()
    outside = rep.colors != part
    domains[outside, 0] = False
    found = {}
    for colors in search.solve(domains):
        refined = rep.colors.astype(np.int64)
        refined[colors == 0] = rep.k
        cf = canonical_form(Coloring(n, refined))
        found.setdefault(cf.key(), (cf.canon, cf.aut_order))
    return found


def _partition_classes(spectrum: tuple, n: int, threads: int) -> dict:
    cached = _PARTITION_CACHE.get((spectrum, n))
    if cached is not None:
        return cached
    if len(spectrum) == 1:
        found = {Coloring.constant(n).key(): (Coloring.constant(n), group_order(n))}
    elif len(spectrum) == 2:
        mu0, mu1 = spectrum
        matrix = QuotientMatrix([[mu0 - 1, mu1], [mu0, mu1 - 1]])
        search = ColoringSearch(n, matrix)
        found = {}
        if search.feasible:
            for key, payload in run_search(search, search.symmetry_broken_domains(), "coloring", threads).items():
                found[bytes.fromhex(key)] = (Coloring(n, payload["colors"]), payload["aut_order"])
    else:
        a, b = spectrum[-1], spectrum[-2]
        coarse = tuple(sorted((*spectrum[:-2], a + b), reverse=True))
        jobs = []
        for rep, _ in _partition_classes(coarse, n, threads).values():
            for part, mu in enumerate(_part_multiplicities(rep)):
                if mu == a + b:
                    jobs.append((rep, part))
        results = Parallel(n_jobs=threads)(delayed(_split_part)(rep, part, a) for rep, part in jobs)
        found = {}
        for result in results:
            for key, entry in result.items():
                found.setdefault(key, entry)
    found = {key: found[key] for key in sorted(found)}
    logger.info(f"spectrum {spectrum} on Q_{n}: {len(found)} classes")
    _PARTITION_CACHE[(spectrum, n)] = found
    return found


def enumerate_partitions(spectrum: Sequence[int], n: int = 7, threads: int = 1) -> PartitionSpectrum:
    """Partitions of Q_n into mu_i-fold 1-perfect codes, up to Aut(Q_n) and renaming the parts.

    A spectrum with three or more parts is reached from the coarser spectrum that
    merges its two smallest parts: each class of the coarser partition has every part
    of the merged multiplicity split into two codes.

    Raises:
        EquicubeError: the multiplicities are not positive or do not sum to n + 1
    """
    check_dimension(n)
    _check_dimension_cap(n, MAX_CODE_DIMENSION, "enumerate_partitions")
    spectrum = tuple(sorted((int(mu) for mu in spectrum), reverse=True))
    if not spectrum or any(mu < 1 for mu in spectrum) or sum(spectrum) != n + 1:
        raise EquicubeError(f"bad spectrum {spectrum}: multiplicities must be positive and sum to {n + 1}", operation="enumerate_partitions", n=n)
    found = _partition_classes(spectrum, n, threads)
    result = PartitionSpectrum(spectrum, n)
    for canon, order in found.values():
        result.representatives.append(canon)
        result.aut_orders.append(order)
    return result


def integer_partitions(total: int) -> list:
    """All partitions of total into positive parts, largest part first, in descending order."""

    def parts(remaining: int, largest: int):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, largest), 0, -1):
            for rest in parts(remaining - first, first):
                yield (first, *rest)

    return list(parts(total, total))


# Admissible quotient matrices


@dataclass(frozen=True)
class MatrixConstraints:
    """Spectral filters on candidate quotient matrices.

    Attributes:
        min_eigenvalue: every eigenvalue at least this (degree <= (n - bound) / 2)
        max_nonmain_eigenvalue: every eigenvalue but the main one at most this
        eigenvalues: the exact eigenvalue set
        min_ci: correlation immunity from the second eigenvalue at least this
        ci_bound: enforce the correlation-immunity bound 2n/3 - 1 (waived for symmetric 2x2)
    """

    min_eigenvalue: Optional[int] = None
    max_nonmain_eigenvalue: Optional[int] = None
    eigenvalues: Optional[frozenset] = None
    min_ci: Optional[int] = None
    ci_bound: bool = False

    def eigenvalue_range(self, n: int) -> tuple:
        low, high = -n, n
        if self.min_eigenvalue is not None:
            low = max(low, self.min_eigenvalue)
        if self.max_nonmain_eigenvalue is not None:
            high = min(high, self.max_nonmain_eigenvalue)
        if self.min_ci is not None:
            high = min(high, n - 2 * (self.min_ci + 1))
        if self.eigenvalues:
            others = [e for e in self.eigenvalues if e != n] or [n]
            low, high = max(low, min(others)), min(high, max(others))
        return low, high

    def accepts(self, matrix: QuotientMatrix, values: tuple) -> bool:
        n = matrix.n
        nonmain = values[1:]
        if self.min_eigenvalue is not None and min(values) < self.min_eigenvalue:
            return False
        if self.max_nonmain_eigenvalue is not None and nonmain and max(nonmain) > self.max_nonmain_eigenvalue:
            return False
        if self.eigenvalues is not None and frozenset(values) != frozenset(self.eigenvalues):
            return False
        if self.min_ci is not None and ci_from_eigenvalues(n, values) < self.min_ci:
            return False
        if self.ci_bound and nonmain:
            symmetric_pair = matrix.k == 2 and matrix.is_symmetric()
            if not symmetric_pair and 3 * nonmain[0] < -n:
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "max_nonmain_eigenvalue": self.max_nonmain_eigenvalue,
            "eigenvalues": sorted(self.eigenvalues, reverse=True) if self.eigenvalues is not None else None,
            "min_ci": self.min_ci,
            "ci_bound": self.ci_bound,
        }


@dataclass
class MatrixCandidateSet:
    n: int
    k: int
    constraints: MatrixConstraints
    matrices: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "constraints": self.constraints.to_dict(),
            "matrices": [m.to_list() for m in self.matrices],
        }


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> tuple:
    """All tuples of `parts` nonnegative integers summing to total."""
    result = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        previous = -1
        row = []
        for bar in bars:
            row.append(bar - previous - 1)
            previous = bar
        row.append(total + parts - 1 - previous - 1)
        result.append(tuple(row))
    return tuple(result)


def _ratios_consistent(rows: list) -> bool:
    """rho_a S_ab = rho_b S_ba solvable with positive rho on the leading principal block."""
    m = len(rows)
    rho: list = [None] * m
    for start in range(m):
        if rho[start] is not None:
            continue
        rho[start] = Fraction(1)
        stack = [start]
        while stack:
            a = stack.pop()
            for b in range(m):
                if rows[a][b] == 0:
                    continue
                if rows[b][a] == 0:
                    return False
                ratio = rho[a] * rows[a][b] / rows[b][a]
                if rho[b] is None:
                    rho[b] = ratio
                    stack.append(b)
                elif rho[b] != ratio:
                    return False
    return True


def candidate_matrices(n: int, k: int, constraints: Optional[MatrixConstraints] = None) -> MatrixCandidateSet:
    """Every admissible k x k quotient matrix on Q_n, one per simultaneous row/column permutation.

    Admissible: irreducible, row sums n, zero pattern symmetric, a density vector with
    integral class sizes, eigenvalues of the form n - 2i, and the spectral constraints.
    Rows are generated with a non-decreasing diagonal.
    """
    check_dimension(n)
    if k < 1:
        raise EquicubeError("k must be at least 1", operation="candidate_matrices", n=n, k=k)
    constraints = constraints or MatrixConstraints()
    result = MatrixCandidateSet(n, k, constraints)
    low, high = constraints.eigenvalue_range(n)
    if k > 1 and low > high:
        return result
    trace_low = n + (k - 1) * low
    trace_high = n + (k - 1) * high
    rows_pool = _compositions(n, k)
    seen: set = set()
    leaves = 0

    def extend(rows: list, trace: int) -> None:
        nonlocal leaves
        i = len(rows)
        if i == k:
            leaves += 1
            _accept_leaf(rows)
            return
        floor = rows[-1][i - 1] if rows else 0
        for row in rows_pool:
            diag = row[i]
            if diag < floor:
                continue
            if trace + diag * (k - i) > trace_high or trace + diag + n * (k - i - 1) < trace_low:
                continue
            if any((row[j] == 0) != (rows[j][i] == 0) for j in range(i)):
                continue
            candidate = [*rows, row]
            if not _ratios_consistent(candidate):
                continue
            extend(candidate, trace + diag)

    def _accept_leaf(rows: list) -> None:
        matrix = QuotientMatrix(rows)
        if not is_irreducible(matrix) or class_sizes(matrix, n) is None:
            return
        try:
            values = eigenvalues(matrix, n)
        except IrregularSpectrumError:
            return
        if not constraints.accepts(matrix, values):
            return
        key = matrix.canonical_key()
        if key not in seen:
            seen.add(key)
            result.matrices.append(matrix)

    extend([], 0)
    result.matrices.sort(key=lambda m: m.canonical_key())
    logger.info(f"{len(result.matrices)} admissible {k}x{k} matrices on Q_{n} from {leaves} row choices")
    return result
