"""
Vertices, fibers, colorings and automorphisms of the hypercube Q_n.

Vertex convention: bit j of a vertex index is coordinate x_j, so the neighbors of v
are v ^ (1 << j). Hex truth tables pack four vertices per nibble, the most
significant bit of nibble c being vertex 4c.
"""

import itertools
import logging
import string
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import factorial
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from equicube.exceptions import CapExceededError, EquicubeError, FormatError, InvariantViolation, MismatchError

logger = logging.getLogger(__name__)

MAX_DIMENSION = 24
# automorphism_table materialises |Aut(Q_n)| rows of 2^n entries
MAX_TABLE_DIMENSION = 7

_HEX_DIGITS = frozenset(string.hexdigits)
_NIBBLE_SHIFTS = np.array([3, 2, 1, 0], dtype=np.uint8)


def check_dimension(n: int) -> int:
    """Validate a hypercube dimension.

    Dimension 0 (a single vertex) is accepted so that dropping every argument of a
    constant coloring stays inside the type.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise EquicubeError(f"dimension must be an integer, got {n!r}")
    if n < 0:
        raise EquicubeError(f"dimension must be non-negative, got {n}")
    if n > MAX_DIMENSION:
        raise CapExceededError(f"dimension {n} exceeds the supported maximum", cap=MAX_DIMENSION, value=int(n))
    return int(n)


def check_vertex(v: int, n: int) -> int:
    if not 0 <= v < (1 << n):
        raise EquicubeError(f"vertex {v} out of range for Q_{n}", n=n)
    return int(v)


def neighbors(v: int, n: int) -> list:
    """Neighbors of v in ascending coordinate order."""
    check_dimension(n)
    check_vertex(v, n)
    return [v ^ (1 << j) for j in range(n)]


def complement_vertex(v: int, n: int) -> int:
    return v ^ ((1 << n) - 1)


@lru_cache(maxsize=None)
def vertex_indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    idx.flags.writeable = False
    return idx


@lru_cache(maxsize=None)
def vertex_weights(n: int) -> np.ndarray:
    """Hamming weight of every vertex."""
    idx = vertex_indices(n)
    weights = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        weights += (idx >> j) & 1
    weights.flags.writeable = False
    return weights


def _array_to_bits(values: np.ndarray) -> int:
    packed = np.packbits(np.asarray(values, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _bits_to_array(bits: int, size: int) -> np.ndarray:
    nbytes = max(1, (size + 7) // 8)
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


@dataclass(frozen=True)
class Fiber:
    """One color class, stored as a 2^n-bit integer (bit v set iff v is in the class)."""

    n: int
    bits: int

    def __post_init__(self):
        check_dimension(self.n)
        if self.bits < 0 or self.bits >> (1 << self.n):
            raise EquicubeError(f"fiber bits do not fit Q_{self.n}", n=self.n)

    @classmethod
    def from_array(cls, n: int, values) -> "Fiber":
        values = np.asarray(values)
        if values.shape != (1 << n,):
            raise MismatchError(f"expected {1 << n} values, got shape {values.shape}", n=n)
        return cls(n, _array_to_bits(values != 0))

    @classmethod
    def from_vertices(cls, n: int, vertices: Iterable[int]) -> "Fiber":
        bits = 0
        for v in vertices:
            bits |= 1 << check_vertex(v, n)
        return cls(n, bits)

    @classmethod
    def full(cls, n: int) -> "Fiber":
        return cls(n, (1 << (1 << n)) - 1)

    @classmethod
    def empty(cls, n: int) -> "Fiber":
        return cls(n, 0)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    @cached_property
    def array(self) -> np.ndarray:
        values = _bits_to_array(self.bits, 1 << self.n)
        values.flags.writeable = False
        return values

    def vertices(self) -> list:
        return [int(v) for v in np.flatnonzero(self.array)]

    def complement(self) -> "Fiber":
        return Fiber(self.n, self.bits ^ ((1 << (1 << self.n)) - 1))

    def __contains__(self, v: int) -> bool:
        return bool((self.bits >> v) & 1)

    def issubset(self, other: "Fiber") -> bool:
        return self.bits & ~other.bits == 0

    def isdisjoint(self, other: "Fiber") -> bool:
        return self.bits & other.bits == 0

    def to_hex(self) -> str:
        return emit_hex(self)

    def as_coloring(self) -> "Coloring":
        return Coloring(self.n, self.array.astype(np.int64))

    def __repr__(self):
        if self.n >= 2:
            return f"Fiber(n={self.n}, hex={emit_hex(self)!r})"
        return f"Fiber(n={self.n}, bits={self.bits:#x})"


def parse_hex(s: str, n: int) -> Fiber:
    """Parse a hex truth table.

    Args:
        s (str): 2^n / 4 hex digits, nibble c covers vertices 4c..4c+3 with vertex 4c in the
            most significant bit
        n (int): dimension, at least 2

    Returns:
        Fiber
    """
    check_dimension(n)
    if n < 2:
        raise FormatError("hex truth tables need n >= 2", operation="parse_hex", n=n)
    s = s.strip()
    if len(s) != (1 << n) // 4:
        raise FormatError(f"expected {(1 << n) // 4} hex digits, got {len(s)}", operation="parse_hex", n=n)
    if not set(s) <= _HEX_DIGITS:
        raise FormatError(f"non-hex characters in {s!r}", operation="parse_hex", n=n)
    nibbles = np.array([int(ch, 16) for ch in s], dtype=np.uint8)
    values = (nibbles[:, None] >> _NIBBLE_SHIFTS[None, :]) & 1
    return Fiber.from_array(n, values.reshape(-1))


def emit_hex(t: Fiber) -> str:
    """Inverse of `parse_hex`, lower case."""
    if t.n < 2:
        raise FormatError("hex truth tables need n >= 2", operation="emit_hex", n=t.n)
    values = t.array.astype(np.uint8).reshape(-1, 4)
    nibbles = (values << _NIBBLE_SHIFTS[None, :]).sum(axis=1)
    return "".join(f"{int(c):x}" for c in nibbles)


def first_occurrence_labels(colors: np.ndarray) -> np.ndarray:
    """Rename labels so that they appear as 0, 1, 2, ... in vertex order."""
    _, first_index, inverse = np.unique(colors, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    rank = np.empty(len(first_index), dtype=np.int64)
    rank[np.argsort(first_index, kind="stable")] = np.arange(len(first_index))
    return rank[inverse]


class Coloring:
    """A k-coloring of Q_n: one label in [0, k) per vertex, every label used.

    By default labels are renamed by first occurrence in vertex order. Pass
    `relabel=False` to keep the given labels; they must then already be onto [0, k).
    Instances are immutable.
    """

    def __init__(self, n: int, colors, relabel: bool = True) -> None:
        self.n = check_dimension(n)
        values = np.asarray(colors)
        if values.shape != (1 << self.n,):
            raise MismatchError(f"expected {1 << self.n} colors, got shape {values.shape}", operation="coloring", n=self.n)
        if values.size and not np.issubdtype(values.dtype, np.integer):
            raise EquicubeError(f"colors must be integers, got dtype {values.dtype}", operation="coloring", n=self.n)
        values = values.astype(np.int64)
        if values.size and values.min() < 0:
            raise EquicubeError("colors must be non-negative", operation="coloring", n=self.n)
        if relabel:
            values = first_occurrence_labels(values)
        k = int(values.max()) + 1
        if not relabel and np.count_nonzero(np.bincount(values, minlength=k)) != k:
            raise EquicubeError("colors must use every label in [0, k)", operation="coloring", n=self.n, k=k)
        self.k = k
        self.colors = values.astype(np.min_scalar_type(max(k - 1, 0)))
        self.colors.flags.writeable = False

    @classmethod
    def constant(cls, n: int) -> "Coloring":
        return cls(n, np.zeros(1 << n, dtype=np.int64))

    @classmethod
    def from_fibers(cls, fibers: Sequence[Fiber]) -> "Coloring":
        """Coloring whose color i is fibers[i]; the fibers must partition the vertices."""
        if not fibers:
            raise EquicubeError("at least one fiber is required", operation="from_fibers")
        n = fibers[0].n
        colors = np.full(1 << n, -1, dtype=np.int64)
        for i, t in enumerate(fibers):
            if t.n != n:
                raise MismatchError("fibers of different dimensions", operation="from_fibers", n=n)
            if t.size == 0:
                raise FormatError(f"fiber {i} is empty", operation="from_fibers", n=n)
            mask = t.array
            if (colors[mask] >= 0).any():
                raise FormatError(f"fiber {i} overlaps an earlier fiber", operation="from_fibers", n=n)
            colors[mask] = i
        if (colors < 0).any():
            raise FormatError("fibers do not cover every vertex", operation="from_fibers", n=n)
        return cls(n, colors, relabel=False)

    @classmethod
    def from_dict(cls, payload: dict) -> "Coloring":
        """Read the JSON coloring format {"n": int, "k": int, "colors": [...]}."""
        try:
            n = int(payload["n"])
            colors = np.asarray(payload["colors"], dtype=np.int64)
        except (KeyError, TypeError, ValueError) as excpt:
            raise FormatError(f"malformed coloring document: {excpt}", operation="read_coloring") from excpt
        coloring = cls(n, colors)
        if "k" in payload and int(payload["k"]) != coloring.k:
            raise FormatError(f"document says k={payload['k']} but colors use {coloring.k}", operation="read_coloring", n=n)
        return coloring

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "colors": [int(c) for c in self.colors]}

    @property
    def size(self) -> int:
        return 1 << self.n

    def fiber(self, i: int) -> Fiber:
        if not 0 <= i < self.k:
            raise EquicubeError(f"color {i} out of range", operation="fiber", n=self.n, k=self.k)
        return self.fibers[i]

    @cached_property
    def fibers(self) -> tuple:
        return tuple(Fiber.from_array(self.n, self.colors == i) for i in range(self.k))

    @cached_property
    def counts(self) -> np.ndarray:
        counts = np.bincount(self.colors, minlength=self.k)
        counts.flags.writeable = False
        return counts

    def relabeled(self) -> "Coloring":
        """Same partition with first-occurrence labels."""
        return Coloring(self.n, self.colors)

    def same_partition(self, other: "Coloring") -> bool:
        return self.n == other.n and self.k == other.k and bool(np.array_equal(self.relabeled().colors, other.relabeled().colors))

    def key(self) -> bytes:
        return self.n.to_bytes(1, "little") + self.colors.astype(np.uint32).tobytes()

    def __eq__(self, other):
        if not isinstance(other, Coloring):
            return NotImplemented
        return self.n == other.n and self.k == other.k and bool(np.array_equal(self.colors, other.colors))

    def __hash__(self):
        return hash(self.key())

    def __getitem__(self, v: int) -> int:
        return int(self.colors[v])

    def __repr__(self):
        preview = "".join(str(int(c)) if c < 10 else "*" for c in self.colors[:32])
        suffix = "..." if self.size > 32 else ""
        return f"Coloring(n={self.n}, k={self.k}, colors={preview}{suffix})"


def linear_coloring(n: int, coords: Iterable[int]) -> Coloring:
    """Parity of the listed coordinates, a perfect 2-coloring with matrix (n-b, b; b, n-b)."""
    mask = 0
    for j in coords:
        if not 0 <= j < n:
            raise EquicubeError(f"coordinate {j} out of range", operation="linear_coloring", n=n)
        mask |= 1 << j
    idx = vertex_indices(n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        if mask >> j & 1:
            parity ^= (idx >> j) & 1
    return Coloring(n, parity)


@lru_cache(maxsize=None)
def odd_vertices(n: int) -> Fiber:
    return Fiber.from_array(n, vertex_weights(n) & 1)


@dataclass(frozen=True)
class SignedPermutation:
    """Automorphism of Q_n: v -> permute-bits(v ^ flips), bit j moving to position perm[j]."""

    n: int
    perm: tuple
    flips: int = 0

    def __post_init__(self):
        check_dimension(self.n)
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))
        if sorted(self.perm) != list(range(self.n)):
            raise EquicubeError(f"{self.perm} is not a permutation of range({self.n})", n=self.n)
        if not 0 <= self.flips < (1 << self.n):
            raise EquicubeError(f"flip mask {self.flips} out of range", n=self.n)

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(n, tuple(range(n)), 0)

    @classmethod
    def from_table(cls, n: int, table) -> "SignedPermutation":
        """Recover (perm, flips) from the vertex images of an automorphism."""
        table = np.asarray(table, dtype=np.int64)
        base = int(table[0])
        perm = []
        for j in range(n):
            moved = int(table[1 << j]) ^ base
            if moved.bit_count() != 1:
                raise EquicubeError("vertex table is not an automorphism of Q_n", n=n)
            perm.append(moved.bit_length() - 1)
        flips = 0
        for j, p in enumerate(perm):
            flips |= ((base >> p) & 1) << j
        result = cls(n, tuple(perm), flips)
        if not np.array_equal(result.table, table):
            raise EquicubeError("vertex table is not an automorphism of Q_n", n=n)
        return result

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "SignedPermutation":
        """The coordinate swap sigma_ij."""
        for c in (i, j):
            if not 0 <= c < n:
                raise EquicubeError(f"coordinate {c} out of range", operation="swap_args", n=n)
        perm = list(range(n))
        perm[i], perm[j] = perm[j], perm[i]
        return cls(n, tuple(perm), 0)

    @classmethod
    def inversion(cls, n: int, j: int) -> "SignedPermutation":
        """The coordinate inversion tau_j."""
        if not 0 <= j < n:
            raise EquicubeError(f"coordinate {j} out of range", operation="flip_arg", n=n)
        return cls(n, tuple(range(n)), 1 << j)

    def _permute_mask(self, mask: int) -> int:
        out = 0
        for j, p in enumerate(self.perm):
            out |= ((mask >> j) & 1) << p
        return out

    def _unpermute_mask(self, mask: int) -> int:
        out = 0
        for j, p in enumerate(self.perm):
            out |= ((mask >> p) & 1) << j
        return out

    def apply(self, v: int) -> int:
        return self._permute_mask(v ^ self.flips)

    @cached_property
    def table(self) -> np.ndarray:
        """Image of every vertex."""
        src = vertex_indices(self.n) ^ self.flips
        out = np.zeros(1 << self.n, dtype=np.int64)
        for j, p in enumerate(self.perm):
            out |= ((src >> j) & 1) << p
        out.flags.writeable = False
        return out

    def compose(self, other: "SignedPermutation") -> "SignedPermutation":
        """self after other: v -> self(other(v))."""
        if other.n != self.n:
            raise MismatchError("cannot compose automorphisms of different cubes", n=self.n)
        perm = tuple(self.perm[other.perm[j]] for j in range(self.n))
        flips = other.flips ^ other._unpermute_mask(self.flips)
        return SignedPermutation(self.n, perm, flips)

    def inverse(self) -> "SignedPermutation":
        perm = [0] * self.n
        for j, p in enumerate(self.perm):
            perm[p] = j
        return SignedPermutation(self.n, tuple(perm), self._permute_mask(self.flips))

    def is_identity(self) -> bool:
        return self.flips == 0 and self.perm == tuple(range(self.n))

    def to_dict(self) -> dict:
        return {"perm": list(self.perm), "flips": self.flips}


def group_order(n: int) -> int:
    return (1 << n) * factorial(n)


def all_signed_permutations(n: int) -> Iterator[SignedPermutation]:
    check_dimension(n)
    for perm in itertools.permutations(range(n)):
        for flips in range(1 << n):
            yield SignedPermutation(n, perm, flips)


@lru_cache(maxsize=4)
def automorphism_table(n: int) -> np.ndarray:
    """Vertex images of all of Aut(Q_n), one row per element (permutation-major, then flips)."""
    check_dimension(n)
    if n > MAX_TABLE_DIMENSION:
        raise CapExceededError("automorphism table too large", cap=MAX_TABLE_DIMENSION, value=n, operation="automorphism_table")
    idx = vertex_indices(n)
    dtype = np.min_scalar_type((1 << n) - 1)
    perms = list(itertools.permutations(range(n)))
    base = np.zeros((len(perms), 1 << n), dtype=np.int64)
    for row, perm in enumerate(perms):
        for j, p in enumerate(perm):
            base[row] |= ((idx >> j) & 1) << p
    xor_table = idx[None, :] ^ idx[:, None]
    table = base[:, xor_table].reshape(-1, 1 << n).astype(dtype)
    table.flags.writeable = False
    return table


def orbit(t: Fiber) -> list:
    """All images of t under Aut(Q_n), as fibers in increasing bit order."""
    rows = np.asarray(t.array)[automorphism_table(t.n)]
    packed = np.unique(np.packbits(rows, axis=1, bitorder="little"), axis=0)
    return sorted((Fiber(t.n, int.from_bytes(row.tobytes(), "little")) for row in packed), key=lambda f: f.bits)


@dataclass(frozen=True)
class ColoringEquivalence:
    """Witness g(x) = color_map[f(aut(x))]."""

    aut: SignedPermutation
    color_map: tuple

    def __post_init__(self):
        object.__setattr__(self, "color_map", tuple(int(c) for c in self.color_map))
        if sorted(self.color_map) != list(range(len(self.color_map))):
            raise EquicubeError(f"{self.color_map} is not a bijection", n=self.aut.n)

    @classmethod
    def identity(cls, n: int, k: int) -> "ColoringEquivalence":
        return cls(SignedPermutation.identity(n), tuple(range(k)))

    @property
    def k(self) -> int:
        return len(self.color_map)

    def inverse(self) -> "ColoringEquivalence":
        inverse_map = [0] * self.k
        for c, d in enumerate(self.color_map):
            inverse_map[d] = c
        return ColoringEquivalence(self.aut.inverse(), tuple(inverse_map))

    def compose(self, other: "ColoringEquivalence") -> "ColoringEquivalence":
        """Apply other first, then self."""
        # other: h = pi_o(f(a_o x)); self: g = pi_s(h(a_s x)) = pi_s(pi_o(f(a_o(a_s x))))
        color_map = tuple(self.color_map[c] for c in other.color_map)
        return ColoringEquivalence(other.aut.compose(self.aut), color_map)

    def to_dict(self) -> dict:
        return {"aut": self.aut.to_dict(), "color_map": list(self.color_map)}


def apply_aut(f: Coloring, e: ColoringEquivalence) -> Coloring:
    """The coloring g(x) = colorMap(f(aut(x))), labels kept as mapped."""
    if e.aut.n != f.n:
        raise MismatchError(f"automorphism of Q_{e.aut.n} applied to a coloring of Q_{f.n}", operation="apply_aut", n=f.n)
    if e.k != f.k:
        raise MismatchError(f"color map on {e.k} colors applied to a {f.k}-coloring", operation="apply_aut", n=f.n, k=f.k)
    color_map = np.asarray(e.color_map, dtype=np.int64)
    return Coloring(f.n, color_map[f.colors[e.aut.table]], relabel=False)


def apply_to_fiber(t: Fiber, aut: SignedPermutation) -> Fiber:
    """The fiber x -> t(aut(x))."""
    if aut.n != t.n:
        raise MismatchError("dimension mismatch", operation="apply_to_fiber", n=t.n)
    return Fiber.from_array(t.n, t.array[aut.table])


def antipodal_matching(f: Coloring) -> Optional[tuple]:
    """Color map m with f(complement of v) = m(f(v)) for a perfect coloring.

    Returns:
        tuple: m[i] for every color i; an involution whose matched colors have equal size

    Raises:
        NotPerfectError: f is not perfect
        InvariantViolation: no consistent matching exists
    """
    from equicube.spectral import quotient_matrix

    quotient_matrix(f)
    opposite = f.colors[vertex_indices(f.n) ^ ((1 << f.n) - 1)].astype(np.int64)
    matching = np.full(f.k, -1, dtype=np.int64)
    first = np.unique(f.colors, return_index=True)[1]
    matching[:] = opposite[first]
    if not np.array_equal(matching[f.colors.astype(np.int64)], opposite):
        raise InvariantViolation("complement colors are not determined by the vertex color", operation="antipodal_matching", n=f.n, k=f.k)
    if not np.array_equal(matching[matching], np.arange(f.k)):
        raise InvariantViolation("antipodal map on colors is not an involution", operation="antipodal_matching", n=f.n, k=f.k)
    if not np.array_equal(f.counts[matching], f.counts):
        raise InvariantViolation("matched colors have different sizes", operation="antipodal_matching", n=f.n, k=f.k)
    return tuple(int(c) for c in matching)
