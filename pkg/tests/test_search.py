"""
Unit tests for equicube/search
"""

import unittest
from pathlib import Path

import numpy as np
import pytest
from testfixtures import LogCapture, TempDirectory

from equicube.canonical import canonical_key
from equicube.constructions import eight_coloring_q6
from equicube.exceptions import CapExceededError, EquicubeError, MismatchError, NotPerfectError
from equicube.hypercube import Coloring, Fiber, linear_coloring
from equicube.io import read_fibers
from equicube.search import (
    ColoringSearch,
    MatrixConstraints,
    candidate_matrices,
    code_matrix,
    cycle_structure,
    enumerate_codes,
    enumerate_partitions,
    enumerate_perfect_colorings,
    hamming_codes,
    independent_splits,
    integer_partitions,
    is_multifold_code,
    run_search,
    splittability,
)
from equicube.spectral import QuotientMatrix, eigenvalues, is_perfect, quotient_matrix

DATA_DIR = Path(__file__).parent / "data"

THREE_FOLD_CYCLES = ["6^8", "12^4", "24^2", "24^2", "4^12", "4^2 10^4", "4^4 16^2", "4^2 10^4", "10^2 14^2"]


def class_count(n, rows):
    return len(enumerate_perfect_colorings(n, QuotientMatrix(rows)))


class CodeFixtureTest(unittest.TestCase):
    def test_two_fold_codes(self):
        for t in read_fibers(DATA_DIR / "q7-codes-2fold.txt", 7):
            assert t.size == 32
            assert is_multifold_code(t, 2)
            assert not is_multifold_code(t, 3)

    def test_three_fold_codes(self):
        codes = read_fibers(DATA_DIR / "q7-codes-3fold.txt", 7)
        assert all(is_multifold_code(t, 3) for t in codes)
        assert sorted(cycle_structure(t) for t in codes) == sorted(THREE_FOLD_CYCLES)

    def test_code_matrix(self):
        assert code_matrix(7, 2).to_list() == [[1, 6], [2, 5]]
        for t in read_fibers(DATA_DIR / "q7-codes-2fold.txt", 7):
            assert quotient_matrix(t.as_coloring()) == code_matrix(7, 2)
        with pytest.raises(EquicubeError):
            code_matrix(7, 8)

    def test_cycle_structure_needs_two_regular(self):
        assert cycle_structure(Fiber.full(3)) is None
        assert cycle_structure(Fiber.from_vertices(2, [0, 1, 2, 3])) == "4^1"


class SmallCodesTest(unittest.TestCase):
    def test_perfect_codes_of_q3(self):
        codes = hamming_codes(3)
        assert len(codes) == 4
        assert all(t.size == 2 for t in codes)
        result = enumerate_codes(3, 1)
        assert result.class_count == 1
        assert result.labeled_count == 4

    def test_no_perfect_codes(self):
        assert hamming_codes(4) == ()

    def test_trivial_multiplicity(self):
        result = enumerate_codes(3, 4)
        assert result.class_count == 1
        assert result.classes[0].representative == Fiber.full(3)

    def test_splittability(self):
        report = splittability(Fiber.from_vertices(3, [0, 3, 4, 7]), 2)
        assert report.contains_perfect_code
        assert report.splits
        assert len(report.parts) == 2
        with pytest.raises(EquicubeError):
            splittability(Fiber.from_vertices(3, [0, 1]), 2)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            enumerate_codes(8, 1)


class PerfectColoringSearchTest(unittest.TestCase):
    def test_matches_brute_force_on_small_cubes(self):
        for n in (3, 4):
            brute: dict = {}
            for bits in range(1, (1 << (1 << n)) - 1):
                f = Fiber(n, bits).as_coloring()
                if is_perfect(f):
                    brute.setdefault(quotient_matrix(f).canonical_key(), set()).add(canonical_key(f))
            for matrix in candidate_matrices(n, 2).matrices:
                found = {canonical_key(g) for g in enumerate_perfect_colorings(n, matrix)}
                assert found == brute.pop(matrix.canonical_key(), set())
            assert not brute

    def test_outputs_verify(self):
        matrix = QuotientMatrix([[2, 1, 2], [1, 2, 2], [1, 1, 3]])
        colorings = enumerate_perfect_colorings(5, matrix)
        assert len(colorings) == 2
        for f in colorings:
            assert quotient_matrix(f).equivalent(matrix)

    def test_q5_eigenvalues_five_and_one(self):
        assert class_count(5, [[2, 3], [1, 4]]) == 1
        assert class_count(5, [[3, 2], [2, 3]]) == 2
        assert class_count(5, [[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, 2]]) == 3

    def test_two_antipodal_four_cycles(self):
        (f,) = enumerate_perfect_colorings(5, QuotientMatrix([[2, 3], [1, 4]]))
        small = f.fiber(int(np.argmin(f.counts)))
        assert small.size == 8
        assert cycle_structure(small) == "4^2"

    def test_q6_bipartition(self):
        assert class_count(6, [[0, 6], [6, 0]]) == 1

    def test_infeasible_sizes(self):
        # densities 1/3 and 2/3 never give integral class sizes
        assert enumerate_perfect_colorings(3, QuotientMatrix([[1, 2], [1, 2]])) == []

    def test_constant(self):
        assert enumerate_perfect_colorings(4, QuotientMatrix([[4]])) == [Coloring.constant(4)]

    def test_errors(self):
        with pytest.raises(CapExceededError):
            enumerate_perfect_colorings(10, QuotientMatrix([[0, 10], [10, 0]]))
        with pytest.raises(MismatchError):
            ColoringSearch(4, QuotientMatrix([[0, 3], [3, 0]]))

    def test_node_count_sums_branches(self):
        search = ColoringSearch(5, QuotientMatrix([[3, 2], [2, 3]]))
        with LogCapture() as log:
            run_search(search, search.symmetry_broken_domains())
        progress = [r.getMessage() for r in log.records if "branches done" in r.getMessage()]
        assert progress
        assert progress[-1].endswith(f", {search.nodes} nodes")

    def test_checkpoint_resume(self):
        matrix = QuotientMatrix([[3, 2], [2, 3]])
        with TempDirectory() as tmp:
            filepath = Path(tmp.path) / "search.json"
            first = enumerate_perfect_colorings(5, matrix, checkpoint=filepath)
            assert filepath.exists()
            assert enumerate_perfect_colorings(5, matrix, checkpoint=filepath) == first


class CandidateMatricesTest(unittest.TestCase):
    def test_repeated_eigenvalues(self):
        # four translates of the repetition code, eigenvalue -1 three times
        result = candidate_matrices(3, 4, MatrixConstraints(eigenvalues=frozenset({3, -1})))
        target = QuotientMatrix([[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]])
        assert any(m.equivalent(target) for m in result.matrices)

    def test_eigenvalues_five_and_one(self):
        result = candidate_matrices(5, 2, MatrixConstraints(eigenvalues=frozenset({5, 1})))
        assert sorted(m.to_list() for m in result.matrices) == [[[2, 3], [1, 4]], [[3, 2], [2, 3]]]

    def test_code_matrices_of_q7(self):
        result = candidate_matrices(7, 2, MatrixConstraints(min_eigenvalue=-1))
        for mu in range(1, 8):
            assert any(m.equivalent(code_matrix(7, mu)) for m in result.matrices)

    def test_q9_three_colors(self):
        result = candidate_matrices(9, 3, MatrixConstraints(max_nonmain_eigenvalue=-3))
        assert any(m.equivalent(QuotientMatrix([[0, 3, 6], [3, 0, 6], [3, 3, 3]])) for m in result.matrices)
        for m in result.matrices:
            assert max(eigenvalues(m, 9)[1:]) <= -3

    def test_every_candidate_is_admissible(self):
        result = candidate_matrices(4, 3)
        assert result.matrices
        for m in result.matrices:
            assert m.n == 4
        keys = [m.canonical_key() for m in result.matrices]
        assert len(keys) == len(set(keys))
        assert result.to_dict()["k"] == 3

    def test_single_color(self):
        assert [m.to_list() for m in candidate_matrices(3, 1).matrices] == [[[3]]]


class IndependentSplitsTest(unittest.TestCase):
    def test_split_a_square(self):
        (g,) = independent_splits(Coloring.constant(2), 0)
        assert g.k == 2
        assert quotient_matrix(g).to_list() == [[0, 2], [2, 0]]
        assert len(independent_splits(Coloring.constant(2), 0, antipodal=True)) == 1

    def test_no_perfect_split(self):
        assert independent_splits(linear_coloring(3, [0, 1, 2]), 0) == []

    def test_errors(self):
        with pytest.raises(NotPerfectError):
            independent_splits(Coloring(2, [0, 0, 0, 1]), 0)
        with pytest.raises(EquicubeError):
            independent_splits(Coloring.constant(2), 1)


class PartitionTest(unittest.TestCase):
    def test_small_spectra(self):
        assert enumerate_partitions((4,), 3).row() == "(4):1:1"
        assert enumerate_partitions((1, 3), 3).row() == "(3,1):1:4"
        assert enumerate_partitions((1, 1, 1, 1), 3).row() == "(1,1,1,1):1:1"

    def test_bad_spectrum(self):
        with pytest.raises(EquicubeError):
            enumerate_partitions((4, 3), 7)
        with pytest.raises(EquicubeError):
            enumerate_partitions((8, 0), 7)

    def test_integer_partitions(self):
        assert integer_partitions(4) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
        assert len(integer_partitions(8)) == 22


@pytest.mark.long
class LongSearchTest(unittest.TestCase):
    def test_q7_codes(self):
        assert len(hamming_codes(7)) == 240
        single = enumerate_codes(7, 1)
        assert (single.class_count, single.labeled_count) == (1, 240)
        double = enumerate_codes(7, 2)
        assert sorted(c.stabilizer_order for c in double.classes) == [96, 128, 1536]
        triple = enumerate_codes(7, 3)
        assert sorted(c.cycle_structure for c in triple.classes) == sorted(THREE_FOLD_CYCLES)
        assert sum(1 for c in triple.classes if c.splits) == 4

    def test_partition_rows(self):
        assert enumerate_partitions((7, 1)).row() == "(7,1):1:240"
        assert enumerate_partitions((6, 2)).row() == "(6,2):3:12180"
        assert enumerate_partitions((5, 3)).row() == "(5,3):9:322896"
        assert enumerate_partitions((1,) * 8).row() == "(1,1,1,1,1,1,1,1):11:27360"

    def test_q6_spot_rows(self):
        assert class_count(6, [[3, 3], [3, 3]]) == 9

    def test_q6_table(self):
        assert class_count(6, [[0, 6], [2, 4]]) == 1
        assert class_count(6, [[2, 4], [4, 2]]) == 2
        assert class_count(6, [[1, 5], [5, 1]]) == 1
        assert class_count(6, [[1, 5], [3, 3]]) == 1
        assert class_count(6, [[0, 2, 4], [2, 0, 4], [2, 2, 2]]) == 2
        assert class_count(6, [[0, 3, 3], [2, 1, 3], [2, 3, 1]]) == 1
        assert class_count(6, [[0, 2, 2, 2], [2, 0, 2, 2], [2, 2, 0, 2], [2, 2, 2, 0]]) == 2
        assert class_count(6, [[0, 0, 3, 3], [0, 0, 3, 3], [3, 3, 0, 0], [3, 3, 0, 0]]) == 9
        assert class_count(6, [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]) == 2
        assert class_count(6, quotient_matrix(eight_coloring_q6()).to_list()) == 7

    def test_q7_three_eigenvalue_matrices(self):
        assert class_count(7, [[0, 1, 6], [1, 0, 6], [3, 3, 1]]) == 2
        assert class_count(7, [[0, 3, 4], [3, 0, 4], [2, 2, 3]]) == 2

    def test_q8(self):
        assert class_count(8, [[0, 2, 6], [2, 0, 6], [3, 3, 2]]) == 3

    def test_q9(self):
        assert class_count(9, [[0, 9], [3, 6]]) == 2
        assert class_count(9, [[0, 3, 6], [3, 0, 6], [3, 3, 3]]) == 11
        assert class_count(9, [[0, 3, 3, 3], [3, 0, 3, 3], [3, 3, 0, 3], [3, 3, 3, 0]]) == 10
