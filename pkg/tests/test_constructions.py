"""
Unit tests for equicube/constructions
"""

import unittest

import numpy as np
import pytest

from equicube.canonical import are_equivalent, canonical_key
from equicube.constructions import (
    Q9_VARIANTS,
    ConstructionSpec,
    constr0,
    constr1,
    constr1_spec,
    constr3,
    constr3_spec,
    construction_catalog,
    coordinate_coloring,
    degree_two_colorings,
    distance_coloring,
    eight_coloring_q6,
    g_ij,
    g_of,
    q9_colorings,
    q9_quasigroup,
    q9_star_equation,
    reconstruct_fab,
    verify_construction,
)
from equicube.exceptions import EquicubeError
from equicube.hypercube import Coloring, linear_coloring
from equicube.search import enumerate_perfect_colorings
from equicube.spectral import QuotientMatrix, degree, eigenvalues, essential_arguments, merge_groups, quotient_matrix


class SimpleConstructionsTest(unittest.TestCase):
    def test_distance_colorings(self):
        assert quotient_matrix(distance_coloring(2)).to_list() == [[0, 2, 0], [1, 0, 1], [0, 2, 0]]
        assert quotient_matrix(distance_coloring(3)).to_list() == [[0, 3, 0, 0], [1, 0, 2, 0], [0, 2, 0, 1], [0, 0, 3, 0]]

    def test_coordinate_coloring(self):
        f = coordinate_coloring(5)
        assert quotient_matrix(f).to_list() == [[4, 1], [1, 4]]
        assert degree(f) == 1
        with pytest.raises(EquicubeError):
            coordinate_coloring(0)

    def test_constr0(self):
        g = constr0(Coloring.constant(3))
        assert quotient_matrix(g).to_list() == [[3, 1], [1, 3]]
        g = constr0(linear_coloring(2, [0, 1]))
        assert g.k == 4
        assert sorted(eigenvalues(quotient_matrix(g), 3)) == [-3, -1, 1, 3]

    def test_verify_construction(self):
        spec = ConstructionSpec("pair", matrix=QuotientMatrix([[2, 1], [1, 2]]), eigenvalues=(3, 1))
        assert verify_construction(linear_coloring(3, [2]), spec).to_list() == [[2, 1], [1, 2]]
        with pytest.raises(EquicubeError):
            verify_construction(linear_coloring(3, [0, 1]), spec)
        assert spec.to_dict()["eigenvalues"] == [3, 1]


class Constr1Test(unittest.TestCase):
    def test_quadrants_of_q2(self):
        f = constr1(Coloring.constant(0), Coloring.constant(0), 0, 0)
        assert f.k == 4
        matrix = verify_construction(f, constr1_spec(2, 0, 0))
        assert sorted(eigenvalues(matrix, 2)) == [-2, 0, 0, 2]

    def test_one_and_zero_on_q5(self):
        f = constr1(linear_coloring(3, [0]), Coloring.constant(3), 1, 0)
        matrix = verify_construction(f, constr1_spec(5, 1, 0))
        assert matrix.equivalent(QuotientMatrix([[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 3, 0], [1, 1, 0, 3]]))
        assert sorted(eigenvalues(matrix, 5)) == [1, 1, 3, 5]

    def test_bad_bases(self):
        with pytest.raises(EquicubeError):
            constr1(linear_coloring(3, [0]), Coloring.constant(3), 0, 0)
        with pytest.raises(EquicubeError):
            constr1(linear_coloring(3, [0]), Coloring.constant(2), 1, 0)
        with pytest.raises(EquicubeError):
            constr1(linear_coloring(3, [0]), Coloring.constant(3), 2, 0)


class TwinColoringsTest(unittest.TestCase):
    def test_fab_family(self):
        family = reconstruct_fab()
        assert sorted(family) == [(0, 0), (0, 1), (1, 0), (1, 1)]
        f00, f11 = family[(0, 0)].colors, family[(1, 1)].colors
        assert np.array_equal(f00 == 2, f11 == 2)
        assert np.array_equal(f00 == 0, f11 == 1)

    def test_g(self):
        assert quotient_matrix(g_of(4)) == QuotientMatrix([[1, 1, 2], [1, 1, 2], [1, 1, 2]])
        assert quotient_matrix(g_of(6)) == QuotientMatrix([[3, 1, 2], [1, 3, 2], [1, 1, 4]])
        merged = merge_groups(g_of(5), [[0, 1], [2]])
        assert quotient_matrix(merged).equivalent(QuotientMatrix([[3, 2], [2, 3]]))

    def test_g_ij(self):
        assert quotient_matrix(g_ij(6, 4, 5)) == QuotientMatrix([[2, 2, 2], [2, 2, 2], [1, 1, 4]])
        assert len(essential_arguments(g_ij(6, 4, 5))) == 6
        with pytest.raises(EquicubeError):
            g_ij(6, 3, 5)
        with pytest.raises(EquicubeError):
            g_of(3)


class Constr3Test(unittest.TestCase):
    def test_spectra(self):
        for b, c, n in ((1, 1, 4), (1, 2, 5), (2, 1, 5), (2, 2, 6)):
            f = constr3(b, c, n)
            verify_construction(f, constr3_spec(n, b, c))
            assert len(essential_arguments(f)) <= n

    def test_one_one_on_q4(self):
        assert sorted(eigenvalues(quotient_matrix(constr3(1, 1, 4)), 4)) == [0, 0, 0, 4]

    def test_parameters(self):
        with pytest.raises(EquicubeError):
            constr3(3, 1, 6)
        with pytest.raises(EquicubeError):
            constr3(2, 2, 4)


class EightColoringTest(unittest.TestCase):
    def test_matrix(self):
        matrix = quotient_matrix(eight_coloring_q6())
        assert matrix.k == 8
        # zero 2x2 blocks on the diagonal, ones elsewhere
        assert matrix.to_list() == [[0 if i // 2 == j // 2 else 1 for j in range(8)] for i in range(8)]
        assert set(eigenvalues(matrix, 6)) == {6, 0, -2}


class Q9Test(unittest.TestCase):
    def test_star_equations(self):
        target = QuotientMatrix([[0, 9], [3, 6]])
        for group in ("z2z2", "z4"):
            assert quotient_matrix(q9_star_equation(group)).equivalent(target)
        with pytest.raises(EquicubeError):
            q9_star_equation("z3")

    def test_quasigroup(self):
        matrix = quotient_matrix(q9_quasigroup())
        assert matrix.equivalent(QuotientMatrix([[0, 3, 3, 3], [3, 0, 3, 3], [3, 3, 0, 3], [3, 3, 3, 0]]))

    def test_variants(self):
        assert "quasigroup" in Q9_VARIANTS
        with pytest.raises(EquicubeError):
            q9_colorings("g-based")
        with pytest.raises(EquicubeError):
            q9_colorings("g-based", linear_coloring(6, [0]))
        with pytest.raises(EquicubeError):
            q9_colorings("octonions")

    def test_g_based(self):
        base = linear_coloring(6, [0, 1, 2])
        assert quotient_matrix(base) == QuotientMatrix([[3, 3], [3, 3]])
        f = q9_colorings("g-based", base)
        assert (f.n, f.k) == (9, 4)
        assert quotient_matrix(f).equivalent(QuotientMatrix([[0, 3, 3, 3], [3, 0, 3, 3], [3, 3, 0, 3], [3, 3, 3, 0]]))
        assert eigenvalues(quotient_matrix(f), 9) == (9, -3, -3, -3)

    @pytest.mark.long
    def test_g_based_from_every_base_class(self):
        bases = enumerate_perfect_colorings(6, QuotientMatrix([[3, 3], [3, 3]]))
        assert len(bases) == 9
        keys = {canonical_key(q9_colorings("g-based", g)) for g in bases}
        assert len(keys) == 9

    @pytest.mark.long
    def test_star_equations_are_inequivalent(self):
        equivalent, _ = are_equivalent(q9_star_equation("z2z2"), q9_star_equation("z4"))
        assert not equivalent


class CatalogTest(unittest.TestCase):
    def test_q2(self):
        catalog = construction_catalog(2)
        assert sorted(f.k for f in catalog) == [3, 4]

    def test_degree_two_colorings(self):
        colorings = degree_two_colorings()
        assert len(colorings) == 3
        for f in colorings:
            assert degree(f) == 2
            assert len(essential_arguments(f)) == 4
            assert quotient_matrix(f).k == 2
