"""
Unit tests for equicube/refinement
"""

import unittest

import numpy as np
import pytest

from equicube.exceptions import MismatchError
from equicube.hypercube import Coloring, Fiber, linear_coloring, vertex_weights
from equicube.refinement import coarsest_equitable_refinement, is_refinement_of
from equicube.spectral import is_perfect, quotient_matrix


class RefinementTest(unittest.TestCase):
    def test_single_vertex_gives_distance_coloring(self):
        f = Fiber.from_vertices(3, [0]).as_coloring()
        refined, trace = coarsest_equitable_refinement(f, trace=True)
        assert refined == Coloring(3, vertex_weights(3))
        assert trace.rounds == [(0, 2, 3), (1, 3, 4), (2, 4, 4)]
        assert trace.to_dict()["final_k"] == 4

    def test_perfect_input_is_fixed(self):
        for f in (linear_coloring(4, [0, 1]), Coloring(4, vertex_weights(4)), Coloring.constant(4)):
            refined, trace = coarsest_equitable_refinement(f, trace=True)
            assert refined == f
            assert len(trace.rounds) == 1

    def test_random_colorings(self):
        rng = np.random.default_rng(5)
        for n in range(2, 8):
            for _ in range(10):
                f = Coloring(n, rng.integers(0, 3, size=1 << n))
                refined = coarsest_equitable_refinement(f)
                assert is_perfect(refined)
                assert is_refinement_of(refined, f)
                assert coarsest_equitable_refinement(refined) == refined

    def test_coarsest(self):
        # x0 halves with vertex 0 singled out: distance from 0 crossed with x0
        colors = linear_coloring(3, [0]).colors.copy()
        colors[0] = 2
        refined = coarsest_equitable_refinement(Coloring(3, colors))
        assert refined.k == 6
        assert is_refinement_of(refined, Coloring(3, vertex_weights(3)))
        assert is_refinement_of(refined, linear_coloring(3, [0]))

    def test_is_refinement_of(self):
        distance = Coloring(3, vertex_weights(3))
        assert is_refinement_of(distance, linear_coloring(3, [0, 1, 2]))
        assert not is_refinement_of(linear_coloring(3, [0, 1, 2]), distance)
        with pytest.raises(MismatchError):
            is_refinement_of(distance, Coloring.constant(2))
