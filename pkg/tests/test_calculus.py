"""Tests for integration, gradients and the mu-Laplacian."""

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from calculus import (
    as_node_function, gradient_energy, gradient_inner, gradient_p_norm, gradient_p_norm_at,
    ibp_residual, integrate, laplacian_apply, laplacian_power, self_adjointness_residual,
)
from graph_core import build_graph
from graph_errors import DimensionMismatch, IndexOutOfRange, InvalidP, NonFiniteValues
from graph_factories import random_graph

F_P2 = [[0.0], [1.0]]
X_K22 = [[1.0], [1.0], [0.0], [0.0]]


def _scale(g, f, h):
    return abs(gradient_inner(g, f, h)) + 1.0


class TestNodeFunction:

    def test_vector_becomes_column(self):
        assert as_node_function([1.0, 2.0, 3.0], 3).shape == (3, 1)

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            as_node_function([1.0, 2.0], 3)

    @pytest.mark.parametrize("bad", [float("inf"), float("nan")])
    def test_non_finite(self, bad):
        with pytest.raises(NonFiniteValues):
            as_node_function([1.0, bad], 2)

    def test_zero_columns(self):
        with pytest.raises(DimensionMismatch):
            as_node_function(np.zeros((3, 0)), 3)


class TestIntegrate:

    def test_path(self, p2):
        np.testing.assert_array_equal(integrate(p2, F_P2), [1.0])

    def test_k22(self, k22):
        np.testing.assert_array_equal(integrate(k22, X_K22), [4.0])

    def test_zero(self, connected_graph):
        np.testing.assert_array_equal(integrate(connected_graph, np.zeros((20, 3))), np.zeros(3))


class TestGradientInner:

    def test_path(self, p2):
        assert gradient_inner(p2, F_P2, F_P2) == 1.0

    def test_k22(self, k22):
        assert gradient_inner(k22, X_K22, X_K22) == 4.0

    def test_constant(self, connected_graph):
        assert gradient_energy(connected_graph, np.full((20, 2), 3.7)) == 0.0

    def test_shape_mismatch(self, p2):
        with pytest.raises(DimensionMismatch):
            gradient_inner(p2, np.zeros((2, 1)), np.zeros((2, 2)))

    def test_symmetric_and_nonnegative(self, connected_graph, rng):
        f, h = rng.normal(size=(2, 20, 3))
        assert gradient_inner(connected_graph, f, h) == pytest.approx(gradient_inner(connected_graph, h, f))
        assert gradient_energy(connected_graph, f) >= 0

    def test_zero_only_for_componentwise_constants(self, disconnected_graph):
        f = np.array([[1.0], [1.0], [1.0], [-2.0], [-2.0], [-2.0]])
        assert gradient_energy(disconnected_graph, f) == 0.0
        f[0, 0] = 1.5
        assert gradient_energy(disconnected_graph, f) > 0.0


class TestGradientPNorm:

    def test_path(self, p2):
        assert gradient_p_norm_at(p2, F_P2, 0, 2) == pytest.approx(math.sqrt(0.5))

    def test_star_center(self):
        g = build_graph(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], [1.0, 1.0, 1.0, 1.0])
        f = [[0.0], [1.0], [1.0], [1.0]]
        assert gradient_p_norm_at(g, f, 0, 2) == pytest.approx(math.sqrt(1.5))

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_constant(self, connected_graph, p):
        f = np.full((20, 2), -1.25)
        assert gradient_p_norm_at(connected_graph, f, 3, p) == 0.0
        np.testing.assert_array_equal(gradient_p_norm(connected_graph, f, p), np.zeros(20))

    def test_invalid_p(self, p2):
        with pytest.raises(InvalidP):
            gradient_p_norm_at(p2, F_P2, 0, 0.5)
        with pytest.raises(InvalidP):
            gradient_p_norm(p2, F_P2, float("nan"))

    @pytest.mark.parametrize("p", [math.inf, -math.inf])
    def test_infinite_p(self, p2, p):
        with pytest.raises(InvalidP):
            gradient_p_norm_at(p2, np.ones((2, 1)), 0, p)
        with pytest.raises(InvalidP):
            gradient_p_norm(p2, F_P2, p)

    def test_node_out_of_range(self, p2):
        with pytest.raises(IndexOutOfRange):
            gradient_p_norm_at(p2, F_P2, 2)

    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_vectorised_matches_pointwise(self, connected_graph, rng, p):
        f = rng.normal(size=(20, 3))
        expected = [gradient_p_norm_at(connected_graph, f, i, p) for i in range(20)]
        np.testing.assert_allclose(gradient_p_norm(connected_graph, f, p), expected, rtol=1e-12)

    def test_energy_is_weighted_sum_of_squared_norms(self, connected_graph, rng):
        f = rng.normal(size=(20, 3))
        norms = gradient_p_norm(connected_graph, f, 2)
        assert gradient_energy(connected_graph, f) == pytest.approx(float(np.sum(connected_graph.mu * norms ** 2)))


class TestLaplacian:

    def test_path(self, p2):
        np.testing.assert_array_equal(laplacian_apply(p2, F_P2), [[1.0], [-1.0]])

    def test_triangle(self, k3):
        np.testing.assert_array_equal(laplacian_apply(k3, [[1.0], [0.0], [0.0]]), [[-1.0], [0.5], [0.5]])

    def test_constant_exactly_zero(self, connected_graph):
        f = np.full((20, 3), math.pi)
        np.testing.assert_array_equal(laplacian_apply(connected_graph, f), np.zeros((20, 3)))

    def test_isolated_node(self):
        g = build_graph(3, [(0, 1, 1.0)], [1.0, 1.0, 1.0])
        np.testing.assert_array_equal(laplacian_apply(g, [[0.0], [1.0], [5.0]]), [[1.0], [-1.0], [0.0]])

    def test_linear(self, connected_graph, rng):
        f, h = rng.normal(size=(2, 20, 2))
        lhs = laplacian_apply(connected_graph, 2.0 * f - 3.0 * h)
        rhs = 2.0 * laplacian_apply(connected_graph, f) - 3.0 * laplacian_apply(connected_graph, h)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_columns_independent(self, connected_graph, rng):
        f = rng.normal(size=(20, 3))
        full = laplacian_apply(connected_graph, f)
        for c in range(3):
            np.testing.assert_allclose(full[:, [c]], laplacian_apply(connected_graph, f[:, c]), rtol=1e-15, atol=1e-15)

    def test_power(self, p2):
        np.testing.assert_array_equal(laplacian_power(p2, F_P2, 0), F_P2)
        np.testing.assert_array_equal(laplacian_power(p2, F_P2, 2), [[-2.0], [2.0]])


class TestIntegrationByParts:

    def test_constant_exact(self, connected_graph):
        f = np.ones((20, 1))
        assert ibp_residual(connected_graph, f, f) == 0.0

    def test_n50_d3(self, rng):
        g = random_graph(11, 50)
        f, h = rng.normal(size=(2, 50, 3))
        assert ibp_residual(g, f, h) <= 1e-10 * _scale(g, f, h)

    @seed(20240601)
    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 60), d=st.integers(1, 4))
    def test_random_graphs(self, seed, n, d):
        g = random_graph(seed, n)
        rng = np.random.default_rng(seed)
        f, h = rng.normal(size=(2, n, d))
        scale = _scale(g, f, h) * max(1.0, g.m_max)
        assert ibp_residual(g, f, h) <= 1e-10 * scale
        assert self_adjointness_residual(g, f, h) <= 1e-10 * scale

    @settings(max_examples=25, deadline=None)
    @given(values=arrays(np.float64, (8, 2), elements=st.floats(-1e3, 1e3)))
    def test_bounded_inputs(self, values):
        g = random_graph(3, 8)
        h = np.arange(16, dtype=float).reshape(8, 2)
        scale = np.abs(values).max() * np.abs(h).max() * g.weights.sum() + 1.0
        assert ibp_residual(g, values, h) <= 1e-10 * scale
