"""Tests for the untrained GCN / GAT forward passes and the decay fit."""

import math

import numpy as np
import pytest

from dynamics import random_walk_matrix, sym_propagate, sym_trajectory, walk_trajectory
from energy import energy_m
from gnn_sim import (
    OversmoothReport, attention_matrix, forward, gat_scores, init_stack, layer_graph, measured_features,
    measurement_graph, oversmooth_report,
)
from graph_core import preset_graph
from graph_errors import AllZeroEnergies, DimensionMismatch, InsufficientData, InvalidDims
from graph_factories import K3, random_topology, topology_of


def _energies(values):
    return {depth: {1: float(e)} for depth, e in enumerate(values)}


@pytest.fixture
def topology50():
    return topology_of(random_topology(np.random.default_rng(2024), 50, "nonbipartite"))


class TestInitStack:

    def test_deterministic(self):
        a = init_stack("gat", 4, [8] * 5, seed=3)
        b = init_stack("gat", 4, [8] * 5, seed=3)
        for wa, wb in zip(a.weights + a.attention, b.weights + b.attention):
            np.testing.assert_array_equal(wa, wb)

    def test_seed_changes_weights(self):
        a = init_stack("gcn", 2, [4, 4, 4], seed=0)
        b = init_stack("gcn", 2, [4, 4, 4], seed=1)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_deep_stack(self):
        stack = init_stack("gcn", 256, [16] * 257)
        assert stack.depth == 256
        assert all(W.shape == (16, 16) for W in stack.weights)
        assert stack.attention == ()

    def test_glorot_range(self):
        stack = init_stack("gcn", 1, [10, 6], seed=9)
        assert np.abs(stack.weights[0]).max() <= math.sqrt(6.0 / 16)

    def test_gat_attention_vectors(self):
        stack = init_stack("gat", 2, [5, 3, 2])
        assert [a.shape for a in stack.attention] == [(6,), (4,)]

    @pytest.mark.parametrize("depth,dims", [(2, [4, 4]), (0, [4]), (1, [4, 0])])
    def test_invalid_dims(self, depth, dims):
        with pytest.raises(InvalidDims):
            init_stack("gcn", depth, dims)

    def test_identity_init_needs_equal_widths(self):
        with pytest.raises(InvalidDims):
            init_stack("gcn", 1, [4, 3], weight_init="identity")

    @pytest.mark.parametrize("kwargs", [{"arch": "sage"}, {"activation": "tanh"}, {"weight_init": "he"}])
    def test_unknown_choices(self, kwargs):
        args = {"arch": "gcn", "depth": 1, "dims": [2, 2], **kwargs}
        with pytest.raises(ValueError):
            init_stack(**args)


class TestForward:

    def test_linear_gcn_is_repeated_propagation(self, topology50):
        stack = init_stack("gcn", 32, [3] * 33, activation="identity", weight_init="identity")
        X0 = np.random.default_rng(0).normal(size=(50, 3))
        X, report = forward(topology50, stack, X0)
        expected, _ = sym_propagate(measurement_graph(topology50), X0, 32, certify=False)
        np.testing.assert_allclose(X, expected, atol=1e-12)
        assert sorted(report.energies_by_depth) == list(range(33))

    def test_linear_gcn_matches_propagation_layer_by_layer(self, topology50):
        g = measurement_graph(topology50)
        stack = init_stack("gcn", 32, [3] * 33, activation="identity", weight_init="identity")
        X0 = np.random.default_rng(1).normal(size=(50, 3))
        snapshots = []
        _, report = forward(topology50, stack, X0, snapshots=snapshots)
        trajectory = sym_trajectory(g, X0, 32, snapshots=True)
        scale = np.sqrt(g.mu)[:, None]
        for depth, (snapshot, sample) in enumerate(zip(snapshots, trajectory.samples), start=1):
            np.testing.assert_allclose(scale * snapshot, sample.snapshot, atol=1e-12)
            for m in (0, 1, 2):
                assert report.energies_by_depth[depth][m] == pytest.approx(sample.energies[m], rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("arch", ["gcn", "gat"])
    def test_report_recomputed_from_snapshots(self, topology50, arch):
        g = measurement_graph(topology50)
        stack = init_stack(arch, 3, [4] * 4, seed=2)
        X0 = np.random.default_rng(2).normal(size=(50, 4))
        snapshots = []
        _, report = forward(topology50, stack, X0, snapshots=snapshots)
        measured = [measured_features(arch, g, X0)] + snapshots
        for depth, Y in enumerate(measured):
            for m in report.orders:
                assert report.energies_by_depth[depth][m] == pytest.approx(energy_m(g, Y, m), rel=1e-12)

    def test_constant_input_stays_flat_under_gat(self, topology50):
        stack = init_stack("gat", 6, [4] * 7, seed=1)
        X, report = forward(topology50, stack, np.ones((50, 4)))
        assert all(energies[1] == pytest.approx(0.0, abs=1e-20) for energies in report.energies_by_depth.values())

    def test_degree_scaled_input_stays_flat_under_gcn(self, topology50):
        g = measurement_graph(topology50)
        stack = init_stack("gcn", 6, [4] * 7, seed=1, activation="identity")
        X0 = np.sqrt(g.mu)[:, None] * np.array([[1.0, -2.0, 0.5, 3.0]])
        _, report = forward(topology50, stack, X0)
        assert all(energies[1] == pytest.approx(0.0, abs=1e-20) for energies in report.energies_by_depth.values())

    def test_constant_rows_are_not_flat_under_gcn(self, topology50):
        stack = init_stack("gcn", 2, [4] * 3, seed=1, activation="identity")
        _, report = forward(topology50, stack, np.ones((50, 4)))
        assert report.energies_by_depth[0][1] > 0.0

    def test_large_features_aggregate(self, topology50, caplog):
        stack = init_stack("gat", 4, [16] * 5, seed=0)
        X0 = 1e4 * np.random.default_rng(0).normal(size=(50, 16))
        snapshots = []
        X, report = forward(topology50, stack, X0, snapshots=snapshots)
        assert np.all(np.isfinite(X))
        assert sorted(report.energies_by_depth) == list(range(5))
        P = attention_matrix(topology50, stack, 0, X0)
        np.testing.assert_allclose(P.sum(axis=1), np.ones(50), atol=1e-12)
        assert layer_graph(topology50, stack, 0, X0) is None
        assert "not representable" in caplog.text

    def test_all_zero_energies_leave_fit_empty(self, topology50, caplog):
        stack = init_stack("gat", 6, [4] * 7, seed=1)
        _, report = forward(topology50, stack, np.zeros((50, 4)))
        assert report.log_slope is None
        assert report.c1 is None
        assert "No decay fit" in caplog.text

    def test_input_width_checked(self, topology50):
        with pytest.raises(DimensionMismatch):
            forward(topology50, init_stack("gcn", 2, [4, 4, 4]), np.ones((50, 3)))

    def test_order_one_always_recorded(self, topology50):
        stack = init_stack("gcn", 2, [2, 2, 2])
        _, report = forward(topology50, stack, np.eye(50)[:, :2], record_orders=(0,))
        assert report.orders == [0, 1]

    def test_snapshots(self, topology50):
        stack = init_stack("gat", 3, [2, 2, 2, 2])
        snapshots = []
        X, _ = forward(topology50, stack, np.eye(50)[:, :2], snapshots=snapshots)
        assert len(snapshots) == 3
        np.testing.assert_array_equal(snapshots[-1], X)

    def test_same_seed_same_report(self, topology50):
        X0 = np.random.default_rng(5).normal(size=(50, 4))
        reports = [forward(topology50, init_stack("gat", 5, [4] * 6, seed=7), X0)[1] for _ in range(2)]
        assert reports[0].energies_by_depth == reports[1].energies_by_depth
        assert reports[0].log_slope == reports[1].log_slope

    @pytest.mark.parametrize("seed", range(5))
    def test_deep_gcn_collapses(self, topology50, seed):
        stack = init_stack("gcn", 256, [16] * 257, seed=seed, activation="relu")
        X0 = np.random.default_rng(seed).normal(size=(50, 16))
        _, report = forward(topology50, stack, X0)
        energies = report.energies_by_depth
        assert energies[256][1] < 1e-10 * energies[0][1]
        assert report.log_slope < 0
        assert report.theoretical_rate is not None and report.theoretical_rate < 1.0


class TestAttention:

    def test_scores_symmetric(self, rng):
        e = gat_scores(rng.normal(size=(7, 3)), rng.normal(size=6))
        np.testing.assert_array_equal(e, e.T)

    def test_aggregation_rows_sum_to_one(self, topology50):
        stack = init_stack("gat", 1, [3, 3], seed=4)
        X = np.random.default_rng(4).normal(size=(50, 3))
        P = attention_matrix(topology50, stack, 0, X)
        np.testing.assert_allclose(P.sum(axis=1), np.ones(50), atol=1e-12)
        mask = topology50.adjacency_mask() | np.eye(50, dtype=bool)
        assert np.all(P[~mask] == 0.0)
        assert np.all(np.diag(P) > 0.0)

    def test_softmax_matches_attention_graph_walk(self, topology50):
        stack = init_stack("gat", 1, [3, 3], seed=4)
        X = np.random.default_rng(4).normal(size=(50, 3))
        walk = random_walk_matrix(layer_graph(topology50, stack, 0, X))
        np.testing.assert_allclose(attention_matrix(topology50, stack, 0, X), walk, atol=1e-12)

    def test_every_layer_in_a_pass_is_valid(self, topology50):
        stack = init_stack("gat", 5, [4] * 6, seed=8)
        X0 = np.random.default_rng(8).normal(size=(50, 4))
        snapshots = []
        forward(topology50, stack, X0, snapshots=snapshots)
        for layer, X in enumerate([X0] + snapshots[:-1]):
            P = attention_matrix(topology50, stack, layer, X)
            np.testing.assert_allclose(P.sum(axis=1), np.ones(50), atol=1e-12)
            assert np.all(np.diag(P) > 0.0)

    def test_gcn_has_no_layer_graph(self, topology50):
        with pytest.raises(ValueError):
            layer_graph(topology50, init_stack("gcn", 1, [2, 2]), 0, np.ones((50, 2)))


class TestOversmoothReport:

    def test_geometric_sequence(self):
        report = oversmooth_report(_energies(5.0 * 0.5 ** np.arange(10)), tail_fraction=1.0)
        assert report.log_slope == pytest.approx(math.log(0.5))
        assert report.c1 == pytest.approx(5.0)
        assert report.c2 == pytest.approx(math.log(2.0))

    def test_walk_on_triangle_matches_rate(self):
        g = preset_graph(K3, "rw")
        trajectory = walk_trajectory(g, [[1.0], [0.0], [0.0]], 12, orders=(1,))
        report = oversmooth_report(dict(enumerate(s.energies for s in trajectory.samples)))
        assert report.log_slope <= math.log(0.25) + 1e-6

    def test_zeros_excluded_from_fit(self):
        values = list(0.1 ** np.arange(8)) + [0.0, 0.0]
        report = oversmooth_report(_energies(values))
        assert report.log_slope == pytest.approx(math.log(0.1))

    def test_all_zero(self):
        with pytest.raises(AllZeroEnergies):
            oversmooth_report(_energies([0.0] * 6))

    def test_too_few_depths(self):
        with pytest.raises(InsufficientData):
            oversmooth_report(_energies([1.0, 0.5, 0.25]))

    def test_tail_fraction_range(self):
        with pytest.raises(ValueError):
            oversmooth_report(_energies([1.0] * 6), tail_fraction=0.0)

    def test_summary_and_rows(self):
        report = OversmoothReport(energies_by_depth={0: {0: 2.0, 1: 1.0}, 1: {0: 1.0, 1: 1e-12}},
                                  log_slope=-1.0, intercept=0.0, theoretical_rate=0.5)
        assert report.rows() == [(0, 2.0, 1.0), (1, 1.0, 1e-12)]
        assert report.summary() == {
            "log_slope": -1.0, "depth_below_1e-10": 1, "theoretical_rate": 0.5, "C_1": 1.0, "C_2": 1.0,
        }
