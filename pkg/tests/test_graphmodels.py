import numpy as np
import pytest

from conftest import SIGMA4, random_dag
from gsens import (
    CIStatement,
    GaussianDag,
    SingularMatrixError,
    UndirectedGraph,
    dag_ci_statements,
    dag_to_gaussian,
    inverse,
    is_psd,
    model_holds,
    ug_check,
    ug_ci_statements,
)
from gsens.graphmodels import GraphModelError


class TestDagToGaussian:
    def test_toy_parameters_reproduce_matrix_exactly(self, dag4):
        mean, cov = dag_to_gaussian(dag4)
        assert np.array_equal(cov, SIGMA4)
        assert np.array_equal(mean, np.zeros(4))

    def test_no_edges_gives_identity(self):
        mean, cov = dag_to_gaussian(GaussianDag.from_edges(3, []))
        np.testing.assert_array_equal(cov, np.eye(3))
        np.testing.assert_array_equal(mean, np.zeros(3))

    def test_two_variable_chain_by_hand(self):
        _, cov = dag_to_gaussian(GaussianDag.from_edges(2, [(0, 1, 2.0)]))
        np.testing.assert_array_equal(cov, [[1, 2], [2, 5]])

    def test_intercepts_propagate(self):
        mean, _ = dag_to_gaussian(
            GaussianDag.from_edges(2, [(0, 1, 2.0)], intercepts=(1.0, 1.0))
        )
        np.testing.assert_array_equal(mean, [1.0, 3.0])

    def test_output_symmetric_and_positive_definite(self, rng):
        for _ in range(25):
            dag = random_dag(rng)
            _, cov = dag_to_gaussian(dag)
            assert np.array_equal(cov, cov.T)
            scale = max(1.0, np.abs(cov).max())
            assert np.linalg.eigvalsh(cov)[0] > -1e-10 * scale
            assert is_psd(cov)

    def test_permuted_order(self):
        # same chain declared with vertices relabeled: 1 -> 0 with beta 2
        dag = GaussianDag.from_edges(2, [(1, 0, 2.0)], order=(1, 0))
        _, cov = dag_to_gaussian(dag)
        np.testing.assert_array_equal(cov, [[5, 2], [2, 1]])


class TestDagValidation:
    def test_edge_against_order_rejected(self):
        with pytest.raises(GraphModelError):
            GaussianDag.from_edges(2, [(1, 0, 1.0)])

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(GraphModelError):
            GaussianDag.from_edges(2, [], cond_vars=(1.0, 0.0))

    def test_duplicate_edge_rejected(self):
        with pytest.raises(GraphModelError):
            GaussianDag.from_edges(3, [(0, 1, 1.0), (0, 1, 2.0)])

    def test_self_loop_rejected(self):
        with pytest.raises(GraphModelError):
            GaussianDag.from_edges(2, [(0, 0, 1.0)])


class TestDagCiStatements:
    def test_chain(self):
        dag = GaussianDag.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        statements = dag_ci_statements(dag)
        assert statements == (CIStatement(left=(2,), right=(0,), given=(1,)),)

    def test_toy_dag_has_single_statement(self, dag4):
        statements = dag_ci_statements(dag4)
        assert statements == (CIStatement(left=(2,), right=(0,), given=(1,)),)

    def test_complete_dag_has_none(self):
        edges = [(p, c, 1.0) for c in range(4) for p in range(c)]
        assert dag_ci_statements(GaussianDag.from_edges(4, edges)) == ()

    def test_statements_hold_on_generated_covariance(self, rng):
        for _ in range(25):
            dag = random_dag(rng)
            _, cov = dag_to_gaussian(dag)
            assert model_holds(cov, dag_ci_statements(dag)).holds


class TestUndirectedGraph:
    def test_pairwise_markov_statements(self):
        # diamond on 4 vertices, missing edges (1,2) and (2,3)
        g = UndirectedGraph(4, ((1, 3), (2, 3), (0, 2), (0, 3)))
        statements = ug_ci_statements(g)
        assert statements == (
            CIStatement(left=(0,), right=(1,), given=(2, 3)),
            CIStatement(left=(1,), right=(2,), given=(0, 3)),
        )

    def test_complete_graph_has_no_statements(self):
        g = UndirectedGraph(3, ((0, 1), (0, 2), (1, 2)))
        assert ug_ci_statements(g) == ()

    def test_empty_graph_has_all_pairs(self):
        assert len(ug_ci_statements(UndirectedGraph(3, ()))) == 3

    def test_self_loop_rejected(self):
        with pytest.raises(GraphModelError):
            UndirectedGraph(3, ((1, 1),))


class TestUgCheck:
    def test_identity_matches_empty_graph(self):
        assert ug_check(np.eye(3), UndirectedGraph(3, ())).ok

    def test_two_variable_edge(self):
        cov = np.array([[1.0, 2.0], [2.0, 5.0]])
        # precision [[5,-2],[-2,1]]: off-diagonal nonzero, edge required
        assert ug_check(cov, UndirectedGraph(2, ((0, 1),))).ok
        res = ug_check(cov, UndirectedGraph(2, ()))
        assert not res.ok
        assert res.violations[0][:3] == (0, 1, "nonzero-on-missing-edge")

    def test_constructed_precision_zero_pattern(self):
        # build a covariance from a precision matrix with chosen zeros
        prec = np.array(
            [
                [2.0, 0.5, 0.0, 0.0],
                [0.5, 2.0, 0.5, 0.0],
                [0.0, 0.5, 2.0, 0.0],
                [0.0, 0.0, 0.0, 2.0],
            ]
        )
        cov = inverse(prec)
        good = UndirectedGraph(4, ((0, 1), (1, 2)))
        assert ug_check(cov, good).ok
        # an extra edge is reported as a zero-precision edge
        res = ug_check(cov, UndirectedGraph(4, ((0, 1), (1, 2), (2, 3))))
        assert not res.ok
        assert res.violations[0][:3] == (2, 3, "zero-on-edge")

    def test_singular_covariance_raises(self):
        with pytest.raises(SingularMatrixError):
            ug_check(np.ones((3, 3)), UndirectedGraph(3, ()))

    def test_marginal_zero_is_not_a_precision_zero(self):
        # the control-group covariance has an exact zero at (B,GC), but its
        # precision entry there is nonzero: dropping the edge gets flagged
        from gsens import load_model
        from gsens.fixtures import fixture_path

        model = load_model(fixture_path("cachexia_control"))
        b, gc = model.index("B"), model.index("GC")
        assert model.covariance[b, gc] == 0.0
        edges = tuple(
            (i, j) for i in range(6) for j in range(i + 1, 6) if (i, j) != (b, gc)
        )
        res = ug_check(model.covariance, UndirectedGraph(6, edges))
        assert not res.ok
        assert res.violations[0][:3] == (b, gc, "nonzero-on-missing-edge")
