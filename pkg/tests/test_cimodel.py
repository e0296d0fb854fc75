import numpy as np
import pytest

from conftest import STMT5_A, STMT5_B, random_dag
from gsens import (
    CIStatement,
    ci_holds,
    dag_ci_statements,
    dag_to_gaussian,
    is_separable,
    model_holds,
    nonempty_conditioning,
    separated,
    union_sets,
)


class TestCIStatement:
    def test_sets_are_normalized(self):
        s = CIStatement(left=(3, 1), right=(0,), given=(2,))
        assert s.left == (1, 3)
        assert s.block_rows == (1, 2, 3) and s.block_cols == (0, 2)
        assert s.minor_order == 2

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            CIStatement(left=(0,), right=(0,), given=())

    def test_empty_side_rejected(self):
        with pytest.raises(ValueError):
            CIStatement(left=(), right=(1,), given=())

    def test_describe_uses_names(self):
        s = CIStatement(left=(2,), right=(0,), given=(1,))
        assert s.describe(("a", "b", "c")) == "{c} _||_ {a} | {b}"


class TestCiHolds:
    def test_fixture_statement_holds(self, sigma4, stmt4):
        res = ci_holds(sigma4, stmt4)
        assert res.holds and res.witness is None

    def test_diagonal_marginal_independence(self):
        res = ci_holds(np.eye(4), CIStatement(left=(0, 1), right=(2,)))
        assert res.holds

    def test_perturbed_entry_fails_with_exact_witness(self, sigma4, stmt4):
        broken = sigma4.copy()
        broken[1, 0] = broken[0, 1] = 2.5
        res = ci_holds(broken, stmt4)
        assert not res.holds
        assert res.witness.value == 2.5  # 2.5*5 - 5*2, computed directly
        assert res.witness.rows == (1, 2) and res.witness.cols == (0, 1)

    def test_swap_sides_gives_same_answer(self, rng):
        for _ in range(20):
            dag = random_dag(rng)
            statements = dag_ci_statements(dag)
            if not statements:
                continue
            _, cov = dag_to_gaussian(dag)
            for s in statements:
                swapped = CIStatement(left=s.right, right=s.left, given=s.given)
                assert ci_holds(cov, s).holds == ci_holds(cov, swapped).holds

    def test_out_of_range_statement(self, sigma4):
        with pytest.raises(IndexError):
            ci_holds(sigma4, CIStatement(left=(5,), right=(0,)))


class TestModelHolds:
    def test_empty_set_is_vacuous(self, sigma4):
        assert model_holds(sigma4, []).holds

    def test_collects_all_failures(self, sigma4, stmt4):
        broken = sigma4.copy()
        broken[1, 0] = broken[0, 1] = 2.5
        other = CIStatement(left=(3,), right=(0,), given=())  # sigma41 = 7 != 0
        res = model_holds(broken, [stmt4, other])
        assert not res.holds
        assert [k for k, _ in res.failures] == [0, 1]

    def test_dag_models_hold(self, rng):
        for _ in range(25):
            dag = random_dag(rng)
            _, cov = dag_to_gaussian(dag)
            assert model_holds(cov, dag_ci_statements(dag)).holds

    def test_reduction_to_nonempty_conditioning(self, rng):
        # checking the full set is the same as checking the conditional part
        # plus plain zero-entry checks for the marginal part
        for _ in range(10):
            dag = random_dag(rng)
            _, cov = dag_to_gaussian(dag)
            statements = list(dag_ci_statements(dag))
            statements.append(CIStatement(left=(0,), right=(1,)))  # usually false
            full = model_holds(cov, statements)
            reduced = model_holds(cov, nonempty_conditioning(statements))
            marginals_ok = all(
                ci_holds(cov, s).holds for s in statements if not s.given
            )
            assert full.holds == (reduced.holds and marginals_ok)


class TestSeparation:
    def test_shared_entry_is_not_separated(self):
        # both blocks contain the (3,3) entry
        assert not separated(STMT5_A, STMT5_B)

    def test_disjoint_supports_are_separated(self):
        s1 = CIStatement(left=(0, 1), right=(2,))
        s2 = CIStatement(left=(3, 4), right=(5,))
        assert separated(s1, s2)

    def test_statement_overlaps_itself(self, stmt4):
        assert not separated(stmt4, stmt4)

    def test_transposed_entry_counts_as_shared(self):
        # (0,1) in the first block, (1,0) in the second
        s1 = CIStatement(left=(0,), right=(1,))
        s2 = CIStatement(left=(1,), right=(0,))
        assert not separated(s1, s2)

    def test_separable_set(self):
        s1 = CIStatement(left=(0,), right=(1,), given=(2,))
        s2 = CIStatement(left=(3,), right=(4,), given=(5,))
        s3 = CIStatement(left=(6,), right=(7,))
        assert is_separable([s1, s2, s3])
        assert is_separable([s1])
        assert not is_separable([STMT5_A, STMT5_B])


class TestNonemptyConditioning:
    def test_mixed(self):
        marginal = CIStatement(left=(0,), right=(1,))
        conditional = CIStatement(left=(2,), right=(3,), given=(4,))
        assert nonempty_conditioning([marginal, conditional]) == (conditional,)

    def test_all_marginal(self):
        assert nonempty_conditioning([CIStatement(left=(0,), right=(1,))]) == ()

    def test_all_conditional_unchanged(self, stmt4):
        assert nonempty_conditioning([stmt4, STMT5_A]) == (stmt4, STMT5_A)


def test_union_sets():
    left, right, given = union_sets([STMT5_A, STMT5_B])
    assert left == (1, 3)
    assert right == (0, 1, 4)
    assert given == (2,)
