"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from gsens import CIStatement, GaussianDag, dag_ci_statements, dag_to_gaussian

# Four-variable toy network: chain 1->2->3 plus a child 4 of everyone.
SIGMA4 = np.array(
    [
        [1.0, 2.0, 2.0, 7.0],
        [2.0, 5.0, 5.0, 17.0],
        [2.0, 5.0, 6.0, 19.0],
        [7.0, 17.0, 19.0, 63.0],
    ]
)
DAG4_EDGES = ((0, 1, 2.0), (1, 2, 1.0), (0, 3, 1.0), (1, 3, 1.0), (2, 3, 2.0))
STMT4 = CIStatement(left=(2,), right=(0,), given=(1,))

# Five-variable model with two overlapping statements sharing the (3,3) entry
# (1-based): 4 _||_ {1,2} | 3 and {2,4} _||_ 5 | 3.
STMT5_A = CIStatement(left=(3,), right=(0, 1), given=(2,))
STMT5_B = CIStatement(left=(1, 3), right=(4,), given=(2,))


@pytest.fixture
def sigma4():
    return SIGMA4.copy()


@pytest.fixture
def stmt4():
    return STMT4


@pytest.fixture
def dag4():
    return GaussianDag.from_edges(4, DAG4_EDGES)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def cofactor_det(m: np.ndarray) -> float:
    """Independent determinant oracle: recursive Laplace expansion along the
    first row. Exponential; for test matrices of order <= 7 only."""
    m = np.asarray(m, dtype=float)
    k = m.shape[0]
    if k == 1:
        return float(m[0, 0])
    total = 0.0
    for j in range(k):
        sub = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * m[0, j] * cofactor_det(sub)
    return total


def random_dag(rng: np.random.Generator, n: int | None = None, edge_prob: float = 0.5) -> GaussianDag:
    """Random DAG with natural topological order, coefficients in [-2, 2] and
    conditional variances in [0.5, 2]."""
    if n is None:
        n = int(rng.integers(2, 7))
    edges = []
    for child in range(1, n):
        for parent in range(child):
            if rng.random() < edge_prob:
                beta = float(rng.uniform(-2.0, 2.0))
                edges.append((parent, child, beta))
    cond_vars = tuple(float(v) for v in rng.uniform(0.5, 2.0, size=n))
    return GaussianDag.from_edges(n, edges, cond_vars=cond_vars)


def random_dag_with_statement(rng: np.random.Generator):
    """Random DAG model guaranteed to imply at least one CI statement,
    returned as (covariance, statements)."""
    while True:
        dag = random_dag(rng)
        statements = dag_ci_statements(dag)
        if statements:
            _, cov = dag_to_gaussian(dag)
            return cov, statements


def model5(rng: np.random.Generator) -> np.ndarray:
    """Random covariance satisfying both five-variable statements: built from
    a DAG whose vertex-4 parents are {3} and vertex-5 parents are {3}
    (1-based), so the implied independences contain both statements."""
    edges = [
        (0, 1, float(rng.uniform(0.5, 2.0))),
        (0, 2, float(rng.uniform(0.5, 2.0))),
        (1, 2, float(rng.uniform(0.5, 2.0))),
        (2, 3, float(rng.uniform(0.5, 2.0))),
        (2, 4, float(rng.uniform(0.5, 2.0))),
    ]
    dag = GaussianDag.from_edges(5, edges, cond_vars=tuple(rng.uniform(0.5, 2.0, size=5)))
    _, cov = dag_to_gaussian(dag)
    return cov
