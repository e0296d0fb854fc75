"""Gaussian joints from DAG parameters, and graph-implied CI statements.

A Gaussian DAG assigns each vertex a univariate conditional
y_i = b0_i + sum_{j in pa(i)} beta_ji * y_j + noise(var_i). Stacking the
regressions gives the joint mean (I-B)^-T b0 and covariance
(I-B)^-T diag(var) (I-B)^-1, which satisfies every per-vertex statement
"i independent of its non-parent predecessors given its parents".
Undirected graphs encode them instead as zeros of the precision matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cimodel import CIStatement
from .errors import GsensError
from .matcore import DEFAULT_TOL, TolerancePolicy, as_matrix, check_symmetric, inverse


class GraphModelError(GsensError):
    """Inconsistent DAG/graph specification."""


@dataclass(frozen=True)
class GaussianDag:
    """Regression parameterization of a Gaussian joint.

    edges are (parent, child, coefficient) with 0-based vertices; every
    parent must precede its child in the topological order. intercepts
    default to zero, conditional variances to one.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    order: tuple[int, ...]
    intercepts: tuple[float, ...]
    cond_vars: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphModelError("dimension must be >= 1")
        if sorted(self.order) != list(range(self.n)):
            raise GraphModelError(f"order must be a permutation of 0..{self.n - 1}")
        if len(self.intercepts) != self.n or len(self.cond_vars) != self.n:
            raise GraphModelError("intercepts and cond_vars must have length n")
        if any(v <= 0 for v in self.cond_vars):
            raise GraphModelError("conditional variances must be positive")
        pos = {v: k for k, v in enumerate(self.order)}
        seen = set()
        for parent, child, beta in self.edges:
            if not (0 <= parent < self.n and 0 <= child < self.n):
                raise GraphModelError(f"edge ({parent},{child}) out of range")
            if parent == child:
                raise GraphModelError(f"self-loop at vertex {parent}")
            if (parent, child) in seen:
                raise GraphModelError(f"duplicate edge ({parent},{child})")
            seen.add((parent, child))
            if pos[parent] >= pos[child]:
                raise GraphModelError(
                    f"edge ({parent + 1}->{child + 1}) violates the topological order"
                )
            _ = float(beta)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Sequence[tuple[int, int, float]],
        order: Sequence[int] | None = None,
        intercepts: Sequence[float] | None = None,
        cond_vars: Sequence[float] | None = None,
    ) -> "GaussianDag":
        return cls(
            n=n,
            edges=tuple((int(p), int(c), float(b)) for p, c, b in edges),
            order=tuple(range(n)) if order is None else tuple(int(v) for v in order),
            intercepts=(0.0,) * n if intercepts is None else tuple(map(float, intercepts)),
            cond_vars=(1.0,) * n if cond_vars is None else tuple(map(float, cond_vars)),
        )

    def parents(self, vertex: int) -> tuple[int, ...]:
        return tuple(sorted(p for p, c, _ in self.edges if c == vertex))

    def coefficient_matrix(self) -> np.ndarray:
        b = np.zeros((self.n, self.n))
        for parent, child, beta in self.edges:
            b[parent, child] = beta
        return b


def dag_to_gaussian(dag: GaussianDag) -> tuple[np.ndarray, np.ndarray]:
    """Joint (mean, covariance) of the DAG model; the covariance is exactly
    symmetric and positive definite."""
    eye = np.eye(dag.n)
    a = np.linalg.inv(eye - dag.coefficient_matrix())
    phi = np.asarray(dag.cond_vars, dtype=float)
    cov = a.T @ (phi[:, None] * a)
    cov = (cov + cov.T) / 2.0
    mean = a.T @ np.asarray(dag.intercepts, dtype=float)
    return mean, cov


def dag_ci_statements(dag: GaussianDag) -> tuple[CIStatement, ...]:
    """Per-vertex factorization statements, one per vertex whose predecessors
    are not all parents, in topological order."""
    out = []
    for k, vertex in enumerate(dag.order):
        preceding = set(dag.order[:k])
        indep = preceding - set(dag.parents(vertex))
        if indep:
            out.append(
                CIStatement(
                    left=(vertex,),
                    right=tuple(sorted(indep)),
                    given=dag.parents(vertex),
                )
            )
    return tuple(out)


@dataclass(frozen=True)
class UndirectedGraph:
    """Simple undirected graph on 0-based vertices."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise GraphModelError("dimension must be >= 1")
        norm = []
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphModelError(f"edge ({i},{j}) out of range")
            if i == j:
                raise GraphModelError(f"self-loop at vertex {i}")
            e = (min(i, j), max(i, j))
            if e in seen:
                raise GraphModelError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)


def ug_ci_statements(graph: UndirectedGraph) -> tuple[CIStatement, ...]:
    """Pairwise Markov statements: one per missing edge, conditioning on all
    remaining vertices."""
    out = []
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            if not graph.has_edge(i, j):
                rest = tuple(v for v in range(graph.n) if v not in (i, j))
                out.append(CIStatement(left=(i,), right=(j,), given=rest))
    return tuple(out)


@dataclass(frozen=True)
class UgCheck:
    ok: bool
    # (i, j, kind, precision value); kind is "nonzero-on-missing-edge" or
    # "zero-on-edge"
    violations: tuple[tuple[int, int, str, float], ...]

    def __bool__(self) -> bool:
        return self.ok


def ug_check(cov, graph: UndirectedGraph, tol: TolerancePolicy = DEFAULT_TOL) -> UgCheck:
    """Verify both directions of the precision-zero/missing-edge
    correspondence under the tolerance policy."""
    cov = check_symmetric(as_matrix(cov))
    if cov.shape[0] != graph.n:
        raise ValueError(f"covariance dimension {cov.shape[0]} != graph size {graph.n}")
    prec = inverse(cov)
    violations = []
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            zero = tol.entry_is_zero(prec[i, j])
            if graph.has_edge(i, j) and zero:
                violations.append((i, j, "zero-on-edge", float(prec[i, j])))
            elif not graph.has_edge(i, j) and not zero:
                violations.append((i, j, "nonzero-on-missing-edge", float(prec[i, j])))
    return UgCheck(not violations, tuple(violations))
