"""Dense symmetric-matrix kernel.

Submatrices, exhaustive minor enumeration, determinants/inverses,
Schur (entrywise) products, positive-semidefiniteness and the ones-filled
block embedding used by covariation schemes. Everything here is a pure
function on small dense arrays; nothing is optimized beyond desk scale
(n up to a few dozen).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BlockConsistencyError, SingularMatrixError

# Reciprocal condition estimate below this means "singular" for inverse().
RCOND_LIMIT = 1e-12

# Default scale-relative tolerance used for minor vanishing and PSD checks.
DEFAULT_REL_TOL = 1e-9


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a square 2-D float64 array (copy)."""
    m = np.array(values, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    return m


def check_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Require exact (bitwise) symmetry."""
    if not np.array_equal(m, m.T):
        i, j = np.argwhere(m != m.T)[0]
        raise ValueError(
            f"{name} is not symmetric: entry ({i + 1},{j + 1}) = {m[i, j]!r} "
            f"but ({j + 1},{i + 1}) = {m[j, i]!r}"
        )
    return m


def as_index_set(indices: Iterable[int], n: int, name: str = "index set") -> tuple[int, ...]:
    """Validate indices against dimension n; returns a sorted tuple."""
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise ValueError(f"{name} contains duplicates: {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"{name} index {i} out of range for dimension {n}")
    return tuple(sorted(idx))


@dataclass(frozen=True, eq=False)
class Block:
    """A rectangular submatrix together with the original indices it came from."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.rows), len(self.cols)):
            raise ValueError(
                f"block values have shape {self.values.shape}, expected "
                f"({len(self.rows)}, {len(self.cols)})"
            )


def submatrix(m: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> Block:
    """Block of m with the given (sorted) row and column indices."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    r = as_index_set(rows, n, "row index set")
    c = as_index_set(cols, m.shape[1], "column index set")
    return Block(r, c, m[np.ix_(r, c)])


def schur(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise (Schur) product of two equal-dimension matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a * b


@dataclass(frozen=True)
class Minor:
    """One k x k minor of a block: original indices, value and a size scale.

    scale is the product over rows of the max-abs entry of the k x k
    submatrix; the vanishing test is |value| <= rel * max(1, scale).
    """

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    value: float
    scale: float

    def describe(self, names: Sequence[str] | None = None) -> str:
        if names is not None:
            r = ",".join(names[i] for i in self.rows)
            c = ",".join(names[j] for j in self.cols)
        else:
            r = ",".join(str(i + 1) for i in self.rows)
            c = ",".join(str(j + 1) for j in self.cols)
        return f"minor rows {{{r}}} x cols {{{c}}} = {self.value:.6g}"


def _small_det(s: np.ndarray) -> float:
    # Direct cofactor formulas up to 3x3: exact for small-integer entries,
    # unlike LU which rounds e.g. det([[2.5,5],[2,5]]) to 2.4999999999999996.
    k = s.shape[0]
    if k == 1:
        return float(s[0, 0])
    if k == 2:
        return float(s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0])
    if k == 3:
        return float(
            s[0, 0] * (s[1, 1] * s[2, 2] - s[1, 2] * s[2, 1])
            - s[0, 1] * (s[1, 0] * s[2, 2] - s[1, 2] * s[2, 0])
            + s[0, 2] * (s[1, 0] * s[2, 1] - s[1, 1] * s[2, 0])
        )
    return float(np.linalg.det(s))


def iter_minors(block: Block, k: int) -> Iterator[Minor]:
    """Every k x k minor of the block, row subsets outer, column subsets inner.

    Subsets are enumerated in lexicographic order of index positions, so the
    iteration order is deterministic and reproducible across runs.
    """
    nr, nc = block.values.shape
    if k < 1 or k > min(nr, nc):
        raise ValueError(f"minor order {k} does not fit a {nr}x{nc} block")
    for ri in itertools.combinations(range(nr), k):
        for ci in itertools.combinations(range(nc), k):
            sub = block.values[np.ix_(ri, ci)]
            scale = float(np.prod(np.abs(sub).max(axis=1)))
            yield Minor(
                rows=tuple(block.rows[i] for i in ri),
                cols=tuple(block.cols[j] for j in ci),
                value=_small_det(sub),
                scale=scale,
            )


def all_minors(block: Block, k: int) -> list[float]:
    """Values of every k x k minor of the block in enumeration order."""
    return [m.value for m in iter_minors(block, k)]


def det(m) -> float:
    """Determinant of a square matrix."""
    return float(np.linalg.det(as_matrix(m)))


def inverse(m) -> np.ndarray:
    """Inverse of a symmetric matrix; raises SingularMatrixError when the
    reciprocal condition estimate falls below RCOND_LIMIT."""
    a = check_symmetric(as_matrix(m))
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or 1.0 / cond < RCOND_LIMIT:
        raise SingularMatrixError(
            f"matrix is numerically singular (reciprocal condition estimate "
            f"{0.0 if not np.isfinite(cond) else 1.0 / cond:.3g} < {RCOND_LIMIT:g})"
        )
    inv = np.linalg.inv(a)
    # inverse of a symmetric matrix is symmetric; average out LU round-off
    return (inv + inv.T) / 2.0


def is_psd(m, tol: float = DEFAULT_REL_TOL) -> bool:
    """True iff the smallest eigenvalue is >= -tol * max(1, max|entry|)."""
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    a = check_symmetric(as_matrix(m))
    smallest = float(np.linalg.eigvalsh(a)[0])
    return smallest >= -tol * max(1.0, float(np.abs(a).max()))


def embed_block(block: Block, n: int) -> np.ndarray:
    """Embed a block into an n x n matrix: block values at rows x cols,
    mirrored values at cols x rows, ones everywhere else.

    Raises BlockConsistencyError if the block prescribes different values at
    a position and its transpose (both inside rows x cols).
    """
    out = np.ones((n, n))
    rows, cols, vals = block.rows, block.cols, block.values
    if rows and max(rows) >= n or cols and max(cols) >= n:
        raise IndexError(f"block indices exceed dimension {n}")
    rpos = {r: a for a, r in enumerate(rows)}
    cpos = {c: b for b, c in enumerate(cols)}
    for a, r in enumerate(rows):
        for b, c in enumerate(cols):
            v = vals[a, b]
            if c in rpos and r in cpos:
                w = vals[rpos[c], cpos[r]]
                if v != w:
                    raise BlockConsistencyError(
                        f"block requires ({r + 1},{c + 1}) = {v!r} but its mirror "
                        f"({c + 1},{r + 1}) = {w!r}; cannot embed symmetrically"
                    )
            out[r, c] = v
            out[c, r] = v
    return out


def floor_one(d, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """Symmetric matrix carrying d's rows x cols block, ones elsewhere.

    Only the indexed block of d is read; mirror positions are forced equal.
    """
    a = as_matrix(d)
    return embed_block(submatrix(a, rows, cols), a.shape[0])


def ones_block(n: int, rows: Sequence[int], cols: Sequence[int], value: float) -> np.ndarray:
    """floor_one of a constant block: value on rows x cols (and its mirror),
    ones elsewhere."""
    r = as_index_set(rows, n, "row index set")
    c = as_index_set(cols, n, "column index set")
    out = np.ones((n, n))
    if r and c:
        out[np.ix_(r, c)] = value
        out[np.ix_(c, r)] = value
    return out


@dataclass(frozen=True)
class TolerancePolicy:
    """Scale-relative vanishing test shared by minors and precision zeros.

    A minor m of a k x k submatrix S counts as zero iff
    |m| <= rel * max(1, product over rows of max|entry of S|); the product
    tracks the determinant's own magnitude, so the test survives covariances
    in the millions as well as unit-scale ones.
    """

    rel: float = DEFAULT_REL_TOL

    def minor_is_zero(self, minor: Minor) -> bool:
        return abs(minor.value) <= self.rel * max(1.0, minor.scale)

    def entry_is_zero(self, value: float) -> bool:
        # 1x1-minor rule: the submatrix is the entry itself.
        return abs(value) <= self.rel * max(1.0, abs(value))


DEFAULT_TOL = TolerancePolicy()
