"""Conditional Gaussian moments for original and additively perturbed models.

Conditioning on observed values y_E leaves the remaining variables Gaussian
with mean mu_O + S_OE S_EE^-1 (y_E - mu_E) and covariance
S_OO - S_OE S_EE^-1 S_EO. The perturbed version is the same formula applied
to (mean + d, cov + D), so a zero perturbation reproduces the original
moments bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleError
from .matcore import DEFAULT_REL_TOL, as_matrix, check_symmetric, inverse, is_psd


@dataclass(frozen=True, eq=False)
class Evidence:
    """Observed values for a non-empty subset of variables (0-based indices).

    Pairs are sorted by index at construction.
    """

    indices: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if len(idx) == 0:
            raise ValueError("evidence must cover at least one variable")
        if len(set(idx)) != len(idx):
            raise ValueError("evidence indices contain duplicates")
        if vals.shape[0] != len(idx):
            raise ValueError(f"{len(idx)} evidence indices but {vals.shape[0]} values")
        order = np.argsort(idx)
        object.__setattr__(self, "indices", tuple(idx[k] for k in order))
        object.__setattr__(self, "values", vals[order])

    @classmethod
    def from_pairs(cls, pairs) -> "Evidence":
        items = list(pairs.items()) if isinstance(pairs, dict) else list(pairs)
        return cls(tuple(i for i, _ in items), np.array([v for _, v in items], dtype=float))


def condition(mean, cov, evidence: Evidence) -> tuple[np.ndarray, np.ndarray]:
    """Conditional (mean, covariance) of the unobserved variables given the
    evidence, unobserved variables in ascending index order."""
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    n = cov.shape[0]
    if mean is None:
        mean = np.zeros(n)
    mean = np.asarray(mean, dtype=float).reshape(-1)
    if mean.shape[0] != n:
        raise ValueError(f"mean has length {mean.shape[0]}, expected {n}")
    obs = list(evidence.indices)
    if max(obs) >= n:
        raise IndexError(f"evidence index {max(obs) + 1} out of range for dimension {n}")
    out = [k for k in range(n) if k not in set(obs)]
    if not out:
        raise ValueError("evidence covers every variable; nothing left to condition")
    prec_e = inverse(cov[np.ix_(obs, obs)])
    gain = cov[np.ix_(out, obs)] @ prec_e
    mean_cond = mean[out] + gain @ (evidence.values - mean[obs])
    cov_cond = cov[np.ix_(out, out)] - gain @ cov[np.ix_(obs, out)]
    return mean_cond, (cov_cond + cov_cond.T) / 2.0


def condition_perturbed(
    mean, cov, mean_shift, cov_shift, evidence: Evidence
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional moments after an additive perturbation (mean+d, cov+D).

    Zero shifts reduce exactly to condition(); the perturbed covariance must
    stay positive semidefinite.
    """
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    n = cov.shape[0]
    if mean is None:
        mean = np.zeros(n)
    mean = np.asarray(mean, dtype=float).reshape(-1)
    d = np.zeros(n) if mean_shift is None else np.asarray(mean_shift, dtype=float).reshape(-1)
    if d.shape[0] != n:
        raise ValueError(f"mean shift has length {d.shape[0]}, expected {n}")
    shift = (
        np.zeros((n, n))
        if cov_shift is None
        else check_symmetric(as_matrix(cov_shift, "cov shift"), "cov shift")
    )
    if shift.shape[0] != n:
        raise ValueError(f"cov shift dimension {shift.shape[0]}, expected {n}")
    perturbed = cov + shift
    if not is_psd(perturbed, DEFAULT_REL_TOL):
        raise InadmissibleError("perturbed covariance is not positive semidefinite")
    return condition(mean + d, perturbed, evidence)
