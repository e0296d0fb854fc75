"""Dissimilarity between original and perturbed Gaussians.

KL divergence in the general two-Gaussian form, the additive-perturbation
form, and the multiplicative (plan) form; Frobenius norm as the sum of
squared entrywise covariance differences. KL values are in nats.

KL here requires computability (invertible base covariance, positive
determinant of the perturbed one) rather than cone membership: a perturbed
matrix can stray outside the PSD cone while the trace/log-det expression is
still well defined, and admissibility is reported separately by the sweep
layer. Exactly identical inputs short-circuit to 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cimodel import CIStatement
from .covariation import PerturbationPlan, Scheme, Variation, build_scheme
from .errors import InadmissibleError, SingularMatrixError
from .matcore import DEFAULT_TOL, TolerancePolicy, as_matrix, check_symmetric, inverse, is_psd


def _as_mean(mean, n: int) -> np.ndarray:
    if mean is None:
        return np.zeros(n)
    m = np.asarray(mean, dtype=float).reshape(-1)
    if m.shape != (n,):
        raise ValueError(f"mean has length {m.shape[0]}, expected {n}")
    return m


def _logdet_or_raise(cov: np.ndarray, what: str) -> float:
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise InadmissibleError(f"{what} has non-positive determinant; KL is undefined")
    return float(logdet)


def kl_gaussian(mean, cov, mean_new, cov_new) -> float:
    """KL of the (mean_new, cov_new) Gaussian from the (mean, cov) one:

        0.5 * ( tr(cov^-1 cov_new) + dm' cov^-1 dm - n + ln det(cov)/det(cov_new) )
    """
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    cov_new = check_symmetric(as_matrix(cov_new, "cov_new"), "cov_new")
    n = cov.shape[0]
    if cov_new.shape[0] != n:
        raise ValueError(f"dimension mismatch: {n} vs {cov_new.shape[0]}")
    mean = _as_mean(mean, n)
    mean_new = _as_mean(mean_new, n)
    if np.array_equal(cov, cov_new) and np.array_equal(mean, mean_new):
        return 0.0
    prec = inverse(cov)
    logdet0 = _logdet_or_raise(cov, "base covariance")
    logdet1 = _logdet_or_raise(cov_new, "perturbed covariance")
    dm = mean - mean_new
    return 0.5 * (float(np.trace(prec @ cov_new)) + float(dm @ prec @ dm) - n + logdet0 - logdet1)


def kl_additive(cov, cov_shift, mean_shift=None) -> float:
    """KL of the additively perturbed Gaussian (mean+d, cov+D) from the
    original, computed from the shifts alone:

        0.5 * ( tr(cov^-1 D) + d' cov^-1 d + ln det(cov)/det(cov+D) )
    """
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    shift = check_symmetric(as_matrix(cov_shift, "cov shift"), "cov shift")
    n = cov.shape[0]
    if shift.shape[0] != n:
        raise ValueError(f"dimension mismatch: {n} vs {shift.shape[0]}")
    d = _as_mean(mean_shift, n)
    if not shift.any() and not d.any():
        return 0.0
    prec = inverse(cov)
    logdet0 = _logdet_or_raise(cov, "base covariance")
    logdet1 = _logdet_or_raise(cov + shift, "perturbed covariance")
    return 0.5 * (float(np.trace(prec @ shift)) + float(d @ prec @ d) + logdet0 - logdet1)


def kl_mp(cov, plan: PerturbationPlan) -> float:
    """KL of the plan-perturbed Gaussian from the original (zero means):

        0.5 * ( tr(cov^-1 (P o cov)) - n + ln det(cov)/det(P o cov) )
    """
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    target = plan.apply(cov)
    if np.array_equal(cov, target):
        return 0.0
    n = cov.shape[0]
    prec = inverse(cov)
    logdet0 = _logdet_or_raise(cov, "base covariance")
    logdet1 = _logdet_or_raise(target, "perturbed covariance")
    return 0.5 * (float(np.trace(prec @ target)) - n + logdet0 - logdet1)


def kl_total_closed(n: int, delta: float) -> float:
    """Closed form for a total covariation, which rescales the whole
    covariance by delta: 0.5 * n * (delta - ln(delta) - 1).

    For a composition of total factors, delta is the product of the factors
    (PerturbationPlan.total_factor). Zero exactly at delta = 1.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    delta = float(delta)
    if delta <= 0:
        raise ValueError("total covariation factor must be positive")
    if delta == 1.0:
        return 0.0
    return 0.5 * n * (delta - np.log(delta) - 1.0)


def frobenius(cov, cov_new) -> float:
    """Sum of squared entrywise differences of the two covariance matrices."""
    a = as_matrix(cov, "cov")
    b = as_matrix(cov_new, "cov_new")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(((a - b) ** 2).sum())


def frobenius_mp(cov, plan: PerturbationPlan) -> float:
    """Frobenius norm of a plan perturbation: per entry ((1 - p_ij) s_ij)^2,
    evaluated as (s_ij - p_ij s_ij)^2 so it agrees with frobenius() bitwise."""
    cov = as_matrix(cov, "cov")
    return float(((cov - plan.apply(cov)) ** 2).sum())


@dataclass(frozen=True)
class DivergenceReport:
    """One scheme's divergence numbers at a single grid point."""

    scheme: str
    kl: float | None
    frobenius: float
    admissible: bool


def _report(label: str, cov, mean, target, frob, psd_tol: float) -> DivergenceReport:
    admissible = is_psd(target, psd_tol)
    kl_val = None
    if admissible:
        try:
            kl_val = kl_gaussian(mean, cov, mean, target)
        except (InadmissibleError, SingularMatrixError):
            admissible = False
    return DivergenceReport(label, kl_val, frob, admissible)


def scheme_ordering(
    cov,
    position: tuple[int, int],
    delta: float,
    stmt: CIStatement,
    tol: TolerancePolicy = DEFAULT_TOL,
) -> tuple[DivergenceReport, ...]:
    """Frobenius/KL for all four covariation schemes plus the matched
    additive change d_ij = (delta - 1) s_ij at the same position.

    The Frobenius ordering total >= partial >= row, partial >= column,
    row >= standard, column >= standard holds by containment of the changed
    entry sets and is re-asserted on every call.
    """
    cov = check_symmetric(as_matrix(cov, "cov"), "cov")
    n = cov.shape[0]
    i, j = position
    variation = Variation(n, ((i, j, float(delta)),))
    mean = np.zeros(n)

    reports = {}
    for kind in ("total", "partial", "row", "column"):
        plan = build_scheme(variation, Scheme(kind), stmt)
        reports[kind] = _report(kind, cov, mean, plan.apply(cov), frobenius_mp(cov, plan), tol.rel)

    shift = np.zeros((n, n))
    shift[i, j] += (delta - 1.0) * cov[i, j]
    if i != j:
        shift[j, i] += (delta - 1.0) * cov[j, i]
    reports["standard"] = _report(
        "standard", cov, mean, cov + shift, frobenius(cov, cov + shift), tol.rel
    )

    slack = 1e-12 * max(1.0, reports["total"].frobenius)
    f = {k: r.frobenius for k, r in reports.items()}
    assert f["total"] >= f["partial"] - slack, "Frobenius ordering violated: total < partial"
    assert f["partial"] >= f["row"] - slack, "Frobenius ordering violated: partial < row"
    assert f["partial"] >= f["column"] - slack, "Frobenius ordering violated: partial < column"
    assert f["row"] >= f["standard"] - slack, "Frobenius ordering violated: row < standard"
    assert f["column"] >= f["standard"] - slack, "Frobenius ordering violated: column < standard"
    return tuple(reports[k] for k in ("total", "partial", "row", "column", "standard"))
