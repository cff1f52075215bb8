"""Integrated squared error scoring and Monte Carlo aggregation."""

from __future__ import annotations

import numpy as np


def ise(est, truth) -> float:
    """Trapezoid integral of (estimate - truth)^2 on the estimate's grid.

    ``truth`` is either a density spec (anything with a .density method) or an
    array of truth values already evaluated on est.xs.
    """
    truth_vals = truth.density(est.xs) if hasattr(truth, "density") else np.asarray(truth, dtype=float)
    return float(np.trapezoid((est.fs - truth_vals) ** 2, est.xs))


def phase_ise(est, truth: np.ndarray, t_star: float | None = None) -> float:
    """Integral of |phase estimate - truth|^2 over [-t*, t*].

    ``truth`` must be evaluated on the estimate's own grid; grid points marked
    excluded in the estimate are skipped.
    """
    ts = est.grid.values
    truth = np.asarray(truth)
    if truth.shape != ts.shape:
        raise ValueError("truth values do not match the estimate's grid")
    if t_star is None:
        t_star = est.t_star
    keep = (np.abs(ts) <= t_star) & est.valid
    diff = np.abs(est.phase[keep] - truth[keep]) ** 2
    return float(np.trapezoid(diff, ts[keep]))


def mise_ratio_with_jackknife(pairs) -> tuple[float, float]:
    """MISE ratio mean(first)/mean(second) with its leave-one-out standard error.

    The standard error is sqrt(N^-1 sum_j (R_(-j) - Rbar)^2) with R_(-j) the
    ratio after deleting pair j and Rbar the mean of the R_(-j).
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("expected an N x 2 array of ISE pairs")
    n = pairs.shape[0]
    if n < 2:
        raise ValueError("need at least 2 pairs for a jackknife standard error")
    num, den = pairs[:, 0], pairs[:, 1]
    den_sum = den.sum()
    loo_den = den_sum - den
    if den.mean() <= 0 or np.any(loo_den <= 0):
        raise ValueError("denominator ISEs must be positive")
    ratio = num.mean() / den.mean()
    loo = (num.sum() - num) / loo_den
    se = float(np.sqrt(np.mean((loo - loo.mean()) ** 2)))
    return float(ratio), se


def quartile_summary(values) -> tuple[float, float, float]:
    """First quartile, median and third quartile by linear interpolation."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return float(q1), float(med), float(q3)
