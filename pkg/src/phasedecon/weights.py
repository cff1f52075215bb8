"""Variance components from replicate data and observation weighting schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ObservationSet, ReplicateDataset

# floor for the latent-variance estimate, as a fraction of the total sample
# variance of the collapsed observations; the moment estimator can go negative
# in small samples, which would break the weight ordering
SIGMA_X_FLOOR_FRACTION = 0.05


class InsufficientReplicatesError(ValueError):
    def __init__(self, obs_id):
        self.obs_id = obs_id
        super().__init__(f"observation {obs_id} has fewer than 2 replicates; "
                         "cannot estimate its error variance")


@dataclass
class VarianceComponents:
    """Per-observation and latent variance estimates from replicate data."""

    tau_sq: np.ndarray      # observation-level error variances
    sigma_x_sq: float       # latent variance estimate (may be negative; clamp before use)
    sigma_sq: np.ndarray    # average-level error variances tau_sq / n_i
    counts: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.sigma_sq)


def estimate_variance_components(data: ReplicateDataset) -> VarianceComponents:
    """Moment estimates of (tau_i^2, sigma_x^2, sigma_i^2) from replicates.

    tau_i^2 = [n_i (n_i - 1)]^-1 sum_{j<j'} (W_ij - W_ij')^2, and the latent
    variance is the pooled squared deviation from the grand mean minus the
    average tau_i^2.  The grand mean is the mean of the row means.
    """
    counts = data.counts
    for rid, c in zip(data.ids, counts):
        if c < 2:
            raise InsufficientReplicatesError(rid)

    # sum_{j<j'} (a_j - a_j')^2 = n * sum a^2 - (sum a)^2, so tau_i^2 is the
    # usual unbiased row variance
    tau_sq = np.array([row.var(ddof=1) for row in data.rows])

    row_means = np.array([row.mean() for row in data.rows])
    grand_mean = row_means.mean()
    total = float(sum(np.sum((row - grand_mean) ** 2) for row in data.rows))
    n_total = int(counts.sum())
    sigma_x_sq = total / n_total - tau_sq.mean()

    return VarianceComponents(tau_sq=tau_sq, sigma_x_sq=sigma_x_sq,
                              sigma_sq=tau_sq / counts, counts=counts)


def collapse_replicates(data: ReplicateDataset, vc: VarianceComponents) -> ObservationSet:
    """Average each row to W_i with error SD sigma_i = tau_i / sqrt(n_i).

    Weights are left unset; fill them with one of the weight constructors.
    """
    w = np.array([row.mean() for row in data.rows])
    return ObservationSet(w=w, sigma=vc.sigma, q=None)


def clamped_sigma_x_sq(vc: VarianceComponents, w) -> float:
    """Latent-variance estimate floored at a fraction of var(W)."""
    w = np.asarray(w, dtype=float)
    return max(vc.sigma_x_sq, SIGMA_X_FLOOR_FRACTION * w.var(ddof=1))


def equal_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def mean_optimal_weights(sigma_x_sq: float, sigma_sq) -> np.ndarray:
    """Weights q_i proportional to 1 / (sigma_x^2 + sigma_i^2).

    These minimize the variance of the weighted mean of the contaminated
    observations; sigma_x_sq must already be clamped positive when estimated.
    """
    sigma_sq = np.asarray(sigma_sq, dtype=float)
    denom = sigma_x_sq + sigma_sq
    if np.any(denom <= 0):
        raise ValueError("sigma_x_sq + sigma_i^2 must be positive for all i")
    inv = 1.0 / denom
    return inv / inv.sum()
