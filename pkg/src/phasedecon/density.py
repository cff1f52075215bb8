"""Density estimators built by Fourier inversion of characteristic functions.

The phase-function deconvolution estimator inverts

    f_hat(x) = (2 pi)^-1 int exp(-i t x) phi_tilde(t) Kft(h t) dt

where phi_tilde equals the fitted discrete CF inside the trusted band
[-t*, t*] and a ridged continuation of the empirical CF outside it.  The
known-error baseline replaces phi_tilde by the empirical CF divided by the
weighted error CF, and a plain Gaussian-kernel estimate of the contaminated
density is provided for comparison.  Inversion estimates are not densities
by construction, so negative parts are truncated and the result renormalized
unless post-processing is turned off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ecf import PhaseEstimate, weighted_ecf
from .model import ObservationSet
from .phasefit import DiscreteDistribution

METHOD_PHASE_EPF = "phase_epf"
METHOD_PHASE_WEPF = "phase_wepf"
METHOD_KNOWN_ERROR = "known_error"
METHOD_NAIVE_KDE = "naive_kde"

DENOMINATOR_FLOOR = 1e-8


class NumericalInversionError(RuntimeError):
    pass


@dataclass
class DensityEstimate:
    """Density values on a grid plus the provenance of the estimator."""

    xs: np.ndarray
    fs: np.ndarray
    bandwidth: float
    method: str
    normalized: bool = True
    t_star: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float).ravel()
        self.fs = np.asarray(self.fs, dtype=float).ravel()
        if self.xs.size != self.fs.size:
            raise ValueError("grid and values must have equal length")


def kernel_ft(t, h: float) -> np.ndarray:
    """Fourier transform of the smoothing kernel: (1 - (ht)^2)^3 on |ht| <= 1."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    u = np.asarray(t, dtype=float) * h
    return np.where(np.abs(u) <= 1.0, (1.0 - u**2) ** 3, 0.0)


def density_grid(w, points: int = 401, pad_sds: float = 2.0) -> np.ndarray:
    """Default evaluation grid: data range padded by pad_sds standard deviations."""
    w = np.asarray(w, dtype=float)
    sd = w.std()
    return np.linspace(w.min() - pad_sds * sd, w.max() + pad_sds * sd, points)


def ridge_variance(obs: ObservationSet) -> float:
    """Weighted average of the per-observation error variances."""
    if obs.q is None:
        raise ValueError("observation set has no weights; set q first")
    return float(obs.q @ np.square(obs.sigma))


def ridged_cf(fit: DiscreteDistribution, est: PhaseEstimate, obs: ObservationSet, ts=None) -> np.ndarray:
    """Fitted CF inside [-t*, t*], ridged empirical CF outside.

    The ridge multiplies the empirical CF by the reciprocal Laplace CF
    (1 + 0.5 sL^2 t^2) with sL^2 the weighted error variance, keeping the
    inversion integrand well behaved past the cutoff; real data and even
    factors make the result Hermitian automatically.
    """
    if ts is None:
        ts = est.grid.values
        cf_emp = est.cf
    else:
        ts = np.asarray(ts, dtype=float)
        cf_emp = weighted_ecf(obs, ts)
    s_l_sq = ridge_variance(obs)
    ridge = cf_emp * (1.0 + 0.5 * s_l_sq * ts**2)
    return np.where(np.abs(ts) <= est.t_star, fit.cf(ts), ridge)


def _invert(xs: np.ndarray, ts: np.ndarray, integrand: np.ndarray) -> np.ndarray:
    """(2 pi)^-1 int exp(-i t x) integrand(t) dt by trapezoid on ts."""
    trapw = np.empty_like(ts)
    trapw[1:-1] = 0.5 * (ts[2:] - ts[:-2])
    trapw[0] = 0.5 * (ts[1] - ts[0])
    trapw[-1] = 0.5 * (ts[-1] - ts[-2])
    weighted = integrand * trapw
    fs = (np.exp(-1j * np.multiply.outer(xs, ts)) @ weighted).real / (2.0 * math.pi)
    if not np.all(np.isfinite(fs)):
        raise NumericalInversionError("Fourier inversion produced non-finite values")
    return fs


def _postprocess(xs: np.ndarray, fs: np.ndarray) -> np.ndarray:
    fs = np.clip(fs, 0.0, None)
    total = np.trapezoid(fs, xs)
    if total <= 0:
        raise NumericalInversionError("density estimate vanished after truncation")
    return fs / total


def invert_to_density(fit: DiscreteDistribution, est: PhaseEstimate, obs: ObservationSet,
                      h: float, xs, postprocess: bool = True,
                      method: str = METHOD_PHASE_WEPF) -> DensityEstimate:
    """Phase-function deconvolution density estimate on the grid ``xs``."""
    xs = np.asarray(xs, dtype=float)
    ts = est.grid.values
    integrand = ridged_cf(fit, est, obs) * kernel_ft(ts, h)
    fs = _invert(xs, ts, integrand)
    if postprocess:
        fs = _postprocess(xs, fs)
    return DensityEstimate(xs=xs, fs=fs, bandwidth=h, method=method,
                           normalized=postprocess, t_star=est.t_star)


def known_error_estimator(obs: ObservationSet, err_cf: Callable, h: float, xs,
                          grid=None, postprocess: bool = True) -> DensityEstimate:
    """Weighted deconvolution estimate when the error CFs are known.

    ``err_cf`` is the standardized error CF, applied at sigma_j t.  The
    denominator sum_j q_j err_cf(sigma_j t) is floored at 1e-8 inside the
    kernel support; the number of floored nodes is reported under
    info['clamped'].
    """
    from .ecf import TGrid  # local import keeps module load order simple

    xs = np.asarray(xs, dtype=float)
    if grid is None:
        grid = TGrid.for_observations(obs.w)
    ts = grid.values if isinstance(grid, TGrid) else np.asarray(grid, dtype=float)
    cf_emp = weighted_ecf(obs, ts)
    denom = err_cf(np.multiply.outer(obs.sigma, ts)).T @ obs.q
    kft = kernel_ft(ts, h)
    in_support = kft > 0
    clamped = int(np.count_nonzero(in_support & (denom < DENOMINATOR_FLOOR)))
    denom = np.maximum(denom, DENOMINATOR_FLOOR)
    fs = _invert(xs, ts, cf_emp / denom * kft)
    if postprocess:
        fs = _postprocess(xs, fs)
    return DensityEstimate(xs=xs, fs=fs, bandwidth=h, method=METHOD_KNOWN_ERROR,
                           normalized=postprocess, info={"clamped": clamped})


def normal_reference_bandwidth(w) -> float:
    """1.06 sd n^(-1/5), the normal-reference rule for a Gaussian kernel."""
    w = np.asarray(w, dtype=float)
    return float(1.06 * w.std(ddof=1) * w.size ** -0.2)


def naive_kde(w, xs, h: float | None = None, postprocess: bool = True) -> DensityEstimate:
    """Gaussian-kernel density estimate of the contaminated data (no correction)."""
    w = np.asarray(w, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if h is None:
        h = normal_reference_bandwidth(w)
    z = (xs[:, None] - w[None, :]) / h
    fs = np.exp(-0.5 * z**2).mean(axis=1) / (h * math.sqrt(2.0 * math.pi))
    if postprocess:
        fs = _postprocess(xs, fs)
    return DensityEstimate(xs=xs, fs=fs, bandwidth=float(h), method=METHOD_NAIVE_KDE,
                           normalized=postprocess)


def back_transform_log50(est: DensityEstimate, xs) -> DensityEstimate:
    """Map a density on the log(x - 50) scale back to the raw scale.

    f_X(x) = f_Y(log(x - 50)) / (x - 50) for x > 50; values of f_Y off its
    grid are taken as zero, with linear interpolation in between.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 50.0):
        raise ValueError("back-transform grid must satisfy x > 50")
    ys = np.log(xs - 50.0)
    fy = np.interp(ys, est.xs, est.fs, left=0.0, right=0.0)
    return DensityEstimate(xs=xs, fs=fy / (xs - 50.0), bandwidth=est.bandwidth,
                           method=est.method, normalized=False, t_star=est.t_star)
