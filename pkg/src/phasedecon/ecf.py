"""Weighted empirical characteristic and phase functions on a symmetric t-grid.

The weighted empirical CF of observations W_1..W_n with probability weights
q is  cf(t) = sum_j q_j exp(i t W_j); the weighted empirical phase function
is its normalization cf(t)/|cf(t)|.  Estimates are only trusted up to the
cutoff t*, the smallest positive t at which |cf| drops below n^(-1/4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .model import ObservationSet

# below this modulus the phase is treated as undefined and the point excluded
EXCLUDED_MODULUS = 1e-12


@dataclass(frozen=True)
class TGrid:
    """Uniform symmetric grid on [-t_max, t_max] with an odd point count."""

    t_max: float
    count: int = 1025
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.count < 3 or self.count % 2 == 0:
            raise ValueError("count must be an odd integer >= 3")
        object.__setattr__(self, "values", np.linspace(-self.t_max, self.t_max, self.count))

    @classmethod
    def for_observations(cls, w, count: int = 1025, span_factor: float = 40.0) -> "TGrid":
        """Default grid: t_max = span_factor / SD(W)."""
        w = np.asarray(w, dtype=float)
        sd = w.std()
        if sd <= 0:
            raise ValueError("observations are degenerate; cannot scale the grid")
        return cls(t_max=span_factor / sd, count=count)

    @property
    def step(self) -> float:
        return self.values[1] - self.values[0]

    @property
    def center(self) -> int:
        return self.count // 2


class TStarResult(NamedTuple):
    t_star: float
    saturated: bool


@dataclass
class PhaseEstimate:
    """Weighted empirical CF and phase on a grid, with the t* cutoff."""

    grid: TGrid
    cf: np.ndarray
    phase: np.ndarray
    valid: np.ndarray
    t_star: float
    saturated: bool
    n: int


def weighted_ecf(obs: ObservationSet, ts) -> np.ndarray:
    """sum_j q_j exp(i t W_j) evaluated at each t in ``ts`` (TGrid or array)."""
    if obs.q is None:
        raise ValueError("observation set has no weights; set q first")
    if isinstance(ts, TGrid):
        # exploit Hermitian symmetry: compute t >= 0 and mirror the conjugate
        pos = ts.values[ts.center:]
        half = np.exp(1j * np.multiply.outer(pos, obs.w)) @ obs.q
        return np.concatenate([np.conj(half[:0:-1]), half])
    ts = np.asarray(ts, dtype=float)
    return np.exp(1j * np.multiply.outer(ts, obs.w)) @ obs.q


def find_t_star(cf: np.ndarray, grid: TGrid, n: int) -> TStarResult:
    """Smallest positive grid t with |cf(t)| < n^(-1/4).

    If the modulus never drops below the threshold the grid limit t_max is
    returned with the saturation flag set.
    """
    threshold = float(n) ** -0.25
    pos = np.abs(cf[grid.center + 1:])
    below = np.flatnonzero(pos < threshold)
    if below.size == 0:
        return TStarResult(grid.t_max, True)
    return TStarResult(float(grid.values[grid.center + 1 + below[0]]), False)


def _estimate_from_cf(cf: np.ndarray, grid: TGrid, n: int) -> PhaseEstimate:
    mod = np.abs(cf)
    valid = mod >= EXCLUDED_MODULUS
    phase = np.zeros_like(cf)
    np.divide(cf, mod, out=phase, where=valid)
    t_star, saturated = find_t_star(cf, grid, n)
    return PhaseEstimate(grid=grid, cf=cf, phase=phase, valid=valid,
                         t_star=t_star, saturated=saturated, n=n)


def wepf(obs: ObservationSet, grid: TGrid) -> PhaseEstimate:
    """Weighted empirical phase function cf/|cf| with excluded-point bookkeeping."""
    return _estimate_from_cf(weighted_ecf(obs, grid), grid, obs.n)


def wepf_batch(obs: ObservationSet, grid: TGrid, weight_vectors) -> list[PhaseEstimate]:
    """Phase estimates for several weightings of the same observations.

    The exp(i t W) matrix is built once and reused, so this is much cheaper
    than repeated wepf calls when comparing weighting schemes.
    """
    pos = grid.values[grid.center:]
    emat = np.exp(1j * np.multiply.outer(pos, obs.w))
    out = []
    for q in weight_vectors:
        q = np.asarray(q, dtype=float)
        if q.shape != obs.w.shape:
            raise ValueError("weight vector length does not match observations")
        half = emat @ q
        cf = np.concatenate([np.conj(half[:0:-1]), half])
        out.append(_estimate_from_cf(cf, grid, obs.n))
    return out


def wepf_asymptotic_variance(obs: ObservationSet, phi_x: Callable, err_cf: Callable,
                             ts, component: str = "real") -> np.ndarray:
    """Delta-method sampling variance of the weighted empirical phase function.

    Writing rho = phi_X/|phi_X| and psi(t) = [sum_k q_k phi_eps(sigma_k t)]^2,
    the leading-order variance of the complex deviation rho_hat - rho is

        V(t) = sum_k q_k^2 [1 - Re{phi_X^2(t) phi_X(-2t)} / |phi_X(t)|^2
                              * phi_eps(2 sigma_k t)] / (2 |phi_X(t)|^2 psi(t)),

    and the deviation is tangential, i*rho(t) times a real fluctuation, so the
    real and imaginary parts carry sin^2(arg rho) resp. cos^2(arg rho) of V.

    ``component`` selects 'real', 'imag' or 'complex' (the full mean square).
    ``phi_x`` is the target CF; ``err_cf`` the standardized error CF, applied
    at sigma_k * t per observation.  Oracle inputs make this a test-only
    diagnostic.  Points with |phi_X| < 1e-14 are returned as NaN.
    """
    if component not in ("real", "imag", "complex"):
        raise ValueError("component must be 'real', 'imag' or 'complex'")
    if obs.q is None:
        raise ValueError("observation set has no weights; set q first")
    ts = ts.values if isinstance(ts, TGrid) else np.asarray(ts, dtype=float)
    q, sigma = obs.q, obs.sigma

    a_cf = np.asarray(phi_x(ts), dtype=complex)
    mod = np.abs(a_cf)
    ok = mod >= 1e-14

    psi = np.square(err_cf(np.multiply.outer(sigma, ts)).T @ q)
    sum_q2 = np.sum(q**2)
    sum_q2_double = err_cf(np.multiply.outer(2.0 * sigma, ts)).T @ (q**2)

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = (a_cf**2 * phi_x(-2.0 * ts)).real / mod**2
        v_complex = (sum_q2 - ratio * sum_q2_double) / (2.0 * mod**2 * psi)
    v_complex = np.where(ok, v_complex, np.nan)

    if component == "complex":
        return v_complex
    theta = np.angle(a_cf)
    factor = np.sin(theta) ** 2 if component == "real" else np.cos(theta) ** 2
    return factor * v_complex
