"""Fit a discrete distribution whose phase function matches a phase estimate.

The candidate CF is psi(t) = sum_j p_j exp(i t x_j) on fixed support points
x_j with probability masses p_j.  The match criterion integrates, over the
trusted band [-t*, t*], the weighted squared phase distance

    integral  w(t) | rho_hat(t) - psi(t)/|psi(t)| |^2 dt,
    w(t) = omega(t) |cf_hat(t) psi(t)|^2,

with omega the Epanechnikov kernel rescaled to [-t*, t*].  The |cf psi|^2
factor cancels the divisions, giving the division-free integrand

    omega(t) | |psi| cf_hat - |cf_hat| psi |^2

which vanishes wherever either modulus does.  A small multiple of the
candidate's variance is added as a tie-breaker so that, among near-matching
solutions, low-variance ones are preferred.  The simplex-constrained,
non-convex problem is attacked by projected gradient descent with Armijo
backtracking from several random starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ecf import PhaseEstimate
from .model import ObservationSet


class NumericalFitError(RuntimeError):
    """Raised when the optimizer hits a non-finite objective."""

    def __init__(self, message, iteration=None, step=None):
        self.iteration = iteration
        self.step = step
        super().__init__(message)


@dataclass
class DiscreteDistribution:
    """Support points with probability masses, sorted by support."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        if self.x.size != self.p.size:
            raise ValueError("support and masses must have equal length")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("support points must be strictly increasing")
        if np.any(self.p < 0):
            raise ValueError("masses must be non-negative")
        if abs(self.p.sum() - 1.0) > 1e-10:
            raise ValueError("masses must sum to 1")

    def cf(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.exp(1j * np.multiply.outer(ts, self.x)) @ self.p

    @property
    def variance(self) -> float:
        return mass_variance(self.p, self.x)


@dataclass
class FitConfig:
    m: int | None = None                # support count, default ceil(5 sqrt(n))
    lam: float | None = None            # variance-penalty weight, default scaled
    starts: int = 8
    max_iters: int = 300
    tol_grad: float = 1e-7
    tol_step: float = 1e-11

    def __post_init__(self):
        if self.m is not None and self.m < 2:
            raise ValueError("need at least 2 support points")
        if self.lam is not None and self.lam < 0:
            raise ValueError("penalty weight must be non-negative")
        if self.starts < 1 or self.max_iters < 1:
            raise ValueError("starts and max_iters must be positive")
        if self.tol_grad <= 0 or self.tol_step <= 0:
            raise ValueError("tolerances must be positive")


def default_support_count(n: int) -> int:
    return math.ceil(5.0 * math.sqrt(n))


def build_support(obs: ObservationSet, m: int, seed) -> np.ndarray:
    """m support points drawn uniformly on [min W, max W], sorted."""
    if m < 2:
        raise ValueError("need at least 2 support points")
    lo, hi = float(obs.w.min()), float(obs.w.max())
    if not hi > lo:
        raise ValueError("degenerate observation range; cannot place support")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.sort(rng.uniform(lo, hi, size=m))


def epanechnikov_window(ts, t_star: float) -> np.ndarray:
    """0.75 (1 - (t/t*)^2) / t* on [-t*, t*], zero outside."""
    u = np.asarray(ts, dtype=float) / t_star
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u**2) / t_star, 0.0)


def mass_variance(p, x) -> float:
    """Variance of the discrete distribution (p, x)."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    m1 = p @ x
    return float(p @ np.square(x) - m1**2)


def _trapezoid_weights(ts: np.ndarray) -> np.ndarray:
    w = np.empty_like(ts)
    w[1:-1] = 0.5 * (ts[2:] - ts[:-2])
    w[0] = 0.5 * (ts[1] - ts[0])
    w[-1] = 0.5 * (ts[-1] - ts[-2])
    return w


class PhaseObjective:
    """Phase-mismatch integral against a fixed target, on fixed support.

    Precomputes the restricted t-grid, quadrature-times-window weights and the
    exp(i t x_j) matrix so repeated value/gradient evaluations are two or three
    matrix-vector products.
    """

    def __init__(self, target: PhaseEstimate, x, t_star: float | None = None):
        self.x = np.asarray(x, dtype=float)
        t_star = target.t_star if t_star is None else float(t_star)
        ts_all = target.grid.values
        keep = np.abs(ts_all) <= t_star
        self.ts = ts_all[keep]
        self.target_cf = target.cf[keep]
        self._a = np.abs(self.target_cf)
        self._c = _trapezoid_weights(self.ts) * epanechnikov_window(self.ts, t_star)
        self._emat = np.exp(1j * np.multiply.outer(self.ts, self.x))
        self._c2a = self._c * 2.0 * self._a

    def value(self, p) -> float:
        psi = self._emat @ p
        s = np.abs(psi)
        u = (np.conj(self.target_cf) * psi).real
        return float(self._c2a @ (s * (self._a * s - u)))

    def value_and_grad(self, p):
        psi = self._emat @ p
        s = np.abs(psi)
        u = (np.conj(self.target_cf) * psi).real
        val = float(self._c2a @ (s * (self._a * s - u)))
        # d|psi|/dp_j = Re(conj(psi/|psi|) E_j); bounded, and the factor
        # multiplying it vanishes with s, so the s=0 direction is immaterial
        unit = psi / np.maximum(s, 1e-300)
        alpha = self._c2a * (2.0 * self._a * s - u)
        beta = self._c2a * s
        grad = (self._emat.T @ (alpha * np.conj(unit))).real \
            - (self._emat.T @ (beta * np.conj(self.target_cf))).real
        return val, grad


def phase_mismatch(p, x, target: PhaseEstimate, t_star: float | None = None) -> float:
    """One-shot evaluation of the phase-matching objective."""
    return PhaseObjective(target, x, t_star).value(np.asarray(p, dtype=float))


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {p >= 0, sum p = 1} (sorted-threshold rule)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u * idx > css - 1.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _minimize_from(p0, fun_grad, max_iters, tol_grad, tol_step):
    """Projected gradient descent with Armijo backtracking on the simplex."""
    p = project_to_simplex(np.asarray(p0, dtype=float))
    val, grad = fun_grad(p)
    step = 1.0
    for it in range(max_iters):
        if not np.isfinite(val):
            raise NumericalFitError("objective became non-finite", iteration=it, step=step)
        # projected-gradient stationarity measure
        pg = p - project_to_simplex(p - grad)
        if np.linalg.norm(pg) <= tol_grad:
            break
        accepted = False
        while step > 1e-18:
            cand = project_to_simplex(p - step * grad)
            delta = cand - p
            cand_val, cand_grad = fun_grad(cand)
            if np.isfinite(cand_val) and cand_val <= val + 1e-4 * (grad @ delta):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        moved = np.linalg.norm(cand - p)
        p, val, grad = cand, cand_val, cand_grad
        step = min(step * 2.0, 1e6)
        if moved <= tol_step * (1.0 + np.linalg.norm(p)):
            break
    return p, val


def fit_discrete(target: PhaseEstimate, obs: ObservationSet,
                 cfg: FitConfig | None = None, seed=0) -> DiscreteDistribution:
    """Best phase-matching discrete distribution over multi-start optimization.

    Support points are resampled from the observation range with ``seed``;
    starts are the uniform vector plus flat-Dirichlet draws.  The winner is
    the start with the lowest penalized objective, ties broken by lower
    variance and then lexicographically, so the reduction over starts is
    order-independent.  Masses below 1e-8 are zeroed and renormalized.
    """
    cfg = cfg or FitConfig()
    rng = np.random.default_rng(seed)
    m = cfg.m if cfg.m is not None else default_support_count(obs.n)
    x = build_support(obs, m, rng)
    objective = PhaseObjective(target, x)

    p_uniform = np.full(m, 1.0 / m)
    if cfg.lam is not None:
        lam = cfg.lam
    else:
        v0 = mass_variance(p_uniform, x)
        lam = 1e-3 * objective.value(p_uniform) / max(v0, 1e-12)

    xsq = np.square(x)

    def fun_grad(p):
        val, grad = objective.value_and_grad(p)
        m1 = p @ x
        val += lam * (p @ xsq - m1**2)
        grad = grad + lam * (xsq - 2.0 * m1 * x)
        return val, grad

    starts = [p_uniform]
    starts.extend(rng.dirichlet(np.ones(m)) for _ in range(cfg.starts - 1))

    best = None
    for p0 in starts:
        p_hat, val = _minimize_from(p0, fun_grad, cfg.max_iters, cfg.tol_grad, cfg.tol_step)
        key = (val, mass_variance(p_hat, x), tuple(p_hat))
        if best is None or key < best[0]:
            best = (key, p_hat)

    p_final = best[1].copy()
    p_final[p_final < 1e-8] = 0.0
    total = p_final.sum()
    if total <= 0:
        raise NumericalFitError("all masses collapsed to zero")
    return DiscreteDistribution(x=x, p=p_final / total)
