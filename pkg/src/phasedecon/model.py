"""Target distributions, measurement-error laws, and synthetic data generation.

Three unit-variance target laws are supported:

  * ``chisq3``    -- chi-square(3) divided by sqrt(6); right skewed
  * ``mixture1``  -- (0.5 N(1,1) + 0.5 chi-square(5)) / sqrt(9.5); right skewed
  * ``mixture2``  -- (0.5 N(5, 0.6^2) + 0.5 N(2.5, 1)) / sqrt(2.2425); bimodal

Observed data follow W_ij = X_i + tau_i * e_ij with standardized errors e_ij
(normal or Laplace, unit variance) and tau_i^2 = J * sigma_i^2, so that the
per-observation averages W_i = mean_j(W_ij) carry error variance sigma_i^2.
The per-observation variances sigma_i^2 come from one of three structures:

  * case 1 -- sigma_i^2 = 0.025 * sx2 for the first half, 0.975 * sx2 for the rest
  * case 2 -- sigma_i^2 = (0.25 + 0.5 * i/n) * sx2,  i = 1..n
  * case 3 -- sigma_i^2 = (0.025 + 0.95 * i/n) * sx2, i = 1..n

where sx2 is the variance of the target law (1 for the built-in specs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

TARGET_KINDS = ("chisq3", "mixture1", "mixture2")
ERROR_LAWS = ("normal", "laplace")

_CHI3_SCALE = np.sqrt(6.0)
_MIX1_SCALE = np.sqrt(9.5)
_MIX2_SCALE = np.sqrt(2.2425)


@dataclass(frozen=True)
class TrueDensitySpec:
    """One of the built-in unit-variance target laws, selected by ``kind``."""

    kind: str

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}; expected one of {TARGET_KINDS}")

    @property
    def mean(self) -> float:
        if self.kind == "chisq3":
            return 3.0 / _CHI3_SCALE
        if self.kind == "mixture1":
            return 3.0 / _MIX1_SCALE
        return 3.75 / _MIX2_SCALE

    @property
    def variance(self) -> float:
        return 1.0

    def density(self, xs) -> np.ndarray:
        """Pointwise density, using change of variables for the scaling constant."""
        xs = np.asarray(xs, dtype=float)
        if self.kind == "chisq3":
            s = _CHI3_SCALE
            return s * stats.chi2.pdf(s * xs, df=3)
        if self.kind == "mixture1":
            s = _MIX1_SCALE
            return s * (0.5 * stats.norm.pdf(s * xs, loc=1.0, scale=1.0)
                        + 0.5 * stats.chi2.pdf(s * xs, df=5))
        s = _MIX2_SCALE
        return s * (0.5 * stats.norm.pdf(s * xs, loc=5.0, scale=0.6)
                    + 0.5 * stats.norm.pdf(s * xs, loc=2.5, scale=1.0))

    def cf(self, ts) -> np.ndarray:
        """Characteristic function.

        The chi-square factors (1 - 2iu)^(-k/2) stay on the principal branch:
        Re(1 - 2iu) = 1 > 0 for all real u, so the power never crosses the
        negative real axis and is continuous in t.
        """
        ts = np.asarray(ts, dtype=float)
        if self.kind == "chisq3":
            u = ts / _CHI3_SCALE
            return (1.0 - 2.0j * u) ** -1.5
        if self.kind == "mixture1":
            u = ts / _MIX1_SCALE
            return 0.5 * np.exp(1.0j * u - 0.5 * u**2) + 0.5 * (1.0 - 2.0j * u) ** -2.5
        u = ts / _MIX2_SCALE
        return (0.5 * np.exp(5.0j * u - 0.5 * 0.36 * u**2)
                + 0.5 * np.exp(2.5j * u - 0.5 * u**2))

    def phase(self, ts, tiny: float = 1e-14):
        """Normalized characteristic function cf/|cf| on ``ts``.

        Returns ``(phase, valid)`` where ``valid`` flags grid points with
        |cf| >= tiny; excluded points carry phase 0.
        """
        cf = self.cf(ts)
        mod = np.abs(cf)
        valid = mod >= tiny
        out = np.zeros_like(cf)
        np.divide(cf, mod, out=out, where=valid)
        return out, valid

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "chisq3":
            return rng.chisquare(3, size=size) / _CHI3_SCALE
        if self.kind == "mixture1":
            pick = rng.random(size) < 0.5
            z = np.where(pick, rng.normal(1.0, 1.0, size=size), rng.chisquare(5, size=size))
            return z / _MIX1_SCALE
        pick = rng.random(size) < 0.5
        z = np.where(pick, rng.normal(5.0, 0.6, size=size), rng.normal(2.5, 1.0, size=size))
        return z / _MIX2_SCALE


def standard_error_cf(law: str):
    """CF of the standardized (zero-mean, unit-variance) error law, as a callable."""
    if law == "normal":
        return lambda u: np.exp(-0.5 * np.square(np.asarray(u, dtype=float)))
    if law == "laplace":
        # variance 1 means scale b = 1/sqrt(2); CF = 1 / (1 + b^2 u^2)
        return lambda u: 1.0 / (1.0 + 0.5 * np.square(np.asarray(u, dtype=float)))
    raise ValueError(f"unknown error law {law!r}; expected one of {ERROR_LAWS}")


def _sample_standard_errors(law: str, rng: np.random.Generator, shape) -> np.ndarray:
    if law == "normal":
        return rng.standard_normal(shape)
    if law == "laplace":
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size=shape)
    raise ValueError(f"unknown error law {law!r}; expected one of {ERROR_LAWS}")


@dataclass(frozen=True)
class ErrorSpec:
    """Measurement-error law plus a variance structure and replicate count."""

    law: str = "normal"
    case: int = 1
    replicates: int = 1
    sigma_x_sq: float = 1.0  # target variance the structure is proportional to

    def __post_init__(self):
        if self.law not in ERROR_LAWS:
            raise ValueError(f"unknown error law {self.law!r}; expected one of {ERROR_LAWS}")
        if self.case not in (1, 2, 3):
            raise ValueError(f"variance case must be 1, 2 or 3, got {self.case}")
        if self.replicates < 1:
            raise ValueError("replicate count must be >= 1")

    def sigma_sq(self, n: int) -> np.ndarray:
        """Average-level error variances sigma_i^2, i = 1..n."""
        sx2 = self.sigma_x_sq
        if self.case == 1:
            if n % 2 != 0:
                raise ValueError("case 1 splits the sample in half; n must be even")
            out = np.empty(n)
            out[: n // 2] = 0.025 * sx2
            out[n // 2:] = 0.975 * sx2
            return out
        i = np.arange(1, n + 1)
        if self.case == 2:
            return (0.25 + 0.5 * i / n) * sx2
        return (0.025 + 0.95 * i / n) * sx2

    def tau_sq(self, n: int) -> np.ndarray:
        """Observation-level variances tau_i^2 = J * sigma_i^2."""
        return self.replicates * self.sigma_sq(n)

    def cf(self):
        return standard_error_cf(self.law)


@dataclass
class ReplicateDataset:
    """Raw replicate measurements, one row of n_i values per observation."""

    rows: list
    ids: np.ndarray

    def __post_init__(self):
        self.rows = [np.asarray(r, dtype=float).ravel() for r in self.rows]
        self.ids = np.asarray(self.ids)
        if len(self.rows) != len(self.ids):
            raise ValueError("ids and rows must have equal length")
        if len(self.rows) < 2:
            raise ValueError("need at least 2 observations")
        for rid, row in zip(self.ids, self.rows):
            if row.size < 1:
                raise ValueError(f"observation {rid} has no measurements")
            if not np.all(np.isfinite(row)):
                raise ValueError(f"observation {rid} has non-finite measurements")

    @classmethod
    def from_matrix(cls, values, ids=None) -> "ReplicateDataset":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ValueError("expected an n x J matrix")
        if ids is None:
            ids = np.arange(values.shape[0])
        return cls(rows=list(values), ids=ids)

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.size for r in self.rows])

    def as_matrix(self) -> np.ndarray:
        counts = self.counts
        if not np.all(counts == counts[0]):
            raise ValueError("rows have unequal replicate counts")
        return np.vstack(self.rows)


@dataclass
class ObservationSet:
    """Collapsed observations with per-observation error SDs and weights.

    ``q`` may be None until filled by a weight constructor; once set it must
    be a probability vector.
    """

    w: np.ndarray
    sigma: np.ndarray
    q: np.ndarray | None = None

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float).ravel()
        if self.w.size == 0:
            raise ValueError("observation set is empty")
        if self.sigma.size != self.w.size:
            raise ValueError("w and sigma must have equal length")
        if np.any(self.sigma < 0):
            raise ValueError("error SDs must be non-negative")
        if self.q is not None:
            self.q = np.asarray(self.q, dtype=float).ravel()
            if self.q.size != self.w.size:
                raise ValueError("q and w must have equal length")
            if np.any(self.q < 0):
                raise ValueError("weights must be non-negative")
            if abs(self.q.sum() - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1")

    @property
    def n(self) -> int:
        return self.w.size

    def with_weights(self, q) -> "ObservationSet":
        return ObservationSet(w=self.w, sigma=self.sigma, q=q)


def sample_dataset(spec: TrueDensitySpec, err: ErrorSpec, n: int, seed):
    """Draw a synthetic replicate dataset W_ij = X_i + tau_i e_ij.

    Returns ``(ReplicateDataset, latent_x)``; the latent sample is exposed for
    oracle scoring only. Deterministic given ``seed`` (an int or SeedSequence).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    x = spec.sample(rng, n)
    tau = np.sqrt(err.tau_sq(n))
    e = _sample_standard_errors(err.law, rng, (n, err.replicates))
    values = x[:, None] + tau[:, None] * e
    return ReplicateDataset.from_matrix(values), x
