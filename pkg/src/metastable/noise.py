"""Gradient-noise models and their sampling/statistics interfaces.

Each model describes the additive error term in the stochastic gradient
``grad f(x) + err``.  The models expose a sub-Gaussian proxy variance (used
for Lagrangian lower bounds and conjugate warm starts), optional low/high
variance proxies (for interpretable cost bounds), and a deterministic
sampler driven by a caller-supplied generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedModel


def truncation_error_factor(variance, radius, dim):
    """Multiplicative sandwich error for a radius-truncated Gaussian."""
    return 2.0 ** (dim + 3) * (dim + 1) * np.exp(-(radius**2) / (16.0 * variance))


def truncation_radius_floor(variance, dim):
    """Smallest truncation radius for which the sandwich bounds are certified."""
    return 4.0 * np.sqrt(variance) * np.sqrt((dim + 3) * np.log(2.0) + np.log(dim + 1.0))


@dataclass
class IsotropicGaussian:
    variance: float
    dim: int

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")

    @property
    def proxy_variance(self):
        return self.variance

    @property
    def variance_low(self):
        return self.variance

    @property
    def variance_high(self):
        return self.variance

    def sample(self, rng, n):
        return np.sqrt(self.variance) * rng.standard_normal((n, self.dim))


@dataclass
class TruncatedGaussian:
    variance: float
    radius: float
    dim: int

    def __post_init__(self):
        if self.variance <= 0 or self.radius <= 0:
            raise ValueError("variance and radius must be positive")

    @property
    def error_factor(self):
        return float(truncation_error_factor(self.variance, self.radius, self.dim))

    @property
    def radius_certified(self):
        return self.radius >= truncation_radius_floor(self.variance, self.dim)

    @property
    def proxy_variance(self):
        eps = self.error_factor if self.radius_certified else 1.0
        return self.variance * (1.0 + eps)

    @property
    def variance_low(self):
        eps = self.error_factor if self.radius_certified else 1.0
        return self.variance * (1.0 - 2.0 * eps)

    @property
    def variance_high(self):
        return self.proxy_variance

    def sample(self, rng, n):
        out = np.sqrt(self.variance) * rng.standard_normal((n, self.dim))
        bad = np.linalg.norm(out, axis=1) > self.radius
        while bad.any():
            k = int(bad.sum())
            out[bad] = np.sqrt(self.variance) * rng.standard_normal((k, self.dim))
            bad = np.linalg.norm(out, axis=1) > self.radius
        return out


@dataclass
class FiniteSupport:
    atoms: np.ndarray  # (m, dim)
    probs: np.ndarray  # (m,)

    def __post_init__(self):
        self.atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        self.probs = np.asarray(self.probs, dtype=float)
        if self.atoms.shape[0] != self.probs.shape[0]:
            raise ValueError("atoms and probs length mismatch")
        if abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be non-negative")
        mean = self.probs @ self.atoms
        if np.linalg.norm(mean) > 1e-10:
            raise ValueError("finite-support noise must have zero mean within 1e-10")

    @property
    def dim(self):
        return self.atoms.shape[1]

    @property
    def proxy_variance(self):
        # bounded support: Hoeffding proxy from the largest atom norm
        return float(np.max(np.linalg.norm(self.atoms, axis=1)) ** 2)

    @property
    def variance_high(self):
        return self.proxy_variance

    @property
    def variance_low(self):
        cov = (self.atoms * self.probs[:, None]).T @ self.atoms
        return float(np.min(np.linalg.eigvalsh(cov)))

    def sample(self, rng, n):
        idx = rng.choice(self.atoms.shape[0], size=n, p=self.probs)
        return self.atoms[idx]


@dataclass
class StateDependentGaussian:
    """Isotropic Gaussian whose variance is a function of the objective value."""

    variance_fn: callable
    dim: int
    f_range: tuple[float, float] | None = None  # for variance proxies

    @property
    def proxy_variance(self):
        return self.variance_high

    def _range(self):
        if self.f_range is None:
            raise UnsupportedModel(
                "state-dependent Gaussian needs f_range to expose variance proxies"
            )
        return self.f_range

    @property
    def variance_low(self):
        lo, hi = self._range()
        zs = np.linspace(lo, hi, 512)
        return float(min(self.variance_fn(z) for z in zs))

    @property
    def variance_high(self):
        lo, hi = self._range()
        zs = np.linspace(lo, hi, 512)
        return float(max(self.variance_fn(z) for z in zs))

    def variance_at(self, f_value):
        v = float(self.variance_fn(f_value))
        if v <= 0:
            raise ValueError("variance_fn must be positive")
        return v

    def sample(self, rng, n, f_value=0.0):
        return np.sqrt(self.variance_at(f_value)) * rng.standard_normal((n, self.dim))


def gaussian_like(noise):
    """True when the model admits closed-form Hamiltonian/Lagrangian/costs."""
    return isinstance(noise, (IsotropicGaussian, StateDependentGaussian))
