"""Probability primitives: diagonal Gaussians, Gumbel-Softmax, categorical divergences.

All divergences are in nats.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericsError, ShapeError
from .tensor import Tensor, straight_through_hard

_NOISE_CLAMP = 1e-12


@dataclass
class GaussianPosterior:
    """Diagonal Gaussian q(z|x) with differentiable mu and log-variance.

    mu and log_var are Tensors of equal shape; for batched posteriors the
    last axis is the latent dimension.
    """

    mu: Tensor
    log_var: Tensor

    def __post_init__(self):
        if not isinstance(self.mu, Tensor):
            self.mu = Tensor(self.mu)
        if not isinstance(self.log_var, Tensor):
            self.log_var = Tensor(self.log_var)
        if self.mu.shape != self.log_var.shape:
            raise ShapeError(f"mu/log_var shape mismatch: {self.mu.shape} vs {self.log_var.shape}")


@dataclass
class Categorical:
    """Explicit finite distribution on the probability simplex."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(self.probs < -1e-12) or abs(self.probs.sum() - 1.0) > 1e-9:
            raise DomainError("probs must be nonnegative and sum to 1")
        self.probs = np.clip(self.probs, 0.0, None)

    def __len__(self):
        return self.probs.size


@dataclass
class GumbelConfig:
    temperature: float = 1.0
    hard: bool = False

    def __post_init__(self):
        if self.temperature <= 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")


def reparam_sample(q: GaussianPosterior, noise) -> Tensor:
    """z = mu + exp(log_var / 2) * noise, differentiable w.r.t. (mu, log_var)."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != q.mu.shape:
        raise ShapeError(f"noise shape {noise.shape} != posterior shape {q.mu.shape}")
    return q.mu + (q.log_var * 0.5).exp() * Tensor(noise)


def kl_gauss_std(q: GaussianPosterior) -> Tensor:
    """KL(q || N(0, I)), summed over the last axis.

    Returns a scalar Tensor for a 1-D posterior and a per-row vector for a
    batched 2-D posterior.
    """
    if not (np.all(np.isfinite(q.mu.data)) and np.all(np.isfinite(q.log_var.data))):
        raise NumericsError("non-finite posterior parameters")
    axis = q.mu.data.ndim - 1
    term = q.mu * q.mu + q.log_var.exp() - q.log_var
    return (term.sum(axis=axis) - q.mu.shape[-1]) * 0.5


def gumbel_softmax(logits, cfg: GumbelConfig, uniform_noise) -> Tensor:
    """Relaxed one-hot sample: softmax((logits + g) / tau), g = -log(-log(u)).

    With cfg.hard the forward value is the exact one-hot argmax while
    gradients flow through the soft sample (straight-through).
    """
    if cfg.temperature <= 0:
        raise DomainError("temperature must be positive")
    logits = logits if isinstance(logits, Tensor) else Tensor(logits)
    u = np.clip(np.asarray(uniform_noise, dtype=np.float64), _NOISE_CLAMP, 1.0 - _NOISE_CLAMP)
    if u.shape != logits.shape:
        raise ShapeError(f"noise shape {u.shape} != logits shape {logits.shape}")
    g = -np.log(-np.log(u))
    y = ((logits + Tensor(g)) * (1.0 / cfg.temperature)).softmax()
    if cfg.hard:
        return straight_through_hard(y)
    return y


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_categorical(p: Categorical, q: Categorical) -> float:
    """KL(p || q) with 0 log(0/x) = 0; +inf when absolute continuity fails."""
    if len(p) != len(q):
        raise ShapeError(f"support size mismatch: {len(p)} vs {len(q)}")
    return _kl_raw(p.probs, q.probs)


def js_categorical(p: Categorical, q: Categorical) -> float:
    """Jensen-Shannon divergence; symmetric, bounded by ln 2."""
    if len(p) != len(q):
        raise ShapeError(f"support size mismatch: {len(p)} vs {len(q)}")
    m = 0.5 * (p.probs + q.probs)
    return 0.5 * _kl_raw(p.probs, m) + 0.5 * _kl_raw(q.probs, m)


def entropy(p: Categorical) -> float:
    mask = p.probs > 0
    return float(-np.sum(p.probs[mask] * np.log(p.probs[mask])))
