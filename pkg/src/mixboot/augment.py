"""Mixup pair construction and a generic input-perturbation policy.

The perturbation policy is a feature-vector stand-in for image-space
test-time augmentation: per-dimension multiplicative jitter plus additive
isotropic Gaussian noise, both unbiased.  For reference, a conservative
image pipeline in the same spirit would use brightness/hue/saturation/
contrast jitter ~ U(-0.15, 0.15), horizontal flip ~ Bern(0.5), translation
~ U(-22, 22) px, rotation ~ U(-10 deg, 10 deg) and a 224x224 resize; those
image transforms are documentation only and are not implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

GAMMA_EPS = 1e-12


@dataclass(frozen=True)
class PerturbationPolicy:
    """Additive noise scale and multiplicative jitter half-range, both >= 0.

    The all-zero policy is the identity.
    """

    noise_sigma: float = 0.0
    scale_jitter: float = 0.0

    def __post_init__(self):
        if self.noise_sigma < 0.0 or self.scale_jitter < 0.0:
            raise InvalidInputError("perturbation parameters must be nonnegative")

    @property
    def is_identity(self) -> bool:
        return self.noise_sigma == 0.0 and self.scale_jitter == 0.0


@dataclass(frozen=True)
class MixupPair:
    """One mixed input with the two source labels and the mixing coefficient."""

    mixed_input: np.ndarray
    label_i: int
    label_j: int
    gamma: float
    source_indices: tuple[int, int]


def sample_gamma(alpha: float, rng: np.random.Generator) -> float:
    """One Beta(alpha, alpha) draw via two Gamma draws g1 / (g1 + g2)."""
    if alpha <= 0.0:
        raise InvalidInputError("alpha must be positive")
    g1 = rng.gamma(alpha)
    g2 = rng.gamma(alpha)
    total = g1 + g2
    if total == 0.0:  # double underflow, vanishingly rare for usable alpha
        return 0.5
    return float(np.clip(g1 / total, GAMMA_EPS, 1.0 - GAMMA_EPS))


def mixup_batch(
    inputs: np.ndarray,
    labels: np.ndarray,
    alpha: float,
    rng: np.random.Generator,
    fixed_gamma: float | None = None,
) -> list[MixupPair]:
    """Pair each sample with a permutation partner and mix with its own gamma.

    ``fixed_gamma`` pins the coefficient for every pair (test hook); the
    partner permutation is still drawn so the pairing stays comparable.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels)
    n = inputs.shape[0]
    if n < 2:
        raise InvalidInputError("mixup needs at least 2 samples")
    partners = rng.permutation(n)
    pairs = []
    for i in range(n):
        j = int(partners[i])
        gamma = float(fixed_gamma) if fixed_gamma is not None else sample_gamma(alpha, rng)
        mixed = gamma * inputs[i] + (1.0 - gamma) * inputs[j]
        pairs.append(
            MixupPair(
                mixed_input=mixed,
                label_i=int(labels[i]),
                label_j=int(labels[j]),
                gamma=gamma,
                source_indices=(i, j),
            )
        )
    return pairs


def perturb(
    inputs: np.ndarray, policy: PerturbationPolicy, rng: np.random.Generator
) -> np.ndarray:
    """(inputs * (1 + u)) + n with u ~ U(-jitter, jitter), n ~ N(0, sigma^2).

    Works elementwise on any shape; u is drawn before n so a seeded stream
    reproduces exactly.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if policy.is_identity:
        return x.copy()
    u = rng.uniform(-policy.scale_jitter, policy.scale_jitter, size=x.shape)
    n = rng.normal(0.0, policy.noise_sigma, size=x.shape) if policy.noise_sigma > 0.0 else 0.0
    return x * (1.0 + u) + n
