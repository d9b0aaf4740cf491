"""Maximum mean discrepancy loss with a Gaussian kernel over basis states.

The kernel is K(x, y) = exp(-d(x, y) / (2 sigma)) where d is either the
squared difference of the integer basis labels (default) or the squared
Hamming distance, and sigma is treated as the kernel variance.  Set
``sigma_is_variance=False`` to treat sigma as a standard deviation instead.

The sampled loss uses the unbiased U-statistic for the model-model term; the
target distribution is exact, so the cross and target-target terms need no
estimator.  Gradients come from the parameter-shift rule: with q+- the output
distributions at theta_i +- pi/2,

    grad_i = <K>_{q+,q} - <K>_{q-,q} - <K>_{q+,p} + <K>_{q-,p}

which equals the exact derivative of (q - p)^T K (q - p) because
dq/dtheta_i = (q+ - q-) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ansatz import CircuitSpec
from .bas import TargetDistribution
from .noise import NoiseModel
from .sim import Histogram, circuit_probabilities, sample_histogram

MAX_KERNEL_BITS = 12

DISTANCE_KINDS = ("integer-squared", "hamming-squared")


@dataclass(eq=False)
class KernelSpec:
    """Gaussian kernel over n-bit basis states with a precomputed matrix."""

    n_bits: int
    sigma: float = 0.1
    distance: str = "integer-squared"
    sigma_is_variance: bool = True
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.distance not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance {self.distance!r}")
        if not 1 <= self.n_bits <= MAX_KERNEL_BITS:
            raise ValueError(f"kernel matrix supported for 1..{MAX_KERNEL_BITS} bits")
        index = np.arange(2**self.n_bits)
        if self.distance == "integer-squared":
            d = (index[:, None] - index[None, :]).astype(float) ** 2
        else:
            bits = (index[:, None] >> np.arange(self.n_bits)[None, :]) & 1
            hamming = (bits[:, None, :] != bits[None, :, :]).sum(axis=2)
            d = hamming.astype(float) ** 2
        denom = 2.0 * self.sigma if self.sigma_is_variance else 2.0 * self.sigma**2
        self.matrix = np.exp(-d / denom)


def gaussian_kernel(x: int, y: int, spec: KernelSpec) -> float:
    """Kernel value between two basis states."""
    return float(spec.matrix[x, y])


def mmd_loss(q: Histogram, p: TargetDistribution, spec: KernelSpec) -> float:
    """Squared MMD between a sampled model distribution and the exact target.

    The sample-sample expectation is the U-statistic over distinct sample
    pairs, so the estimate is unbiased.
    """
    n = q.n_shots
    if n < 2:
        raise ValueError("the unbiased estimator needs at least 2 shots")
    c = q.counts.astype(float)
    kc = spec.matrix @ c
    qq = (c @ kc - n) / (n * (n - 1))  # kernel diagonal is exactly 1
    qp = (c / n) @ (spec.matrix @ p.probs)
    pp = p.probs @ spec.matrix @ p.probs
    return float(qq - 2.0 * qp + pp)


def mmd_loss_exact(q_probs, p: TargetDistribution, spec: KernelSpec) -> float:
    """Squared MMD between two exact distributions: (q - p)^T K (q - p)."""
    diff = np.asarray(q_probs, dtype=float) - p.probs
    return float(diff @ spec.matrix @ diff)


def mmd_gradient(
    circuit: CircuitSpec,
    theta,
    p: TargetDistribution,
    spec: KernelSpec,
    mode: str = "exact",
    n_shots: int | None = None,
    rng: np.random.Generator | None = None,
    noise: NoiseModel | None = None,
) -> np.ndarray:
    """Parameter-shift gradient of the MMD loss.

    In ``sampled`` mode the unshifted distribution and the two shifted
    distributions per parameter are all estimated from fresh independent
    ``n_shots`` histograms, drawn from generators spawned off ``rng`` (one
    per shifted evaluation, so evaluation order cannot change the result).
    ``exact`` mode uses exact output distributions throughout.
    """
    theta = np.asarray(theta, dtype=float)
    n_params = circuit.parameter_count
    sampled = mode == "sampled"
    if mode not in ("sampled", "exact"):
        raise ValueError(f"unknown gradient mode {mode!r}")
    if sampled:
        if n_shots is None or rng is None:
            raise ValueError("sampled mode needs n_shots and rng")
        streams = rng.spawn(2 * n_params + 1)

    def distribution(angles, stream_index: int) -> np.ndarray:
        probs = circuit_probabilities(circuit, angles, noise)
        if sampled:
            return sample_histogram(probs, n_shots, streams[stream_index]).empirical()
        return probs

    q = distribution(theta, 0)
    weight = spec.matrix @ (q - p.probs)
    grad = np.empty(n_params)
    for i in range(n_params):
        shifted = theta.copy()
        shifted[i] = theta[i] + math.pi / 2.0
        q_plus = distribution(shifted, 1 + 2 * i)
        shifted[i] = theta[i] - math.pi / 2.0
        q_minus = distribution(shifted, 2 + 2 * i)
        grad[i] = (q_plus - q_minus) @ weight
    return grad
