"""Loss-parameter calibration from coherent-probe intensity measurements.

A multi-mode coherent probe of known total intensity M = sum |alpha_i|^2 is
sent through the device; uniform loss gamma scales the mean output photon
number to (1 - gamma) M regardless of any passive linear optics in between
(energy conservation), so gamma_hat = 1 - N_out / M.  Coherent states make
the shot sampling exact and cheap: the per-mode output photon numbers are
independent Poissons with means (1 - gamma) |alpha_i|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ProbeConfig:
    """Coherent-probe amplitudes and shot budget for one calibration run."""

    amplitudes: tuple
    n_shots: int
    assume_passive_ideal: bool = True

    def __post_init__(self):
        if self.n_shots < 1:
            raise ValueError("n_shots must be >= 1")
        if self.total_intensity <= 0.0:
            raise ValueError("probe needs nonzero total intensity")

    @property
    def total_intensity(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes))


@dataclass(frozen=True)
class GammaEstimate:
    gamma_hat: float
    variance: float
    n_shots_used: int

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be >= 0")


@dataclass(frozen=True)
class LossyDevice:
    """Uniform loss followed by optional passive linear optics.

    ``mode_transform`` is a unitary acting on the coherent amplitudes; it
    conserves total intensity, so the calibration is insensitive to it.
    """

    gamma: float
    mode_transform: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        u = self.mode_transform
        if u is not None:
            defect = np.abs(u @ u.conj().T - np.eye(u.shape[0])).max()
            if defect > 1e-10:
                raise ValueError("mode transform must be unitary")

    def output_means(self, amplitudes) -> np.ndarray:
        """Mean output photon number per mode for a coherent probe."""
        beta = np.asarray(amplitudes, dtype=complex)
        if self.mode_transform is not None:
            beta = self.mode_transform @ beta
        return (1.0 - self.gamma) * np.abs(beta) ** 2


def estimate_gamma(probe: ProbeConfig, device: LossyDevice,
                   seed: int) -> GammaEstimate:
    """Estimate a uniform loss parameter from sampled probe intensities.

    Each shot draws the per-mode output photon numbers from the exact
    product-Poisson distribution of the lossy coherent state and records
    1 - N_total / M; the estimate is the mean of these with its empirical
    standard error squared attached.
    """
    from .protocol import derive_rng

    rng = derive_rng(seed, "calibration")
    m_in = probe.total_intensity
    means = device.output_means(probe.amplitudes)
    counts = rng.poisson(means, size=(probe.n_shots, len(means))).sum(axis=1)
    per_shot = 1.0 - counts / m_in
    gamma_hat = float(per_shot.mean())
    var = float(per_shot.var(ddof=1)) / probe.n_shots if probe.n_shots > 1 else 0.0
    return GammaEstimate(gamma_hat, var, probe.n_shots)


def estimate_gamma_averaged(probes, device: LossyDevice,
                            seed: int) -> GammaEstimate:
    """Average independent estimates over several probe amplitude sets."""
    probes = list(probes)
    if not probes:
        raise ValueError("need at least one probe configuration")
    ests = [estimate_gamma(p, device, seed + i) for i, p in enumerate(probes)]
    k = len(ests)
    gamma_hat = sum(e.gamma_hat for e in ests) / k
    var = sum(e.variance for e in ests) / k ** 2
    return GammaEstimate(gamma_hat, var, sum(e.n_shots_used for e in ests))


def predicted_variance(gamma: float, n_shots: int, total_intensity: float) -> float:
    """Shot-noise variance of gamma_hat: (1 - gamma)^2 / (N sum |alpha_i|^2)."""
    return (1.0 - gamma) ** 2 / (n_shots * total_intensity)


def plan_shots(target_accuracy: float, confidence: float,
               total_intensity: float) -> int:
    """Minimal shot count from the Chebyshev bound Var / eps^2 <= 1 - conf.

    Uses the worst case (1 - gamma)^2 <= 1, so the requirement becomes
    N > 1 / (M eps^2 (1 - confidence)).  A confidence of zero (or below)
    makes the bound vacuous; the floor is one shot.
    """
    if not 0.0 < target_accuracy < 1.0:
        raise ConfigError("target accuracy must lie in (0, 1)")
    if confidence >= 1.0:
        raise ConfigError("confidence must lie below 1")
    if total_intensity <= 0.0:
        raise ConfigError("total intensity must be positive")
    if confidence <= 0.0:
        return 1
    bound = 1.0 / (total_intensity * target_accuracy ** 2 * (1.0 - confidence))
    # snap to the nearest integer when round-off is the only thing keeping
    # the bound off it, so the strict inequality N > bound stays exact
    nearest = round(bound)
    if abs(bound - nearest) <= 1e-9 * max(bound, 1.0):
        bound = nearest
    return max(1, int(math.floor(bound)) + 1)
