"""Cat code states, Yurke-Stoler states and modular photon-number populations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateStateError, ParameterError
from .fock import (
    DiagonalPhase,
    FockVector,
    apply_diagonal,
    coherent_amplitudes,
    coherent_state,
    default_cutoff,
    displace,
)

SERIES_RTOL = 1e-18


@dataclass(frozen=True)
class CatParams:
    alpha: float
    D: int
    mu: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ParameterError("cat radius alpha must be non-negative")
        if self.D < 1:
            raise ParameterError("cat distance D must be a positive integer")
        if self.mu not in (0, 1):
            raise ParameterError("logical index mu must be 0 or 1")
        if self.mu == 1 and self.alpha == 0:
            raise DegenerateStateError("mu=1 cat state at alpha=0 has zero norm")

    @property
    def K(self) -> int:
        return 2 * self.D


@dataclass(frozen=True)
class YSParams:
    alpha: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("component count N must be >= 1")


def cat_normalization(alpha: float, D: int, mu: int) -> float:
    """Normalization constant of the Fock-series cat state (summed to double precision)."""
    params = CatParams(abs(alpha), D, mu)
    r2 = params.alpha ** 2
    if r2 == 0.0:
        return 1.0
    log_r2 = math.log(r2)
    total = 0.0
    m = 0
    while True:
        k = (2 * m + mu) * D
        term = math.exp(k * log_r2 - gammaln(k + 1) - r2)
        total += term
        # terms grow until k ~ |alpha|^2, so only stop on the decreasing side
        if k > r2 and term < SERIES_RTOL * total:
            break
        m += 1
    return total


def cat_state(alpha: float, D: int, mu: int = 0, cutoff: int | None = None) -> FockVector:
    """Cat code basis state |mu_{alpha,D}> with 2D coherent components."""
    params = CatParams(alpha, D, mu)
    if cutoff is None:
        cutoff = default_cutoff(alpha)
    amps = coherent_amplitudes(params.alpha, cutoff)
    n = np.arange(cutoff)
    amps = np.where(n % (2 * D) == (mu * D) % (2 * D), amps, 0.0)
    return FockVector.from_amplitudes(amps, required_cutoff=default_cutoff(alpha))


def logical_state(c0: complex, c1: complex, alpha: float, K: int, cutoff: int | None = None) -> FockVector:
    """c0|0>_K + c1|1>_K in the K-component cat code (coefficients renormalized)."""
    if K < 2 or K % 2:
        raise ParameterError(f"component count K must be even, got {K}")
    norm = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
    if norm == 0.0:
        raise DegenerateStateError("logical coefficients are both zero")
    if cutoff is None:
        cutoff = default_cutoff(alpha)
    amps = np.zeros(cutoff, dtype=complex)
    for mu, c in ((0, c0), (1, c1)):
        if c != 0:
            amps = amps + (c / norm) * cat_state(alpha, K // 2, mu, cutoff).amplitudes
    return FockVector.from_amplitudes(amps)


def plus_state(alpha: float, K: int, cutoff: int | None = None) -> FockVector:
    return logical_state(1.0, 1.0, alpha, K, cutoff)


def minus_state(alpha: float, K: int, cutoff: int | None = None) -> FockVector:
    return logical_state(1.0, -1.0, alpha, K, cutoff)


def ys_phases(N: int) -> np.ndarray:
    """Relative phases xi_m = (pi/4)[N(2m/N - 1)^2 - 1], m = 0..N-1."""
    YSParams(1.0, N)
    m = np.arange(N)
    return 0.25 * np.pi * (N * (2.0 * m / N - 1.0) ** 2 - 1.0)


def ys_component_angles(N: int) -> np.ndarray:
    """Phase-space angles of the YS components -alpha e^{2 pi i m/N}."""
    return np.pi + 2.0 * np.pi * np.arange(N) / N


def ys_state(alpha: float, N: int, cutoff: int | None = None) -> FockVector:
    """sum_m e^{i xi_m} |-alpha e^{i phi_m}>, normalized."""
    YSParams(alpha, N)
    if cutoff is None:
        cutoff = default_cutoff(alpha)
    xi = ys_phases(N)
    amps = np.zeros(cutoff, dtype=complex)
    for m in range(N):
        amps += np.exp(1j * xi[m]) * coherent_amplitudes(-alpha * np.exp(2j * np.pi * m / N), cutoff)
    return FockVector.from_amplitudes(amps, required_cutoff=default_cutoff(alpha))


def ys_kerr_phase(N: int) -> DiagonalPhase:
    """Self-Kerr phase exp(-i pi n^2 / N) accumulated at lambda t = pi / N."""
    return DiagonalPhase.kerr(-np.pi / N)


def kerr_evolve_ys(alpha: float, N: int, cutoff: int | None = None) -> FockVector:
    """YS state generated by Kerr evolution of the coherent state |alpha>.

    The chirp identity is N-periodic in photon number, so
    exp(-i pi n^2/N)|alpha> lands exactly on ys_state(alpha, N) with no
    extra frame rotation.
    """
    return apply_diagonal(coherent_state(alpha, cutoff), ys_kerr_phase(N))


def displaced_ys(alpha: float, N: int, sigma: complex, cutoff: int | None = None) -> FockVector:
    if cutoff is None:
        cutoff = default_cutoff(abs(alpha) + abs(sigma))
    return displace(ys_state(alpha, N, cutoff), sigma)


def modular_populations(state: FockVector, modulus: int) -> np.ndarray:
    """Probability of each residue class n mod modulus."""
    if modulus < 1:
        raise ParameterError("modulus must be positive")
    p = state.probabilities()
    return np.array([p[r::modulus].sum() for r in range(modulus)])


def modular_subspace_probability(state: FockVector, modulus: int, residue: int) -> float:
    if not 0 <= residue < modulus:
        raise ParameterError(f"residue {residue} not in 0..{modulus - 1}")
    return float(state.probabilities()[residue::modulus].sum())
