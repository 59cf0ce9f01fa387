"""Heterodyne measurement, phase binning, modular projection and TVD analytics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf, erfc, gammaincc, gammaln

from .errors import CoverageError, ImpossibleOutcomeError, ParameterError, UndefinedPhaseError
from .fock import FockVector, ModeRegister, coherent_amplitudes

COVERAGE_TOL = 1e-6
Q_WIDTH = 1.0 / math.sqrt(2.0)
TIE_TOL = 1e-12


@dataclass(frozen=True)
class HeterodyneModel:
    """Ideal (continuous outcomes) or finite-LO (outcomes on a square lattice).

    In finite-LO mode the lattice pitch is 1/(2 beta).  ``grid_radius`` bounds
    the outcome region used for the coverage check; ``None`` picks
    max component amplitude + 6 Q widths per measured state.
    """

    mode: str = "ideal"
    beta: Optional[float] = None
    grid_radius: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("ideal", "finite_lo"):
            raise ParameterError(f"unknown heterodyne mode {self.mode!r}")
        if self.mode == "finite_lo" and not (self.beta and self.beta > 0):
            raise ParameterError("finite_lo model needs a positive beta")
        if self.grid_radius is not None and self.grid_radius <= 0:
            raise ParameterError("grid_radius must be positive")

    @classmethod
    def ideal(cls, grid_radius=None) -> "HeterodyneModel":
        return cls("ideal", None, grid_radius)

    @classmethod
    def finite_lo(cls, beta: float, grid_radius=None) -> "HeterodyneModel":
        return cls("finite_lo", beta, grid_radius)

    @property
    def grid_spacing(self) -> Optional[float]:
        return 1.0 / (2.0 * self.beta) if self.mode == "finite_lo" else None

    def quantize(self, gamma: complex) -> complex:
        p = self.grid_spacing
        if p is None:
            return gamma
        # cell centres (i + 1/2) p; the origin is never an outcome
        return complex(p * (math.floor(gamma.real / p) + 0.5), p * (math.floor(gamma.imag / p) + 0.5))


def coherent_bra(gamma: complex, cutoff: int) -> np.ndarray:
    """Row vector <gamma|n>."""
    return np.conj(coherent_amplitudes(gamma, cutoff))


def _outside_mass(diag: np.ndarray, radius: float) -> float:
    n = np.arange(diag.size)
    return float(np.dot(diag, gammaincc(n + 1, radius * radius)))


def required_radius(diag: np.ndarray, tol: float = COVERAGE_TOL) -> float:
    lo, hi = 0.0, math.sqrt(diag.size) + 10.0
    while _outside_mass(diag, hi) > tol:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _outside_mass(diag, mid) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def default_radius(diag: np.ndarray) -> float:
    cum = np.cumsum(diag)
    n_hi = int(np.searchsorted(cum, 1.0 - 1e-9 * cum[-1]))
    return math.sqrt(n_hi) + 6.0 * Q_WIDTH


class HeterodyneSampler:
    """Outcome sampler for one rail of a fixed register.

    Building the sampler diagonalizes the rail's reduced state once; each
    draw then costs a Gamma variate plus one FFT per retained eigenvector.
    """

    def __init__(self, register, rail: int, model: HeterodyneModel):
        if isinstance(register, FockVector):
            register = ModeRegister(register.amplitudes)
        register._check_rail(rail)
        self.register = register
        self.rail = rail
        self.model = model
        rho = register.reduced_density(rail)
        self.cutoff = rho.shape[0]
        self.diag = np.clip(rho.diagonal().real, 0.0, None)
        self.diag = self.diag / self.diag.sum()
        radius = model.grid_radius if model.grid_radius is not None else default_radius(self.diag)
        missing = _outside_mass(self.diag, radius)
        if missing > COVERAGE_TOL:
            need = required_radius(self.diag)
            raise CoverageError(
                f"outcome region of radius {radius:.3f} misses probability {missing:.2e}; "
                f"need radius >= {need:.3f}",
                required_radius=need,
            )
        self.radius = radius
        w, v = np.linalg.eigh(rho)
        keep = w > 1e-14 * w.max()
        self._weights = w[keep]
        self._vectors = v[:, keep]
        self._fft_len = max(1024, 1 << int(math.ceil(math.log2(8 * self.cutoff))))
        self._log_fact = 0.5 * gammaln(np.arange(self.cutoff) + 1)

    def angular_density(self, r: float) -> np.ndarray:
        """Unnormalized Q(r e^{i phi}) on the uniform phi grid."""
        n = np.arange(self.cutoff)
        if r == 0.0:
            x = np.zeros(self.cutoff)
            x[0] = 1.0
        else:
            x = np.exp(n * math.log(r) - self._log_fact - 0.5 * r * r)
        # sum_n x_n v_n e^{-i n phi}: forward FFT of x*v along n
        spec = np.fft.fft(x[:, None] * self._vectors, n=self._fft_len, axis=0)
        return (np.abs(spec) ** 2) @ self._weights

    def draw(self, rng: np.random.Generator) -> complex:
        n = int(rng.choice(self.cutoff, p=self.diag))
        r = math.sqrt(rng.gamma(n + 1.0))
        dens = np.clip(self.angular_density(r), 0.0, None)
        j = int(rng.choice(self._fft_len, p=dens / dens.sum()))
        phi = 2.0 * math.pi * (j + rng.uniform(-0.5, 0.5)) / self._fft_len
        return self.model.quantize(r * complex(math.cos(phi), math.sin(phi)))

    def density(self, gamma: complex) -> float:
        """Husimi density Q(gamma) of the measured rail."""
        bra = coherent_bra(gamma, self.cutoff)
        amp = bra @ self._vectors
        return float(np.dot(np.abs(amp) ** 2, self._weights) / math.pi)

    def project(self, gamma: complex) -> np.ndarray:
        """Unnormalized (<gamma|_rail x I)|Psi>."""
        bra = coherent_bra(gamma, self.cutoff)
        return np.tensordot(bra, self.register.amplitudes, axes=([0], [self.rail]))

    def collapse(self, gamma: complex):
        """Remaining rails after observing ``gamma`` (None if nothing remains)."""
        if self.register.rail_count == 1:
            return None
        rest = self.project(gamma)
        if rest.ndim == 1:
            return FockVector.from_amplitudes(rest)
        return ModeRegister.from_amplitudes(rest)

    def sample(self, rng: np.random.Generator):
        gamma = self.draw(rng)
        return gamma, self.collapse(gamma)


def heterodyne_sample(register, rail: int, model: HeterodyneModel, rng: np.random.Generator):
    """Sample one heterodyne outcome on ``rail``; returns (gamma, collapsed rest)."""
    return HeterodyneSampler(register, rail, model).sample(rng)


@dataclass(frozen=True)
class PhaseBinning:
    """K equal angular bins over [0, 2pi); bin k centred on 2 pi k/K + frame_offset."""

    K: int
    frame_offset: float = 0.0

    def __post_init__(self):
        if self.K < 1:
            raise ParameterError("binning needs K >= 1")

    def shifted(self, theta: float) -> "PhaseBinning":
        return PhaseBinning(self.K, self.frame_offset + theta)

    def center(self, k: int) -> float:
        return 2.0 * math.pi * k / self.K + self.frame_offset


def phase_bin(gamma: complex, binning: PhaseBinning) -> int:
    """Index of the nearest decision sector; exact ties go to the smaller index."""
    if gamma == 0:
        raise UndefinedPhaseError("phase of gamma = 0 is undefined")
    K = binning.K
    x = K * (math.atan2(gamma.imag, gamma.real) - binning.frame_offset) / (2.0 * math.pi)
    lo = math.floor(x)
    frac = x - lo
    if abs(frac - 0.5) < TIE_TOL:
        return min(lo % K, (lo + 1) % K)
    return int(lo + (1 if frac > 0.5 else 0)) % K


def modular_project(state: FockVector, K: int, k: int):
    """Projection onto photon numbers congruent to k mod K; returns (probability, state)."""
    if not 0 <= k < K:
        raise ParameterError(f"residue {k} not in 0..{K - 1}")
    n = np.arange(state.cutoff)
    amps = np.where(n % K == k, state.amplitudes, 0.0)
    prob = float(np.vdot(amps, amps).real)
    if prob == 0.0:
        raise ImpossibleOutcomeError(f"no support on n = {k} mod {K}")
    return prob, FockVector.from_amplitudes(amps)


def tvd_gaussian(mu1: float, mu2: float, sigma: float):
    """TVD between equal-variance Gaussians and the single-trial error (1 - TVD)/2."""
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    x = abs(mu1 - mu2) / (2.0 * math.sqrt(2.0) * sigma)
    return float(erf(x)), 0.5 * float(erfc(x))


def tvd_cat(alpha: float, D: int):
    """Neighbouring-component TVD for a 2D-component cat: (erf form, first Burmann term)."""
    if D < 1:
        raise ParameterError("D must be >= 1")
    separation = 2.0 * abs(alpha) * math.sin(math.pi / (2 * D))
    exact = float(erf(separation / math.sqrt(2.0)))
    approx = 1.0 - math.exp(-0.5 * separation ** 2)
    return exact, approx


def cat_single_trial_error(alpha: float, D: int) -> float:
    """(1 - TVD)/2 for neighbouring components, via erfc to keep relative precision."""
    if D < 1:
        raise ParameterError("D must be >= 1")
    separation = 2.0 * abs(alpha) * math.sin(math.pi / (2 * D))
    return 0.5 * float(erfc(separation / math.sqrt(2.0)))
