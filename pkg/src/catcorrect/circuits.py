"""Tele-correction, projective Hadamard and modular photon-number circuits.

All controlled rotations use exp(i chi n_a n_b) with chi = 4 pi / (A B), A and
B being the component counts of the coupled rails (a coherent rail counts as
1).  Measured rails are heterodyned and binned against their component
angles; known rotations and loss exponents on ancillae are absorbed into
decision-line offsets and output frames rather than corrected physically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .fock import (
    DiagonalPhase,
    FockVector,
    ModeRegister,
    annihilate_pow,
    apply_rail_diagonal,
    apply_two_rail_phase,
    controlled_rotation,
    rotate,
)
from .measurement import HeterodyneModel, HeterodyneSampler, PhaseBinning, phase_bin
from .states import logical_state, modular_subspace_probability, plus_state, minus_state


def gate_strength(a: int, b: int) -> float:
    return 4.0 * math.pi / (a * b)


@dataclass(frozen=True)
class FrameTag:
    """Known deviation e^{i theta n} a^m of a rail from its nominal state."""

    theta: float = 0.0
    m: int = 0

    def __post_init__(self):
        if self.m < 0:
            raise ParameterError("loss exponent must be non-negative")

    def compose(self, other: "FrameTag") -> "FrameTag":
        return FrameTag(self.theta + other.theta, self.m + other.m)

    def __add__(self, other: "FrameTag") -> "FrameTag":
        return self.compose(other)

    @property
    def trivial(self) -> bool:
        return self.theta == 0.0 and self.m == 0

    def apply(self, state: FockVector) -> FockVector:
        """e^{i theta n} a^m |state>, renormalized."""
        return rotate(annihilate_pow(state, self.m), self.theta)


def frame_update(tag: FrameTag, chi) -> tuple:
    """Decision-line offset for a tagged rail and the rotation its partners inherit.

    ``chi`` is one coupling strength or a sequence of them, one per partner
    coupled through exp(i chi n n').  Commuting a^m through that gate leaves
    each partner lagging by exp(-i chi m n'); the returned partner values are
    the magnitudes chi*m of those lags.
    """
    chis = (chi,) if np.isscalar(chi) else tuple(chi)
    return tag.theta, tuple(c * tag.m for c in chis)


@dataclass(frozen=True)
class CircuitOutcome:
    indices: tuple
    raw_outcomes: tuple
    output: FockVector
    frames: tuple = field(default_factory=tuple)

    @property
    def frame(self) -> FrameTag:
        return self.frames[0] if self.frames else FrameTag()


# modular photon-number measurement


def ys_quadratic_correction(K: int, N: int) -> DiagonalPhase:
    """Self-Kerr phase cancelling the quadratic YS phase inherited by the target."""
    return DiagonalPhase.kerr(-4.0 * math.pi / (K * K * N))


def ys_linear_frame(K: int, N: int, position: int, residue: int) -> float:
    """Rotation left on the target after the quadratic correction (probe slot ``position``)."""
    return (2.0 / K) * (math.pi - 2.0 * math.pi * position / N - 4.0 * math.pi * residue / (K * N))


class ModularMeasurement:
    """Prepared modular photon-number measurement (Fig. 1 (c) wiring).

    The target is rotated-coupled to a probe with ``N`` components; the probe
    phase read against K*N/2 sectors identifies the target photon number mod
    K/2, leaving the target near a^{K/2-r} |+>_K.
    """

    def __init__(
        self,
        target: FockVector,
        probe: FockVector,
        K: int,
        N: int,
        model: HeterodyneModel,
        correct_ys_phases: bool = False,
        probe_is_ys: bool | None = None,
        binning_offset: float = 0.0,
        output_rotation: float = 0.0,
    ):
        if K < 2 or K % 2:
            raise ParameterError(f"K must be even, got {K}")
        if N < 1:
            raise ParameterError("probe component count must be >= 1")
        self.K, self.N = K, N
        self.chi = gate_strength(K, N)
        self.correct_ys_phases = correct_ys_phases
        self.output_rotation = output_rotation
        self.probe_is_ys = correct_ys_phases if probe_is_ys is None else probe_is_ys
        offset = binning_offset + (math.pi if self.probe_is_ys else 0.0)
        self.binning = PhaseBinning(K * N // 2, offset)
        reg = controlled_rotation(ModeRegister.product(target, probe), 0, 1, self.chi)
        if correct_ys_phases:
            reg = apply_rail_diagonal(reg, 0, ys_quadratic_correction(K, N))
        self.register = reg
        self.sampler = HeterodyneSampler(reg, 1, model)

    def interpret(self, gamma: complex):
        """(reported index k, residue mod K/2, output frame) for a probe outcome."""
        u = phase_bin(gamma, self.binning)
        half = self.K // 2
        k = u % self.K
        residue = u % half
        theta = self.output_rotation
        if self.correct_ys_phases:
            theta += ys_linear_frame(self.K, self.N, u // half, residue)
        return k, residue, FrameTag(theta, half - residue)

    def run(self, rng: np.random.Generator) -> CircuitOutcome:
        gamma = self.sampler.draw(rng)
        out = self.sampler.collapse(gamma)
        k, _, frame = self.interpret(gamma)
        return CircuitOutcome((k,), (gamma,), out, (frame,))


def mod_photon_measure(
    target: FockVector,
    probe: FockVector,
    K: int,
    N_probe: int,
    model: HeterodyneModel,
    correct_ys_phases: bool = False,
    rng: np.random.Generator | None = None,
) -> CircuitOutcome:
    rng = np.random.default_rng() if rng is None else rng
    return ModularMeasurement(target, probe, K, N_probe, model, correct_ys_phases).run(rng)


# projective Hadamard gadget and tele-correction


class HadamardGadget:
    """Controlled rotation into an ancilla, then phase readout of the data rail."""

    def __init__(
        self,
        data: FockVector,
        K: int,
        ancilla: FockVector,
        M: int,
        model: HeterodyneModel,
        binning_offset: float = 0.0,
    ):
        for name, v in (("K", K), ("M", M)):
            if v < 2 or v % 2:
                raise ParameterError(f"{name} must be even, got {v}")
        self.K, self.M = K, M
        self.chi = gate_strength(K, M)
        self.binning = PhaseBinning(K, binning_offset)
        reg = controlled_rotation(ModeRegister.product(data, ancilla), 0, 1, self.chi)
        self.sampler = HeterodyneSampler(reg, 0, model)

    def run(self, rng: np.random.Generator) -> CircuitOutcome:
        gamma = self.sampler.draw(rng)
        out = self.sampler.collapse(gamma)
        return CircuitOutcome((phase_bin(gamma, self.binning),), (gamma,), out, (FrameTag(),))


def hadamard_gadget(
    data: FockVector,
    K: int,
    ancilla: FockVector,
    M: int,
    model: HeterodyneModel,
    rng: np.random.Generator | None = None,
    binning_offset: float = 0.0,
) -> CircuitOutcome:
    rng = np.random.default_rng() if rng is None else rng
    return HadamardGadget(data, K, ancilla, M, model, binning_offset).run(rng)


def _looks_like_code_ancilla(state: FockVector, M: int) -> bool:
    return M > 2 and modular_subspace_probability(state, M // 2, 0) > 1 - 1e-6


class TeleCorrection:
    """Two chained Hadamard gadgets: data (K) -> ancilla (M) -> ancilla (N).

    ``frames`` holds the known deviation of each ancilla from |+>; with
    ``track_frames`` the decision lines and output frame are adjusted for
    them.  ``ys_rail='second'`` treats ancilla 1 as an M-component YS state:
    all three rails are evolved jointly, the cross-Kerr correction on rails
    1 and 3 is applied before readout, and the residual linear phases are
    tracked from the rail-2 slot index.
    """

    def __init__(
        self,
        data: FockVector,
        K: int,
        anc1: FockVector,
        M: int,
        anc2: FockVector,
        N: int,
        model: HeterodyneModel,
        ys_rail: str = "none",
        frames: Sequence[FrameTag] = (FrameTag(), FrameTag()),
        track_frames: bool = True,
    ):
        if ys_rail not in ("none", "first", "second"):
            raise ParameterError(f"ys_rail must be none, first or second, got {ys_rail!r}")
        for name, v in (("K", K), ("M", M), ("N", N)):
            if v < 2 or v % 2:
                raise ParameterError(f"{name} must be even, got {v}")
        if ys_rail == "second" and _looks_like_code_ancilla(anc1, M):
            raise ParameterError("ys_rail='second' needs a Yurke-Stoler state on rail 2")
        self.K, self.M, self.N = K, M, N
        self.model = model
        self.ys_rail = ys_rail
        self.chi12 = gate_strength(K, M)
        self.chi23 = gate_strength(M, N)
        tag1, tag2 = frames
        if any(not t.trivial for t in frames) and ys_rail == "second":
            raise ParameterError("frame anomalies are not supported with ys_rail='second'")
        off1 = off2 = 0.0
        out_frame = FrameTag()
        if track_frames:
            theta1, (lag1_data, lag1_out) = frame_update(tag1, (self.chi12, self.chi23))
            theta2, (lag2_mid,) = frame_update(tag2, self.chi23)
            off1 = -lag1_data
            off2 = theta1 - lag2_mid
            out_frame = FrameTag(theta2 - lag1_out, tag2.m)
        self.offsets = (off1, off2)
        self.output_frame = out_frame
        self.anc2 = anc2
        if ys_rail == "second":
            reg = ModeRegister.product(data, anc1, anc2)
            reg = controlled_rotation(reg, 0, 1, self.chi12)
            reg = controlled_rotation(reg, 1, 2, self.chi23)
            c = -4.0 * math.pi / M
            reg = apply_two_rail_phase(
                reg, 0, 2, lambda n1, n3: c * (n1 / K + n3 / N) ** 2
            )
            self.first = HeterodyneSampler(reg, 0, model)
        else:
            self.first = HadamardGadget(data, K, anc1, M, model, off1)

    def run(self, rng: np.random.Generator) -> CircuitOutcome:
        if self.ys_rail == "second":
            return self._run_joint(rng)
        g1 = self.first.run(rng)
        g2 = HadamardGadget(g1.output, self.M, self.anc2, self.N, self.model, self.offsets[1]).run(rng)
        return CircuitOutcome(
            g1.indices + g2.indices,
            g1.raw_outcomes + g2.raw_outcomes,
            g2.output,
            (self.output_frame,),
        )

    def _run_joint(self, rng):
        gamma1 = self.first.draw(rng)
        rest = self.first.collapse(gamma1)
        second = HeterodyneSampler(rest, 0, self.model)
        gamma2 = second.draw(rng)
        out = second.collapse(gamma2)
        # rail-2 slot index among the M YS positions pi + 2 pi p / M
        p = phase_bin(gamma2, PhaseBinning(self.M, math.pi))
        lin = math.pi - 2.0 * math.pi * p / self.M
        k = phase_bin(gamma1, PhaseBinning(self.K, -(2.0 / self.K) * lin))
        kp = phase_bin(gamma2, PhaseBinning(self.M))
        frame = FrameTag((2.0 / self.N) * lin, 0)
        return CircuitOutcome((k, kp), (gamma1, gamma2), out, (frame,))


def tele_correct(
    data: FockVector,
    K: int,
    anc1: FockVector,
    M: int,
    anc2: FockVector,
    N: int,
    model: HeterodyneModel,
    ys_rail: str = "none",
    rng: np.random.Generator | None = None,
    frames: Sequence[FrameTag] = (FrameTag(), FrameTag()),
) -> CircuitOutcome:
    rng = np.random.default_rng() if rng is None else rng
    return TeleCorrection(data, K, anc1, M, anc2, N, model, ys_rail, frames).run(rng)


# reference states for fidelity


def hadamard_reference(c0, c1, k: int, alpha: float, M: int, cutoff=None) -> FockVector:
    """c0|+>_M + (-1)^k c1|->_M."""
    return logical_state(c0 + (-1) ** k * c1, c0 - (-1) ** k * c1, alpha, M, cutoff)


def telecorrect_reference(c0, c1, k: int, k_prime: int, alpha: float, N: int, cutoff=None) -> FockVector:
    """Ideal tele-correction output for outcome indices (k, k')."""
    s = (-1) ** k_prime
    sk = (-1) ** k
    plus = plus_state(alpha, N, cutoff).amplitudes
    minus = minus_state(alpha, N, cutoff).amplitudes
    amps = c0 * (plus + s * minus) + c1 * sk * (plus - s * minus)
    return FockVector.from_amplitudes(amps)


def modmeas_reference(k: int, K: int, alpha: float, cutoff=None, frame: FrameTag | None = None) -> FockVector:
    """Most likely output a^{K/2-k}|+>_K, optionally with a frame rotation."""
    half = K // 2
    ref = annihilate_pow(plus_state(alpha, K, cutoff), half - (k % half))
    if frame is not None and frame.theta:
        ref = rotate(ref, frame.theta)
    return ref
