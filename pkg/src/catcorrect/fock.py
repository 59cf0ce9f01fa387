"""Truncated Fock-space states and number-diagonal / displacement operators.

States are immutable: every operation returns a new object.  Amplitudes are
stored as read-only complex numpy arrays indexed by photon number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import gammaln

from .errors import CutoffError, DegenerateStateError, ParameterError

NORM_TOL = 1e-9
TAIL_TOL = 1e-12
DISPLACE_TAIL_TOL = 1e-10


def default_cutoff(alpha: complex) -> int:
    """Cutoff policy used by every constructor: ceil(|a|^2 + 8|a| + 10)."""
    r = abs(alpha)
    return int(math.ceil(r * r + 8.0 * r + 10.0))


def _frozen(amps) -> np.ndarray:
    arr = np.array(amps, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FockVector:
    """Normalized single-mode pure state on photon numbers 0..cutoff-1."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size == 0:
            raise ParameterError("FockVector amplitudes must be a non-empty 1-D sequence")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ParameterError(f"FockVector not normalized (|psi|^2 = {norm2!r})")
        tail = abs(amps[-1]) ** 2
        if amps.size > 1 and tail >= TAIL_TOL:
            raise CutoffError(
                f"tail mass {tail:.3e} at n={amps.size - 1} exceeds {TAIL_TOL:g}; "
                "increase the cutoff"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps, required_cutoff=None) -> "FockVector":
        """Renormalize ``amps`` and build a state, checking tail adequacy."""
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0.0 or not np.isfinite(norm):
            raise DegenerateStateError("state has zero norm")
        try:
            return cls(amps / norm)
        except CutoffError as exc:
            raise CutoffError(
                f"{exc}; required cutoff is at least {required_cutoff}"
                if required_cutoff
                else str(exc),
                required_cutoff=required_cutoff,
            ) from None

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_photon_number(self) -> float:
        return float(np.dot(np.arange(self.cutoff), self.probabilities()))

    def padded(self, cutoff: int) -> "FockVector":
        """Same state embedded in a larger truncation."""
        if cutoff < self.cutoff:
            raise ParameterError("padded() cannot shrink a state")
        out = np.zeros(cutoff, dtype=complex)
        out[: self.cutoff] = self.amplitudes
        return FockVector(out)


def fock_state(n: int, cutoff: int) -> FockVector:
    if not 0 <= n < cutoff - 1:
        raise CutoffError(f"Fock state |{n}> needs cutoff >= {n + 2}", required_cutoff=n + 2)
    amps = np.zeros(cutoff, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Unnormalized-by-truncation coefficients e^{-|a|^2/2} a^n / sqrt(n!)."""
    n = np.arange(cutoff)
    if alpha == 0:
        amps = np.zeros(cutoff, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag + 1j * n * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: int | None = None) -> FockVector:
    if cutoff is None:
        cutoff = default_cutoff(alpha)
    return FockVector.from_amplitudes(
        coherent_amplitudes(alpha, cutoff), required_cutoff=default_cutoff(alpha)
    )


@dataclass(frozen=True)
class DiagonalPhase:
    """Number-diagonal unitary exp(i f(n)) given by the phase map f."""

    phase_fn: Callable[[np.ndarray], np.ndarray]

    def values(self, cutoff: int) -> np.ndarray:
        n = np.arange(cutoff)
        return np.broadcast_to(np.asarray(self.phase_fn(n), dtype=float), n.shape)

    def __neg__(self) -> "DiagonalPhase":
        fn = self.phase_fn
        return DiagonalPhase(lambda n: -np.asarray(fn(n), dtype=float))

    @classmethod
    def rotation(cls, theta: float) -> "DiagonalPhase":
        """exp(i theta n)."""
        return cls(lambda n: theta * n)

    @classmethod
    def kerr(cls, chi: float) -> "DiagonalPhase":
        """exp(i chi n^2)."""
        return cls(lambda n: chi * n * n)


def apply_diagonal(state: FockVector, phase: DiagonalPhase) -> FockVector:
    f = phase.values(state.cutoff)
    return FockVector(state.amplitudes * np.exp(1j * f))


def rotate(state: FockVector, theta: float) -> FockVector:
    return apply_diagonal(state, DiagonalPhase.rotation(theta))


@lru_cache(maxsize=16)
def _quadrature_eigensystem(dim: int):
    # H = i(a^dag - a) is Hermitian, so exp(r(a^dag - a)) = V exp(-i r w) V^dag.
    off = np.sqrt(np.arange(1, dim))
    h = np.zeros((dim, dim), dtype=complex)
    h[np.arange(1, dim), np.arange(dim - 1)] = 1j * off
    h[np.arange(dim - 1), np.arange(1, dim)] = -1j * off
    w, v = np.linalg.eigh(h)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def displacement_padding(sigma: complex) -> int:
    r = abs(sigma)
    return max(16, int(math.ceil(2.0 * (r * r + 8.0 * r))))


def displace_amplitudes(amps: np.ndarray, sigma: complex, pad: int) -> np.ndarray:
    """D(sigma) applied in a space padded by ``pad`` levels (untruncated result)."""
    cutoff = amps.size
    dim = cutoff + pad
    w, v = _quadrature_eigensystem(dim)
    n = np.arange(dim)
    x = np.zeros(dim, dtype=complex)
    x[:cutoff] = amps
    r, phi = abs(sigma), np.angle(sigma)
    x = np.exp(-1j * phi * n) * x
    x = v @ (np.exp(-1j * r * w) * (v.conj().T @ x))
    return np.exp(1j * phi * n) * x


def displace(state: FockVector, sigma: complex) -> FockVector:
    """Apply the displacement operator D(sigma) = exp(sigma a^dag - sigma^* a)."""
    if sigma == 0:
        return state
    x = displace_amplitudes(state.amplitudes, sigma, displacement_padding(sigma))
    lost = float(np.sum(np.abs(x[state.cutoff:]) ** 2))
    mean_n = float(np.sum(np.arange(x.size) * np.abs(x) ** 2))
    needed = default_cutoff(math.sqrt(mean_n))
    if lost > DISPLACE_TAIL_TOL:
        raise CutoffError(
            f"displacement by {sigma} leaks {lost:.3e} beyond cutoff {state.cutoff}; "
            f"use cutoff >= {needed}",
            required_cutoff=needed,
        )
    return FockVector.from_amplitudes(x[: state.cutoff], required_cutoff=needed)


def annihilate_pow(state: FockVector, m: int) -> FockVector:
    """a^m |psi>, renormalized."""
    if m < 0:
        raise ParameterError("loss exponent must be non-negative")
    if m == 0:
        return state
    c = state.cutoff
    amps = np.zeros(c, dtype=complex)
    if m < c:
        n = np.arange(c - m)
        # sqrt((n+m)!/n!) in log space
        amps[: c - m] = state.amplitudes[m:] * np.exp(0.5 * (gammaln(n + m + 1) - gammaln(n + 1)))
    if not np.any(amps):
        raise DegenerateStateError(f"a^{m} annihilates the state (no support above n={m - 1})")
    return FockVector.from_amplitudes(amps)


@dataclass(frozen=True, eq=False)
class ModeRegister:
    """Pure state of several rails; amplitudes has one axis per rail."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim == 0:
            raise ParameterError("register needs at least one rail")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ParameterError(f"ModeRegister not normalized (|psi|^2 = {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps) -> "ModeRegister":
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise DegenerateStateError("register has zero norm")
        return cls(amps / norm)

    @classmethod
    def product(cls, *states: FockVector) -> "ModeRegister":
        amps = states[0].amplitudes
        for s in states[1:]:
            amps = np.multiply.outer(amps, s.amplitudes)
        return cls.from_amplitudes(amps)

    @property
    def rails(self) -> tuple:
        """Cutoff of each rail."""
        return self.amplitudes.shape

    @property
    def rail_count(self) -> int:
        return self.amplitudes.ndim

    def _check_rail(self, rail: int):
        if not 0 <= rail < self.rail_count:
            raise ParameterError(f"rail {rail} out of range for {self.rail_count} rails")

    def to_fock(self) -> FockVector:
        if self.rail_count != 1:
            raise ParameterError("only single-rail registers convert to FockVector")
        return FockVector.from_amplitudes(self.amplitudes)

    def reduced_density(self, rail: int) -> np.ndarray:
        """rho[n, m] of one rail, tracing out the rest."""
        self._check_rail(rail)
        psi = np.moveaxis(self.amplitudes, rail, 0).reshape(self.rails[rail], -1)
        return psi @ psi.conj().T


def _number_grid(shape, rail):
    idx = [1] * len(shape)
    idx[rail] = shape[rail]
    return np.arange(shape[rail]).reshape(idx)


def apply_rail_diagonal(register: ModeRegister, rail: int, phase: DiagonalPhase) -> ModeRegister:
    register._check_rail(rail)
    f = phase.values(register.rails[rail])
    shape = [1] * register.rail_count
    shape[rail] = f.size
    return ModeRegister(register.amplitudes * np.exp(1j * f).reshape(shape))


def apply_two_rail_phase(
    register: ModeRegister, rail_a: int, rail_b: int, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> ModeRegister:
    """Multiply amplitudes by exp(i fn(n_a, n_b))."""
    register._check_rail(rail_a)
    register._check_rail(rail_b)
    if rail_a == rail_b:
        raise ParameterError("two-rail phase needs distinct rails")
    shape = register.rails
    na = _number_grid(shape, rail_a)
    nb = _number_grid(shape, rail_b)
    return ModeRegister(register.amplitudes * np.exp(1j * fn(na, nb)))


def controlled_rotation(register: ModeRegister, rail_a: int, rail_b: int, chi: float) -> ModeRegister:
    """exp(i chi n_a n_b)."""
    return apply_two_rail_phase(register, rail_a, rail_b, lambda na, nb: chi * na * nb)


State = Union[FockVector, ModeRegister]


def inner(a: State, b: State) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if type(a) is not type(b) or a.amplitudes.shape != b.amplitudes.shape:
        raise ParameterError(
            f"dimension mismatch: {a.amplitudes.shape} vs {b.amplitudes.shape}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: State, b: State) -> float:
    """|<a|b>|^2; states of different cutoff are compared on the common prefix."""
    if isinstance(a, FockVector) and isinstance(b, FockVector) and a.cutoff != b.cutoff:
        c = max(a.cutoff, b.cutoff)
        a, b = a.padded(c), b.padded(c)
    return min(1.0, abs(inner(a, b)) ** 2)


def max_fidelity_over_rotations(a: FockVector, b: FockVector, count: int) -> tuple:
    """Best |<a| e^{i theta n} |b>|^2 over theta = 2 pi j / count; returns (fidelity, theta)."""
    best = (-1.0, 0.0)
    for j in range(count):
        theta = 2.0 * math.pi * j / count
        f = fidelity(a, rotate(b, theta))
        if f > best[0]:
            best = (f, theta)
    return best
