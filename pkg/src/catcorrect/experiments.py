"""Monte Carlo drivers, outcome histograms and displacement optimization."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .circuits import (
    FrameTag,
    ModularMeasurement,
    TeleCorrection,
    frame_update,
    gate_strength,
    modmeas_reference,
    telecorrect_reference,
)
from .errors import ParameterError
from .fock import FockVector, coherent_state, fidelity, inner
from .measurement import HeterodyneModel
from .states import (
    cat_state,
    displaced_ys,
    logical_state,
    minus_state,
    modular_subspace_probability,
    plus_state,
    ys_state,
)

DEFAULT_THRESHOLDS = (0.9, 0.95, 0.99)
DEFAULT_CHUNK = 250


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo run.

    ``circuit='modmeas'``: K is the output code index, N the probe component
    count, alphas = (target amplitude, probe amplitude).
    ``circuit='telecorrect'``: K, M, N are the code indices of the input and
    the two ancillae, alphas = (input, ancilla 1, ancilla 2).  With
    ``ys_rail='first'`` the input is a displaced K-component YS state; a
    ``ys_sigma`` of None selects the displacement by optimization.
    ``anomalies`` pre-multiplies the ancillae by e^{i theta n} a^m.
    """

    circuit: str
    K: int
    N: int
    M: int = 0
    alphas: tuple = ()
    model: HeterodyneModel = field(default_factory=HeterodyneModel)
    samples: int = 1000
    seed: int = 0
    thresholds: tuple = DEFAULT_THRESHOLDS
    probe: str = "cat"
    correct_ys_phases: bool = False
    logical: tuple = (1.0, 0.0)
    ys_rail: str = "none"
    ys_sigma: complex | None = 0.0
    ys_objective: str = "plus_vs_minus"
    anomalies: tuple = ((0.0, 0), (0.0, 0))
    track_frames: bool = True
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.circuit not in ("modmeas", "telecorrect"):
            raise ParameterError(f"unknown circuit {self.circuit!r}")
        if self.samples < 1:
            raise ParameterError("samples must be positive")
        if self.chunk_size < 1:
            raise ParameterError("chunk_size must be positive")
        need = 2 if self.circuit == "modmeas" else 3
        if len(self.alphas) != need:
            raise ParameterError(f"{self.circuit} needs {need} amplitudes, got {len(self.alphas)}")
        if self.probe not in ("cat", "coherent", "ys"):
            raise ParameterError(f"unknown probe kind {self.probe!r}")
        if any(not 0.0 < t < 1.0 for t in self.thresholds):
            raise ParameterError("fidelity thresholds must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ParameterError("fidelity thresholds must be strictly increasing")


@dataclass(frozen=True)
class SampleRecord:
    shot: int
    indices: tuple
    fidelity: float
    frame: FrameTag = FrameTag()

    def to_dict(self) -> dict:
        return {
            "shot": self.shot,
            "indices": list(self.indices),
            "fidelity": self.fidelity,
            "frame": {"theta": self.frame.theta, "m": self.frame.m},
        }


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple:
    """Wilson score interval for ``successes`` out of ``n`` trials."""
    if n <= 0:
        raise ParameterError("Wilson interval needs at least one trial")
    if not 0 <= successes <= n:
        raise ParameterError("successes must lie in 0..n")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return (lo, hi)


def intervals_overlap(a: tuple, b: tuple) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


@dataclass
class HistogramSummary:
    """Per-outcome-index shot counts and threshold successes.

    Keys are the last measured index of each shot.  ``merge`` is associative
    and commutative, so chunked runs combine in any order.
    """

    thresholds: tuple = DEFAULT_THRESHOLDS
    total: int = 0
    fidelity_sum: float = 0.0
    counts: dict = field(default_factory=dict)
    successes: dict = field(default_factory=dict)

    def add(self, record: SampleRecord) -> None:
        key = record.indices[-1]
        self.total += 1
        self.fidelity_sum += record.fidelity
        self.counts[key] = self.counts.get(key, 0) + 1
        for t in self.thresholds:
            if record.fidelity > t:
                self.successes[(key, t)] = self.successes.get((key, t), 0) + 1

    def merge(self, other: "HistogramSummary") -> "HistogramSummary":
        if tuple(self.thresholds) != tuple(other.thresholds):
            raise ParameterError("cannot merge summaries with different thresholds")
        out = HistogramSummary(tuple(self.thresholds), self.total + other.total,
                               self.fidelity_sum + other.fidelity_sum)
        for src in (self, other):
            for k, v in src.counts.items():
                out.counts[k] = out.counts.get(k, 0) + v
            for k, v in src.successes.items():
                out.successes[k] = out.successes.get(k, 0) + v
        return out

    def success_count(self, threshold: float, index=None) -> int:
        if index is not None:
            return self.successes.get((index, threshold), 0)
        return sum(v for (_, t), v in self.successes.items() if t == threshold)

    def probability(self, threshold: float, index=None) -> float:
        n = self.total if index is None else self.counts.get(index, 0)
        return self.success_count(threshold, index) / n if n else float("nan")

    def interval(self, threshold: float, index=None) -> tuple:
        n = self.total if index is None else self.counts.get(index, 0)
        return wilson_interval(self.success_count(threshold, index), n) if n else (0.0, 1.0)

    def parity_counts(self, threshold: float, parity: int) -> tuple:
        idx = [k for k in self.counts if k % 2 == parity]
        return (sum(self.success_count(threshold, k) for k in idx), sum(self.counts[k] for k in idx))

    @property
    def mean_fidelity(self) -> float:
        return self.fidelity_sum / self.total if self.total else float("nan")

    def to_dict(self) -> dict:
        per_index = {}
        for k in sorted(self.counts):
            per_index[str(k)] = {
                "count": self.counts[k],
                "thresholds": {
                    str(t): {"successes": self.success_count(t, k),
                             "probability": self.probability(t, k),
                             "wilson95": list(self.interval(t, k))}
                    for t in self.thresholds
                },
            }
        return {
            "shots": self.total,
            "mean_fidelity": self.mean_fidelity,
            "thresholds": {
                str(t): {"successes": self.success_count(t),
                         "probability": self.probability(t),
                         "wilson95": list(self.interval(t))}
                for t in self.thresholds
            },
            "per_index": per_index,
        }


# displacement optimization


@dataclass(frozen=True)
class DisplacementOptimum:
    sigma: complex
    value: float
    improved: bool


def objective_basis(alpha: float, N: int, cutoff: int):
    """Target / rival code states for the plus_vs_minus objective.

    For N = 2 the X-basis rivals |+-alpha> are exchanged by symmetry and give
    a flat objective, so the even/odd cats are used instead.
    """
    if N == 2:
        return cat_state(alpha, 1, 0, cutoff), cat_state(alpha, 1, 1, cutoff)
    if N % 2:
        raise ParameterError("plus_vs_minus needs an even component count")
    return plus_state(alpha, N, cutoff), minus_state(alpha, N, cutoff)


def objective_target_logical(N: int) -> tuple:
    """Logical coefficients (c0, c1) of the state the objective steers towards."""
    return (1.0, 0.0) if N == 2 else (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


def make_objective(alpha: float, N: int, objective: str, cutoff: int) -> Callable[[complex], float]:
    if objective == "modular_mass":
        def f(sigma):
            s = displaced_ys(alpha, N, sigma, cutoff)
            return max(modular_subspace_probability(s, N, r) for r in range(N))
        return f
    if objective == "plus_vs_minus":
        good, bad = objective_basis(alpha, N, cutoff)

        def f(sigma):
            s = displaced_ys(alpha, N, sigma, cutoff)
            # the bare ratio p/(p+q) peaks where both overlaps vanish
            return abs(inner(good, s)) ** 2 - abs(inner(bad, s)) ** 2
        return f
    raise ParameterError(f"unknown objective {objective!r}")


def optimize_displacement(
    alpha: float,
    N: int,
    objective: str = "plus_vs_minus",
    radius: float | None = None,
    radial_steps: int = 60,
    angular_steps: int = 24,
    tol: float = 1e-4,
) -> DisplacementOptimum:
    """Maximize an objective over complex displacements of the N-component YS state.

    A polar grid over |sigma| <= radius (default 3N/alpha) seeds a compass
    search.  If nothing beats sigma = 0 the result is sigma = 0 with
    ``improved=False``.
    """
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    radius = 3.0 * N / alpha if radius is None else radius
    cutoff = max(int(math.ceil((alpha + radius) ** 2 + 8 * (alpha + radius) + 10)), 16)
    f = make_objective(alpha, N, objective, cutoff)
    base = f(0.0)
    best_s, best_v = 0.0 + 0.0j, base
    for r in np.linspace(0.0, radius, radial_steps + 1)[1:]:
        for ph in 2 * np.pi * np.arange(angular_steps) / angular_steps:
            s = r * complex(math.cos(ph), math.sin(ph))
            v = f(s)
            if v > best_v:
                best_s, best_v = s, v
    step = radius / radial_steps
    while step > tol:
        moved = False
        for d in (1, -1, 1j, -1j):
            s = best_s + step * d
            if abs(s) > radius:
                continue
            v = f(s)
            if v > best_v:
                best_s, best_v, moved = s, v, True
                break
        if not moved:
            step *= 0.5
    if best_v <= base + 1e-12:
        return DisplacementOptimum(0.0j, base, False)
    return DisplacementOptimum(complex(best_s), best_v, True)


def fidelity_vs_target(output: FockVector, reference: FockVector, frame: FrameTag | None = None) -> float:
    """Fidelity with ``reference`` transported through the known frame."""
    if frame is not None and not frame.trivial:
        reference = frame.apply(reference)
    return fidelity(output, reference)


# runners


class _Prepared:
    """Shot-independent setup shared read-only by all chunks."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        tags = tuple(FrameTag(float(t), int(m)) for t, m in cfg.anomalies)
        if cfg.circuit == "modmeas":
            a_t, a_p = cfg.alphas
            self.target = coherent_state(a_t)
            probe = self._probe(a_p)
            probe = tags[0].apply(probe)
            offset = lag = 0.0
            if cfg.track_frames:
                offset, (lag,) = frame_update(tags[0], gate_strength(cfg.K, cfg.N))
            self.circuit = ModularMeasurement(
                self.target, probe, cfg.K, cfg.N, cfg.model, cfg.correct_ys_phases,
                probe_is_ys=cfg.probe == "ys", binning_offset=offset, output_rotation=-lag,
            )
            self._refs = {}
        else:
            a1, a2, a3 = cfg.alphas
            self.sigma = None
            if cfg.ys_rail == "first":
                sigma = cfg.ys_sigma
                if sigma is None:
                    sigma = optimize_displacement(a1, cfg.K, cfg.ys_objective).sigma
                self.sigma = complex(sigma)
                data = displaced_ys(a1, cfg.K, self.sigma)
                self.logical = objective_target_logical(cfg.K)
            else:
                data = logical_state(*cfg.logical, a1, cfg.K)
                self.logical = tuple(cfg.logical)
            anc1 = ys_state(a2, cfg.M) if cfg.ys_rail == "second" else plus_state(a2, cfg.M)
            anc1 = tags[0].apply(anc1)
            anc2 = tags[1].apply(plus_state(a3, cfg.N))
            self.out_cutoff = anc2.cutoff
            self.circuit = TeleCorrection(
                data, cfg.K, anc1, cfg.M, anc2, cfg.N, cfg.model, cfg.ys_rail,
                frames=tags, track_frames=cfg.track_frames,
            )
            self._refs = {}

    def _probe(self, a_p):
        cfg = self.cfg
        if cfg.probe == "coherent":
            if cfg.N != 1:
                raise ParameterError("a coherent probe has N = 1")
            return coherent_state(a_p)
        if cfg.probe == "ys":
            return ys_state(a_p, cfg.N)
        if cfg.N % 2:
            raise ParameterError("a cat probe needs an even component count")
        return cat_state(a_p, cfg.N // 2, 0)

    def reference(self, indices) -> FockVector:
        key = tuple(indices)
        if key not in self._refs:
            cfg = self.cfg
            if cfg.circuit == "modmeas":
                self._refs[key] = modmeas_reference(key[0], cfg.K, cfg.alphas[0], self.target.cutoff)
            else:
                c0, c1 = self.logical
                self._refs[key] = telecorrect_reference(c0, c1, key[0], key[1], cfg.alphas[2], cfg.N, self.out_cutoff)
        return self._refs[key]

    def shot(self, index: int, rng: np.random.Generator) -> SampleRecord:
        out = self.circuit.run(rng)
        frame = out.frame
        if self.cfg.circuit == "modmeas":
            # the reference a^{K/2-k}|+>_K already carries the loss exponent
            frame = FrameTag(frame.theta, 0)
        f = fidelity_vs_target(out.output, self.reference(out.indices), frame)
        return SampleRecord(index, tuple(int(i) for i in out.indices), float(f), out.frame)


def _chunks(cfg: ExperimentConfig):
    n_chunks = -(-cfg.samples // cfg.chunk_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_chunks)
    for c, ss in enumerate(seeds):
        start = c * cfg.chunk_size
        yield start, min(cfg.chunk_size, cfg.samples - start), ss


def _run_chunk(prep: _Prepared, start: int, count: int, ss) -> list:
    rng = np.random.default_rng(ss)
    return [prep.shot(start + i, rng) for i in range(count)]


def iter_records(cfg: ExperimentConfig, threads: int = 1) -> Iterator[SampleRecord]:
    """Stream shot records in shot order; results do not depend on ``threads``."""
    prep = _Prepared(cfg)
    chunks = list(_chunks(cfg))
    if threads <= 1:
        for start, count, ss in chunks:
            yield from _run_chunk(prep, start, count, ss)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for block in pool.map(lambda c: _run_chunk(prep, *c), chunks):
            yield from block


def run_experiment(cfg: ExperimentConfig, threads: int = 1, sink: Callable[[SampleRecord], None] | None = None):
    """Run all shots; returns (records, summary).  With ``sink`` records are streamed and not kept."""
    summary = HistogramSummary(tuple(cfg.thresholds))
    kept = []
    for rec in iter_records(cfg, threads):
        summary.add(rec)
        if sink is None:
            kept.append(rec)
        else:
            sink(rec)
    return kept, summary


def parity_check(summary: HistogramSummary, threshold: float = 0.99) -> dict:
    """Compare high-fidelity probabilities of even and odd outcome indices."""
    even = summary.parity_counts(threshold, 0)
    odd = summary.parity_counts(threshold, 1)
    ie = wilson_interval(*even) if even[1] else (0.0, 1.0)
    io = wilson_interval(*odd) if odd[1] else (0.0, 1.0)
    return {
        "threshold": threshold,
        "even": {"successes": even[0], "shots": even[1], "wilson95": list(ie)},
        "odd": {"successes": odd[0], "shots": odd[1], "wilson95": list(io)},
        "overlap": intervals_overlap(ie, io),
    }


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, seed=seed)
