import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import stats
from scipy.linalg import expm

from catcorrect.errors import CoverageError, ImpossibleOutcomeError, ParameterError, UndefinedPhaseError
from catcorrect.fock import FockVector, ModeRegister, coherent_state, fidelity, fock_state
from catcorrect.measurement import (
    HeterodyneModel,
    HeterodyneSampler,
    PhaseBinning,
    cat_single_trial_error,
    heterodyne_sample,
    modular_project,
    phase_bin,
    tvd_cat,
    tvd_gaussian,
)
from catcorrect.states import cat_state


def dense_coherent(gamma, dim, pad=120):
    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    vac = np.zeros(pad, dtype=complex)
    vac[0] = 1
    return (expm(gamma * a.conj().T - np.conj(gamma) * a) @ vac)[:dim]


def test_coherent_samples_match_q_function():
    alpha = 2 + 1j
    rng = np.random.default_rng(11)
    sampler = HeterodyneSampler(coherent_state(alpha), 0, HeterodyneModel.ideal())
    g = np.array([sampler.draw(rng) for _ in range(10_000)])
    width = 1 / math.sqrt(2)
    ref = rng.normal(size=(2, 10_000)) * width
    assert stats.ks_2samp(g.real, alpha.real + ref[0]).pvalue > 0.01
    assert stats.ks_2samp(g.imag, alpha.imag + ref[1]).pvalue > 0.01
    assert stats.kstest(g.real, "norm", args=(alpha.real, width)).pvalue > 0.01
    assert stats.kstest(g.imag, "norm", args=(alpha.imag, width)).pvalue > 0.01


def test_antinormal_moments_of_superposition():
    # E_Q[gamma^2] = <a^2>, E_Q[|gamma|^2] = <n> + 1
    amps = np.zeros(12, dtype=complex)
    amps[0], amps[2] = 0.8, 0.6j
    s = FockVector(amps)
    rng = np.random.default_rng(5)
    sampler = HeterodyneSampler(s, 0, HeterodyneModel.ideal())
    g = np.array([sampler.draw(rng) for _ in range(20_000)])
    a2 = np.conj(amps[0]) * amps[2] * math.sqrt(2)
    assert abs(np.mean(g ** 2) - a2) < 0.05
    assert np.mean(np.abs(g) ** 2) == pytest.approx(s.mean_photon_number() + 1, abs=0.05)


def test_density_is_q_function():
    alpha = 1.5 - 0.5j
    sampler = HeterodyneSampler(coherent_state(alpha), 0, HeterodyneModel.ideal())
    for gamma in (alpha, alpha + 0.7, 0.1j):
        assert sampler.density(gamma) == pytest.approx(math.exp(-abs(gamma - alpha) ** 2) / math.pi, rel=1e-10)


def test_product_collapse_leaves_partner():
    rest = cat_state(2.0, 2, 1)
    reg = ModeRegister.product(coherent_state(1.0), rest)
    rng = np.random.default_rng(0)
    for _ in range(5):
        _, out = heterodyne_sample(reg, 0, HeterodyneModel.ideal(), rng)
        assert fidelity(out, rest) == pytest.approx(1, abs=1e-12)


def test_bell_cat_collapse():
    alpha = 3.0
    cut = 40
    amps = np.outer(coherent_state(alpha, cut).amplitudes, coherent_state(alpha, cut).amplitudes)
    amps += np.outer(coherent_state(-alpha, cut).amplitudes, coherent_state(-alpha, cut).amplitudes)
    reg = ModeRegister.from_amplitudes(amps / np.linalg.norm(amps))
    sampler = HeterodyneSampler(reg, 0, HeterodyneModel.ideal())
    out = sampler.collapse(alpha + 0.2j)
    assert fidelity(out, coherent_state(alpha, cut)) > 0.99


def test_collapse_matches_dense_projection():
    rng = np.random.default_rng(3)
    da, db = 20, 15
    amps = rng.normal(size=(da, db)) + 1j * rng.normal(size=(da, db))
    amps[12:, :] = 0
    amps[:, 10:] = 0
    amps /= np.linalg.norm(amps)
    reg = ModeRegister.from_amplitudes(amps)
    sampler = HeterodyneSampler(reg, 0, HeterodyneModel.ideal(grid_radius=12.0))
    gamma = 0.7 - 1.1j
    ref = dense_coherent(gamma, da).conj() @ amps
    out = sampler.project(gamma)
    assert np.max(np.abs(out - ref)) < 1e-10
    assert sampler.density(gamma) == pytest.approx(np.vdot(ref, ref).real / math.pi, rel=1e-10)


def test_single_rail_collapse_is_none():
    sampler = HeterodyneSampler(coherent_state(1.0), 0, HeterodyneModel.ideal())
    assert sampler.collapse(0.5) is None


def test_finite_lo_outcomes_on_lattice():
    model = HeterodyneModel.finite_lo(6.0)
    p = model.grid_spacing
    rng = np.random.default_rng(2)
    sampler = HeterodyneSampler(coherent_state(3.0), 0, model)
    for _ in range(50):
        g = sampler.draw(rng)
        for x in (g.real, g.imag):
            assert (x / p - 0.5) == pytest.approx(round(x / p - 0.5), abs=1e-9)


def test_finite_lo_quantize_cell_centre():
    model = HeterodyneModel.finite_lo(1.0)
    assert model.quantize(0.1 + 0.6j) == pytest.approx(0.25 + 0.75j)
    assert model.quantize(-0.1 - 0.01j) == pytest.approx(-0.25 - 0.25j)


def test_model_validation():
    with pytest.raises(ParameterError):
        HeterodyneModel("finite_lo")
    with pytest.raises(ParameterError):
        HeterodyneModel("homodyne")


def test_coverage_error_names_radius():
    with pytest.raises(CoverageError) as err:
        HeterodyneSampler(coherent_state(4.0), 0, HeterodyneModel.ideal(grid_radius=2.0))
    assert err.value.required_radius > 4.0


def test_phase_bin_examples():
    b = PhaseBinning(6)
    assert phase_bin(np.exp(0.1j), b) == 0
    assert phase_bin(np.exp(1j * (2 * np.pi / 6 + 0.05)), b) == 1
    assert phase_bin(np.exp(1j * np.pi / 6), b) == 0
    assert phase_bin(np.exp(-1j * np.pi / 6), b) == 0
    assert phase_bin(-1.0, b) == 3


def test_phase_bin_origin():
    with pytest.raises(UndefinedPhaseError):
        phase_bin(0j, PhaseBinning(4))


@settings(max_examples=200, deadline=None)
@given(
    r=st.floats(0.01, 10),
    phi=st.floats(-10, 10),
    theta=st.floats(-10, 10),
    K=st.integers(1, 12),
)
def test_phase_bin_frame_covariance(r, phi, theta, K):
    b = PhaseBinning(K)
    x = (K * phi / (2 * np.pi)) % 1
    # keep clear of decision lines, where rounding of phi + theta decides
    assume(abs(x - 0.5) > 1e-6)
    gamma = r * np.exp(1j * phi)
    assert phase_bin(gamma * np.exp(1j * theta), b.shifted(theta)) == phase_bin(gamma, b)


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(-10, 10), K=st.integers(1, 12))
def test_phase_bin_nearest_centre(phi, K):
    b = PhaseBinning(K)
    k = phase_bin(np.exp(1j * phi), b)
    d = np.angle(np.exp(1j * (phi - b.center(k))))
    assert abs(d) <= np.pi / K + 1e-9


def test_modular_project_examples():
    s = cat_state(3.0, 2, 0)
    p, out = modular_project(s, 4, 0)
    assert p == pytest.approx(1, abs=1e-15)
    assert fidelity(out, s) == pytest.approx(1, abs=1e-15)
    p, out = modular_project(coherent_state(2.0), 2, 0)
    assert p == pytest.approx(0.5001677, abs=1e-7)
    assert fidelity(out, cat_state(2.0, 1, 0)) >= 1 - 1e-10


def test_modular_project_impossible():
    with pytest.raises(ImpossibleOutcomeError):
        modular_project(fock_state(3, 8), 2, 0)


def test_tvd_gaussian_examples():
    assert tvd_gaussian(1.0, 1.0, 0.5) == (0.0, 0.5)
    tvd, err = tvd_gaussian(0.0, 4.0, 1.0)
    mpmath.mp.dps = 30
    assert tvd == pytest.approx(float(mpmath.erf(mpmath.sqrt(2))), abs=1e-15)
    assert err == pytest.approx(float(mpmath.erfc(mpmath.sqrt(2)) / 2), abs=1e-15)
    far, err_far = tvd_gaussian(0.0, 100.0, 1.0)
    assert far == 1.0 and err_far < 1e-300


def test_tvd_gaussian_bad_sigma():
    with pytest.raises(ParameterError):
        tvd_gaussian(0, 1, 0)


def test_tvd_cat_examples():
    exact, approx = tvd_cat(4.0, 2)
    assert exact == pytest.approx(0.9999999845827421, abs=1e-15)
    assert approx == pytest.approx(1 - math.exp(-16), abs=1e-15)
    assert abs(exact - approx) < 2e-7
    exact1, _ = tvd_cat(4.0, 1)
    assert 1 - exact1 == pytest.approx(1.2e-15, abs=1e-15)
    assert tvd_cat(0.0, 3) == (0.0, 0.0)


@pytest.mark.parametrize("alpha,D", [(1.0, 1), (2.5, 2), (4.0, 2), (6.0, 3), (9.0, 4)])
def test_single_trial_error_matches_oracle(alpha, D):
    mpmath.mp.dps = 50
    sep = 2 * mpmath.mpf(alpha) * mpmath.sin(mpmath.pi / (2 * D))
    ref = mpmath.erfc(sep / mpmath.sqrt(2)) / 2
    assert abs(cat_single_trial_error(alpha, D) - float(ref)) < 1e-12
    assert cat_single_trial_error(alpha, D) == pytest.approx(float(ref), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.36, 20), D=st.integers(1, 8))
def test_burmann_below_exact(alpha, D):
    sep = 2 * alpha * math.sin(math.pi / (2 * D))
    assume(sep / math.sqrt(2) >= 1)
    exact, approx = tvd_cat(alpha, D)
    assert 0 <= approx <= exact + 1e-12 <= 1 + 1e-12
