import dataclasses
import math
import warnings

import numpy as np
import pytest

from cqed_spectra.circuit import derive_params
from cqed_spectra.errors import NonProductState, TruncationWarning, UnboundedInitialCondition
from cqed_spectra.linear import characteristic_model, find_poles, residues, trajectory_linear
from cqed_spectra.mspt import (classical_duffing, classical_duffing_numeric, corrected_poles, fourier_magnitude,
                               frequency_matrix, hybridize, identity_basis, quantum_duffing_element,
                               qubit_hamiltonian_expectation, trajectory_mspt, weyl_closed, weyl_series)
from cqed_spectra.spectra import quasi_modes


def params(chi_g=0.05, x0=0.0):
    return derive_params(0.05, chi_g, 1e-2, 1e-2, x0, 1.0, 50.0).with_omega_j(3.0)


def setup(p, n_modes=10):
    modes = quasi_modes(p, n_modes)
    model = characteristic_model(p, n_modes, modes=modes)
    poles = find_poles(model)
    return modes, model, poles


@pytest.mark.parametrize("theta", [0.05, 0.1, 0.15])
def test_weyl_series_matches_closed_form(theta):
    closed = weyl_closed(theta, 8)
    series = weyl_series(theta, 8, order=12)
    assert np.max(np.abs(closed - series)) < 1e-8


@pytest.mark.parametrize("theta", [0.3, 0.5])
def test_weyl_series_gap_is_the_taylor_remainder(theta):
    # <k-1|.|k> of both sides is sqrt(k) exp(i theta k); the series keeps 13 Taylor terms of it
    closed = weyl_closed(theta, 8)
    series = weyl_series(theta, 8, order=12)
    k = np.arange(1, 8)
    z = 1j * theta * k
    partial = sum(z ** n / math.factorial(n) for n in range(13))
    remainder = np.sqrt(k) * (np.exp(z) - partial)
    assert np.allclose(np.diag(closed - series, 1), remainder, atol=1e-13)
    assert np.max(np.abs(np.diag(closed - series, 1)[:2])) < 1e-8


def test_weyl_zero_angle_is_the_lowering_operator():
    a = np.diag(np.sqrt(np.arange(1, 6)), 1)
    assert np.allclose(weyl_closed(0.0, 6), a)
    assert np.allclose(weyl_series(0.0, 6), a)


def test_weyl_closed_is_lower_shift_only():
    W = weyl_closed(0.4, 6)
    mask = ~np.eye(6, k=1, dtype=bool)
    assert np.all(W[mask] == 0)


def test_frequency_matrix_symmetric_positive():
    p = params()
    V = frequency_matrix(p, quasi_modes(p, 10))
    assert np.allclose(V, V.T)
    assert np.all(np.linalg.eigvalsh(V) > 0)


def test_hybrid_transform_is_orthogonal():
    p = params(chi_g=0.2)
    modes, _, poles = setup(p)
    b = hybridize(p, modes, poles)
    O = b.transform
    assert np.allclose(O @ O.T, np.eye(O.shape[0]), atol=1e-12)
    assert np.sum(b.u ** 2) == pytest.approx(1.0)
    assert b.u_j > 0.9
    assert np.all(np.diag(O) > 0)


def test_two_by_two_mixing_angle():
    p = params(chi_g=0.2)
    modes, _, poles = setup(p, 1)
    V = frequency_matrix(p, modes)
    a, d, off = V[0, 0], V[1, 1], V[0, 1]
    lam = 0.5 * (a + d) + np.array([1, -1]) * np.sign(a - d) * np.hypot(0.5 * (a - d), off)
    b = hybridize(p, modes, poles)
    assert np.allclose(b.beta, np.sqrt(lam), rtol=1e-12)
    # transmon weight of the qubit-like normal mode
    uj2 = (lam[0] - d) / (lam[0] - lam[1])
    assert b.u_j ** 2 == pytest.approx(uj2, rel=1e-10)


def test_normal_frequencies_track_the_poles():
    p = params(chi_g=0.2)
    modes, _, poles = setup(p)
    b = hybridize(p, modes, poles)
    assert np.allclose(b.beta, -poles.all.imag, rtol=1e-2)
    assert np.array_equal(b.alpha, -poles.all.real)


def test_identity_basis_without_coupling():
    p = params(chi_g=0.0)
    _, _, poles = setup(p)
    b = identity_basis(p.omega_j, p.eps_d, poles)
    assert b.u_j == 1.0
    assert np.all(b.u_n == 0)
    assert b.beta_j == pytest.approx(3.0)
    assert b.eps[0] == pytest.approx(p.eps_d)


def test_transmon_weight_falls_with_coupling():
    u = []
    for chi_g in (0.01, 0.05, 0.2, 1.0):
        p = params(chi_g=chi_g)
        modes, _, poles = setup(p)
        u.append(hybridize(p, modes, poles).u_j)
    assert np.all(np.diff(u) < 0)


def test_vacuum_hamiltonian_is_half():
    assert qubit_hamiltonian_expectation(np.diag([1.0, 0, 0, 0])) == pytest.approx(0.5)
    assert qubit_hamiltonian_expectation(np.diag([0, 0, 1.0, 0])) == pytest.approx(2.5)
    p = params()
    modes, _, poles = setup(p)
    corr = corrected_poles(hybridize(p, modes, poles), [1.0, 0.0])
    assert np.allclose(corr.H, 0.5)


def test_kerr_weights():
    p = params()
    modes, _, poles = setup(p)
    b = hybridize(p, modes, poles)
    W = corrected_poles(b, [1.0, 1.0]).weights()
    u2 = b.u ** 2
    assert np.allclose(np.diag(W), u2 ** 2)
    assert W[0, 1] == pytest.approx(2 * u2[0] * u2[1])
    assert np.allclose(W, W.T)


def test_kerr_shift_decays_and_red_shifts():
    p = params()
    modes, _, poles = setup(p)
    corr = corrected_poles(hybridize(p, modes, poles), [0.0, 1.0])
    pb = corr.p_bar([0.0, 1e6])
    # lower-half-plane poles: adding i K moves the frequency -Im p down
    assert -pb[0, 0].imag < -poles.p_j.imag
    assert pb[1, 0] == pytest.approx(poles.p_j, abs=1e-12)


def test_zero_nonlinearity_reduces_to_linear():
    p = params(chi_g=0.2)
    modes, model, poles = setup(p)
    basis = dataclasses.replace(hybridize(p, modes, poles), eps_d=0.0)
    res = residues(model, poles)
    t = np.linspace(0.0, 30.0, 301)
    x = trajectory_mspt(basis, corrected_poles(basis, [1.0, 1.0]), res, t)
    assert np.allclose(x, trajectory_linear(poles, res, 1.0, 0.0, t), atol=1e-12)


def test_fock_truncation_warning():
    p = params(chi_g=0.2)
    modes, model, poles = setup(p)
    basis = hybridize(p, modes, poles)
    res = residues(model, poles)
    state = np.ones(6)
    t = np.linspace(0.0, 10.0, 51)
    with pytest.warns(TruncationWarning):
        trajectory_mspt(basis, corrected_poles(basis, state), res, t, qubit_state=state, qubit_dim=3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        trajectory_mspt(basis, corrected_poles(basis, state), res, t, qubit_state=state, qubit_dim=6)


def test_entangled_state_rejected():
    p = params()
    modes, _, poles = setup(p)
    b = hybridize(p, modes, poles)
    with pytest.raises(NonProductState):
        corrected_poles(b, np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NonProductState):
        corrected_poles(b, np.array([[0.0, 1.0], [0.0, 0.5]]))
    # qubit superposition times photon vacuum is accepted
    corrected_poles(b, np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]))


def test_classical_multiscale_tracks_direct_integration():
    omega, kappa, eps = 3.0, 0.01, 0.01
    t = np.linspace(0.0, 20.0, 2001)
    approx = classical_duffing(omega, kappa, eps, 1.0, 0.0, t)
    exact = classical_duffing_numeric(omega, kappa, eps, 1.0, 0.0, t)
    harmonic = classical_duffing(omega, kappa, 0.0, 1.0, 0.0, t)
    err = np.max(np.abs(approx - exact))
    assert err < 0.05
    assert err < 0.2 * np.max(np.abs(harmonic - exact))


def test_classical_harmonic_limit():
    t = np.linspace(0.0, 10.0, 101)
    x = classical_duffing(3.0, 0.2, 0.0, 0.5, 0.3, t)
    expected = np.exp(-0.1 * t) * (0.5 * np.cos(3 * t) + 0.3 * np.sin(3 * t))
    assert np.allclose(x, expected, atol=1e-12)


def test_unbounded_initial_condition():
    with pytest.raises(UnboundedInitialCondition):
        classical_duffing(3.0, 0.0, 0.1, 0.0, 1.7, [0.0, 1.0])
    with pytest.raises(UnboundedInitialCondition):
        classical_duffing_numeric(3.0, 0.0, 0.1, 0.0, 2.0, [0.0, 1.0])


def test_quantum_element_envelope_and_frequency():
    t = np.linspace(0.0, 50.0, 501)
    e = quantum_duffing_element(3.0, 0.02, 0.01, 2, t)
    assert np.allclose(np.abs(e), np.sqrt(2) * np.exp(-0.01 * t))
    # the shift is strongest at t = 0 and fades with the decay
    no_decay = quantum_duffing_element(3.0, 0.0, 0.01, 2, t)
    assert np.angle(no_decay[1] * np.conj(no_decay[0])) == pytest.approx(-3.0 * (1 - 0.03) * 0.1)


def test_fourier_magnitude_peaks_at_signal():
    t = np.linspace(0.0, 100.0, 4001)
    f = np.linspace(2.0, 4.0, 401)
    mag = fourier_magnitude(t, np.cos(3.1 * t), f)
    assert f[np.argmax(mag)] == pytest.approx(3.1, abs=0.01)
