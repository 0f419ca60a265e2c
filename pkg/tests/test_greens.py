import numpy as np
import pytest

from cqed_spectra.circuit import derive_params
from cqed_spectra.errors import PoleProximity
from cqed_spectra.greens import (gf_exact, gf_spectral, k0_from_residues, kernel_coefficients, kernel_ik1,
                                 kernel_k2, output_filter, static_pole)
from cqed_spectra.spectra import closed_cc_modes, quasi_modes


def params(chi_g=0.05, chi_R=1e-2, chi_L=1e-2, x0=0.3):
    return derive_params(0.05, chi_g, chi_R, chi_L, x0, 1.0, 50.0)


@pytest.mark.parametrize("x, xp", [(0.1, 0.7), (0.3, 0.9), (-0.2, 0.5), (0.4, 1.3)])
def test_reciprocity(x, xp):
    p = params()
    w = 3.1 + 0.2j
    assert gf_exact(x, xp, w, p) == pytest.approx(gf_exact(xp, x, w, p), rel=1e-12)


@pytest.mark.parametrize("x, xp", [(0.1, 0.6), (0.3, 0.3), (0.8, 0.2)])
def test_closed_limit_matches_hermitian_sum(x, xp):
    # with closed ends G is the normal-mode sum plus the uniform zero mode of weight 1/C
    p = params(chi_R=0.0, chi_L=0.0)
    m = closed_cc_modes(p, 2000)
    w = 2.3 + 0.1j
    herm = np.sum(m.amp_at(x) * m.amp_at(xp) / (w ** 2 - m.k ** 2)) + 1.0 / ((1.0 + p.chi_s) * w ** 2)
    assert gf_exact(x, xp, w, p) == pytest.approx(herm, rel=1e-6)


def test_exact_solves_the_defining_problem():
    p = params()
    w, xp = 3.1 + 0.2j, 0.6

    def G(x):
        return gf_exact(x, xp, w, p)

    h = 1e-4
    x = 0.8
    assert abs((G(x + h) - 2 * G(x) + G(x - h)) / h ** 2 + w ** 2 * G(x)) < 1e-6
    h = 1e-7
    source_jump = (G(xp + h) - G(xp)) / h - (G(xp) - G(xp - h)) / h
    assert source_jump == pytest.approx(1.0, abs=1e-5)
    qubit_jump = (G(p.x0 + h) - G(p.x0)) / h - (G(p.x0) - G(p.x0 - h)) / h
    assert qubit_jump == pytest.approx(-p.chi_s * w ** 2 * G(p.x0), rel=1e-4)
    # purely outgoing outside the resonator
    assert G(1.2) / G(1.1) == pytest.approx(np.exp(0.1j * w), rel=1e-12)
    assert G(-0.2) / G(-0.1) == pytest.approx(np.exp(0.1j * w), rel=1e-12)


@pytest.mark.parametrize("w", [2.3 + 0.1j, 7.0 + 0.5j, 20.0])
@pytest.mark.parametrize("x, xp", [(0.1, 0.6), (0.3, 0.3)])
def test_spectral_sum_with_static_pole_matches_exact(w, x, xp):
    p = params()
    m = quasi_modes(p, 400)
    c2, b = static_pole(p, m)
    exact = gf_exact(x, xp, w, p)
    spectral = gf_spectral(x, xp, w, m) + c2 / w ** 2 + b / w
    assert abs(spectral - exact) / abs(exact) < 1e-3


def test_spectral_sum_rejects_poles():
    m = quasi_modes(params(), 10)
    with pytest.raises(PoleProximity):
        gf_spectral(0.1, 0.2, m.omega[3], m)
    with pytest.raises(PoleProximity):
        gf_spectral(0.1, 0.2, -np.conj(m.omega[0]), m)
    with pytest.raises(PoleProximity):
        gf_spectral(0.1, 0.2, 0.0, m)


def test_kernel_vanishes_without_gate():
    p = params(chi_g=0.0)
    c = kernel_coefficients(p, quasi_modes(p, 20))
    assert np.all(kernel_k2(np.linspace(0, 3, 50), c) == 0)
    assert kernel_ik1(c) == 0
    assert c.static_weight == 0 and c.eta == 0


def test_kernel_k2_truncation_difference_shrinks():
    p = params()
    tau = np.linspace(0.2, 1.8, 400)     # clear of the round-trip echo at tau = 2
    k = [kernel_k2(tau, kernel_coefficients(p, quasi_modes(p, n))) for n in (100, 200, 400)]
    first, second = np.max(np.abs(k[1] - k[0])), np.max(np.abs(k[2] - k[1]))
    assert second < 0.6 * first


def test_kernel_k2_single_mode_closed_form():
    p = params()
    c = kernel_coefficients(p, quasi_modes(p, 1))
    tau = np.array([0.0, 0.4, 1.7])
    expected = -c.A[0] * np.sin(c.nu[0] * tau + c.theta[0] - 2 * c.delta[0]) * np.exp(-c.kappa[0] * tau)
    assert np.allclose(kernel_k2(tau, c), expected, rtol=1e-14)


def test_kernel_k2_decays():
    p = params(chi_R=5e-2, chi_L=5e-2)
    c = kernel_coefficients(p, quasi_modes(p, 20))
    early = np.max(np.abs(kernel_k2(np.linspace(0.0, 1.0, 200), c)))
    late = np.max(np.abs(kernel_k2(np.linspace(40.0, 41.0, 200), c)))
    assert late < 1e-3 * early


def test_ik1_positive_and_grows_with_modes():
    p = params()
    vals = [kernel_ik1(kernel_coefficients(p, quasi_modes(p, n))) for n in (50, 100, 200)]
    assert vals[0] > 0
    assert np.all(np.diff(vals) > 0)


def test_truncate_keeps_leading_modes():
    p = params()
    c = kernel_coefficients(p, quasi_modes(p, 20))
    t = c.truncate(5)
    assert len(t) == 5
    assert np.array_equal(t.nu, c.nu[:5])
    assert t.static_weight == c.static_weight


def test_k0_from_residues_vanishes():
    p = params()
    assert abs(k0_from_residues(quasi_modes(p, 100), p.gamma * p.chi_s)) < 1e-12


def test_static_pole_is_inverse_capacitance():
    p = params()
    c2, b = static_pole(p, quasi_modes(p, 50))
    assert c2 == pytest.approx(1.0 / (1.0 + p.chi_s + p.chi_R + p.chi_L))
    assert b.real == 0.0


def test_output_filter_zero_without_series_capacitance():
    p = params(chi_g=0.0)
    m = quasi_modes(p, 10)
    s = np.array([0.3 + 1.0j, 0.5 + 4.0j])
    assert np.all(output_filter(1.0, s, m, np.ones(2), 20.0) == 0)


def test_output_filter_is_linear_in_the_drive():
    p = params()
    m = quasi_modes(p, 10)
    s = np.array([0.3 + 1.0j, 0.5 + 4.0j])
    one = output_filter(1.0, s, m, np.ones(2), 20.0)
    assert np.allclose(output_filter(1.0, s, m, 2.5 * np.ones(2), 20.0), 2.5 * one)
