import numpy as np
import pytest

from cqed_spectra.errors import TruncationTooSmall
from cqed_spectra.transmon import (ChargeBasisHamiltonian, charge_dispersion, diagonalize, spectrum_vs_ng,
                                   truncation_drift, trk_check)


def test_matrix_structure():
    h = ChargeBasisHamiltonian(Ec=1.0, Ej=2.0, ng=0.3, nmax=10)
    H = h.matrix()
    assert np.allclose(H, H.T)
    assert np.allclose(np.diag(H), 4.0 * (np.arange(-10, 11) - 0.3) ** 2)
    assert np.allclose(np.diag(H, 1), -1.0)
    assert np.count_nonzero(np.triu(H, 2)) == 0


def test_charge_limit_levels():
    spec = diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=0.0, ng=0.0, nmax=10))
    expected = np.sort(4.0 * np.arange(-10, 11) ** 2)
    assert np.allclose(spec.levels, expected)
    # n and -n are degenerate
    assert spec.levels[1] == pytest.approx(spec.levels[2])


def test_charge_dispersion_hand_matrix():
    # three charge states at Ej = 0: ng = 1/2 lowers the ground level from 0 to Ec
    Ec = 1.0
    at_half = np.linalg.eigvalsh(np.diag(4 * Ec * (np.array([-1, 0, 1]) - 0.5) ** 2))[0]
    at_zero = np.linalg.eigvalsh(np.diag(4 * Ec * np.array([-1, 0, 1]) ** 2.0))[0]
    numeric, _ = charge_dispersion(ChargeBasisHamiltonian(Ec=Ec, Ej=1e-12, nmax=10), 0)
    assert at_half - at_zero == pytest.approx(Ec)
    assert numeric == pytest.approx(at_half - at_zero, abs=1e-9)


def test_transmon_frequency_and_anharmonicity():
    spec = diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=50.0), 4)
    assert spec.transition == pytest.approx(np.sqrt(8 * 50.0) - 1.0, rel=0.01)
    # the first correction beyond -Ec is -(Ec/8) sqrt(8Ec/Ej) order, which is 15% at Ej/Ec = 50
    assert -1.2 < spec.anharmonicity(1) < -1.0
    deep = diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=1000.0), 4)
    assert deep.anharmonicity(1) == pytest.approx(-1.0, rel=0.05)


def test_truncation_converged():
    assert truncation_drift(ChargeBasisHamiltonian(Ec=1.0, Ej=50.0, nmax=30), 5) < 1e-10


def test_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        ChargeBasisHamiltonian(Ec=1.0, Ej=50.0, nmax=5)
    with pytest.raises(TruncationTooSmall):
        diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=50.0, nmax=10), 10)


def test_charge_dispersion_vs_asymptote():
    h = ChargeBasisHamiltonian(Ec=1.0, Ej=50.0, nmax=30)
    numeric, asym = charge_dispersion(h, 0)
    assert 0.5 < numeric / asym < 2.0


def test_charge_dispersion_sign_alternates():
    h = ChargeBasisHamiltonian(Ec=1.0, Ej=50.0, nmax=30)
    signs = [np.sign(charge_dispersion(h, n)[0]) for n in range(4)]
    assert signs == [-1, 1, -1, 1] or signs == [1, -1, 1, -1]


def test_charge_dispersion_shrinks_with_ratio():
    vals = [abs(charge_dispersion(ChargeBasisHamiltonian(Ec=1.0, Ej=r, nmax=30), 0)[0]) for r in (1, 5, 10, 50)]
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("ratio", [1.0, 10.0, 50.0])
def test_trk_identity(ratio):
    lhs, rhs, bound = trk_check(diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=ratio)))
    assert abs(lhs - rhs) / rhs < 1e-8
    assert rhs < bound


def test_trk_vanishes_in_charge_limit():
    lhs, _, _ = trk_check(diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=1e-6)))
    # against the natural scale of the charge operator sum, 8 Ec
    assert lhs / 8.0 < 1e-3


def test_integer_shift_periodicity():
    a = spectrum_vs_ng(1.0, 5.0, [0.3], 6)
    b = spectrum_vs_ng(1.0, 5.0, [1.3], 6)
    assert np.allclose(a, b, atol=1e-9)


def test_selection_structure_at_zero_offset():
    spec = diagonalize(ChargeBasisHamiltonian(Ec=1.0, Ej=10.0, ng=0.0))
    assert np.allclose(np.diag(spec.charge_elements)[:4], 0.0, atol=1e-10)
    # parity alternates, so only neighbouring levels are connected
    assert list(spec.flux_parity[:4]) == [1, -1, 1, -1]
    assert abs(spec.charge_elements[0, 2]) < 1e-12
    assert abs(spec.charge_elements[0, 1]) > 0.1
