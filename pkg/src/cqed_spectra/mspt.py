"""Multi-scale perturbation theory for the weakly anharmonic transmon.

To lowest order the quartic transmon nonlinearity only renormalizes the
frequencies of the hybridized modes: a self-Kerr term ``u_l^4`` and cross-Kerr
terms ``2 u_l^2 u_m^2``, each weighted by the conserved mode Hamiltonian
``H_l = (a_l^+ a_l + a_l a_l^+)/2`` and damped by the mode's own decay.

Matrix elements of the Weyl-ordered solution are evaluated in the Fock basis.
There the ``1 / cos(...)`` denominator of the closed form cancels exactly: the
``<k-1| . |k>`` coherence of a mode rotates with the average of the two
``H`` eigenvalues, which is ``k``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .circuit import CircuitParams
from .errors import (InputError, NonPositiveEigenvalue, NonProductState,
                     TruncationWarning, UnboundedInitialCondition)
from .greens import kernel_coefficients
from .linear import PoleSet, ResidueSet, characteristic_model, find_poles
from .spectra import QuasiModeSet

QUBIT_DIM = 4
BUMP_TOL = 1e-6


# ---------------------------------------------------------------------------
# Single oscillators
# ---------------------------------------------------------------------------

def _check_bounded(eps_d: float, X0: float, Y0: float) -> None:
    if eps_d > 0 and 0.5 * Y0 ** 2 + 0.5 * (X0 ** 2 - eps_d * X0 ** 4) >= 5.0 / (36.0 * eps_d):
        raise UnboundedInitialCondition("initial energy exceeds the bounded-motion threshold")


def classical_duffing(omega: float, kappa: float, eps_d: float, X0: float, Y0: float, t) -> np.ndarray:
    """Lowest-order multi-scale solution of ``X'' + kappa X' + omega^2 (X - eps X^3) = 0``.

    ``X(0) = X0`` and ``X'(0) = omega Y0``.  The amplitude decays as
    ``exp(-kappa t / 2)`` and the frequency is renormalized to
    ``omega (1 - 3 eps |a0|^2 exp(-kappa t) / 2)`` with ``a0 = (X0 + i Y0)/2``.
    """
    _check_bounded(eps_d, X0, Y0)
    t = np.asarray(t, dtype=float)
    a0 = 0.5 * (X0 + 1j * Y0)
    wbar = omega * (1.0 - 1.5 * eps_d * abs(a0) ** 2 * np.exp(-kappa * t))
    return np.exp(-0.5 * kappa * t) * 2.0 * np.real(a0 * np.exp(-1j * wbar * t))


def classical_duffing_numeric(omega: float, kappa: float, eps_d: float, X0: float, Y0: float, t,
                              rtol: float = 1e-11) -> np.ndarray:
    """Direct high-accuracy integration of the same equation (reference solution)."""
    _check_bounded(eps_d, X0, Y0)
    t = np.asarray(t, dtype=float)

    def rhs(_, y):
        x, v = y
        return [v, -kappa * v - omega ** 2 * (x - eps_d * x ** 3)]

    sol = solve_ivp(rhs, (0.0, float(t[-1])), [X0, omega * Y0], method="DOP853",
                    t_eval=t, rtol=rtol, atol=rtol * 1e-2)
    return sol.y[0]


def quantum_duffing_element(omega: float, kappa: float, eps_d: float, n: int, t) -> np.ndarray:
    """``<n-1| X(t) |n>`` of the free quantum Duffing oscillator to lowest order."""
    if n < 1:
        raise InputError("n must be at least 1")
    t = np.asarray(t, dtype=float)
    phase = (1.0 - 1.5 * n * eps_d * np.exp(-kappa * t)) * omega * t
    return np.sqrt(n) * np.exp(-0.5 * kappa * t) * np.exp(-1j * phase)


def _ladder(dim: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    H = np.diag(np.arange(dim) + 0.5).astype(complex)
    return a, H


def weyl_closed(theta: float, dim: int) -> np.ndarray:
    """``(a e^{i theta H} + e^{i theta H} a) / (2 cos(theta/2))`` in a ``dim``-level Fock space."""
    a, H = _ladder(dim)
    E = np.diag(np.exp(1j * theta * np.diag(H)))
    return (a @ E + E @ a) / (2.0 * np.cos(0.5 * theta))


def weyl_series(theta: float, dim: int, order: int = 12) -> np.ndarray:
    """Term-by-term Weyl-ordered Taylor series of ``a exp(i theta H)`` up to ``order``."""
    a, H = _ladder(dim)
    powers = [np.eye(dim, dtype=complex)]
    for _ in range(order):
        powers.append(powers[-1] @ H)
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(order + 1):
        ordered = sum(comb(k, m) * powers[m] @ a @ powers[k - m] for m in range(k + 1)) / 2.0 ** k
        out += (1j * theta) ** k / factorial(k) * ordered
    return out


# ---------------------------------------------------------------------------
# Hybridization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HybridBasis:
    """Normal modes of the quadratic sector, aligned with the linear poles.

    Index 0 is the qubit-like mode, index ``k`` the mode connected to bare
    resonator mode ``k``.

    Attributes
    ----------
    u : ndarray
        Hybridization coefficients (transmon row of the orthogonal transform).
    beta : ndarray
        Normal-mode frequencies ``sqrt(eigenvalue)``.
    alpha : ndarray
        Decay rates of the matching linear poles.
    poles : ndarray
        Linear poles ``p_l`` in the same order.
    transform : ndarray
        Orthogonal matrix whose columns are the normal modes.
    eps : ndarray
        Per-mode effective nonlinearity ``(omega_j / beta_l) u_l eps_d``.
    """

    u: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    poles: np.ndarray
    transform: np.ndarray
    eps: np.ndarray
    omega_j: float
    eps_d: float

    @property
    def u_j(self) -> float:
        return float(self.u[0])

    @property
    def u_n(self) -> np.ndarray:
        return self.u[1:]

    @property
    def beta_j(self) -> float:
        return float(self.beta[0])

    @property
    def alpha_j(self) -> float:
        return float(self.alpha[0])


def frequency_matrix(params: CircuitParams, modes: QuasiModeSet) -> np.ndarray:
    """Symmetrized frequency-squared matrix of the linear equations of motion at ``kappa = 0``.

    Off-diagonal entries are ``2 g_n sqrt(omega_j nu_n) = omega_j nu_n sqrt(M_n)``.
    The transmon entry ``omega_j^2 (1 - gamma + M_0 + sum_n M_n)`` accounts for
    the modes beyond the truncation, so that the eigenvalues are the
    closed-system roots of the same truncated characteristic function.  It
    tends to ``omega_j^2`` as the number of modes grows.
    """
    c = kernel_coefficients(params, modes)
    wj = params.omega_j
    nu = modes.nu
    M = c.M
    S = wj * nu * np.sqrt(M)
    V = np.diag(np.concatenate([[wj ** 2 * (1.0 - params.gamma + c.static_weight + M.sum())], nu ** 2]))
    V[0, 1:] = S
    V[1:, 0] = S
    return V


def hybridize(params: CircuitParams, modes: QuasiModeSet, poles: PoleSet | None = None) -> HybridBasis:
    """Diagonalize the quadratic sector and attach decay rates from the linear poles."""
    if poles is None:
        poles = find_poles(characteristic_model(params, len(modes), modes=modes))
    V = frequency_matrix(params, modes)
    lam, O = np.linalg.eigh(V)
    if np.any(lam <= 0):
        raise NonPositiveEigenvalue(f"frequency matrix has eigenvalue {lam.min():.3e}")
    beta = np.sqrt(lam)
    p = poles.all
    target = -p.imag
    cost = np.abs(beta[:, None] - target[None, :]) / target[None, :]
    rows, cols = linear_sum_assignment(cost)
    order = rows[np.argsort(cols)]
    beta, O = beta[order], O[:, order]
    O = O * np.where(np.diag(O) < 0, -1.0, 1.0)
    u = O[0]
    eps = params.omega_j / beta * u * params.eps_d
    return HybridBasis(u=u, beta=beta, alpha=-p.real, poles=p, transform=O, eps=eps,
                       omega_j=params.omega_j, eps_d=params.eps_d)


def identity_basis(omega_j: float, eps_d: float, poles: PoleSet) -> HybridBasis:
    """Trivial basis of a decoupled transmon (``chi_g = 0``)."""
    p = poles.all
    n = p.size
    u = np.zeros(n)
    u[0] = 1.0
    beta = -p.imag
    return HybridBasis(u=u, beta=beta, alpha=-p.real, poles=p, transform=np.eye(n),
                       eps=omega_j / beta * u * eps_d, omega_j=omega_j, eps_d=eps_d)


# ---------------------------------------------------------------------------
# Kerr-corrected poles
# ---------------------------------------------------------------------------

def _qubit_density(state, dim: int | None = None) -> np.ndarray:
    """Density matrix of the qubit factor of a (qubit x photon-vacuum) product state.

    ``state`` is either a qubit vector, a qubit density matrix, or an amplitude
    table ``psi[q, m]`` over qubit level ``q`` and total photon number ``m``.
    """
    s = np.asarray(state, dtype=complex)
    if s.ndim == 2 and s.shape[0] == s.shape[1] and np.allclose(s, s.conj().T):
        rho = s
    elif s.ndim == 2:
        sv = np.linalg.svd(s, compute_uv=False)
        if sv.size > 1 and sv[1] > 1e-12 * sv[0]:
            raise NonProductState("qubit and photon sectors are entangled")
        if np.linalg.norm(s[:, 1:]) > 1e-12 * np.linalg.norm(s):
            raise NonProductState("the photon factor must be the vacuum")
        psi = s[:, 0]
        rho = np.outer(psi, psi.conj())
    elif s.ndim == 1:
        rho = np.outer(s, s.conj())
    else:
        raise InputError("unsupported initial state shape")
    rho = rho / np.trace(rho).real
    if dim is not None:
        if rho.shape[0] < dim:
            pad = np.zeros((dim, dim), dtype=complex)
            pad[: rho.shape[0], : rho.shape[0]] = rho
            rho = pad
        else:
            rho = rho[:dim, :dim]
    return rho


def qubit_hamiltonian_expectation(rho: np.ndarray) -> float:
    """``<(a^+ a + a a^+)/2> = <n> + 1/2`` of the bare transmon."""
    n = np.arange(rho.shape[0])
    return float(np.real(np.trace(rho) * 0.5 + np.sum(n * np.diag(rho)).real))


@dataclass(frozen=True)
class KerrCorrection:
    """Expectation-level Kerr corrections of the hybridized poles.

    ``p_bar_l(t) = p_l + i K [u_l^4 H_l e^{-2 alpha_l t} + sum_{m != l} 2 u_l^2 u_m^2 H_m e^{-2 alpha_m t}]``
    with ``K = 3 eps_d omega_j / 2``.
    """

    poles: np.ndarray
    alpha: np.ndarray
    u: np.ndarray
    H: np.ndarray
    strength: float

    def weights(self) -> np.ndarray:
        """Self-Kerr weights on the diagonal, cross-Kerr weights off it."""
        u2 = self.u ** 2
        W = 2.0 * np.outer(u2, u2)
        np.fill_diagonal(W, u2 ** 2)
        return W

    def shift(self, t, H: np.ndarray | None = None) -> np.ndarray:
        """Frequency shifts ``K [...]`` of every mode on the time grid, shape ``(T, modes)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        H = self.H if H is None else H
        env = H[None, :] * np.exp(-2.0 * np.outer(t, self.alpha))
        return self.strength * env @ self.weights().T

    def p_bar(self, t) -> np.ndarray:
        return self.poles[None, :] + 1j * self.shift(t)


def corrected_poles(basis: HybridBasis, initial_state) -> KerrCorrection:
    """Kerr-corrected poles for a product initial state (qubit state x photon vacuum).

    ``<H_l(0)> = u_l^2 <H_j> + (1 - u_l^2)/2``: the transmon contributes through
    its row of the orthogonal transform and every bare resonator mode
    contributes its vacuum value ``1/2``.
    """
    rho = _qubit_density(initial_state)
    Hj = qubit_hamiltonian_expectation(rho)
    u2 = basis.u ** 2
    H = u2 * Hj + 0.5 * (1.0 - u2)
    return KerrCorrection(poles=basis.poles, alpha=basis.alpha, u=basis.u, H=H,
                          strength=1.5 * basis.eps_d * basis.omega_j)


def _coherences(rho: np.ndarray) -> np.ndarray:
    """``a_k = sqrt(k) <k|rho|k-1>`` for ``k = 1 .. dim-1``; they sum to ``<a>``."""
    k = np.arange(1, rho.shape[0])
    return np.sqrt(k) * rho[k, k - 1]


def _trajectory(basis: HybridBasis, corr: KerrCorrection, res: ResidueSet, t: np.ndarray,
                rho: np.ndarray) -> np.ndarray:
    u2 = basis.u ** 2
    out = np.zeros(t.size)
    for k, a_k in enumerate(_coherences(rho), start=1):
        if a_k == 0:
            continue
        amp = res.AX * (2.0 * a_k.real) + res.AY * (2.0 * a_k.imag)
        # within the k-th coherence every mode Hamiltonian takes its Weyl-averaged value
        H_k = u2 * (k - 0.5) + 0.5
        phase = corr.shift(t, H_k)
        expo = np.exp(np.outer(t, corr.poles) + 1j * phase * t[:, None])
        out += 2.0 * np.real(expo @ amp)
    return out


def trajectory_mspt(basis: HybridBasis, correction: KerrCorrection, res: ResidueSet, t_grid,
                    qubit_state=(1.0, 1.0), qubit_dim: int = QUBIT_DIM) -> np.ndarray:
    """``<X_j(t)>`` from the lowest-order multi-scale solution.

    The initial qubit state is truncated to ``qubit_dim`` levels; a
    :class:`TruncationWarning` is issued if one more level changes the result
    by more than ``1e-6``.  With ``eps_d = 0`` the result equals
    :func:`cqed_spectra.linear.trajectory_linear`.
    """
    t = np.asarray(t_grid, dtype=float)
    state = np.asarray(qubit_state, dtype=complex)
    x = _trajectory(basis, correction, res, t, _qubit_density(state, qubit_dim))
    x_bump = _trajectory(basis, correction, res, t, _qubit_density(state, qubit_dim + 1))
    if np.max(np.abs(x - x_bump), initial=0.0) > BUMP_TOL:
        warnings.warn(f"qubit-like Fock dimension {qubit_dim} is not converged", TruncationWarning,
                      stacklevel=2)
    return x


def fourier_magnitude(t, x, freqs) -> np.ndarray:
    """Hann-windowed discrete Fourier magnitude ``|sum_t w(t) x(t) e^{i f t} dt|``."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.hanning(t.size)
    dt = t[1] - t[0]
    return np.abs(np.exp(1j * np.outer(freqs, t)) @ (w * x)) * dt
