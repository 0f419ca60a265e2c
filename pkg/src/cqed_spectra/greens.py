"""Green's function of the open resonator and the qubit memory kernels.

The retarded Green's function at the qubit position admits the pole expansion

    G(x, x', w) = sum_n (1/2w) phi_n(x) phi_n(x') / (w - w_n)

over the quasi-bound pairs ``(w_n, -w_n*)``.  The memory kernels are the
Fourier transforms ``K_m(tau) = gamma chi_s int dw/2pi w^m G(x0, x0, w) e^{-i w tau}``;
only ``K_2(tau)`` and the constant ``i K_1(0)`` survive in the qubit equation.

Besides the resonant poles, the exact Green's function has a pole at ``w = 0``
whose weight is not fully captured by a truncated pole sum.  Its
double-pole part ``c2 / w^2`` (the uniform zero mode, ``c2 = 1/C_tot``) and the
simple-pole remainder ``b_N / w`` are exposed here so that the characteristic
function can account for them (``static_weight`` and ``eta`` below).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .circuit import CircuitParams
from .errors import PoleProximity
from .spectra import QuasiModeSet, outgoing_solution, wronskian

POLE_GUARD = 1e-9


@dataclass(frozen=True)
class KernelCoefficients:
    """Per-mode constants of the spectral kernel representation.

    Attributes
    ----------
    A : ndarray
        ``gamma chi_s |w_n| |phi_n(x0)|^2``.
    theta, delta : ndarray
        ``arctan(kappa_n / nu_n)`` and the phase of ``phi_n(x0)``.
    nu, kappa : ndarray
        Oscillation frequency and decay rate of each quasi-bound mode.
    static_weight : float
        ``gamma chi_s c2``; contribution of the zero mode to the
        instantaneous frequency renormalization.
    eta : float
        ``-gamma chi_s Im b_N``; instantaneous damping from the part of the
        ``w = 0`` simple pole that the retained modes do not reproduce.
    """

    A: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    static_weight: float = 0.0
    eta: float = 0.0

    def __len__(self) -> int:
        return self.A.size

    @property
    def modulus(self) -> np.ndarray:
        return np.hypot(self.nu, self.kappa)

    @property
    def M(self) -> np.ndarray:
        """Hybridization measures ``gamma chi_s |phi_n(x0)|^2``."""
        return self.A / self.modulus

    def truncate(self, n_modes: int) -> "KernelCoefficients":
        sl = slice(0, n_modes)
        return KernelCoefficients(self.A[sl], self.theta[sl], self.delta[sl], self.nu[sl],
                                  self.kappa[sl], self.static_weight, self.eta)


def static_pole(params: CircuitParams, modes: QuasiModeSet) -> tuple[float, complex]:
    """Coefficients ``(c2, b_N)`` of the ``w = 0`` principal part missed by the pole sum.

    ``G_exact(x0, x0, w) - G_spec(w) = c2 / w^2 + b_N / w + O(1)`` near ``w = 0``.
    ``c2`` is the inverse total capacitance; ``b_N`` is purely imaginary and
    tends to the value set by direct radiation into the waveguides as the
    number of retained modes grows.
    """
    C = 1.0 + params.chi_s + params.chi_R + params.chi_L
    c2 = 1.0 / C
    c1 = -1j * (params.chi_R ** 2 + params.chi_L ** 2) / C ** 2
    b = c1 + 1j * np.sum((modes.phi_at_x0 ** 2 / modes.omega).imag)
    return c2, complex(b)


def kernel_coefficients(params: CircuitParams, modes: QuasiModeSet,
                        include_static: bool = True) -> KernelCoefficients:
    """Spectral kernel constants ``A_n, theta_n, delta_n`` for the given modes."""
    gcs = params.gamma * params.chi_s
    A = gcs * np.abs(modes.omega) * np.abs(modes.phi_at_x0) ** 2
    static, eta = 0.0, 0.0
    if include_static and gcs > 0:
        c2, b = static_pole(params, modes)
        static, eta = gcs * c2, -gcs * b.imag
    return KernelCoefficients(A=A, theta=modes.theta, delta=modes.delta, nu=modes.nu,
                              kappa=modes.kappa, static_weight=float(static), eta=float(eta))


# ---------------------------------------------------------------------------
# Green's functions
# ---------------------------------------------------------------------------

def gf_exact(x, xp, omega, params: CircuitParams):
    """Closed-form retarded Green's function from the two outgoing solutions.

    ``G(x, x') = psi_L(min) psi_R(max) / W`` where ``W`` is the matching
    determinant at the qubit; both positions may lie in the waveguides.
    """
    args = (params.chi_s, params.chi_R, params.chi_L, params.x0)
    lo, hi = np.minimum(x, xp), np.maximum(x, xp)
    W = wronskian(omega, *args).W
    return (outgoing_solution(lo, omega, *args, side="left")
            * outgoing_solution(hi, omega, *args, side="right") / W)


def _check_poles(omega, modes: QuasiModeSet) -> None:
    w = np.atleast_1d(np.asarray(omega, dtype=complex))
    poles = np.concatenate([modes.omega, -np.conj(modes.omega), [0.0]])
    dist = np.min(np.abs(w[:, None] - poles[None, :]), axis=1)
    if np.any(dist <= POLE_GUARD):
        raise PoleProximity(f"omega within {POLE_GUARD} of a pole of the spectral sum")


def gf_spectral(x, xp, omega, modes: QuasiModeSet):
    """Truncated pole sum over the stored pairs ``(w_n, -w_n*)``.

    ``x``, ``xp`` are scalars; ``omega`` may be an array.
    """
    _check_poles(omega, modes)
    w = np.asarray(omega, dtype=complex)
    px = modes.amp_at(float(x))
    pxp = px if float(xp) == float(x) else modes.amp_at(float(xp))
    num = px * pxp
    wn = modes.omega
    ww = w[..., None]
    terms = num / (ww - wn) + np.conj(num) / (ww + np.conj(wn))
    return np.sum(terms, axis=-1) / (2.0 * w)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def kernel_k2(tau, coeffs: KernelCoefficients):
    """``K_2(tau) = -sum_n A_n sin(nu_n tau + theta_n - 2 delta_n) exp(-kappa_n tau)``."""
    t = np.asarray(tau, dtype=float)
    tt = t[..., None]
    phase = coeffs.nu * tt + coeffs.theta - 2.0 * coeffs.delta
    return -np.sum(coeffs.A * np.sin(phase) * np.exp(-coeffs.kappa * tt), axis=-1)


def kernel_ik1(coeffs: KernelCoefficients) -> float:
    """``i K_1(0) = sum_n (A_n / |w_n|) cos(2 delta_n)``."""
    return float(np.sum(coeffs.M * np.cos(2.0 * coeffs.delta)))


def k0_from_residues(modes: QuasiModeSet, gamma_chi_s: float) -> complex:
    """``K_0(0)`` from the residues of the pole sum, including its pole at zero.

    The residues at ``w_n`` and ``-w_n*`` cancel those collected at ``w = 0``
    term by term, so the result vanishes up to rounding.
    """
    q = modes.phi_at_x0 ** 2 / modes.omega
    resonant = 0.5 * (q - np.conj(q))
    at_zero = 0.5 * (-q + np.conj(q))
    return complex(-1j * gamma_chi_s * np.sum(resonant + at_zero))


def k0_quadrature(params: CircuitParams, lift: float = 2.0, cutoff: float = 2000.0) -> float:
    """Independent estimate of ``K_0(0)`` by quadrature of the exact Green's function.

    ``G(x0, x0, w)`` is integrated along ``Im w = lift`` (above every pole,
    including ``w = 0``).  The high-frequency asymptote
    ``1 / (w (chi_s w + 2i))`` is subtracted first; its own line integral
    vanishes because both of its poles lie below the line.  The remainder
    decays fast enough to be cut at ``|Re w| = cutoff``.  Returns ``|K_0(0)|``.
    """
    gcs = params.gamma * params.chi_s
    if gcs == 0:
        return 0.0
    cs = params.chi_s

    def g(u, part):
        w = u + 1j * lift
        val = gf_exact(params.x0, params.x0, w, params) - 1.0 / (w * (cs * w + 2j))
        return val.real if part == 0 else val.imag

    edges = np.linspace(-cutoff, cutoff, 2 * int(cutoff // 5) + 1)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        re = quad(g, a, b, args=(0,), limit=200, epsabs=1e-13, epsrel=1e-12)[0]
        im = quad(g, a, b, args=(1,), limit=200, epsabs=1e-13, epsrel=1e-12)[0]
        total += re + 1j * im
    return float(abs(gcs * total / (2.0 * np.pi)))


def output_filter(x_obs: float, s, modes: QuasiModeSet, xj_laplace, omega_j: float):
    """Field response ``chi_s omega_j^2 G(x_obs, x0, w = i s) X_j(s)`` at ``x_obs``."""
    w = 1j * np.asarray(s, dtype=complex)
    G = gf_spectral(x_obs, modes.x0, w, modes)
    return modes.chi_s * omega_j ** 2 * G * np.asarray(xj_laplace, dtype=complex)
