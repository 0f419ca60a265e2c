"""Single-mode Rabi spectrum from Braak's G-function, with a dense oracle and the JC ladder.

The Hamiltonian is ``H = (w_q/2) sz + w_c a^+a + g sx (a + a^+)``.  Regular
eigenvalues are ``E = w_c (x - (g/w_c)^2)`` where ``x`` is a root of

    G_pm(x) = sum_n K_n(x) [1 -+ (w_q / 2 w_c) / (x - n)] (g/w_c)^n,

with ``n K_n = f_{n-1} K_{n-1} - K_{n-2}``, ``K_0 = 1``, ``K_1 = f_0`` and
``f_n(x) = 2g/w_c + (w_c/2g) [n - x + (w_q/2w_c)^2 / (x - n)]``.
The ``1/(x - n)`` orientation of the last term is the one for which the
roots reproduce the dense diagonalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, PoleProximity, RootBracketFailure, SeriesNotConverged

POLE_GUARD = 1e-9
SAMPLES_PER_UNIT = 200
SERIES_TOL = 1e-14


@dataclass(frozen=True)
class GFunctionParams:
    """Rabi-model frequencies and the maximum number of series terms."""

    omega_c: float
    omega_q: float
    g: float
    series_terms: int = 400

    def __post_init__(self) -> None:
        if self.omega_c <= 0 or self.omega_q <= 0 or self.g <= 0:
            raise InputError("omega_c, omega_q and g must be positive")
        if self.series_terms < 2:
            raise InputError("series_terms must be at least 2")

    @property
    def coupling(self) -> float:
        """``g / omega_c``."""
        return self.g / self.omega_c

    @property
    def splitting(self) -> float:
        """``omega_q / (2 omega_c)``."""
        return 0.5 * self.omega_q / self.omega_c


class RabiLevel(NamedTuple):
    x: float
    parity: int
    energy: float


@dataclass(frozen=True)
class RabiSpectrum:
    """Roots of ``G_+`` and ``G_-`` with their energies, sorted within each parity."""

    levels: tuple[RabiLevel, ...]
    params: GFunctionParams

    def energies(self, parity: int | None = None) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels if parity is None or lv.parity == parity])

    def lowest(self, n: int) -> np.ndarray:
        """The ``n`` lowest energies regardless of parity."""
        return np.sort(self.energies())[:n]


def f_coefficient(n, x, p: GFunctionParams):
    """``f_n(x)`` of the three-term recursion."""
    gc, D = p.coupling, p.splitting
    return 2.0 * gc + (n - x + D ** 2 / (x - n)) / (2.0 * gc)


def k_coefficients(x, p: GFunctionParams, n_terms: int | None = None) -> np.ndarray:
    """``K_0(x) .. K_{n_terms-1}(x)`` from the recursion (leading axis is ``n``)."""
    m = p.series_terms if n_terms is None else n_terms
    x = np.asarray(x, dtype=float)
    K = np.empty((m,) + x.shape)
    K[0] = 1.0
    if m > 1:
        K[1] = f_coefficient(0, x, p)
    for n in range(2, m):
        K[n] = (f_coefficient(n - 1, x, p) * K[n - 1] - K[n - 2]) / n
    return K


def _scaled_terms(x: np.ndarray, p: GFunctionParams) -> np.ndarray:
    # k_n = K_n (g/w_c)^n obeys n k_n = c f_{n-1} k_{n-1} - c^2 k_{n-2}, which never overflows
    c = p.coupling
    k = np.empty((p.series_terms,) + x.shape)
    k[0] = 1.0
    k[1] = c * f_coefficient(0, x, p)
    for n in range(2, p.series_terms):
        k[n] = (c * f_coefficient(n - 1, x, p) * k[n - 1] - c * c * k[n - 2]) / n
    return k


def _g_values(x: np.ndarray, parity: int, p: GFunctionParams) -> np.ndarray:
    k = _scaled_terms(x, p)
    n = np.arange(k.shape[0]).reshape((-1,) + (1,) * x.ndim)
    terms = k * (1.0 - parity * p.splitting / (x - n))
    total = np.sum(terms, axis=0)
    scale = np.maximum(np.abs(total), np.max(np.abs(terms), axis=0) * 1e-3)
    bad = ~(np.abs(terms[-1]) < SERIES_TOL * scale)
    if np.any(bad):
        i = np.flatnonzero(bad)[0]
        raise SeriesNotConverged(f"last of {k.shape[0]} terms is {abs(terms[-1].flat[i]):.2e} "
                                 f"at x={x.flat[i]:.6g}")
    return total


def g_function(x: float, parity: int, p: GFunctionParams) -> float:
    """``G_+(x)`` (``parity=+1``) or ``G_-(x)`` (``parity=-1``).

    Raises
    ------
    PoleProximity
        If ``x`` lies within ``1e-9`` of a non-negative integer.
    SeriesNotConverged
        If the last retained term is not below ``1e-14`` of the partial sum.
    """
    if parity not in (1, -1):
        raise InputError("parity must be +1 or -1")
    nearest = round(x)
    if nearest >= 0 and abs(x - nearest) < POLE_GUARD:
        raise PoleProximity(f"x={x} is within {POLE_GUARD:g} of the pole at {nearest}")
    return float(_g_values(np.asarray(float(x)), parity, p))


def _sector_roots(parity: int, p: GFunctionParams, count: int) -> list[float]:
    # E >= -w_q/2 - g^2/w_c, so no root lies below x = -w_q/(2 w_c)
    edges = [-p.splitting - 1.0] + list(range(0, 10 * count + 20))
    roots: list[float] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n_samp = max(2, int(round(SAMPLES_PER_UNIT * (hi - lo))))
        xs = np.linspace(lo, hi, n_samp + 1)[1:-1]
        vals = _g_values(xs, parity, p)
        for k in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            a, b = xs[k], xs[k + 1]
            fa, fb = vals[k], vals[k + 1]
            # a sign change through a pole of G is not a root; at integer poles we never sample
            r = brentq(lambda x: g_function(x, parity, p), a, b, xtol=1e-14, rtol=1e-15)
            mid = g_function(r, parity, p)
            if abs(mid) <= 1e-6 * max(abs(fa), abs(fb), 1.0):
                roots.append(float(r))
        if len(roots) >= count:
            return roots[:count]
    raise RootBracketFailure(f"found only {len(roots)} of {count} roots for parity {parity:+d}")


def rabi_levels(p: GFunctionParams, n_levels: int) -> RabiSpectrum:
    """The lowest ``n_levels`` roots of each of ``G_+`` and ``G_-``.

    Each unit interval between poles is sampled at 200 points, sign changes
    are refined by Brent's method and mapped to ``E = w_c (x - (g/w_c)^2)``.
    """
    if n_levels < 1:
        raise InputError("n_levels must be at least 1")
    shift = p.coupling ** 2
    levels = []
    for parity in (1, -1):
        for x in _sector_roots(parity, p, n_levels):
            levels.append(RabiLevel(x, parity, p.omega_c * (x - shift)))
    return RabiSpectrum(levels=tuple(levels), params=p)


def rabi_matrix(omega_c: float, omega_q: float, g: float, n_fock: int = 40) -> np.ndarray:
    """Dense Rabi Hamiltonian on ``n_fock`` photon states times the qubit, ordering ``|n, s>``."""
    a = np.diag(np.sqrt(np.arange(1, n_fock)), 1)
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye_f, eye_q = np.eye(n_fock), np.eye(2)
    return (0.5 * omega_q * np.kron(eye_f, sz) + omega_c * np.kron(a.T @ a, eye_q)
            + g * np.kron(a + a.T, sx))


def parity_operator(n_fock: int = 40) -> np.ndarray:
    """``sz (-1)^{a^+a}``, which commutes with the Rabi Hamiltonian."""
    return np.kron(np.diag((-1.0) ** np.arange(n_fock)), np.diag([1.0, -1.0]))


def rabi_dense(omega_c: float, omega_q: float, g: float, n_fock: int = 40) -> dict[int, np.ndarray]:
    """Eigenvalues of each parity block of the truncated Rabi matrix.

    The keys follow the labelling of :func:`g_function`: the block whose
    parity operator eigenvalue is ``+1`` pairs with ``G_+``.
    """
    H = rabi_matrix(omega_c, omega_q, g, n_fock)
    P = np.diag(parity_operator(n_fock))
    out = {}
    for label, sign in ((1, 1.0), (-1, -1.0)):
        idx = np.nonzero(P == sign)[0]
        out[label] = np.linalg.eigvalsh(H[np.ix_(idx, idx)])
    return out


def jc_levels(omega_c: float, omega_q: float, g: float, n_levels: int) -> np.ndarray:
    """Jaynes-Cummings ladder: the ground level and the doublets ``E_{n,pm}``.

    ``E_{n,pm} = (n + 1/2) w_c pm sqrt(delta^2 + Omega_n^2)/2`` with
    ``delta = w_q - w_c`` and ``Omega_n = 2 g sqrt(n + 1)``; the ground state
    ``|g, 0>`` sits at ``-w_q/2``.  Returns the ``n_levels`` lowest values.
    """
    if n_levels < 1:
        raise InputError("n_levels must be at least 1")
    delta = omega_q - omega_c
    n = np.arange(n_levels)
    half = 0.5 * np.sqrt(delta ** 2 + 4.0 * g ** 2 * (n + 1))
    ladder = np.concatenate([[-0.5 * omega_q], (n + 0.5) * omega_c - half, (n + 0.5) * omega_c + half])
    return np.sort(ladder)[:n_levels]


def jc_doublet(omega_c: float, omega_q: float, g: float, n: int) -> tuple[float, float]:
    """``(E_{n,-}, E_{n,+})`` of the ``n``-th doublet."""
    delta = omega_q - omega_c
    half = 0.5 * np.sqrt(delta ** 2 + 4.0 * g ** 2 * (n + 1))
    return float((n + 0.5) * omega_c - half), float((n + 0.5) * omega_c + half)
