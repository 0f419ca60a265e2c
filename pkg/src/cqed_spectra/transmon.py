"""Cooper-pair box / transmon spectrum in the charge basis.

The Hamiltonian ``H = 4 Ec (n - ng)^2 - Ej cos(phi)`` is represented on the
charge states ``|n>`` with ``n`` in a window of ``2 nmax + 1`` integers centred
on the integer closest to ``ng``.  ``cos(phi)`` is half the sum of the
charge-raising and charge-lowering shifts, which makes the matrix tridiagonal.

Charges are measured in units of ``2e`` throughout, so the Thomas-Reiche-Kuhn
bound ``(2e)^2 Ej`` reads simply ``Ej``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InputError, SumNotConverged, TruncationTooSmall

MIN_NMAX = 10


@dataclass(frozen=True)
class ChargeBasisHamiltonian:
    """Tridiagonal charge-basis representation of the Cooper-pair box."""

    Ec: float
    Ej: float
    ng: float = 0.0
    nmax: int = 30

    def __post_init__(self) -> None:
        if self.Ec <= 0 or self.Ej < 0:
            raise InputError("need Ec > 0 and Ej >= 0")
        if self.nmax < MIN_NMAX:
            raise TruncationTooSmall(f"nmax={self.nmax} is below the minimum {MIN_NMAX}")

    @property
    def charges(self) -> np.ndarray:
        centre = int(np.rint(self.ng))
        return np.arange(centre - self.nmax, centre + self.nmax + 1)

    def bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of the matrix."""
        diag = 4.0 * self.Ec * (self.charges - self.ng) ** 2
        off = np.full(2 * self.nmax, -0.5 * self.Ej)
        return diag, off

    def matrix(self) -> np.ndarray:
        diag, off = self.bands()
        return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)

    def cos_phi(self) -> np.ndarray:
        """``cos(phi)`` in the same truncated basis."""
        off = np.full(2 * self.nmax, 0.5)
        return np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class TransmonSpectrum:
    """Eigen-decomposition of a :class:`ChargeBasisHamiltonian`.

    Attributes
    ----------
    levels : ndarray
        Eigenvalues in ascending order.
    vectors : ndarray
        Eigenvectors as columns, signs fixed so the largest component is positive.
    charge_elements : ndarray
        ``<m|n|l>`` for the charge operator (real; the matrix is real symmetric).
    flux_parity : ndarray
        ``+1``/``-1`` under ``n -> 2 ng - n`` when ``2 ng`` is an integer and
        the window is mirror symmetric, otherwise ``0``.
    hamiltonian : ChargeBasisHamiltonian
    """

    levels: np.ndarray
    vectors: np.ndarray
    charge_elements: np.ndarray
    flux_parity: np.ndarray
    hamiltonian: ChargeBasisHamiltonian

    @property
    def transition(self) -> float:
        """``E_1 - E_0``."""
        return float(self.levels[1] - self.levels[0])

    def anharmonicity(self, n: int = 1) -> float:
        """``(E_{n+1} - E_n) - (E_n - E_{n-1})``."""
        E = self.levels
        return float((E[n + 1] - E[n]) - (E[n] - E[n - 1]))


def _parities(h: ChargeBasisHamiltonian, vectors: np.ndarray) -> np.ndarray:
    mirror = 2.0 * h.ng - h.charges
    if not np.allclose(np.sort(mirror), h.charges):
        return np.zeros(vectors.shape[1], dtype=int)
    order = np.searchsorted(h.charges, mirror)
    overlap = np.einsum("ij,ij->j", vectors, vectors[order])
    return np.where(np.abs(overlap) > 0.5, np.sign(overlap), 0).astype(int)


def diagonalize(h: ChargeBasisHamiltonian, n_levels: int | None = None) -> TransmonSpectrum:
    """Diagonalize the charge-basis Hamiltonian.

    Parameters
    ----------
    h : ChargeBasisHamiltonian
    n_levels : int, optional
        Number of levels the caller intends to use; must be below ``nmax``.
        All ``2 nmax + 1`` eigenpairs are always returned.
    """
    if n_levels is not None and n_levels >= h.nmax:
        raise TruncationTooSmall(f"level index {n_levels} requires nmax > {n_levels}")
    diag, off = h.bands()
    E, V = eigh_tridiagonal(diag, off)
    pivot = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[pivot, np.arange(V.shape[1])])
    n_op = V.T @ (h.charges[:, None] * V)
    return TransmonSpectrum(levels=E, vectors=V, charge_elements=n_op,
                            flux_parity=_parities(h, V), hamiltonian=h)


def truncation_drift(h: ChargeBasisHamiltonian, n_levels: int) -> float:
    """Largest relative change of the first ``n_levels`` eigenvalues when ``nmax`` doubles."""
    a = diagonalize(h, n_levels).levels[:n_levels]
    b = diagonalize(ChargeBasisHamiltonian(h.Ec, h.Ej, h.ng, 2 * h.nmax), n_levels).levels[:n_levels]
    scale = np.maximum(np.abs(a), h.Ec)
    return float(np.max(np.abs(a - b) / scale))


def charge_dispersion(h: ChargeBasisHamiltonian, level_index: int) -> tuple[float, float]:
    """Charge dispersion ``E_n(ng=1/2) - E_n(ng=0)`` and its large-``Ej/Ec`` asymptote.

    Returns
    -------
    numeric, asymptotic : float
    """
    n = int(level_index)
    kwargs = dict(Ec=h.Ec, Ej=h.Ej, nmax=h.nmax)
    E_half = diagonalize(ChargeBasisHamiltonian(ng=0.5, **kwargs), n).levels[n]
    E_zero = diagonalize(ChargeBasisHamiltonian(ng=0.0, **kwargs), n).levels[n]
    ratio = h.Ej / h.Ec
    asym = ((-1) ** n * h.Ec * 2.0 ** (4 * n + 5) / math.factorial(n) * math.sqrt(2.0 / math.pi)
            * (ratio / 2.0) ** (n / 2.0 + 0.75) * math.exp(-math.sqrt(8.0 * ratio)))
    return float(E_half - E_zero), float(asym)


def trk_check(spectrum: TransmonSpectrum, tail_tol: float = 1e-12) -> tuple[float, float, float]:
    """Thomas-Reiche-Kuhn sum rule for the charge operator out of the ground state.

    Returns ``(lhs, rhs, bound)`` with
    ``lhs = sum_{n>0} 2 (E_n - E_0) |<0|n|n>|^2``,
    ``rhs = Ej <0|cos(phi)|0>`` and ``bound = Ej`` (charge unit ``2e``).
    """
    h = spectrum.hamiltonian
    E = spectrum.levels
    terms = 2.0 * (E[1:] - E[0]) * spectrum.charge_elements[0, 1:] ** 2
    lhs = float(np.sum(terms))
    # the last quarter of the ladder must be negligible, otherwise the basis is too small
    tail = float(np.sum(np.abs(terms[-max(1, terms.size // 4):])))
    if lhs > 0 and tail > tail_tol * lhs:
        raise SumNotConverged(f"relative tail {tail / lhs:.2e} exceeds {tail_tol:.0e}")
    v0 = spectrum.vectors[:, 0]
    rhs = float(h.Ej * v0 @ h.cos_phi() @ v0)
    return lhs, rhs, float(h.Ej)


def spectrum_vs_ng(Ec: float, Ej: float, ng_grid, n_levels: int, nmax: int = 30) -> np.ndarray:
    """Lowest ``n_levels`` energies for each offset charge in ``ng_grid``."""
    return np.array([diagonalize(ChargeBasisHamiltonian(Ec, Ej, float(ng), nmax), n_levels).levels[:n_levels]
                     for ng in ng_grid])
