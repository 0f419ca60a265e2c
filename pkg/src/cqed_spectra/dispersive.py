"""Dispersive-limit estimators and the Wigner-Weisskopf continuum kernel.

These are the perturbative benchmarks that the non-perturbative pole
analysis of :mod:`cqed_spectra.linear` is compared against:

* the multimode Purcell rate ``gamma_P = sum_n (g_n/delta_n)^2 kappa_n``,
* the dispersive Lamb shift ``Delta_L = sum_n g_n^2/delta_n``,
* the Laplace-domain Wigner-Weisskopf kernel of a qubit coupled to a
  one-dimensional continuum, with its Markov rate.

Detunings are ``delta_n = omega_j - nu_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple

import numpy as np
from scipy.integrate import quad

from .circuit import CircuitParams
from .errors import InputError, IntegralDiverges, OnResonance
from .spectra import ExponentFit, QuasiModeSet, asymptotic_exponent, coupling_g

RESONANCE_GUARD = 1e-9
GROWTH_THRESHOLD = 0.10


@dataclass(frozen=True)
class DispersiveReport:
    """Partial sums of the dispersive Purcell rate and Lamb shift.

    Attributes
    ----------
    n : ndarray
        Mode counts ``1..N``.
    gamma_partial, lamb_partial : ndarray
        Partial sums of ``(g_n/delta_n)^2 kappa_n`` and ``g_n^2/delta_n``.
    terms, lamb_terms : ndarray
        The individual terms.
    exponent : ExponentFit or None
        Power-law fit of the Purcell terms against ``n`` on ``fit_range``.
    fit_range : tuple of int
    last_quarter_growth : float
        Increase of the Purcell partial sum over the last quarter of the
        modes, relative to the total.
    divergence_flag : bool
        ``exponent > -1`` and ``last_quarter_growth > 0.1``.
    min_detuning_ratio : float
        ``min_n |delta_n| / g_n``; the estimate is meaningful only when large.
    """

    n: np.ndarray
    gamma_partial: np.ndarray
    lamb_partial: np.ndarray
    terms: np.ndarray
    lamb_terms: np.ndarray
    exponent: ExponentFit | None
    fit_range: tuple[int, int]
    last_quarter_growth: float
    divergence_flag: bool
    min_detuning_ratio: float

    @property
    def gamma_p(self) -> float:
        return float(self.gamma_partial[-1])

    @property
    def lamb(self) -> float:
        return float(self.lamb_partial[-1])

    def as_dict(self) -> dict:
        fit = None if self.exponent is None else self.exponent._asdict()
        return {"n_modes": int(self.n[-1]), "gamma_P": self.gamma_p, "lamb": self.lamb,
                "exponent_fit": fit, "fit_range": list(self.fit_range),
                "last_quarter_growth": self.last_quarter_growth,
                "divergence_flag": self.divergence_flag, "min_detuning_ratio": self.min_detuning_ratio}


def _detunings(modes: QuasiModeSet, omega_j: float, n_modes: int) -> np.ndarray:
    if n_modes > len(modes):
        raise InputError(f"requested {n_modes} modes but only {len(modes)} are available")
    delta = omega_j - modes.nu[:n_modes]
    close = np.abs(delta) <= RESONANCE_GUARD * max(1.0, abs(omega_j))
    if np.any(close):
        raise OnResonance(f"omega_j={omega_j} coincides with nu_{int(np.argmax(close)) + 1}")
    return delta


def _default_fit_range(n_modes: int) -> tuple[int, int]:
    return (max(1, n_modes // 2), n_modes)


def purcell_dispersive(modes: QuasiModeSet, couplings, omega_j: float, n_modes: int | None = None,
                       fit_range: tuple[int, int] | None = None) -> DispersiveReport:
    """Partial sums of the multimode dispersive Purcell rate.

    Parameters
    ----------
    modes : QuasiModeSet
        Supplies ``nu_n`` and ``kappa_n``.
    couplings : array_like
        ``g_n`` for the same modes (see :func:`cqed_spectra.spectra.coupling_g`).
    omega_j : float
        Qubit frequency.
    n_modes : int, optional
        Number of terms, default all.
    fit_range : (int, int), optional
        Mode numbers used for the exponent fit; default the upper half
        ``(N/2, N)``, where the terms have reached their asymptotic power law.
    """
    N = len(modes) if n_modes is None else int(n_modes)
    g = np.asarray(couplings, dtype=float)[:N]
    if g.size < N:
        raise InputError("fewer couplings than modes")
    delta = _detunings(modes, omega_j, N)
    terms = (g / delta) ** 2 * modes.kappa[:N]
    lamb_terms = g ** 2 / delta
    gamma_partial = np.cumsum(terms)
    lamb_partial = np.cumsum(lamb_terms)
    fr = _default_fit_range(N) if fit_range is None else tuple(fit_range)
    try:
        fit = asymptotic_exponent(terms, fit_range=fr)
    except ValueError:
        fit = None
    quarter = N - max(1, N // 4)
    before = gamma_partial[quarter - 1] if quarter >= 1 else 0.0
    growth = float((gamma_partial[-1] - before) / gamma_partial[-1]) if gamma_partial[-1] > 0 else 0.0
    flag = bool(fit is not None and fit.slope > -1.0 and growth > GROWTH_THRESHOLD)
    with np.errstate(divide="ignore"):
        ratio = float(np.min(np.abs(delta) / g)) if np.all(g > 0) else float("inf")
    return DispersiveReport(n=np.arange(1, N + 1), gamma_partial=gamma_partial, lamb_partial=lamb_partial,
                            terms=terms, lamb_terms=lamb_terms, exponent=fit, fit_range=fr,
                            last_quarter_growth=growth, divergence_flag=flag, min_detuning_ratio=ratio)


def lamb_dispersive(modes: QuasiModeSet, couplings, omega_j: float, n_modes: int | None = None) -> np.ndarray:
    """Signed partial sums of ``g_n^2 / delta_n``."""
    N = len(modes) if n_modes is None else int(n_modes)
    g = np.asarray(couplings, dtype=float)[:N]
    return np.cumsum(g ** 2 / _detunings(modes, omega_j, N))


def lamb_sign_scan(params: CircuitParams, modes: QuasiModeSet, omega_grid, n_modes: int | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Dispersive Lamb shift over a grid of qubit frequencies and the sign changes.

    The couplings are recomputed at each ``omega_j`` because ``g_n``
    scales with ``sqrt(omega_j)``.

    Returns
    -------
    shifts : ndarray
        ``Delta_L`` at each grid point.
    crossings : ndarray
        Grid midpoints between neighbours of opposite sign that are not
        separated by a bare mode (a pole of ``Delta_L``).
    """
    grid = np.asarray(omega_grid, dtype=float)
    shifts = np.array([lamb_dispersive(modes, coupling_g(params.with_omega_j(w), modes), w, n_modes)[-1]
                       for w in grid])
    nu = modes.nu if n_modes is None else modes.nu[:n_modes]
    crossings = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], shifts[:-1], shifts[1:]):
        if fa * fb < 0 and not np.any((nu > a) & (nu < b)):
            crossings.append(0.5 * (a + b))
    return shifts, np.array(crossings)


# ---------------------------------------------------------------------------
# Wigner-Weisskopf continuum
# ---------------------------------------------------------------------------

class WWKernel(NamedTuple):
    """Laplace-domain Wigner-Weisskopf kernel with its cutoff-doubling record.

    ``value`` is the integral up to the last cutoff.  ``tail_exponent`` is the
    fitted power ``p`` in ``increment ~ cutoff^p`` over the last doublings:
    negative means the tail shrinks and the integral converges.
    """

    value: complex
    cutoffs: tuple[float, ...]
    partial: tuple[complex, ...]
    tail_exponent: float
    converged: bool
    markov_rate: float


def markov_rate(params: CircuitParams, norm2: float = 1.0, length: float = 1.0, v_p: float = 1.0) -> float:
    """``Gamma_sp = gamma chi_s omega_j^2 N^2(x0) L / (2 v_p)``."""
    return params.gamma * params.chi_s * params.omega_j ** 2 * norm2 * length / (2.0 * v_p)


def continuum_amplitude(params: CircuitParams, model: Literal["suppressed", "constant"],
                        norm2: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """``|phi_k(x0)|^2`` as a function of the continuum frequency.

    ``"constant"`` is the coupling without the gauge-invariant correction,
    ``N^2``.  ``"suppressed"`` is the transmission of a shunt capacitance
    ``chi_s`` on an infinite line, ``N^2 / (1 + (chi_s w / 2)^2)``, which
    falls off as ``1/w^2``.
    """
    if model == "constant":
        return lambda w: norm2 * np.ones_like(np.asarray(w, dtype=float))
    if model == "suppressed":
        if params.chi_s <= 0:
            raise InputError("the suppressed amplitude needs chi_s > 0")
        half = 0.5 * params.chi_s
        return lambda w: norm2 / (1.0 + (half * np.asarray(w, dtype=float)) ** 2)
    raise InputError(f"unknown amplitude model {model!r}")


def ww_kernel(params: CircuitParams, s: complex, model: Literal["suppressed", "constant"] = "suppressed",
              norm2: float = 1.0, length: float = 1.0, v_p: float = 1.0, cutoff: float | None = None,
              doublings: int = 24, rtol: float = 1e-7, raise_on_divergence: bool = False) -> WWKernel:
    """``K(s) = (1/2pi)(gamma chi_s omega_j L / 4 v_p) int_0^W dw w |phi(w)|^2 / (s + i(w - omega_j))``.

    The cutoff ``W`` starts at ``cutoff`` (default ``20 max(omega_j, |s|)``)
    and is doubled until the last increment falls below ``rtol`` of the
    value or ``doublings`` is exhausted.  Each increment is integrated with
    adaptive quadrature on its own panel.

    Parameters
    ----------
    s : complex
        Laplace variable, ``Re s > 0``.
    model : {"suppressed", "constant"}
        Amplitude model, see :func:`continuum_amplitude`.
    raise_on_divergence : bool
        Raise :class:`IntegralDiverges` instead of returning a flagged result.
    """
    s = complex(s)
    if s.real <= 0:
        raise InputError("ww_kernel requires Re s > 0")
    wj = params.omega_j
    amp = continuum_amplitude(params, model, norm2)
    pref = params.gamma * params.chi_s * wj * length / (8.0 * np.pi * v_p)

    def integrand(w, part):
        val = w * amp(w) / (s + 1j * (w - wj))
        return val.real if part == 0 else val.imag

    def panel(a, b):
        pts = [wj] if a < wj < b else None
        re = quad(integrand, a, b, args=(0,), points=pts, limit=400, epsabs=0.0, epsrel=1e-11)[0]
        im = quad(integrand, a, b, args=(1,), points=pts, limit=400, epsabs=0.0, epsrel=1e-11)[0]
        return pref * complex(re, im)

    W = 20.0 * max(wj, abs(s)) if cutoff is None else float(cutoff)
    total = panel(0.0, W)
    cutoffs, partial, increments = [W], [total], []
    converged = False
    for _ in range(doublings):
        inc = panel(W, 2.0 * W)
        W *= 2.0
        total += inc
        cutoffs.append(W)
        partial.append(total)
        increments.append(abs(inc))
        if abs(inc) < rtol * abs(total):
            converged = True
            break
    tail = increments[-min(4, len(increments)):]
    exponent = float(np.polyfit(np.log2(cutoffs[-len(tail):]), np.log2(tail), 1)[0]) if len(tail) > 1 else 0.0
    converged = converged or exponent < 0 and increments[-1] < rtol * abs(total) * 10
    if exponent >= 0:
        converged = False
    result = WWKernel(value=total, cutoffs=tuple(cutoffs), partial=tuple(partial), tail_exponent=exponent,
                      converged=converged, markov_rate=markov_rate(params, norm2, length, v_p))
    if not converged and raise_on_divergence:
        raise IntegralDiverges(f"tail exponent {exponent:.2f} under cutoff doubling up to {W:.3g}")
    return result
