"""Linear spontaneous-emission theory: characteristic function, poles and residues.

In the Laplace domain (``s = -i w``) the qubit quadrature obeys
``X(s) = [(s + omega_j^2 eta) X(0) + omega_j Y(0)] / D_j(s)`` with

    D_j(s) = s^2 + omega_j^2 [1 - gamma + M_0 + eta s
             + sum_n M_n s (cos(2 delta_n)(s + kappa_n) + sin(2 delta_n) nu_n)
                         / ((s + kappa_n)^2 + nu_n^2)].

``M_0`` and ``eta`` are the zero-frequency pole terms described in
:mod:`cqed_spectra.greens`.  Setting ``simplified=True`` drops them together
with the ``kappa_n cos(2 delta_n)`` numerator term, which reproduces the
shorter textbook form of ``D_j``.

The roots come in conjugate pairs; the representative with ``Im p < 0`` is
stored, written ``p = -alpha - i beta``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .circuit import CircuitParams
from .errors import (
    BarePoleProximity,
    DegeneratePole,
    MisclassifiedPole,
    NewtonDiverged,
    RootCollision,
    UnstablePoleWarning,
)
from .greens import KernelCoefficients, kernel_coefficients, kernel_ik1
from .spectra import QuasiModeSet, quasi_modes

BARE_GUARD = 1e-12


def _cached_modes(params: CircuitParams, n_modes: int) -> QuasiModeSet:
    # the modes do not depend on the transmon energies
    return _modes_for(params.chi_j, params.chi_g, params.chi_R, params.chi_L, params.x0, n_modes)


@lru_cache(maxsize=256)
def _modes_for(chi_j, chi_g, chi_R, chi_L, x0, n_modes) -> QuasiModeSet:
    return quasi_modes(CircuitParams(chi_j, chi_g, chi_R, chi_L, x0, 1.0, 1.0), n_modes)


@dataclass(frozen=True)
class CharacteristicModel:
    """Truncated ``D_j(s)`` together with the circuit it was built from.

    Attributes
    ----------
    omega_j, gamma : float
        Bare transmon frequency and capacitive ratio.
    coeffs : KernelCoefficients
        Spectral constants of the retained modes.
    simplified : bool
        Use the shorter form of ``D_j`` (see module docstring).
    params : CircuitParams or None
        Source circuit; needed for homotopy-based pole classification.
    """

    omega_j: float
    gamma: float
    coeffs: KernelCoefficients
    simplified: bool = False
    params: CircuitParams | None = field(default=None, compare=False)

    @property
    def n_modes(self) -> int:
        return len(self.coeffs)

    @property
    def M(self) -> np.ndarray:
        return self.coeffs.M

    @property
    def iK1(self) -> float:
        return kernel_ik1(self.coeffs)

    @property
    def static_weight(self) -> float:
        return 0.0 if self.simplified else self.coeffs.static_weight

    @property
    def eta(self) -> float:
        return 0.0 if self.simplified else self.coeffs.eta

    @property
    def bare_poles(self) -> np.ndarray:
        """``z_n = -kappa_n - i nu_n``."""
        return -self.coeffs.kappa - 1j * self.coeffs.nu

    def _rational(self):
        """Numerator coefficients ``(e_n, f_n)`` of ``D_j = s^2 + a0 + eta' s + sum w_n (e s + f)/q``."""
        c = self.coeffs
        cc = np.cos(2 * c.delta)
        d = np.sin(2 * c.delta) * c.nu
        e = d - (2.0 if self.simplified else 1.0) * c.kappa * cc
        f = -cc * c.modulus ** 2
        a0 = self.omega_j ** 2 * (1.0 - self.gamma + np.sum(c.M * cc) + self.static_weight)
        return a0, self.omega_j ** 2 * c.M, e, f

    def state_matrix(self) -> np.ndarray:
        """Real companion matrix whose eigenvalues are the roots of ``D_j``.

        State ordering: ``(X, X', y_1, y_1', ..., y_N, y_N')`` with
        ``y_n'' + 2 kappa_n y_n' + |w_n|^2 y_n = X``.
        """
        a0, w, e, f = self._rational()
        c = self.coeffs
        N = self.n_modes
        A = np.zeros((2 * N + 2, 2 * N + 2))
        A[0, 1] = 1.0
        A[1, 0] = -a0
        A[1, 1] = -self.omega_j ** 2 * self.eta
        iy = 2 + 2 * np.arange(N)
        A[1, iy] = -w * f
        A[1, iy + 1] = -w * e
        A[iy, iy + 1] = 1.0
        A[iy + 1, iy] = -c.modulus ** 2
        A[iy + 1, iy + 1] = -2.0 * c.kappa
        A[iy + 1, 0] = 1.0
        return A


def characteristic_model(params: CircuitParams, n_modes: int, modes: QuasiModeSet | None = None,
                         include_static: bool = True, simplified: bool = False) -> CharacteristicModel:
    """Build the truncated ``D_j(s)`` for a circuit.

    ``modes`` may be passed to reuse a precomputed (possibly longer) mode set;
    it must belong to the same ``chi_s``, ``chi_R``, ``chi_L``, ``x0``.
    """
    if modes is None:
        modes = _cached_modes(params, n_modes)
    modes = modes.truncate(n_modes)
    coeffs = kernel_coefficients(params, modes, include_static=include_static and not simplified)
    return CharacteristicModel(params.omega_j, params.gamma, coeffs, simplified, params)


def _guard(s, model: CharacteristicModel) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    z = model.bare_poles
    bare = np.concatenate([z, np.conj(z)])
    if bare.size and np.any(np.min(np.abs(np.atleast_1d(s)[:, None] - bare[None, :]), axis=1) <= BARE_GUARD):
        raise BarePoleProximity("s coincides with a bare resonator pole")
    return s


def _q(s, c: KernelCoefficients):
    # factored form keeps full relative accuracy next to a bare pole
    return (s + c.kappa + 1j * c.nu) * (s + c.kappa - 1j * c.nu)


def _eval(s, model: CharacteristicModel, derivative: bool):
    a0, w, e, f = model._rational()
    c = model.coeffs
    ss = s[..., None]
    q = _q(ss, c)
    if derivative:
        dq = 2.0 * (ss + c.kappa)
        terms = w * (e * q - (e * ss + f) * dq) / q ** 2
        return 2.0 * s + model.omega_j ** 2 * model.eta + np.sum(terms, axis=-1)
    return s ** 2 + a0 + model.omega_j ** 2 * model.eta * s + np.sum(w * (e * ss + f) / q, axis=-1)


def dj(s, model: CharacteristicModel):
    """Evaluate ``D_j(s)``; vectorized over ``s``."""
    return _eval(_guard(s, model), model, False)


def dj_prime(s, model: CharacteristicModel):
    """Analytic derivative ``D_j'(s)``."""
    return _eval(_guard(s, model), model, True)


# ---------------------------------------------------------------------------
# Poles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoleSet:
    """Hybridized poles ``p = -alpha - i beta`` (lower half-plane representatives).

    ``p_j`` is the qubit-like pole, ``p_n[k]`` the pole connected to bare mode
    ``k + 1``.  ``z_n`` are the bare resonator poles of the same truncation.
    ``omega_loaded = omega_j sqrt(1 - gamma + M_0)`` is the transmon frequency
    including the static load of the coupling capacitor, the reference for
    :attr:`lamb_loaded`.
    """

    p_j: complex
    p_n: np.ndarray
    z_n: np.ndarray
    omega_j: float
    omega_loaded: float = float("nan")

    @property
    def purcell(self) -> float:
        return float(-self.p_j.real)

    @property
    def beta_j(self) -> float:
        return float(-self.p_j.imag)

    @property
    def lamb(self) -> float:
        return self.beta_j - self.omega_j

    @property
    def lamb_loaded(self) -> float:
        """Shift of the qubit-like line from the capacitively loaded frequency."""
        return self.beta_j - self.omega_loaded

    @property
    def q_factor(self) -> float:
        return self.beta_j / self.purcell if self.purcell != 0 else float("inf")

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([[self.p_j], self.p_n])

    @property
    def unstable(self) -> np.ndarray:
        """Mask over :attr:`all` of roots with positive real part beyond rounding."""
        z = self.all
        return z.real > 1e-12 * np.abs(z)


def _polish(model: CharacteristicModel, z: np.ndarray, max_iter: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Newton refinement of eigenvalue estimates.

    Estimates sitting on the bare pole of a mode with negligible weight are
    exact already.  A refinement that wanders away from its estimate (more
    than ``1e-6`` relative) is rejected in favour of the estimate.
    """
    z0 = np.array(z, dtype=complex)
    z = z0.copy()
    M = model.M
    weak = M <= 1e-13 * (M.max() if M.size else 0.0)
    bare = model.bare_poles[weak]
    fixed = np.zeros(z.shape, dtype=bool)
    if bare.size:
        dist = np.abs(z[:, None] - bare[None, :])
        hit = np.argmin(dist, axis=1)
        fixed = dist[np.arange(z.size), hit] < 1e-8 * np.maximum(1.0, np.abs(z))
        z[fixed] = bare[hit[fixed]]
    ok = fixed.copy()
    active = ~fixed
    for _ in range(max_iter):
        if not active.any():
            break
        za = z[active]
        step = _eval(za, model, False) / _eval(za, model, True)
        z[active] = za - step
        conv = np.abs(step) <= 1e-12 * np.maximum(1.0, np.abs(za))
        idx = np.flatnonzero(active)
        ok[idx[conv]] = True
        active[idx[conv]] = False
    strayed = np.abs(z - z0) > 1e-6 * np.maximum(1.0, np.abs(z0))
    z[strayed] = z0[strayed]
    ok |= strayed
    return z, ok


def all_roots(model: CharacteristicModel) -> np.ndarray:
    """All ``N + 1`` lower-half-plane roots of ``D_j``, unsorted, Newton-polished."""
    ev = np.linalg.eigvals(model.state_matrix())
    ev = ev[ev.imag < 0]
    ev = ev[np.argsort(ev.imag)[::-1]]
    if ev.size != model.n_modes + 1:
        raise DegeneratePole(f"expected {model.n_modes + 1} complex pole pairs, found {ev.size}")
    z, ok = _polish(model, ev)
    if not ok.all():
        raise NewtonDiverged(int(np.flatnonzero(~ok)[0]))
    return z


def _assign(prev: np.ndarray, cand: np.ndarray, degenerate: float = 1e-4) -> tuple[np.ndarray, float]:
    """Match candidates to previous poles; return the order and the worst ambiguity.

    Ambiguity is the ratio of the chosen distance to the second-best distance.
    Previous poles closer together than ``degenerate`` (relative) are treated
    as a cluster: their candidates are assigned in order of frequency, since
    levels repel rather than cross, and they are left out of the ambiguity.
    """
    cost = np.abs(prev[:, None] - cand[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = cols[np.argsort(rows)]
    if cand.size < 2:
        return order, 0.0
    scale = np.maximum(1.0, np.abs(prev))
    near = np.abs(prev[:, None] - prev[None, :]) < degenerate * scale[:, None]
    np.fill_diagonal(near, False)
    clustered = near.any(axis=1)
    for i in np.flatnonzero(clustered):
        members = np.flatnonzero(near[i] | (np.arange(prev.size) == i))
        by_freq = members[np.argsort(prev[members].imag)]
        order[by_freq] = np.sort(order[members])[np.argsort(cand[np.sort(order[members])].imag)]
    chosen = cost[np.arange(prev.size), order]
    # exact matches (decoupled modes) are certain and do not compete for other rows
    exact = chosen < 1e-10 * scale
    masked = cost.copy()
    masked[:, order[exact]] = np.inf
    masked[np.arange(prev.size), order] = chosen
    second = np.sort(masked, axis=1)[:, 1]
    ratio = chosen / np.maximum(second, 1e-300)
    ambiguity = float(np.max(ratio[~clustered])) if (~clustered).any() else 0.0
    return order, ambiguity


def _finish(model: CharacteristicModel, tracked: np.ndarray) -> PoleSet:
    loaded = model.omega_j * np.sqrt(1.0 - model.gamma + model.static_weight)
    poles = PoleSet(complex(tracked[0]), tracked[1:], model.bare_poles, model.omega_j, float(loaded))
    if model.n_modes >= 5 and np.any(poles.unstable):
        warnings.warn(f"{int(poles.unstable.sum())} root(s) of D_j in Re s > 0 with N={model.n_modes}",
                      UnstablePoleWarning, stacklevel=3)
    return poles


def find_poles(model: CharacteristicModel, seeds: PoleSet | Sequence[complex] | None = None,
               steps: int = 10, max_refine: int = 6) -> PoleSet:
    """Hybridized poles of ``D_j`` with the qubit-like pole identified.

    Without ``seeds`` the classification follows a homotopy in ``chi_g``
    from zero (where the qubit pole is ``-i omega_j`` and the rest are the
    bare ``z_n``) to the model's value in ``steps`` increments; mode sets are
    recomputed at every step.  Each step computes all roots and matches them
    to the previous step by minimum-cost assignment; a step whose matching is
    ambiguous is subdivided, up to ``max_refine`` times.

    With ``seeds`` (e.g. the poles at a neighbouring sweep point) the roots
    are matched to the seeds directly, qubit-like seed first.
    """
    if seeds is not None:
        prev = seeds.all if isinstance(seeds, PoleSet) else np.asarray(seeds, dtype=complex)
        roots = all_roots(model)
        order, amb = _assign(prev, roots)
        if amb >= 0.5:
            raise MisclassifiedPole(float("nan"), "seeded matching is ambiguous")
        return _finish(model, roots[order])

    params = model.params
    bare = np.concatenate([[-1j * model.omega_j], model.bare_poles])
    if params is None or params.chi_g == 0:
        # nothing to continue along: label by proximity to the bare frequencies
        roots = all_roots(model)
        return _finish(model, roots[_assign(bare, roots)[0]])

    def model_at(chi_g):
        p = params.with_changes(chi_g=chi_g)
        return characteristic_model(p, model.n_modes, include_static=model.coeffs.static_weight != 0
                                    or model.coeffs.eta != 0, simplified=model.simplified)

    # gamma rises steeply at small chi_g, so walk uniformly in gamma instead
    chi_j, g_end = params.chi_j, params.gamma

    def chi_g_at(t):
        g = t * g_end
        return params.chi_g if t >= 1.0 else chi_j * g / (1.0 - g)

    start = model_at(0.0)
    origin = np.concatenate([[-1j * start.omega_j], start.bare_poles])
    history = [origin, origin]
    t_prev, dt, last_dt = 0.0, 1.0 / steps, 1.0 / steps
    refine = 0
    while t_prev < 1.0:
        t_next = min(1.0, t_prev + dt)
        m = model if t_next >= 1.0 else model_at(chi_g_at(t_next))
        roots = all_roots(m)
        # linear extrapolation from the last two accepted steps
        predicted = history[-1] + (history[-1] - history[-2]) * ((t_next - t_prev) / last_dt)
        order, amb = _assign(predicted, roots)
        if amb >= 0.5:
            if refine >= max_refine:
                raise MisclassifiedPole(chi_g_at(t_prev))
            dt *= 0.5
            refine += 1
            continue
        history = [history[-1], roots[order]]
        last_dt = t_next - t_prev
        t_prev = t_next
        refine = 0
        dt = min(1.0 / steps, 2.0 * dt)
    if _min_pair_distance(history[-1]) < 1e-12:
        raise RootCollision((0, 1))
    return _finish(model, history[-1])


def _min_pair_distance(z: np.ndarray) -> float:
    if z.size < 2:
        return np.inf
    d = np.abs(z[:, None] - z[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


# ---------------------------------------------------------------------------
# Residues and trajectories
# ---------------------------------------------------------------------------

class ResidueSet:
    """Residues ``A^X`` and ``A^Y`` ordered like :attr:`PoleSet.all`."""

    def __init__(self, AX: np.ndarray, AY: np.ndarray, poles: PoleSet) -> None:
        self.AX = AX
        self.AY = AY
        self.poles = poles

    def sum_rule(self) -> float:
        """``sum (A^X + conj)`` over every pole; equals 1 for a consistent set."""
        return float(2.0 * np.sum(self.AX.real))


def residues(model: CharacteristicModel, poles: PoleSet) -> ResidueSet:
    """``A^X = (p + omega_j^2 eta) / D'(p)`` and ``A^Y = omega_j / D'(p)``."""
    p = poles.all
    bare = np.concatenate([model.bare_poles, np.conj(model.bare_poles)])
    # a pole sitting on a bare pole belongs to a decoupled mode; 1/D has no pole there
    live = np.min(np.abs(p[:, None] - bare[None, :]), axis=1, initial=np.inf) > BARE_GUARD
    AX = np.zeros(p.size, dtype=complex)
    AY = np.zeros(p.size, dtype=complex)
    d = _eval(p[live], model, True)
    if np.any(np.abs(d) <= 1e-10):
        raise DegeneratePole("D_j'(p) vanishes at a stored pole")
    wj = model.omega_j
    AX[live] = (p[live] + wj ** 2 * model.eta) / d
    AY[live] = wj / d
    return ResidueSet(AX, AY, poles)


def trajectory_linear(poles: PoleSet, res: ResidueSet, X0: float, Y0: float, t_grid) -> np.ndarray:
    """``<X_j(t)> = sum_l 2 Re[(A^X_l X0 + A^Y_l Y0) e^{p_l t}]``."""
    t = np.asarray(t_grid, dtype=float)
    amp = res.AX * X0 + res.AY * Y0
    return 2.0 * np.real(np.exp(np.outer(t, poles.all)) @ amp)


def toy_rwa_dj(s, omega_j: float, omega_c: float, kappa_c: float, g: float, rwa: bool = False):
    """Single-mode toy characteristic function with or without the rotating-wave approximation."""
    s = np.asarray(s, dtype=complex)
    if rwa:
        return s ** 2 + (omega_j ** 2 + g ** 2) - g ** 2 * (omega_j + omega_c) ** 2 / (
            s ** 2 + 2 * kappa_c * s + omega_c ** 2 + g ** 2)
    return s ** 2 + omega_j ** 2 - 4 * g ** 2 * omega_j * omega_c / (s ** 2 + 2 * kappa_c * s + omega_c ** 2)


def toy_poles(omega_j: float, omega_c: float, kappa_c: float, g: float, rwa: bool = False) -> np.ndarray:
    """Lower-half-plane roots of :func:`toy_rwa_dj`, qubit-like first (by continuity from g=0)."""
    if rwa:
        b = omega_c ** 2 + g ** 2
        coeffs = [1, 2 * kappa_c, b + omega_j ** 2 + g ** 2, 2 * kappa_c * (omega_j ** 2 + g ** 2),
                  (omega_j ** 2 + g ** 2) * b - g ** 2 * (omega_j + omega_c) ** 2]
    else:
        coeffs = [1, 2 * kappa_c, omega_c ** 2 + omega_j ** 2, 2 * kappa_c * omega_j ** 2,
                  omega_j ** 2 * omega_c ** 2 - 4 * g ** 2 * omega_j * omega_c]
    r = np.roots(coeffs)
    r = r[r.imag < 0]
    nu_c = np.sqrt(max(omega_c ** 2 - kappa_c ** 2, 0.0))
    bare = np.array([-1j * omega_j, -kappa_c - 1j * nu_c])
    order, _ = _assign(bare, r)
    return r[order]


# ---------------------------------------------------------------------------
# Sweeps and convergence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    omega_j: float
    alpha_j: float
    lamb: float
    lamb_loaded: float
    p_j: complex


def purcell_lamb_sweep(params: CircuitParams, omega_j_grid: Sequence[float], n_modes: int = 20,
                       include_static: bool = True) -> list[SweepRow]:
    """Qubit-like pole along a grid of bare transmon frequencies.

    ``Ej/Ec`` is held fixed.  Every grid point is classified by the
    ``chi_g`` homotopy of :func:`find_poles`; continuity in ``omega_j`` alone
    would hand the label to a resonator-like pole after each anticrossing.
    The mode sets along the homotopy do not depend on ``omega_j`` and are
    shared between grid points.
    """
    nu = _cached_modes(params, n_modes).nu
    rows: list[SweepRow] = []
    for wj in omega_j_grid:
        if np.min(np.abs(nu - wj)) <= 1e-6:
            raise BarePoleProximity(f"omega_j={wj} is within 1e-6 of a bare resonance")
        model = characteristic_model(params.with_omega_j(float(wj)), n_modes,
                                     include_static=include_static)
        poles = find_poles(model)
        rows.append(SweepRow(float(wj), poles.purcell, poles.lamb, poles.lamb_loaded, poles.p_j))
    return rows


@dataclass(frozen=True)
class ConvergenceReport:
    n_modes: int
    drift_p_j: float
    drift_max: float

    def as_dict(self) -> dict:
        return {"n_modes": self.n_modes, "drift_p_j": self.drift_p_j, "drift_max": self.drift_max}


def pole_convergence(params: CircuitParams, n_modes: int, poles: PoleSet | None = None,
                     include_static: bool = True) -> ConvergenceReport:
    """Pole drift when the truncation is doubled from ``n_modes`` to ``2 n_modes``."""
    if poles is None:
        poles = find_poles(characteristic_model(params, n_modes, include_static=include_static))
    fine_model = characteristic_model(params, 2 * n_modes, include_static=include_static)
    # the added modes are weakly hybridized and start from their own bare poles
    fine = find_poles(fine_model, seeds=np.concatenate([poles.all, fine_model.bare_poles[n_modes:]]))
    drift = np.abs(fine.all[: n_modes + 1] - poles.all)
    return ConvergenceReport(n_modes, float(drift[0]), float(drift.max()))
