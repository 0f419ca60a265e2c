"""Current-conserving resonator modes: closed, open-Hermitian and quasi-bound.

The resonator occupies ``0 <= x <= 1``.  A transmon attached at ``x0`` through the
series capacitance ``chi_s`` imposes a jump in the field derivative,
``phi'(x0+) - phi'(x0-) + chi_s k^2 phi(x0) = 0``, and the end capacitors
``chi_R`` / ``chi_L`` couple the resonator to semi-infinite waveguides.

Three eigenproblems are solved here:

* closed (``chi_R = chi_L = 0``): real roots of
  ``sin k + chi_s k cos(k x0) cos(k (1 - x0)) = 0``;
* open-Hermitian: the end capacitors act as lumped capacitances to ground;
* quasi-bound: outgoing-wave boundary conditions, complex roots
  ``omega_n = nu_n - i kappa_n`` of the analytic characteristic function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .circuit import CircuitParams
from .errors import (
    NewtonDiverged,
    NonPositiveEntry,
    RootBracketFailure,
    RootCollision,
)

Boundary = Literal["closed", "open"]

SCAN_STEP = np.pi / 64
_MAX_NEWTON = 200


# ---------------------------------------------------------------------------
# Hermitian modes
# ---------------------------------------------------------------------------

def _hermitian_char(k, chi_s, chi_R, chi_L, x0):
    """Left/right shape functions and the matching determinant at real ``k``.

    ``u(x) = cos kx - chi_L k sin kx`` solves the left boundary condition,
    ``v(x) = cos k(1-x) - chi_R k sin k(1-x)`` the right one; a root is a ``k``
    where the Wronskian-like combination at ``x0`` vanishes.  Dividing by ``k``
    gives the six-term equation (and ``sin k + chi_s k cos cos`` when closed).
    """
    y = 1.0 - x0
    ca, sa = np.cos(k * x0), np.sin(k * x0)
    cb, sb = np.cos(k * y), np.sin(k * y)
    U = ca - chi_L * k * sa
    U1 = -sa - chi_L * k * ca          # u'(x0) / k
    V = cb - chi_R * k * sb
    V1 = sb + chi_R * k * cb           # v'(x0) / k
    return U * V1 - U1 * V + chi_s * k * U * V


def _polish(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _scan_roots(f, n_modes: int, step: float = SCAN_STEP, refine: int = 64) -> np.ndarray:
    """Bracket the first ``n_modes`` positive roots of ``f`` and polish with Brent.

    Cells without a sign change but with a local dip of ``|f|`` are re-scanned
    ``refine`` times finer, so closely spaced root pairs are not lost.
    """
    upper = (n_modes + 2) * np.pi
    grid = np.arange(1, int(np.ceil(upper / step)) + 1) * step
    vals = f(grid)
    roots = list(grid[vals == 0.0])
    sign_change = np.sign(vals[:-1]) * np.sign(vals[1:]) < 0
    for i in np.flatnonzero(sign_change):
        roots.append(_polish(f, grid[i], grid[i + 1]))
    mag = np.abs(vals)
    dips = np.flatnonzero((mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])) + 1
    for i in dips:
        for lo_i in (i - 1, i):
            if sign_change[lo_i]:
                continue
            fine = np.linspace(grid[lo_i], grid[lo_i + 1], refine + 1)
            fv = f(fine)
            for j in np.flatnonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0):
                roots.append(_polish(f, fine[j], fine[j + 1]))
    roots = np.unique(np.asarray(roots))
    if roots.size < n_modes:
        raise RootBracketFailure(
            f"sign scan with step {step:.4g} found {roots.size} roots below {upper:.4g}, "
            f"{n_modes} requested")
    return roots[:n_modes]


def _closed_roots(chi_s: float, x0: float, n_modes: int) -> np.ndarray:
    """Closed-problem roots, one per interval ``[(n-1) pi, n pi]``.

    A positive point capacitance lowers each Neumann eigenvalue by at most one
    slot, and ``f(n pi) = (-1)^n chi_s n pi cos^2(n pi x0)`` alternates in
    sign, so every interval brackets exactly one root.
    """
    def f(k):
        return _hermitian_char(k, chi_s, 0.0, 0.0, x0)

    n = np.arange(1, n_modes + 1)
    hi = n * np.pi
    f_hi = f(hi)
    roots = np.empty(n_modes)
    for i in range(n_modes):
        if f_hi[i] == 0.0 or abs(f_hi[i]) < 1e-14 * hi[i]:
            roots[i] = hi[i]
            continue
        lo = max((i) * np.pi, 1e-12)
        if i > 0 and abs(f_hi[i - 1]) < 1e-14 * hi[i - 1]:
            lo = hi[i - 1] + 1e-12 * hi[i - 1]
        roots[i] = _polish(f, lo, hi[i])
    return roots


@dataclass(frozen=True)
class HermitianModeSet:
    """Real current-conserving modes with their normalization constants.

    Eigenfunctions are ``phi_n(x) = N_n a_n u_n(x)`` for ``x <= x0`` and
    ``N_n b_n v_n(x)`` for ``x >= x0``, where ``u`` and ``v`` solve the left and
    right boundary conditions.  ``(a_n, b_n)`` satisfy the matching conditions
    at ``x0`` (normally ``a = v(x0)``, ``b = u(x0)``; for a mode with a node at
    ``x0`` the derivative condition fixes them instead).  The modes are
    normalized against the capacitance density including its point-like
    contributions.
    """

    k: np.ndarray
    norm_consts: np.ndarray
    boundary: Boundary
    x0: float
    chi_s: float
    chi_R: float
    chi_L: float
    left_coef: np.ndarray
    right_coef: np.ndarray

    def __len__(self) -> int:
        return self.k.size

    def _pieces(self, x):
        x = np.asarray(x, dtype=float)
        col = (lambda a: a[:, None]) if x.ndim else (lambda a: a)
        xx = x[None, :] if x.ndim else x
        return col(self.k), xx, col(self.norm_consts * self.left_coef), col(self.norm_consts * self.right_coef)

    def amp_at(self, x) -> np.ndarray:
        """Normalized eigenfunctions at ``x`` (scalar -> ``(n,)``, array -> ``(n, len(x))``)."""
        k, xx, a, b = self._pieces(x)
        left = np.cos(k * xx) - self.chi_L * k * np.sin(k * xx)
        right = np.cos(k * (1 - xx)) - self.chi_R * k * np.sin(k * (1 - xx))
        return np.where(xx <= self.x0, a * left, b * right)

    def deriv_at(self, x, side: Literal["left", "right"] = "left") -> np.ndarray:
        """Spatial derivative; ``side`` selects the one-sided limit at ``x0``."""
        k, xx, a, b = self._pieces(x)
        dleft = -k * np.sin(k * xx) - self.chi_L * k * k * np.cos(k * xx)
        dright = k * np.sin(k * (1 - xx)) + self.chi_R * k * k * np.cos(k * (1 - xx))
        use_left = (xx < self.x0) | ((xx == self.x0) & (side == "left"))
        return np.where(use_left, a * dleft, b * dright)

    def residuals(self) -> np.ndarray:
        return np.abs(_hermitian_char(self.k, self.chi_s, self.chi_R, self.chi_L, self.x0))


def _piece_integral(k, c, a):
    """``int_0^a (cos kx - c sin kx)^2 dx`` in closed form."""
    return (0.5 * (1 + c * c) * a + (1 - c * c) * np.sin(2 * k * a) / (4 * k)
            - c * (1 - np.cos(2 * k * a)) / (2 * k))


def _hermitian_modes(params: CircuitParams, n_modes: int, chi_R: float, chi_L: float,
                     boundary: Boundary) -> HermitianModeSet:
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    chi_s, x0 = params.chi_s, params.x0

    def f(k):
        return _hermitian_char(k, chi_s, chi_R, chi_L, x0)

    if chi_R == 0.0 and chi_L == 0.0:
        k = _closed_roots(chi_s, x0, n_modes)
    else:
        k = _scan_roots(f, n_modes)
    y0 = 1.0 - x0
    U = np.cos(k * x0) - chi_L * k * np.sin(k * x0)
    V = np.cos(k * y0) - chi_R * k * np.sin(k * y0)
    U1 = -np.sin(k * x0) - chi_L * k * np.cos(k * x0)   # u'(x0) / k
    V1 = np.sin(k * y0) + chi_R * k * np.cos(k * y0)    # v'(x0) / k
    # continuity a U = b V, or the derivative jump b V1 - a (U1 - chi_s k U) = 0
    by_value = np.hypot(U, V) >= np.hypot(V1, U1 - chi_s * k * U)
    a = np.where(by_value, V, V1)
    b = np.where(by_value, U, U1 - chi_s * k * U)
    norm2 = (a ** 2 * _piece_integral(k, chi_L * k, x0)
             + b ** 2 * _piece_integral(k, chi_R * k, y0)
             + chi_s * (a * U) ** 2
             + chi_L * a ** 2
             + chi_R * b ** 2)
    N = 1.0 / np.sqrt(norm2)
    return HermitianModeSet(k=k, norm_consts=N, boundary=boundary, x0=x0, chi_s=chi_s,
                            chi_R=chi_R, chi_L=chi_L, left_coef=a, right_coef=b)


def closed_cc_modes(params: CircuitParams, n_modes: int) -> HermitianModeSet:
    """First ``n_modes`` closed current-conserving modes (end capacitors ignored)."""
    return _hermitian_modes(params, n_modes, 0.0, 0.0, "closed")


def open_cc_modes(params: CircuitParams, n_modes: int) -> HermitianModeSet:
    """First ``n_modes`` open-Hermitian modes with lumped end capacitances."""
    return _hermitian_modes(params, n_modes, params.chi_R, params.chi_L, "open")


# ---------------------------------------------------------------------------
# Quasi-bound modes
# ---------------------------------------------------------------------------

def quasi_char(omega, chi_s: float, chi_R: float, chi_L: float, x0: float):
    """Characteristic function of the outgoing-wave problem and its derivative.

    ``F(w) = e^{2iw} - a_L a_R + (i/2) chi_s w (e^{2iw x0} + a_L)(e^{2iw(1-x0)} + a_R)``
    with ``a_{L,R} = 1 - 2i chi_{L,R} w``.
    """
    w = np.asarray(omega, dtype=complex)
    aL = 1 - 2j * chi_L * w
    aR = 1 - 2j * chi_R * w
    E = np.exp(2j * w)
    E0 = np.exp(2j * w * x0)
    E1 = np.exp(2j * w * (1 - x0))
    P = E0 + aL
    Q = E1 + aR
    F = E - aL * aR + 0.5j * chi_s * w * P * Q
    dP = 2j * x0 * E0 - 2j * chi_L
    dQ = 2j * (1 - x0) * E1 - 2j * chi_R
    dF = (2j * E + 2j * chi_L * aR + 2j * chi_R * aL
          + 0.5j * chi_s * (P * Q + w * (dP * Q + P * dQ)))
    return F, dF


def _char_scale(omega, chi_s, chi_R, chi_L, x0):
    w = np.asarray(omega, dtype=complex)
    aL = 1 - 2j * chi_L * w
    aR = 1 - 2j * chi_R * w
    P = np.exp(2j * w * x0) + aL
    Q = np.exp(2j * w * (1 - x0)) + aR
    return np.maximum.reduce([np.abs(np.exp(2j * w)), np.abs(aL * aR),
                              0.5 * chi_s * np.abs(w * P * Q), np.ones(w.shape)])


def _damped_newton(z0, fun, max_iter=_MAX_NEWTON, max_step=0.5, tol=1e-14):
    """Vectorized Newton iteration with a step cap and backtracking on ``|F|``.

    Returns the iterates and a boolean convergence mask.
    """
    z = np.array(z0, dtype=complex)
    F, dF = fun(z)
    done = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        active = ~done
        if not active.any():
            break
        step = -F[active] / dF[active]
        mag = np.abs(step)
        big = mag > max_step
        step[big] *= max_step / mag[big]
        za, Fa = z[active], F[active]
        trial = za + step
        Ft, dFt = fun(trial)
        worse = np.abs(Ft) > np.abs(Fa)
        lam = 1.0
        while worse.any() and lam > 1e-6:
            lam *= 0.5
            trial[worse] = za[worse] + lam * step[worse]
            Fw, dFw = fun(trial[worse])
            Ft[worse], dFt[worse] = Fw, dFw
            worse_idx = np.flatnonzero(worse)
            worse[worse_idx] = np.abs(Fw) > np.abs(Fa[worse_idx])
        idx = np.flatnonzero(active)
        z[idx], F[idx], dF[idx] = trial, Ft, dFt
        conv = np.abs(trial - za) <= tol * np.maximum(1.0, np.abs(za))
        done[idx[conv]] = True
    return z, done


class ShapeData(NamedTuple):
    U: np.ndarray
    U1: np.ndarray
    V: np.ndarray
    V1: np.ndarray
    W: np.ndarray
    dW: np.ndarray


def wronskian(omega, chi_s: float, chi_R: float, chi_L: float, x0: float) -> ShapeData:
    """Matching determinant ``W = u v' - u' v + chi_s w^2 u v`` at ``x0`` and ``dW/dw``.

    ``u(x) = cos wx + a sin wx`` obeys the left outgoing-wave condition and
    ``v(x) = cos w(1-x) + b sin w(1-x)`` the right one, with
    ``a = -chi_L w / (1 - i chi_L w)`` and ``b = -chi_R w / (1 - i chi_R w)``.
    ``W`` vanishes exactly at the quasi-bound frequencies.
    """
    w = np.asarray(omega, dtype=complex)
    y = 1.0 - x0
    dL = 1 - 1j * chi_L * w
    dR = 1 - 1j * chi_R * w
    a, b = -chi_L * w / dL, -chi_R * w / dR
    da, db = -chi_L / dL ** 2, -chi_R / dR ** 2
    ca, sa = np.cos(w * x0), np.sin(w * x0)
    cb, sb = np.cos(w * y), np.sin(w * y)
    U = ca + a * sa
    U1 = w * (-sa + a * ca)
    V = cb + b * sb
    V1 = w * (sb - b * cb)
    dU = -x0 * sa + da * sa + a * x0 * ca
    dU1 = (-sa + a * ca) + w * (-x0 * ca + da * ca - a * x0 * sa)
    dV = -y * sb + db * sb + b * y * cb
    dV1 = (sb - b * cb) + w * (y * cb - db * cb + b * y * sb)
    W = U * V1 - U1 * V + chi_s * w * w * U * V
    dW = (dU * V1 + U * dV1 - dU1 * V - U1 * dV
          + chi_s * (2 * w * U * V + w * w * (dU * V + U * dV)))
    return ShapeData(U, U1, V, V1, W, dW)


def outgoing_solution(x, omega, chi_s: float, chi_R: float, chi_L: float, x0: float,
                      side: Literal["left", "right"]):
    """Evaluate the left (``u``) or right (``v``) outgoing solution anywhere on the line.

    The solution is continued through the qubit junction with the
    current-conservation jump and into the waveguides as an outgoing wave.
    ``omega`` and ``x`` broadcast against each other.
    """
    w = np.asarray(omega, dtype=complex)
    x = np.asarray(x, dtype=float)
    y0 = 1.0 - x0
    a = -chi_L * w / (1 - 1j * chi_L * w)
    b = -chi_R * w / (1 - 1j * chi_R * w)
    if side == "left":
        inner = np.cos(w * x) + a * np.sin(w * x)
        U = np.cos(w * x0) + a * np.sin(w * x0)
        U1 = w * (-np.sin(w * x0) + a * np.cos(w * x0)) - chi_s * w * w * U
        d = x - x0
        beyond = U * np.cos(w * d) + U1 * np.sin(w * d) / w
        d1 = 1.0 - x0
        dat1 = -U * w * np.sin(w * d1) + U1 * np.cos(w * d1)
        # right end: phi'(1-) = chi_R w^2 (phi(1-) - phi(1+)), phi'(1+) = phi'(1-) = i w phi(1+)
        out1 = dat1 / (1j * w)
        outside_right = out1 * np.exp(1j * w * (x - 1.0))
        outside_left = 1j * a * np.exp(-1j * w * x)
        return np.where(x < 0, outside_left,
                        np.where(x <= x0, inner, np.where(x <= 1.0, beyond, outside_right)))
    inner = np.cos(w * (1 - x)) + b * np.sin(w * (1 - x))
    V = np.cos(w * y0) + b * np.sin(w * y0)
    V1 = w * (np.sin(w * y0) - b * np.cos(w * y0)) + chi_s * w * w * V
    d = x0 - x
    beyond = V * np.cos(w * d) - V1 * np.sin(w * d) / w
    dat0 = V * w * np.sin(w * x0) + V1 * np.cos(w * x0)
    out0 = 1j * dat0 / w
    outside_left = out0 * np.exp(-1j * w * x)
    outside_right = 1j * b * np.exp(1j * w * (x - 1.0))
    return np.where(x > 1.0, outside_right,
                    np.where(x >= x0, inner, np.where(x >= 0.0, beyond, outside_left)))


@dataclass(frozen=True)
class QuasiModeSet:
    """Complex quasi-bound frequencies with residue-normalized amplitudes.

    Attributes
    ----------
    omega : complex ndarray
        ``nu_n - i kappa_n`` for ``n = 1..N`` (``nu_n >= 0``).
    phi_at_x0 : complex ndarray
        Normalized mode amplitude at the qubit position, phase fixed so that
        ``Re phi >= 0``.
    coeff : complex ndarray
        Scale factors turning the left outgoing solution into the mode.
    ratio : complex ndarray
        ``v / u`` at the pole, used to evaluate the mode right of ``x0``.
    """

    omega: np.ndarray
    phi_at_x0: np.ndarray
    coeff: np.ndarray
    ratio: np.ndarray
    x0: float
    chi_s: float
    chi_R: float
    chi_L: float

    def __len__(self) -> int:
        return self.omega.size

    @property
    def nu(self) -> np.ndarray:
        return self.omega.real

    @property
    def kappa(self) -> np.ndarray:
        return -self.omega.imag

    @property
    def delta(self) -> np.ndarray:
        return np.angle(self.phi_at_x0)

    @property
    def theta(self) -> np.ndarray:
        return np.arctan2(self.kappa, self.nu)

    def truncate(self, n_modes: int) -> "QuasiModeSet":
        sl = slice(0, n_modes)
        return QuasiModeSet(self.omega[sl], self.phi_at_x0[sl], self.coeff[sl], self.ratio[sl],
                            self.x0, self.chi_s, self.chi_R, self.chi_L)

    def residuals(self, relative: bool = True) -> np.ndarray:
        """Characteristic-function residuals at the stored roots.

        With ``relative=True`` each residual is divided by the largest
        magnitude among the terms of ``F``, which is the scale set by
        floating-point rounding at high frequency.
        """
        F, _ = quasi_char(self.omega, self.chi_s, self.chi_R, self.chi_L, self.x0)
        if not relative:
            return np.abs(F)
        return np.abs(F) / _char_scale(self.omega, self.chi_s, self.chi_R, self.chi_L, self.x0)

    def amp_at(self, x) -> np.ndarray:
        """Mode functions at position(s) ``x`` (waveguide positions allowed).

        Returns shape ``(n,)`` for scalar ``x`` and ``(n, len(x))`` otherwise.
        """
        x = np.asarray(x, dtype=float)
        w = self.omega[:, None] if x.ndim else self.omega
        c = self.coeff[:, None] if x.ndim else self.coeff
        r = self.ratio[:, None] if x.ndim else self.ratio
        xx = x[None, :] if x.ndim else x
        args = (self.chi_s, self.chi_R, self.chi_L, self.x0)
        left = outgoing_solution(xx, w, *args, side="left")
        right = outgoing_solution(xx, w, *args, side="right")
        return np.where(xx <= self.x0, c * left, c * right / r)


def _closest_pair(z: np.ndarray, reach: int = 3) -> tuple[int, int]:
    order = np.argsort(z.real)
    best, pair = np.inf, (1, 2)
    for r in range(1, min(reach, z.size - 1) + 1):
        d = np.abs(z[order[r:]] - z[order[:-r]])
        i = int(np.argmin(d))
        if d[i] < best:
            best, pair = d[i], tuple(sorted((int(order[i]) + 1, int(order[i + r]) + 1)))
    return pair


def _min_separation(z: np.ndarray, reach: int = 3) -> float:
    """Smallest distance between roots that are close in real part."""
    if z.size < 2:
        return np.inf
    zs = np.sort_complex(z)
    return min(np.min(np.abs(zs[r:] - zs[:-r])) for r in range(1, min(reach, z.size - 1) + 1))


def _quasi_roots(params: CircuitParams, n_modes: int, steps_per_decade: int = 12) -> np.ndarray:
    """Track closed-problem roots to the open problem by continuation in the openness.

    The end capacitances are scaled as ``lam * chi_{R,L}`` with ``lam`` swept
    geometrically from ``1e-6`` to ``1``; at every stage the previous roots
    seed a damped Newton solve.  Stages are subdivided when a solve fails or
    two roots merge.
    """
    closed = closed_cc_modes(params, n_modes).k.astype(complex)
    chi_s, chi_R, chi_L, x0 = params.chi_s, params.chi_R, params.chi_L, params.x0
    if chi_R == 0 and chi_L == 0:
        return closed

    def solve(z, lam):
        return _damped_newton(z, lambda w: quasi_char(w, chi_s, lam * chi_R, lam * chi_L, x0))

    z = closed
    lam, lam_end = 1e-6, 1.0
    z, ok = solve(z, lam)
    ratio = 10 ** (1.0 / steps_per_decade)
    while lam < lam_end:
        r = ratio
        while True:
            nxt = min(lam * r, lam_end)
            trial, ok = solve(z, nxt)
            if ok.all() and _min_separation(trial) > 1e-8:
                break
            r = np.sqrt(r)
            if r - 1.0 < 1e-6:
                bad = int(np.flatnonzero(~ok)[0]) if not ok.all() else -1
                if bad >= 0:
                    raise NewtonDiverged(bad + 1)
                raise RootCollision(_closest_pair(trial))
        z, lam = trial, nxt
    return z


def _normalize(omega: np.ndarray, chi_s: float, chi_R: float, chi_L: float, x0: float):
    """Residue normalization ``phi_n(x) phi_n(x') = 2 w_n Res G(x, x'; w_n)``."""
    sd = wronskian(omega, chi_s, chi_R, chi_L, x0)
    # v = ratio * u at the pole; use whichever of value/derivative is better conditioned
    use_val = np.abs(sd.U) * np.abs(omega) >= np.abs(sd.U1 - chi_s * omega ** 2 * sd.U)
    safe_U = np.where(use_val, sd.U, 1.0)
    safe_D = np.where(use_val, 1.0, sd.U1 - chi_s * omega ** 2 * sd.U)
    ratio = np.where(use_val, sd.V / safe_U, sd.V1 / safe_D)
    c = np.sqrt(2 * omega * ratio / sd.dW)
    phi0 = c * sd.U
    flip = phi0.real < 0
    flip |= (phi0.real == 0) & (c.real < 0)
    c = np.where(flip, -c, c)
    return c, ratio, c * sd.U


def quasi_modes(params: CircuitParams, n_modes: int) -> QuasiModeSet:
    """First ``n_modes`` quasi-bound modes of the open resonator.

    Roots are found by continuation from the closed problem (see
    :func:`_quasi_roots`) and normalized through the residue of the exact
    Green's function, which reduces to the Hermitian normalization when the
    resonator is closed.
    """
    omega = _quasi_roots(params, n_modes)
    omega = omega.real + 1j * np.minimum(omega.imag, 0.0)
    c, ratio, phi0 = _normalize(omega, params.chi_s, params.chi_R, params.chi_L, params.x0)
    return QuasiModeSet(omega=omega, phi_at_x0=phi0, coeff=c, ratio=ratio, x0=params.x0,
                        chi_s=params.chi_s, chi_R=params.chi_R, chi_L=params.chi_L)


# ---------------------------------------------------------------------------
# Couplings and exponents
# ---------------------------------------------------------------------------

def coupling_g(params: CircuitParams, modes: HermitianModeSet | QuasiModeSet) -> np.ndarray:
    """Light-matter couplings ``g_n = (gamma/2) sqrt(chi_j) sqrt(omega_j nu_n) |phi_n(x0)|``."""
    if isinstance(modes, QuasiModeSet):
        nu, amp = modes.nu, np.abs(modes.phi_at_x0)
    else:
        nu, amp = modes.k, np.abs(modes.amp_at(modes.x0))
    return 0.5 * params.gamma * np.sqrt(params.chi_j) * np.sqrt(params.omega_j * nu) * amp


class ExponentFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def asymptotic_exponent(series: Sequence[float], fit_range: tuple[int, int] | None = None,
                        n: Sequence[float] | None = None) -> ExponentFit:
    """Least-squares slope of ``log(series)`` against ``log(n)``.

    Parameters
    ----------
    series
        Positive values indexed from ``n = 1`` (or by the explicit ``n``).
    fit_range
        Inclusive ``(first, last)`` mode numbers to fit; defaults to all.
    """
    y = np.asarray(series, dtype=float)
    idx = np.arange(1, y.size + 1) if n is None else np.asarray(n, dtype=float)
    if fit_range is not None:
        lo, hi = fit_range
        mask = (idx >= lo) & (idx <= hi)
        y, idx = y[mask], idx[mask]
    if y.size < 10:
        raise ValueError("fit range must contain at least 10 points")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise NonPositiveEntry("series must be strictly positive on the fit range")
    lx, ly = np.log(idx), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), float(r2))
