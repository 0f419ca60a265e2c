"""Direct integration of the reduced operator equation of the transmon quadrature.

The equation integrated here is

    X'' + w^2 [a F + eta F'] = -w^2 int_0^t K_2(t - t') F(t') dt',   F = X - eps X^3,

with ``w = omega_j`` and ``a = 1 - gamma + M_0 + iK_1(0)``, where ``X(t)`` is a
``d x d`` matrix on the truncated transmon Fock space.  ``M_0`` and ``eta`` are
the static terms of :class:`cqed_spectra.greens.KernelCoefficients`.  With them
the linear limit reproduces the characteristic function of
:mod:`cqed_spectra.linear` term by term.

The kernel ``K_2(tau) = sum_n Re[c_n exp(lambda_n tau)]`` with
``c_n = i A_n exp(i(theta_n - 2 delta_n))`` and ``lambda_n = -kappa_n + i nu_n``
is a sum of exponentials.  The memory integral is therefore carried by one
matrix accumulator per mode, updated recursively at O(1) cost per step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InputError, StepUnstable, TruncationWarning
from .greens import KernelCoefficients, kernel_ik1

GROWTH_LIMIT = 1e3
MEMORY_RULES = ("trapezoid", "exponential")


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size ``dt``, Fock truncation ``d``, memory quadrature and horizon ``T``.

    ``memory_rule`` is ``"trapezoid"`` (plain trapezoid rule on the product
    kernel x history) or ``"exponential"`` (exact integration of each
    exponential against the piecewise-linear history).  Samples are stored
    every ``save_every`` steps.
    """

    dt: float = 5e-4
    d: int = 5
    memory_rule: str = "trapezoid"
    T: float = 20.0
    save_every: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.T <= 0:
            raise InputError("dt and T must be positive")
        if self.d < 3:
            raise InputError("Fock truncation d must be at least 3")
        if self.memory_rule not in MEMORY_RULES:
            raise InputError(f"memory_rule must be one of {MEMORY_RULES}")
        if self.save_every < 1:
            raise InputError("save_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class OperatorTrajectory:
    """Sampled operator trajectory ``X(t)`` (and ``X'(t)``) on a uniform grid."""

    t: np.ndarray
    X: np.ndarray
    V: np.ndarray
    d: int
    hermiticity: float = 0.0
    info: dict = field(default_factory=dict)


def quadratures(d: int) -> tuple[np.ndarray, np.ndarray]:
    """``X = a + a^+`` and ``Y = -i (a - a^+)`` on a ``d``-level Fock space."""
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    return a + a.conj().T, -1j * (a - a.conj().T)


class _Kernel:
    """Exponential-sum representation of ``K_2`` with per-step weights."""

    def __init__(self, coeffs: KernelCoefficients, dt: float, rule: str) -> None:
        self.c = 1j * coeffs.A * np.exp(1j * (coeffs.theta - 2.0 * coeffs.delta))
        lam = -coeffs.kappa + 1j * coeffs.nu
        self.decay = np.exp(lam * dt)
        if rule == "trapezoid":
            self.w_old = 0.5 * dt * self.decay
            self.w_new = np.full(lam.shape, 0.5 * dt, dtype=complex)
        else:
            # int_0^h e^{lam (h - s)} [F0 (1 - s/h) + F1 s/h] ds
            z = lam * dt
            small = np.abs(z) < 1e-4
            zz = np.where(small, 1.0, z)
            e = self.decay
            w1 = np.where(small, dt * (0.5 + z / 6.0 + z ** 2 / 24.0), dt * (e - 1.0 - zz) / zz ** 2)
            w0 = np.where(small, dt * (0.5 + z / 3.0 + z ** 2 / 8.0), dt * (e * (zz - 1.0) + 1.0) / zz ** 2)
            self.w_old, self.w_new = w0, w1

        self.c_new = complex(np.sum(self.c * self.w_new))
        self._decay = self.decay[:, None, None]
        self._w_old = self.w_old[:, None, None]
        self._w_new = self.w_new[:, None, None]

    def carry(self, S: np.ndarray, F_old: np.ndarray) -> np.ndarray:
        """Accumulators advanced by one step without the newest history value."""
        return self._decay * S + self._w_old * F_old

    def close(self, T: np.ndarray, F_new: np.ndarray) -> np.ndarray:
        return T + self._w_new * F_new

    def advance(self, S: np.ndarray, F_old: np.ndarray, F_new: np.ndarray) -> np.ndarray:
        return self.close(self.carry(S, F_old), F_new)

    def weighted(self, S: np.ndarray) -> np.ndarray:
        if S.shape[0] == 0:
            return np.zeros(S.shape[1:], dtype=complex)
        return (self.c @ S.reshape(S.shape[0], -1)).reshape(S.shape[1:])

    def integral(self, S: np.ndarray) -> np.ndarray:
        return _herm(self.weighted(S))


def _herm(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def _cubic(X: np.ndarray) -> np.ndarray:
    return X @ X @ X


def integrate_reduced(omega_j: float, gamma: float, coeffs: KernelCoefficients, cfg: IntegratorConfig,
                      eps_d: float = 0.0, X0: np.ndarray | None = None, V0: np.ndarray | None = None
                      ) -> OperatorTrajectory:
    """Integrate the reduced operator equation with a two-stage predictor-corrector.

    Each step predicts ``(X, X')`` with an explicit Euler stage and corrects
    with the trapezoid rule (Heun's method), so the scheme is second order.
    The memory accumulators are advanced with the predicted and then the
    corrected history value.

    Parameters
    ----------
    omega_j, gamma : float
        Bare transmon frequency and capacitive ratio.
    coeffs : KernelCoefficients
        Spectral kernel constants, including the static terms.
    cfg : IntegratorConfig
    eps_d : float
        Duffing parameter multiplying ``X^3``.
    X0, V0 : ndarray, optional
        Initial operators; default ``X(0) = a + a^+`` and ``X'(0) = omega_j Y(0)``.
    """
    nu_max = float(np.max(coeffs.nu, initial=0.0))
    if nu_max > 0 and cfg.dt >= 0.1 / nu_max:
        raise InputError(f"dt={cfg.dt} violates the stability heuristic dt < 0.1/max(nu) = {0.1 / nu_max:.3e}")
    d = cfg.d
    Xq, Yq = quadratures(d)
    X = Xq.copy() if X0 is None else np.array(X0, dtype=complex)
    V = omega_j * Yq if V0 is None else np.array(V0, dtype=complex)
    if X.shape != (d, d) or V.shape != (d, d):
        raise DimensionMismatch("initial operators do not match the Fock truncation")

    w2 = omega_j ** 2
    a = 1.0 - gamma + coeffs.static_weight + kernel_ik1(coeffs)
    eta = coeffs.eta
    kern = _Kernel(coeffs, cfg.dt, cfg.memory_rule)
    h = cfg.dt

    def F_of(X):
        return X - eps_d * _cubic(X) if eps_d else X

    def Fdot(X, V):
        if not eps_d:
            return V
        return V - eps_d * (V @ X @ X + X @ V @ X + X @ X @ V)

    def accel(X, V, I):
        return -w2 * (a * F_of(X) + eta * Fdot(X, V) + I)

    S = np.zeros((len(coeffs), d, d), dtype=complex)
    F = F_of(X)
    acc = accel(X, V, np.zeros_like(X))
    scale = max(np.linalg.norm(X), np.linalg.norm(V) / max(omega_j, 1e-300))

    n = cfg.n_steps
    keep = cfg.save_every
    n_out = n // keep + 1
    ts = np.arange(n_out) * keep * h
    Xs = np.empty((n_out, d, d), dtype=complex)
    Vs = np.empty((n_out, d, d), dtype=complex)
    Xs[0], Vs[0] = X, V
    herm = 0.0
    cn = kern.c_new
    # a runaway step overflows before the growth check sees it; the check reports it instead
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n + 1):
            # the part of the next memory integral that does not depend on the new value
            T = kern.carry(S, F)
            P = kern.weighted(T)
            Xp = X + h * V
            Vp = V + h * acc
            Fp = F_of(Xp)
            accp = accel(Xp, Vp, _herm(P + cn * Fp))
            X = X + 0.5 * h * (V + Vp)
            V = V + 0.5 * h * (acc + accp)
            F = F_of(X)
            S = kern.close(T, F)
            acc = accel(X, V, _herm(P + cn * F))
            if step % keep == 0:
                k = step // keep
                Xs[k], Vs[k] = X, V
                herm = max(herm, float(np.max(np.abs(X - X.conj().T))))
                size = np.linalg.norm(X)
                if not np.isfinite(size) or size > GROWTH_LIMIT * scale:
                    raise StepUnstable(f"operator norm grew beyond {GROWTH_LIMIT:g} x initial at t={step * h:.4g}")
    return OperatorTrajectory(t=ts, X=Xs, V=Vs, d=d, hermiticity=herm,
                              info={"dt": h, "memory_rule": cfg.memory_rule, "eps_d": eps_d})


def memory_direct(F_history: np.ndarray, coeffs: KernelCoefficients, dt: float) -> np.ndarray:
    """Memory integral at the last sample by direct trapezoid summation over the stored history.

    ``F_history`` has shape ``(steps + 1, d, d)``.  This is the O(T^2) reference
    for the recursive accumulators (trapezoid rule).
    """
    m = F_history.shape[0] - 1
    tau = dt * np.arange(m, -1, -1)
    phase = np.outer(tau, coeffs.nu) + coeffs.theta - 2.0 * coeffs.delta
    K = -np.sum(coeffs.A * np.sin(phase) * np.exp(-np.outer(tau, coeffs.kappa)), axis=1)
    w = np.full(m + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return np.tensordot(w * K, F_history, axes=(0, 0))


def memory_recursive(F_history: np.ndarray, coeffs: KernelCoefficients, dt: float,
                     rule: str = "trapezoid") -> np.ndarray:
    """Same integral as :func:`memory_direct` through the recursive accumulators."""
    kern = _Kernel(coeffs, dt, rule)
    S = np.zeros((len(coeffs),) + F_history.shape[1:], dtype=complex)
    for k in range(1, F_history.shape[0]):
        S = kern.advance(S, F_history[k - 1], F_history[k])
    return kern.integral(S)


def _density(qubit_state, d: int) -> np.ndarray:
    s = np.asarray(qubit_state, dtype=complex)
    if s.shape[0] > d:
        raise DimensionMismatch(f"state of dimension {s.shape[0]} exceeds the truncation d={d}")
    rho = np.outer(s, s.conj()) if s.ndim == 1 else s
    out = np.zeros((d, d), dtype=complex)
    out[: rho.shape[0], : rho.shape[1]] = rho / np.trace(rho).real
    return out


def expectation(traj: OperatorTrajectory, qubit_state) -> np.ndarray:
    """``<X_j(t)> = Tr[rho_j(0) X(t)]`` (real part; the imaginary part vanishes)."""
    rho = _density(qubit_state, traj.d)
    return np.real(np.einsum("ij,tji->t", rho, traj.X))


def element(traj: OperatorTrajectory, m: int, n: int) -> np.ndarray:
    """Matrix element ``<m| X(t) |n>``."""
    return traj.X[:, m, n]


@dataclass(frozen=True)
class ConvergedSeries:
    """Richardson-extrapolated expectation with its self-convergence record."""

    t: np.ndarray
    x: np.ndarray
    dt: tuple[float, ...]
    halving_diffs: tuple[float, ...]
    order: float
    d_bump: float

    def as_dict(self) -> dict:
        return {"dt": list(self.dt), "halving_diffs": list(self.halving_diffs),
                "observed_order": self.order, "d_bump": self.d_bump}


def converged_expectation(omega_j: float, gamma: float, coeffs: KernelCoefficients, cfg: IntegratorConfig,
                          qubit_state, eps_d: float = 0.0, halvings: int = 2,
                          bump_tol: float = 1e-6) -> ConvergedSeries:
    """``<X_j(t)>`` from successive ``dt`` halvings with Richardson extrapolation.

    Runs ``halvings + 1`` integrations at ``dt, dt/2, ...`` and extrapolates the
    last two assuming second-order convergence.  The observed order is
    ``log2`` of the ratio of the last two successive differences.  When
    ``eps_d > 0`` the Fock truncation is bumped by one at the finest step and
    a :class:`TruncationWarning` is issued if the result moves by more than
    ``bump_tol``.  If the bumped run itself is unstable, ``d_bump`` is NaN and
    the warning says so.
    """
    runs = []
    for k in range(halvings + 1):
        c = IntegratorConfig(dt=cfg.dt / 2 ** k, d=cfg.d, memory_rule=cfg.memory_rule, T=cfg.T,
                             save_every=cfg.save_every * 2 ** k)
        runs.append(expectation(integrate_reduced(omega_j, gamma, coeffs, c, eps_d), qubit_state))
    t = np.arange(runs[0].size) * cfg.dt * cfg.save_every
    diffs = tuple(float(np.max(np.abs(b - a))) for a, b in zip(runs[:-1], runs[1:]))
    order = float(np.log2(diffs[-2] / diffs[-1])) if len(diffs) > 1 and diffs[-1] > 0 else float("nan")
    x = (4.0 * runs[-1] - runs[-2]) / 3.0
    bump = 0.0
    if eps_d:
        c = IntegratorConfig(dt=cfg.dt / 2 ** halvings, d=cfg.d + 1, memory_rule=cfg.memory_rule, T=cfg.T,
                             save_every=cfg.save_every * 2 ** halvings)
        try:
            bumped = expectation(integrate_reduced(omega_j, gamma, coeffs, c, eps_d), qubit_state)
        except StepUnstable:
            # the truncated cubic can turn the top levels unstable; the bump is then undefined
            bump = float("nan")
            warnings.warn(f"Fock truncation d={cfg.d + 1} is unstable; truncation error of d={cfg.d} unknown",
                          TruncationWarning, stacklevel=2)
        else:
            bump = float(np.max(np.abs(bumped - runs[-1])))
            if bump > bump_tol:
                warnings.warn(f"Fock truncation d={cfg.d} moves the result by {bump:.2e}", TruncationWarning,
                              stacklevel=2)
    return ConvergedSeries(t=t, x=x, dt=tuple(cfg.dt / 2 ** k for k in range(halvings + 1)),
                           halving_diffs=diffs, order=order, d_bump=bump)
