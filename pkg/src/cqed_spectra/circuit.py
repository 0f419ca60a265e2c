"""Unitless circuit parameters of the transmon / resonator / waveguide system.

Lengths are measured in units of the resonator length and times in units of the
single-pass transit time, so the bare resonator modes sit at ``k = n*pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InputError, NonPositiveEnergy, OutOfRangePosition


@dataclass(frozen=True)
class CircuitParams:
    """Raw capacitance ratios and energies plus the constants derived from them.

    Attributes
    ----------
    chi_j, chi_g, chi_R, chi_L : float
        Transmon, gate, right and left coupling capacitances normalized by the
        total resonator capacitance.
    x0 : float
        Qubit position along the resonator, in ``[0, 1]``.
    Ec, Ej : float
        Charging and Josephson energies (any common unit; only ratios and
        ``sqrt(8 Ec Ej)`` enter the dynamics).
    """

    chi_j: float
    chi_g: float
    chi_R: float
    chi_L: float
    x0: float
    Ec: float
    Ej: float
    chi_s: float = field(init=False)
    gamma: float = field(init=False)
    omega_j: float = field(init=False)
    eps: float = field(init=False)
    eps_d: float = field(init=False)
    phi_zpf: float = field(init=False)

    def __post_init__(self) -> None:
        if self.Ec <= 0 or self.Ej <= 0:
            raise NonPositiveEnergy(f"Ec and Ej must be positive, got Ec={self.Ec}, Ej={self.Ej}")
        if not 0.0 <= self.x0 <= 1.0:
            raise OutOfRangePosition(f"x0={self.x0} lies outside [0, 1]")
        for name in ("chi_j", "chi_g", "chi_R", "chi_L"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be non-negative")
        if self.chi_g + self.chi_j <= 0:
            raise InputError("chi_g + chi_j must be positive")
        total = self.chi_g + self.chi_j
        eps = math.sqrt(self.Ec / self.Ej)
        derived = {
            "chi_s": self.chi_g * self.chi_j / total,
            "gamma": self.chi_g / total,
            "omega_j": math.sqrt(8.0 * self.Ec * self.Ej),
            "eps": eps,
            "eps_d": math.sqrt(2.0) * eps / 6.0,
            "phi_zpf": (2.0 * self.Ec / self.Ej) ** 0.25,
        }
        for key, value in derived.items():
            object.__setattr__(self, key, value)

    @property
    def raw(self) -> dict[str, float]:
        """The seven independent inputs, suitable for ``derive_params(**raw)``."""
        return {k: getattr(self, k) for k in ("chi_j", "chi_g", "chi_R", "chi_L", "x0", "Ec", "Ej")}

    def with_changes(self, **changes: float) -> "CircuitParams":
        """Return a copy with some raw fields replaced and derived fields recomputed."""
        return replace(self, **changes)

    def with_omega_j(self, omega_j: float, ej_over_ec: float | None = None) -> "CircuitParams":
        """Rescale ``Ec`` and ``Ej`` so the bare transmon frequency equals ``omega_j``.

        The ratio ``Ej/Ec`` (and therefore ``eps``) is kept unless a new ratio is given.
        """
        ratio = self.Ej / self.Ec if ej_over_ec is None else ej_over_ec
        Ec = omega_j / math.sqrt(8.0 * ratio)
        return replace(self, Ec=Ec, Ej=ratio * Ec)


def derive_params(chi_j: float, chi_g: float, chi_R: float, chi_L: float,
                  x0: float, Ec: float, Ej: float) -> CircuitParams:
    """Build a fully populated :class:`CircuitParams`."""
    return CircuitParams(chi_j=chi_j, chi_g=chi_g, chi_R=chi_R, chi_L=chi_L, x0=x0, Ec=Ec, Ej=Ej)


def energies_for(omega_j: float, ej_over_ec: float) -> tuple[float, float]:
    """Return ``(Ec, Ej)`` giving bare frequency ``omega_j`` at the stated ratio."""
    Ec = omega_j / math.sqrt(8.0 * ej_over_ec)
    return Ec, ej_over_ec * Ec


def coupling_saturation(chi_j: float, chi_g: float) -> float:
    """Effective coupling weight ``gamma*chi_s``, bounded above by ``chi_j``."""
    if chi_j <= 0:
        raise InputError("chi_j must be positive")
    if chi_g < 0:
        raise InputError("chi_g must be non-negative")
    if math.isinf(chi_g):
        return chi_j
    return (chi_g / (chi_g + chi_j)) ** 2 * chi_j
