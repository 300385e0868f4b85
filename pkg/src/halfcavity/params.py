"""Dimensionless parameters of an atom facing a single mirror.

Conventions used throughout the package:

* the free-space decay rate ``gamma`` is the unit of inverse time
  (``gamma = 1`` unless the caller overrides it),
* ``tau`` is the round-trip time of light between atom and mirror,
* frequencies are quoted as detunings from the atomic or the laser line,
* the huge optical phases (transition or laser frequency times ``tau``)
  enter the physics only through their residues modulo 2*pi.  ``theta0``
  is the residue at the atomic frequency, ``theta_l`` at the laser
  frequency; they are tied together by ``theta_l = theta0 - detuning*tau``.

``theta0 = 0`` puts the atom at a node of the resonant standing wave
(inhibited decay), ``theta0 = pi`` at an antinode (enhanced decay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def wrap_phase(phi: float) -> float:
    """Reduce a phase to the interval [0, 2*pi)."""
    phi = math.fmod(phi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    return 0.0 if phi >= TWO_PI else phi


def phase_distance(a: float, b: float) -> float:
    """Distance between two phases on the circle."""
    d = wrap_phase(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class SystemParams:
    """Immutable parameter set shared by all physics modules.

    Parameters
    ----------
    epsilon : float
        Solid-angle fraction of the emission returned by the mirror,
        0 <= epsilon <= 1.  This is the feedback strength.
    tau : float
        Round-trip time atom -> mirror -> atom, in units of 1/gamma.
    theta0 : float, optional
        Residue of (atomic frequency * tau) mod 2*pi.
    theta_l : float, optional
        Residue of (laser frequency * tau) mod 2*pi.  If only one of the
        two phases is given the other is derived from
        ``theta_l = theta0 - detuning*tau``; if both are given they must
        satisfy that relation.
    rabi : float
        Laser Rabi frequency (units of gamma), >= 0.
    detuning : float
        Laser detuning, atomic frequency minus laser frequency.
    gamma : float
        Free-space decay rate, > 0.  Kept explicit so outputs can be
        rescaled, but the package convention is gamma = 1.
    """

    epsilon: float = 0.0
    tau: float = 0.0
    theta0: float | None = None
    theta_l: float | None = None
    rabi: float = 0.0
    detuning: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.tau < 0.0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.rabi < 0.0:
            raise ValueError(f"rabi must be >= 0, got {self.rabi}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        for name in ("epsilon", "tau", "rabi", "detuning", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

        shift = self.detuning * self.tau
        if self.theta0 is None and self.theta_l is None:
            theta0, theta_l = 0.0, wrap_phase(-shift)
        elif self.theta_l is None:
            theta0 = wrap_phase(self.theta0)
            theta_l = wrap_phase(theta0 - shift)
        elif self.theta0 is None:
            theta_l = wrap_phase(self.theta_l)
            theta0 = wrap_phase(theta_l + shift)
        else:
            theta0 = wrap_phase(self.theta0)
            theta_l = wrap_phase(self.theta_l)
            if phase_distance(theta_l, theta0 - shift) > 1e-9:
                raise ValueError(
                    "inconsistent phases: theta_l must equal "
                    "theta0 - detuning*tau modulo 2*pi "
                    f"(theta0={theta0}, theta_l={theta_l}, detuning*tau={shift})"
                )
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "theta_l", theta_l)

    # ----- derived rates and shifts -------------------------------------

    @property
    def gamma_tilde(self) -> float:
        """Effective decay rate gamma*(1 - epsilon*cos(theta0)) of the close-mirror limit."""
        return self.gamma * (1.0 - self.epsilon * math.cos(self.theta0))

    @property
    def gamma_tilde_l(self) -> float:
        """Like ``gamma_tilde`` but with the laser-frequency phase."""
        return self.gamma * (1.0 - self.epsilon * math.cos(self.theta_l))

    @property
    def delta_tilde(self) -> float:
        """Detuning including the mirror-induced level shift."""
        return self.detuning - 0.5 * self.epsilon * self.gamma * math.sin(self.theta_l)

    @property
    def level_shift(self) -> float:
        """Shift of the atomic line, -epsilon*gamma/2*sin(theta0)."""
        return -0.5 * self.epsilon * self.gamma * math.sin(self.theta0)

    @property
    def generalized_rabi(self) -> float:
        """sqrt(rabi^2 + detuning^2), the dressed-state splitting."""
        return math.hypot(self.rabi, self.detuning)

    @property
    def triplet_width(self) -> float:
        """2*generalized_rabi + gamma, the overall width of the fluorescence triplet."""
        return 2.0 * self.generalized_rabi + self.gamma

    @property
    def staircase_mu(self) -> complex:
        """Complex feedback gain epsilon*gamma/(gamma + 2i*detuning) of the weak-drive staircase."""
        return self.epsilon * self.gamma / (self.gamma + 2j * self.detuning)

    def require_no_drive(self, what: str) -> None:
        """Raise unless the laser is off (pure spontaneous-emission physics)."""
        if self.rabi != 0.0:
            raise ValueError(f"{what} requires rabi = 0, got rabi = {self.rabi}")
