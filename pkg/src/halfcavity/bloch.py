"""Optical Bloch dynamics with mirror feedback beyond weak drive.

Two complementary treatments of a driven atom whose own resonance
fluorescence is partially reflected back onto it:

* **Markov limit** (round trip short against all dynamical time scales):
  ordinary optical Bloch equations with renormalised decay rate and
  detuning, solved in the (sigma-, sigma+, sigma_z) basis.
* **First order in the feedback strength epsilon**: the two-time
  correlations brought in by the reflected field are closed with the
  quantum regression step, i.e. propagated across one round trip with the
  free-space evolution.  The result is a linear delay system for the
  expectation 4-vector

      S = (<sigma_->, <sigma_+>, <sigma_+ sigma_->, <sigma_- sigma_+>),

      dS/dt = A4 S(t) + epsilon K(tau) S(t - tau) * step(t - tau),

  where A4 is the free-space generator in this basis and the kernel K is
  built from matrix elements of U(tau) = exp(A4 tau).  Steady states are
  null eigenvectors of A4 + epsilon K(tau); transients run through the
  delay integrator.  At strong drive the feedback contribution to the
  steady population is modulated by a universal function of rabi*tau that
  vanishes near multiples of pi: a strong laser can switch the mirror
  effect off regardless of the atom's position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dde
from .numerics import matrix_exponential, null_eigenvector
from .params import SystemParams

__all__ = [
    "BlochVector",
    "BlochTrajectory",
    "DelayKernel",
    "obe_generator3",
    "obe_generator4",
    "markov_bloch_steady",
    "markov_bloch_transient",
    "epsilon_expansion_population",
    "delay_kernel",
    "delay_bloch_transient",
    "delay_bloch_steady",
    "strong_drive_envelope",
]

GROUND_STATE4 = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)


@dataclass(frozen=True)
class BlochVector:
    """Atomic expectation values (<s->, <s+>, <s+s->, <s-s+>) at one time."""

    s_minus: complex
    s_plus: complex
    pop_e: complex
    pop_g: complex

    def validate(self, tol: float = 1e-9) -> "BlochVector":
        """Enforce hermiticity and trace constraints; returns self."""
        if abs(self.s_plus - np.conj(self.s_minus)) > tol:
            raise ValueError("s_plus is not the conjugate of s_minus")
        if abs(self.pop_e + self.pop_g - 1.0) > tol:
            raise ValueError("populations do not sum to one")
        if abs(self.pop_e.imag) > tol or abs(self.pop_g.imag) > tol:
            raise ValueError("populations are not real")
        if not -tol <= self.pop_e.real <= 1.0 + tol:
            raise ValueError("excited population outside [0, 1]")
        return self

    @property
    def sigma_z(self) -> float:
        return float((self.pop_e - self.pop_g).real)

    @classmethod
    def from_array(cls, s: np.ndarray) -> "BlochVector":
        return cls(complex(s[0]), complex(s[1]), complex(s[2]), complex(s[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.s_minus, self.s_plus, self.pop_e, self.pop_g], dtype=complex)


@dataclass(frozen=True)
class BlochTrajectory:
    """Sampled Bloch dynamics; populations are the real parts of column 3."""

    times: np.ndarray
    states: np.ndarray        # n_times x 4, ordered like BlochVector

    @property
    def pop_e(self) -> np.ndarray:
        return self.states[:, 2].real

    @property
    def s_minus(self) -> np.ndarray:
        return self.states[:, 0]

    def at(self, i: int) -> BlochVector:
        return BlochVector.from_array(self.states[i])


def obe_generator3(p: SystemParams, gamma=None, detuning=None) -> np.ndarray:
    """Free-space Bloch generator in the (s-, s+, s_z) basis.

    The s_z drift carries the inhomogeneity (0, 0, -gamma) which is not
    included here; pass modified rate/detuning to build the Markov-limit
    generator.
    """
    g = p.gamma if gamma is None else gamma
    d = p.detuning if detuning is None else detuning
    w = p.rabi
    return np.array([
        [-0.5 * g - 1j * d, 0.0, -0.5j * w],
        [0.0, -0.5 * g + 1j * d, 0.5j * w],
        [-1j * w, 1j * w, -g],
    ], dtype=complex)


def obe_generator4(p: SystemParams) -> np.ndarray:
    """Free-space Bloch generator in the population pair basis.

    Same dynamics as :func:`obe_generator3` but on
    (<s->, <s+>, <s+s->, <s-s+>); using both populations makes the system
    homogeneous (rows 3 and 4 sum to zero, preserving the trace).
    """
    g = p.gamma
    d = p.detuning
    hw = 0.5j * p.rabi
    return np.array([
        [-0.5 * g - 1j * d, 0.0, -hw, hw],
        [0.0, -0.5 * g + 1j * d, hw, -hw],
        [-hw, hw, -g, 0.0],
        [hw, -hw, g, 0.0],
    ], dtype=complex)


def _vec3_to4(s3: np.ndarray) -> np.ndarray:
    """(s-, s+, s_z) -> (s-, s+, pop_e, pop_g)."""
    return np.array([s3[0], s3[1], 0.5 * (1.0 + s3[2]), 0.5 * (1.0 - s3[2])], dtype=complex)


# ---------------------------------------------------------------------------
# Markov limit
# ---------------------------------------------------------------------------

def markov_bloch_steady(p: SystemParams) -> BlochVector:
    """Steady state of the Bloch equations with mirror-modified parameters.

    pop_e = rabi^2 / (gamma_eff^2 + 2 rabi^2 + 4 detuning_eff^2); the
    coherences follow from the same 3x3 inversion.
    """
    gt, dt, w = p.gamma_tilde_l, p.delta_tilde, p.rabi
    denom = gt * gt + 2.0 * w * w + 4.0 * dt * dt
    if denom == 0.0:
        raise ZeroDivisionError("Markov steady state undefined (perfect feedback point)")
    sz = -(gt * gt + 4.0 * dt * dt) / denom
    if gt == 0.0 and dt == 0.0:
        sm = 0.0 + 0.0j
    else:
        sm = -1j * w * sz * (gt - 2j * dt) / (gt * gt + 4.0 * dt * dt)
    return BlochVector(sm, np.conj(sm), 0.5 * (1.0 + sz), 0.5 * (1.0 - sz))


def markov_bloch_transient(p: SystemParams, t_end: float, n_out: int = 400,
                           tol: float = 1e-10) -> BlochTrajectory:
    """Ground-state transient of the Markov-limit Bloch equations."""
    gt, dt = p.gamma_tilde_l, p.delta_tilde
    a3 = obe_generator3(p, gamma=gt, detuning=dt)
    problem = dde.DdeProblem(
        a=a3, b=np.zeros((3, 3)), c=np.array([0.0, 0.0, -gt], dtype=complex),
        tau=max(p.tau, 1.0), x0=np.array([0.0, 0.0, -1.0], dtype=complex), t_end=t_end)
    sol = dde.integrate(problem, tol=tol)
    times = np.linspace(0.0, t_end, n_out)
    s3 = sol.query(times)
    states = np.array([_vec3_to4(row) for row in s3])
    return BlochTrajectory(times, states)


def epsilon_expansion_population(p: SystemParams) -> float:
    """Markov steady population expanded to first order in the feedback.

    (rabi^2/big_gamma) * (1 + 2 eps (gamma^2/big_gamma)
    * sqrt((gamma^2 + 4 detuning^2)/gamma^2) * cos(theta_l - phi)) with
    big_gamma = gamma^2 + 2 rabi^2 + 4 detuning^2 and tan(phi) =
    2*detuning/gamma: the level shift turns into a detuning-dependent
    phase offset of the position oscillation.
    """
    g, w, d = p.gamma, p.rabi, p.detuning
    big = g * g + 2.0 * w * w + 4.0 * d * d
    phi = math.atan2(2.0 * d, g)
    amp = 2.0 * p.epsilon * (g * g / big) * math.sqrt((g * g + 4.0 * d * d) / (g * g))
    return (w * w / big) * (1.0 + amp * math.cos(p.theta_l - phi))


# ---------------------------------------------------------------------------
# first order in epsilon: delay kernel and its dynamics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DelayKernel:
    """Round-trip feedback kernel of the delayed Bloch system.

    ``u_tau`` is the free evolution over one round trip (population pair
    basis), ``k_tau`` the kernel matrix multiplying epsilon*S(t - tau), and
    f1..f4 the scalar combinations of U(tau) elements it is built from.
    At tau = 0 the kernel reduces the delay system to the Markov-limit
    equations exactly.
    """

    u_tau: np.ndarray
    k_tau: np.ndarray
    f1: complex
    f2: complex
    f3: complex
    f4: complex


def delay_kernel(p: SystemParams) -> DelayKernel:
    """Build the feedback kernel from the free round-trip evolution.

    f1 = -e^{i theta_l}(U34 - U44)            (coherence damping),
    f2 = -e^{i theta_l}(2i gamma/rabi) U31*   (coherence drive),
    f3 =  e^{i theta_l}(i gamma/rabi) U24     (population drive),
    f4 = Re part combination of U11           (population damping),

    assembled into the kernel so rows 3 and 4 cancel (trace preserved) and
    rows 1 and 2 stay conjugate.  f2 and f3 have removable rabi -> 0
    limits (the U elements vanish linearly); closed forms are substituted
    below rabi = 1e-6*gamma.
    """
    g, w, d = p.gamma, p.rabi, p.detuning
    tau = p.tau
    u = matrix_exponential(obe_generator4(p), tau) if tau > 0 else np.eye(4, dtype=complex)
    e_plus = np.exp(1j * p.theta_l)
    e_minus = np.conj(e_plus)

    f1 = -e_plus * (u[2, 3] - u[3, 3])
    f4 = 0.5 * (e_minus * u[0, 0] + e_plus * np.conj(u[0, 0]))
    # the kernel entries carry rabi*f2 and rabi*f3, which reduce to plain
    # products of U elements; no division by rabi is ever needed there
    k13 = -g * e_plus * np.conj(u[2, 0])
    k31 = 0.5 * g * e_plus * u[1, 3]
    if w > 1e-6 * g:
        f2 = -e_plus * (2j * g / w) * np.conj(u[2, 0])
        f3 = e_plus * (1j * g / w) * u[1, 3]
    else:
        # removable singularity: U31, U24 vanish linearly in rabi
        a = 0.5 * g + 1j * d
        u31_lin = (-0.5j * np.exp(-g * tau) * (np.exp((g - a) * tau) - 1.0) / (g - a)
                   if tau > 0 else 0.0 + 0.0j)
        u24_lin = (-0.5j * (1.0 - np.exp(-np.conj(a) * tau)) / np.conj(a)
                   if tau > 0 else 0.0 + 0.0j)
        f2 = -e_plus * 2j * g * np.conj(u31_lin)
        f3 = e_plus * 1j * g * u24_lin

    k = np.array([
        [0.5 * g * f1, 0.0, k13, 0.0],
        [0.0, 0.5 * g * np.conj(f1), np.conj(k13), 0.0],
        [k31, np.conj(k31), g * f4, 0.0],
        [-k31, -np.conj(k31), -g * f4, 0.0],
    ], dtype=complex)
    return DelayKernel(u, k, f1, f2, f3, f4)


def delay_bloch_transient(p: SystemParams, t_end: float, n_out: int = 400,
                          tol: float = 1e-10) -> BlochTrajectory:
    """Ground-state transient of the delayed Bloch system.

    Identical to free space until the first round trip completes; valid to
    first order in epsilon.
    """
    kern = delay_kernel(p)
    problem = dde.DdeProblem(
        a=obe_generator4(p), b=p.epsilon * kern.k_tau, c=np.zeros(4),
        tau=p.tau if p.tau > 0 else 1.0, x0=GROUND_STATE4, t_end=t_end)
    sol = dde.integrate(problem, tol=tol)
    times = np.linspace(0.0, t_end, n_out)
    return BlochTrajectory(times, sol.query(times))


def delay_bloch_steady(p: SystemParams) -> BlochVector:
    """Steady state of the delayed Bloch system.

    Null eigenvector of A4 + epsilon*K(tau), normalised to unit trace and
    symmetrised so the conjugate-pair structure is exact.
    """
    kern = delay_kernel(p)
    m = obe_generator4(p) + p.epsilon * kern.k_tau
    v = null_eigenvector(m)
    trace = v[2] + v[3]
    if abs(trace) < 1e-12:
        raise np.linalg.LinAlgError("null vector has vanishing trace; cannot normalise")
    v = v / trace
    # fold in the conjugation symmetry (s+ = conj(s-), real populations)
    sym = np.array([np.conj(v[1]), np.conj(v[0]), np.conj(v[2]), np.conj(v[3])])
    v = 0.5 * (v + sym)
    return BlochVector.from_array(v).validate(tol=1e-7)


def strong_drive_envelope(p: SystemParams, theta0: float | None = None) -> float:
    """Steady population at strong resonant drive, first order in epsilon.

    (rabi^2/big_gamma) * (1 + 2 eps (gamma^2/big_gamma) cos(theta0) g(tau))
    where the modulation function

        g(tau) = e^{-3 gamma tau/4}(3/4 cos(rabi tau)
                 - rabi/(2 gamma) sin(rabi tau)) + e^{-gamma tau/2}/4

    equals 1 at tau = 0 (recovering the Markov expansion) and crosses zero
    near rabi*tau = n*pi, where the mirror effect disappears.  Resonant
    drive only (detuning must vanish; there the atomic and laser phases
    coincide).
    """
    if p.detuning != 0.0:
        raise ValueError("strong_drive_envelope is defined for detuning = 0")
    g, w = p.gamma, p.rabi
    th = p.theta0 if theta0 is None else theta0
    big = g * g + 2.0 * w * w
    mod = drive_modulation(p)
    return (w * w / big) * (1.0 + 2.0 * p.epsilon * (g * g / big) * math.cos(th) * mod)


def drive_modulation(p: SystemParams) -> float:
    """The strong-drive modulation function g(tau) alone."""
    g, w, tau = p.gamma, p.rabi, p.tau
    return (math.exp(-0.75 * g * tau) * (0.75 * math.cos(w * tau)
            - 0.5 * (w / g) * math.sin(w * tau))
            + 0.25 * math.exp(-0.5 * g * tau))
