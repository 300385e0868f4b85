"""Shared test oracles and helpers.

The Mollow closed form below was derived independently by a symbolic 3x3
Cramer inversion of the fluctuation system at zero feedback, with the
free-space steady state substituted; it is frozen here as explicit
polynomial coefficients so the spectrum tests check the production path
against a fixed algebraic expression rather than against itself.
"""

import numpy as np


def steady_free(gamma, rabi, detuning):
    """Free-space steady state (<s->, <s+>, pop_e) of the Bloch equations."""
    dd = gamma * gamma + 2.0 * rabi**2 + 4.0 * detuning**2
    sz = -(gamma * gamma + 4.0 * detuning**2) / dd
    if rabi == 0.0:
        sm = 0.0 + 0.0j
    else:
        sm = -1j * rabi * sz * (gamma - 2j * detuning) / (gamma * gamma + 4.0 * detuning**2)
    return sm, np.conj(sm), 0.5 * (1.0 + sz)


def mollow_closed_form(nu, gamma, rabi, detuning):
    """Incoherent resonance-fluorescence spectrum of a free-space atom.

    Ratio of a quadratic to a cubic complex polynomial in the detuning from
    the laser line (Cramer form); symmetric in nu for every drive and
    detuning.  Normalised so the full integral equals the incoherent part
    of the steady population.
    """
    nu = np.asarray(nu, dtype=float)
    g, w, d = gamma, rabi, detuning
    sm, sp, ne = steady_free(g, w, d)
    v = ne - sm * sp
    det = (1j * nu**3 + 2.0 * g * nu**2 + 1j * (-d * d - w * w - 1.25 * g * g) * nu
           + 0.25 * g * (-4.0 * d * d - 2.0 * w * w - g * g))
    c2 = -v
    c1 = 1j * (2j * d * v - 2j * w * ne * sm + 3.0 * g * v) / 2.0
    c0 = (2.0 * d * w * ne * sm + 2j * d * g * v + w * w * ne - w * w * sm * sm
          - w * w * sm * sp - 1j * w * g * ne * sm + g * g * v) / 2.0
    return -np.real((c2 * nu**2 + c1 * nu + c0) / det) / np.pi


def lorentzian_fit(x, y, center_guess, halfspan):
    """Fit a + peak/(1 + ((x-x0)/w)^2) near one line; returns (peak, x0, hwhm)."""
    from scipy.optimize import curve_fit

    sel = np.abs(x - center_guess) < halfspan
    xs, ys = x[sel], y[sel]

    def model(x, peak, x0, w, base):
        return peak / (1.0 + ((x - x0) / w) ** 2) + base

    p0 = [ys.max() - ys.min(), xs[np.argmax(ys)], 0.3 * halfspan, ys.min()]
    popt, _ = curve_fit(model, xs, ys, p0=p0, maxfev=20000)
    return popt[0], popt[1], abs(popt[2])
