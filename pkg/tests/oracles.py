"""Independent reference computations used by the tests.

Nothing here calls into the package's numerical kernels; the helpers use
finite differences, scipy adaptive quadrature or closed forms derived by
hand so that they can serve as oracles.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def fd_navier(value, lam, mu, omega, x, h=1e-3):
    """``mu Lap u + (lam + mu) grad div u + omega^2 u`` by central differences."""
    x = np.asarray(x, dtype=float)
    e = np.eye(2) * h

    def u(p):
        return np.asarray(value(p), dtype=complex)

    u0 = u(x)
    lap = sum(u(x + e[i]) - 2 * u0 + u(x - e[i]) for i in range(2)) / h**2
    # grad div u: second derivatives d_i d_j u_j
    hess = np.zeros((2, 2, 2), dtype=complex)   # [a, i, j] = d_i d_j u_a
    for i in range(2):
        for j in range(2):
            hess[:, i, j] = (u(x + e[i] + e[j]) - u(x + e[i] - e[j])
                             - u(x - e[i] + e[j]) + u(x - e[i] - e[j])) / (4 * h**2)
    graddiv = np.array([hess[0, i, 0] + hess[1, i, 1] for i in range(2)])
    return mu * lap + (lam + mu) * graddiv + omega**2 * u0


def fd_gradient(value, x, h=1e-6):
    """``J[a, b] = d u_a / d x_b`` by central differences."""
    x = np.asarray(x, dtype=float)
    J = np.zeros((2, 2), dtype=complex)
    for b in range(2):
        e = np.zeros(2)
        e[b] = h
        J[:, b] = (np.asarray(value(x + e)) - np.asarray(value(x - e))) / (2 * h)
    return J


def rayleigh_ratio(lam, mu):
    """``c_R / c_s`` from the classical cubic in ``(c / c_s)^2``."""
    q = mu / (lam + 2 * mu)          # (c_s / c_p)^2
    roots = np.roots([1.0, -8.0, 24.0 - 16.0 * q, -16.0 * (1.0 - q)])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    return math.sqrt(real[0])


def hat_transform_quad(xl, xc, xr, xi):
    """Fourier transform of the hat rising on ``[xl, xc]`` and falling on ``[xc, xr]``."""

    def hat(x):
        if xl <= x <= xc:
            return (x - xl) / (xc - xl) if xc > xl else 1.0
        if xc <= x <= xr:
            return (xr - x) / (xr - xc) if xr > xc else 1.0
        return 0.0

    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200, points=[xc])
    re = integrate.quad(lambda x: hat(x) * math.cos(xi * x), xl, xr, **opts)[0]
    im = integrate.quad(lambda x: -hat(x) * math.sin(xi * x), xl, xr, **opts)[0]
    return (re + 1j * im) / math.sqrt(2 * math.pi)


def m_at_zero(lam, mu, omega):
    """DtN symbol at ``xi = 0`` derived by hand: ``diag(i w^2 / k_s, i w^2 / k_p)``."""
    kp = omega / math.sqrt(2 * mu + lam)
    ks = omega / math.sqrt(mu)
    return np.diag([1j * omega**2 / ks, 1j * omega**2 / kp])


def gaussian_mode_spectrum(pol, xi0, sigma):
    """Spectrum of ``pol exp(i xi0 x) exp(-x^2 / (2 sigma^2))``."""
    pol = np.asarray(pol, dtype=complex)

    def spectrum(xi):
        xi = np.asarray(xi, dtype=float)
        g = sigma * np.exp(-0.5 * sigma**2 * (xi - xi0) ** 2)
        return g[:, None] * pol[None, :]

    return spectrum
