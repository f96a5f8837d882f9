"""Elastic medium, plane-wave fields and their half-space reflection.

Displacements follow the time-harmonic Navier system

    mu * Lap(u) + (lambda + mu) * grad(div u) + omega**2 * u = 0

and boundary tractions use the operator ``T u = mu d_n u + (lambda + mu) n div u``
(not the physical stress vector).  A plane-wave mode is ``a * exp(i k.x)``
with a possibly complex wavevector for evanescent components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, NumericalDegeneracyError

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ElasticMedium:
    """Homogeneous isotropic medium at a fixed angular frequency."""

    lam: float
    mu: float
    omega: float
    k_p: float = field(init=False)
    k_s: float = field(init=False)

    def __post_init__(self):
        for name, value in (("lambda", self.lam), ("mu", self.mu), ("omega", self.omega)):
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        object.__setattr__(self, "k_p", self.omega / math.sqrt(2.0 * self.mu + self.lam))
        object.__setattr__(self, "k_s", self.omega / math.sqrt(self.mu))

    @property
    def scale(self) -> float:
        """Reference magnitude omega^4 k_p k_s used for relative tolerances."""
        return self.omega**4 * self.k_p * self.k_s

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "omega": self.omega}


def make_medium(lam: float, mu: float, omega: float) -> ElasticMedium:
    return ElasticMedium(float(lam), float(mu), float(omega))


@dataclass(frozen=True)
class IncidenceConfig:
    """Incidence angle and the P/S amplitudes of the downgoing plane wave."""

    theta: float
    c_p: complex
    c_s: complex
    alpha: float
    beta: float
    eta: float


def make_incidence(medium: ElasticMedium, theta: float, c_p: complex | None = None,
                   c_s: complex = 0.0) -> IncidenceConfig:
    """Build an incidence configuration; ``c_p`` defaults to ``k_p``."""
    theta = float(theta)
    if not (-math.pi / 2 < theta < math.pi / 2):
        raise ConfigurationError(f"theta must lie in (-pi/2, pi/2), got {theta!r}")
    if c_p is None:
        c_p = medium.k_p
    alpha = medium.k_p * math.sin(theta)
    beta = medium.k_p * math.cos(theta)
    eta = math.sqrt(medium.k_s**2 - alpha**2)
    return IncidenceConfig(theta, complex(c_p), complex(c_s), alpha, beta, eta)


@dataclass(frozen=True)
class PlaneMode:
    """One term ``amplitude * polarization * exp(i wavevector . x)``."""

    polarization: np.ndarray
    wavevector: np.ndarray
    amplitude: complex
    kind: str  # "P" or "S"

    def phase(self, x: np.ndarray) -> np.ndarray:
        return np.exp(1j * (x @ self.wavevector))


def _as_points(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


class PlaneWaveField:
    """Finite sum of plane-wave modes with closed-form derivatives.

    Every mode is checked against the Navier equation at construction; a
    mode whose residual exceeds ``1e-10`` relative is rejected.
    """

    def __init__(self, medium: ElasticMedium, modes: Sequence[PlaneMode]):
        self.medium = medium
        self.modes = tuple(modes)
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-1.0, 1.0, size=(10, 2))
        for mode in self.modes:
            res = navier_residual_mode(medium, mode, pts)
            ref = np.abs(mode.amplitude) * np.linalg.norm(mode.polarization) * medium.omega**2
            ref = ref * np.abs(mode.phase(pts))
            if np.any(res > _RESIDUAL_TOL * np.maximum(ref, 1e-300)):
                raise NumericalDegeneracyError(
                    f"{mode.kind} mode with wavevector {mode.wavevector} violates the Navier equation"
                )

    def __add__(self, other: "PlaneWaveField") -> "PlaneWaveField":
        return PlaneWaveField(self.medium, self.modes + other.modes)

    def scaled(self, c: complex) -> "PlaneWaveField":
        return PlaneWaveField(self.medium, [
            PlaneMode(m.polarization, m.wavevector, c * m.amplitude, m.kind) for m in self.modes
        ])

    def value(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = np.zeros((len(pts), 2), dtype=complex)
        for m in self.modes:
            out += (m.amplitude * m.phase(pts))[:, None] * m.polarization[None, :]
        return out[0] if single else out

    def gradient(self, x) -> np.ndarray:
        """Jacobian ``J[a, b] = d u_a / d x_b`` at each point."""
        pts, single = _as_points(x)
        out = np.zeros((len(pts), 2, 2), dtype=complex)
        for m in self.modes:
            coef = 1j * m.amplitude * m.phase(pts)
            out += coef[:, None, None] * np.outer(m.polarization, m.wavevector)[None]
        return out[0] if single else out

    def divergence(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = np.zeros(len(pts), dtype=complex)
        for m in self.modes:
            out += 1j * m.amplitude * (m.wavevector @ m.polarization) * m.phase(pts)
        return out[0] if single else out

    def curl(self, x) -> np.ndarray:
        """Scalar curl ``d1 u2 - d2 u1``."""
        pts, single = _as_points(x)
        out = np.zeros(len(pts), dtype=complex)
        for m in self.modes:
            k, a = m.wavevector, m.polarization
            out += 1j * m.amplitude * (k[0] * a[1] - k[1] * a[0]) * m.phase(pts)
        return out[0] if single else out

    def navier_residual(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = np.zeros((len(pts), 2), dtype=complex)
        for m in self.modes:
            out += _navier_vector(self.medium, m)[None, :] * (m.amplitude * m.phase(pts))[:, None]
        return out[0] if single else out

    def potential_reconstruction(self, x) -> np.ndarray:
        """Evaluate ``-i (grad phi + vec-curl psi)`` from the scalar potentials."""
        pts, single = _as_points(x)
        kp2, ks2 = self.medium.k_p**2, self.medium.k_s**2
        out = np.zeros((len(pts), 2), dtype=complex)
        for m in self.modes:
            k, a = m.wavevector, m.polarization
            e = m.amplitude * m.phase(pts)
            phi = -(1j / kp2) * 1j * (k @ a) * e
            psi = (1j / ks2) * 1j * (k[0] * a[1] - k[1] * a[0]) * e
            grad_phi = 1j * phi[:, None] * k[None, :]
            vcurl_psi = 1j * psi[:, None] * np.array([k[1], -k[0]])[None, :]
            out += -1j * (grad_phi + vcurl_psi)
        return out[0] if single else out


def _navier_vector(medium: ElasticMedium, mode: PlaneMode) -> np.ndarray:
    k, a = mode.wavevector, mode.polarization
    return (-medium.mu * (k @ k) * a - (medium.lam + medium.mu) * k * (k @ a)
            + medium.omega**2 * a)


def navier_residual_mode(medium: ElasticMedium, mode: PlaneMode, pts: np.ndarray) -> np.ndarray:
    vec = _navier_vector(medium, mode)
    return np.linalg.norm(vec) * np.abs(mode.amplitude * mode.phase(pts))


def p_mode(medium: ElasticMedium, wavevector, amplitude: complex = 1.0) -> PlaneMode:
    """P mode with unit polarization along the wavevector."""
    k = np.asarray(wavevector, dtype=complex)
    return PlaneMode(k / medium.k_p, k, complex(amplitude), "P")


def s_mode(medium: ElasticMedium, wavevector, amplitude: complex = 1.0) -> PlaneMode:
    """S mode with polarization ``(k2, -k1) / k_s`` orthogonal to the wavevector."""
    k = np.asarray(wavevector, dtype=complex)
    return PlaneMode(np.array([k[1], -k[0]]) / medium.k_s, k, complex(amplitude), "S")


def incident_field(medium: ElasticMedium, cfg: IncidenceConfig) -> PlaneWaveField:
    st, ct = math.sin(cfg.theta), math.cos(cfg.theta)
    d = np.array([st, -ct], dtype=complex)
    d_perp = np.array([ct, st], dtype=complex)
    modes = [PlaneMode(d, medium.k_p * d, cfg.c_p, "P")]
    if cfg.c_s != 0:
        modes.append(PlaneMode(d_perp, medium.k_s * d, cfg.c_s, "S"))
    return PlaneWaveField(medium, modes)


def _upgoing_basis(medium: ElasticMedium, xi: float):
    gp = np.sqrt(complex(medium.k_p**2 - xi**2))
    gs = np.sqrt(complex(medium.k_s**2 - xi**2))
    return p_mode(medium, [xi, gp]), s_mode(medium, [xi, gs])


def _mode_traction_top(medium: ElasticMedium, mode: PlaneMode) -> np.ndarray:
    """Traction with n = (0, 1) of a unit-amplitude mode at the origin."""
    k, a = mode.wavevector, mode.polarization
    return 1j * medium.mu * a * k[1] + 1j * (medium.lam + medium.mu) * (k @ a) * np.array([0.0, 1.0])


def reflection_system(medium: ElasticMedium, xi: float, bc: str):
    """Matrix whose columns map upgoing (P, S) amplitudes to boundary data."""
    up_p, up_s = _upgoing_basis(medium, xi)
    if bc == "dirichlet":
        cols = [up_p.polarization, up_s.polarization]
    elif bc == "neumann":
        cols = [_mode_traction_top(medium, up_p), _mode_traction_top(medium, up_s)]
    else:
        raise ConfigurationError(f"unknown boundary condition {bc!r}")
    return np.column_stack(cols), (up_p, up_s)


def reflected_field(medium: ElasticMedium, cfg: IncidenceConfig, bc: str) -> PlaneWaveField:
    """Upgoing P and SV modes cancelling the incident boundary data on x2 = 0.

    Amplitudes come from a 2x2 solve per incident horizontal wavenumber, so
    mode conversion and ``c_s != 0`` incidence are handled uniformly.
    """
    inc = incident_field(medium, cfg)
    modes = []
    for m in inc.modes:
        xi = float(np.real(m.wavevector[0]))
        mat, (up_p, up_s) = reflection_system(medium, xi, bc)
        if bc == "dirichlet":
            data = m.amplitude * m.polarization
        else:
            data = m.amplitude * _mode_traction_top(medium, m)
        if np.linalg.cond(mat) > 1e12:
            raise NumericalDegeneracyError(f"reflection system singular at xi={xi}")
        amps = np.linalg.solve(mat, -data)
        if np.linalg.norm(mat @ amps + data) > 1e-12 * max(1.0, np.linalg.norm(data)):
            raise NumericalDegeneracyError("reflection solve residual above 1e-12")
        modes.append(PlaneMode(up_p.polarization, up_p.wavevector, amps[0], "P"))
        modes.append(PlaneMode(up_s.polarization, up_s.wavevector, amps[1], "S"))
    return PlaneWaveField(medium, modes)


def traction(fld, point, normal, medium: ElasticMedium | None = None) -> np.ndarray:
    """``T u = mu (grad u) n + (lambda + mu) (div u) n`` at the given points."""
    medium = medium or fld.medium
    n = np.asarray(normal, dtype=float)
    grad = np.asarray(fld.gradient(point))
    div = np.asarray(fld.divergence(point))
    if grad.ndim == 2:
        return medium.mu * grad @ n + (medium.lam + medium.mu) * div * n
    n = np.broadcast_to(n, (grad.shape[0], 2))
    return (medium.mu * np.einsum("pab,pb->pa", grad, n)
            + (medium.lam + medium.mu) * div[:, None] * n)


def helmholtz_potentials(fld, point, medium: ElasticMedium | None = None):
    """Scalar potentials ``phi = -(i/k_p^2) div u`` and ``psi = (i/k_s^2) curl u``."""
    medium = medium or fld.medium
    phi = -(1j / medium.k_p**2) * fld.divergence(point)
    psi = (1j / medium.k_s**2) * fld.curl(point)
    return phi, psi


class AffineField:
    """``u(x) = offset + G x``; handy for exercising traction and energies."""

    def __init__(self, medium: ElasticMedium, offset, grad):
        self.medium = medium
        self.offset = np.asarray(offset, dtype=complex)
        self.grad = np.asarray(grad, dtype=complex)

    def value(self, x):
        pts, single = _as_points(x)
        out = self.offset[None, :] + pts @ self.grad.T
        return out[0] if single else out

    def gradient(self, x):
        pts, single = _as_points(x)
        out = np.broadcast_to(self.grad, (len(pts), 2, 2)).copy()
        return out[0] if single else out

    def divergence(self, x):
        pts, single = _as_points(x)
        out = np.full(len(pts), np.trace(self.grad), dtype=complex)
        return out[0] if single else out

    def curl(self, x):
        pts, single = _as_points(x)
        out = np.full(len(pts), self.grad[1, 0] - self.grad[0, 1], dtype=complex)
        return out[0] if single else out
