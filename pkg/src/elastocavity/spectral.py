"""Half-space spectral symbols and Fourier-side utilities.

All transforms use ``f^(xi) = (2 pi)^{-1/2} * integral f(x) exp(-i xi x) dx``.
The square-root branch is ``gamma(xi; k) = sqrt(k^2 - xi^2)`` with the
principal branch, which is nonnegative on ``|xi| <= k`` and ``i sqrt(xi^2 - k^2)``
outside, so every upgoing mode either propagates or decays.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericalDegeneracyError, PoleError
from .medium import ElasticMedium

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
DEGENERACY_FLOOR = 1e-8
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gamma(xi, k):
    """Vertical wavenumber ``sqrt(k^2 - xi^2)`` on the radiating branch."""
    xi = np.asarray(xi)
    return np.sqrt(np.asarray(k) ** 2 - xi.astype(complex) ** 2)


def _wavenumbers(medium: ElasticMedium, delta_reg: float = 0.0):
    omega = medium.omega * (1.0 + 1j * delta_reg) if delta_reg else medium.omega
    kp = omega / math.sqrt(2.0 * medium.mu + medium.lam)
    ks = omega / math.sqrt(medium.mu)
    return omega, kp, ks


def symbols(medium: ElasticMedium, xi, delta_reg: float = 0.0) -> dict:
    """Vectorized DtN/NtD symbol data on an array of ``xi``.

    Returns a dict with ``gp, gs, rho, b, d`` of shape ``(n,)`` and ``M, Minv``
    of shape ``(n, 2, 2)``.  ``Minv`` is left as computed; callers decide what
    to do where ``d`` vanishes.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    omega, kp, ks = _wavenumbers(medium, delta_reg)
    w2 = omega**2
    mu = medium.mu
    gp = gamma(xi, kp)
    gs = gamma(xi, ks)
    rho = xi**2 + gp * gs
    b = xi * w2 - xi * mu * rho
    d = w2**2 * gp * gs + b**2
    M = np.empty((len(xi), 2, 2), dtype=complex)
    M[:, 0, 0] = w2 * gp
    M[:, 0, 1] = -b
    M[:, 1, 0] = b
    M[:, 1, 1] = w2 * gs
    M *= (1j / rho)[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        Minv = np.empty_like(M)
        Minv[:, 0, 0] = w2 * gs
        Minv[:, 0, 1] = b
        Minv[:, 1, 0] = -b
        Minv[:, 1, 1] = w2 * gp
        Minv *= (rho / (1j * d))[:, None, None]
    return {"xi": xi, "gp": gp, "gs": gs, "rho": rho, "b": b, "d": d, "M": M, "Minv": Minv}


def propagation_matrices(gp, gs, xi, rho):
    """Projectors onto the P and S parts of a displacement trace."""
    xi = np.asarray(xi)
    Mp = np.empty(np.shape(xi) + (2, 2), dtype=complex)
    Ms = np.empty_like(Mp)
    Mp[..., 0, 0] = xi**2
    Mp[..., 0, 1] = xi * gs
    Mp[..., 1, 0] = xi * gp
    Mp[..., 1, 1] = gp * gs
    Ms[..., 0, 0] = gp * gs
    Ms[..., 0, 1] = -xi * gs
    Ms[..., 1, 0] = -xi * gp
    Ms[..., 1, 1] = xi**2
    Mp /= rho[..., None, None]
    Ms /= rho[..., None, None]
    return Mp, Ms


@dataclass(frozen=True)
class SpectralKernelSample:
    xi: float
    gamma_p: complex
    gamma_s: complex
    rho: complex
    d: complex
    M: np.ndarray
    M_inv: np.ndarray
    M_p: np.ndarray
    M_s: np.ndarray
    inverse_valid: bool

    def require_inverse(self) -> np.ndarray:
        if not self.inverse_valid:
            raise PoleError(f"NtD symbol undefined at xi={self.xi}: |d| below the degeneracy floor")
        return self.M_inv


def kernel_sample(medium: ElasticMedium, xi: float) -> SpectralKernelSample:
    """DtN and NtD symbols with propagation matrices at a single ``xi``.

    When ``|d|`` falls below ``1e-8 * omega^4 k_p k_s`` the NtD entry is set to
    NaN and flagged; the DtN symbol is still returned.
    """
    s = symbols(medium, [xi])
    inv_ok = bool(abs(s["d"][0]) > DEGENERACY_FLOOR * medium.scale)
    Minv = s["Minv"][0] if inv_ok else np.full((2, 2), np.nan + 0j)
    Mp, Ms = propagation_matrices(s["gp"][0], s["gs"][0], float(xi), s["rho"][0])
    return SpectralKernelSample(float(xi), complex(s["gp"][0]), complex(s["gs"][0]),
                                complex(s["rho"][0]), complex(s["d"][0]), s["M"][0], Minv,
                                Mp, Ms, inv_ok)


def hermitian_parts(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(Re X, Im X)`` as the Hermitian pair with ``X = Re X + i Im X``."""
    XH = np.conj(np.swapaxes(X, -1, -2))
    return 0.5 * (X + XH), (X - XH) / 2j


def re_A(medium: ElasticMedium, xi: float) -> np.ndarray:
    """Hermitian part of ``A = C^H Q`` in potential amplitudes ``v = (P, S)``.

    With ``u^ = C v`` one has ``M C = i Q``, so ``conj(u^)^T M u^ = i v^H A v`` and
    the imaginary part of the pairing is ``v^H Re(A) v``.
    """
    s = symbols(medium, [xi])
    gp, gs = s["gp"][0], s["gs"][0]
    w2, mu = medium.omega**2, medium.mu
    Q = np.array([[mu * xi * gp, w2 - mu * xi**2], [w2 - mu * xi**2, -mu * xi * gs]])
    C = np.array([[xi, gs], [gp, -xi]])
    return hermitian_parts(np.conj(C).T @ Q)[0]


def regime(medium: ElasticMedium, xi: float) -> str:
    a = abs(xi)
    if a <= medium.k_p:
        return "propagating_both"
    if a <= medium.k_s:
        return "propagating_s_only"
    return "evanescent"


@dataclass(frozen=True)
class KernelSignReport:
    xi: float
    regime: str
    re_M_negdef_margin: float
    im_Minv_classification: str
    a1: float
    det_im_Minv: float
    d1: float
    d2: float
    d3: float
    re_Minv_negdef_margin: float

    def passes(self, medium: ElasticMedium) -> bool:
        """Expected sign structure for this regime."""
        if self.regime == "evanescent":
            return self.re_M_negdef_margin > 0 and self.im_Minv_classification == "zero"
        if self.regime == "propagating_both":
            return self.im_Minv_classification == "definite_negative"
        return (self.a1 < 0 and self.im_Minv_classification in ("semidefinite_negative", "zero")
                and max(abs(self.d1), abs(self.d2), abs(self.d3)) < 1e-10)


def _middle_band_d_terms(medium: ElasticMedium, xi: float):
    """Middle-band sign identities scaled by the natural size of their summands."""
    w, mu = medium.omega, medium.mu
    w2, w4 = w**2, w**4
    zeta = w2 - xi**2 * mu
    quartic = w4 - xi**2 * mu * (2 * w2 - xi**2 * mu)
    t1 = (w4 * xi**2 * mu**2 * quartic, (zeta * xi * mu * w2) ** 2)
    t2 = (xi**6 * w4 * mu**2 * quartic, xi**6 * w4 * mu**2 * zeta**2,
          2 * xi**6 * mu**2 * w4 * zeta**2)
    t3 = (xi**10 * zeta**2 * w4 * mu**2, (xi**3 * w4 * zeta - xi**3 * w2 * zeta**2) ** 2)
    d1 = t1[0] - t1[1]
    d2 = t2[0] + t2[1] - t2[2]
    d3 = t3[0] - t3[1]
    # the quartic cancels near k_s; measure rounding against its unexpanded size
    qmag = w4 + xi**2 * mu * (2 * w2 + xi**2 * mu)
    zmag = w2 + xi**2 * mu
    s1 = max(w4 * xi**2 * mu**2 * qmag, (zmag * xi * mu * w2) ** 2)
    s2 = xi**6 * w4 * mu**2 * max(qmag, 2 * zmag**2)
    s3 = max(xi**10 * zmag**2 * w4 * mu**2, (xi**3 * w4 * zmag + xi**3 * w2 * zmag**2) ** 2)

    def rel(val, scale):
        return val / scale if scale > 0 else 0.0

    return rel(d1, s1), rel(d2, s2), rel(d3, s3), zeta


def sign_report(medium: ElasticMedium, xi: float, tol: float = 1e-10) -> KernelSignReport:
    """Sign certificates of the DtN/NtD symbols at one wavenumber.

    ``d1..d3`` are returned relative to the unexpanded size of their summands.
    ``a1`` is the (1,1) numerator of ``Im M^{-1}`` in the middle band and
    zero elsewhere.
    """
    kp, ks = medium.k_p, medium.k_s
    a = abs(xi)
    for name, pt in (("k_p", kp), ("k_s", ks)):
        if abs(a - pt) < 1e-12 * ks:
            raise NumericalDegeneracyError(f"xi={xi} sits on the branch point {name}")
    smp = kernel_sample(medium, xi)
    if not smp.inverse_valid:
        raise PoleError(f"xi={xi} is a zero of d")
    reM, _ = hermitian_parts(smp.M)
    reMi, imMi = hermitian_parts(smp.M_inv)
    margin = float(np.min(np.linalg.eigvalsh(-reM)))
    margin_inv = float(np.min(np.linalg.eigvalsh(-reMi)))
    ev = np.linalg.eigvalsh(imMi)
    scale = max(np.abs(smp.M_inv).max(), 1e-300)
    if np.all(np.abs(ev) <= tol * scale):
        cls = "zero"
    elif np.all(ev < -tol * scale):
        cls = "definite_negative"
    elif np.all(ev <= tol * scale):
        cls = "semidefinite_negative"
    else:
        cls = "indefinite"
    det = float(np.real(np.linalg.det(imMi)) / scale**2)
    reg = regime(medium, xi)
    d1, d2, d3, zeta = _middle_band_d_terms(medium, xi)
    a1 = 0.0
    if reg == "propagating_s_only":
        w2, mu = medium.omega**2, medium.mu
        gs_, gp_ = abs(smp.gamma_s), abs(smp.gamma_p)
        a1 = (-w2**3 * gs_**3 * gp_**2 + 2 * w2 * gp_**2 * gs_**3 * xi**2 * mu * zeta
              - xi**4 * w2 * gs_ * zeta**2 + w2 * xi**4 * mu**2 * gp_**2 * gs_**3)
    else:
        d1 = d2 = d3 = 0.0
    return KernelSignReport(float(xi), reg, margin, cls, float(a1), det, float(d1), float(d2),
                            float(d3), margin_inv)


def rayleigh_function(medium: ElasticMedium, xi):
    """Classical free-surface Rayleigh function ``(2 xi^2 - k_s^2)^2 - 4 xi^2 g_p g_s``.

    ``g = sqrt(xi^2 - k^2)``; it is real for ``xi > k_s`` and has a single root
    there, the surface-wave wavenumber.
    """
    xi = np.asarray(xi, dtype=float)
    kp, ks = medium.k_p, medium.k_s
    return (2 * xi**2 - ks**2) ** 2 - 4 * xi**2 * np.sqrt(xi**2 - kp**2) * np.sqrt(xi**2 - ks**2)


def rayleigh_root(medium: ElasticMedium) -> float:
    """Rayleigh surface-wave wavenumber, by bracketed root finding on ``(k_s, 3 k_s)``."""
    ks = medium.k_s
    lo, hi = ks * (1 + 1e-12), 3 * ks
    f_lo, f_hi = rayleigh_function(medium, lo), rayleigh_function(medium, hi)
    if f_lo * f_hi > 0:
        raise NumericalDegeneracyError("Rayleigh root not bracketed on (k_s, 3 k_s)")
    return float(optimize.brentq(lambda x: rayleigh_function(medium, x), lo, hi,
                                 xtol=1e-15 * ks, rtol=1e-15, maxiter=200))


@dataclass(frozen=True)
class PotentialAmplitudes:
    P: complex
    S: complex


def trace_from_potentials(medium: ElasticMedium, xi: float, amps: PotentialAmplitudes) -> np.ndarray:
    s = symbols(medium, [xi])
    gp, gs = s["gp"][0], s["gs"][0]
    return np.array([xi * amps.P + gs * amps.S, gp * amps.P - xi * amps.S])


def potentials_from_trace(medium: ElasticMedium, xi: float, trace) -> PotentialAmplitudes:
    """Invert the trace map; the matrix is its own inverse up to ``1/rho``."""
    s = symbols(medium, [xi])
    gp, gs, rho = s["gp"][0], s["gs"][0], s["rho"][0]
    if abs(rho) < 1e-14 * max(1.0, xi**2):
        raise NumericalDegeneracyError(f"rho vanishes at xi={xi}")
    u1, u2 = np.asarray(trace, dtype=complex)
    return PotentialAmplitudes(complex((xi * u1 + gs * u2) / rho), complex((gp * u1 - xi * u2) / rho))


def potentials_array(medium: ElasticMedium, xi: np.ndarray, uhat: np.ndarray, s: dict | None = None):
    """Vectorized ``(P, S)`` from trace spectra ``uhat`` of shape ``(n, 2)``."""
    s = s or symbols(medium, xi)
    P = (xi * uhat[:, 0] + s["gs"] * uhat[:, 1]) / s["rho"]
    S = (s["gp"] * uhat[:, 0] - xi * uhat[:, 1]) / s["rho"]
    return P, S


# ---------------------------------------------------------------- quadrature

def gauss_legendre(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs of the composite Gauss-Legendre grid on ``[-Xi, Xi]``."""

    xi_factor: float = 20.0
    order: int = 16
    levels: int = 6
    max_width: float = 1.0
    delta_reg: float = 0.0

    def refined(self) -> "QuadratureConfig":
        return QuadratureConfig(2 * self.xi_factor, self.order, self.levels + 2,
                                self.max_width / 2, self.delta_reg)


@dataclass(frozen=True)
class QuadGrid:
    nodes: np.ndarray
    weights: np.ndarray
    xi_max: float
    config: QuadratureConfig

    def __len__(self):
        return len(self.nodes)


def _panel(a: float, b: float, order: int, sing: str | None):
    t, w = gauss_legendre(order)
    L = b - a
    if sing == "left":
        return a + L * t**2, 2 * L * t * w
    if sing == "right":
        return b - L * t**2, 2 * L * t * w
    return a + L * t, L * w


def _graded_interval(a, b, sing_left, sing_right, cfg: QuadratureConfig):
    """Panels on ``[a, b]`` with dyadic grading toward singular endpoints."""
    if b - a <= 0:
        return []
    if sing_left and sing_right:
        m = 0.5 * (a + b)
        return (_graded_interval(a, m, True, False, cfg)
                + _graded_interval(m, b, False, True, cfg))
    panels = []
    if sing_left or sing_right:
        L = b - a
        # geometric panels from the singular end outward
        edges = [L / 2**j for j in range(cfg.levels, -1, -1)]
        prev = 0.0
        for i, e in enumerate(edges):
            kind = ("left" if sing_left else "right") if i == 0 else None
            if sing_left:
                panels.append((a + prev, a + e, kind))
            else:
                panels.append((b - e, b - prev, kind))
            prev = e
    else:
        panels.append((a, b, None))
    out = []
    for lo, hi, kind in panels:
        if kind is None and hi - lo > cfg.max_width:
            n = int(math.ceil((hi - lo) / cfg.max_width))
            cuts = np.linspace(lo, hi, n + 1)
            out.extend((cuts[i], cuts[i + 1], None) for i in range(n))
        else:
            out.append((lo, hi, kind))
    return out


def build_grid(medium: ElasticMedium, cfg: QuadratureConfig | None = None,
               extra_breakpoints: Iterable[float] = ()) -> QuadGrid:
    """Composite Gauss-Legendre grid, graded toward ``k_p`` and ``k_s``.

    Breakpoints also sit at 0 and at the Rayleigh wavenumber.  The panel that
    touches a branch point uses ``xi = a + L t^2`` so that square-root and
    inverse-square-root endpoint behaviour integrates to full order.
    """
    cfg = cfg or QuadratureConfig()
    kp, ks = medium.k_p, medium.k_s
    Xi = cfg.xi_factor * ks
    singular = {kp, ks}
    pts = {0.0, kp, ks, Xi}
    xr = rayleigh_root(medium)
    if xr < Xi:
        pts.add(xr)
    for p in extra_breakpoints:
        if 0 < abs(p) < Xi:
            pts.add(abs(float(p)))
    pts = sorted(pts)
    panels = []
    for a, b in zip(pts[:-1], pts[1:]):
        panels.extend(_graded_interval(a, b, a in singular, b in singular, cfg))
    xs, ws = [], []
    for a, b, kind in panels:
        x, w = _panel(a, b, cfg.order, kind)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    order = np.argsort(x, kind="stable")
    x, w = x[order], np.concatenate(ws)[order]
    nodes = np.concatenate([-x[::-1], x])
    weights = np.concatenate([w[::-1], w])
    return QuadGrid(nodes, weights, Xi, cfg)


# ---------------------------------------------------------------- tails

def expint_n(n: int, z):
    """Generalized exponential integral ``E_n(z)`` for ``n <= 5`` by recurrence from ``E_1``."""
    z0 = np.asarray(z, dtype=complex)
    z = np.atleast_1d(z0)
    out = np.empty_like(z)
    zero = np.abs(z) == 0
    zz = np.where(zero, 1.0, z)
    e = special.exp1(zz)
    emz = np.exp(-zz)
    for k in range(1, n):
        e = (emz - zz * e) / k
    out[:] = e
    if n > 1:
        out[zero] = 1.0 / (n - 1)
    else:
        out[zero] = np.inf
    return out.reshape(z0.shape)


def tail_moment(power: int, c, Xi: float):
    """``integral_{Xi}^{inf} xi^{-power} exp(-i xi c) d xi`` for real ``c``."""
    c = np.asarray(c, dtype=float)
    return Xi ** (1 - power) * expint_n(power, 1j * Xi * c)


def asymptotic_dtn(medium: ElasticMedium):
    """Coefficients of ``M(xi) = |xi| D + xi E + F/|xi| + sign(xi) G/|xi| + O(|xi|^-3)``."""
    w2, mu = medium.omega**2, medium.mu
    kp2, ks2 = medium.k_p**2, medium.k_s**2
    rho_inf = 0.5 * (kp2 + ks2)
    rho2 = (kp2 - ks2) ** 2 / 8.0
    c = w2 - mu * rho_inf
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    D = -(w2 / rho_inf) * np.eye(2)
    E = (1j * c / rho_inf) * J
    F = (w2 / rho_inf) * np.diag([kp2 / 2 + rho2 / rho_inf, ks2 / 2 + rho2 / rho_inf])
    G = -(1j / rho_inf) * (mu * rho2 + c * rho2 / rho_inf) * J
    return D, E, F, G


def asymptotic_ntd(medium: ElasticMedium):
    """``(A_plus, A_minus)`` with ``M^{-1}(xi) ~ A_(sign xi) / |xi|``."""
    D, E, _, _ = asymptotic_dtn(medium)
    return np.linalg.inv(D + E), np.linalg.inv(D - E)


def tail_terms_dtn(medium: ElasticMedium):
    """Asymptotic DtN as ``[(coef, p, q)]`` meaning ``coef * |xi|^p * sign(xi)^q``."""
    D, E, F, G = asymptotic_dtn(medium)
    return [(D, 1, 0), (E, 1, 1), (F, -1, 0), (G, -1, 1)]


def tail_terms_ntd(medium: ElasticMedium):
    Ap, Am = asymptotic_ntd(medium)
    return [(0.5 * (Ap + Am), -1, 0), (0.5 * (Ap - Am), -1, 1)]


def tail_kernel(c, Xi: float, p: int, q: int):
    """``int_{|xi|>Xi} |xi|^(p-4) sign(xi)^q exp(-i xi c) d xi`` for real ``c``."""
    I = tail_moment(4 - p, c, Xi)
    return I + np.conj(I) if q == 0 else I - np.conj(I)


# ---------------------------------------------------------------- fields

def propagate_upward(medium: ElasticMedium, trace_spectrum: Callable[[np.ndarray], np.ndarray],
                     target, grid: QuadGrid | None = None) -> np.ndarray:
    """Radiating field above ``x2 = 0`` from the trace spectrum.

    ``trace_spectrum`` maps an array of ``xi`` to ``(n, 2)`` complex values.
    ``target`` may be one point or an array of points, all with ``x2 > 0``.
    """
    pts = np.atleast_2d(np.asarray(target, dtype=float))
    if np.any(pts[:, 1] <= 0):
        raise ValueError("propagation targets must have x2 > 0")
    grid = grid or build_grid(medium)
    xi, w = grid.nodes, grid.weights
    uhat = np.asarray(trace_spectrum(xi), dtype=complex)
    s = symbols(medium, xi)
    P, S = potentials_array(medium, xi, uhat, s)
    # u = C diag(e^{i x2 gp}, e^{i x2 gs}) C^{-1} uhat with C^{-1} = C / rho
    out = np.empty((len(pts), 2), dtype=complex)
    for i, (x1, x2) in enumerate(pts):
        ep = np.exp(1j * x2 * s["gp"]) * P
        es = np.exp(1j * x2 * s["gs"]) * S
        ph = w * np.exp(1j * xi * x1) / SQRT_2PI
        out[i, 0] = np.sum(ph * (xi * ep + s["gs"] * es))
        out[i, 1] = np.sum(ph * (s["gp"] * ep - xi * es))
    return out[0] if np.ndim(target) == 1 else out


def radiated_flux(medium: ElasticMedium, P_of_xi: Callable[[float], complex],
                  S_of_xi: Callable[[float], complex], epsabs: float = 1e-13,
                  epsrel: float = 1e-10) -> float:
    """``omega^2 (int_{|xi|<k_p} g_p |P|^2 + int_{|xi|<k_s} g_s |S|^2)`` by adaptive quadrature."""
    kp, ks = medium.k_p, medium.k_s
    opts = dict(epsabs=epsabs, epsrel=epsrel, limit=400)
    fp = lambda x: math.sqrt(max(kp**2 - x**2, 0.0)) * abs(P_of_xi(x)) ** 2
    fs = lambda x: math.sqrt(max(ks**2 - x**2, 0.0)) * abs(S_of_xi(x)) ** 2
    total = 0.0
    # split at every branch point so each piece only has endpoint singularities
    pieces = [(fp, (-kp, 0.0, kp)), (fs, (-ks, -kp, 0.0, kp, ks))]
    for f, cuts in pieces:
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(f, a, b, **opts)
            total += val
    return medium.omega**2 * total


# ---------------------------------------------------------------- export

CLASS_CODES = {"zero": 0, "semidefinite_negative": 1, "definite_negative": 2, "indefinite": 3}


def write_kernel_csv(path, medium: ElasticMedium, xis: Iterable[float]) -> int:
    """Dump symbol entries and sign data; returns the number of rows."""
    header = ["xi"]
    for name in ("M", "Minv"):
        for i in range(2):
            for j in range(2):
                header += [f"re_{name}{i+1}{j+1}", f"im_{name}{i+1}{j+1}"]
    header += ["eig1_negReM", "eig2_negReM", "class_code"]
    n = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for x in xis:
            smp = kernel_sample(medium, float(x))
            row = [repr(float(x))]
            for mat in (smp.M, smp.M_inv):
                for v in mat.ravel():
                    row += [repr(float(v.real)), repr(float(v.imag))]
            ev = np.linalg.eigvalsh(-hermitian_parts(smp.M)[0])
            try:
                code = CLASS_CODES[sign_report(medium, float(x)).im_Minv_classification]
            except (NumericalDegeneracyError, PoleError):
                code = -1
            row += [repr(float(ev[0])), repr(float(ev[1])), str(code)]
            wr.writerow(row)
            n += 1
    return n
