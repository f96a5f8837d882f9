"""Direct Dirichlet and Neumann cavity solves and field evaluation above ground."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .assembly import (ApertureHats, DiscreteField, FemSystem, assemble_dirichlet_system,
                       assemble_neumann_system, incident_nodal, solve)
from .errors import ConfigurationError
from .geometry import Mesh, prolongate, refine
from .medium import ElasticMedium, IncidenceConfig, PlaneWaveField, incident_field, reflected_field
from .spectral import QuadratureConfig

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ForwardSolution:
    """Result of a forward solve.

    ``field`` is the total displacement for Dirichlet and the scattered one
    for Neumann; use ``total`` and ``scattered`` for explicit conversions.
    """

    medium: ElasticMedium
    cfg: IncidenceConfig
    bc: str
    mesh: Mesh
    field: DiscreteField
    system: FemSystem
    trace_t: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def hats(self) -> ApertureHats:
        return self.system.hats

    @property
    def grid(self):
        return self.system.extras["grid"]

    def background(self) -> PlaneWaveField | None:
        if self.cfg.c_p == 0 and self.cfg.c_s == 0:
            return None
        return incident_field(self.medium, self.cfg) + reflected_field(self.medium, self.cfg, self.bc)

    def total(self) -> DiscreteField:
        if self.bc == "dirichlet":
            return self.field
        return DiscreteField(self.mesh, self.field.values + incident_nodal(self.mesh, self.background()))

    def scattered(self) -> DiscreteField:
        if self.bc == "neumann":
            return self.field
        return DiscreteField(self.mesh, self.field.values - incident_nodal(self.mesh, self.background()))

    def gamma_trace(self) -> tuple[np.ndarray, np.ndarray]:
        """Aperture abscissae and the solved field there (total for Dirichlet, scattered for Neumann)."""
        g = self.mesh.gamma_nodes
        return self.mesh.nodes[g, 0], self.field.values[g]

    def hat_coefficients(self) -> np.ndarray:
        """Field values at the aperture hat nodes, ``(n_hats, 2)``."""
        return self.field.values[self.hats.hat_nodes]

    def scattered_spectrum(self):
        """Callable ``xi -> (n, 2)`` for the whole-line scattered trace spectrum."""
        hats = self.hats
        if self.bc == "dirichlet":
            # on the ground the background vanishes, off the aperture so does u
            return hats.trace_spectrum(self.hat_coefficients())
        t = self.trace_t

        def spectrum(xi):
            s = spectral.symbols(self.medium, xi)
            return np.einsum("qab,qb->qa", s["Minv"], hats.transform(xi) @ t)

        return spectrum


def _resolution_check(mesh: Mesh, medium: ElasticMedium) -> float:
    wl = 2 * math.pi / medium.k_s
    ppw = wl / mesh.h_max
    if ppw < 10:
        logger.warning("mesh resolves %.1f nodes per shear wavelength (< 10)", ppw)
    return ppw


def solve_dirichlet(medium: ElasticMedium, cfg: IncidenceConfig, mesh: Mesh,
                    quad: QuadratureConfig | None = None) -> ForwardSolution:
    """Total field with ``u = 0`` on ``S`` and the DtN condition on the aperture."""
    ppw = _resolution_check(mesh, medium)
    system = assemble_dirichlet_system(mesh, medium, cfg, quad)
    fld = solve(system)
    sol = ForwardSolution(medium, cfg, "dirichlet", mesh, fld, system)
    sol.diagnostics.update(residual=fld.residual, nodes_per_wavelength=ppw,
                           n_nodes=mesh.n_nodes, h_max=mesh.h_max)
    return sol


def solve_neumann(medium: ElasticMedium, cfg: IncidenceConfig, mesh: Mesh,
                  quad: QuadratureConfig | None = None, formulation: str = "total") -> ForwardSolution:
    """Scattered field with traction-free ``S`` and the NtD condition on the aperture."""
    ppw = _resolution_check(mesh, medium)
    system = assemble_neumann_system(mesh, medium, cfg, quad, formulation)
    fld = solve(system)
    sol = ForwardSolution(medium, cfg, "neumann", mesh, fld, system, trace_t=fld.trace)
    sol.diagnostics.update(residual=fld.residual, nodes_per_wavelength=ppw,
                           n_nodes=mesh.n_nodes, h_max=mesh.h_max,
                           constraint_residual=neumann_constraint_residual(sol))
    return sol


def neumann_constraint_residual(sol: ForwardSolution) -> float:
    """Relative residual of the aperture rows ``G^T u - N t = b`` after the solve."""
    sysm = sol.system
    x = sol.field.raw
    if x is None:
        return float("nan")
    n = 2 * sol.mesh.n_nodes
    G = sysm.extras["G"]
    lhs = G.T @ x[:n]
    rhs = sysm.tbc @ x[n:] + sysm.rhs[n:]
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    return float(np.linalg.norm(lhs - rhs) / scale) if scale > 0 else 0.0


def solve_forward(medium, cfg, mesh, bc: str, quad=None) -> ForwardSolution:
    if bc == "dirichlet":
        return solve_dirichlet(medium, cfg, mesh, quad)
    if bc == "neumann":
        return solve_neumann(medium, cfg, mesh, quad)
    raise ConfigurationError(f"unknown boundary condition {bc!r}")


def _propagation_tail(hats: ApertureHats, coeffs: np.ndarray, Xi: float, pts: np.ndarray) -> np.ndarray:
    """Leading contribution of ``|xi| > Xi`` for a P1 trace (the propagators tend to the identity)."""
    S = hats.slopes @ coeffs  # (n_x, 2)
    out = np.zeros((len(pts), 2), dtype=complex)
    for i, (x1, x2) in enumerate(pts):
        c = hats.x - x1
        k = (spectral.expint_n(2, Xi * (x2 + 1j * c)) + spectral.expint_n(2, Xi * (x2 - 1j * c))) / Xi
        out[i] = -(k @ S) / (2 * math.pi)
    return out


def evaluate_upper(solution: ForwardSolution, points, quad: QuadratureConfig | None = None,
                   total: bool = False) -> np.ndarray:
    """Scattered (or total) field at points with ``x2 > 0`` by Fourier propagation."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts[:, 1] <= 0):
        raise ConfigurationError("evaluation points must satisfy x2 > 0")
    med = solution.medium
    if quad is None:
        ext = float(np.max(np.abs(pts[:, 0]))) + float(np.max(np.abs(solution.hats.x)))
        quad = QuadratureConfig(max_width=min(1.0, 8.0 / max(ext, 1.0)))
    grid = spectral.build_grid(med, quad)
    vals = spectral.propagate_upward(med, solution.scattered_spectrum(), pts, grid)
    vals = np.atleast_2d(vals)
    if solution.bc == "dirichlet":
        vals = vals + _propagation_tail(solution.hats, solution.hat_coefficients(), grid.xi_max, pts)
    if total:
        bg = solution.background()
        if bg is not None:
            vals = vals + bg.value(pts)
    return vals[0] if np.ndim(points) == 1 else vals


def pairing_imag(solution: ForwardSolution) -> float:
    """``Im <T u_s, u_s>`` on the aperture from the assembled transparent block."""
    if solution.bc == "dirichlet":
        u = solution.hat_coefficients().ravel()
        return float(np.imag(np.conj(u) @ (solution.system.tbc @ u)))
    t = solution.trace_t.ravel()
    return float(-np.imag(np.conj(t) @ (solution.system.tbc @ t)))


def flux_components(solution: ForwardSolution):
    med = solution.medium
    spectrum = solution.scattered_spectrum()

    def amps(x):
        xi = np.array([x])
        s = spectral.symbols(med, xi)
        P, S = spectral.potentials_array(med, xi, spectrum(xi), s)
        return P[0], S[0]

    flux = spectral.radiated_flux(med, lambda x: amps(x)[0], lambda x: amps(x)[1])
    return pairing_imag(solution), flux


def flux_balance(solution: ForwardSolution) -> float:
    """Relative mismatch between the block pairing and the radiated-flux integral."""
    im_pair, flux = flux_components(solution)
    return abs(im_pair - flux) / max(1.0, abs(flux))


# ---------------------------------------------------------------- convergence

def l2_norm(mesh: Mesh, values: np.ndarray) -> float:
    """Exact ``L^2(D)`` norm of a P1 vector field."""
    v = np.asarray(values, dtype=complex).reshape(-1, 2)[mesh.triangles]   # (T, 3, 2)
    Me = (np.ones((3, 3)) + np.eye(3)) / 12.0
    quad = np.einsum("tia,ij,tja->t", np.conj(v), Me, v).real
    return float(math.sqrt(np.sum(mesh.areas * quad)))


def h1_seminorm(mesh: Mesh, values: np.ndarray) -> float:
    f = DiscreteField(mesh, values)
    J = f.element_gradients()
    return float(math.sqrt(np.sum(mesh.areas * np.sum(np.abs(J) ** 2, axis=(1, 2)))))


def self_convergence(medium, cfg, base_mesh: Mesh, bc: str, levels: int = 3, quad=None):
    """H1-seminorm errors of the first ``levels`` meshes against the finest one.

    The hierarchy has ``levels + 1`` meshes; the scattered field is compared
    after prolongation to the finest mesh.  Returns ``(errors, ratios, h)``.
    """
    meshes = [base_mesh]
    for _ in range(levels):
        meshes.append(refine(meshes[-1]))
    sols = [solve_forward(medium, cfg, m, bc, quad) for m in meshes]
    fine = meshes[-1]
    ref = sols[-1].scattered().values
    errs = []
    for m, s in zip(meshes[:-1], sols[:-1]):
        up = prolongate(m, fine, s.scattered().values)
        errs.append(h1_seminorm(fine, up - ref))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return errs, ratios, [m.h_max for m in meshes]


# ---------------------------------------------------------------- export

def write_vtk(path, mesh: Mesh, values: np.ndarray, title: str = "elastocavity field") -> None:
    """Legacy ASCII VTK unstructured grid with ``re_u`` and ``im_u`` point vectors."""
    values = np.asarray(values, dtype=complex).reshape(-1, 2)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.nodes.tolist():
            fh.write(f"{x!r} {y!r} 0.0\n")
        nt = len(mesh.triangles)
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"3 {i} {j} {k}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("5\n" * nt)
        fh.write(f"POINT_DATA {mesh.n_nodes}\n")
        for name, part in (("re_u", values.real), ("im_u", values.imag)):
            fh.write(f"VECTORS {name} double\n")
            for a, b in part.tolist():
                fh.write(f"{a!r} {b!r} 0.0\n")


def write_trace_csv(path, x1: np.ndarray, u: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "re_u1", "im_u1", "re_u2", "im_u2"])
        for x, v in zip(x1, u):
            wr.writerow([repr(float(x)), repr(float(v[0].real)), repr(float(v[0].imag)),
                         repr(float(v[1].real)), repr(float(v[1].imag))])
