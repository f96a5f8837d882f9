"""P1 finite-element assembly with Fourier transparent boundary blocks.

Degrees of freedom are interleaved, ``dof = 2 * node + component``.  The
aperture blocks are built from exact Fourier transforms of the boundary hat
functions, integrated against the half-space symbols on the composite grid
of :mod:`elastocavity.spectral`, plus a closed-form tail beyond ``|xi| = Xi``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import spectral
from .errors import ConfigurationError, SolverError
from .geometry import TAG_S, Mesh
from .medium import (ElasticMedium, IncidenceConfig, PlaneWaveField, incident_field,
                     reflected_field, traction)
from .spectral import SQRT_2PI, QuadGrid, QuadratureConfig

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------- energy

def _local_dofs(tris: np.ndarray) -> np.ndarray:
    """``(T, 6)`` global dofs ordered ``(node0, c0), (node0, c1), (node1, c0), ...``."""
    return (2 * tris[:, :, None] + np.arange(2)[None, None, :]).reshape(len(tris), 6)


def _scatter(tris: np.ndarray, ke: np.ndarray, n: int) -> sp.csr_matrix:
    dofs = _local_dofs(tris)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    return sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))


def element_stiffness(grads: np.ndarray, areas: np.ndarray, lam: float, mu: float,
                      parts: bool = False):
    """Element matrices ``(T, 6, 6)`` of ``mu grad u : grad v + (lam + mu) div u div v``."""
    gg = np.einsum("tid,tjd->tij", grads, grads)
    eye = np.eye(2)
    lap = mu * np.einsum("tij,ab->tiajb", gg, eye)
    div = (lam + mu) * np.einsum("tia,tjb->tiajb", grads, grads)
    lap = (lap * areas[:, None, None, None, None]).reshape(-1, 6, 6)
    div = (div * areas[:, None, None, None, None]).reshape(-1, 6, 6)
    return (lap, div) if parts else lap + div


def element_mass(areas: np.ndarray) -> np.ndarray:
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m = np.einsum("ij,ab->iajb", base, np.eye(2)).reshape(6, 6)
    return areas[:, None, None] * m[None]


def assemble_energy(mesh: Mesh, medium: ElasticMedium, parts: bool = False):
    """Global stiffness and mass (real symmetric, size ``2N``).

    With ``parts=True`` the stiffness is returned as its shear-Laplacian and
    divergence pieces, used by the coercivity check.
    """
    n = 2 * mesh.n_nodes
    mass = _scatter(mesh.triangles, element_mass(mesh.areas), n)
    if parts:
        lap, div = element_stiffness(mesh.grad_basis, mesh.areas, medium.lam, medium.mu, parts=True)
        return _scatter(mesh.triangles, lap, n), _scatter(mesh.triangles, div, n), mass
    ke = element_stiffness(mesh.grad_basis, mesh.areas, medium.lam, medium.mu)
    return _scatter(mesh.triangles, ke, n), mass


# ---------------------------------------------------------------- aperture hats

def _q_func(z: np.ndarray) -> np.ndarray:
    """``int_0^1 s exp(-i z s) ds`` with a series near ``z = 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 1e-2
    zb = z[~small]
    out[~small] = (np.exp(-1j * zb) * (1 + 1j * zb) - 1) / zb**2
    zs = -1j * z[small]
    acc = np.zeros(zs.shape, dtype=complex)
    term = np.ones(zs.shape, dtype=complex)
    for k in range(12):
        acc += term / (k + 2)
        term = term * zs / (k + 1)
    out[small] = acc
    return out


@dataclass(frozen=True, eq=False)
class ApertureHats:
    """P1 hats on the aperture nodes that are not constrained.

    ``x`` holds every aperture node abscissa (junctions included) in
    increasing order; ``hat_pos`` indexes the hat centres into ``x``.
    """

    x: np.ndarray
    nodes: np.ndarray
    hat_pos: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "ApertureHats":
        g = mesh.gamma_nodes
        pos = np.flatnonzero(np.isin(g, mesh.gamma_interior))
        return cls(mesh.nodes[g, 0].copy(), g, pos)

    @property
    def n(self) -> int:
        return len(self.hat_pos)

    @property
    def hat_nodes(self) -> np.ndarray:
        return self.nodes[self.hat_pos]

    @cached_property
    def slopes(self) -> np.ndarray:
        """Slope jumps ``(n_x, n_hats)``: ``f'' = sum_n s_n delta(x - x_n)``."""
        K = np.zeros((len(self.x), self.n))
        for c, j in enumerate(self.hat_pos):
            hl = self.x[j] - self.x[j - 1]
            hr = self.x[j + 1] - self.x[j]
            K[j - 1, c] += 1.0 / hl
            K[j, c] -= 1.0 / hl + 1.0 / hr
            K[j + 1, c] += 1.0 / hr
        return K

    @cached_property
    def mass(self) -> np.ndarray:
        """1D mass matrix between all aperture nodes and the hats, ``(n_x, n_hats)``."""
        nx = len(self.x)
        Mfull = np.zeros((nx, nx))
        h = np.diff(self.x)
        for e, he in enumerate(h):
            Mfull[e:e + 2, e:e + 2] += he / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        return Mfull[:, self.hat_pos]

    @cached_property
    def _hat_geometry(self):
        j = self.hat_pos
        return self.x[j - 1], self.x[j + 1], self.x[j] - self.x[j - 1], self.x[j + 1] - self.x[j]

    def transform(self, xi) -> np.ndarray:
        """Fourier transforms ``(n_xi, n_hats)`` of the hats."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))[:, None]
        x0, x2, hl, hr = self._hat_geometry
        out = (np.exp(-1j * xi * x0) * hl * _q_func(xi * hl)
               + hr * np.exp(-1j * xi * x2) * _q_func(-xi * hr))
        return out / SQRT_2PI

    def trace_spectrum(self, coeffs: np.ndarray):
        """Callable ``xi -> (n, 2)`` spectrum of the trace with hat coefficients ``(n_hats, 2)``."""
        coeffs = np.asarray(coeffs)
        return lambda xi: self.transform(xi) @ coeffs

    def tail_block(self, Xi: float, terms) -> np.ndarray:
        """``(2 n, 2 n)`` contribution of ``|xi| > Xi`` for a symbol given as asymptotic terms."""
        C = self.x[None, :] - self.x[:, None]
        K = self.slopes
        out = np.zeros((self.n, 2, self.n, 2), dtype=complex)
        for coef, p, q in terms:
            R = spectral.tail_kernel(C, Xi, p, q) / (2 * math.pi)
            S = K.T @ R @ K
            out += np.einsum("jk,ab->jakb", S, coef)
        return out.reshape(2 * self.n, 2 * self.n)


def hat_transform(mesh: Mesh, gamma_node_index: int, xi):
    """Fourier transform of the aperture hat centred at mesh node ``gamma_node_index``."""
    hats = ApertureHats.from_mesh(mesh)
    where = np.flatnonzero(hats.hat_nodes == gamma_node_index)
    if len(where) == 0:
        raise ConfigurationError(f"node {gamma_node_index} carries no aperture hat")
    val = hats.transform(xi)[:, where[0]]
    return val[0] if np.ndim(xi) == 0 else val


def _symbol_block(hats: ApertureHats, grid: QuadGrid, sym: np.ndarray) -> np.ndarray:
    Phi = hats.transform(grid.nodes)
    n = hats.n
    out = np.zeros((n, 2, n, 2), dtype=complex)
    PhiH = np.conj(Phi).T
    for a in range(2):
        for b in range(2):
            out[:, a, :, b] = PhiH @ ((grid.weights * sym[:, a, b])[:, None] * Phi)
    return out.reshape(2 * n, 2 * n)


def get_grid(medium: ElasticMedium, quad: QuadratureConfig | QuadGrid | None) -> QuadGrid:
    if isinstance(quad, QuadGrid):
        return quad
    return spectral.build_grid(medium, quad)


def assemble_dtn_block(mesh: Mesh, medium: ElasticMedium, quad=None,
                       hats: ApertureHats | None = None) -> np.ndarray:
    """``T[(j,a),(k,b)] = int M_ab(xi) hat_k(xi) conj(hat_j(xi)) d xi`` over the aperture hats."""
    hats = hats or ApertureHats.from_mesh(mesh)
    grid = get_grid(medium, quad)
    sym = spectral.symbols(medium, grid.nodes, grid.config.delta_reg)["M"]
    block = _symbol_block(hats, grid, sym)
    return block + hats.tail_block(grid.xi_max, spectral.tail_terms_dtn(medium))


def assemble_ntd_block(mesh: Mesh, medium: ElasticMedium, quad=None,
                       hats: ApertureHats | None = None) -> np.ndarray:
    """Same pairing with the NtD symbol ``M^{-1}``."""
    hats = hats or ApertureHats.from_mesh(mesh)
    grid = get_grid(medium, quad)
    sym = spectral.symbols(medium, grid.nodes, grid.config.delta_reg)["Minv"]
    if not np.all(np.isfinite(sym)):
        bad = grid.nodes[~np.all(np.isfinite(sym), axis=(1, 2))]
        raise SolverError(f"NtD symbol not finite at quadrature nodes {bad[:5]}")
    block = _symbol_block(hats, grid, sym)
    return block + hats.tail_block(grid.xi_max, spectral.tail_terms_ntd(medium))


# ---------------------------------------------------------------- data on the aperture

def plane_wave_line_data(hats: ApertureHats, fld: PlaneWaveField, kind: str, medium: ElasticMedium):
    """Exact ``int f(x1, 0) hat_j(x1) dx1`` of a plane-wave value or traction, ``(n_hats, 2)``."""
    out = np.zeros((hats.n, 2), dtype=complex)
    n_up = np.array([0.0, 1.0])
    for m in fld.modes:
        k = m.wavevector
        if abs(k[0].imag) > 0:
            raise ConfigurationError("horizontal wavenumbers must be real")
        if kind == "value":
            vec = m.amplitude * m.polarization
        else:
            vec = m.amplitude * (1j * medium.mu * m.polarization * k[1]
                                 + 1j * (medium.lam + medium.mu) * (k @ m.polarization) * n_up)
        phi = hats.transform([-k[0].real])[0] * SQRT_2PI
        out += phi[:, None] * vec[None, :]
    return out


def _embed_hat_vector(mesh: Mesh, hats: ApertureHats, vals: np.ndarray) -> np.ndarray:
    F = np.zeros(2 * mesh.n_nodes, dtype=complex)
    F[2 * hats.hat_nodes] = vals[:, 0]
    F[2 * hats.hat_nodes + 1] = vals[:, 1]
    return F


def assemble_dirichlet_rhs(mesh: Mesh, medium: ElasticMedium, cfg: IncidenceConfig,
                           hats: ApertureHats | None = None) -> np.ndarray:
    """Load ``(g, hat_j)`` with ``g = T(u_i + u_r)`` on the aperture; length ``2N``."""
    hats = hats or ApertureHats.from_mesh(mesh)
    if cfg.c_p == 0 and cfg.c_s == 0:
        return np.zeros(2 * mesh.n_nodes, dtype=complex)
    h = incident_field(medium, cfg) + reflected_field(medium, cfg, "dirichlet")
    return _embed_hat_vector(mesh, hats, plane_wave_line_data(hats, h, "traction", medium))


def s_boundary_load(mesh: Mesh, medium: ElasticMedium, fld, order: int = 4) -> np.ndarray:
    """``int_S (-T fld) . hat_j ds`` by Gauss quadrature on the straight ``S`` edges."""
    edges = mesh.edges_with_tag(TAG_S)
    normals = mesh.edge_outward_normals(edges)
    t, w = spectral.gauss_legendre(order)
    F = np.zeros(2 * mesh.n_nodes, dtype=complex)
    pa, pb = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    L = np.linalg.norm(pb - pa, axis=1)
    for tq, wq in zip(t, w):
        x = pa + tq * (pb - pa)
        tr = traction(fld, x, normals, medium)
        for node_col, shape in ((0, 1 - tq), (1, tq)):
            contrib = -(wq * shape * L)[:, None] * tr
            np.add.at(F, 2 * edges[:, node_col], contrib[:, 0])
            np.add.at(F, 2 * edges[:, node_col] + 1, contrib[:, 1])
    return F


# ---------------------------------------------------------------- systems

@dataclass(eq=False)
class FemSystem:
    """Assembled complex linear system with its bookkeeping.

    ``matrix`` acts on the reduced unknown vector; ``expand`` maps a reduced
    solution back to nodal values (and, for the mixed system, the aperture
    traction coefficients).
    """

    matrix: sp.spmatrix
    rhs: np.ndarray
    kind: str = "generic"
    mesh: Mesh | None = None
    medium: ElasticMedium | None = None
    stiffness: sp.spmatrix | None = None
    mass: sp.spmatrix | None = None
    tbc: np.ndarray | None = None
    free: np.ndarray | None = None
    hats: ApertureHats | None = None
    extras: dict = field(default_factory=dict)
    _lu: object = None

    def factor(self):
        if self._lu is None:
            A = sp.csc_matrix(self.matrix, dtype=complex)
            try:
                self._lu = spla.splu(A)
            except RuntimeError as exc:
                raise SolverError(f"factorization failed (possible discrete resonance): {exc}") from exc
        return self._lu

    def solve_vector(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        x = self.factor().solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SolverError("solution contains non-finite entries; matrix numerically singular")
        nb = np.linalg.norm(rhs)
        if nb > 0:
            res = np.linalg.norm(self.matrix @ x - rhs) / nb
            if res > RESIDUAL_TOL:
                # one step of iterative refinement before giving up
                x = x + self.factor().solve(rhs - self.matrix @ x)
                res = np.linalg.norm(self.matrix @ x - rhs) / nb
                if res > RESIDUAL_TOL:
                    raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL}")
        return x


@dataclass(eq=False)
class DiscreteField:
    """Complex nodal displacements on a mesh, shape ``(N, 2)``."""

    mesh: Mesh | None
    values: np.ndarray
    trace: np.ndarray | None = None
    residual: float = 0.0
    raw: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.mesh is not None and self.values.shape != (self.mesh.n_nodes, 2):
            raise ConfigurationError("field length must equal twice the node count")

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def element_gradients(self) -> np.ndarray:
        """Per-triangle ``J[t, a, b] = d u_a / d x_b``."""
        return np.einsum("tid,tia->tad", self.mesh.grad_basis, self.values[self.mesh.triangles])


def _embed_dense(n: int, dofs: np.ndarray, block: np.ndarray) -> sp.csr_matrix:
    rows = np.repeat(dofs, len(dofs))
    cols = np.tile(dofs, len(dofs))
    return sp.csr_matrix((block.ravel(), (rows, cols)), shape=(n, n))


def hat_dofs(hats: ApertureHats) -> np.ndarray:
    return (2 * hats.hat_nodes[:, None] + np.arange(2)[None, :]).ravel()


def assemble_dirichlet_system(mesh: Mesh, medium: ElasticMedium, cfg: IncidenceConfig,
                              quad=None) -> FemSystem:
    """``(K - w^2 M - T) u = F`` on the dofs not fixed by ``u = 0`` on ``S``."""
    K, Mm = assemble_energy(mesh, medium)
    hats = ApertureHats.from_mesh(mesh)
    grid = get_grid(medium, quad)
    T = assemble_dtn_block(mesh, medium, grid, hats)
    n = 2 * mesh.n_nodes
    A = (K - medium.omega**2 * Mm).astype(complex) - _embed_dense(n, hat_dofs(hats), T)
    fixed = np.zeros(mesh.n_nodes, dtype=bool)
    fixed[mesh.dirichlet_nodes] = True
    free = np.flatnonzero(~np.repeat(fixed, 2))
    F = assemble_dirichlet_rhs(mesh, medium, cfg, hats)
    A = sp.csr_matrix(A)
    return FemSystem(A[free][:, free].tocsc(), F[free], "dirichlet", mesh, medium, K, Mm, T, free,
                     hats, {"full_matrix": A, "grid": grid, "cfg": cfg})


def assemble_neumann_system(mesh: Mesh, medium: ElasticMedium, cfg: IncidenceConfig,
                            quad=None, formulation: str = "total") -> FemSystem:
    """Mixed system in nodal displacements and aperture traction coefficients.

    ``formulation="total"`` takes the total field as unknown and imposes the
    incident data through the aperture constraint; ``"scattered"`` takes the
    scattered field and loads ``-T h`` on ``S``.  Both discretize the same
    problem; the scattered field is recovered by ``solve``.
    """
    if formulation not in ("total", "scattered"):
        raise ConfigurationError(f"unknown formulation {formulation!r}")
    K, Mm = assemble_energy(mesh, medium)
    hats = ApertureHats.from_mesh(mesh)
    grid = get_grid(medium, quad)
    N = assemble_ntd_block(mesh, medium, grid, hats)
    n = 2 * mesh.n_nodes
    nt = 2 * hats.n
    Gs = np.kron(hats.mass, np.eye(2))  # aperture-node dofs x hat dofs
    gdofs = (2 * hats.nodes[:, None] + np.arange(2)[None, :]).ravel()
    G = sp.lil_matrix((n, nt))
    G[gdofs, :] = Gs
    G = G.tocsr()
    A0 = (K - medium.omega**2 * Mm).astype(complex)
    mat = sp.bmat([[A0, -G], [G.T, -sp.csr_matrix(N)]], format="csc")
    zero_inc = cfg.c_p == 0 and cfg.c_s == 0
    h = None if zero_inc else incident_field(medium, cfg) + reflected_field(medium, cfg, "neumann")
    rhs = np.zeros(n + nt, dtype=complex)
    if h is not None:
        if formulation == "total":
            rhs[n:] = plane_wave_line_data(hats, h, "value", medium).ravel()
        else:
            rhs[:n] = s_boundary_load(mesh, medium, h)
    return FemSystem(mat, rhs, "neumann", mesh, medium, K, Mm, N, None, hats,
                     {"G": G, "formulation": formulation, "incident": h, "grid": grid, "cfg": cfg,
                      "A0": A0})


def incident_nodal(mesh: Mesh, fld: PlaneWaveField | None) -> np.ndarray:
    if fld is None:
        return np.zeros((mesh.n_nodes, 2), dtype=complex)
    return fld.value(mesh.nodes)


def solve(system: FemSystem) -> DiscreteField:
    """Direct sparse solve; returns the unknown displacement as a field.

    Dirichlet systems return the total field with zeros on ``S``.  Mixed
    Neumann systems return the scattered field and put the aperture traction
    coefficients in ``trace``.
    """
    x = system.solve_vector(system.rhs)
    nb = np.linalg.norm(system.rhs)
    res = float(np.linalg.norm(system.matrix @ x - system.rhs) / nb) if nb > 0 else 0.0
    if system.kind == "generic" or system.mesh is None:
        return DiscreteField(None, x.reshape(-1, 1) if x.ndim == 1 else x, residual=res)
    mesh = system.mesh
    n = 2 * mesh.n_nodes
    if system.kind == "dirichlet":
        full = np.zeros(n, dtype=complex)
        full[system.free] = x
        return DiscreteField(mesh, full.reshape(-1, 2), residual=res)
    u = x[:n].reshape(-1, 2)
    t = x[n:].reshape(-1, 2)
    if system.extras["formulation"] == "total":
        u = u - incident_nodal(mesh, system.extras["incident"])
    out = DiscreteField(mesh, u, trace=t, residual=res)
    out.raw = x
    return out


# ---------------------------------------------------------------- recovery and shape forms

def recover_gradient(fld: DiscreteField) -> np.ndarray:
    """Nodal gradients ``(N, 2, 2)`` by least-squares patch recovery.

    Element gradients are fitted by a linear polynomial over the element
    centroids of each node patch; boundary nodes use the two-ring patch.
    Patches too small for a linear fit fall back to area averaging.
    """
    mesh = fld.mesh
    Ge = fld.element_gradients().reshape(-1, 4)
    cent = mesh.nodes[mesh.triangles].mean(axis=1)
    node_tris = [[] for _ in range(mesh.n_nodes)]
    for t, tri in enumerate(mesh.triangles):
        for v in tri:
            node_tris[v].append(t)
    boundary = np.zeros(mesh.n_nodes, dtype=bool)
    boundary[mesh.boundary_edges.ravel()] = True
    out = np.empty((mesh.n_nodes, 4), dtype=complex)
    for v in range(mesh.n_nodes):
        patch = node_tris[v]
        if boundary[v]:
            ring = set(patch)
            for t in patch:
                for w in mesh.triangles[t]:
                    ring.update(node_tris[w])
            patch = sorted(ring)
        P = np.column_stack([np.ones(len(patch)), cent[patch] - mesh.nodes[v]])
        if len(patch) >= 4 and np.linalg.matrix_rank(P) == 3:
            coef, *_ = np.linalg.lstsq(P, Ge[patch], rcond=None)
            out[v] = coef[0]
        else:
            a = mesh.areas[node_tris[v]]
            out[v] = (a[:, None] * Ge[node_tris[v]]).sum(axis=0) / a.sum()
    return out.reshape(-1, 2, 2)


def velocity_gradients(mesh: Mesh, V: np.ndarray) -> np.ndarray:
    """Per-triangle ``(grad V)[a, b] = d V_a / d x_b`` of a P1 vector field."""
    return np.einsum("tid,tia->tad", mesh.grad_basis, V[mesh.triangles])


def shape_form_rhs(mesh: Mesh, medium: ElasticMedium, u: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``sum_i g_i(V)(u, hat)`` for every test dof; equals ``-(dA/dt) u`` for P1.

    ``g1`` is the shear term with ``grad V + grad V^T - div V I``, ``g2`` the
    dilatation term and ``g3`` the mass term weighted by ``div V``.
    """
    g = mesh.grad_basis
    ue = np.asarray(u, dtype=complex).reshape(-1, 2)[mesh.triangles]       # (T, 3, 2)
    Ju = np.einsum("tid,tia->tad", g, ue)                                    # d u_a / d x_d
    Jh = velocity_gradients(mesh, V)
    divh = Jh[:, 0, 0] + Jh[:, 1, 1]
    divu = Ju[:, 0, 0] + Ju[:, 1, 1]
    H = Jh + np.swapaxes(Jh, 1, 2) - divh[:, None, None] * np.eye(2)[None]
    area = mesh.areas
    mu, lm = medium.mu, medium.lam + medium.mu
    # g1: mu * (grad u_a)^T H grad phi_i, test component a
    g1 = mu * np.einsum("tad,tde,tie->tia", Ju, H, g)
    # g2 pieces; grad v : grad h^T = sum_d g_{i,d} Jh[d, a]
    uhT = np.einsum("tcd,tdc->t", Ju, Jh)
    g2 = lm * (divu[:, None, None] * np.einsum("tid,tda->tia", g, Jh)
               + g * uhT[:, None, None]
               - (divh * divu)[:, None, None] * g)
    loc = (g1 + g2) * area[:, None, None]
    Me = (np.ones((3, 3)) + np.eye(3)) / 12.0
    g3 = medium.omega**2 * (divh * area)[:, None, None] * np.einsum("ij,tja->tia", Me, ue)
    loc = loc + g3
    R = np.zeros(2 * mesh.n_nodes, dtype=complex)
    dofs = _local_dofs(mesh.triangles)
    np.add.at(R, dofs.ravel(), loc.reshape(len(mesh.triangles), 6).ravel())
    return R


def neumann_boundary_form(mesh: Mesh, medium: ElasticMedium, u: np.ndarray,
                          h_nodes: np.ndarray, order: int = 3) -> np.ndarray:
    """Boundary distribution on ``S`` tested with every hat.

    ``int_S (h.n) [w^2 u.v - (lam + mu) div u div v - mu grad u : grad v] ds``
    with ``grad u`` and ``grad v`` taken from the triangle owning each edge.
    """
    edges = mesh.edges_with_tag(TAG_S)
    tri_of = mesh.boundary_edge_triangle(edges)
    normals = mesh.edge_outward_normals(edges)
    u = np.asarray(u, dtype=complex).reshape(-1, 2)
    g = mesh.grad_basis
    t, w = spectral.gauss_legendre(order)
    F = np.zeros(2 * mesh.n_nodes, dtype=complex)
    lm, mu, w2 = medium.lam + medium.mu, medium.mu, medium.omega**2
    for e, (a, b) in enumerate(edges):
        tri = mesh.triangles[tri_of[e]]
        L = np.linalg.norm(mesh.nodes[b] - mesh.nodes[a])
        Ju = np.einsum("id,ia->ad", g[tri_of[e]], u[tri])
        divu = Ju[0, 0] + Ju[1, 1]
        n = normals[e]
        for tq, wq in zip(t, w):
            hn = ((1 - tq) * h_nodes[a] + tq * h_nodes[b]) @ n
            uq = (1 - tq) * u[a] + tq * u[b]
            for loc, node in enumerate(tri):
                phi = (1 - tq) if node == a else (tq if node == b else 0.0)
                gi = g[tri_of[e], loc]
                for comp in range(2):
                    val = (w2 * uq[comp] * phi - lm * divu * gi[comp] - mu * (Ju[comp] @ gi))
                    F[2 * node + comp] += wq * L * hn * val
    return F


def write_coo(path, matrix: sp.spmatrix) -> None:
    """Debug dump: one ``row col re im`` line per stored entry."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            v = complex(v)
            fh.write(f"{r} {c} {v.real!r} {v.imag!r}\n")
