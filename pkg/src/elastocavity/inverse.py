"""Shape derivatives, finite-difference validation, local stability and reconstruction."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import spectral
from .assembly import (ApertureHats, DiscreteField, assemble_dirichlet_rhs, assemble_dtn_block,
                       hat_dofs, neumann_boundary_form, recover_gradient, shape_form_rhs)
from .errors import ConfigurationError, DeformationError, GeometryError
from .forward import ForwardSolution, solve_dirichlet, solve_forward
from .geometry import (CavityShape, Mesh, ShapePerturbation, deform_mesh, extend_perturbation,
                       generate_mesh, hausdorff_distance, reference_angle, s_node_angles)
from .medium import ElasticMedium, IncidenceConfig
from .spectral import QuadratureConfig

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class DerivativeSolution:
    """Linearized field ``u*`` for one boundary perturbation."""

    base: ForwardSolution
    pert: ShapePerturbation
    field: DiscreteField
    trace: np.ndarray          # values at mesh.gamma_nodes
    route: str
    material: np.ndarray | None = None

    def hat_coefficients(self) -> np.ndarray:
        return self.field.values[self.base.hats.hat_nodes]


def _convective(mesh: Mesh, grad_u: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Nodal ``(h . grad) u`` from recovered gradients ``(N, 2, 2)``."""
    return np.einsum("nab,nb->na", grad_u, h)


def _check_recovery(fld: DiscreteField, grad: np.ndarray, tol: float = 0.5) -> float:
    """Warn when recovered and element gradients disagree strongly on ``S``."""
    mesh = fld.mesh
    Je = fld.element_gradients()
    # element average seen from each S node
    acc = np.zeros((mesh.n_nodes, 2, 2), dtype=complex)
    cnt = np.zeros(mesh.n_nodes)
    for c in range(3):
        np.add.at(acc, mesh.triangles[:, c], Je)
        np.add.at(cnt, mesh.triangles[:, c], 1.0)
    s = mesh.s_nodes
    avg = acc[s] / cnt[s, None, None]
    scale = max(float(np.max(np.abs(grad[s]))), 1e-300)
    est = float(np.max(np.abs(avg - grad[s]))) / scale
    if est > tol:
        logger.warning("gradient recovery on S looks under-resolved (relative gap %.2g)", est)
    return est


def frechet_dirichlet(base: ForwardSolution, pert: ShapePerturbation,
                      route: str = "material") -> DerivativeSolution:
    """Derivative of the aperture trace for a Dirichlet cavity.

    ``route="material"`` differentiates the discrete system along the mesh
    velocity ``h~`` and then removes the convective part; ``"boundary"``
    imposes ``u* = -(n.h) d_n u`` on ``S`` directly from recovered gradients.
    Both give ``u* = 0``-compatible traces on the aperture.
    """
    if base.bc != "dirichlet":
        raise ConfigurationError("frechet_dirichlet needs a Dirichlet base solution")
    mesh, med, sysm = base.mesh, base.medium, base.system
    n = 2 * mesh.n_nodes
    u = base.field.values
    if pert.is_zero:
        zero = np.zeros((mesh.n_nodes, 2), dtype=complex)
        return DerivativeSolution(base, pert, DiscreteField(mesh, zero),
                                  zero[mesh.gamma_nodes], route, zero)
    grad = recover_gradient(base.field)
    _check_recovery(base.field, grad)
    if route == "material":
        R = shape_form_rhs(mesh, med, u, pert.h_tilde)
        x = sysm.solve_vector(R[sysm.free])
        mat = np.zeros(n, dtype=complex)
        mat[sysm.free] = x
        mat = mat.reshape(-1, 2)
        ustar = mat - _convective(mesh, grad, pert.h_tilde)
    elif route == "boundary":
        s = mesh.s_nodes
        normals = mesh.s_node_normals
        dnu = np.einsum("nab,nb->na", grad[s], normals)
        hn = np.einsum("na,na->n", pert.h_boundary, normals)
        data = np.zeros((mesh.n_nodes, 2), dtype=complex)
        data[s] = -hn[:, None] * dnu
        A = sysm.extras["full_matrix"]
        rhs = -(A @ data.ravel())[sysm.free]
        x = sysm.solve_vector(rhs)
        full = data.ravel().copy()
        full[sysm.free] = x
        ustar = full.reshape(-1, 2)
        mat = None
    else:
        raise ConfigurationError(f"unknown derivative route {route!r}")
    fld = DiscreteField(mesh, ustar)
    return DerivativeSolution(base, pert, fld, ustar[mesh.gamma_nodes], route, mat)


def frechet_neumann(base: ForwardSolution, pert: ShapePerturbation,
                    route: str = "material") -> DerivativeSolution:
    """Derivative of the aperture trace of the scattered field for a traction-free cavity.

    ``"boundary"`` loads the boundary distribution of :func:`neumann_boundary_form`
    (shape-gradient data on ``S``) into the mixed system; ``"material"``
    differentiates the discrete system along ``h~``.
    """
    if base.bc != "neumann":
        raise ConfigurationError("frechet_neumann needs a Neumann base solution")
    mesh, med, sysm = base.mesh, base.medium, base.system
    n = 2 * mesh.n_nodes
    U = base.total().values
    if pert.is_zero:
        zero = np.zeros((mesh.n_nodes, 2), dtype=complex)
        return DerivativeSolution(base, pert, DiscreteField(mesh, zero),
                                  zero[mesh.gamma_nodes], route, zero)
    rhs = np.zeros(sysm.matrix.shape[0], dtype=complex)
    if route == "material":
        rhs[:n] = shape_form_rhs(mesh, med, U, pert.h_tilde)
        x = sysm.solve_vector(rhs)
        mat = x[:n].reshape(-1, 2)
        grad = recover_gradient(DiscreteField(mesh, U))
        ustar = mat - _convective(mesh, grad, pert.h_tilde)
    elif route == "boundary":
        rhs[:n] = neumann_boundary_form(mesh, med, U, pert.h_tilde)
        x = sysm.solve_vector(rhs)
        ustar = x[:n].reshape(-1, 2)
        mat = None
    else:
        raise ConfigurationError(f"unknown derivative route {route!r}")
    fld = DiscreteField(mesh, ustar, trace=x[n:].reshape(-1, 2))
    return DerivativeSolution(base, pert, fld, ustar[mesh.gamma_nodes], route, mat)


def frechet(base: ForwardSolution, pert: ShapePerturbation, route: str = "material"):
    if base.bc == "dirichlet":
        return frechet_dirichlet(base, pert, route)
    return frechet_neumann(base, pert, route)


# ---------------------------------------------------------------- norms

def h_half_norm(hats: ApertureHats, coeffs: np.ndarray, medium: ElasticMedium,
                quad: QuadratureConfig | None = None) -> float:
    """Spectral ``H^{1/2}`` norm of the P1 aperture function with hat coefficients ``(n, 2)``."""
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1, 2)
    grid = spectral.build_grid(medium, quad)
    spectrum = hats.transform(grid.nodes) @ coeffs
    body = np.sum(grid.weights * np.sqrt(1 + grid.nodes**2) * np.sum(np.abs(spectrum) ** 2, axis=1))
    S = hats.slopes @ coeffs
    C = hats.x[None, :] - hats.x[:, None]
    R = spectral.tail_kernel(C, grid.xi_max, 1, 0).real / (2 * math.pi)
    tail = float(np.real(np.sum(np.conj(S) * (R @ S))))
    return float(math.sqrt(max(body + tail, 0.0)))


def gamma_l2_norm(hats: ApertureHats, values: np.ndarray) -> float:
    """``L^2`` norm over the aperture of the P1 function with values at every aperture node."""
    x = hats.x
    v = np.asarray(values, dtype=complex).reshape(-1, 2)
    h = np.diff(x)
    a, b = v[:-1], v[1:]
    integrand = (np.abs(a) ** 2 + np.abs(b) ** 2 + np.real(a * np.conj(b))) / 3.0
    return float(math.sqrt(np.sum(h[:, None] * integrand)))


def trace_norm(sol: ForwardSolution, gamma_values: np.ndarray) -> float:
    """Norm used for trace comparisons: ``H^{1/2}`` for Dirichlet, ``L^2`` for Neumann."""
    if sol.bc == "dirichlet":
        pos = sol.hats.hat_pos
        return h_half_norm(sol.hats, np.asarray(gamma_values)[pos], sol.medium)
    return gamma_l2_norm(sol.hats, gamma_values)


def scattered_gamma_trace(sol: ForwardSolution) -> np.ndarray:
    return sol.scattered().values[sol.mesh.gamma_nodes]


# ---------------------------------------------------------------- finite differences

@dataclass
class DerivativeCheck:
    ts: list
    errors: list
    ratios: list
    derivative_norm: float


def derivative_check(base: ForwardSolution, pert: ShapePerturbation,
                     ts: Sequence[float] = (0.02, 0.01, 0.005), route: str = "material",
                     quad: QuadratureConfig | None = None, jobs: int = 1) -> DerivativeCheck:
    """Compare difference quotients of forward solves against the linearization."""
    der = frechet(base, pert, route)
    u0 = scattered_gamma_trace(base)

    def perturbed(t):
        mesh_t = deform_mesh(base.mesh, pert.scaled(t))
        return solve_forward(base.medium, base.cfg, mesh_t, base.bc, quad or base.grid)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        sols = list(pool.map(perturbed, ts))
    errs = [trace_norm(base, (scattered_gamma_trace(s) - u0) / t - der.trace)
            for t, s in zip(ts, sols)]
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return DerivativeCheck(list(ts), errs, ratios, trace_norm(base, der.trace))


# ---------------------------------------------------------------- stability

class NormalPerturbedShape:
    """Continuous boundary ``S(phi) + k p(phi) n(phi)`` of a star shape."""

    def __init__(self, base: CavityShape, p: Callable, k: float):
        self.base, self.p, self.k = base, p, float(k)

    def point(self, phi):
        phi = np.asarray(phi, dtype=float)
        sh = self.base
        r, dr = sh.radius(phi), sh.radius_derivative(phi)
        t = np.stack([dr * np.cos(phi) - r * np.sin(phi),
                      -sh.aspect * (dr * np.sin(phi) + r * np.cos(phi))], axis=-1)
        nrm = np.stack([-t[..., 1], t[..., 0]], axis=-1)
        nrm /= np.linalg.norm(nrm, axis=-1, keepdims=True)
        return sh.point(phi) + self.k * np.asarray(self.p(phi))[..., None] * nrm

    def boundary_polygon(self, n: int) -> np.ndarray:
        return self.point(np.linspace(0.0, math.pi, n))

    @property
    def x_extent(self):
        pts = self.boundary_polygon(2001)
        return float(pts[0, 0] if pts[0, 0] < pts[-1, 0] else pts[-1, 0]), float(max(pts[0, 0], pts[-1, 0]))


@dataclass
class StabilityRow:
    k: float
    dist: float
    trace_diff: float
    ratio: float


def local_stability_experiment(medium: ElasticMedium, cfg: IncidenceConfig, shape: CavityShape,
                               p: Callable, k_values: Sequence[float], target_h: float = 0.1,
                               mesh: Mesh | None = None, n_samples: int = 2000):
    """Rows ``(k, dist, trace_diff, ratio)`` and the list of skipped ``k``.

    ``dist`` is the Hausdorff distance between the perturbed and base
    regions and ``trace_diff`` the ``H^{1/2}`` norm of the aperture trace
    change, both for the Dirichlet problem.
    """
    mesh = mesh or generate_mesh(shape, target_h)
    base = solve_dirichlet(medium, cfg, mesh)
    u0 = base.hat_coefficients()
    rows, skipped = [], []
    for k in k_values:
        if k == 0:
            logger.info("k = 0 gives dist = trace_diff = 0; row omitted")
            skipped.append((k, "zero"))
            continue
        pert = extend_perturbation(mesh, p, k)
        try:
            mk = deform_mesh(mesh, pert)
        except DeformationError as exc:
            logger.warning("k=%g skipped: %s", k, exc)
            skipped.append((k, str(exc)))
            continue
        sol = solve_dirichlet(medium, cfg, mk, base.grid)
        diff = h_half_norm(base.hats, sol.hat_coefficients() - u0, medium)
        dist = hausdorff_distance(NormalPerturbedShape(shape, p, k), shape, n_samples)
        rows.append(StabilityRow(float(k), dist, diff, dist / diff if diff > 0 else math.inf))
    return rows, skipped


def ratio_spread(rows: Sequence[StabilityRow]) -> float:
    r = [row.ratio for row in rows]
    return max(r) / min(r) if r else float("nan")


# ---------------------------------------------------------------- reconstruction

@dataclass
class ReconstructionState:
    params: np.ndarray
    objective: float
    step: float
    log: list = field(default_factory=list)
    status: str = "running"
    iterations: int = 0

    def as_dict(self) -> dict:
        return {"params": [float(v) for v in self.params], "objective": self.objective,
                "step": self.step, "status": self.status, "iterations": self.iterations}


class TraceSampler:
    """Zero-extended aperture traces sampled on a fixed abscissa grid."""

    def __init__(self, half_width: float, n: int = 401):
        self.x = np.linspace(-half_width, half_width, n)
        w = np.full(n, self.x[1] - self.x[0])
        w[0] = w[-1] = 0.5 * w[0]
        self.w = w

    def sample(self, mesh: Mesh, values: np.ndarray) -> np.ndarray:
        g = mesh.gamma_nodes
        xg = mesh.nodes[g, 0]
        v = np.asarray(values)[g] if len(values) == mesh.n_nodes else np.asarray(values)
        out = np.zeros((len(self.x), 2), dtype=complex)
        for c in range(2):
            out[:, c] = (np.interp(self.x, xg, v[:, c].real, left=0.0, right=0.0)
                         + 1j * np.interp(self.x, xg, v[:, c].imag, left=0.0, right=0.0))
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.sum(self.w[:, None] * np.conj(a) * b))

    def norm2(self, a: np.ndarray) -> float:
        return float(np.real(self.inner(a, a)))


class StarProblem:
    """Parametrized Dirichlet forward map over star coefficients.

    ``layout`` names the coefficients, e.g. ``[("a", 1), ("a", 2), ("b", 1)]``.
    Meshes keep the same ring count for every parameter value so that the
    map is smooth in the parameters.
    """

    def __init__(self, medium, cfg, r0: float, layout, target_h: float, sampler: TraceSampler,
                 quad: QuadratureConfig | None = None):
        self.medium, self.cfg, self.r0 = medium, cfg, r0
        self.layout = list(layout)
        self.target_h = target_h
        self.sampler = sampler
        self.grid = spectral.build_grid(medium, quad)
        self._nr = None

    def shape(self, params) -> CavityShape:
        na = max([m for kind, m in self.layout if kind == "a"] + [0])
        nb = max([m for kind, m in self.layout if kind == "b"] + [0])
        a, b = np.zeros(na), np.zeros(nb)
        for (kind, m), v in zip(self.layout, params):
            (a if kind == "a" else b)[m - 1] = v
        return CavityShape.star(self.r0, a, b)

    def basis(self, idx: int) -> Callable:
        kind, m = self.layout[idx]
        return (lambda phi: np.cos(m * phi)) if kind == "a" else (lambda phi: np.sin(m * phi))

    def mesh(self, params) -> Mesh:
        shape = self.shape(params)
        if self._nr is None:
            m = generate_mesh(shape, self.target_h)
            self._nr = (len(m.gamma_nodes) - 1) // 2
            return m
        return generate_mesh(shape, None, rings=self._nr)

    def solve(self, params) -> ForwardSolution:
        return solve_dirichlet(self.medium, self.cfg, self.mesh(params), self.grid)

    def trace(self, sol: ForwardSolution) -> np.ndarray:
        return self.sampler.sample(sol.mesh, sol.field.values)

    def normal_speed(self, mesh: Mesh, params, idx: int) -> np.ndarray:
        """``p_m`` at the ``S`` nodes: radial coefficient velocity projected on the normal."""
        phi = s_node_angles(mesh)
        radial = np.stack([np.cos(phi), -np.sin(phi)], axis=1)
        return self.basis(idx)(phi) * np.einsum("na,na->n", radial, mesh.s_node_normals)

    def parameter_velocity(self, mesh: Mesh, idx: int) -> np.ndarray:
        """Nodal derivative of the mesh map with respect to coefficient ``idx``.

        Aperture nodes slide along ``x2 = 0``, so this also carries the motion
        of the two junctions that a normal perturbation leaves out.
        """
        X = mesh.ref_nodes
        rho = np.hypot(X[:, 0], X[:, 1])
        phi = reference_angle(X)
        aspect = mesh.shape.aspect
        V = np.stack([rho * np.cos(phi), -aspect * rho * np.sin(phi)], axis=1)
        V *= self.basis(idx)(phi)[:, None]
        V[X[:, 1] == 0.0, 1] = 0.0
        return V

    def _column_parametric(self, sol: ForwardSolution, params, idx: int, eps: float) -> np.ndarray:
        mesh, med, sysm = sol.mesh, self.medium, sol.system
        u = sol.field.values
        e = np.zeros(len(params))
        e[idx] = eps
        mp, mm = self.mesh(params + e), self.mesh(params - e)
        hats = sysm.hats
        # the aperture block and load depend only on aperture node positions
        dT = (assemble_dtn_block(mp, med, self.grid) - assemble_dtn_block(mm, med, self.grid)) / (2 * eps)
        dF = (assemble_dirichlet_rhs(mp, med, self.cfg)
              - assemble_dirichlet_rhs(mm, med, self.cfg)) / (2 * eps)
        rhs = shape_form_rhs(mesh, med, u, self.parameter_velocity(mesh, idx)) + dF
        rhs[hat_dofs(hats)] += dT @ u[hats.hat_nodes].ravel()
        du = np.zeros(2 * mesh.n_nodes, dtype=complex)
        du[sysm.free] = sysm.solve_vector(rhs[sysm.free])
        moved = (self.sampler.sample(mp, u) - self.sampler.sample(mm, u)) / (2 * eps)
        return self.sampler.sample(mesh, du.reshape(-1, 2)) + moved

    def _column_normal(self, sol: ForwardSolution, params, idx: int) -> np.ndarray:
        pert = extend_perturbation(sol.mesh, self.normal_speed(sol.mesh, params, idx), 1.0)
        der = frechet_dirichlet(sol, pert)
        return self.sampler.sample(sol.mesh, der.field.values)

    def objective_and_gradient(self, params, data: np.ndarray, sol: ForwardSolution | None = None,
                               with_jacobian: bool = False, direction: str = "parametric",
                               eps: float = 1e-6):
        """Objective, gradient and (optionally) the sampled derivative columns.

        ``direction="parametric"`` differentiates along the full coefficient
        velocity; ``"normal"`` uses the shape derivative for the normal part
        of the coefficient perturbation only.
        """
        params = np.asarray(params, dtype=float)
        sol = sol or self.solve(params)
        res = self.trace(sol) - data
        J = 0.5 * self.sampler.norm2(res)
        cols = []
        for i in range(len(self.layout)):
            if direction == "parametric":
                cols.append(self._column_parametric(sol, params, i, eps))
            elif direction == "normal":
                cols.append(self._column_normal(sol, params, i))
            else:
                raise ConfigurationError(f"unknown gradient direction {direction!r}")
        grads = np.array([float(np.real(self.sampler.inner(res, c))) for c in cols])
        out = (J, grads, sol)
        if with_jacobian:
            out = out + (cols, res)
        return out


def reconstruct(medium: ElasticMedium, cfg: IncidenceConfig, data: np.ndarray,
                init_shape: CavityShape, max_iter: int = 50, *, layout=(("a", 1), ("a", 2), ("b", 1)),
                target_h: float = 0.04, sampler: TraceSampler | None = None, method: str = "steepest",
                gtol: float = 1e-8, ftol: float = 1e-14, quad: QuadratureConfig | None = None,
                callback: Callable | None = None) -> ReconstructionState:
    """Fit star coefficients to an aperture trace by a line-searched descent.

    ``data`` are trace samples on ``sampler.x``.  ``method="steepest"`` uses
    the gradient with Barzilai-Borwein initial steps; ``"gauss-newton"``
    uses the same derivative columns to form the normal equations.  Every
    step is accepted only under the Armijo condition.
    """
    sampler = sampler or TraceSampler(1.5 * init_shape.r0)
    prob = StarProblem(medium, cfg, init_shape.r0, layout, target_h, sampler, quad)
    x0 = []
    for kind, m in layout:
        coeffs = init_shape.a if kind == "a" else init_shape.b
        x0.append(coeffs[m - 1] if m <= len(coeffs) else 0.0)
    x = np.array(x0, dtype=float)
    data_norm = math.sqrt(max(sampler.norm2(data), 1e-300))
    J, g, sol, cols, res = prob.objective_and_gradient(x, data, with_jacobian=True)
    state = ReconstructionState(x.copy(), J, 1.0)
    state.log.append({"iter": 0, "objective": J, "grad_norm": float(np.linalg.norm(g)),
                      "params": x.tolist(), "step": 0.0})
    if np.linalg.norm(g) < gtol * data_norm or J <= ftol * data_norm**2:
        state.status = "converged"
        return state
    if max_iter <= 0:
        state.status = "stagnated"
        return state
    prev = None
    step = 1.0
    for it in range(1, max_iter + 1):
        if method == "gauss-newton":
            Jr = np.stack([np.concatenate([(np.sqrt(sampler.w)[:, None] * c).real.ravel(),
                                           (np.sqrt(sampler.w)[:, None] * c).imag.ravel()])
                           for c in cols], axis=1)
            direction = -np.linalg.lstsq(Jr.T @ Jr, g, rcond=None)[0]
            step = 1.0
        elif method == "steepest":
            direction = -g
            if prev is not None:
                s_vec, y_vec = x - prev[0], g - prev[1]
                sy = float(s_vec @ y_vec)
                step = float(s_vec @ s_vec) / sy if sy > 0 else step * 2
            else:
                step = 0.01 / max(np.linalg.norm(g), 1e-300)
        else:
            raise ConfigurationError(f"unknown method {method!r}")
        slope = float(g @ direction)
        if slope >= 0:
            direction, slope = -g, -float(g @ g)
        accepted = False
        for _ in range(20):
            trial = x + step * direction
            try:
                tsol = prob.solve(trial)
            except GeometryError:
                step *= 0.5
                continue
            Jt = 0.5 * sampler.norm2(prob.trace(tsol) - data)
            if Jt <= J + 1e-4 * step * slope and Jt < J:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            state.status = "stagnated"
            logger.warning("line search failed at iteration %d", it)
            break
        prev = (x.copy(), g.copy())
        x = trial
        J, g, sol, cols, res = prob.objective_and_gradient(x, data, tsol, with_jacobian=True)
        state.params, state.objective, state.step, state.iterations = x.copy(), J, step, it
        state.log.append({"iter": it, "objective": J, "grad_norm": float(np.linalg.norm(g)),
                          "params": x.tolist(), "step": step})
        if callback:
            callback(state)
        if np.linalg.norm(g) < gtol * data_norm or J <= ftol * data_norm**2:
            state.status = "converged"
            break
    else:
        state.status = "max_iter"
    return state


def synthetic_data(medium, cfg, shape: CavityShape, target_h: float, sampler: TraceSampler,
                   quad: QuadratureConfig | None = None) -> np.ndarray:
    """Aperture trace samples of the Dirichlet solution for ``shape``."""
    sol = solve_dirichlet(medium, cfg, generate_mesh(shape, target_h), quad)
    return sampler.sample(sol.mesh, sol.field.values)


# ---------------------------------------------------------------- output

def write_stability_csv(path, rows: Sequence[StabilityRow]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "dist", "trace_diff", "ratio"])
        for r in rows:
            wr.writerow([repr(r.k), repr(r.dist), repr(r.trace_diff), repr(r.ratio)])


def write_iterate_log(path, state: ReconstructionState, names: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iter", "objective", "grad_norm", *names])
        for row in state.log:
            wr.writerow([row["iter"], repr(row["objective"]), repr(row["grad_norm"]),
                         *[repr(v) for v in row["params"]]])


def write_shape_json(path, shape: CavityShape, state: ReconstructionState) -> None:
    with open(path, "w") as fh:
        json.dump({"shape": shape.as_dict(), "state": state.as_dict()}, fh, indent=2)
