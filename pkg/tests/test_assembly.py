from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from elastocavity import spectral
from elastocavity.assembly import (ApertureHats, FemSystem, assemble_dirichlet_rhs,
                                   assemble_dirichlet_system, assemble_dtn_block, assemble_energy,
                                   assemble_neumann_system, assemble_ntd_block, get_grid,
                                   hat_transform, solve, write_coo)
from elastocavity.errors import ConfigurationError, SolverError
from elastocavity.geometry import generate_mesh
from elastocavity.medium import make_incidence, make_medium
from elastocavity.spectral import QuadratureConfig
from oracles import hat_transform_quad

# fitted once for the unit medium on the 0.3 semicircle mesh with C1 = mu / 2:
# the largest generalized eigenvalue of (C1 K0 - Re A, M) is 0.12704
GARDING_C2 = 0.13


def _uniform_hats(n=81, half=1.0):
    x = np.linspace(-half, half, n)
    return ApertureHats(x, np.arange(n), np.arange(1, n - 1))


def _field(mesh, f):
    return np.asarray(f(mesh.nodes), dtype=complex).ravel()


def test_constant_field_energy(coarse_mesh, unit_medium):
    K, M = assemble_energy(coarse_mesh, unit_medium)
    c = np.tile([1.0 - 2j, 0.5], coarse_mesh.n_nodes)
    assert np.abs(K @ c).max() < 1e-12
    assert np.vdot(c, M @ c).real == pytest.approx((abs(1 - 2j) ** 2 + 0.25) * coarse_mesh.area)


def test_rotation_energy(coarse_mesh):
    med = make_medium(2.0, 0.7, 1.0)
    K, _ = assemble_energy(coarse_mesh, med)
    u = _field(coarse_mesh, lambda x: np.stack([-x[:, 1], x[:, 0]], 1))
    assert np.vdot(u, K @ u).real == pytest.approx(2 * med.mu * coarse_mesh.area, rel=1e-12)


def test_dilation_energy(coarse_mesh):
    med = make_medium(2.0, 0.7, 1.0)
    K, _ = assemble_energy(coarse_mesh, med)
    u = _field(coarse_mesh, lambda x: x)
    expected = (2 * med.mu + 4 * (med.lam + med.mu)) * coarse_mesh.area
    assert np.vdot(u, K @ u).real == pytest.approx(expected, rel=1e-12)


def test_matrices_hermitian(coarse_mesh, unit_medium):
    K, M = assemble_energy(coarse_mesh, unit_medium)
    assert abs(K - K.conj().T).max() < 1e-14
    assert abs(M - M.conj().T).max() < 1e-14


def test_stiffness_kernel_is_translations(coarse_mesh, unit_medium):
    K, _ = assemble_energy(coarse_mesh, unit_medium)
    ev = np.linalg.eigvalsh(K.toarray())
    assert np.sum(ev < 1e-12 * np.abs(ev).max()) == 2
    assert ev.min() > -1e-12 * ev.max()


def test_symmetric_hat_closed_form(coarse_mesh):
    hats = ApertureHats.from_mesh(coarse_mesh)
    j = hats.hat_nodes[len(hats.hat_nodes) // 2]
    xj = coarse_mesh.nodes[j, 0]
    left = hats.x[hats.hat_pos[len(hats.hat_nodes) // 2] - 1]
    a = xj - left
    for xi in (0.0, 1e-5, 0.7, 3.0, -12.0):
        z = a * xi / 2
        sinc = 1.0 if z == 0 else math.sin(z) / z
        ref = a / math.sqrt(2 * math.pi) * np.exp(-1j * xi * xj) * sinc**2
        assert abs(hat_transform(coarse_mesh, j, xi) - ref) < 1e-14
    assert hat_transform(coarse_mesh, j, 0.0) == pytest.approx(a / math.sqrt(2 * math.pi), abs=1e-15)


def test_asymmetric_hat_against_quadrature(semicircle):
    mesh = generate_mesh(semicircle, None, junction_grading=2.5, rings=5)
    hats = ApertureHats.from_mesh(mesh)
    skew = 0.0
    for c in (0, hats.n - 1, hats.n // 3):
        j = hats.hat_pos[c]
        xl, xc, xr = hats.x[j - 1], hats.x[j], hats.x[j + 1]
        skew = max(skew, abs((xc - xl) - (xr - xc)) / (xr - xl))
        for xi in (0.0, 0.004, 1.3, 17.0, -40.0):
            got = hat_transform(mesh, hats.hat_nodes[c], xi)
            assert abs(got - hat_transform_quad(xl, xc, xr, xi)) < 1e-12
    assert skew > 0.1


def test_hat_transform_rejects_non_aperture_node(coarse_mesh):
    with pytest.raises(ConfigurationError):
        hat_transform(coarse_mesh, int(coarse_mesh.s_nodes[3]), 0.5)


def test_dtn_zero_trace(unit_medium):
    hats = _uniform_hats(21)
    T = assemble_dtn_block(None, unit_medium, None, hats)
    assert not np.any(T @ np.zeros(T.shape[1]))


def test_dtn_evanescent_profile_negative_real_part(unit_medium):
    hats = _uniform_hats(161)
    quad = QuadratureConfig(xi_factor=80.0)
    T = assemble_dtn_block(None, unit_medium, quad, hats)
    x = hats.x[hats.hat_pos]
    w = np.exp(-x**2 / 0.08)
    c = np.stack([w * np.cos(40 * x), w * np.sin(40 * x)], 1).ravel()
    assert -np.vdot(c, T @ c).real > 0
    herm = 0.5 * (T + T.conj().T)
    assert np.all(np.isfinite(np.linalg.eigvalsh(herm)))


def test_ntd_evanescent_profile_real_pairing(unit_medium):
    hats = _uniform_hats(161)
    N = assemble_ntd_block(None, unit_medium, QuadratureConfig(xi_factor=80.0), hats)
    x = hats.x[hats.hat_pos]
    w = np.exp(-x**2 / 0.08)
    c = np.stack([w * np.cos(40 * x), w * np.sin(40 * x)], 1).ravel()
    q = np.vdot(c, N @ c)
    assert abs(q.imag) <= 1e-6 * abs(q)
    assert not np.any(N @ np.zeros_like(c))


def test_ntd_then_dtn_returns_pairing(unit_medium):
    # push M M^-1 = I through the quadrature and compare with the exact L2 pairing
    hats = _uniform_hats(81)
    grid = get_grid(unit_medium, None)
    s = spectral.symbols(unit_medium, grid.nodes)
    x = hats.x[hats.hat_pos]
    c = np.stack([(1 - x**2) ** 3, 0.5 * (1 - x**2) ** 3 * x], 1)
    U = hats.transform(grid.nodes) @ c
    V = np.einsum("qab,qb->qa", s["Minv"], U)            # NtD
    W = np.einsum("qab,qb->qa", s["M"], V)               # then DtN
    got = np.sum(grid.weights * np.einsum("qa,qa->q", U.conj(), W))
    exact = np.sum(c * (hats.mass[hats.hat_pos] @ c))
    assert abs(got - exact) < 1e-2 * abs(exact)


def test_flux_identity_for_propagating_trace(unit_medium):
    hats = _uniform_hats(101)
    T = assemble_dtn_block(None, unit_medium, None, hats)
    x = hats.x[hats.hat_pos]
    w = np.exp(-x**2 / 0.5) * (1 - x**2)
    c = np.stack([w * np.exp(0.3j * x), 0.4 * w], 1)
    im_pair = np.vdot(c.ravel(), T @ c.ravel()).imag
    spectrum = hats.trace_spectrum(c)

    def amps(v):
        xi = np.array([v])
        return spectral.potentials_array(unit_medium, xi, spectrum(xi))

    flux = spectral.radiated_flux(unit_medium, lambda v: amps(v)[0][0], lambda v: amps(v)[1][0])
    assert im_pair == pytest.approx(flux, rel=1e-2)
    assert flux > 0


def test_dirichlet_rhs_zero_incidence(coarse_mesh, unit_medium):
    cfg = make_incidence(unit_medium, 0.3, c_p=0.0)
    assert not np.any(assemble_dirichlet_rhs(coarse_mesh, unit_medium, cfg))


def test_dirichlet_rhs_normal_incidence_symmetry(medium_mesh, unit_medium):
    cfg = make_incidence(unit_medium, 0.0)
    F = assemble_dirichlet_rhs(medium_mesh, unit_medium, cfg).reshape(-1, 2)
    assert np.abs(F[:, 0]).max() < 1e-14 * np.abs(F).max()
    perm = medium_mesh.reflect_permutation()
    np.testing.assert_allclose(F[perm, 1], F[:, 1], atol=1e-14)
    assert np.abs(F[:, 1]).max() > 0


def test_dirichlet_rhs_supported_on_aperture(coarse_mesh, unit_medium, oblique):
    F = assemble_dirichlet_rhs(coarse_mesh, unit_medium, oblique).reshape(-1, 2)
    off = np.setdiff1d(np.arange(coarse_mesh.n_nodes), coarse_mesh.gamma_interior)
    assert not np.any(F[off])


def test_neumann_zero_incidence(coarse_mesh, unit_medium):
    cfg = make_incidence(unit_medium, 0.2, c_p=0.0)
    system = assemble_neumann_system(coarse_mesh, unit_medium, cfg)
    assert not np.any(system.rhs)
    out = solve(system)
    assert not np.any(out.values) and not np.any(out.trace)


def test_neumann_constraint_rows(medium_mesh, unit_medium, oblique):
    system = assemble_neumann_system(medium_mesh, unit_medium, oblique)
    out = solve(system)
    n = 2 * medium_mesh.n_nodes
    x = out.raw
    G = system.extras["G"]
    lhs = G.T @ x[:n]
    rhs = system.tbc @ x[n:] + system.rhs[n:]
    assert np.linalg.norm(lhs - rhs) < 1e-10 * np.linalg.norm(rhs)
    assert out.residual < 1e-10


def test_neumann_formulations_agree(medium_mesh, unit_medium, oblique):
    a = solve(assemble_neumann_system(medium_mesh, unit_medium, oblique, formulation="total"))
    b = solve(assemble_neumann_system(medium_mesh, unit_medium, oblique, formulation="scattered"))
    err = np.linalg.norm(a.values - b.values) / np.linalg.norm(a.values)
    assert err < 0.1


def test_unknown_formulation(coarse_mesh, unit_medium, oblique):
    with pytest.raises(ConfigurationError):
        assemble_neumann_system(coarse_mesh, unit_medium, oblique, formulation="mixed")


def test_identity_system():
    rhs = np.array([1.0 + 1j, -2.0, 0.5j])
    out = solve(FemSystem(sp.identity(3, format="csc"), rhs))
    np.testing.assert_array_equal(out.values.ravel(), rhs)


def test_hpd_system_against_cg(rng):
    n = 60
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = B @ B.conj().T + n * np.eye(n)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    out = solve(FemSystem(sp.csc_matrix(A), b)).values.ravel()
    ref, info = spla.cg(A, b, rtol=1e-14, atol=0.0, maxiter=2000)
    assert info == 0
    assert np.linalg.norm(out - ref) < 1e-10 * np.linalg.norm(ref)


def test_singular_system_reports_solver_error():
    A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex))
    with pytest.raises(SolverError):
        solve(FemSystem(A, np.array([1.0, 0.0])))


def test_dirichlet_solve_residual(dirichlet_solution):
    assert dirichlet_solution.field.residual < 1e-10
    s = dirichlet_solution.mesh.s_nodes
    assert not np.any(dirichlet_solution.field.values[s])


def test_garding_inequality(coarse_mesh, unit_medium, rng):
    cfg = make_incidence(unit_medium, 0.5)
    A = assemble_dirichlet_system(coarse_mesh, unit_medium, cfg).extras["full_matrix"]
    K0, _, M = assemble_energy(coarse_mesh, unit_medium, parts=True)
    C1 = unit_medium.mu / 2
    for _ in range(100):
        u = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
        lhs = np.vdot(u, A @ u).real + GARDING_C2 * np.vdot(u, M @ u).real
        assert lhs >= C1 * np.vdot(u, K0 @ u).real


def test_coo_dump(tmp_path):
    A = sp.csr_matrix(np.array([[1.0 + 2j, 0.0], [0.0, -3.0]]))
    path = tmp_path / "a.coo"
    write_coo(path, A)
    lines = path.read_text().split("\n")
    rows = [ln.split() for ln in lines if ln]
    assert [int(rows[0][0]), int(rows[0][1])] == [0, 0]
    assert float(rows[0][2]) == 1.0 and float(rows[0][3]) == 2.0
    assert len(rows) == 2
