from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastocavity.errors import DeformationError, GeometryError
from elastocavity.geometry import (CavityShape, deform_mesh, extend_perturbation, generate_mesh,
                                   grade_junctions, hausdorff_distance, jacobian_determinants,
                                   prolongate, read_mesh, refine, w1inf_boundary, w1inf_mesh,
                                   write_mesh)


def test_semicircle_mesh_containment(semicircle):
    mesh = generate_mesh(semicircle, 0.1)
    x = mesh.nodes
    assert np.all(x[:, 0] ** 2 + x[:, 1] ** 2 <= 1 + 1e-9)
    assert np.all(x[:, 1] <= 1e-9)
    assert mesh.h_max <= 0.15
    mesh.validate(curve_tol=mesh.h_max**2)


def test_refinement_quadruples_triangles(coarse_mesh):
    fine = refine(coarse_mesh)
    assert len(fine.triangles) == 4 * len(coarse_mesh.triangles)
    assert fine.refinement_level == coarse_mesh.refinement_level + 1
    fine.validate(curve_tol=fine.h_max**2)
    # new S nodes are snapped onto the curve
    s = fine.s_nodes
    np.testing.assert_allclose(np.hypot(*fine.nodes[s].T), 1.0, atol=1e-13)


@pytest.mark.parametrize("h", [0.0, -0.1, float("nan"), None])
def test_degenerate_target_h(semicircle, h):
    with pytest.raises(GeometryError):
        generate_mesh(semicircle, h)


def test_gamma_extent_too_small(semicircle):
    with pytest.raises(GeometryError):
        generate_mesh(semicircle, 0.3, gamma_extent=0.5)


def test_star_mesh_invariants():
    shape = CavityShape.star(1.0, a=[0.1, -0.05], b=[0.08])
    mesh = generate_mesh(shape, 0.15)
    mesh.validate(curve_tol=mesh.h_max**2)
    g = mesh.gamma_nodes
    np.testing.assert_array_equal(mesh.nodes[g, 1], 0.0)
    lo, hi = shape.x_extent
    assert mesh.nodes[g, 0].min() == pytest.approx(lo)
    assert mesh.nodes[g, 0].max() == pytest.approx(hi)


def test_shape_rejects_small_radius():
    with pytest.raises(GeometryError):
        CavityShape.star(1.0, a=[1.2])


def test_shape_endpoints_on_aperture():
    shape = CavityShape.star(0.9, a=[0.1], b=[0.2, 0.05])
    ends = shape.point(np.array([0.0, math.pi]))
    np.testing.assert_allclose(ends[:, 1], 0.0, atol=1e-15)


def test_zero_perturbation_is_identity(coarse_mesh):
    pert = extend_perturbation(coarse_mesh, lambda phi: np.zeros_like(phi), 0.3)
    assert pert.is_zero
    moved = deform_mesh(coarse_mesh, pert)
    np.testing.assert_array_equal(moved.nodes, coarse_mesh.nodes)
    np.testing.assert_array_equal(moved.triangles, coarse_mesh.triangles)
    assert moved.edge_tags == coarse_mesh.edge_tags


def test_deepest_node_moves_outward(medium_mesh):
    pert = extend_perturbation(medium_mesh, np.sin, 0.05)
    moved = deform_mesh(medium_mesh, pert)
    s = medium_mesh.s_nodes
    i = s[np.argmin(medium_mesh.nodes[s, 1])]
    assert medium_mesh.nodes[i] == pytest.approx([0.0, -1.0], abs=1e-12)
    np.testing.assert_allclose(moved.nodes[i], [0.0, -1.05], atol=1e-3)
    g = medium_mesh.gamma_nodes
    np.testing.assert_array_equal(moved.nodes[g], medium_mesh.nodes[g])


def test_jacobian_expansion(medium_mesh):
    pert = extend_perturbation(medium_mesh, lambda phi: np.sin(2 * phi), 0.03)
    det, div = jacobian_determinants(medium_mesh, pert.h_tilde)
    bound = 2 * w1inf_mesh(medium_mesh, pert.h_tilde) ** 2
    assert np.max(np.abs(det - 1 - div)) <= bound


def test_inverting_deformation_is_rejected(coarse_mesh):
    pert = extend_perturbation(coarse_mesh, np.sin, -3.0)
    with pytest.raises(DeformationError):
        deform_mesh(coarse_mesh, pert)


def test_forward_backward_deformation_second_order(medium_mesh):
    errs = []
    for k in (0.02, 0.01):
        pert = extend_perturbation(medium_mesh, np.sin, k)
        moved = deform_mesh(medium_mesh, pert)
        back = extend_perturbation(moved, lambda phi: np.zeros_like(phi), 0.0)
        # the reverse map uses -h in the moved coordinates
        back = back.__class__(back.p, 1.0, -pert.h_boundary, -pert.h_tilde, 0.0)
        home = deform_mesh(moved, back)
        errs.append(np.abs(home.nodes - medium_mesh.nodes).max())
    assert errs[0] < 1e-12 and errs[1] < 1e-12


def test_extension_zero_data(coarse_mesh):
    pert = extend_perturbation(coarse_mesh, np.zeros(len(coarse_mesh.s_nodes)), 1.0)
    assert not np.any(pert.h_tilde)


def test_extension_maximum_principle(medium_mesh):
    pert = extend_perturbation(medium_mesh, np.sin, 0.02)
    bmax = np.abs(pert.h_boundary).max(axis=0)
    assert np.all(np.abs(pert.h_tilde).max(axis=0) <= bmax + 1e-14)
    np.testing.assert_array_equal(pert.h_tilde[medium_mesh.gamma_nodes], 0.0)


def test_extension_forces_zero_at_junctions(coarse_mesh):
    pert = extend_perturbation(coarse_mesh, np.ones(len(coarse_mesh.s_nodes)), 0.1)
    j = np.isin(coarse_mesh.s_nodes, coarse_mesh.junction_nodes)
    assert j.sum() == 2
    np.testing.assert_array_equal(pert.p[j], 0.0)


def test_extension_ratio_stable_under_refinement(coarse_mesh):
    fine = refine(coarse_mesh)
    r0 = extend_perturbation(coarse_mesh, np.sin, 0.02).extension_ratio
    r1 = extend_perturbation(fine, np.sin, 0.02).extension_ratio
    assert np.isfinite(r0) and np.isfinite(r1)
    assert abs(r1 - r0) / r0 < 0.2
    h = extend_perturbation(fine, np.sin, 0.02).h_tilde
    assert w1inf_mesh(fine, h) / w1inf_boundary(fine, h) == pytest.approx(r1)


def test_extension_needs_full_samples(coarse_mesh):
    with pytest.raises(GeometryError):
        extend_perturbation(coarse_mesh, np.ones(3), 0.1)


def test_hausdorff_identical(semicircle):
    assert hausdorff_distance(semicircle, semicircle) == 0.0


def test_hausdorff_concentric(semicircle):
    big = CavityShape.semicircle(1.1)
    assert hausdorff_distance(semicircle, big, 2000) == pytest.approx(0.1, abs=1e-3)


def test_hausdorff_star_perturbation(semicircle):
    star = CavityShape.star(1.0, a=[0.05])
    phi = np.linspace(0, math.pi, 100001)
    ref = np.max(np.abs(star.radius(phi) - 1.0))
    assert hausdorff_distance(semicircle, star) == pytest.approx(ref, rel=0.1)


def test_hausdorff_rejects_few_samples(semicircle):
    with pytest.raises(ValueError):
        hausdorff_distance(semicircle, semicircle, 50)


coef = st.floats(min_value=-0.1, max_value=0.1)


@settings(max_examples=15, deadline=None)
@given(st.lists(coef, min_size=2, max_size=2), st.lists(coef, min_size=2, max_size=2),
       st.lists(coef, min_size=2, max_size=2))
def test_hausdorff_metric_properties(a1, a2, a3):
    A = CavityShape.star(1.0, a=a1)
    B = CavityShape.star(1.0, a=a2)
    C = CavityShape.star(1.0, b=a3)
    dab = hausdorff_distance(A, B, 400)
    assert dab == pytest.approx(hausdorff_distance(B, A, 400), abs=1e-15)
    assert dab <= hausdorff_distance(A, C, 400) + hausdorff_distance(C, B, 400) + 2e-3


def test_mesh_file_roundtrip(tmp_path, coarse_mesh):
    path = tmp_path / "m.txt"
    write_mesh(path, coarse_mesh)
    back = read_mesh(path)
    np.testing.assert_array_equal(back.nodes, coarse_mesh.nodes)
    np.testing.assert_array_equal(back.triangles, coarse_mesh.triangles)
    np.testing.assert_array_equal(back.boundary_edges, coarse_mesh.boundary_edges)
    assert back.edge_tags == coarse_mesh.edge_tags
    head = path.read_text().splitlines()[0]
    assert head == (f"nodes {coarse_mesh.n_nodes} triangles {len(coarse_mesh.triangles)} "
                    f"bedges {len(coarse_mesh.boundary_edges)}")


def test_mesh_file_bad_tag(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("nodes 3 triangles 1 bedges 3\n0 0\n1 0\n0 -1\n0 2 1\n0 1 G\n1 2 X\n2 0 S\n")
    with pytest.raises(GeometryError):
        read_mesh(path)


def test_mesh_file_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("vertices 3\n")
    with pytest.raises(GeometryError):
        read_mesh(path)


@pytest.mark.parametrize("beta", [1.5, 2.5, 3.0])
def test_junction_grading_keeps_mesh_valid(semicircle, beta):
    mesh = generate_mesh(semicircle, None, junction_grading=beta, rings=5)
    mesh.validate(curve_tol=1e-12)
    fine = refine(mesh)
    fine.validate(curve_tol=fine.h_max**2)
    # nodes cluster at the junction
    j = mesh.junction_nodes
    d = np.linalg.norm(mesh.nodes[:, None, :] - mesh.nodes[j][None, :, :], axis=2).min(axis=1)
    flat = generate_mesh(semicircle, None, rings=5)
    df = np.linalg.norm(flat.nodes[:, None, :] - flat.nodes[j][None, :, :], axis=2).min(axis=1)
    assert np.sort(d)[2] < np.sort(df)[2]


def test_grading_rejects_small_exponent():
    with pytest.raises(GeometryError):
        grade_junctions(np.zeros((1, 2)), np.array([0]), 0.5)


def test_rings_must_be_positive(semicircle):
    with pytest.raises(GeometryError):
        generate_mesh(semicircle, None, rings=0)


def test_prolongation_reproduces_linear_functions(coarse_mesh):
    fine = refine(coarse_mesh)
    f = lambda x: 2.0 * x[:, 0] - 0.5 * x[:, 1] + 1.0
    got = prolongate(coarse_mesh, fine, f(coarse_mesh.nodes))
    interior = np.setdiff1d(np.arange(fine.n_nodes), fine.s_nodes)
    np.testing.assert_allclose(got[interior], f(fine.nodes)[interior], atol=1e-12)


def test_mirror_symmetry(medium_mesh):
    perm = medium_mesh.reflect_permutation()
    np.testing.assert_allclose(medium_mesh.nodes[perm], medium_mesh.nodes * [-1, 1], atol=1e-12)
    star = generate_mesh(CavityShape.star(1.0, a=[0.2]), 0.3)
    with pytest.raises(GeometryError):
        star.reflect_permutation()
