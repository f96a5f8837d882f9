"""Cavity shapes, structured meshes, shape perturbations and set distances.

The cavity ``D`` lies below the ground line.  Its lower boundary ``S`` is the
star-shaped curve ``r(phi) (cos phi, -aspect * sin phi)`` for ``phi`` in
``[0, pi]`` and its upper boundary ``Gamma`` is the aperture on ``x2 = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DeformationError, GeometryError

logger = logging.getLogger(__name__)

TAG_S, TAG_GAMMA, TAG_GAMMA_C = "S", "Gamma", "GammaC"
_FILE_TAGS = {TAG_S: "S", TAG_GAMMA: "G", TAG_GAMMA_C: "GC"}
_FILE_TAGS_INV = {v: k for k, v in _FILE_TAGS.items()}


@dataclass(frozen=True)
class CavityShape:
    """Star-shaped cavity boundary with a truncated Fourier radius.

    ``aspect`` scales the vertical axis, which lets a shallow cavity be
    described without huge Fourier coefficients.
    """

    kind: str = "semicircle"
    r0: float = 1.0
    a: tuple = ()
    b: tuple = ()
    aspect: float = 1.0
    r_min: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("semicircle", "star"):
            raise GeometryError(f"unknown shape kind {self.kind!r}")
        if self.kind == "semicircle" and (any(self.a) or any(self.b)):
            raise GeometryError("a semicircle has no Fourier coefficients")
        if not (self.r0 > 0 and self.aspect > 0):
            raise GeometryError("r0 and aspect must be positive")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        phi = np.linspace(0.0, math.pi, 720)
        r = self.radius(phi)
        if np.min(r) < self.r_min:
            raise GeometryError(f"radius drops to {np.min(r):.3g} below r_min={self.r_min}")
        # a positive radius over a monotone angle is already a simple curve

    @classmethod
    def semicircle(cls, r0: float = 1.0, aspect: float = 1.0) -> "CavityShape":
        return cls("semicircle", r0, aspect=aspect)

    @classmethod
    def star(cls, r0: float, a: Sequence[float] = (), b: Sequence[float] = (),
             aspect: float = 1.0) -> "CavityShape":
        return cls("star", r0, tuple(a), tuple(b), aspect)

    @property
    def params(self) -> np.ndarray:
        return np.array(list(self.a) + list(self.b))

    def with_coefficients(self, a, b) -> "CavityShape":
        return CavityShape("star", self.r0, tuple(a), tuple(b), self.aspect, self.r_min)

    def radius(self, phi):
        phi = np.asarray(phi, dtype=float)
        r = np.full_like(phi, self.r0)
        for m, am in enumerate(self.a, start=1):
            r = r + am * np.cos(m * phi)
        for m, bm in enumerate(self.b, start=1):
            r = r + bm * np.sin(m * phi)
        return r

    def radius_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        dr = np.zeros_like(phi)
        for m, am in enumerate(self.a, start=1):
            dr = dr - m * am * np.sin(m * phi)
        for m, bm in enumerate(self.b, start=1):
            dr = dr + m * bm * np.cos(m * phi)
        return dr

    def point(self, phi):
        phi = np.asarray(phi, dtype=float)
        r = self.radius(phi)
        return np.stack([r * np.cos(phi), -self.aspect * r * np.sin(phi)], axis=-1)

    def map_reference(self, X: np.ndarray) -> np.ndarray:
        """Map reference half-disk points onto the cavity."""
        X = np.asarray(X, dtype=float)
        rho = np.hypot(X[:, 0], X[:, 1])
        phi = reference_angle(X)
        r = self.radius(phi)
        return np.stack([rho * r * np.cos(phi), -self.aspect * rho * r * np.sin(phi)], axis=1)

    def boundary_polygon(self, n: int) -> np.ndarray:
        """Closed polygon: ``n`` points along ``S`` from ``phi = 0`` to ``pi``, closed by ``Gamma``."""
        return self.point(np.linspace(0.0, math.pi, n))

    @property
    def x_extent(self) -> tuple[float, float]:
        return -float(self.radius(math.pi)), float(self.radius(0.0))

    def as_dict(self) -> dict:
        return {"kind": self.kind, "r0": self.r0, "a": list(self.a), "b": list(self.b),
                "aspect": self.aspect}


def reference_angle(X: np.ndarray) -> np.ndarray:
    """Polar angle in ``[0, pi]`` of lower-half-plane points (``phi = 0`` on the +x1 axis)."""
    return np.arctan2(np.maximum(-X[:, 1], 0.0) + 0.0, X[:, 0])


def _signed_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming P1 triangulation with tagged boundary edges.

    ``ref_nodes`` (reference half-disk coordinates) and ``shape`` are kept for
    meshes built here so that refinement can snap new boundary nodes onto
    the curve.  ``parents`` lists, for each node added by the last refinement,
    the two coarse nodes of the edge it bisects.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: tuple
    refinement_level: int = 0
    shape: CavityShape | None = None
    ref_nodes: np.ndarray | None = None
    parents: np.ndarray | None = None
    parent_mesh: "Mesh | None" = field(default=None, repr=False)

    def __post_init__(self):
        areas = _signed_areas(self.nodes, self.triangles)
        if np.any(areas <= 0):
            raise GeometryError(f"{int(np.sum(areas <= 0))} triangles have nonpositive area")

    # ------------------------------------------------------------ basic data
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.nodes, self.triangles)

    @cached_property
    def grad_basis(self) -> np.ndarray:
        """Gradients of the three barycentric functions, shape ``(T, 3, 2)``."""
        p = self.nodes[self.triangles]
        a2 = 2.0 * self.areas
        g = np.empty((len(self.triangles), 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / a2
            g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / a2
        return g

    @property
    def area(self) -> float:
        return float(np.sum(self.areas))

    def edges_with_tag(self, tag: str) -> np.ndarray:
        mask = np.array([t == tag for t in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask] if len(mask) else np.zeros((0, 2), int)

    def nodes_with_tag(self, tag: str) -> np.ndarray:
        return np.unique(self.edges_with_tag(tag).ravel())

    @cached_property
    def s_nodes(self) -> np.ndarray:
        return self.nodes_with_tag(TAG_S)

    @cached_property
    def gamma_nodes(self) -> np.ndarray:
        """Aperture nodes ordered by ``x1``, junctions included."""
        g = self.nodes_with_tag(TAG_GAMMA)
        return g[np.argsort(self.nodes[g, 0])]

    @cached_property
    def junction_nodes(self) -> np.ndarray:
        return np.intersect1d(self.s_nodes, self.gamma_nodes)

    @cached_property
    def gamma_interior(self) -> np.ndarray:
        """Aperture nodes that carry an interior hat (not on ``S`` or ``GammaC``)."""
        blocked = np.union1d(self.s_nodes, self.nodes_with_tag(TAG_GAMMA_C))
        g = self.gamma_nodes
        return g[~np.isin(g, blocked)]

    @cached_property
    def dirichlet_nodes(self) -> np.ndarray:
        return np.union1d(self.s_nodes, self.nodes_with_tag(TAG_GAMMA_C))

    @cached_property
    def h_max(self) -> float:
        return float(np.max(self.edge_lengths))

    @cached_property
    def unique_edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.unique_edges
        return np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)

    # ------------------------------------------------------------ boundary geometry
    @cached_property
    def _edge_owner(self) -> dict:
        owner = {}
        for t, tri in enumerate(self.triangles):
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                owner[(min(a, b), max(a, b))] = (t, tri[(i + 2) % 3])
        return owner

    def boundary_edge_triangle(self, edges: np.ndarray) -> np.ndarray:
        return np.array([self._edge_owner[(min(a, b), max(a, b))][0] for a, b in edges], dtype=int)

    def edge_outward_normals(self, edges: np.ndarray) -> np.ndarray:
        """Unit normals of boundary edges pointing out of the domain."""
        out = np.empty((len(edges), 2))
        for i, (a, b) in enumerate(edges):
            _, opp = self._edge_owner[(min(a, b), max(a, b))]
            t = self.nodes[b] - self.nodes[a]
            n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            if np.dot(n, self.nodes[opp] - self.nodes[a]) > 0:
                n = -n
            out[i] = n
        return out

    @cached_property
    def s_node_normals(self) -> np.ndarray:
        """Length-weighted outward normals at ``S`` nodes, aligned with ``s_nodes``."""
        edges = self.edges_with_tag(TAG_S)
        en = self.edge_outward_normals(edges)
        lens = np.linalg.norm(self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]], axis=1)
        acc = np.zeros((self.n_nodes, 2))
        for (a, b), n, L in zip(edges, en, lens):
            acc[a] += L * n
            acc[b] += L * n
        nn = acc[self.s_nodes]
        return nn / np.linalg.norm(nn, axis=1)[:, None]

    # ------------------------------------------------------------ checks
    def validate(self, curve_tol: float | None = None) -> None:
        """Raise ``GeometryError`` unless all mesh invariants hold."""
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise GeometryError("an edge is shared by more than two triangles")
        boundary = {tuple(x) for x in uniq[counts == 1]}
        tagged = {tuple(sorted(x)) for x in self.boundary_edges.tolist()}
        if boundary != tagged:
            raise GeometryError("tagged edges differ from the topological boundary (hanging nodes?)")
        deg = np.bincount(self.boundary_edges.ravel(), minlength=self.n_nodes)
        if np.any(deg[deg > 0] != 2):
            raise GeometryError("boundary edges do not form closed loops")
        g = self.nodes_with_tag(TAG_GAMMA)
        if len(g) and np.max(np.abs(self.nodes[g, 1])) > 1e-12:
            raise GeometryError("Gamma nodes must satisfy x2 = 0")
        if self.shape is not None and curve_tol is not None:
            s = self.s_nodes
            phi = reference_angle(self.nodes[s])
            # distance to the curve along the ray through the node
            r_node = np.hypot(self.nodes[s, 0], self.nodes[s, 1] / self.shape.aspect)
            if np.max(np.abs(r_node - self.shape.radius(phi))) > curve_tol:
                raise GeometryError("S nodes are off the cavity curve")

    def reflect_permutation(self, tol: float = 1e-9) -> np.ndarray:
        """Index map ``i -> j`` with ``node_j = (-x1, x2)`` of ``node_i``."""
        from scipy.spatial import cKDTree

        mirrored = self.nodes * np.array([-1.0, 1.0])
        dist, idx = cKDTree(self.nodes).query(mirrored)
        if np.max(dist) > tol:
            raise GeometryError("mesh is not mirror symmetric")
        return idx


# ---------------------------------------------------------------- generation

def _ring_triangles(inner: np.ndarray, outer: np.ndarray, inner_ang, outer_ang) -> list:
    """Strip between two rings, marched in angle over ``phi <= pi/2`` and mirrored.

    Exactly one of two consecutive rings has a node at ``pi/2``; a single
    triangle joins the two halves there, so the strip is mirror symmetric.
    """
    half = 0.5 * math.pi + 1e-12
    ni = int(np.sum(np.asarray(inner_ang) <= half))
    no = int(np.sum(np.asarray(outer_ang) <= half))
    left = []
    i = j = 0
    while i < ni - 1 or j < no - 1:
        if i == ni - 1 or (j < no - 1 and outer_ang[j + 1] <= inner_ang[i + 1]):
            left.append(((0, i), (1, j), (1, j + 1)))
            j += 1
        else:
            left.append(((0, i), (1, j), (0, i + 1)))
            i += 1
    rings = (inner, outer)
    size = (len(inner), len(outer))
    tris = []
    for tri in left:
        tris.append(tuple(rings[r][k] for r, k in tri))
        tris.append(tuple(rings[r][size[r] - 1 - k] for r, k in tri))
    if abs(inner_ang[ni - 1] - 0.5 * math.pi) < 1e-12:
        tris.append((inner[ni - 1], outer[no - 1], outer[size[1] - no]))
    else:
        tris.append((inner[ni - 1], outer[no - 1], inner[size[0] - ni]))
    return tris


def _reference_mesh(nr: int):
    """Half-disk ring mesh: ring ``i`` has ``3 i + 1`` nodes on ``phi in [0, pi]``."""
    pts = [np.array([[0.0, 0.0]])]
    ids = [np.array([0])]
    angs = [np.array([0.0])]
    count = 1
    for i in range(1, nr + 1):
        n = 3 * i
        phi = np.linspace(0.0, math.pi, n + 1)
        rho = i / nr
        xy = np.stack([rho * np.cos(phi), -rho * np.sin(phi)], axis=1)
        xy[0, 1] = xy[-1, 1] = 0.0
        pts.append(xy)
        ids.append(np.arange(count, count + n + 1))
        angs.append(phi)
        count += n + 1
    X = np.concatenate(pts)
    tris = []
    for i in range(1, nr + 1):
        inner, outer = ids[i - 1], ids[i]
        if i == 1:
            tris.extend((inner[0], outer[j], outer[j + 1]) for j in range(len(outer) - 1))
        else:
            tris.extend(_ring_triangles(inner, outer, angs[i - 1], angs[i]))
    tris = np.array(tris, dtype=int)
    outer = ids[-1]
    s_edges = np.stack([outer[:-1], outer[1:]], axis=1)
    # aperture: left junction -> ... -> centre -> ... -> right junction
    left = [ids[i][-1] for i in range(nr, 0, -1)] + [0]
    right = [ids[i][0] for i in range(1, nr + 1)]
    chain = left + right
    g_edges = np.array([(chain[k], chain[k + 1]) for k in range(len(chain) - 1)], dtype=int)
    return X, tris, s_edges, g_edges


def _orient(nodes, tris):
    area = _signed_areas(nodes, tris)
    tris = tris.copy()
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _assemble_mesh(shape, X, tris, s_edges, g_edges, level=0, parents=None, parent_mesh=None):
    nodes = shape.map_reference(X)
    nodes[np.abs(X[:, 1]) == 0.0, 1] = 0.0
    tris = _orient(nodes, tris)
    edges = np.concatenate([s_edges, g_edges])
    tags = (TAG_S,) * len(s_edges) + (TAG_GAMMA,) * len(g_edges)
    try:
        return Mesh(nodes, tris, edges, tags, level, shape, X, parents, parent_mesh)
    except GeometryError as exc:
        raise GeometryError(f"shape is too distorted for the structured mesh: {exc}") from exc


def grade_junctions(X: np.ndarray, s_nodes: np.ndarray, beta: float, radius: float = 1.0) -> np.ndarray:
    """Pull reference nodes toward the two junctions ``(+-1, 0)``.

    Within ``radius`` of a junction the distance ``s`` becomes
    ``radius (s / radius)^beta`` along the same ray, which refines the mesh
    where the field has its corner singularity.  Boundary nodes are put
    back on the unit circle and aperture nodes stay on ``x2 = 0``.
    """
    if beta < 1:
        raise GeometryError(f"junction grading exponent must be >= 1, got {beta!r}")
    X = np.array(X, dtype=float)
    if beta == 1:
        return X
    for jx in (1.0, -1.0):
        d = X - np.array([jx, 0.0])
        s = np.hypot(d[:, 0], d[:, 1])
        m = (s > 0) & (s < radius)
        X[m] = np.array([jx, 0.0]) + d[m] * ((s[m] / radius) ** (beta - 1))[:, None]
    X[s_nodes] /= np.linalg.norm(X[s_nodes], axis=1)[:, None]
    X[np.abs(X[:, 1]) < 1e-15, 1] = 0.0
    return X


def generate_mesh(shape: CavityShape, target_h: float | None, gamma_extent: float | None = None,
                  junction_grading: float = 1.0, grading_radius: float = 1.0,
                  rings: int | None = None) -> Mesh:
    """Radial-angular triangulation of the cavity with max edge ``<= 1.5 target_h``.

    ``junction_grading > 1`` clusters nodes near the aperture endpoints via
    :func:`grade_junctions`; uniform refinement keeps that grading.  Passing
    ``rings`` fixes the number of rings and bypasses ``target_h``.
    """
    if rings is not None:
        if int(rings) < 1:
            raise GeometryError(f"rings must be >= 1, got {rings!r}")
        X, tris, s_e, g_e = _reference_mesh(int(rings))
        X = grade_junctions(X, np.unique(s_e.ravel()), junction_grading, grading_radius)
        return _assemble_mesh(shape, X, tris, s_e, g_e)
    if target_h is None or not (target_h > 0 and np.isfinite(target_h)):
        raise GeometryError(f"target_h must be positive, got {target_h!r}")
    lo, hi = shape.x_extent
    if gamma_extent is not None and gamma_extent < max(-lo, hi) - 1e-12:
        raise GeometryError("gamma_extent is smaller than the cavity opening")
    phi = np.linspace(0, math.pi, 721)
    rmax = float(np.max(shape.radius(phi)) * max(1.0, shape.aspect))
    nr = max(1, int(math.ceil(rmax / target_h)))
    while True:
        X, tris, s_e, g_e = _reference_mesh(nr)
        X = grade_junctions(X, np.unique(s_e.ravel()), junction_grading, grading_radius)
        mesh = _assemble_mesh(shape, X, tris, s_e, g_e)
        if mesh.h_max <= 1.5 * target_h or nr > 4000:
            break
        nr = int(math.ceil(nr * max(1.05, mesh.h_max / (1.5 * target_h))))
    logger.debug("mesh: nr=%d, %d nodes, %d triangles, h_max=%.4g", nr, mesh.n_nodes,
                 len(mesh.triangles), mesh.h_max)
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement with new ``S`` nodes snapped onto the curve."""
    if mesh.ref_nodes is None or mesh.shape is None:
        raise GeometryError("only generated meshes carry the reference map needed for refinement")
    X = mesh.ref_nodes
    tris = mesh.triangles
    edge_id: dict = {}
    new_pts, parents = [], []

    def mid(a, b):
        key = (min(a, b), max(a, b))
        if key not in edge_id:
            edge_id[key] = len(X) + len(new_pts)
            new_pts.append(0.5 * (X[a] + X[b]))
            parents.append(key)
        return edge_id[key]

    new_tris = []
    for a, b, c in tris:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    s_edges, g_edges = [], []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        m = edge_id[(min(a, b), max(a, b))]
        (s_edges if tag == TAG_S else g_edges).extend([(a, m), (m, b)])
    Xn = np.concatenate([X, np.array(new_pts)])
    s_new = np.unique(np.array(s_edges).ravel())
    s_new = s_new[s_new >= len(X)]
    Xn[s_new] /= np.linalg.norm(Xn[s_new], axis=1)[:, None]
    Xn[np.abs(Xn[:, 1]) < 1e-15, 1] = 0.0
    return _assemble_mesh(mesh.shape, Xn, np.array(new_tris), np.array(s_edges, dtype=int),
                          np.array(g_edges, dtype=int), mesh.refinement_level + 1,
                          np.array(parents, dtype=int), mesh)


def prolongate(coarse: Mesh, fine: Mesh, values: np.ndarray) -> np.ndarray:
    """Carry nodal values (any trailing shape) from ``coarse`` up the refinement chain to ``fine``."""
    chain = []
    m = fine
    while m is not coarse:
        if m.parent_mesh is None:
            raise GeometryError("fine mesh does not descend from the coarse mesh")
        chain.append(m)
        m = m.parent_mesh
    v = np.asarray(values)
    for m in reversed(chain):
        add = 0.5 * (v[m.parents[:, 0]] + v[m.parents[:, 1]])
        v = np.concatenate([v, add])
    return v


# ---------------------------------------------------------------- perturbations

@dataclass(frozen=True, eq=False)
class ShapePerturbation:
    """Normal boundary displacement ``h = k p n`` and its interior extension."""

    p: np.ndarray           # samples at mesh.s_nodes
    k: float
    h_boundary: np.ndarray  # (n_s, 2)
    h_tilde: np.ndarray     # (N, 2)
    extension_ratio: float

    def scaled(self, t: float) -> "ShapePerturbation":
        return ShapePerturbation(self.p, self.k * t, self.h_boundary * t, self.h_tilde * t,
                                 self.extension_ratio)

    def __add__(self, other: "ShapePerturbation") -> "ShapePerturbation":
        return ShapePerturbation(self.p * self.k + other.p * other.k, 1.0,
                                 self.h_boundary + other.h_boundary,
                                 self.h_tilde + other.h_tilde, float("nan"))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.h_tilde)


def _laplace_matrix(mesh: Mesh) -> sp.csr_matrix:
    g = mesh.grad_basis
    ke = np.einsum("tid,tjd->tij", g, g) * mesh.areas[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))


def harmonic_extension(mesh: Mesh, boundary_nodes: np.ndarray, boundary_values: np.ndarray,
                       zero_nodes: np.ndarray) -> np.ndarray:
    """Discrete harmonic extension of vector data; ``boundary_values`` wins over ``zero_nodes``."""
    n = mesh.n_nodes
    vals = np.zeros((n, boundary_values.shape[1]))
    fixed = np.zeros(n, dtype=bool)
    fixed[zero_nodes] = True
    vals[boundary_nodes] = boundary_values
    fixed[boundary_nodes] = True
    free = np.flatnonzero(~fixed)
    if len(free) == 0:
        return vals
    K = _laplace_matrix(mesh).tocsc()
    Kff = K[free][:, free]
    Kfc = K[free][:, np.flatnonzero(fixed)]
    lu = spla.splu(Kff.tocsc())
    for c in range(vals.shape[1]):
        vals[free, c] = lu.solve(-(Kfc @ vals[fixed, c]))
    return vals


def w1inf_mesh(mesh: Mesh, h: np.ndarray) -> float:
    grad = np.einsum("tid,tic->tcd", mesh.grad_basis, h[mesh.triangles])
    return float(np.max(np.abs(h)) + np.max(np.linalg.norm(grad, axis=(1, 2), ord=2)))


def w1inf_boundary(mesh: Mesh, h: np.ndarray) -> float:
    edges = mesh.edges_with_tag(TAG_S)
    dh = h[edges[:, 1]] - h[edges[:, 0]]
    L = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    return float(np.max(np.abs(h[mesh.s_nodes])) + np.max(np.linalg.norm(dh, axis=1) / L))


def s_node_angles(mesh: Mesh) -> np.ndarray:
    """Polar angle of each ``S`` node after undoing the vertical aspect."""
    pts = mesh.nodes[mesh.s_nodes]
    aspect = mesh.shape.aspect if mesh.shape is not None else 1.0
    return reference_angle(pts / np.array([1.0, aspect]))


def extend_perturbation(mesh: Mesh, p_on_S, k: float) -> ShapePerturbation:
    """Build ``h = k p n`` on ``S`` and extend it harmonically with zero on the aperture.

    ``p_on_S`` is either an array aligned with ``mesh.s_nodes`` or a callable of
    the polar angle.  ``p`` is forced to zero at the two junction nodes.
    """
    s = mesh.s_nodes
    if callable(p_on_S):
        p = np.asarray(p_on_S(s_node_angles(mesh)), dtype=float)
    else:
        p = np.asarray(p_on_S, dtype=float).copy()
        if p.shape != s.shape:
            raise GeometryError("p must be sampled at every S node")
    p = np.where(np.isin(s, mesh.junction_nodes), 0.0, p)
    h_s = float(k) * p[:, None] * mesh.s_node_normals
    zero = np.union1d(mesh.gamma_nodes, mesh.nodes_with_tag(TAG_GAMMA_C))
    zero = zero[~np.isin(zero, s)]
    h_full = np.zeros((mesh.n_nodes, 2))
    h_full[s] = h_s
    if np.any(h_s):
        h_full = harmonic_extension(mesh, s, h_s, zero)
        ratio = w1inf_mesh(mesh, h_full) / w1inf_boundary(mesh, h_full)
    else:
        ratio = 0.0
    return ShapePerturbation(p, float(k), h_s, h_full, float(ratio))


def deform_mesh(mesh: Mesh, pert: ShapePerturbation) -> Mesh:
    """Move nodes by ``y + h(y)``; connectivity and tags are kept."""
    new = mesh.nodes + pert.h_tilde
    areas = _signed_areas(new, mesh.triangles)
    if np.any(areas <= 0):
        raise DeformationError(f"deformation inverts {int(np.sum(areas <= 0))} triangles")
    return Mesh(new, mesh.triangles, mesh.boundary_edges, mesh.edge_tags, mesh.refinement_level)


def jacobian_determinants(mesh: Mesh, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle ``det(I + grad h)`` and ``div h`` of a P1 displacement."""
    G = np.einsum("tid,tic->tcd", mesh.grad_basis, h[mesh.triangles])
    det = (1 + G[:, 0, 0]) * (1 + G[:, 1, 1]) - G[:, 0, 1] * G[:, 1, 0]
    return det, G[:, 0, 0] + G[:, 1, 1]


# ---------------------------------------------------------------- distances

def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    cond = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.sum(cond & (x < xint), axis=1) % 2 == 1


def _dist_to_polyline(pts: np.ndarray, poly: np.ndarray, chunk: int = 2048) -> np.ndarray:
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    L2 = np.maximum(np.sum(ab**2, axis=1), 1e-300)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        t = np.clip(np.sum((p - a) * ab, axis=2) / L2, 0.0, 1.0)
        proj = a + t[..., None] * ab
        out[s:s + chunk] = np.min(np.linalg.norm(p - proj, axis=2), axis=1)
    return out


def _domain_samples(shape: CavityShape, n: int) -> np.ndarray:
    phi = np.linspace(0.0, math.pi, n)
    S = shape.point(phi)
    lo, hi = shape.x_extent
    G = np.stack([np.linspace(lo, hi, max(n // 4, 10)), np.zeros(max(n // 4, 10))], axis=1)
    m = max(int(math.sqrt(n)), 4)
    rho = np.linspace(0.0, 1.0, m + 1)[1:-1]
    ang = np.linspace(0.0, math.pi, m)
    R, A = np.meshgrid(rho, ang)
    inner = shape.point(A.ravel()) * R.ravel()[:, None]
    return np.concatenate([S, G, inner])


def hausdorff_distance(shape_a: CavityShape, shape_b: CavityShape, n_samples: int = 2000) -> float:
    """Two-sided Hausdorff distance between the closed cavity regions."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if shape_a == shape_b:
        return 0.0

    def one_sided(src, dst):
        pts = _domain_samples(src, n_samples)
        poly = dst.boundary_polygon(max(n_samples, 2000))
        inside = _points_in_polygon(pts, poly)
        d = np.zeros(len(pts))
        if np.any(~inside):
            d[~inside] = _dist_to_polyline(pts[~inside], poly)
        return float(np.max(d))

    return max(one_sided(shape_a, shape_b), one_sided(shape_b, shape_a))


# ---------------------------------------------------------------- file format

def write_mesh(path, mesh: Mesh) -> None:
    with open(path, "w") as fh:
        fh.write(f"nodes {mesh.n_nodes} triangles {len(mesh.triangles)} bedges {len(mesh.boundary_edges)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        for (i, j), tag in zip(mesh.boundary_edges, mesh.edge_tags):
            fh.write(f"{i} {j} {_FILE_TAGS[tag]}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 6 or head[0::2] != ["nodes", "triangles", "bedges"]:
            raise GeometryError("bad mesh header")
        n, t, b = int(head[1]), int(head[3]), int(head[5])
        nodes = np.array([[float(v) for v in fh.readline().split()] for _ in range(n)])
        tris = np.array([[int(v) for v in fh.readline().split()] for _ in range(t)], dtype=int)
        edges, tags = [], []
        for _ in range(b):
            i, j, tag = fh.readline().split()
            if tag not in _FILE_TAGS_INV:
                raise GeometryError(f"unknown boundary tag {tag!r}")
            edges.append((int(i), int(j)))
            tags.append(_FILE_TAGS_INV[tag])
    mesh = Mesh(nodes.reshape(n, 2), tris.reshape(t, 3), np.array(edges, dtype=int).reshape(b, 2),
                tuple(tags))
    mesh.validate()
    return mesh
