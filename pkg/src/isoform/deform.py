"""Infinitesimal deformations of realizations.

Any vertex velocity field decomposes per edge as

    d fdot = sigma * df + df x W,      <W, df> = 0,

with ``sigma`` the logarithmic edge-length rate and ``W`` the edge rotation
rate (the df-parallel part of W is invisible, so the perpendicular gauge
makes the decomposition unique).  Isometric deformations are exactly those
with ``sigma == 0``; they are generated by per-face angular velocities ``Z``
compatible across interior edges.

The change of the logarithmic length cross ratio under a metric scaling
``sigma`` is a local operator ``L`` on edge values,

    L(sigma)_ij = sigma_jk - sigma_ki + sigma_il - sigma_lj,

skew-adjoint on closed surfaces with kernel ``{u_i + u_j}`` and image
``{a : sum_j a_ij = 0}``.  The composite map (velocity -> sigma -> L sigma)
measures how freely the conformal class of the induced metric moves; its
kernel dimension exceeds ``|V| - 6g + 6`` exactly on isothermic
realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

from .errors import DegenerateRealizationError, IncompatibleDataError
from .forms import PrimalOneForm, integrate_primal
from .isothermic import DEFAULT_RANK_TOL, vertex_mean_curvature_rate


# ----------------------------------------------------------------------
# length cross ratios and the operator L
# ----------------------------------------------------------------------

@dataclass
class LcrOperator:
    """Sparse operator from edge values to interior-edge values."""

    mesh: object
    matrix: sparse.csr_matrix

    def __call__(self, values):
        return self.matrix @ np.asarray(values, dtype=np.float64)

    def kernel_map(self):
        """Sparse map ``u -> a`` with ``a_ij = u_i + u_j`` (spans Ker on
        closed surfaces)."""
        mesh = self.mesh
        rows = np.repeat(np.arange(mesh.edge_count), 2)
        cols = mesh.edges.ravel()
        vals = np.ones(2 * mesh.edge_count)
        return sparse.csr_matrix(
            (vals, (rows, cols)), shape=(mesh.edge_count, mesh.vertex_count)
        )

    def vertex_sum_map(self):
        """Sparse map ``a -> (sum_j a_ij)_i`` whose kernel is Im(L) on
        closed surfaces."""
        mesh = self.mesh
        rows = mesh.edges.ravel()
        cols = np.repeat(np.arange(mesh.edge_count), 2)
        vals = np.ones(2 * mesh.edge_count)
        return sparse.csr_matrix(
            (vals, (rows, cols)), shape=(mesh.vertex_count, mesh.edge_count)
        )


def lcr_operator(mesh):
    """Assemble ``L`` (rows: interior edges, columns: all edges)."""
    rows, cols, data = [], [], []
    for row, e in enumerate(mesh.interior_edges):
        i, j = mesh.edges[e]
        k = mesh.edge_apex_left[e]
        l = mesh.edge_apex_right[e]
        for u, v, sign in ((j, k, 1.0), (k, i, -1.0), (i, l, 1.0), (l, j, -1.0)):
            rows.append(row)
            cols.append(mesh.edge_id(int(u), int(v)))
            data.append(sign)
    mat = sparse.csr_matrix(
        (data, (rows, cols)), shape=(mesh.interior_edge_count, mesh.edge_count)
    )
    return LcrOperator(mesh, mat)


def log_length_cross_ratio(realization, operator=None):
    """Per-interior-edge logarithmic length cross ratio."""
    realization.require_nondegenerate()
    if operator is None:
        operator = lcr_operator(realization.mesh)
    return operator(np.log(realization.edge_lengths))


# ----------------------------------------------------------------------
# (sigma, W) decomposition
# ----------------------------------------------------------------------

@dataclass
class DeformationField:
    """A vertex velocity field with derived per-edge data.

    ``sigma`` and ``w`` are indexed by (undirected) edge; both are
    orientation independent.  ``z`` is the per-face angular velocity when
    the field was built from one.
    """

    realization: object
    fdot: np.ndarray
    sigma: np.ndarray
    w: np.ndarray
    z: np.ndarray = None
    reconstruction_residual: float = 0.0
    closure_residual: float = None

    def is_isometric(self, tol=1e-12):
        scale = max(1.0, float(np.abs(self.fdot).max()))
        return float(np.abs(self.sigma).max(initial=0.0)) <= tol * scale

    def length_rates(self):
        """d(length)/dt per edge: ``sigma * length``."""
        return self.sigma * self.realization.edge_lengths

    def mean_curvature_rates(self):
        if self.z is None:
            raise IncompatibleDataError("field carries no face rotations Z")
        return vertex_mean_curvature_rate(self.realization, self.z)


def decompose(realization, fdot):
    """Split a velocity field into scaling and rotation per edge."""
    realization.require_nondegenerate()
    mesh = realization.mesh
    fdot = np.asarray(fdot, dtype=np.float64)
    if fdot.shape != (mesh.vertex_count, 3):
        raise IncompatibleDataError("fdot must be a per-vertex R^3 field")
    dfd = fdot[mesh.edges[:, 1]] - fdot[mesh.edges[:, 0]]
    ev = realization.edge_vectors
    lsq = realization.edge_lengths**2
    sigma = np.einsum("ij,ij->i", dfd, ev) / lsq
    rest = dfd - sigma[:, None] * ev
    w = np.cross(rest, ev) / lsq[:, None]
    recon = dfd - sigma[:, None] * ev - np.cross(ev, w)
    residual = float(np.abs(recon).max(initial=0.0))
    return DeformationField(realization, fdot, sigma, w, None, residual)


def isometric_from_rotations(realization, z, tol=1e-9):
    """Integrate per-face angular velocities into a vertex velocity field.

    ``Z`` must be compatible: ``Z_left - Z_right`` parallel to ``df`` on
    every interior edge (relative to the field magnitude).  The velocity is
    integrated over a deterministic vertex spanning tree with the root
    pinned at zero; the closure residual on non-tree edges is reported and
    flags an inexact (incompatible) input.
    """
    realization.require_strongly_nondegenerate()
    mesh = realization.mesh
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (mesh.face_count, 3):
        raise IncompatibleDataError("Z must be a per-face R^3 field")

    eint = mesh.interior_edges
    ev = realization.edge_vectors[eint]
    ehat = ev / realization.edge_lengths[eint][:, None]
    dz = z[mesh.edge_face_left[eint]] - z[mesh.edge_face_right[eint]]
    perp = dz - np.einsum("ij,ij->i", dz, ehat)[:, None] * ehat
    scale = max(float(np.abs(z).max()), 1e-300)
    defects = np.linalg.norm(perp, axis=1) / scale
    worst = np.argsort(defects)[::-1][:5]
    if defects.max(initial=0.0) > tol:
        bad = [
            (int(mesh.edges[eint[w], 0]), int(mesh.edges[eint[w], 1]), float(defects[w]))
            for w in worst
            if defects[w] > tol
        ]
        raise IncompatibleDataError(
            f"face rotations are incompatible on edges {bad}"
        )

    # d fdot on the canonical edge direction, using the left face of i -> j
    values = np.empty((mesh.edge_count, 3))
    for e in range(mesh.edge_count):
        f = mesh.edge_face_left[e]
        if f < 0:
            f = mesh.edge_face_right[e]
            # left face of j -> i; d fdot(e_ji) = df(e_ji) x Z, flip sign
            values[e] = -np.cross(-realization.edge_vectors[e], z[f])
        else:
            values[e] = np.cross(realization.edge_vectors[e], z[f])
    omega = PrimalOneForm(mesh, values)
    fdot, report = integrate_primal(mesh, omega)
    field = decompose(realization, fdot)
    field.z = z
    field.closure_residual = report.closure_max
    return field


def harmonic_normal_deformation(realization, u):
    """Normal velocity ``u N`` of a planar realization, with face rotations.

    The rotation of face ``ijk`` is the unique vector with
    ``d fdot = df x Z`` on its edges:

        Z_ijk = -(u_i df(e_jk) + u_j df(e_ki) + u_k df(e_ij)) / (2 A_ijk)

    (signed area with respect to the plane normal).  The deformation is
    isometric for any ``u``; it preserves the integrated mean curvature at
    exactly the vertices where ``u`` is discrete harmonic.
    """
    realization.require_strongly_nondegenerate()
    mesh = realization.mesh
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (mesh.vertex_count,):
        raise IncompatibleDataError("u must be a per-vertex scalar field")
    _, normal, planarity = realization.plane_fit()
    if planarity > 1e-9 * max(realization.bbox_diagonal, 1e-300):
        raise DegenerateRealizationError(
            f"realization is not planar (plane residual {planarity:.3e})"
        )
    # respect the mesh orientation, not the SVD sign
    if np.dot(normal, realization.face_normals[0]) < 0:
        normal = -normal

    tri = mesh.triangles
    p = realization.positions
    d_jk = p[tri[:, 2]] - p[tri[:, 1]]
    d_ki = p[tri[:, 0]] - p[tri[:, 2]]
    d_ij = p[tri[:, 1]] - p[tri[:, 0]]
    signed_area = 0.5 * (np.cross(d_ij, -d_ki) @ normal)
    z = -(
        u[tri[:, 0], None] * d_jk
        + u[tri[:, 1], None] * d_ki
        + u[tri[:, 2], None] * d_ij
    ) / (2.0 * signed_area[:, None])

    fdot = u[:, None] * normal[None, :]
    field = decompose(realization, fdot)
    field.z = z
    # exact compatibility check (should hold identically)
    eint = mesh.interior_edges
    dz = z[mesh.edge_face_left[eint]] - z[mesh.edge_face_right[eint]]
    cross = np.cross(realization.edge_vectors[eint], dz)
    field.closure_residual = float(np.abs(cross).max(initial=0.0))
    return field


# ----------------------------------------------------------------------
# conformal deformation dimension (closed surfaces)
# ----------------------------------------------------------------------

@dataclass
class ConformalDimensionReport:
    kernel_dim: int
    bound: int
    genus: int
    is_isothermic: bool
    heawood_forces_isothermic: bool
    singular_values: np.ndarray
    rank_tol: float


def sigma_map(realization):
    """Sparse matrix of the map (vertex velocities) -> (edge scalings)."""
    mesh = realization.mesh
    ev = realization.edge_vectors / realization.edge_lengths[:, None] ** 2
    rows, cols, data = [], [], []
    for e, (i, j) in enumerate(mesh.edges):
        for c in range(3):
            rows.append(e)
            cols.append(3 * j + c)
            data.append(ev[e, c])
            rows.append(e)
            cols.append(3 * i + c)
            data.append(-ev[e, c])
    return sparse.csr_matrix(
        (data, (rows, cols)), shape=(mesh.edge_count, 3 * mesh.vertex_count)
    )


def conformal_dimension(realization, rank_tol=DEFAULT_RANK_TOL):
    """Kernel dimension of (velocity -> change of log length cross ratios).

    For a closed genus-g surface the dimension is at least
    ``|V| - 6g + 6``, with strict inequality exactly for isothermic
    realizations.  Also evaluates the counting criterion
    ``|V| < 6g + 4  =>  isothermic``.
    """
    mesh = realization.mesh
    if not mesh.is_closed:
        raise IncompatibleDataError("conformal dimension needs a closed surface")
    composite = (lcr_operator(mesh).matrix @ sigma_map(realization)).toarray()
    s = scipy.linalg.svdvals(composite)
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s >= rank_tol * smax))
    dim = 3 * mesh.vertex_count - rank
    bound = mesh.vertex_count - 6 * mesh.genus + 6
    return ConformalDimensionReport(
        kernel_dim=dim,
        bound=bound,
        genus=mesh.genus,
        is_isothermic=dim > bound,
        heawood_forces_isothermic=mesh.vertex_count < 6 * mesh.genus + 4,
        singular_values=s,
        rank_tol=rank_tol,
    )
