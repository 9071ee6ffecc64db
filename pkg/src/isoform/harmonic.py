"""Cotangent weights and the discrete Dirichlet problem.

The weight of an edge is the sum of the cotangents of the angles opposite
to it in the one or two incident triangles.  A vertex function is discrete
harmonic when its weighted one-ring differences vanish at every interior
vertex.  On non-Delaunay meshes weights may be negative; that is allowed,
and a singular interior system is reported rather than regularized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import IncompatibleDataError, SolverError

DEFAULT_TOL = 1e-10


@dataclass
class CotanWeights:
    """Symmetric per-edge cotangent weights (single cotangent on boundary edges)."""

    mesh: object
    values: np.ndarray

    def __call__(self, i, j):
        e = self.mesh.edge_id(i, j)
        if e is None:
            raise IncompatibleDataError(f"no edge between {i} and {j}")
        return self.values[e]


def cotan_weights(realization):
    """Cotangent weights of a strongly non-degenerate realization."""
    realization.require_strongly_nondegenerate()
    mesh = realization.mesh
    cots = realization.corner_cotangents
    w = np.zeros(mesh.edge_count)
    # corner c of face f is opposite the edge between corners c+1 and c+2,
    # which is the edge of half-edge 3f + (c+1)
    for c in range(3):
        he = 3 * np.arange(mesh.face_count) + (c + 1) % 3
        np.add.at(w, mesh.he_edge[he], cots[:, c])
    return CotanWeights(mesh, w)


@dataclass
class HarmonicFunction:
    """Solution of a Dirichlet problem with its interior residuals."""

    mesh: object
    values: np.ndarray
    residuals: np.ndarray     # per interior vertex
    max_residual: float
    tolerance: float

    @property
    def ok(self):
        return self.max_residual <= self.tolerance


def laplacian_residuals(realization, u, weights=None):
    """``sum_j c_ij (u_j - u_i)`` at every interior vertex."""
    if weights is None:
        weights = cotan_weights(realization)
    mesh = realization.mesh
    u = np.asarray(u, dtype=np.float64)
    res = np.zeros(len(mesh.interior_vertices))
    for row, v in enumerate(mesh.interior_vertices):
        acc = 0.0
        for e, _, other in mesh.vertex_edges[v]:
            acc += weights.values[e] * (u[other] - u[v])
        res[row] = acc
    return res


def _as_boundary_array(mesh, boundary_values, positions):
    vb = mesh.boundary_vertices
    if callable(boundary_values):
        return np.array([float(boundary_values(positions[v])) for v in vb])
    if isinstance(boundary_values, dict):
        try:
            return np.array([float(boundary_values[int(v)]) for v in vb])
        except KeyError as exc:
            raise IncompatibleDataError(
                f"missing boundary value for vertex {exc.args[0]}"
            ) from None
    arr = np.asarray(boundary_values, dtype=np.float64)
    if arr.shape == (mesh.vertex_count,):
        return arr[vb]
    if arr.shape == (len(vb),):
        return arr
    raise IncompatibleDataError(
        "boundary_values must be a dict, callable, full-vertex array, or "
        "boundary-ordered array"
    )


def solve_dirichlet(realization, boundary_values, tol=DEFAULT_TOL, weights=None):
    """Solve the cotangent-Laplacian Dirichlet problem.

    ``boundary_values`` may be a dict keyed by vertex id, a callable of the
    vertex position, or an array (full length or boundary-ordered).  The
    interior system is solved by sparse LU; if that fails (singular systems
    are possible with negative weights) a least-squares fallback runs and
    the residual report exposes the quality either way.
    """
    mesh = realization.mesh
    if len(mesh.boundary_vertices) == 0:
        raise IncompatibleDataError("Dirichlet problem needs a boundary")
    if weights is None:
        weights = cotan_weights(realization)
    vb_vals = _as_boundary_array(mesh, boundary_values, realization.positions)

    u = np.zeros(mesh.vertex_count)
    u[mesh.boundary_vertices] = vb_vals

    vint = mesh.interior_vertices
    if len(vint) > 0:
        pos = mesh.vertex_interior_pos
        rows, cols, data = [], [], []
        rhs = np.zeros(len(vint))
        for v in vint:
            r = pos[v]
            diag = 0.0
            for e, _, other in mesh.vertex_edges[v]:
                c = weights.values[e]
                diag += c
                if pos[other] >= 0:
                    rows.append(r)
                    cols.append(pos[other])
                    data.append(-c)
                else:
                    rhs[r] += c * u[other]
            rows.append(r)
            cols.append(r)
            data.append(diag)
        mat = sparse.csr_matrix(
            (data, (rows, cols)), shape=(len(vint), len(vint))
        )
        try:
            sol = spla.spsolve(mat.tocsc(), rhs)
        except Exception as exc:  # singular factorization
            raise SolverError(f"Dirichlet factorization failed: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            sol = spla.lsqr(mat, rhs, atol=1e-14, btol=1e-14)[0]
            if not np.all(np.isfinite(sol)):
                raise SolverError("Dirichlet system is singular")
        u[vint] = sol

    res = laplacian_residuals(realization, u, weights)
    scale = max(1.0, float(np.abs(u).max(initial=0.0)))
    return HarmonicFunction(
        mesh=mesh,
        values=u,
        residuals=res,
        max_residual=float(np.abs(res).max(initial=0.0)),
        tolerance=tol * scale,
    )


def solve_dirichlet_quotient(
    realization,
    pairs,
    boundary_values,
    period=0.0,
    tol=DEFAULT_TOL,
    weights=None,
):
    """Dirichlet solve on a mesh with duplicated seam vertices.

    ``pairs`` lists ``(low, high)`` duplicated vertex pairs; the two copies
    are identified after subtracting a fixed additive ``period`` from the
    high copy, and harmonicity is imposed at every identified vertex that is
    not a true Dirichlet vertex.  ``boundary_values`` is a dict keyed by
    (low-copy) vertex id holding the Dirichlet data; Dirichlet vertices keep
    their values exactly, with the high seam copy offset by ``period``.

    Returns a :class:`HarmonicFunction` on the *cut* mesh, whose values jump
    by exactly ``period`` across the seam.  Residuals are reported at the
    interior vertices of the cut mesh (a subset of the quotient equations).
    """
    mesh = realization.mesh
    if weights is None:
        weights = cotan_weights(realization)

    rep = np.arange(mesh.vertex_count)
    offset = np.zeros(mesh.vertex_count)
    for low, high in pairs:
        rep[high] = low
        offset[high] = period

    dirichlet = {int(v): float(val) for v, val in boundary_values.items()}
    for low, high in pairs:
        if high in dirichlet:
            raise IncompatibleDataError(
                "quotient Dirichlet data must be keyed by low seam copies"
            )

    classes = sorted(set(int(rep[v]) for v in range(mesh.vertex_count)))
    unknown = [c for c in classes if c not in dirichlet]
    index = {c: k for k, c in enumerate(unknown)}

    rows, cols, data = [], [], []
    rhs = np.zeros(len(unknown))
    # aggregate cut-mesh edges into quotient equations
    for c in unknown:
        r = index[c]
        members = [v for v in range(mesh.vertex_count) if rep[v] == c]
        diag = 0.0
        for v in members:
            for e, _, other in mesh.vertex_edges[v]:
                w = weights.values[e]
                diag += w
                oc = int(rep[other])
                shift = offset[other] - offset[v]
                if oc in index:
                    rows.append(r)
                    cols.append(index[oc])
                    data.append(-w)
                    rhs[r] += w * shift
                else:
                    rhs[r] += w * (dirichlet[oc] + shift)
        rows.append(r)
        cols.append(r)
        data.append(diag)
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(len(unknown),) * 2)
    try:
        sol = spla.spsolve(mat.tocsc(), rhs)
    except Exception as exc:
        raise SolverError(f"quotient Dirichlet factorization failed: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("quotient Dirichlet system is singular")

    u = np.zeros(mesh.vertex_count)
    for v in range(mesh.vertex_count):
        c = int(rep[v])
        base = dirichlet[c] if c in dirichlet else sol[index[c]]
        u[v] = base + offset[v]

    res = laplacian_residuals(realization, u, weights)
    scale = max(1.0, float(np.abs(u).max(initial=0.0)))
    return HarmonicFunction(
        mesh=mesh,
        values=u,
        residuals=res,
        max_residual=float(np.abs(res).max(initial=0.0)),
        tolerance=tol * scale,
    )


def operator_matrix(realization, weights=None):
    """The full symmetric cotangent operator as a sparse matrix (all vertices)."""
    mesh = realization.mesh
    if weights is None:
        weights = cotan_weights(realization)
    i = mesh.edges[:, 0]
    j = mesh.edges[:, 1]
    w = weights.values
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    n = mesh.vertex_count
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
