"""Self-stress systems, isothermicity verdicts, and mean-curvature data.

A realization is *isothermic* when it carries a nonzero dual 1-form ``tau``
that is closed at interior vertices, parallel to ``df`` on every interior
edge, and has vanishing pairing ``sum_j <df, tau>`` at interior vertices.
Writing ``tau = k df`` for edge scalars ``k`` turns this into a linear
system: three vector rows ``sum_j k_ij df(e_ij) = 0`` plus one scalar row
``sum_j k_ij (|f_j|^2 - |f_i|^2) = 0`` per interior vertex.  Equivalently,
``k`` is a self-stress of the light-cone lift

    fhat = (f, (1 - |f|^2)/2, (1 + |f|^2)/2)

and the 4-row and 5-row systems have the same nullspace; both are assembled
here, with the lifted system used as a cross-check.

Verdicts come from the numerical nullity of the column-scaled system at a
relative singular-value threshold.  A one-decade band around the threshold
is reported as "marginal" rather than silently classified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

from .errors import IncompatibleDataError
from .forms import DualOneForm

DEFAULT_RANK_TOL = 1e-8

VERDICT_ISOTHERMIC = "isothermic"
VERDICT_NOT = "not-isothermic"
VERDICT_MARGINAL = "marginal"
VERDICT_VACUOUS = "vacuous"


@dataclass
class StressSystem:
    """Sparse self-stress system with its column scaling.

    ``matrix`` has ``rows_per_vertex`` rows per interior vertex and one
    column per interior edge; columns were multiplied by ``column_scale``
    (``1/length``) for conditioning, so a nullvector ``y`` of ``matrix``
    corresponds to the stress ``k = column_scale * y``.
    """

    matrix: sparse.csr_matrix
    interior_vertices: np.ndarray
    interior_edges: np.ndarray
    column_scale: np.ndarray
    rows_per_vertex: int

    @property
    def shape(self):
        return self.matrix.shape


def _assemble(realization, lifted):
    mesh = realization.mesh
    realization.require_nondegenerate()
    vint = mesh.interior_vertices
    eint = mesh.interior_edges
    pos = realization.positions
    sq = np.einsum("ij,ij->i", pos, pos)
    rows_per = 5 if lifted else 4
    rows, cols, data = [], [], []
    for row, v in enumerate(vint):
        for e, sign, other in mesh.vertex_edges[v]:
            col = mesh.edge_interior_pos[e]
            dfv = sign * (pos[mesh.edges[e, 1]] - pos[mesh.edges[e, 0]])
            dsq = sq[other] - sq[v]
            entries = list(dfv) + ([-dsq / 2, dsq / 2] if lifted else [dsq])
            for k, val in enumerate(entries):
                rows.append(rows_per * row + k)
                cols.append(col)
                data.append(val)
    scale = 1.0 / realization.edge_lengths[eint]
    mat = sparse.csr_matrix(
        (data, (rows, cols)), shape=(rows_per * len(vint), len(eint))
    )
    mat = mat @ sparse.diags(scale)
    return StressSystem(mat, vint, eint, scale, rows_per)


def self_stress_system(realization):
    """The 4-rows-per-interior-vertex stress system (3 vector + 1 scalar)."""
    return _assemble(realization, lifted=False)


def lifted_stress_system(realization):
    """The 5-rows-per-interior-vertex system on the light-cone lift."""
    return _assemble(realization, lifted=True)


def light_cone_lift(points):
    """Map points of R^3 onto the Minkowski light cone in R^5."""
    points = np.asarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", points, points)
    return np.column_stack([points, (1.0 - sq) / 2.0, (1.0 + sq) / 2.0])


def _numerical_nullspace(dense, rank_tol):
    """(nullspace basis columns, singular values, boundary, marginal flag)."""
    m, n = dense.shape
    if m == 0:
        return np.eye(n), np.zeros(0), 0.0, False
    u, s, vt = scipy.linalg.svd(dense, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    boundary = rank_tol * smax
    rank = int(np.sum(s >= boundary))
    null = vt[rank:].T
    band_lo, band_hi = boundary / np.sqrt(10.0), boundary * np.sqrt(10.0)
    marginal = bool(np.any((s >= band_lo) & (s < band_hi)))
    return null, s, boundary, marginal


@dataclass
class EdgeStress:
    """Edge scalars ``k`` on interior edges, unit Euclidean norm."""

    mesh: object
    values: np.ndarray

    def support_size(self, rel_tol=1e-10):
        m = np.abs(self.values).max(initial=0.0)
        return int(np.sum(np.abs(self.values) > rel_tol * m))


@dataclass
class SelfStressBasis:
    """Orthonormal nullspace basis of the stress system, with diagnostics."""

    realization: object
    vectors: list = field(default_factory=list)  # EdgeStress entries
    singular_values: np.ndarray = None
    rank_tol: float = DEFAULT_RANK_TOL
    threshold: float = 0.0
    nullity: int = 0
    verdict: str = VERDICT_NOT
    marginal_gap: float = None
    residuals: list = field(default_factory=list)
    lifted_nullity: int = None
    lifted_max_principal_angle: float = None

    @property
    def is_isothermic(self):
        return self.verdict == VERDICT_ISOTHERMIC

    def max_relative_residual(self):
        worst = 0.0
        for r in self.residuals:
            worst = max(worst, r["closedness_rel"], r["pairing_rel"])
        return worst


def stress_residuals(realization, k):
    """Residuals of the defining equations for a stress vector ``k``.

    Reports the vector equation (closedness of ``k df``), the pairing
    ``sum_j k_ij |df|^2``, and the parallelism defect of ``tau = k df``
    (identically zero by construction), each with a relative version
    normalized by the one-ring magnitude ``sum_j |k_ij| l_ij``.
    """
    mesh = realization.mesh
    tau_vals = k[:, None] * realization.edge_vectors[mesh.interior_edges]
    tau = DualOneForm(mesh, tau_vals)
    closed_mags, closed_max = tau.closedness()

    lengths = realization.edge_lengths
    pair_max = 0.0
    for v in mesh.interior_vertices:
        pair = 0.0
        for e, _, _ in mesh.vertex_edges[v]:
            pair += k[mesh.edge_interior_pos[e]] * lengths[e] ** 2
        pair_max = max(pair_max, abs(pair))
    # normalize by the largest single term that could enter the sums; a
    # one-ring normalizer would blow up on stresses supported away from
    # every interior vertex (possible: interior edges joining two boundary
    # vertices carry zero columns)
    lint = lengths[mesh.interior_edges]
    scale1 = float(np.abs(k * lint).max(initial=0.0))
    scale2 = float(np.abs(k * lint**2).max(initial=0.0))
    return {
        "closedness": closed_max,
        "closedness_rel": closed_max / max(scale1, 1e-300),
        "pairing": pair_max,
        "pairing_rel": pair_max / max(scale2, 1e-300),
        "parallelism": 0.0,
    }


def isothermic_basis(realization, rank_tol=DEFAULT_RANK_TOL, cross_check=True):
    """Decide isothermicity and extract an orthonormal self-stress basis.

    The verdict is ``isothermic`` when the numerical nullity of the stress
    system is at least one, ``marginal`` when a singular value falls within
    one decade of the threshold, and ``vacuous`` when there are no interior
    vertices or edges so the defining equations are empty.
    """
    mesh = realization.mesh
    if len(mesh.interior_vertices) == 0 or mesh.interior_edge_count == 0:
        return SelfStressBasis(
            realization,
            singular_values=np.zeros(0),
            rank_tol=rank_tol,
            verdict=VERDICT_VACUOUS,
        )
    system = self_stress_system(realization)
    dense = system.matrix.toarray()
    null, s, boundary, marginal = _numerical_nullspace(dense, rank_tol)
    nullity = null.shape[1]

    vectors = []
    residuals = []
    if nullity:
        ks = system.column_scale[:, None] * null  # unscale columns
        ks = scipy.linalg.orth(ks) if nullity > 1 else ks / np.linalg.norm(ks)
        for col in range(ks.shape[1]):
            k = ks[:, col]
            k = k / np.linalg.norm(k)
            vectors.append(EdgeStress(mesh, k))
            residuals.append(stress_residuals(realization, k))

    if marginal:
        verdict = VERDICT_MARGINAL
    elif nullity >= 1:
        verdict = VERDICT_ISOTHERMIC
    else:
        verdict = VERDICT_NOT

    gap = None
    if len(s):
        below = s[s < boundary]
        above = s[s >= boundary]
        if len(below) and len(above):
            gap = float(above.min() / max(below.max(), 1e-300))

    basis = SelfStressBasis(
        realization,
        vectors=vectors,
        singular_values=s,
        rank_tol=rank_tol,
        threshold=boundary,
        nullity=nullity,
        verdict=verdict,
        marginal_gap=gap,
        residuals=residuals,
    )

    if cross_check:
        lifted = lifted_stress_system(realization)
        lnull, ls, _, _ = _numerical_nullspace(lifted.matrix.toarray(), rank_tol)
        basis.lifted_nullity = lnull.shape[1]
        if nullity and lnull.shape[1]:
            angles = scipy.linalg.subspace_angles(null, lnull)
            basis.lifted_max_principal_angle = float(angles.max(initial=0.0))
        elif nullity == lnull.shape[1]:
            basis.lifted_max_principal_angle = 0.0
    return basis


def tau_from_stress(realization, k, tol=1e-9):
    """The vector-valued dual 1-form ``tau = k df`` with its residual report.

    ``k`` may be an :class:`EdgeStress` or a plain array on interior edges.
    The report carries the closedness and pairing residuals; an
    ``inconsistent`` flag trips when they exceed ``10 * tol`` relative.
    """
    values = k.values if isinstance(k, EdgeStress) else np.asarray(k, float)
    if np.allclose(values, 0.0):
        raise IncompatibleDataError("stress is identically zero (trivial form)")
    mesh = realization.mesh
    tau = DualOneForm(
        mesh, values[:, None] * realization.edge_vectors[mesh.interior_edges]
    )
    report = stress_residuals(realization, values)
    report["inconsistent"] = bool(
        report["closedness_rel"] > 10 * tol or report["pairing_rel"] > 10 * tol
    )
    return tau, report


# ----------------------------------------------------------------------
# mean curvature
# ----------------------------------------------------------------------

@dataclass
class MeanCurvatureData:
    """Signed dihedral angles and integrated mean curvature.

    ``alpha`` is indexed by interior-edge position and signed by the
    convention that separating normals (a convex fold with respect to the
    orientation) give positive angle: ``alpha = atan2(<nL x nR, e>, <nL, nR>)``
    on the canonical edge direction.  ``edge_values`` is ``alpha * length``;
    ``vertex_values[i]`` sums it over the edges at interior vertex ``i``.
    """

    mesh: object
    alpha: np.ndarray
    edge_values: np.ndarray
    vertex_values: np.ndarray  # aligned with mesh.interior_vertices

    def vertex_value(self, v):
        p = self.mesh.vertex_interior_pos[v]
        if p < 0:
            raise IncompatibleDataError(f"vertex {v} is not interior")
        return self.vertex_values[p]


def mean_curvature(realization):
    """Signed dihedral angles and the integrated vertex mean curvature."""
    realization.require_strongly_nondegenerate()
    mesh = realization.mesh
    normals = realization.face_normals
    eint = mesh.interior_edges
    nl = normals[mesh.edge_face_left[eint]]
    nr = normals[mesh.edge_face_right[eint]]
    ev = realization.edge_vectors[eint]
    ehat = ev / realization.edge_lengths[eint][:, None]
    sin_term = np.einsum("ij,ij->i", np.cross(nl, nr), ehat)
    cos_term = np.einsum("ij,ij->i", nl, nr)
    alpha = np.arctan2(sin_term, cos_term)
    edge_vals = alpha * realization.edge_lengths[eint]

    vertex_vals = np.zeros(len(mesh.interior_vertices))
    for row, v in enumerate(mesh.interior_vertices):
        for e, _, _ in mesh.vertex_edges[v]:
            vertex_vals[row] += edge_vals[mesh.edge_interior_pos[e]]
    return MeanCurvatureData(mesh, alpha, edge_vals, vertex_vals)


def vertex_mean_curvature_rate(realization, z):
    """Rate of the integrated vertex mean curvature for face rotations ``Z``.

    Evaluates ``sum_j <df(e_ij), Z_left - Z_right>`` at every interior
    vertex, exactly (no finite differences).  Returns an array aligned with
    ``mesh.interior_vertices``.
    """
    mesh = realization.mesh
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (mesh.face_count, 3):
        raise IncompatibleDataError("Z must be a per-face R^3 field")
    eint = mesh.interior_edges
    dz = z[mesh.edge_face_left[eint]] - z[mesh.edge_face_right[eint]]
    per_edge = np.einsum(
        "ij,ij->i", realization.edge_vectors[eint], dz
    )  # value is the same seen from either endpoint
    out = np.zeros(len(mesh.interior_vertices))
    for row, v in enumerate(mesh.interior_vertices):
        for e, _, _ in mesh.vertex_edges[v]:
            out[row] += per_edge[mesh.edge_interior_pos[e]]
    return out


# ----------------------------------------------------------------------
# inscribed meshes
# ----------------------------------------------------------------------

@dataclass
class InscribedReport:
    sphere_deviation: float
    rigidity_rank: int
    rigidity_corank: int
    flexible: bool
    euclidean_stress_dim: int
    length_sum_residual: float   # max |sum_j k |df|^2| over the stress basis
    verdict: str
    nullity: int
    verdicts_agree: bool


def rigidity_matrix(realization):
    """First-order rigidity matrix: one row per edge, columns 3 per vertex."""
    mesh = realization.mesh
    mat = np.zeros((mesh.edge_count, 3 * mesh.vertex_count))
    for e, (i, j) in enumerate(mesh.edges):
        d = realization.positions[i] - realization.positions[j]
        mat[e, 3 * i : 3 * i + 3] = d
        mat[e, 3 * j : 3 * j + 3] = -d
    return mat


def euclidean_stress_system(realization):
    """Vector rows only: ``sum_j k_ij df(e_ij) = 0`` at interior vertices."""
    mesh = realization.mesh
    vint = mesh.interior_vertices
    eint = mesh.interior_edges
    pos = realization.positions
    mat = np.zeros((3 * len(vint), len(eint)))
    for row, v in enumerate(vint):
        for e, sign, _ in mesh.vertex_edges[v]:
            col = mesh.edge_interior_pos[e]
            mat[3 * row : 3 * row + 3, col] = sign * (
                pos[mesh.edges[e, 1]] - pos[mesh.edges[e, 0]]
            )
    return mat


def inscribed_diagnostics(realization, rank_tol=DEFAULT_RANK_TOL, sphere_tol=1e-9):
    """Cross-check flexibility and isothermicity for unit-sphere meshes.

    Requires every vertex on the unit sphere.  For each basis vector of the
    Euclidean stress nullspace the quadratic identity
    ``sum_j k_ij |df(e_ij)|^2 = 0`` is verified; the first-order flexibility
    verdict (rigidity corank beyond the six rigid motions) is compared with
    the isothermic verdict.
    """
    radii = np.linalg.norm(realization.positions, axis=1)
    deviation = float(np.abs(radii - 1.0).max())
    if deviation > sphere_tol:
        raise IncompatibleDataError(
            f"vertices deviate from the unit sphere by {deviation:.3e}"
        )
    mesh = realization.mesh

    rig = rigidity_matrix(realization)
    s = scipy.linalg.svdvals(rig)
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s >= rank_tol * smax))
    corank = 3 * mesh.vertex_count - rank
    flexible = corank > 6

    esys = euclidean_stress_system(realization)
    scale = 1.0 / realization.edge_lengths[mesh.interior_edges]
    null, _, _, _ = _numerical_nullspace(esys @ np.diag(scale), rank_tol)
    length_res = 0.0
    lengths_sq = realization.edge_lengths**2
    for col in range(null.shape[1]):
        k = scale * null[:, col]
        k = k / np.linalg.norm(k)
        for v in mesh.interior_vertices:
            acc = 0.0
            for e, _, _ in mesh.vertex_edges[v]:
                acc += k[mesh.edge_interior_pos[e]] * lengths_sq[e]
            length_res = max(length_res, abs(acc))

    basis = isothermic_basis(realization, rank_tol, cross_check=False)
    return InscribedReport(
        sphere_deviation=deviation,
        rigidity_rank=rank,
        rigidity_corank=corank,
        flexible=flexible,
        euclidean_stress_dim=null.shape[1],
        length_sum_residual=length_res,
        verdict=basis.verdict,
        nullity=basis.nullity,
        verdicts_agree=flexible == basis.is_isothermic,
    )
