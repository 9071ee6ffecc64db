"""Realizations of triangulated surfaces in Euclidean 3-space.

A :class:`Realization` pairs a :class:`~isoform.mesh.SurfaceMesh` with vertex
positions and caches the induced metric data (edge vectors and lengths, face
normals, areas, corner angles).  Non-degeneracy is graded, not enforced:
``degeneracy_grade()`` distinguishes realizations whose edges are too short
("degenerate"), whose faces are collinear ("nondegenerate" only), and fully
usable ones ("strong").  Thresholds are relative to the bounding-box
diagonal, so grading is scale invariant.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .errors import DegenerateRealizationError, IncompatibleDataError

EDGE_TOL_FACTOR = 1e-12
AREA_TOL_FACTOR = 1e-12

GRADE_DEGENERATE = "degenerate"
GRADE_NONDEGENERATE = "nondegenerate"
GRADE_STRONG = "strongly-nondegenerate"


class Realization:
    """Vertex positions for a surface mesh, with cached metric data."""

    def __init__(self, mesh, positions):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape != (mesh.vertex_count, 3):
            raise IncompatibleDataError(
                f"positions must have shape ({mesh.vertex_count}, 3), "
                f"got {positions.shape}"
            )
        self.mesh = mesh
        self.positions = positions
        self.positions.setflags(write=False)

    # ------------------------------------------------------------------
    # cached metric quantities
    # ------------------------------------------------------------------

    @cached_property
    def edge_vectors(self):
        """``f_j - f_i`` per canonical edge ``(i, j)``, ``i < j``."""
        e = self.mesh.edges
        return self.positions[e[:, 1]] - self.positions[e[:, 0]]

    @cached_property
    def edge_lengths(self):
        return np.linalg.norm(self.edge_vectors, axis=1)

    @cached_property
    def bbox_diagonal(self):
        span = self.positions.max(axis=0) - self.positions.min(axis=0)
        return float(np.linalg.norm(span))

    @cached_property
    def _face_cross(self):
        tri = self.mesh.triangles
        p = self.positions
        u = p[tri[:, 1]] - p[tri[:, 0]]
        v = p[tri[:, 2]] - p[tri[:, 0]]
        return np.cross(u, v)

    @cached_property
    def face_areas(self):
        return 0.5 * np.linalg.norm(self._face_cross, axis=1)

    @cached_property
    def face_normals(self):
        """Unit normals following the face winding (right-hand rule)."""
        cross = self._face_cross
        norms = np.linalg.norm(cross, axis=1)
        bad = norms < AREA_TOL_FACTOR * max(self.bbox_diagonal, 1e-300) ** 2
        if bad.any():
            raise DegenerateRealizationError(
                f"collinear faces: {np.flatnonzero(bad).tolist()}"
            )
        return cross / norms[:, None]

    @cached_property
    def corner_angles(self):
        """Angle of face ``f`` at corner ``c`` (the vertex ``triangles[f, c]``)."""
        tri = self.mesh.triangles
        p = self.positions
        angles = np.empty((tri.shape[0], 3))
        for c in range(3):
            a = p[tri[:, (c + 1) % 3]] - p[tri[:, c]]
            b = p[tri[:, (c + 2) % 3]] - p[tri[:, c]]
            cross = np.linalg.norm(np.cross(a, b), axis=1)
            dot = np.einsum("ij,ij->i", a, b)
            angles[:, c] = np.arctan2(cross, dot)
        return angles

    @cached_property
    def corner_cotangents(self):
        """cot of each corner angle, computed without trigonometry."""
        tri = self.mesh.triangles
        p = self.positions
        cots = np.empty((tri.shape[0], 3))
        for c in range(3):
            a = p[tri[:, (c + 1) % 3]] - p[tri[:, c]]
            b = p[tri[:, (c + 2) % 3]] - p[tri[:, c]]
            cross = np.linalg.norm(np.cross(a, b), axis=1)
            dot = np.einsum("ij,ij->i", a, b)
            with np.errstate(divide="raise", invalid="raise"):
                try:
                    cots[:, c] = dot / cross
                except FloatingPointError:
                    raise DegenerateRealizationError(
                        "collinear face while computing cotangents"
                    ) from None
        return cots

    # ------------------------------------------------------------------
    # grading and checks
    # ------------------------------------------------------------------

    def degeneracy_grade(self):
        scale = max(self.bbox_diagonal, 1e-300)
        if self.edge_lengths.min(initial=np.inf) <= EDGE_TOL_FACTOR * scale:
            return GRADE_DEGENERATE
        cross = np.linalg.norm(self._face_cross, axis=1)
        if cross.min(initial=np.inf) <= 2.0 * AREA_TOL_FACTOR * scale**2:
            return GRADE_NONDEGENERATE
        return GRADE_STRONG

    def require_nondegenerate(self):
        if self.degeneracy_grade() == GRADE_DEGENERATE:
            raise DegenerateRealizationError(
                "realization has a degenerate (zero-length) edge"
            )

    def require_strongly_nondegenerate(self):
        grade = self.degeneracy_grade()
        if grade != GRADE_STRONG:
            raise DegenerateRealizationError(
                f"realization is not strongly non-degenerate (grade: {grade})"
            )

    # ------------------------------------------------------------------
    # convenience
    # ------------------------------------------------------------------

    def df(self):
        """The exact primal 1-form ``df`` (vector valued)."""
        from .forms import PrimalOneForm

        return PrimalOneForm(self.mesh, self.edge_vectors)

    def with_positions(self, positions):
        return Realization(self.mesh, positions)

    def transformed(self, matrix=None, translation=None):
        """Apply ``x -> matrix @ x + translation`` to every vertex."""
        p = self.positions
        if matrix is not None:
            p = p @ np.asarray(matrix, dtype=float).T
        if translation is not None:
            p = p + np.asarray(translation, dtype=float)
        return Realization(self.mesh, p)

    def reversed_orientation(self):
        return Realization(self.mesh.reversed_orientation(), self.positions)

    def plane_fit(self):
        """Best-fit plane: returns ``(point, unit normal, max residual)``."""
        centroid = self.positions.mean(axis=0)
        centered = self.positions - centroid
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        normal = vt[2]
        residual = float(np.abs(centered @ normal).max())
        return centroid, normal, residual

    def is_planar(self, tol_factor=1e-9):
        _, _, residual = self.plane_fit()
        return residual <= tol_factor * max(self.bbox_diagonal, 1e-300)

    def __repr__(self):
        return f"Realization({self.mesh!r}, grade={self.degeneracy_grade()})"


def face_geometry(realization):
    """Per-face normals, areas, and corner angles.

    Raises on collinear faces.  The corner-angle rows sum to pi.
    """
    realization.require_strongly_nondegenerate()
    return (
        realization.face_normals,
        realization.face_areas,
        realization.corner_angles,
    )
