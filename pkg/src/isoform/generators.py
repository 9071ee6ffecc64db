"""Reference meshes: grids, cut annuli, Platonic solids, Jessen's
icosahedron, and screw-motion cylinder windows.

Every generator returns fully validated realizations (they all go through
``SurfaceMesh`` construction).  Domains meant for boundary-value problems
come wrapped in a :class:`PlanarDomain` that carries polar coordinates and,
for the cut annulus, the seam bookkeeping needed by the minimal-surface
pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.spatial import ConvexHull

from .errors import DegenerateRealizationError, IncompatibleDataError
from .geometry import Realization
from .mesh import SurfaceMesh


@dataclass
class PlanarDomain:
    """A planar triangulated domain plus the data boundary expressions need.

    ``r`` and ``theta`` are per-vertex polar coordinates; for the cut
    annulus the duplicated seam carries ``theta = 0`` on the low copy and
    ``theta = 2*pi`` on the high copy.  ``seam_pairs`` lists the duplicated
    ``(low, high)`` vertex pairs (empty when there is no cut), and
    ``ring_vertices`` the true (uncut) boundary used for Dirichlet data.
    """

    realization: Realization
    r: np.ndarray
    theta: np.ndarray
    seam_pairs: list = field(default_factory=list)
    ring_vertices: np.ndarray = None

    @property
    def mesh(self):
        return self.realization.mesh

    def expression_env(self):
        p = self.realization.positions
        return {
            "x": p[:, 0].copy(),
            "y": p[:, 1].copy(),
            "z": p[:, 2].copy(),
            "r": self.r.copy(),
            "theta": self.theta.copy(),
        }


def square_domain(n):
    """Unit square [0,1]^2 triangulated on an n x n vertex grid.

    All cells are split along the same (NE) diagonal, which keeps the grid
    Delaunay.  The boundary has ``4 (n - 1)`` vertices.
    """
    if n < 2:
        raise IncompatibleDataError("grid needs n >= 2")
    h = 1.0 / (n - 1)
    positions = np.array(
        [[ix * h, iy * h, 0.0] for iy in range(n) for ix in range(n)]
    )
    tris = []
    for iy in range(n - 1):
        for ix in range(n - 1):
            v00 = iy * n + ix
            v10 = v00 + 1
            v01 = v00 + n
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    real = Realization(SurfaceMesh(tris), positions)
    r = np.linalg.norm(positions[:, :2], axis=1)
    theta = np.mod(np.arctan2(positions[:, 1], positions[:, 0]), 2 * np.pi)
    return PlanarDomain(real, r, theta, [], real.mesh.boundary_vertices)


def grid_disk(n):
    """Alias of :func:`square_domain`."""
    return square_domain(n)


def cut_annulus(r_inner, r_outer, n_r, n_theta):
    """Annulus cut along the positive x-axis, seam vertices duplicated.

    The result is a disk (``chi == 1``).  Vertices are indexed
    ``ring * (n_theta + 1) + column`` with columns 0 and ``n_theta`` both on
    the positive x-axis (``theta = 0`` and ``theta = 2*pi``).
    """
    if not (0 < r_inner < r_outer):
        raise IncompatibleDataError("need 0 < r_inner < r_outer")
    if n_theta < 3 or n_r < 1:
        raise IncompatibleDataError("need n_theta >= 3 and n_r >= 1")
    cols = n_theta + 1
    positions = []
    rs = []
    thetas = []
    for ir in range(n_r + 1):
        rad = r_inner + (r_outer - r_inner) * ir / n_r
        for it in range(cols):
            ang = 2 * np.pi * it / n_theta
            positions.append([rad * math.cos(ang), rad * math.sin(ang), 0.0])
            rs.append(rad)
            thetas.append(ang)
    positions = np.asarray(positions)
    # seam copies coincide exactly
    for ir in range(n_r + 1):
        positions[ir * cols + n_theta] = positions[ir * cols]

    tris = []
    for ir in range(n_r):
        for it in range(n_theta):
            v00 = ir * cols + it
            v01 = v00 + 1
            v10 = v00 + cols
            v11 = v10 + 1
            tris.append((v00, v01, v11))
            tris.append((v00, v11, v10))
    real = Realization(SurfaceMesh(tris), positions)
    seam = [(ir * cols, ir * cols + n_theta) for ir in range(n_r + 1)]
    rings = np.array(
        [it for it in range(cols)]
        + [n_r * cols + it for it in range(cols)],
        dtype=np.int64,
    )
    return PlanarDomain(real, np.asarray(rs), np.asarray(thetas), seam, rings)


# ----------------------------------------------------------------------
# closed reference solids
# ----------------------------------------------------------------------

def _signed_volume(realization):
    tri = realization.mesh.triangles
    p = realization.positions
    return float(
        np.einsum(
            "ij,ij->i", p[tri[:, 0]], np.cross(p[tri[:, 1]], p[tri[:, 2]])
        ).sum()
        / 6.0
    )


def _orient_outward(realization):
    if _signed_volume(realization) < 0:
        return realization.reversed_orientation()
    return realization


def platonic(which):
    """Tetrahedron, octahedron, or icosahedron inscribed in the unit sphere."""
    which = which.lower()
    if which in ("tetra", "tetrahedron"):
        pts = np.array(
            [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
        ) / math.sqrt(3)
        tris = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)]
    elif which in ("octa", "octahedron"):
        pts = np.array(
            [
                [1, 0, 0], [-1, 0, 0],
                [0, 1, 0], [0, -1, 0],
                [0, 0, 1], [0, 0, -1],
            ],
            dtype=float,
        )
        tris = [
            (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
            (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
        ]
    elif which in ("icosa", "icosahedron"):
        phi = (1 + math.sqrt(5)) / 2
        pts = np.array(_cyclic_coordinates(1.0, phi), dtype=float)
        pts /= np.linalg.norm(pts[0])
        tris = ConvexHull(pts).simplices
    else:
        raise IncompatibleDataError(f"unknown solid {which!r}")
    real = Realization(SurfaceMesh(tris), pts)
    return _orient_outward(real)


def _cyclic_coordinates(a, b):
    """The 12 cyclic permutations of (0, +-a, +-b)."""
    out = []
    for sa in (a, -a):
        for sb in (b, -b):
            out.append((0.0, sa, sb))
    for sa in (a, -a):
        for sb in (b, -b):
            out.append((sb, 0.0, sa))
    for sa in (a, -a):
        for sb in (b, -b):
            out.append((sa, sb, 0.0))
    return out


# Jessen's orthogonal icosahedron: vertices of the (0, +-1, +-2) icosahedron
# with the six short "ridge" edges exchanged for the long axis-parallel
# diagonals.  Flexibility is verified by the tests, not assumed.
_JESSEN_VERTICES = np.array(
    [
        (1, -2, 0),   # 0
        (-1, -2, 0),  # 1
        (2, 0, 1),    # 2
        (2, 0, -1),   # 3
        (0, -1, 2),   # 4
        (0, 1, 2),    # 5
        (-2, 0, 1),   # 6
        (-2, 0, -1),  # 7
        (1, 2, 0),    # 8
        (-1, 2, 0),   # 9
        (0, -1, -2),  # 10
        (0, 1, -2),   # 11
    ],
    dtype=float,
)

_JESSEN_FACES = [
    (0, 4, 10), (4, 1, 10), (0, 2, 4), (4, 6, 1), (1, 7, 10),
    (0, 3, 10), (2, 5, 6), (0, 8, 2), (4, 2, 6), (0, 3, 8),
    (1, 9, 6), (5, 8, 2), (5, 9, 6), (5, 11, 8), (5, 11, 9),
    (11, 3, 8), (11, 7, 9), (3, 7, 11), (7, 1, 9), (3, 10, 7),
]


def jessen():
    """Jessen's orthogonal icosahedron (vertices on the sphere of radius sqrt 5)."""
    real = Realization(SurfaceMesh(_JESSEN_FACES), _JESSEN_VERTICES)
    return _orient_outward(real)


# ----------------------------------------------------------------------
# homogeneous cylinders
# ----------------------------------------------------------------------

@dataclass
class CylinderParams:
    """Radius and two screw motions (angle, height) about the z-axis."""

    r: float = 1.0
    theta1: float = 2 * math.pi / 7
    h1: float = 0.0
    theta2: float = math.pi / 9
    h2: float = 0.4
    s_count: int = 7
    t_count: int = 7

    def as_vector(self):
        return np.array([self.r, self.theta1, self.h1, self.theta2, self.h2])

    def with_vector(self, vec):
        r, t1, h1, t2, h2 = (float(v) for v in vec)
        return CylinderParams(r, t1, h1, t2, h2, self.s_count, self.t_count)


def _screw(theta, h):
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    return rot, np.array([0.0, 0.0, h])


def cylinder_positions(params):
    """Vertex grid ``f(s, t) = g1^s g2^t (r, 0, 0)`` over the window."""
    p0 = np.array([params.r, 0.0, 0.0])
    pts = np.empty((params.s_count, params.t_count, 3))
    for s in range(params.s_count):
        for t in range(params.t_count):
            rot, tr = _screw(
                s * params.theta1 + t * params.theta2,
                s * params.h1 + t * params.h2,
            )
            pts[s, t] = rot @ p0 + tr
    return pts.reshape(-1, 3)


def _cylinder_mesh(params):
    return _cylinder_mesh_cached(params.s_count, params.t_count)


@lru_cache(maxsize=8)
def _cylinder_mesh_cached(S, T):
    tris = []
    for s in range(S - 1):
        for t in range(T - 1):
            v00 = s * T + t
            v01 = v00 + 1
            v10 = v00 + T
            v11 = v10 + 1
            tris.append((v00, v10, v01))
            tris.append((v10, v11, v01))
    return SurfaceMesh(tris)


@dataclass
class CylinderReport:
    lengths: dict             # class -> representative length
    length_deviation: float   # max within-class spread
    mean_curvature: float     # value shared by interior vertices
    mean_curvature_deviation: float
    group_action_residual: float


def homogeneous_cylinder(params, coincidence_tol=1e-9):
    """Triangulated window of a two-generator screw-motion cylinder.

    The window carries three edge classes: parameter steps in ``s`` and
    ``t`` plus the anti-diagonal.  Homogeneity is verified: same-class edge
    lengths agree, all interior vertices report the same integrated mean
    curvature, and applying the first generator reproduces the next row of
    vertices exactly.
    """
    from .isothermic import mean_curvature

    pts = cylinder_positions(params)
    mesh = _cylinder_mesh(params)
    scale = max(float(np.abs(pts).max()), 1e-30)

    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    if d2.min() < (coincidence_tol * scale) ** 2:
        raise DegenerateRealizationError(
            "cylinder window has coincident vertices (group not free here)"
        )
    centered = pts - pts.mean(axis=0)
    if scipy.linalg.svdvals(centered)[2] < 1e-9 * scale:
        raise DegenerateRealizationError(
            "cylinder window is degenerate: vertices are coplanar "
            "(all on one circle when h1 = h2 = 0)"
        )

    real = Realization(mesh, pts)
    real.require_strongly_nondegenerate()

    T = params.t_count
    classes = {(1, 0): "a", (1, -1): "b", (0, 1): "c"}
    lengths = {"a": [], "b": [], "c": []}
    for e, (i, j) in enumerate(mesh.edges):
        ds, dt = divmod(j, T)[0] - divmod(i, T)[0], j % T - i % T
        lengths[classes[(ds, dt)]].append(real.edge_lengths[e])
    reps = {c: float(np.mean(v)) for c, v in lengths.items()}
    spread = max(
        float(np.ptp(np.asarray(v))) for v in lengths.values()
    )

    mc = mean_curvature(real)
    h_vals = mc.vertex_values
    h_dev = float(np.ptp(h_vals)) if len(h_vals) else 0.0

    rot, tr = _screw(params.theta1, params.h1)
    shifted = pts.reshape(params.s_count, T, 3)
    action = np.abs(
        shifted[1:] - (shifted[:-1] @ rot.T + tr)
    ).max()

    report = CylinderReport(
        lengths=reps,
        length_deviation=spread,
        mean_curvature=float(h_vals.mean()) if len(h_vals) else float("nan"),
        mean_curvature_deviation=h_dev,
        group_action_residual=float(action),
    )
    return real, report


def _mu(params):
    """(l_a, l_b, l_c, H) for the window; H from the central interior vertex."""
    from .isothermic import mean_curvature

    pts = cylinder_positions(params)
    mesh = _cylinder_mesh(params)
    real = Realization(mesh, pts)
    T = params.t_count
    center = (params.s_count // 2) * T + T // 2
    la = np.linalg.norm(pts[T] - pts[0])           # (1,0) step
    lc = np.linalg.norm(pts[1] - pts[0])           # (0,1) step
    lb = np.linalg.norm(pts[T] - pts[1])           # anti-diagonal
    mc = mean_curvature(real)
    return np.array([la, lb, lc, mc.vertex_value(center)])


@dataclass
class CylinderFlexReport:
    jacobian: np.ndarray
    singular_values: np.ndarray
    kernel: np.ndarray         # (5, dim) parameter directions
    kernel_dim: int
    fdot: np.ndarray           # vertex velocity field of the first kernel direction
    rate: np.ndarray           # central difference of mu along the kernel
    rate_half: np.ndarray
    observed_order: float
    rigid_fit_residual: float


def cylinder_flex(params, eps=1e-5, order_eps=1e-3, rank_tol=1e-8):
    """Kernel of the length/mean-curvature map over the 5 cylinder parameters.

    The map ``mu = (l_a, l_b, l_c, H)`` is differentiated by central
    differences with per-coordinate steps ``eps * (1 + |p|)``; its kernel
    direction induces a vertex deformation that preserves, to first order,
    all edge lengths and the integrated mean curvature.  The first-order
    property is verified with a Richardson pair at ``order_eps`` (a larger
    step than the Jacobian's, so the order estimate sits well above
    rounding noise).
    """
    p = params.as_vector()
    steps = eps * (1.0 + np.abs(p))
    jac = np.zeros((4, 5))
    for k in range(5):
        dp = np.zeros(5)
        dp[k] = steps[k]
        jac[:, k] = (
            _mu(params.with_vector(p + dp)) - _mu(params.with_vector(p - dp))
        ) / (2 * steps[k])

    u, s, vt = scipy.linalg.svd(jac)
    rank = int(np.sum(s >= rank_tol * s[0]))
    kernel = vt[rank:].T
    if kernel.shape[1] == 0:
        raise DegenerateRealizationError("mu has no kernel at these parameters")
    v = kernel[:, 0]

    def mu_rate(h):
        return (
            _mu(params.with_vector(p + h * v)) - _mu(params.with_vector(p - h * v))
        ) / (2 * h)

    h0 = order_eps * (1.0 + np.linalg.norm(p))
    rate = mu_rate(h0)
    rate_half = mu_rate(h0 / 2)
    num = np.linalg.norm(rate)
    den = np.linalg.norm(rate_half)
    observed = math.log2(num / den) if den > 0 else math.inf

    hf = 1e-6 * (1.0 + np.linalg.norm(p))
    fdot = (
        cylinder_positions(params.with_vector(p + hf * v))
        - cylinder_positions(params.with_vector(p - hf * v))
    ) / (2 * hf)

    pts = cylinder_positions(params)
    a = np.zeros((3 * len(pts), 6))
    for i, q in enumerate(pts):
        a[3 * i : 3 * i + 3, 0:3] = -_cross_matrix(q)
        a[3 * i : 3 * i + 3, 3:6] = np.eye(3)
    sol, *_ = np.linalg.lstsq(a, fdot.ravel(), rcond=None)
    resid = np.linalg.norm(a @ sol - fdot.ravel()) / max(
        np.linalg.norm(fdot), 1e-300
    )

    return CylinderFlexReport(
        jacobian=jac,
        singular_values=s,
        kernel=kernel,
        kernel_dim=kernel.shape[1],
        fdot=fdot,
        rate=rate,
        rate_half=rate_half,
        observed_order=observed,
        rigid_fit_residual=float(resid),
    )


def _cross_matrix(v):
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )
