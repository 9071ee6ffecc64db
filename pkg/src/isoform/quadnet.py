"""Quad nets with factorized real cross-ratios and their triangulations.

A quad net is a grid of points in R^3 whose elementary quadrilaterals have
real quaternionic cross-ratios factorizing as ``alpha_m / beta_n`` (one
factor per column, one per row).  Such nets admit a Christoffel dual
``F*`` built edge by edge:

    F*_{m+1,n} - F*_{m,n} = alpha_m (F_{m+1,n} - F_{m,n}) / |...|^2,
    F*_{m,n+1} - F*_{m,n} = beta_n  (F_{m,n+1} - F_{m,n}) / |...|^2,

whose per-quad loop closure doubles as the isothermicity certificate.  The
dual's quad diagonals obey closed-form identities with factor
``alpha_m - beta_n``, which make the following subdivision rule work: split
each quad along either diagonal and give each triangle the dual point of
its private corner as an angular velocity.  The resulting face rotations
are compatible across every interior edge, define an isometric vertex
deformation of the triangulated net, and preserve the integrated vertex
mean curvature for every choice of diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompatibleDataError
from .geometry import Realization
from .isothermic import vertex_mean_curvature_rate
from .mesh import SurfaceMesh
from .moebius import quat_conjugate, quat_from_vector, quat_multiply

DEFAULT_REAL_TOL = 1e-9


@dataclass
class QuadNet:
    """An (M+1) x (N+1) point grid holding M x N elementary quads."""

    points: np.ndarray  # (M+1, N+1, 3)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 3 or self.points.shape[2] != 3 or min(
            self.points.shape[:2]
        ) < 2:
            raise IncompatibleDataError("points must be (M+1, N+1, 3) with M,N >= 1")

    @property
    def quad_shape(self):
        return self.points.shape[0] - 1, self.points.shape[1] - 1

    def quad(self, m, n):
        """Corners (F_mn, F_m+1n, F_m+1n+1, F_mn+1) of quad (m, n)."""
        p = self.points
        return p[m, n], p[m + 1, n], p[m + 1, n + 1], p[m, n + 1]

    @staticmethod
    def from_json_dict(doc):
        m, n = int(doc["M"]), int(doc["N"])
        pts = np.asarray(doc["points"], dtype=np.float64)
        if pts.shape != ((m + 1) * (n + 1), 3):
            raise IncompatibleDataError(
                f"expected {(m + 1) * (n + 1)} points for an {m}x{n} net"
            )
        return QuadNet(pts.reshape(m + 1, n + 1, 3))

    def to_json_dict(self):
        m, n = self.quad_shape
        return {"M": m, "N": n, "points": self.points.reshape(-1, 3)}


def cross_ratio(a, b, c, d):
    """Quaternionic cross-ratio ``(a-b)(b-c)^-1 (c-d)(d-a)^-1`` of 4 points.

    Returns ``(q, is_real)`` with ``q`` as a quaternion ``[w, x, y, z]``;
    the point quadruple is concircular exactly when the imaginary part
    vanishes.
    """
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    for u, v in ((a, b), (b, c), (c, d), (d, a)):
        if np.allclose(u, v):
            raise IncompatibleDataError("consecutive points coincide")

    def inv(q):
        return quat_conjugate(q) / np.sum(q * q)

    q = quat_multiply(
        quat_multiply(quat_from_vector(a - b), inv(quat_from_vector(b - c))),
        quat_multiply(quat_from_vector(c - d), inv(quat_from_vector(d - a))),
    )
    imag = float(np.linalg.norm(q[1:]))
    is_real = imag <= DEFAULT_REAL_TOL * (1.0 + float(np.abs(q[0])))
    return q, is_real


@dataclass
class Factorization:
    alpha: np.ndarray
    beta: np.ndarray
    cross_ratios: np.ndarray     # real parts, (M, N)
    max_imag: float
    residual: float              # max |q_mn - alpha_m / beta_n|
    factorized: bool


def fit_factorization(net, tol=DEFAULT_REAL_TOL):
    """Least-squares column/row factors of the quad cross-ratios.

    Fits ``log |q_mn| = log |alpha_m| - log |beta_n|`` (gauge
    ``beta_0 = 1``), with sign patterns checked for consistency.  The net
    is reported unfactorized when a cross-ratio is not real within ``tol``,
    when signs cannot split, or when the residual exceeds ``tol`` relative
    to the cross-ratio magnitudes.
    """
    m_count, n_count = net.quad_shape
    q = np.empty((m_count, n_count))
    max_imag = 0.0
    for m in range(m_count):
        for n in range(n_count):
            quat, _ = cross_ratio(*net.quad(m, n))
            q[m, n] = quat[0]
            max_imag = max(max_imag, float(np.linalg.norm(quat[1:])))
    qscale = float(np.abs(q).max(initial=0.0))
    real_ok = max_imag <= tol * (1.0 + qscale)
    if np.any(q == 0.0):
        raise IncompatibleDataError("zero cross-ratio: degenerate quad")

    # signs: sign(q_mn) = sign(alpha_m) sign(beta_n), gauge beta_0 > 0
    sign_alpha = np.sign(q[:, 0])
    sign_beta = sign_alpha[0] * np.sign(q[0, :])
    signs_ok = True
    for m in range(m_count):
        for n in range(n_count):
            if np.sign(q[m, n]) != sign_alpha[m] * sign_beta[n]:
                signs_ok = False

    # least squares on logs with beta_0 = 1
    rows = m_count * n_count
    a = np.zeros((rows, m_count + n_count - 1))
    rhs = np.empty(rows)
    for m in range(m_count):
        for n in range(n_count):
            r = m * n_count + n
            a[r, m] = 1.0
            if n > 0:
                a[r, m_count + n - 1] = -1.0
            rhs[r] = np.log(abs(q[m, n]))
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    alpha = sign_alpha * np.exp(sol[:m_count])
    beta = sign_beta * np.exp(np.concatenate([[0.0], sol[m_count:]]))

    residual = float(np.abs(q - alpha[:, None] / beta[None, :]).max())
    factorized = bool(real_ok and signs_ok and residual <= tol * (1.0 + qscale))
    return Factorization(alpha, beta, q, max_imag, residual, factorized)


@dataclass
class QuadDual:
    """Christoffel dual of a quad net with closure and diagonal residuals."""

    points: np.ndarray            # (M+1, N+1, 3)
    closure: np.ndarray           # per quad
    closure_max: float
    diagonal_residual: float      # both diagonal identities
    factorization: Factorization


def quad_dual(net, factorization=None, tol=DEFAULT_REAL_TOL):
    """Integrate the dual net row-major from the origin corner.

    The per-quad closure of the four duality increments certifies the
    factorization; both diagonal identities of the dual quad are also
    evaluated.
    """
    if factorization is None:
        factorization = fit_factorization(net, tol)
    if not factorization.factorized:
        raise IncompatibleDataError(
            "net does not have factorized real cross-ratios "
            f"(residual {factorization.residual:.3e}, "
            f"imag {factorization.max_imag:.3e})"
        )
    alpha, beta = factorization.alpha, factorization.beta
    p = net.points
    m_count, n_count = net.quad_shape

    def hstep(m, n):
        d = p[m + 1, n] - p[m, n]
        return alpha[m] * d / np.dot(d, d)

    def vstep(m, n):
        d = p[m, n + 1] - p[m, n]
        return beta[n] * d / np.dot(d, d)

    dual = np.zeros_like(p)
    for m in range(m_count):
        dual[m + 1, 0] = dual[m, 0] + hstep(m, 0)
    for m in range(m_count + 1):
        for n in range(n_count):
            dual[m, n + 1] = dual[m, n] + vstep(m, n)

    closure = np.empty((m_count, n_count))
    diag_res = 0.0
    for m in range(m_count):
        for n in range(n_count):
            loop = hstep(m, n) + vstep(m + 1, n) - hstep(m, n + 1) - vstep(m, n)
            closure[m, n] = np.linalg.norm(loop)
            a_, b_, c_, d_ = net.quad(m, n)
            da, db, dc, dd = (
                dual[m, n],
                dual[m + 1, n],
                dual[m + 1, n + 1],
                dual[m, n + 1],
            )
            diag1 = c_ - a_
            diag2 = b_ - d_
            diag_res = max(
                diag_res,
                float(
                    np.abs(
                        (db - dd) - (alpha[m] - beta[n]) * diag1 / np.dot(diag1, diag1)
                    ).max()
                ),
                float(
                    np.abs(
                        (dc - da) - (alpha[m] - beta[n]) * diag2 / np.dot(diag2, diag2)
                    ).max()
                ),
            )
    return QuadDual(
        dual, closure, float(closure.max()), diag_res, factorization
    )


# ----------------------------------------------------------------------
# triangulating subdivision with rotation assignment
# ----------------------------------------------------------------------

def diagonal_choices(net, policy):
    """Per-quad diagonal bits from a policy string or an explicit array.

    0 splits along (m,n)-(m+1,n+1), 1 along (m+1,n)-(m,n+1).  Policies:
    ``all-ne``, ``all-nw``, ``alternating``, ``random:<seed>``.
    """
    m_count, n_count = net.quad_shape
    if isinstance(policy, np.ndarray) or isinstance(policy, (list, tuple)):
        bits = np.asarray(policy, dtype=np.int64)
        if bits.shape != (m_count, n_count):
            raise IncompatibleDataError("diagonal array must be (M, N)")
        return bits
    if policy == "all-ne":
        return np.zeros((m_count, n_count), dtype=np.int64)
    if policy == "all-nw":
        return np.ones((m_count, n_count), dtype=np.int64)
    if policy == "alternating":
        m, n = np.meshgrid(
            np.arange(m_count), np.arange(n_count), indexing="ij"
        )
        return ((m + n) % 2).astype(np.int64)
    if isinstance(policy, str) and policy.startswith("random:"):
        seed = int(policy.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        return rng.integers(0, 2, size=(m_count, n_count))
    raise IncompatibleDataError(f"unknown diagonal policy {policy!r}")


@dataclass
class SubdividedNet:
    """Triangulated quad net with the rotation field of its dual."""

    realization: Realization
    z: np.ndarray
    diagonals: np.ndarray
    compatibility_residual: float
    mean_curvature_rates: np.ndarray  # at interior vertices
    quad_edge_rates: dict = field(default_factory=dict)

    def max_mean_curvature_rate(self):
        return float(np.abs(self.mean_curvature_rates).max(initial=0.0))


def subdivide_and_rotate(net, dual=None, diagonals="all-ne", tol=1e-9):
    """Triangulate each quad and assign its triangles rotation vectors.

    With diagonal AC inserted into quad ABCD, triangle ABC receives the
    dual point of B and triangle ACD the dual point of D (each triangle
    takes its private corner's dual).  The assignment is compatible across
    all interior edges, and the induced isometric deformation preserves the
    integrated mean curvature at interior vertices for every diagonal
    pattern.
    """
    if dual is None:
        dual = quad_dual(net)
    bits = diagonal_choices(net, diagonals)
    m_count, n_count = net.quad_shape
    cols = n_count + 1

    def vid(m, n):
        return m * cols + n

    tris = []
    zs = []
    dp = dual.points
    for m in range(m_count):
        for n in range(n_count):
            a, b, c, d = vid(m, n), vid(m + 1, n), vid(m + 1, n + 1), vid(m, n + 1)
            da, db, dc, dd = dp[m, n], dp[m + 1, n], dp[m + 1, n + 1], dp[m, n + 1]
            if bits[m, n] == 0:  # diagonal a-c
                tris.append((a, b, c))
                zs.append(db)
                tris.append((a, c, d))
                zs.append(dd)
            else:  # diagonal b-d
                tris.append((a, b, d))
                zs.append(da)
                tris.append((b, c, d))
                zs.append(dc)
    mesh = SurfaceMesh(tris)
    real = Realization(mesh, net.points.reshape(-1, 3))
    z = np.asarray(zs)

    eint = mesh.interior_edges
    ev = real.edge_vectors[eint]
    lens = real.edge_lengths[eint][:, None]
    dz = z[mesh.edge_face_left[eint]] - z[mesh.edge_face_right[eint]]
    perp = dz - (np.einsum("ij,ij->i", dz, ev) / lens[:, 0] ** 2)[:, None] * ev
    scale = max(float(np.abs(z).max()), 1e-300)
    compat = float((np.linalg.norm(perp, axis=1) / scale).max(initial=0.0))
    if compat > tol:
        raise IncompatibleDataError(
            f"rotation field incompatible (residual {compat:.3e}); "
            "the net is not isothermic to working precision"
        )

    rates = vertex_mean_curvature_rate(real, z)

    # velocities of the original quad edges are diagonal independent:
    # d fdot(edge) = df(edge) x (dual point of either adjacent corner)
    quad_edge_rates = {}
    p = net.points
    for m in range(m_count + 1):
        for n in range(n_count):
            d = p[m, n + 1] - p[m, n]
            quad_edge_rates[(vid(m, n), vid(m, n + 1))] = np.cross(
                d, (dp[m, n] + dp[m, n + 1]) / 2.0
            )
    for m in range(m_count):
        for n in range(n_count + 1):
            d = p[m + 1, n] - p[m, n]
            quad_edge_rates[(vid(m, n), vid(m + 1, n))] = np.cross(
                d, (dp[m, n] + dp[m + 1, n]) / 2.0
            )

    return SubdividedNet(real, z, bits, compat, rates, quad_edge_rates)
