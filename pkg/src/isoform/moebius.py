"""Sphere inversion, Möbius maps, and inversive-geometry measurements.

Points of R^3 lift to the Minkowski light cone in R^5 (signature
``++++-``); Möbius transformations act linearly there.  A
:class:`MoebiusMap` is a chain of primitives (translate, rotate, scale,
invert), applied pointwise, together with the corresponding 5x5 Lorentz
matrix whose projective action agrees with the chain.  The ``invert``
primitive is ``x -> -x / |x|^2`` (inversion composed with the antipode),
which is orientation preserving and matches :func:`invert`.

Self-stress transport: if ``k`` solves the stress equations on ``f``, then
``k |f_i|^2 |f_j|^2`` solves them on the inverted realization, and ``k`` is
unchanged under similarities.  This moves isothermic data through arbitrary
chains, in particular through the stereographic embedding of a plane into
the unit sphere.

Intersection angles of neighbouring circumcircles are computed by sending
one shared vertex to infinity (where both circles become lines); angles of
circumspheres come from normalized Minkowski sphere vectors.  The circle
angle is the oriented intersection angle in ``[0, pi]`` (0 for coplanar
cocircular neighbours); sphere angles are folded to ``[0, pi/2]``, the
unoriented inversive angle, which is what stays strictly Möbius invariant
without an orientation convention for sphere vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRealizationError, IncompatibleDataError
from .geometry import Realization
from .isothermic import light_cone_lift, stress_residuals

MINKOWSKI_DIAG = np.array([1.0, 1.0, 1.0, 1.0, -1.0])


def minkowski_product(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.sum(a * b * MINKOWSKI_DIAG, axis=-1)


# ----------------------------------------------------------------------
# quaternions (plain arrays [w, x, y, z]; used only for cross-checks)
# ----------------------------------------------------------------------

def quat_multiply(a, b):
    aw, ax, ay, az = np.moveaxis(np.asarray(a, float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, float), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_conjugate(q):
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_from_vector(v):
    v = np.asarray(v, dtype=np.float64)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


# ----------------------------------------------------------------------
# inversion and Möbius chains
# ----------------------------------------------------------------------

def invert_positions(points, eps_factor=1e-12):
    points = np.asarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", points, points)
    eps = eps_factor * (1.0 + math.sqrt(float(sq.max(initial=0.0))))
    if np.any(sq < eps**2):
        raise DegenerateRealizationError("a point lies at (or too near) the origin")
    return -points / sq[:, None]


def invert(realization):
    """The realization ``-f / |f|^2`` (combinatorics unchanged)."""
    return Realization(realization.mesh, invert_positions(realization.positions))


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0:
        raise IncompatibleDataError("rotation axis must be nonzero")
    x, y, z = axis / n
    c, s = math.cos(angle), math.sin(angle)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1 - c) * (k @ k)


@dataclass(frozen=True)
class MoebiusMap:
    """A chain of Möbius primitives applied left to right."""

    primitives: tuple = field(default_factory=tuple)

    # -- builders -----------------------------------------------------

    @staticmethod
    def identity():
        return MoebiusMap(())

    @staticmethod
    def translation(t):
        return MoebiusMap((("translate", tuple(float(v) for v in t)),))

    @staticmethod
    def rotation(axis, angle):
        return MoebiusMap((("rotate", rotation_matrix(axis, angle)),))

    @staticmethod
    def scaling(s):
        if s <= 0:
            raise IncompatibleDataError("scale factor must be positive")
        return MoebiusMap((("scale", float(s)),))

    @staticmethod
    def inversion():
        return MoebiusMap((("invert",),))

    def then(self, other):
        return MoebiusMap(self.primitives + other.primitives)

    # -- actions ------------------------------------------------------

    def apply(self, points):
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts).copy()
        for prim in self.primitives:
            if prim[0] == "translate":
                pts = pts + np.asarray(prim[1])
            elif prim[0] == "rotate":
                pts = pts @ np.asarray(prim[1]).T
            elif prim[0] == "scale":
                pts = pts * prim[1]
            elif prim[0] == "invert":
                pts = invert_positions(pts)
            else:
                raise IncompatibleDataError(f"unknown primitive {prim[0]!r}")
        return pts[0] if single else pts

    def apply_realization(self, realization):
        return Realization(realization.mesh, self.apply(realization.positions))

    def lorentz_matrix(self):
        """The 5x5 Lorentz matrix acting projectively on light-cone lifts."""
        mat = np.eye(5)
        for prim in self.primitives:
            mat = _primitive_lorentz(prim) @ mat
        return mat

    def inverse(self):
        out = []
        for prim in reversed(self.primitives):
            if prim[0] == "translate":
                out.append(("translate", tuple(-v for v in prim[1])))
            elif prim[0] == "rotate":
                out.append(("rotate", np.asarray(prim[1]).T))
            elif prim[0] == "scale":
                out.append(("scale", 1.0 / prim[1]))
            else:
                out.append(prim)
        return MoebiusMap(tuple(out))

    # -- parsing ------------------------------------------------------

    @staticmethod
    def parse_chain(text):
        """Parse ``"translate 0 0 2; invert; scale 0.5; rotate 1 0 0 3.14"``."""
        prims = []
        for raw in text.split(";"):
            part = raw.strip()
            if not part:
                continue
            tokens = part.split()
            name, args = tokens[0].lower(), [float(v) for v in tokens[1:]]
            if name == "translate" and len(args) == 3:
                prims.append(("translate", tuple(args)))
            elif name == "rotate" and len(args) == 4:
                prims.append(("rotate", rotation_matrix(args[:3], args[3])))
            elif name == "scale" and len(args) == 1:
                if args[0] <= 0:
                    raise IncompatibleDataError("scale factor must be positive")
                prims.append(("scale", args[0]))
            elif name == "invert" and not args:
                prims.append(("invert",))
            else:
                raise IncompatibleDataError(f"cannot parse chain element {part!r}")
        return MoebiusMap(tuple(prims))


def _primitive_lorentz(prim):
    if prim[0] == "translate":
        t = np.asarray(prim[1], dtype=np.float64)
        tsq = float(t @ t)
        mat = np.eye(5)
        mat[:3, 3] = t
        mat[:3, 4] = t
        mat[3, :3] = -t
        mat[3, 3] = 1.0 - tsq / 2.0
        mat[3, 4] = -tsq / 2.0
        mat[4, :3] = t
        mat[4, 3] = tsq / 2.0
        mat[4, 4] = 1.0 + tsq / 2.0
        return mat
    if prim[0] == "rotate":
        mat = np.eye(5)
        mat[:3, :3] = np.asarray(prim[1])
        return mat
    if prim[0] == "scale":
        s = prim[1]
        mat = np.diag([s, s, s, 0.0, 0.0])
        mat[3, 3] = (1 + s * s) / 2.0
        mat[3, 4] = (1 - s * s) / 2.0
        mat[4, 3] = (1 - s * s) / 2.0
        mat[4, 4] = (1 + s * s) / 2.0
        return mat / s
    if prim[0] == "invert":
        return np.diag([-1.0, -1.0, -1.0, -1.0, 1.0])
    raise IncompatibleDataError(f"unknown primitive {prim[0]!r}")


def random_moebius(rng, avoid_points=None, max_tries=50):
    """A generic Möbius map (rotation, shifts, inversion, scaling).

    When ``avoid_points`` is given the shifts are re-drawn until no point
    comes within 5% of the configuration scale of an inversion centre, so
    transported quantities stay well conditioned.
    """
    pts = None if avoid_points is None else np.asarray(avoid_points, float)
    scale = 1.0 if pts is None else max(1.0, float(np.abs(pts).max()))
    for _ in range(max_tries):
        axis = rng.standard_normal(3)
        angle = rng.uniform(0, 2 * math.pi)
        shift1 = rng.uniform(-1.5, 1.5, size=3) * scale
        shift2 = rng.uniform(-0.5, 0.5, size=3) * scale
        factor = math.exp(rng.uniform(-0.5, 0.5))
        mmap = (
            MoebiusMap.rotation(axis, angle)
            .then(MoebiusMap.translation(shift1))
            .then(MoebiusMap.inversion())
            .then(MoebiusMap.translation(shift2))
            .then(MoebiusMap.scaling(factor))
        )
        if pts is None:
            return mmap
        moved = pts @ rotation_matrix(axis, angle).T + shift1
        if np.linalg.norm(moved, axis=1).min() > 0.05 * scale:
            return mmap
    raise DegenerateRealizationError("could not sample a map avoiding every vertex")


# ----------------------------------------------------------------------
# stress transport
# ----------------------------------------------------------------------

def transport_stress(realization, k, mmap):
    """Carry a self-stress through a Möbius chain.

    Similarities leave ``k`` unchanged; every inversion multiplies it by
    ``|f_i|^2 |f_j|^2`` (positions before that inversion).  Returns the
    transformed realization, the transported stress, and the largest
    amplification factor applied (a conditioning indicator).
    """
    mesh = realization.mesh
    k = np.asarray(k.values if hasattr(k, "values") else k, dtype=np.float64).copy()
    pts = realization.positions.copy()
    amplification = 1.0
    eint = mesh.interior_edges
    for prim in mmap.primitives:
        if prim[0] == "translate":
            pts = pts + np.asarray(prim[1])
        elif prim[0] == "rotate":
            pts = pts @ np.asarray(prim[1]).T
        elif prim[0] == "scale":
            pts = pts * prim[1]
        elif prim[0] == "invert":
            sq = np.einsum("ij,ij->i", pts, pts)
            factors = sq[mesh.edges[eint, 0]] * sq[mesh.edges[eint, 1]]
            k *= factors
            amplification = max(amplification, float(factors.max(initial=0.0)))
            pts = invert_positions(pts)
        else:
            raise IncompatibleDataError(f"unknown primitive {prim[0]!r}")
    return Realization(mesh, pts), k, amplification


def transport_tau(realization, k):
    """Transport ``tau = k df`` through the inversion ``f -> -f/|f|^2``.

    Returns ``(inverted realization, k_tilde, tau_tilde, report)`` where
    ``k_tilde = k |f_i|^2 |f_j|^2`` and the report carries the residuals of
    the defining equations on the inverted realization plus the largest
    amplification factor.
    """
    inverted, k_new, amp = transport_stress(
        realization, k, MoebiusMap.inversion()
    )
    from .forms import DualOneForm

    mesh = realization.mesh
    tau = DualOneForm(
        mesh,
        k_new[:, None] * inverted.edge_vectors[mesh.interior_edges],
    )
    report = stress_residuals(inverted, k_new)
    report["amplification"] = amp
    return inverted, k_new, tau, report


def quaternion_transport_check(realization, k):
    """Cross-check inversion transport against quaternion conjugation.

    Evaluates ``f_i tau(e*_ij) conj(f_j)`` in quaternion arithmetic and
    compares with ``k |f_i|^2 |f_j|^2 df_inv(e_ij)``; returns the largest
    absolute deviation (including any spurious real part).
    """
    mesh = realization.mesh
    k = np.asarray(k.values if hasattr(k, "values") else k, dtype=np.float64)
    eint = mesh.interior_edges
    i = mesh.edges[eint, 0]
    j = mesh.edges[eint, 1]
    pos = realization.positions
    tau_vals = k[:, None] * realization.edge_vectors[eint]

    lhs = quat_multiply(
        quat_from_vector(pos[i]),
        quat_multiply(quat_from_vector(tau_vals), quat_conjugate(quat_from_vector(pos[j]))),
    )

    inv = invert_positions(pos)
    sq = np.einsum("ij,ij->i", pos, pos)
    rhs_vec = (k * sq[i] * sq[j])[:, None] * (inv[j] - inv[i])
    dev_vec = np.abs(lhs[:, 1:] - rhs_vec).max(initial=0.0)
    dev_real = np.abs(lhs[:, 0]).max(initial=0.0)
    return float(max(dev_vec, dev_real))


# ----------------------------------------------------------------------
# stereographic embedding of a plane
# ----------------------------------------------------------------------

def stereographic_map(plane_scale=1.0, radius=1.0):
    """Chain mapping the plane ``z = 0`` onto the sphere ``|x| = radius``.

    The origin goes to the south pole ``(0, 0, -radius)`` and the unit
    circle (after ``plane_scale``) to the equator.  Built from translations,
    one inversion and scalings, so stresses transport through it.
    """
    mmap = MoebiusMap.identity()
    if plane_scale != 1.0:
        mmap = mmap.then(MoebiusMap.scaling(plane_scale))
    mmap = (
        mmap.then(MoebiusMap.translation((0.0, 0.0, -1.0)))
        .then(MoebiusMap.inversion())
        .then(MoebiusMap.scaling(2.0))
        .then(MoebiusMap.translation((0.0, 0.0, -1.0)))
        .then(MoebiusMap.rotation((1.0, 0.0, 0.0), math.pi))
    )
    if radius != 1.0:
        mmap = mmap.then(MoebiusMap.scaling(radius))
    return mmap


def stereographic(realization, plane_scale=1.0, radius=1.0, tol=1e-9):
    """Map a planar (``z = 0``) realization onto a sphere.

    Returns ``(spherical realization, chain)``.
    """
    zmax = float(np.abs(realization.positions[:, 2]).max(initial=0.0))
    if zmax > tol * max(realization.bbox_diagonal, 1.0):
        raise IncompatibleDataError("stereographic input must lie in the z=0 plane")
    mmap = stereographic_map(plane_scale, radius)
    return mmap.apply_realization(realization), mmap


# ----------------------------------------------------------------------
# circumcircle / circumsphere intersection angles
# ----------------------------------------------------------------------

def circumcircle_angle(realization, edge):
    """Intersection angle of the two circumcircles at an interior edge.

    Computed by inverting about one shared vertex, where both circles
    become lines through the image of the other; the angle between the
    consistently-directed lines is Möbius invariant, lies in ``[0, pi]``
    and vanishes for coplanar cocircular neighbours.
    """
    mesh = realization.mesh
    if mesh.edge_interior_pos[edge] < 0:
        raise IncompatibleDataError(f"edge {edge} is not interior")
    i, j = mesh.edges[edge]
    k = mesh.edge_apex_left[edge]
    l = mesh.edge_apex_right[edge]
    p = realization.positions
    return _circle_angle_points(p[i], p[j], p[k], p[l])


def _circle_angle_points(fi, fj, fk, fl):
    def psi(x):
        y = x - fj
        sq = float(y @ y)
        if sq == 0.0:
            raise DegenerateRealizationError("coincident vertices at an edge")
        return y / sq

    ti, tk, tl = psi(fi), psi(fk), psi(fl)
    u = tk - ti
    v = ti - tl
    return float(
        math.atan2(np.linalg.norm(np.cross(u, v)), float(u @ v))
    )


def circumcircle_angles(realization):
    """Array of circumcircle angles over all interior edges."""
    return np.array(
        [circumcircle_angle(realization, e) for e in realization.mesh.interior_edges]
    )


@dataclass
class SphereVector:
    """Normalized Minkowski vector of a sphere or plane through 4 points."""

    vector: np.ndarray
    kind: str          # "sphere" or "plane"
    degenerate: bool   # cocircular quadruple: no unique sphere
    conditioning: float


def circumsphere_vector(points, degeneracy_tol=1e-9):
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape != (4, 3):
        raise IncompatibleDataError("need exactly 4 points")
    lifted = light_cone_lift(pts) * MINKOWSKI_DIAG
    _, s, vt = np.linalg.svd(lifted)
    cond = float(s[3] / s[0]) if s[0] > 0 else 0.0
    if cond < degeneracy_tol:
        return SphereVector(vt[4], "degenerate", True, cond)
    v = vt[4]
    norm_sq = float(minkowski_product(v, v))
    if norm_sq <= 0:
        # numerically impossible for 4 affinely independent real points
        return SphereVector(v, "degenerate", True, cond)
    v = v / math.sqrt(norm_sq)
    kind = "plane" if abs(v[3] + v[4]) < 1e-12 else "sphere"
    return SphereVector(v, kind, False, cond)


def sphere_pairs(mesh):
    """Neighbouring circumsphere pairs: interior edges sharing a face."""
    pairs = []
    for f in range(mesh.face_count):
        es = [
            int(mesh.he_edge[3 * f + c])
            for c in range(3)
            if mesh.edge_interior_pos[mesh.he_edge[3 * f + c]] >= 0
        ]
        es.sort()
        for a in range(len(es)):
            for b in range(a + 1, len(es)):
                pairs.append((es[a], es[b]))
    return pairs


def _edge_quad_ids(mesh, edge):
    i, j = mesh.edges[edge]
    k = mesh.edge_apex_left[edge]
    l = mesh.edge_apex_right[edge]
    return [int(i), int(j), int(k), int(l)]


def _plane_normal_after_inversion(points3, center, tol=1e-9):
    """Unit normal of the plane through the inverted images of 3 points.

    The sphere through ``center`` and the 3 points maps to this plane under
    inversion about ``center``; collinear images (a cocircular quadruple)
    return ``None``.
    """
    img = []
    for p in points3:
        y = p - center
        sq = float(y @ y)
        if sq == 0.0:
            raise DegenerateRealizationError("coincident vertices in a face pair")
        img.append(y / sq)
    u = img[1] - img[0]
    v = img[2] - img[0]
    n = np.cross(u, v)
    nn = np.linalg.norm(n)
    if nn <= tol * np.linalg.norm(u) * np.linalg.norm(v):
        return None
    return n / nn


def circumsphere_angle(realization, edge_a, edge_b):
    """Unoriented inversive angle between two circumspheres in ``[0, pi/2]``.

    Each interior edge determines the sphere through the four vertices of
    its two faces.  When the two quadruples share a vertex (always the case
    for neighbouring pairs) the angle is computed by inverting about it:
    both spheres become planes and the angle comes from their unit normals,
    which is well conditioned and strictly Möbius invariant.  Disjoint
    quadruples fall back to normalized Minkowski sphere vectors.  Returns
    ``(angle, degenerate)``; a cocircular quadruple reports
    ``degenerate = True`` with ``angle = nan`` instead of raising.
    """
    mesh = realization.mesh
    ids_a = _edge_quad_ids(mesh, edge_a)
    ids_b = _edge_quad_ids(mesh, edge_b)
    pos = realization.positions
    shared = sorted(set(ids_a) & set(ids_b))
    if shared:
        w = shared[0]
        rest_a = [v for v in ids_a if v != w][:3]
        rest_b = [v for v in ids_b if v != w][:3]
        na = _plane_normal_after_inversion(pos[rest_a], pos[w])
        nb = _plane_normal_after_inversion(pos[rest_b], pos[w])
        if na is None or nb is None:
            return float("nan"), True
        # atan2 form: absolute accuracy near 0 (acos would turn rounding
        # into sqrt(eps)-sized angles)
        cross = float(np.linalg.norm(np.cross(na, nb)))
        dot = abs(float(na @ nb))
        return float(math.atan2(cross, dot)), False
    qa = pos[ids_a]
    qb = pos[ids_b]
    # similarity-normalize so the light-cone lift stays well conditioned
    both = np.vstack([qa, qb])
    center = both.mean(axis=0)
    scale = max(float(np.linalg.norm(both - center, axis=1).max()), 1e-300)
    sa = circumsphere_vector((qa - center) / scale)
    sb = circumsphere_vector((qb - center) / scale)
    if sa.degenerate or sb.degenerate:
        return float("nan"), True
    c = abs(float(minkowski_product(sa.vector, sb.vector)))
    return float(math.acos(min(c, 1.0))), False


# ----------------------------------------------------------------------
# first-order angle rates
# ----------------------------------------------------------------------

@dataclass
class AngleRateReport:
    items: list
    central: np.ndarray
    central_half: np.ndarray
    richardson: np.ndarray
    max_abs_central: float
    max_abs_richardson: float
    skipped: int
    eps: float


def angle_rate(realization, fdot, which="circles", eps=1e-5, items=None):
    """Central-difference rates of intersection angles along a deformation.

    ``which`` selects circumcircle angles per interior edge, or
    circumsphere angles per neighbouring pair.  Rates are evaluated at
    ``eps`` and ``eps/2`` with a Richardson extrapolation; degenerate
    sphere configurations (at any evaluation point) are skipped and
    counted.
    """
    mesh = realization.mesh
    fdot = np.asarray(fdot, dtype=np.float64)
    if fdot.shape != realization.positions.shape:
        raise IncompatibleDataError("fdot must match the vertex positions")

    if which == "circles":
        if items is None:
            items = [int(e) for e in mesh.interior_edges]

        def values(t):
            r = realization.with_positions(realization.positions + t * fdot)
            return np.array([circumcircle_angle(r, e) for e in items]), np.zeros(
                len(items), dtype=bool
            )

    elif which == "spheres":
        if items is None:
            items = sphere_pairs(mesh)

        def values(t):
            r = realization.with_positions(realization.positions + t * fdot)
            vals = np.empty(len(items))
            bad = np.zeros(len(items), dtype=bool)
            for n, (a, b) in enumerate(items):
                vals[n], bad[n] = circumsphere_angle(r, a, b)
            return vals, bad

    else:
        raise IncompatibleDataError("which must be 'circles' or 'spheres'")

    results = [values(t) for t in (eps, -eps, eps / 2, -eps / 2)]
    bad = np.zeros(len(items), dtype=bool)
    for _, b in results:
        bad |= b
    keep = ~bad
    d1 = (results[0][0] - results[1][0]) / (2 * eps)
    d2 = (results[2][0] - results[3][0]) / eps
    rich = (4 * d2 - d1) / 3.0
    kept_items = [it for it, ok in zip(items, keep) if ok]
    return AngleRateReport(
        items=kept_items,
        central=d1[keep],
        central_half=d2[keep],
        richardson=rich[keep],
        max_abs_central=float(np.abs(d1[keep]).max(initial=0.0)),
        max_abs_richardson=float(np.abs(rich[keep]).max(initial=0.0)),
        skipped=int(bad.sum()),
        eps=eps,
    )


def moebius_velocity(points, translation=None, rotation=None, scaling=0.0, special=None):
    """Velocity field of an infinitesimal Möbius transformation.

    ``translation`` and ``rotation`` are vectors (constant and angular
    velocity), ``scaling`` a scalar, and ``special`` the vector ``b`` of the
    inversion-conjugated translation ``x -> 2 <x, b> x - |x|^2 b``.
    """
    pts = np.asarray(points, dtype=np.float64)
    v = np.zeros_like(pts)
    if translation is not None:
        v += np.asarray(translation, dtype=np.float64)
    if rotation is not None:
        v += np.cross(np.asarray(rotation, dtype=np.float64), pts)
    if scaling:
        v += scaling * pts
    if special is not None:
        b = np.asarray(special, dtype=np.float64)
        sq = np.einsum("ij,ij->i", pts, pts)
        v += 2.0 * (pts @ b)[:, None] * pts - sq[:, None] * b
    return v
