"""Christoffel duality and the discrete minimal surface pipeline.

A Christoffel dual of a realization ``f`` is a face function ``f*`` whose
dual edges are parallel to the primal edges and whose pairing
``sum_j <df, df*>`` vanishes at interior vertices.  When ``f`` lies on the
unit sphere, ``f*`` is a discrete minimal surface with Gauss map ``f`` (a
reciprocal-parallel mesh of the inscribed surface).

The constructive pipeline starts from a planar triangulated domain and a
discrete harmonic function ``u``:

    solve Dirichlet -> normal deformation (u N) -> tau = dZ
        -> transport tau through a stereographic chain -> integrate f*.

``tau = dZ`` is exact by construction, so the defining equations hold up to
the harmonic residual; inversion transport preserves them; and the dual
integration is gauged by a deterministic spanning tree.  On a cut annulus
the harmonic solve identifies the seam copies up to a fixed additive period
(0 for ``log r``, ``2 pi`` for ``arg z``), which keeps the data exactly
equivariant under the deck rotation; the resulting translational period of
``f*`` across the seam is reported, and is the expected behaviour for
helicoid-type data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deform import harmonic_normal_deformation
from .errors import IncompatibleDataError
from .fileio import write_obj
from .forms import DualOneForm, d_face_function, integrate_dual
from .harmonic import solve_dirichlet, solve_dirichlet_quotient
from .isothermic import stress_residuals
from .moebius import stereographic, transport_stress


@dataclass
class MinimalSurface:
    """A Christoffel dual with its source (Gauss map) and residual report."""

    gauss: object                  # Realization on the unit sphere
    dual_positions: np.ndarray     # f* per face
    closure_residual: float
    parallelism_max_angle: float
    duality_sum_max: float
    sphere_deviation: float
    seam_period: np.ndarray = None
    seam_period_spread: float = None
    provenance: dict = field(default_factory=dict)

    @property
    def mesh(self):
        return self.gauss.mesh

    def dual_cells(self):
        """Dual polygons around interior vertices (closed cells only)."""
        mesh = self.mesh
        return [
            (int(v), mesh.vertex_star_faces(v)) for v in mesh.interior_vertices
        ]

    def write_dual_obj(self, target, comment=None):
        """Write ``f*`` with one polygon per interior primal vertex.

        Boundary dual cells are open and therefore omitted.
        """
        cells = [faces for _, faces in self.dual_cells()]
        write_obj(target, self.dual_positions, cells, comment=comment)


def christoffel_dual(gauss, tau, root_face=0, provenance=None):
    """Integrate a dual 1-form into a Christoffel dual / minimal surface.

    ``tau`` must satisfy the defining equations on ``gauss`` (closed,
    parallel to ``df``, vanishing pairing); a zero form is rejected since a
    Christoffel dual is non-constant by definition.  Residuals of closure,
    reciprocal parallelism and the vertex duality sums are all recorded.
    """
    mesh = gauss.mesh
    if not isinstance(tau, DualOneForm):
        tau = DualOneForm(mesh, tau)
    if not tau.is_vector_valued:
        raise IncompatibleDataError("tau must be vector valued")
    scale = float(np.abs(tau.values).max(initial=0.0))
    if scale == 0.0:
        raise IncompatibleDataError(
            "tau vanishes identically; the dual would be constant"
        )
    dual, report = integrate_dual(mesh, tau, root_face)
    parallel = reciprocal_parallel_deviation(gauss, dual)
    duality = duality_sums(gauss, dual)
    radii = np.linalg.norm(gauss.positions, axis=1)
    return MinimalSurface(
        gauss=gauss,
        dual_positions=dual,
        closure_residual=report.closure_max,
        parallelism_max_angle=parallel[0],
        duality_sum_max=float(np.abs(duality).max(initial=0.0)),
        sphere_deviation=float(np.abs(radii - 1.0).max()),
        provenance=provenance or {},
    )


def reciprocal_parallel_deviation(gauss, dual_positions, length_tol=1e-12):
    """(max line angle between dual and primal edges, #skipped zero edges).

    Dual edges shorter than ``length_tol`` times the longest dual edge are
    treated as zero (vanishing stress leaves only rounding noise in their
    direction); they are skipped and counted instead of polluting the max.
    """
    mesh = gauss.mesh
    eint = mesh.interior_edges
    dstar = (
        dual_positions[mesh.edge_face_left[eint]]
        - dual_positions[mesh.edge_face_right[eint]]
    )
    ev = gauss.edge_vectors[eint]
    nd = np.linalg.norm(dstar, axis=1)
    ne = np.linalg.norm(ev, axis=1)
    scale = float(nd.max(initial=0.0))
    keep = nd > length_tol * max(scale, 1e-300)
    skipped = int((~keep).sum())
    if not keep.any():
        return 0.0, skipped
    cross = np.linalg.norm(np.cross(dstar[keep], ev[keep]), axis=1)
    dot = np.abs(np.einsum("ij,ij->i", dstar[keep], ev[keep]))
    angles = np.arctan2(cross, dot)  # line angle, mod pi
    return float(angles.max(initial=0.0)), skipped


def duality_sums(gauss, dual_positions):
    """``sum_j <df(e_ij), df*(e*_ij)>`` per interior vertex."""
    mesh = gauss.mesh
    eint = mesh.interior_edges
    dstar = (
        dual_positions[mesh.edge_face_left[eint]]
        - dual_positions[mesh.edge_face_right[eint]]
    )
    pairing = np.einsum("ij,ij->i", gauss.edge_vectors[eint], dstar)
    out = np.zeros(len(mesh.interior_vertices))
    for row, v in enumerate(mesh.interior_vertices):
        for e, _, _ in mesh.vertex_edges[v]:
            out[row] += pairing[mesh.edge_interior_pos[e]]
    return out


def reciprocal_parallel_check(gauss, surface):
    """Re-measure the parallelism of a built surface (degenerate edges skipped)."""
    return reciprocal_parallel_deviation(gauss, surface.dual_positions)


@dataclass
class WeierstrassResult:
    surface: MinimalSurface
    u: np.ndarray
    harmonic_residual: float
    plane_residuals: dict
    transport_residuals: dict
    stereographic_chain: object


def weierstrass(domain, boundary_values, plane_scale=1.0, tol=1e-10):
    """Planar domain + harmonic boundary data -> discrete minimal surface.

    ``domain`` is a :class:`~isoform.generators.PlanarDomain`.
    ``boundary_values`` may be a dict keyed by vertex id, an array over all
    vertices, or a callable of the position; values are read on the
    domain's Dirichlet boundary.  On a cut annulus the seam copies are
    identified up to the additive period inferred from the data (which must
    be constant along the seam), the solve runs on the quotient, and the
    seam period of the dual surface is reported.
    """
    real = domain.realization
    if domain.seam_pairs:
        u, _ = _solve_seam(domain, boundary_values, tol)
        harmonic_residual = float(np.abs(u_residuals(real, u)).max(initial=0.0))
    else:
        hf = solve_dirichlet(real, boundary_values, tol)
        u = hf.values
        harmonic_residual = hf.max_residual

    field_ = harmonic_normal_deformation(real, u)
    tau_plane = d_face_function(real.mesh, field_.z)
    k_plane = _stress_of(real, tau_plane)
    plane_res = stress_residuals(real, k_plane)

    _, chain = stereographic(real, plane_scale=plane_scale)
    sphere, k_sphere, amplification = transport_stress(real, k_plane, chain)
    transported = stress_residuals(sphere, k_sphere)
    transported["amplification"] = amplification

    mesh = real.mesh
    tau_sphere = DualOneForm(
        mesh, k_sphere[:, None] * sphere.edge_vectors[mesh.interior_edges]
    )
    surface = christoffel_dual(
        sphere,
        tau_sphere,
        provenance={
            "domain": mesh.report(),
            "plane_scale": plane_scale,
            "tolerance": tol,
        },
    )
    if domain.seam_pairs:
        per, spread = _seam_period(domain, surface.dual_positions, tau_sphere)
        surface.seam_period = per
        surface.seam_period_spread = spread
    return WeierstrassResult(
        surface=surface,
        u=u,
        harmonic_residual=harmonic_residual,
        plane_residuals=plane_res,
        transport_residuals=transported,
        stereographic_chain=chain,
    )


def u_residuals(realization, u):
    from .harmonic import laplacian_residuals

    return laplacian_residuals(realization, u)


def _stress_of(realization, tau):
    """Recover edge scalars from a form parallel to ``df`` (tau = k df)."""
    mesh = realization.mesh
    eint = mesh.interior_edges
    ev = realization.edge_vectors[eint]
    k = np.einsum("ij,ij->i", tau.values, ev) / realization.edge_lengths[eint] ** 2
    residual = np.abs(tau.values - k[:, None] * ev).max(initial=0.0)
    scale = max(float(np.abs(tau.values).max(initial=0.0)), 1e-300)
    if residual > 1e-9 * scale:
        raise IncompatibleDataError(
            f"form is not parallel to the edges (defect {residual:.3e})"
        )
    return k


def _boundary_dict(domain, boundary_values):
    real = domain.realization
    ring = domain.ring_vertices
    if callable(boundary_values):
        return {int(v): float(boundary_values(real.positions[v])) for v in ring}
    if isinstance(boundary_values, dict):
        return {int(v): float(boundary_values[int(v)]) for v in ring}
    arr = np.asarray(boundary_values, dtype=np.float64)
    if arr.shape != (real.mesh.vertex_count,):
        raise IncompatibleDataError(
            "boundary data must cover all vertices or be a dict/callable"
        )
    return {int(v): float(arr[v]) for v in ring}


def _solve_seam(domain, boundary_values, tol):
    values = _boundary_dict(domain, boundary_values)
    periods = []
    for low, high in domain.seam_pairs:
        if low in values and high in values:
            periods.append(values[high] - values[low])
    if not periods:
        period = 0.0
    else:
        period = float(np.mean(periods))
        if np.ptp(periods) > 1e-9 * (1.0 + abs(period)):
            raise IncompatibleDataError(
                "boundary data has a non-constant jump along the seam"
            )
    # keep only low-copy keys; the quotient solver offsets the high copies
    dirichlet = {
        v: val
        for v, val in values.items()
        if v not in {high for _, high in domain.seam_pairs}
    }
    hf = solve_dirichlet_quotient(
        domain.realization, domain.seam_pairs, dirichlet, period, tol
    )
    return hf.values, period


def _seam_period(domain, dual_positions, tau):
    """Translation of ``f*`` across the seam (per seam-adjacent face pair).

    For each interior seam segment the two faces flanking it in the uncut
    annulus sit on opposite sides of the cut; the difference of their dual
    positions, corrected by the value ``tau`` would assign to the crossing,
    is the period vector.  Returns ``(mean period, max spread)``.
    """
    mesh = domain.realization.mesh
    # seam edges on the low side: edges between consecutive low seam copies
    lows = [low for low, _ in domain.seam_pairs]
    highs = [high for _, high in domain.seam_pairs]
    periods = []
    for n in range(len(lows) - 1):
        e_low = mesh.edge_id(lows[n], lows[n + 1])
        e_high = mesh.edge_id(highs[n], highs[n + 1])
        if e_low is None or e_high is None:
            continue
        f_low = mesh.edge_face_left[e_low]
        if f_low < 0:
            f_low = mesh.edge_face_right[e_low]
        f_high = mesh.edge_face_left[e_high]
        if f_high < 0:
            f_high = mesh.edge_face_right[e_high]
        # crossing the seam from the high-side face to the low-side face
        periods.append(dual_positions[f_low] - dual_positions[f_high])
    if not periods:
        return np.zeros(3), 0.0
    periods = np.asarray(periods)
    mean = periods.mean(axis=0)
    spread = float(np.linalg.norm(periods - mean, axis=1).max(initial=0.0))
    return mean, spread
