import numpy as np
import pytest

from isoform import IncompatibleDataError, Realization, build_surface
from isoform import generators as gen
from isoform.harmonic import (
    cotan_weights,
    laplacian_residuals,
    operator_matrix,
    solve_dirichlet,
    solve_dirichlet_quotient,
)


def test_two_equilateral_triangles_weight():
    h = np.sqrt(3) / 2
    mesh = build_surface([(0, 1, 2), (1, 0, 3)])
    real = Realization(
        mesh, [[0, 0, 0], [1, 0, 0], [0.5, h, 0], [0.5, -h, 0]]
    )
    w = cotan_weights(real)
    assert w(0, 1) == pytest.approx(2 / np.sqrt(3))


def test_unit_square_diagonal_weight_zero():
    mesh = build_surface([(0, 1, 2), (0, 2, 3)])
    real = Realization(
        mesh, [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    )
    w = cotan_weights(real)
    # opposite angles are both right angles
    assert w(0, 2) == pytest.approx(0.0, abs=1e-15)


def test_obtuse_pair_negative_weight_allowed():
    mesh = build_surface([(0, 1, 2), (1, 0, 3)])
    real = Realization(
        mesh, [[0, 0, 0], [1, 0, 0], [0.5, 0.15, 0], [0.5, -0.15, 0]]
    )
    w = cotan_weights(real)
    assert w(0, 1) < 0  # obtuse opposite angles, no error


def test_weights_symmetric(grid5):
    w = cotan_weights(grid5.realization)
    mesh = grid5.mesh
    for e in range(0, mesh.edge_count, 5):
        i, j = mesh.edges[e]
        assert w(i, j) == w(j, i)


def test_constant_boundary_gives_constant(grid5):
    hf = solve_dirichlet(grid5.realization, lambda p: 3.25)
    assert np.abs(hf.values - 3.25).max() < 1e-12
    assert hf.ok


def test_linear_precision(grid5):
    real = grid5.realization
    f = lambda p: 1.5 * p[0] - 0.75 * p[1] + 0.2
    exact = np.array([f(p) for p in real.positions])
    # the linear function has identically zero residual...
    assert np.abs(laplacian_residuals(real, exact)).max() < 1e-12
    # ...so the SPD solve reproduces it at interior vertices
    hf = solve_dirichlet(real, f)
    assert np.abs(hf.values - exact).max() < 1e-10


def test_maximum_principle_on_grid():
    domain = gen.square_domain(9)
    rng = np.random.default_rng(4)
    vb = domain.mesh.boundary_vertices
    values = {int(v): float(rng.uniform(-1, 1)) for v in vb}
    hf = solve_dirichlet(domain.realization, values)
    lo, hi = min(values.values()), max(values.values())
    interior = hf.values[domain.mesh.interior_vertices]
    assert interior.min() >= lo - 1e-12
    assert interior.max() <= hi + 1e-12


def test_operator_symmetry(grid5, rng):
    mat = operator_matrix(grid5.realization)
    u = rng.standard_normal(grid5.mesh.vertex_count)
    v = rng.standard_normal(grid5.mesh.vertex_count)
    assert abs(u @ (mat @ v) - v @ (mat @ u)) < 1e-12


def test_no_boundary_rejected(tetra):
    with pytest.raises(IncompatibleDataError):
        solve_dirichlet(tetra, lambda p: 0.0)


def test_enneper_boundary_data(grid5):
    hf = solve_dirichlet(grid5.realization, lambda p: p[0] * p[1])
    assert hf.ok
    # xy is harmonic on the grid; residual of the exact xy function vanishes
    pos = grid5.realization.positions
    assert (
        np.abs(laplacian_residuals(grid5.realization, pos[:, 0] * pos[:, 1])).max()
        < 1e-13
    )


def test_quotient_solve_radial_symmetry():
    domain = gen.cut_annulus(0.5, 1.0, 4, 16)
    values = {
        int(v): float(np.log(domain.r[v])) for v in domain.ring_vertices
    }
    lows = {low for low, _ in domain.seam_pairs}
    highs = {high for _, high in domain.seam_pairs}
    dirichlet = {v: val for v, val in values.items() if v not in highs}
    hf = solve_dirichlet_quotient(
        domain.realization, domain.seam_pairs, dirichlet, period=0.0
    )
    u = hf.values.reshape(5, 17)
    assert np.ptp(u, axis=1).max() < 1e-12  # exactly radial
    assert hf.max_residual < 1e-12


def test_quotient_solve_with_period():
    domain = gen.cut_annulus(0.5, 1.0, 3, 12)
    highs = {high for _, high in domain.seam_pairs}
    dirichlet = {
        int(v): float(domain.theta[v])
        for v in domain.ring_vertices
        if v not in highs
    }
    hf = solve_dirichlet_quotient(
        domain.realization, domain.seam_pairs, dirichlet, period=2 * np.pi
    )
    for low, high in domain.seam_pairs:
        assert hf.values[high] - hf.values[low] == pytest.approx(2 * np.pi)
    assert hf.max_residual < 1e-10
