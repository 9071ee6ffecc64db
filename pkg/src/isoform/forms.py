"""Primal and dual discrete 1-forms, closedness tests, and integration.

Primal 1-forms live on oriented edges and are antisymmetric under
orientation reversal; we store one value per canonical edge ``(i, j)``,
``i < j``.  Dual 1-forms live on oriented dual edges of *interior* edges;
the stored value is for the dual edge oriented from the right face of the
canonical direction to the left face.

Closedness of a primal form is a per-face condition (edge values around
every face sum to zero); closedness of a dual form is a per-interior-vertex
condition.  Exact forms (``df`` of a vertex function, ``dZ`` of a face
function) are closed identically.  Integration inverts ``d`` along a
deterministic spanning tree, reporting the residual on non-tree edges; on a
simply connected mesh a closed form integrates with zero residual, while a
nonzero residual exposes the periods of the form.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleDataError


def _check_values(mesh, values, count, what):
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != count or values.ndim not in (1, 2):
        raise IncompatibleDataError(
            f"{what} values must have leading dimension {count}, got {values.shape}"
        )
    if values.ndim == 2 and values.shape[1] != 3:
        raise IncompatibleDataError(f"{what} vector values must be 3d")
    return values


class PrimalOneForm:
    """Scalar- or vector-valued 1-form on oriented edges."""

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = _check_values(mesh, values, mesh.edge_count, "primal 1-form")

    @property
    def is_vector_valued(self):
        return self.values.ndim == 2

    def __call__(self, i, j):
        """Value on the oriented edge ``i -> j``."""
        e = self.mesh.edge_id(i, j)
        if e is None:
            raise IncompatibleDataError(f"no edge between {i} and {j}")
        sign = 1.0 if i < j else -1.0
        return sign * self.values[e]

    def face_sums(self):
        """Per-face sum of the three oriented edge values."""
        mesh = self.mesh
        signed = self.values[mesh.he_edge]
        if self.is_vector_valued:
            signed = signed * mesh.he_edge_sign[:, None]
            return signed.reshape(mesh.face_count, 3, 3).sum(axis=1)
        signed = signed * mesh.he_edge_sign
        return signed.reshape(mesh.face_count, 3).sum(axis=1)

    def closedness(self):
        """(per-face residual magnitudes, max residual)."""
        sums = self.face_sums()
        mags = np.abs(sums) if sums.ndim == 1 else np.linalg.norm(sums, axis=1)
        return mags, float(mags.max(initial=0.0))


class DualOneForm:
    """Scalar- or vector-valued 1-form on oriented interior dual edges."""

    def __init__(self, mesh, values):
        self.mesh = mesh
        self.values = _check_values(
            mesh, values, mesh.interior_edge_count, "dual 1-form"
        )

    @property
    def is_vector_valued(self):
        return self.values.ndim == 2

    def __call__(self, i, j):
        """Value on the dual edge of ``i -> j`` (right face to left face)."""
        mesh = self.mesh
        e = mesh.edge_id(i, j)
        if e is None or mesh.edge_interior_pos[e] < 0:
            raise IncompatibleDataError(f"no interior edge between {i} and {j}")
        sign = 1.0 if i < j else -1.0
        return sign * self.values[mesh.edge_interior_pos[e]]

    def vertex_sums(self):
        """Sum of outgoing dual-edge values around each interior vertex."""
        mesh = self.mesh
        shape = (len(mesh.interior_vertices), 3) if self.is_vector_valued else (
            len(mesh.interior_vertices),
        )
        out = np.zeros(shape)
        for row, v in enumerate(mesh.interior_vertices):
            for e, sign, _ in mesh.vertex_edges[v]:
                out[row] += sign * self.values[mesh.edge_interior_pos[e]]
        return out

    def closedness(self):
        """(per-interior-vertex residual magnitudes, max residual)."""
        sums = self.vertex_sums()
        mags = np.abs(sums) if sums.ndim == 1 else np.linalg.norm(sums, axis=1)
        return mags, float(mags.max(initial=0.0))


def d_vertex_function(mesh, g):
    """Exterior derivative of a vertex function: ``df(e_ij) = g_j - g_i``."""
    g = np.asarray(g, dtype=np.float64)
    return PrimalOneForm(mesh, g[mesh.edges[:, 1]] - g[mesh.edges[:, 0]])

def d_face_function(mesh, z):
    """Dual exterior derivative of a face function: ``Z_left - Z_right``."""
    z = np.asarray(z, dtype=np.float64)
    left = mesh.edge_face_left[mesh.interior_edges]
    right = mesh.edge_face_right[mesh.interior_edges]
    return DualOneForm(mesh, z[left] - z[right])


@dataclass
class SpanningTree:
    """Rooted spanning tree; ``parent_edge[n]`` joins ``n`` to ``parent[n]``."""

    root: int
    order: np.ndarray       # nodes in BFS visit order (root first)
    parent: np.ndarray      # -1 at root
    parent_edge: np.ndarray  # mesh edge id, -1 at root
    non_tree_edges: np.ndarray


def dual_spanning_tree(mesh, root=0):
    """BFS tree of the dual graph (faces joined across interior edges).

    Deterministic: neighbours are visited in ascending face order.
    """
    adjacency = [[] for _ in range(mesh.face_count)]
    for e in mesh.interior_edges:
        left = int(mesh.edge_face_left[e])
        right = int(mesh.edge_face_right[e])
        adjacency[left].append((right, int(e)))
        adjacency[right].append((left, int(e)))
    for lst in adjacency:
        lst.sort()
    return _bfs_tree(mesh.face_count, adjacency, root, set(map(int, mesh.interior_edges)))


def vertex_spanning_tree(mesh, root=0):
    """BFS tree of the primal graph, ascending-neighbour order."""
    adjacency = [
        sorted((other, e) for e, _, other in mesh.vertex_edges[v])
        for v in range(mesh.vertex_count)
    ]
    return _bfs_tree(mesh.vertex_count, adjacency, root, set(range(mesh.edge_count)))


def _bfs_tree(n, adjacency, root, edge_pool):
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    order = [root]
    queue = deque([root])
    tree_edges = set()
    while queue:
        node = queue.popleft()
        for nbr, e in adjacency[node]:
            if not seen[nbr]:
                seen[nbr] = True
                parent[nbr] = node
                parent_edge[nbr] = e
                tree_edges.add(e)
                order.append(nbr)
                queue.append(nbr)
    if not seen.all():
        raise IncompatibleDataError("graph is disconnected; cannot build one tree")
    non_tree = np.array(sorted(edge_pool - tree_edges), dtype=np.int64)
    return SpanningTree(root, np.array(order), parent, parent_edge, non_tree)


@dataclass
class IntegrationReport:
    closure_residuals: np.ndarray  # per non-tree edge
    closure_max: float
    non_tree_edges: np.ndarray


def integrate_dual(mesh, tau, root_face=0):
    """Integrate a dual 1-form to a face function along a dual BFS tree.

    Returns ``(Z, report)`` with ``Z[root_face] = 0``.  The report carries
    ``|dZ - tau|`` on every non-tree interior edge; it vanishes exactly when
    ``tau`` is exact (on a simply connected mesh: when it is closed), and
    recovers the periods of a closed-but-inexact form otherwise.
    """
    if not isinstance(tau, DualOneForm):
        tau = DualOneForm(mesh, tau)
    tree = dual_spanning_tree(mesh, root_face)
    shape = (mesh.face_count, 3) if tau.is_vector_valued else (mesh.face_count,)
    z = np.zeros(shape)
    for node in tree.order[1:]:
        e = tree.parent_edge[node]
        val = tau.values[mesh.edge_interior_pos[e]]
        if mesh.edge_face_left[e] == node:
            z[node] = z[tree.parent[node]] + val
        else:
            z[node] = z[tree.parent[node]] - val
    residuals = []
    for e in tree.non_tree_edges:
        dz = z[mesh.edge_face_left[e]] - z[mesh.edge_face_right[e]]
        residuals.append(dz - tau.values[mesh.edge_interior_pos[e]])
    residuals = np.asarray(residuals)
    if residuals.size:
        mags = np.abs(residuals) if residuals.ndim == 1 else np.linalg.norm(
            residuals, axis=1
        )
        closure_max = float(mags.max())
    else:
        mags = np.zeros(0)
        closure_max = 0.0
    return z, IntegrationReport(mags, closure_max, tree.non_tree_edges)


def integrate_primal(mesh, omega, root_vertex=0):
    """Integrate a primal 1-form to a vertex function along a primal tree.

    Returns ``(g, report)`` with ``g[root_vertex] = 0`` and the residual
    ``|dg - omega|`` on non-tree edges.
    """
    if not isinstance(omega, PrimalOneForm):
        omega = PrimalOneForm(mesh, omega)
    tree = vertex_spanning_tree(mesh, root_vertex)
    shape = (mesh.vertex_count, 3) if omega.is_vector_valued else (mesh.vertex_count,)
    g = np.zeros(shape)
    for node in tree.order[1:]:
        e = tree.parent_edge[node]
        val = omega.values[e]
        if mesh.edges[e, 1] == node:
            g[node] = g[tree.parent[node]] + val
        else:
            g[node] = g[tree.parent[node]] - val
    residuals = []
    for e in tree.non_tree_edges:
        dg = g[mesh.edges[e, 1]] - g[mesh.edges[e, 0]]
        residuals.append(dg - omega.values[e])
    residuals = np.asarray(residuals)
    if residuals.size:
        mags = np.abs(residuals) if residuals.ndim == 1 else np.linalg.norm(
            residuals, axis=1
        )
        closure_max = float(mags.max())
    else:
        mags = np.zeros(0)
        closure_max = 0.0
    return g, IntegrationReport(mags, closure_max, tree.non_tree_edges)
