"""Oriented triangulated-surface combinatorics.

A :class:`SurfaceMesh` is a finite simplicial 2-complex whose underlying
space is a connected 2-manifold, with or without boundary.  Construction
validates the complex (manifold edges, disk/fan vertex links, connectivity),
establishes a coherent orientation by breadth-first re-winding, and derives
the half-edge structure, the undirected edge list, interior/boundary
classification and boundary loops used by every other module.

Conventions
-----------
* Undirected edges are stored as pairs ``(i, j)`` with ``i < j``; this is the
  *canonical* direction of the edge.
* The *left* face of the canonical edge is the face containing the directed
  half-edge ``i -> j``, the *right* face contains ``j -> i``.
* The dual edge of an interior edge is oriented from the right face to the
  left face, so that a face function ``Z`` has exterior derivative
  ``dZ = Z_left - Z_right`` on the canonical direction.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import MeshTopologyError


class SurfaceMesh:
    """Validated, coherently oriented triangulated surface.

    Parameters
    ----------
    triangles : array_like
        Sequence of vertex triples.  Windings may be inconsistent; they are
        made coherent by a breadth-first sweep starting from face 0 (the
        winding of face 0 is kept).
    vertex_count : int, optional
        Number of vertices.  Defaults to ``max(triangles) + 1``; every vertex
        must appear in some triangle.

    Raises
    ------
    MeshTopologyError
        For non-manifold edges (three or more incident faces), duplicate or
        degenerate triangles, non-orientable complexes, disconnected
        complexes, unused vertices, or vertex links that are neither disks
        nor fans.
    """

    def __init__(self, triangles, vertex_count=None):
        tri = np.asarray(triangles, dtype=np.int64)
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise MeshTopologyError("triangles must be an (F, 3) array of vertex ids")
        if tri.shape[0] == 0:
            raise MeshTopologyError("empty triangle list")
        if tri.min() < 0:
            raise MeshTopologyError("negative vertex id")
        n_seen = int(tri.max()) + 1
        if vertex_count is None:
            vertex_count = n_seen
        elif vertex_count < n_seen:
            raise MeshTopologyError("vertex_count smaller than largest referenced id")

        for f, (a, b, c) in enumerate(tri):
            if a == b or b == c or c == a:
                raise MeshTopologyError(f"face {f} repeats a vertex: {(a, b, c)}")
        face_keys = {}
        for f in range(tri.shape[0]):
            key = tuple(sorted(tri[f]))
            if key in face_keys:
                raise MeshTopologyError(
                    f"faces {face_keys[key]} and {f} share all three vertices "
                    "(doubled face / doubled edges)"
                )
            face_keys[key] = f

        used = np.zeros(vertex_count, dtype=bool)
        used[tri.ravel()] = True
        if not used.all():
            missing = np.flatnonzero(~used)
            raise MeshTopologyError(
                f"vertices {missing.tolist()} are not used by any face "
                "(disconnected complex)"
            )

        tri = self._orient_coherently(tri)

        self.triangles = tri
        self.vertex_count = int(vertex_count)
        self.face_count = tri.shape[0]
        self._build_halfedges()
        self._classify()
        self._check_vertex_links()
        self._build_boundary_loops()
        self._finalize_counts()

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------

    @staticmethod
    def _orient_coherently(tri):
        """Re-wind faces by BFS so adjacent faces induce opposite directions
        on their shared edge.  Raises for non-manifold, non-orientable or
        face-disconnected inputs."""
        nf = tri.shape[0]
        edge_faces = {}
        for f in range(nf):
            a, b, c = tri[f]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                edge_faces.setdefault(key, []).append(f)
        for key, faces in edge_faces.items():
            if len(faces) > 2:
                raise MeshTopologyError(
                    f"edge {key} belongs to {len(faces)} faces (non-manifold)"
                )

        def direction(f, key):
            # +1 if face f (as currently wound) traverses key as (min -> max)
            a, b, c = tri[f]
            for u, v in ((a, b), (b, c), (c, a)):
                if (min(u, v), max(u, v)) == key:
                    return 1 if (u, v) == key else -1
            raise AssertionError("edge not in face")

        flip = np.zeros(nf, dtype=np.int8)  # 0 unvisited, +1 keep, -1 flip
        flip[0] = 1
        queue = deque([0])
        visited = 1
        while queue:
            f = queue.popleft()
            a, b, c = tri[f]
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                for g in edge_faces[key]:
                    if g == f:
                        continue
                    # coherent <=> effective directions are opposite
                    want = -flip[f] * direction(f, key) * direction(g, key)
                    if flip[g] == 0:
                        flip[g] = want
                        visited += 1
                        queue.append(g)
                    elif flip[g] != want:
                        raise MeshTopologyError("complex is not orientable")
        if visited != nf:
            raise MeshTopologyError("complex is not connected (face adjacency)")

        out = tri.copy()
        swap = flip == -1
        out[swap, 1], out[swap, 2] = tri[swap, 2], tri[swap, 1]
        return out

    def _build_halfedges(self):
        tri = self.triangles
        nf = self.face_count
        nh = 3 * nf
        self.he_src = np.empty(nh, dtype=np.int64)
        self.he_dst = np.empty(nh, dtype=np.int64)
        for k in range(3):
            self.he_src[k::3] = tri[:, k]
            self.he_dst[k::3] = tri[:, (k + 1) % 3]
        self.he_face = np.repeat(np.arange(nf, dtype=np.int64), 3)
        base = 3 * self.he_face
        self.he_next = base + (np.arange(nh) - base + 1) % 3

        directed = {}
        for h in range(nh):
            key = (int(self.he_src[h]), int(self.he_dst[h]))
            if key in directed:
                # two faces inducing the same direction survive orientation
                # BFS only on non-orientable input
                raise MeshTopologyError("complex is not orientable")
            directed[key] = h
        self.he_twin = np.full(nh, -1, dtype=np.int64)
        for (u, v), h in directed.items():
            self.he_twin[h] = directed.get((v, u), -1)

        # canonical (i < j) undirected edges
        edge_index = {}
        edges = []
        he_fwd = []
        he_bwd = []
        for h in range(nh):
            u, v = int(self.he_src[h]), int(self.he_dst[h])
            key = (min(u, v), max(u, v))
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
                he_fwd.append(-1)
                he_bwd.append(-1)
            if (u, v) == key:
                he_fwd[e] = h
            else:
                he_bwd[e] = h
        self.edges = np.array(edges, dtype=np.int64)
        self.edge_count = len(edges)
        self._edge_index = edge_index
        self.edge_he_fwd = np.array(he_fwd, dtype=np.int64)
        self.edge_he_bwd = np.array(he_bwd, dtype=np.int64)
        self.he_edge = np.empty(nh, dtype=np.int64)
        self.he_edge_sign = np.empty(nh, dtype=np.int64)
        for e in range(self.edge_count):
            if self.edge_he_fwd[e] >= 0:
                self.he_edge[self.edge_he_fwd[e]] = e
                self.he_edge_sign[self.edge_he_fwd[e]] = 1
            if self.edge_he_bwd[e] >= 0:
                self.he_edge[self.edge_he_bwd[e]] = e
                self.he_edge_sign[self.edge_he_bwd[e]] = -1

    def _classify(self):
        fwd, bwd = self.edge_he_fwd, self.edge_he_bwd
        interior = (fwd >= 0) & (bwd >= 0)
        self.is_interior_edge = interior
        self.interior_edges = np.flatnonzero(interior)
        self.boundary_edges = np.flatnonzero(~interior)
        self.interior_edge_count = int(interior.sum())
        self.edge_interior_pos = np.full(self.edge_count, -1, dtype=np.int64)
        self.edge_interior_pos[self.interior_edges] = np.arange(
            self.interior_edge_count
        )

        # left/right faces of the canonical direction (−1 on that side of a
        # boundary edge)
        self.edge_face_left = np.where(fwd >= 0, self.he_face[fwd], -1)
        self.edge_face_right = np.where(bwd >= 0, self.he_face[bwd], -1)

        # third vertex of the left/right face ("apex"), −1 if missing
        def apex(he):
            out = np.full(self.edge_count, -1, dtype=np.int64)
            mask = he >= 0
            out[mask] = self.he_dst[self.he_next[he[mask]]]
            return out

        self.edge_apex_left = apex(fwd)
        self.edge_apex_right = apex(bwd)

        bvert = np.zeros(self.vertex_count, dtype=bool)
        for e in self.boundary_edges:
            bvert[self.edges[e, 0]] = True
            bvert[self.edges[e, 1]] = True
        self.is_boundary_vertex = bvert
        self.boundary_vertices = np.flatnonzero(bvert)
        self.interior_vertices = np.flatnonzero(~bvert)
        self.vertex_interior_pos = np.full(self.vertex_count, -1, dtype=np.int64)
        self.vertex_interior_pos[self.interior_vertices] = np.arange(
            len(self.interior_vertices)
        )

        # per-vertex incident edges: list of (edge id, sign, neighbour)
        stars = [[] for _ in range(self.vertex_count)]
        for e, (i, j) in enumerate(self.edges):
            stars[i].append((e, 1, int(j)))
            stars[j].append((e, -1, int(i)))
        self.vertex_edges = stars

    def _check_vertex_links(self):
        """Every vertex link must be a single disk (interior) or fan (boundary)."""
        out_he = [[] for _ in range(self.vertex_count)]
        for h in range(3 * self.face_count):
            out_he[self.he_src[h]].append(h)
        face_count_at = np.zeros(self.vertex_count, dtype=np.int64)
        for f in range(self.face_count):
            for v in self.triangles[f]:
                face_count_at[v] += 1

        def prev(h):
            return self.he_next[self.he_next[h]]

        for v in range(self.vertex_count):
            h0 = out_he[v][0]
            seen = {self.he_face[h0]}
            h = h0
            while True:  # rotate one way
                t = self.he_twin[prev(h)]
                if t == -1 or t == h0:
                    break
                h = t
                seen.add(self.he_face[h])
            if self.he_twin[prev(h)] != h0:  # hit a boundary: rotate back too
                h = h0
                while self.he_twin[h] != -1:
                    h = self.he_next[self.he_twin[h]]
                    seen.add(self.he_face[h])
            if len(seen) != face_count_at[v]:
                raise MeshTopologyError(
                    f"vertex {v} has a bad link (not a single disk or fan)"
                )

    def _build_boundary_loops(self):
        # the missing direction of each boundary edge, keyed by its source
        succ = {}
        for e in self.boundary_edges:
            h = self.edge_he_fwd[e] if self.edge_he_fwd[e] >= 0 else self.edge_he_bwd[e]
            u, v = int(self.he_src[h]), int(self.he_dst[h])
            succ[v] = u  # traverse v -> u, surface on the left
        loops = []
        remaining = set(succ)
        while remaining:
            start = min(remaining)
            loop = [start]
            remaining.discard(start)
            v = succ[start]
            while v != start:
                loop.append(v)
                remaining.discard(v)
                v = succ[v]
            loops.append(loop)
        self.boundary_loops = loops

    def _finalize_counts(self):
        self.chi = self.vertex_count - self.edge_count + self.face_count
        self.is_closed = len(self.boundary_edges) == 0
        self.genus = (2 - self.chi) // 2 if self.is_closed else None
        # combinatorial identity for triangulated surfaces:
        # |E_int| - 3 |V_int| = |V_b| - 3 chi
        lhs = self.interior_edge_count - 3 * len(self.interior_vertices)
        rhs = len(self.boundary_vertices) - 3 * self.chi
        if lhs != rhs:
            raise MeshTopologyError(
                f"edge/vertex count identity violated ({lhs} != {rhs}); "
                "the complex is not a valid triangulated surface"
            )

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def edge_id(self, i, j):
        """Undirected edge id of ``{i, j}``, or ``None`` if absent."""
        return self._edge_index.get((min(i, j), max(i, j)))

    def vertex_star_faces(self, v):
        """Faces around ``v`` in cyclic walk order.

        For an interior vertex the cycle is closed; for a boundary vertex the
        fan runs from one boundary edge to the other.
        """
        out = [h for h in range(3 * self.face_count) if self.he_src[h] == v]
        h0 = min(out)
        if self.is_boundary_vertex[v]:
            # rewind to the fan start
            h = h0
            while self.he_twin[h] != -1:
                h = self.he_next[self.he_twin[h]]
                if h == h0:
                    break
            h0 = h
        faces = [int(self.he_face[h0])]
        h = h0

        def prev(k):
            return self.he_next[self.he_next[k]]

        while True:
            t = self.he_twin[prev(h)]
            if t == -1 or t == h0:
                break
            h = t
            faces.append(int(self.he_face[h]))
        return faces

    def reversed_orientation(self):
        """A copy of the mesh with every face winding flipped."""
        tri = self.triangles[:, [0, 2, 1]]
        return SurfaceMesh(tri, self.vertex_count)

    def report(self):
        """Summary dict used by the JSON mesh-report schema."""
        return {
            "chi": self.chi,
            "genus": self.genus,
            "counts": {
                "vertices": self.vertex_count,
                "edges": self.edge_count,
                "faces": self.face_count,
                "interior_vertices": int(len(self.interior_vertices)),
                "boundary_vertices": int(len(self.boundary_vertices)),
                "interior_edges": int(self.interior_edge_count),
                "boundary_edges": int(len(self.boundary_edges)),
            },
            "boundary_loops": [len(loop) for loop in self.boundary_loops],
        }

    def __repr__(self):
        kind = "closed" if self.is_closed else f"{len(self.boundary_loops)}-boundary"
        return (
            f"SurfaceMesh(V={self.vertex_count}, E={self.edge_count}, "
            f"F={self.face_count}, chi={self.chi}, {kind})"
        )


def build_surface(triangles, vertex_count=None):
    """Validate a triangle list and build the derived structure.

    Thin functional wrapper around :class:`SurfaceMesh`.
    """
    return SurfaceMesh(triangles, vertex_count)
