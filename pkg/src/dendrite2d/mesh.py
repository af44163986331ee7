"""Uniform structured triangulation of a rectangle with tagged boundary parts.

The domain is [0, L1] x [0, L2].  The left edge (x = 0) and right edge
(x = L1) are the two Dirichlet segments for the electric potential; the
remaining horizontal edges carry natural boundary conditions.  Corner nodes
belong to the Dirichlet tags so that constraint elimination always wins at
tag junctions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class NodeTag(IntEnum):
    INTERIOR = 0
    GAMMA1 = 1        # x = 0 (includes corners)
    GAMMA2 = 2        # x = L1 (includes corners)
    GAMMA_PRIME = 3   # y = 0 or y = L2, excluding the Dirichlet columns


@dataclass
class Mesh:
    """Structured triangulation, immutable after construction.

    Each grid cell is split into two counterclockwise triangles along the
    bottom-left to top-right diagonal.  Element areas and the constant
    gradients of the three barycentric basis functions are precomputed.
    """

    nodes: np.ndarray        # (n_nodes, 2)
    triangles: np.ndarray    # (n_triangles, 3), CCW
    node_tags: np.ndarray    # (n_nodes,), NodeTag values
    L1: float
    L2: float
    nx: int
    ny: int
    areas: np.ndarray = field(repr=False, default=None)       # (n_triangles,)
    grad_basis: np.ndarray = field(repr=False, default=None)  # (n_triangles, 3, 2)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def hx(self) -> float:
        return self.L1 / self.nx

    @property
    def hy(self) -> float:
        return self.L2 / self.ny


@dataclass
class ElementGeometry:
    """Area and constant P1 basis gradients of one triangle."""

    area: float
    grad_basis: np.ndarray  # (3, 2)


def _compute_geometry(nodes: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = nodes[triangles]  # (nt, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    twice_area = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(twice_area <= 0.0):
        raise ValueError("triangulation contains a non-positively oriented element")
    areas = 0.5 * twice_area
    # grad(lambda_i) = (y_j - y_k, x_k - x_j) / (2 area), indices cyclic
    grads = np.empty((triangles.shape[0], 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = p[:, j, 1] - p[:, k, 1]
        grads[:, i, 1] = p[:, k, 0] - p[:, j, 0]
    grads /= twice_area[:, None, None]
    return areas, grads


def build_rectangle(L1: float, L2: float, nx: int, ny: int) -> Mesh:
    """Build the uniform triangulation of [0, L1] x [0, L2] with nx-by-ny cells."""
    if not (L1 > 0.0 and L2 > 0.0):
        raise ValueError(f"domain extents must be positive, got L1={L1}, L2={L2}")
    if nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be at least 1, got nx={nx}, ny={ny}")

    xs = np.linspace(0.0, L1, nx + 1)
    ys = np.linspace(0.0, L2, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row index = j (y), column index = i (x)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
    t = 0
    for j in range(ny):
        for i in range(nx):
            n0 = idx(i, j)
            n1 = idx(i + 1, j)
            n2 = idx(i, j + 1)
            n3 = idx(i + 1, j + 1)
            tris[t] = (n0, n1, n3)      # lower-right of the diagonal
            tris[t + 1] = (n0, n3, n2)  # upper-left
            t += 2

    I, J = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    i_flat, j_flat = I.ravel(), J.ravel()
    tags = np.full(nodes.shape[0], int(NodeTag.INTERIOR), dtype=np.int8)
    on_rim = (j_flat == 0) | (j_flat == ny)
    tags[on_rim] = int(NodeTag.GAMMA_PRIME)
    tags[i_flat == 0] = int(NodeTag.GAMMA1)   # Dirichlet precedence at corners
    tags[i_flat == nx] = int(NodeTag.GAMMA2)

    areas, grads = _compute_geometry(nodes, tris)
    for arr in (nodes, tris, tags, areas, grads):
        arr.setflags(write=False)
    return Mesh(nodes, tris, tags, float(L1), float(L2), int(nx), int(ny), areas, grads)


def element_geometry(mesh: Mesh, t: int) -> ElementGeometry:
    """Area and basis gradients of triangle t."""
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range [0, {mesh.n_triangles})")
    return ElementGeometry(float(mesh.areas[t]), mesh.grad_basis[t])


def dirichlet_nodes(mesh: Mesh) -> np.ndarray:
    """Indices of all potential-Dirichlet nodes (both vertical edges), ascending."""
    mask = (mesh.node_tags == NodeTag.GAMMA1) | (mesh.node_tags == NodeTag.GAMMA2)
    return np.flatnonzero(mask)


def boundary_nodes(mesh: Mesh) -> np.ndarray:
    """Indices of all topological boundary nodes, ascending."""
    return np.flatnonzero(mesh.node_tags != NodeTag.INTERIOR)
