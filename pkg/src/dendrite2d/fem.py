"""P1 finite-element operators on a triangulated rectangle.

Assembled matrices are scipy CSR (sorted column indices, duplicates summed).
Coefficients inside stiffness terms are averaged per element; nonlinear
nodal terms pair with the lumped mass so reaction terms act pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .anisotropy import AnisotropyParams, tensor_A
from .mesh import Mesh

CsrMatrix = sp.csr_matrix

_CONSISTENT_BLOCK = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass
class Field:
    """Nodal coefficient vector of a P1 function."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"field has {self.values.shape} values for {self.mesh.n_nodes} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def copy(self) -> "Field":
        return Field(self.mesh, self.values.copy())


def _mesh_cache(mesh: Mesh) -> dict:
    cache = getattr(mesh, "_fem_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(mesh, "_fem_cache", cache)
    return cache


def _dof_pattern(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """COO row/col indices of the 3x3 element blocks, cached on the mesh."""
    cache = _mesh_cache(mesh)
    if "dof_pattern" not in cache:
        tri = mesh.triangles
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        cache["dof_pattern"] = (rows, cols)
    return cache["dof_pattern"]


def _to_csr(mesh: Mesh, local: np.ndarray) -> CsrMatrix:
    """Scatter per-element 3x3 blocks into CSR through a cached index map.

    The CSR sparsity pattern is fixed by the mesh; each assembly only
    accumulates the 9 * n_triangles block entries into the shared slots.
    """
    cache = _mesh_cache(mesh)
    if "csr_template" not in cache:
        rows, cols = _dof_pattern(mesh)
        n = mesh.n_nodes
        order = np.lexsort((cols, rows))
        r_sorted, c_sorted = rows[order], cols[order]
        first = np.empty(order.size, dtype=bool)
        first[0] = True
        first[1:] = (r_sorted[1:] != r_sorted[:-1]) | (c_sorted[1:] != c_sorted[:-1])
        slot_sorted = np.cumsum(first) - 1
        scatter = np.empty(order.size, dtype=np.int64)
        scatter[order] = slot_sorted
        indices = c_sorted[first].astype(np.int32)
        row_of_slot = r_sorted[first]
        indptr = np.zeros(n + 1, dtype=np.int32)
        np.add.at(indptr, row_of_slot + 1, 1)
        indptr = np.cumsum(indptr, dtype=np.int32)
        cache["csr_template"] = (indptr, indices, scatter)
    indptr, indices, scatter = cache["csr_template"]
    data = np.bincount(scatter, weights=local.ravel(), minlength=indices.size)
    return sp.csr_matrix((data, indices, indptr), shape=(mesh.n_nodes,) * 2)


def assemble_mass(mesh: Mesh, lumped: bool = False) -> CsrMatrix:
    """Mass matrix; exact P1 blocks, or their row sums on the diagonal."""
    if lumped:
        diag = lumped_mass_vector(mesh)
        return sp.diags(diag, format="csr")
    local = mesh.areas[:, None, None] * _CONSISTENT_BLOCK[None, :, :]
    return _to_csr(mesh, local)


def lumped_mass_vector(mesh: Mesh) -> np.ndarray:
    """Diagonal of the lumped mass matrix (one third of the adjacent areas)."""
    cache = _mesh_cache(mesh)
    if "lumped_mass" not in cache:
        diag = np.bincount(
            mesh.triangles.ravel(),
            weights=np.repeat(mesh.areas / 3.0, 3),
            minlength=mesh.n_nodes,
        )
        diag.setflags(write=False)
        cache["lumped_mass"] = diag
    return cache["lumped_mass"]


def element_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Constant per-element gradient of a nodal field, shape (n_triangles, 2)."""
    return np.einsum("tid,ti->td", mesh.grad_basis, np.asarray(values)[mesh.triangles])


def node_gradient_x(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """x-derivative projected to nodes by element-area weighting."""
    gx = element_gradients(mesh, values)[:, 0]
    flat = mesh.triangles.ravel()
    num = np.bincount(flat, weights=np.repeat(mesh.areas * gx, 3), minlength=mesh.n_nodes)
    den = 3.0 * lumped_mass_vector(mesh)  # sum of adjacent areas
    return num / den


def _grad_outer(mesh: Mesh) -> np.ndarray:
    """Cached per-element matrices grad(lambda_i) . grad(lambda_j), shape (nt, 3, 3)."""
    cache = _mesh_cache(mesh)
    if "grad_outer" not in cache:
        G = mesh.grad_basis
        cache["grad_outer"] = G @ G.transpose(0, 2, 1)
    return cache["grad_outer"]


def assemble_stiffness_scalar(mesh: Mesh, coeff: Field | np.ndarray) -> CsrMatrix:
    """Stiffness with a scalar coefficient, averaged over each element's vertices."""
    vals = np.asarray(getattr(coeff, "values", coeff), dtype=float)
    if vals.shape[0] != mesh.n_nodes:
        raise ValueError("coefficient length does not match mesh node count")
    kappa = vals[mesh.triangles].mean(axis=1)
    local = (mesh.areas * kappa)[:, None, None] * _grad_outer(mesh)
    return _to_csr(mesh, local)


def assemble_stiffness_tensor(mesh: Mesh, u_prev: Field | np.ndarray, aniso: AnisotropyParams) -> CsrMatrix:
    """Stiffness with the anisotropy tensor frozen at the previous gradient.

    Entry (i, j) accumulates area * (A(grad u_prev) grad(lambda_j)) . grad(lambda_i);
    nonsymmetric whenever delta > 0.
    """
    vals = np.asarray(getattr(u_prev, "values", u_prev), dtype=float)
    if vals.shape[0] != mesh.n_nodes:
        raise ValueError("field length does not match mesh node count")
    grads = element_gradients(mesh, vals)
    A = tensor_A(grads, aniso)  # (nt, 2, 2)
    # expand K_loc[t,i,j] = sum_ab G[t,i,a] A[t,a,b] G[t,j,b] over the four
    # (a, b) pairs; cheaper than batched matmul on many tiny matrices
    cache = _mesh_cache(mesh)
    if "grad_pairs" not in cache:
        G = mesh.grad_basis
        cache["grad_pairs"] = [
            [G[:, :, a][:, :, None] * G[:, :, b][:, None, :] for b in (0, 1)]
            for a in (0, 1)
        ]
    pairs = cache["grad_pairs"]
    local = A[:, 0, 0, None, None] * pairs[0][0]
    local += A[:, 0, 1, None, None] * pairs[0][1]
    local += A[:, 1, 0, None, None] * pairs[1][0]
    local += A[:, 1, 1, None, None] * pairs[1][1]
    local *= mesh.areas[:, None, None]
    return _to_csr(mesh, local)


def assemble_load(mesh: Mesh, nodal_values: Field | np.ndarray, lumped: bool = True) -> np.ndarray:
    """Load vector M f for nodal data f, with the chosen mass treatment."""
    vals = np.asarray(getattr(nodal_values, "values", nodal_values), dtype=float)
    if vals.shape[0] != mesh.n_nodes:
        raise ValueError("load data length does not match mesh node count")
    if lumped:
        return lumped_mass_vector(mesh) * vals
    return assemble_mass(mesh, lumped=False) @ vals


def assemble_flux_load(mesh: Mesh, elem_vectors: np.ndarray) -> np.ndarray:
    """Load from a per-element flux F: entry i = sum_T area_T F_T . grad(lambda_i)."""
    F = np.asarray(elem_vectors, dtype=float)
    if F.shape != (mesh.n_triangles, 2):
        raise ValueError(
            f"expected per-element vectors of shape ({mesh.n_triangles}, 2), got {F.shape}"
        )
    contrib = np.einsum("t,tid,td->ti", mesh.areas, mesh.grad_basis, F)
    return np.bincount(
        mesh.triangles.ravel(), weights=contrib.ravel(), minlength=mesh.n_nodes
    )


class DirichletEliminator:
    """Symmetric constraint elimination with a precomputed sparsity map.

    Constrained rows and columns are zeroed, the diagonal is set to one, and
    the right side absorbs the column contributions so the reduced solution
    satisfies the constraints exactly.  Building the eliminator once and
    reapplying it is cheap for matrices sharing one sparsity pattern.
    """

    def __init__(self, A: CsrMatrix, nodes: np.ndarray):
        nodes = np.asarray(nodes, dtype=np.int64)
        if nodes.size and np.unique(nodes).size != nodes.size:
            raise ValueError("duplicate node indices in Dirichlet constraints")
        self.nodes = nodes
        n = A.shape[0]
        A = A.tocsr()
        constrained = np.zeros(n, dtype=bool)
        constrained[nodes] = True
        self._constrained = constrained

        row = np.repeat(np.arange(n, dtype=np.int64), np.diff(A.indptr))
        keep = ~(constrained[row] | constrained[A.indices])
        src = np.flatnonzero(keep)
        rows2 = np.concatenate([row[src], nodes])
        cols2 = np.concatenate([A.indices[src].astype(np.int64), nodes])
        order = np.lexsort((cols2, rows2))
        position = np.empty(order.size, dtype=np.int64)
        position[order] = np.arange(order.size)

        self._src = src
        self._dst = position[: src.size]
        self._diag_slots = position[src.size :]
        self._indices = cols2[order].astype(np.int32)
        counts = np.bincount(rows2, minlength=n)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self._shape = A.shape
        self._source_nnz = A.data.size

    def apply(self, A: CsrMatrix, b: np.ndarray, values: np.ndarray) -> tuple[CsrMatrix, np.ndarray]:
        values = np.asarray(values, dtype=float)
        if self.nodes.size != values.size:
            raise ValueError("constraint nodes and values differ in length")
        if A.data.size != self._source_nnz:
            raise ValueError("matrix sparsity differs from the eliminator's pattern")
        data = np.zeros(self._indices.size)
        data[self._dst] = A.data[self._src]
        data[self._diag_slots] = 1.0
        A_new = sp.csr_matrix((data, self._indices, self._indptr), shape=self._shape)
        if values.size and np.any(values != 0.0):
            x_c = np.zeros(self._shape[0])
            x_c[self.nodes] = values
            b_new = b - A @ x_c
        else:
            b_new = b.copy()
        b_new[self.nodes] = values
        return A_new, b_new


def apply_dirichlet(
    A: CsrMatrix, b: np.ndarray, nodes: np.ndarray, values: np.ndarray
) -> tuple[CsrMatrix, np.ndarray]:
    """One-shot symmetric constraint elimination (see DirichletEliminator)."""
    nodes = np.asarray(nodes, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if nodes.size != values.size:
        raise ValueError("constraint nodes and values differ in length")
    if nodes.size == 0:
        return A, b.copy()
    return DirichletEliminator(A, nodes).apply(A.tocsr(), b, values)


def _norm_operators(mesh: Mesh) -> tuple[CsrMatrix, CsrMatrix]:
    cache = _mesh_cache(mesh)
    if "norm_ops" not in cache:
        cache["norm_ops"] = (
            assemble_mass(mesh, lumped=False),
            assemble_stiffness_scalar(mesh, np.ones(mesh.n_nodes)),
        )
    return cache["norm_ops"]


def l2_norm(w: Field) -> float:
    """L2 norm via the consistent mass matrix."""
    M = _norm_operators(w.mesh)[0]
    return float(np.sqrt(max(w.values @ (M @ w.values), 0.0)))


def h1_seminorm(w: Field) -> float:
    """H1 seminorm via the unit-coefficient stiffness matrix."""
    K = _norm_operators(w.mesh)[1]
    return float(np.sqrt(max(w.values @ (K @ w.values), 0.0)))


def eval_p1(mesh: Mesh, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate a P1 field at arbitrary points of the structured mesh.

    Points are clipped to the closed domain; cell lookup exploits the uniform
    grid and the fixed diagonal split.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float)
    hx, hy = mesh.hx, mesh.hy
    x = np.clip(pts[:, 0], 0.0, mesh.L1)
    y = np.clip(pts[:, 1], 0.0, mesh.L2)
    ix = np.minimum((x / hx).astype(np.int64), mesh.nx - 1)
    iy = np.minimum((y / hy).astype(np.int64), mesh.ny - 1)
    xl = x / hx - ix
    yl = y / hy - iy
    n0 = iy * (mesh.nx + 1) + ix
    n1 = n0 + 1
    n2 = n0 + (mesh.nx + 1)
    n3 = n2 + 1
    lower = xl >= yl  # triangle (n0, n1, n3) below the diagonal
    # barycentric weights on each triangle of the unit reference cell
    out = np.where(
        lower,
        vals[n0] * (1.0 - xl) + vals[n1] * (xl - yl) + vals[n3] * yl,
        vals[n0] * (1.0 - yl) + vals[n3] * xl + vals[n2] * (yl - xl),
    )
    return out if np.asarray(points).ndim > 1 else float(out[0])
