"""Fourfold anisotropy of the interface energy.

The direction-dependent modulation a(p) = a0 (1 - 3 delta) + 4 a0 delta
(p1^4 + p2^4)/|p|^4 yields the diffusion tensor A(p) = a(p) grad a(p) p^T
+ a(p)^2 I.  Both are 0-homogeneous; near p = 0 they are completed by their
isotropic values (the flux A(p) p vanishes there regardless).

The quadratic interface energy a(p)^2 |p|^2 / 2 is strictly convex exactly
for delta < 1/(omega^2 - 1) = 1/15 at the fourfold mode omega = 4; the
sampling estimator below probes the Hessian of that density, whose smallest
eigenvalue changes sign at the threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh

CONVEXITY_LIMIT = 1.0 / 15.0


@dataclass(frozen=True)
class AnisotropyParams:
    a0: float = 0.01
    delta: float = 0.05
    p_tol: float = 1e-12  # squared-gradient regularization threshold
    convexity_warning: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.a0 <= 0.0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.p_tol <= 0.0:
            raise ValueError(f"p_tol must be positive, got {self.p_tol}")
        if self.delta >= CONVEXITY_LIMIT:
            object.__setattr__(self, "convexity_warning", True)
            warnings.warn(
                f"anisotropy strength delta={self.delta} is at or above the "
                f"convexity limit 1/15; the interface energy is no longer convex",
                stacklevel=2,
            )


def _values(w) -> np.ndarray:
    """Accept a Field or a bare nodal array."""
    return np.asarray(getattr(w, "values", w), dtype=float)


def _p_moments(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p2 = p * p
    return p2.sum(axis=-1), (p2 * p2).sum(axis=-1)


def a_of(p, params: AnisotropyParams):
    """Anisotropy function a(p); a0 inside the regularization ball."""
    p = np.asarray(p, dtype=float)
    n2, s4 = _p_moments(p)
    safe = np.where(n2 >= params.p_tol, n2, 1.0)
    aval = params.a0 * (1.0 - 3.0 * params.delta) + 4.0 * params.a0 * params.delta * s4 / (safe * safe)
    out = np.where(n2 >= params.p_tol, aval, params.a0)
    return out if out.ndim else float(out)


def grad_a(p, params: AnisotropyParams):
    """Gradient of a(p); zero inside the regularization ball."""
    p = np.asarray(p, dtype=float)
    n2, s4 = _p_moments(p)
    safe = np.where(n2 >= params.p_tol, n2, 1.0)
    coef = 16.0 * params.a0 * params.delta / (safe * safe * safe)
    grad = coef[..., None] * p * (p * p * n2[..., None] - s4[..., None])
    grad = np.where(n2[..., None] >= params.p_tol, grad, 0.0)
    return grad


def tensor_A(p, params: AnisotropyParams):
    """Anisotropic diffusion tensor A(p) = a grad(a) p^T + a^2 I.

    Returns shape (..., 2, 2); a0^2 I inside the regularization ball.  Not
    symmetric in general: the rank-one part mixes the gradient direction with
    p itself.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a_of(p, params))
    ga = grad_a(p, params)
    A = a[..., None, None] * ga[..., :, None] * p[..., None, :]
    A[..., 0, 0] += a * a
    A[..., 1, 1] += a * a
    return A


def flux(p, params: AnisotropyParams):
    """A(p) p, the gradient of the energy density a(p)^2 |p|^2 / 2."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a_of(p, params))
    ga = grad_a(p, params)
    n2 = np.sum(p * p, axis=-1)
    # a grad(a) (p.p) + a^2 p, written without forming the tensor
    return (a * n2)[..., None] * ga + (a * a)[..., None] * p


def density_hessian(p, params: AnisotropyParams):
    """Hessian of the energy density a(p)^2 |p|^2 / 2 (0-homogeneous, symmetric).

    Computed in the polar frame of p: with G = a^2 as a function of the
    direction angle, the Hessian is R [[G, G'/2], [G'/2, G + G''/2]] R^T
    where R maps (radial, angular) to Cartesian axes.
    """
    p = np.asarray(p, dtype=float)
    n2 = np.sum(p * p, axis=-1)
    theta = np.arctan2(p[..., 1], p[..., 0])
    a0, d = params.a0, params.delta
    c4, s4 = np.cos(4.0 * theta), np.sin(4.0 * theta)
    a = a0 * (1.0 + d * c4)
    a1 = -4.0 * a0 * d * s4          # da/dtheta
    a2 = -16.0 * a0 * d * c4         # d2a/dtheta2
    G = a * a
    G1 = 2.0 * a * a1
    G2 = 2.0 * (a1 * a1 + a * a2)
    ct, st = np.cos(theta), np.sin(theta)
    # polar-frame entries
    hrr, hrt, htt = G, 0.5 * G1, G + 0.5 * G2
    H = np.empty(p.shape[:-1] + (2, 2))
    H[..., 0, 0] = ct * ct * hrr - 2.0 * ct * st * hrt + st * st * htt
    H[..., 1, 1] = st * st * hrr + 2.0 * ct * st * hrt + ct * ct * htt
    H[..., 0, 1] = ct * st * (hrr - htt) + (ct * ct - st * st) * hrt
    H[..., 1, 0] = H[..., 0, 1]
    iso = np.zeros_like(H)
    iso[..., 0, 0] = params.a0**2
    iso[..., 1, 1] = params.a0**2
    return np.where(n2[..., None, None] >= params.p_tol, H, iso)


def _element_gradients(values: np.ndarray, mesh: Mesh) -> np.ndarray:
    return np.einsum("tid,ti->td", mesh.grad_basis, values[mesh.triangles])


def dirichlet_energy(w, mesh: Mesh, params: AnisotropyParams) -> float:
    """Interface energy: sum over elements of area * a(grad w)^2 |grad w|^2 / 2."""
    vals = _values(w)
    if vals.shape[0] != mesh.n_nodes:
        raise ValueError("field length does not match mesh node count")
    grads = _element_gradients(vals, mesh)
    a = np.asarray(a_of(grads, params))
    n2 = np.sum(grads * grads, axis=-1)
    return float(np.sum(mesh.areas * 0.5 * a * a * n2))


def dirichlet_energy_derivative(w, v, mesh: Mesh, params: AnisotropyParams) -> float:
    """Directional derivative of the interface energy at w in direction v."""
    wv, vv = _values(w), _values(v)
    if wv.shape[0] != mesh.n_nodes or vv.shape[0] != mesh.n_nodes:
        raise ValueError("field length does not match mesh node count")
    gw = _element_gradients(wv, mesh)
    gv = _element_gradients(vv, mesh)
    return float(np.sum(mesh.areas * np.sum(flux(gw, params) * gv, axis=-1)))


def estimate_bounds(params: AnisotropyParams, n_samples: int) -> tuple[float, float]:
    """Sampled extremes of the quadratic form q^T H(p) q over unit directions.

    H is the (symmetric) Hessian of the interface energy density, so a
    positive minimum certifies sampled convexity/coercivity of the implicit
    phase operator.  Directions cover a deterministic angular grid with about
    sqrt(n_samples) values per factor.
    """
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")
    side = int(np.ceil(np.sqrt(n_samples)))
    th_p = np.linspace(0.0, 2.0 * np.pi, side, endpoint=False)
    th_q = np.linspace(0.0, np.pi, side, endpoint=False)  # form is even in q
    p = np.column_stack([np.cos(th_p), np.sin(th_p)])
    q = np.column_stack([np.cos(th_q), np.sin(th_q)])
    H = density_hessian(p, params)                    # (side, 2, 2)
    vals = np.einsum("qa,pab,qb->pq", q, H, q)
    return float(vals.min()), float(vals.max())
