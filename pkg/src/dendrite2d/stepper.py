"""Sequential semi-implicit time stepping of the coupled system.

Each step solves, in order: the phase field with the anisotropy tensor and
reaction terms frozen at the previous iterate, then the electric potential
with homogeneous Dirichlet data after lifting the applied bias, and finally
the ion concentration with the electromigration flux lagged in c.  All three
systems are linear; mass terms are lumped by default so the reactions act
nodally and the discrete maximum principle can be monitored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import materials as mat
from .anisotropy import AnisotropyParams
from .fem import (
    DirichletEliminator,
    Field,
    assemble_flux_load,
    assemble_load,
    assemble_stiffness_scalar,
    assemble_stiffness_tensor,
    element_gradients,
    lumped_mass_vector,
    node_gradient_x,
)
from .linsolve import SolveReport, bicgstab, cg, jacobi_precondition
from .materials import MaterialParams
from .mesh import Mesh, dirichlet_nodes

TAU_BOUND_SENTINEL = 1e300


@dataclass(frozen=True)
class SchemeParams:
    tau: float = 6.1e-4
    linear_tol: float = 1e-10
    clamp: bool = False
    lumped_mass: bool = True
    semi_implicit_reaction: bool = False  # iterate g', h' at the new iterate
    transport_full_potential: bool = True
    picard_max_iter: int = 20
    picard_tol: float = 1e-10

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.linear_tol <= 0.0:
            raise ValueError(f"linear_tol must be positive, got {self.linear_tol}")


@dataclass(frozen=True)
class SeedParams:
    """Initial nucleus: tanh profile of radius r0 and width w0 at center."""

    center: tuple[float, float] = (0.0, 0.5)
    r0: float = 0.1
    w0: float = 0.02
    c0_uniform: bool = False  # True: c0 = 1 everywhere; False: c0 = 1 - u0

    def __post_init__(self):
        if self.r0 <= 0.0 or self.w0 <= 0.0:
            raise ValueError(f"seed radius and width must be positive, got r0={self.r0}, w0={self.w0}")


@dataclass(frozen=True)
class State:
    """Solution triple at one time level (phi_bar is the lifted potential)."""

    u: Field
    c: Field
    phi_bar: Field
    t: float
    k: int
    solver_iters: tuple[int, int, int] = (0, 0, 0)  # phase, potential, concentration


@dataclass
class Model:
    """Mesh plus parameters, with per-mesh quantities cached for stepping."""

    mesh: Mesh
    materials: MaterialParams = field(default_factory=MaterialParams)
    aniso: AnisotropyParams = field(default_factory=AnisotropyParams)
    scheme: SchemeParams = field(default_factory=SchemeParams)
    seed: SeedParams = field(default_factory=SeedParams)

    def __post_init__(self):
        self.ml = lumped_mass_vector(self.mesh)
        self.gamma_nodes = dirichlet_nodes(self.mesh)
        self.gamma_zeros = np.zeros(self.gamma_nodes.size)
        template = assemble_stiffness_scalar(self.mesh, np.ones(self.mesh.n_nodes))
        self.eliminator = DirichletEliminator(template, self.gamma_nodes)
        x = self.mesh.nodes[:, 0]
        self.lift = self.materials.phi_minus * (1.0 - x / self.mesh.L1)
        # warm-start hint for the potential solve: (step index, previous values);
        # affects iteration counts only, never the converged solution
        self._phi_hint: tuple[int, np.ndarray] | None = None
        bound = worst_case_tau_bound(self.materials)
        if self.scheme.tau > bound:
            warnings.warn(
                f"tau={self.scheme.tau} exceeds the conservative maximum-principle "
                f"bound {bound:.3e}",
                stacklevel=2,
            )

    @property
    def nu2(self) -> float:
        return self.materials.phi_minus / self.mesh.L1


def worst_case_tau_bound(m: MaterialParams) -> float:
    """Global step bound 1 / (gamma max|g'| + max|m| max h')."""
    denom = m.gamma * mat.MAX_ABS_G_PRIME + m.max_abs_m * mat.MAX_H_PRIME
    return 1.0 / denom if denom > 0.0 else TAU_BOUND_SENTINEL


def initial_state(mesh: Mesh, model: Model) -> State:
    """Tanh nucleus for u, complementary (or uniform) ion concentration, zero
    lifted potential."""
    seed = model.seed
    d = np.hypot(mesh.nodes[:, 0] - seed.center[0], mesh.nodes[:, 1] - seed.center[1])
    u0 = 0.5 * (1.0 - np.tanh((d - seed.r0) / seed.w0))
    c0 = np.ones(mesh.n_nodes) if seed.c0_uniform else 1.0 - u0
    return State(
        u=Field(mesh, u0),
        c=Field(mesh, c0),
        phi_bar=Field(mesh, np.zeros(mesh.n_nodes)),
        t=0.0,
        k=0,
    )


def _reaction_rhs(model: Model, u_vals: np.ndarray, c_vals: np.ndarray) -> np.ndarray:
    m = model.materials
    return model.ml * (
        -m.gamma * mat.g_prime(u_vals) + m.deposition_drive(c_vals) * mat.h_prime(u_vals)
    )


def step_phase(state: State, model: Model) -> tuple[Field, SolveReport]:
    """Advance the order parameter with the tensor frozen at the old gradient."""
    mesh = model.mesh
    m, sch = model.materials, model.scheme
    u_old = state.u.values
    c_old = state.c.values

    K = assemble_stiffness_tensor(mesh, u_old, model.aniso)
    shift = (m.eps**2 / sch.tau) * model.ml
    A = K + _diag(shift)
    Minv = jacobi_precondition(A)
    base = shift * u_old

    rhs = base + _reaction_rhs(model, u_old, c_old)
    x, rep = bicgstab(A, rhs, x0=u_old, tol=sch.linear_tol, precond=Minv)

    if sch.semi_implicit_reaction:
        total_iters = rep.iterations
        for _ in range(sch.picard_max_iter):
            rhs = base + _reaction_rhs(model, x, c_old)
            x_new, rep = bicgstab(A, rhs, x0=x, tol=sch.linear_tol, precond=Minv)
            total_iters += rep.iterations
            delta = float(np.max(np.abs(x_new - x)))
            x = x_new
            if delta <= sch.picard_tol:
                break
        rep = SolveReport(total_iters, rep.final_residual, rep.converged)

    if not rep.converged:
        raise RuntimeError(
            f"phase solve did not converge in {rep.iterations} iterations "
            f"(residual {rep.final_residual:.3e})"
        )
    return Field(mesh, x), rep


def step_poisson(
    u_new: Field, u_old: Field, model: Model, phi_start: Field | None = None
) -> tuple[Field, SolveReport]:
    """Solve for the lifted potential, zero on both vertical edges."""
    mesh = model.mesh
    m, sch = model.materials, model.scheme
    if u_new.mesh is not u_old.mesh:
        raise ValueError("phase fields live on different meshes")

    dtu = (u_new.values - u_old.values) / sch.tau
    dxu = node_gradient_x(mesh, u_new.values)
    f = -m.nu1 * dtu + model.nu2 * m.sigma_prime(u_new.values) * dxu
    b = assemble_load(mesh, f, lumped=sch.lumped_mass)
    K = assemble_stiffness_scalar(mesh, m.sigma(u_new.values))
    A, b = model.eliminator.apply(K, b, model.gamma_zeros)
    x0 = None if phi_start is None else phi_start.values
    x, rep = cg(A, b, x0=x0, tol=sch.linear_tol, precond=jacobi_precondition(A))
    if not rep.converged:
        raise RuntimeError(
            f"potential solve did not converge in {rep.iterations} iterations "
            f"(residual {rep.final_residual:.3e})"
        )
    x[model.gamma_nodes] = 0.0  # exact constraints, independent of solver tol
    return Field(mesh, x), rep


def full_potential(phi_bar: Field, model: Model) -> Field:
    """Add back the affine lift: phi = phi_bar + phi_minus (1 - x/L1)."""
    return Field(phi_bar.mesh, phi_bar.values + model.lift)


def step_concentration(
    u_new: Field, u_old: Field, c_old: Field, phi: Field, model: Model
) -> tuple[Field, SolveReport]:
    """Advance the ion concentration; phi is the potential driving migration."""
    mesh = model.mesh
    m, sch = model.materials, model.scheme
    if not (u_new.mesh is u_old.mesh is c_old.mesh is phi.mesh):
        raise ValueError("fields live on different meshes")

    dtu = (u_new.values - u_old.values) / sch.tau
    K = assemble_stiffness_scalar(mesh, m.D(u_new.values))
    shift = model.ml / sch.tau
    A = K + _diag(shift)

    u_bar = u_new.values[mesh.triangles].mean(axis=1)
    c_bar = c_old.values[mesh.triangles].mean(axis=1)
    grad_phi = element_gradients(mesh, phi.values)
    F = m.D1(u_bar, c_bar)[:, None] * grad_phi
    rhs = shift * c_old.values - m.mu * model.ml * dtu - assemble_flux_load(mesh, F)

    x, rep = cg(A, rhs, x0=c_old.values, tol=sch.linear_tol, precond=jacobi_precondition(A))
    if not rep.converged:
        raise RuntimeError(
            f"concentration solve did not converge in {rep.iterations} iterations "
            f"(residual {rep.final_residual:.3e})"
        )
    return Field(mesh, x), rep


def advance(state: State, model: Model) -> State:
    """One full step: phase, then potential, then concentration."""
    sch = model.scheme
    u_new, rep_u = step_phase(state, model)
    if sch.clamp:
        u_new = Field(model.mesh, np.clip(u_new.values, 0.0, 1.0))
    # extrapolate the potential in time for a better Krylov starting point
    hint = model._phi_hint
    if hint is not None and hint[0] == state.k:
        phi_start = Field(model.mesh, 2.0 * state.phi_bar.values - hint[1])
    else:
        phi_start = state.phi_bar
    phi_bar, rep_phi = step_poisson(u_new, state.u, model, phi_start=phi_start)
    model._phi_hint = (state.k + 1, state.phi_bar.values)
    phi = full_potential(phi_bar, model) if sch.transport_full_potential else phi_bar
    c_new, rep_c = step_concentration(u_new, state.u, state.c, phi, model)
    k = state.k + 1
    return State(
        u=u_new,
        c=c_new,
        phi_bar=phi_bar,
        t=k * sch.tau,
        k=k,
        solver_iters=(rep_u.iterations, rep_phi.iterations, rep_c.iterations),
    )


def max_principle_tau_bound(state: State, model: Model) -> float:
    """Step bound 1 / max_nodes(gamma |g'(u)| + |m(c)| h'(u)) for the current state."""
    m = model.materials
    denom = m.gamma * np.abs(mat.g_prime(state.u.values)) + np.abs(
        m.m(state.c.values)
    ) * mat.h_prime(state.u.values)
    peak = float(np.max(denom))
    if peak <= 1.0 / TAU_BOUND_SENTINEL:
        return TAU_BOUND_SENTINEL
    return 1.0 / peak


def _diag(v: np.ndarray):
    return sp.diags(v, format="csr")


def with_tau(model: Model, tau: float) -> Model:
    """Copy of the model with a different time step (for refinement studies)."""
    return Model(
        mesh=model.mesh,
        materials=model.materials,
        aniso=model.aniso,
        scheme=replace(model.scheme, tau=tau),
        seed=model.seed,
    )
