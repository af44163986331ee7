"""Self-contained property checks runnable from the command line.

Each check returns (name, passed, detail).  These are fast sanity probes of
the core identities: derivative consistency, tensor homogeneity, convexity
sampling, the manufactured Poisson problem, and the algebraic step identity.
"""

from __future__ import annotations

import numpy as np

from . import materials as mat
from .anisotropy import (
    AnisotropyParams,
    a_of,
    dirichlet_energy,
    dirichlet_energy_derivative,
    estimate_bounds,
    flux,
    tensor_A,
)
from .config import Params, parse_config, serialize_config
from .diagnostics import telescoping_check
from .fem import (
    Field,
    apply_dirichlet,
    assemble_load,
    assemble_mass,
    assemble_stiffness_scalar,
    l2_norm,
)
from .linsolve import bicgstab, cg
from .mesh import boundary_nodes, build_rectangle

Check = tuple[str, bool, str]


def check_mesh_partition() -> Check:
    worst = 0.0
    for nx, ny in ((1, 1), (3, 5), (16, 16), (40, 25)):
        mesh = build_rectangle(2.0, 1.0, nx, ny)
        worst = max(worst, abs(mesh.areas.sum() - 2.0) / 2.0)
    ok = worst < 1e-12
    return "mesh area partition", ok, f"max relative defect {worst:.2e}"


def check_material_derivatives() -> Check:
    rng = np.random.default_rng(7)
    s = rng.uniform(0.01, 0.99, 100)
    hstep = 1e-6
    fd_g = (mat.g(s + hstep) - mat.g(s - hstep)) / (2 * hstep)
    fd_h = (mat.h(s + hstep) - mat.h(s - hstep)) / (2 * hstep)
    err_g = np.max(np.abs(fd_g - mat.g_prime(s)) / np.maximum(np.abs(fd_g), 1e-12))
    err_h = np.max(np.abs(fd_h - mat.h_prime(s)) / np.maximum(np.abs(fd_h), 1e-12))
    ok = err_g < 1e-6 and err_h < 1e-6
    return "scalar-law derivatives", ok, f"rel errors g {err_g:.2e}, h {err_h:.2e}"


def check_flux_gradient() -> Check:
    params = AnisotropyParams(a0=1.0, delta=0.05)
    rng = np.random.default_rng(11)
    p = rng.normal(size=(500, 2))
    p *= (rng.uniform(0.1, 10.0, 500) / np.linalg.norm(p, axis=1))[:, None]

    def density(q):
        n2 = np.asarray(np.sum(q * q, axis=-1))
        return 0.5 * np.asarray(a_of(q, params)) ** 2 * n2

    hstep = 1e-6
    fd = np.empty_like(p)
    for d in range(2):
        dq = np.zeros(2)
        dq[d] = hstep
        fd[:, d] = (density(p + dq) - density(p - dq)) / (2 * hstep)
    fl = flux(p, params)
    err = np.max(np.linalg.norm(fl - fd, axis=1) / np.linalg.norm(fd, axis=1))
    return "flux is density gradient", err < 1e-6, f"max rel error {err:.2e}"


def check_homogeneity() -> Check:
    params = AnisotropyParams(a0=1.0, delta=0.05)
    rng = np.random.default_rng(13)
    p = rng.normal(size=(100, 2))
    worst = 0.0
    base = tensor_A(p, params)
    for lam in (0.5, 2.0, 10.0):
        worst = max(worst, float(np.max(np.abs(tensor_A(lam * p, params) - base))))
    return "tensor 0-homogeneity", worst < 1e-12, f"max entry deviation {worst:.2e}"


def check_convexity_threshold() -> Check:
    lo_small, _ = estimate_bounds(AnisotropyParams(a0=1.0, delta=0.05), 10_000)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lo_big, _ = estimate_bounds(AnisotropyParams(a0=1.0, delta=0.1), 10_000)
    ok = lo_small > 0.0 and lo_big < 0.0
    return (
        "convexity threshold sampling",
        ok,
        f"c_A(delta=0.05)={lo_small:.4f}, c_A(delta=0.1)={lo_big:.4f}",
    )


def check_energy_derivative() -> Check:
    mesh = build_rectangle(1.0, 1.0, 16, 16)
    params = AnisotropyParams(a0=1.0, delta=0.05)
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(5):
        w = rng.normal(size=mesh.n_nodes)
        v = rng.normal(size=mesh.n_nodes)
        hstep = 1e-5
        fd = (
            dirichlet_energy(w + hstep * v, mesh, params)
            - dirichlet_energy(w - hstep * v, mesh, params)
        ) / (2 * hstep)
        dv = dirichlet_energy_derivative(w, v, mesh, params)
        worst = max(worst, abs(dv - fd) / max(abs(fd), 1e-12))
    return "energy directional derivative", worst < 1e-6, f"max rel error {worst:.2e}"


def check_convexity_inequality() -> Check:
    mesh = build_rectangle(1.0, 1.0, 16, 16)
    params = AnisotropyParams(a0=1.0, delta=0.05)
    rng = np.random.default_rng(19)
    worst = -np.inf
    for _ in range(20):
        w = rng.normal(size=mesh.n_nodes)
        v = rng.normal(size=mesh.n_nodes)
        gap = (
            dirichlet_energy(w, mesh, params)
            - dirichlet_energy(v, mesh, params)
            - dirichlet_energy_derivative(w, w - v, mesh, params)
        )
        worst = max(worst, gap)
    return "convexity inequality (delta<1/15)", worst <= 1e-10, f"max gap {worst:.2e}"


def check_manufactured_poisson() -> Check:
    errs = []
    for n in (16, 32):
        mesh = build_rectangle(1.0, 1.0, n, n)
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        exact = np.sin(np.pi * x) * np.sin(np.pi * y)
        f = 2.0 * np.pi**2 * exact
        K = assemble_stiffness_scalar(mesh, np.ones(mesh.n_nodes))
        b = assemble_load(mesh, f, lumped=False)
        bnodes = boundary_nodes(mesh)
        A, b = apply_dirichlet(K, b, bnodes, np.zeros(bnodes.size))
        sol, rep = cg(A, b, tol=1e-12)
        errs.append(l2_norm(Field(mesh, sol - exact)))
    ratio = errs[0] / errs[1]
    return "manufactured Poisson order", ratio >= 3.6, f"error ratio 16->32 = {ratio:.2f}"


def check_solver_agreement() -> Check:
    mesh = build_rectangle(1.0, 1.0, 12, 12)
    K = assemble_stiffness_scalar(mesh, np.ones(mesh.n_nodes))
    M = assemble_mass(mesh, lumped=False)
    A = (K + M).tocsr()
    rng = np.random.default_rng(23)
    b = rng.normal(size=mesh.n_nodes)
    x_cg, _ = cg(A, b, tol=1e-12)
    x_bi, _ = bicgstab(A, b, tol=1e-12)
    err = float(np.max(np.abs(x_cg - x_bi)))
    return "CG/BiCGSTAB agreement", err < 1e-8, f"max difference {err:.2e}"


def check_telescoping() -> Check:
    mesh = build_rectangle(1.0, 1.0, 8, 8)
    M = assemble_mass(mesh, lumped=False)
    rng = np.random.default_rng(29)
    worst = 0.0
    for _ in range(10):
        u_new = Field(mesh, rng.normal(size=mesh.n_nodes))
        u_old = Field(mesh, rng.normal(size=mesh.n_nodes))
        res = telescoping_check(u_new, u_old, M, tau=1e-3)
        scale = max(abs(u_new.values @ (M @ u_new.values)), 1.0) / 1e-3
        worst = max(worst, res / scale)
    return "telescoping identity", worst < 1e-12, f"max relative residual {worst:.2e}"


def check_config_roundtrip() -> Check:
    params = Params(delta=0.03, mu=1.5, nx=32, ny=32).resolve()
    text = serialize_config(params)
    ok = parse_config(text) == params
    return "config round-trip", ok, "serialize/parse fixed point" if ok else "mismatch"


ALL_CHECKS = [
    check_mesh_partition,
    check_material_derivatives,
    check_flux_gradient,
    check_homogeneity,
    check_convexity_threshold,
    check_energy_derivative,
    check_convexity_inequality,
    check_manufactured_poisson,
    check_solver_agreement,
    check_telescoping,
    check_config_roundtrip,
]


def run_all(params: Params | None = None) -> list[Check]:
    return [fn() for fn in ALL_CHECKS]
