"""Run diagnostics: energies, norms, interface geometry, invariant monitors.

The interface shape is quantified by casting rays from a center, locating the
outermost u = 0.5 crossing on each, and taking discrete Fourier amplitudes of
the radius function; mode 4 measures fourfold branching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import materials as mat
from .anisotropy import dirichlet_energy
from .fem import Field, element_gradients, eval_p1, h1_seminorm, l2_norm, lumped_mass_vector
from .mesh import Mesh
from .stepper import Model, State, max_principle_tau_bound


@dataclass
class DiagRecord:
    t: float
    k: int
    energy: float
    l2_u: float
    h1_u: float
    l2_c: float
    h1_c: float
    l2_phi: float
    h1_phi: float
    min_u: float
    max_u: float
    min_c: float
    max_c: float
    dtu_l2: float
    dtc_l2: float
    tau_bound: float
    iters_phase: int
    iters_poisson: int
    iters_conc: int


def energy(u: Field, c: Field, model: Model) -> float:
    """Free energy driving the phase step: anisotropic interface energy plus the
    nodally lumped well and reaction terms.

    The reaction part is + m(c) h(u): the implemented phase dynamics descend
    this functional (the deposition drive is -m).
    """
    if u.mesh is not c.mesh:
        raise ValueError("fields live on different meshes")
    m = model.materials
    ml = lumped_mass_vector(u.mesh)
    bulk = float(ml @ (m.gamma * mat.g(u.values) + m.m(c.values) * mat.h(u.values)))
    return dirichlet_energy(u, u.mesh, model.aniso) + bulk


def record(state: State, model: Model, prev: State | None = None) -> DiagRecord:
    """Snapshot all monitored quantities; time-difference norms need prev."""
    tau = model.scheme.tau
    u, c, phi = state.u, state.c, state.phi_bar
    if prev is None:
        dtu = dtc = 0.0
    else:
        dtu = l2_norm(Field(u.mesh, (u.values - prev.u.values) / tau))
        dtc = l2_norm(Field(u.mesh, (c.values - prev.c.values) / tau))
    return DiagRecord(
        t=state.t,
        k=state.k,
        energy=energy(u, c, model),
        l2_u=l2_norm(u),
        h1_u=h1_seminorm(u),
        l2_c=l2_norm(c),
        h1_c=h1_seminorm(c),
        l2_phi=l2_norm(phi),
        h1_phi=h1_seminorm(phi),
        min_u=float(u.values.min()),
        max_u=float(u.values.max()),
        min_c=float(c.values.min()),
        max_c=float(c.values.max()),
        dtu_l2=dtu,
        dtc_l2=dtc,
        tau_bound=max_principle_tau_bound(state, model),
        iters_phase=state.solver_iters[0],
        iters_poisson=state.solver_iters[1],
        iters_conc=state.solver_iters[2],
    )


def interface_radius_modes(
    u: Field,
    center: tuple[float, float],
    n_modes: int = 6,
    n_rays: int = 360,
    threshold: float = 0.5,
) -> np.ndarray:
    """Fourier amplitudes of the interface radius r(theta) around center.

    Returns [mean radius, amplitude of modes 1..n_modes].  Rays without a
    crossing are filled by circular interpolation; more than 10% missing is
    an error.
    """
    mesh = u.mesh
    cx, cy = center
    thetas = 2.0 * np.pi * np.arange(n_rays) / n_rays
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])

    # distance from center to the domain boundary along each ray
    with np.errstate(divide="ignore"):
        tx = np.where(dirs[:, 0] > 0, (mesh.L1 - cx) / dirs[:, 0],
                      np.where(dirs[:, 0] < 0, -cx / dirs[:, 0], np.inf))
        ty = np.where(dirs[:, 1] > 0, (mesh.L2 - cy) / dirs[:, 1],
                      np.where(dirs[:, 1] < 0, -cy / dirs[:, 1], np.inf))
    r_max = np.minimum(tx, ty)

    dr = 0.5 * min(mesh.hx, mesh.hy)
    n_samp = int(np.ceil(float(r_max.max()) / dr)) + 1
    radii = np.arange(1, n_samp + 1) * dr  # (n_samp,)
    pts = np.empty((n_rays, n_samp, 2))
    pts[:, :, 0] = cx + dirs[:, 0:1] * radii[None, :]
    pts[:, :, 1] = cy + dirs[:, 1:2] * radii[None, :]
    vals = eval_p1(mesh, u.values, pts.reshape(-1, 2)).reshape(n_rays, n_samp)
    inside = radii[None, :] <= r_max[:, None]

    r_cross = np.full(n_rays, np.nan)
    sign = np.where(vals >= threshold, 1, -1)
    sign[~inside] = -1  # beyond the boundary counts as outside the crystal
    flips = sign[:, :-1] - sign[:, 1:] == 2  # crossings from >= threshold to below
    for i in range(n_rays):
        idx = np.flatnonzero(flips[i])
        if idx.size == 0:
            continue
        j = idx[-1]  # outermost crossing
        v0, v1 = vals[i, j], vals[i, j + 1]
        frac = (v0 - threshold) / (v0 - v1)
        r_cross[i] = radii[j] + frac * dr

    missing = np.isnan(r_cross)
    if missing.sum() > 0.1 * n_rays:
        raise ValueError(
            f"interface not found on {missing.sum()} of {n_rays} rays "
            f"(more than 10% missing)"
        )
    if missing.any():
        good = np.flatnonzero(~missing)
        r_cross[missing] = np.interp(
            thetas[missing], thetas[good], r_cross[good], period=2.0 * np.pi
        )

    coeffs = np.fft.rfft(r_cross)
    amps = np.empty(n_modes + 1)
    amps[0] = coeffs[0].real / n_rays
    upper = min(n_modes, n_rays // 2)
    amps[1 : upper + 1] = 2.0 * np.abs(coeffs[1 : upper + 1]) / n_rays
    if upper < n_modes:
        amps[upper + 1 :] = 0.0
    return amps


def energy_estimate_summary(records: list[DiagRecord], tau: float) -> dict[str, float]:
    """Summed stability quantities over a run (index 0 is the initial state)."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    u_h1_sq = [r.l2_u**2 + r.h1_u**2 for r in records]
    c_h1_sq = [r.l2_c**2 + r.h1_c**2 for r in records]
    phi_h1_sq = [r.l2_phi**2 + r.h1_phi**2 for r in records]
    return {
        "max_u_h1_sq": max(u_h1_sq),
        "tau_sum_u_h1_sq": tau * sum(u_h1_sq[1:]),
        "tau_sum_dtu_l2_sq": tau * sum(r.dtu_l2**2 for r in records[1:]),
        "tau_sum_phi_h1_sq": tau * sum(phi_h1_sq[1:]),
        "max_c_l2_sq": max(r.l2_c**2 for r in records),
        "tau_sum_c_h1_sq": tau * sum(c_h1_sq[1:]),
        "tau_sum_dtc_l2_sq": tau * sum(r.dtc_l2**2 for r in records[1:]),
    }


def telescoping_check(u_new: Field, u_old: Field, mass, tau: float) -> float:
    """Residual of the discrete product rule
    (d_tau u, u)_M = (tau/2)||d_tau u||_M^2 + (1/2) d_tau ||u||_M^2; exact algebra."""
    if u_new.mesh is not u_old.mesh:
        raise ValueError("fields live on different meshes")
    un, uo = u_new.values, u_old.values
    d = (un - uo) / tau
    Mu = mass @ un
    lhs = d @ Mu
    rhs = 0.5 * tau * (d @ (mass @ d)) + 0.5 * (un @ Mu - uo @ (mass @ uo)) / tau
    return abs(lhs - rhs)
