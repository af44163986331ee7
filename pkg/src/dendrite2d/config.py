"""Flat key = value configuration with strict validation.

Unknown keys are errors (no silent typos), '#' starts a comment, and every
key has a default so the empty file is a valid configuration.  Parsing is
eager: derived quantities (C1/C2 from the rate constants, seed geometry from
the domain) are resolved to concrete numbers, which makes parse/serialize
idempotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .anisotropy import CONVEXITY_LIMIT, AnisotropyParams
from .materials import MaterialParams, compute_C1_C2
from .mesh import Mesh, build_rectangle
from .stepper import Model, SchemeParams, SeedParams


class ConfigError(ValueError):
    pass


_UNSET = float("nan")


@dataclass
class Params:
    """Complete run configuration; field names double as config keys."""

    # geometry and resolution
    L1: float = 1.0
    L2: float = 1.0
    nx: int = 128
    ny: int = 128
    half_domain: bool = False

    # material constants
    gamma: float = 1.0
    mu: float = 1.0
    nu1: float = 1.0
    phi_minus: float = -1.0
    kappa: float = 1.0
    alpha: float = 0.5
    B: float = 1.0
    C1: float = _UNSET  # default: computed from (kappa, alpha, B)
    C2: float = _UNSET
    D_e: float = 1e-4
    D_s: float = 1.0
    sigma_e: float = 1.0
    sigma_s: float = 1e-2
    eps: float = 0.2

    # anisotropy
    a0: float = 0.01
    delta: float = 0.05
    p_tol: float = 1e-12

    # time scheme
    tau: float = 6.1e-4
    linear_tol: float = 1e-10
    clamp: bool = False
    lumped_mass: bool = True
    semi_implicit_reaction: bool = False
    transport_full_potential: bool = True

    # initial nucleus
    seed_x: float = 0.0
    seed_y: float = _UNSET  # default: L2 / 2
    r0: float = _UNSET      # default: 0.1 * L2
    w0: float = _UNSET      # default: 2 * a0
    c0_uniform: bool = False

    # run control and output
    T: float = 0.427
    snapshot_times: list[float] = field(default_factory=lambda: [0.061, 0.244, 0.427])
    record_every: int = 1

    # sweep harness
    sweep_param: str = "delta"
    sweep_values: list[float] = field(default_factory=lambda: [0.0, 0.01, 0.02, 0.05, 0.065, 0.1])
    sweep_snapshot_time: float = 0.366

    def resolve(self) -> "Params":
        """Fill derived defaults in place and validate; returns self."""
        if math.isnan(self.C1) or math.isnan(self.C2):
            self.C1, self.C2 = compute_C1_C2(self.kappa, self.alpha, self.B)
        if math.isnan(self.seed_y):
            self.seed_y = self.L2 / 2.0
        if math.isnan(self.r0):
            self.r0 = 0.1 * self.L2
        if math.isnan(self.w0):
            self.w0 = 2.0 * self.a0
        self.validate()
        return self

    def validate(self):
        if self.T <= 0.0:
            raise ConfigError(f"key 'T': end time must be positive, got {self.T}")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.T:
                raise ConfigError(
                    f"key 'snapshot_times': time {t} outside [0, {self.T}]"
                )
        if self.record_every < 1:
            raise ConfigError(f"key 'record_every': must be >= 1, got {self.record_every}")
        if self.sweep_param not in _SWEEPABLE:
            raise ConfigError(
                f"key 'sweep_param': '{self.sweep_param}' is not sweepable "
                f"(choose from {sorted(_SWEEPABLE)})"
            )
        # delegate range checks to the parameter dataclasses
        try:
            self.material_params()
            self.anisotropy_params()
            self.scheme_params()
            self.seed_params()
            if self.L1 <= 0 or self.L2 <= 0 or self.nx < 1 or self.ny < 1:
                raise ValueError(
                    f"invalid mesh spec L1={self.L1}, L2={self.L2}, nx={self.nx}, ny={self.ny}"
                )
        except ValueError as e:
            raise ConfigError(str(e)) from e

    # ---- factories -------------------------------------------------------

    def mesh_extents(self) -> tuple[float, float, int, int]:
        if self.half_domain:
            return self.L1, self.L2 / 2.0, self.nx, max(1, self.ny // 2)
        return self.L1, self.L2, self.nx, self.ny

    def build_mesh(self) -> Mesh:
        return build_rectangle(*self.mesh_extents())

    def material_params(self) -> MaterialParams:
        return MaterialParams(
            gamma=self.gamma, mu=self.mu, nu1=self.nu1, phi_minus=self.phi_minus,
            C1=self.C1, C2=self.C2, D_e=self.D_e, D_s=self.D_s,
            sigma_e=self.sigma_e, sigma_s=self.sigma_s, eps=self.eps,
        )

    def anisotropy_params(self) -> AnisotropyParams:
        return AnisotropyParams(a0=self.a0, delta=self.delta, p_tol=self.p_tol)

    def scheme_params(self) -> SchemeParams:
        return SchemeParams(
            tau=self.tau, linear_tol=self.linear_tol, clamp=self.clamp,
            lumped_mass=self.lumped_mass,
            semi_implicit_reaction=self.semi_implicit_reaction,
            transport_full_potential=self.transport_full_potential,
        )

    def seed_params(self) -> SeedParams:
        return SeedParams(
            center=(self.seed_x, self.seed_y), r0=self.r0, w0=self.w0,
            c0_uniform=self.c0_uniform,
        )

    def build_model(self, mesh: Mesh | None = None) -> Model:
        if mesh is None:
            mesh = self.build_mesh()
        return Model(
            mesh=mesh,
            materials=self.material_params(),
            aniso=self.anisotropy_params(),
            scheme=self.scheme_params(),
            seed=self.seed_params(),
        )


_FLOAT_LIST_KEYS = {"snapshot_times", "sweep_values"}
_SWEEPABLE = {
    "delta", "mu", "gamma", "a0", "eps", "B", "kappa", "alpha", "phi_minus",
    "nu1", "D_e", "D_s", "sigma_e", "sigma_s", "tau", "r0", "w0",
}


def _field_types() -> dict[str, type]:
    out = {}
    for f in fields(Params):
        if f.name in _FLOAT_LIST_KEYS:
            out[f.name] = list
        elif f.type in ("int",):
            out[f.name] = int
        elif f.type in ("bool",):
            out[f.name] = bool
        elif f.type in ("str",):
            out[f.name] = str
        else:
            out[f.name] = float
    return out


_TYPES = _field_types()


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got '{raw}'")


def parse_config(text: str) -> Params:
    """Parse flat key = value text into a validated Params."""
    params = Params()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw_line.strip()}'")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        try:
            kind = _TYPES[key]
            if kind is list:
                value = [float(v) for v in raw_value.split(",") if v.strip() != ""]
            elif kind is bool:
                value = _parse_bool(raw_value)
            elif kind is int:
                value = int(raw_value)
            elif kind is str:
                value = raw_value
            else:
                value = float(raw_value)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: key '{key}': {e}") from e
        setattr(params, key, value)
    try:
        return params.resolve()
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e


def serialize_config(params: Params) -> str:
    """Canonical text form; reparsing reproduces the same Params exactly."""
    lines = []
    for f in fields(Params):
        value = getattr(params, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, list):
            text = ",".join(repr(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def convexity_exceeded(params: Params) -> bool:
    return params.delta >= CONVEXITY_LIMIT
