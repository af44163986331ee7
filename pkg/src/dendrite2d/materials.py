"""Scalar material laws: double well, interpolation, effective coefficients,
and the electrode-reaction forcing coefficient with its cutoffs.

All functions are total on the real line (clamped outside [0, 1]) and accept
scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Extrema used for conservative step-size bounds: |g'| peaks at s = (3 +- sqrt 3)/6,
# h' peaks at s = 1/2.
MAX_ABS_G_PRIME = math.sqrt(3.0) / 36.0
MAX_H_PRIME = 1.875


def g(s):
    """Double-well density: s^2 (1-s)^2 / 4 on [0, 1], zero elsewhere."""
    s = np.asarray(s, dtype=float)
    inside = (s >= 0.0) & (s <= 1.0)
    out = np.where(inside, s * s * (1.0 - s) ** 2 / 4.0, 0.0)
    return out if out.ndim else float(out)


def g_prime(s):
    """Derivative of the double well: s (s-1) (s-1/2) on [0, 1], zero elsewhere."""
    s = np.asarray(s, dtype=float)
    inside = (s >= 0.0) & (s <= 1.0)
    out = np.where(inside, s * (s - 1.0) * (s - 0.5), 0.0)
    return out if out.ndim else float(out)


def h(s):
    """Monotone quintic interpolant, clamped to 0 below 0 and 1 above 1."""
    s = np.asarray(s, dtype=float)
    sc = np.clip(s, 0.0, 1.0)
    out = sc**3 * (6.0 * sc * sc - 15.0 * sc + 10.0)
    return out if out.ndim else float(out)


def h_prime(s):
    """Derivative of the interpolant: 30 s^2 (s-1)^2 on [0, 1], zero elsewhere."""
    s = np.asarray(s, dtype=float)
    inside = (s >= 0.0) & (s <= 1.0)
    out = np.where(inside, 30.0 * s * s * (s - 1.0) ** 2, 0.0)
    return out if out.ndim else float(out)


def compute_C1_C2(kappa: float, alpha: float, B: float) -> tuple[float, float]:
    """Forcing constants from the reaction rate kappa, symmetry factor alpha,
    and the dimensionless overpotential group B = nF|eta_a|/(RT)."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if B < 0.0:
        raise ValueError(f"B must be nonnegative, got {B}")
    return kappa * math.exp(-(1.0 - alpha) * B), kappa * math.exp(alpha * B)


@dataclass(frozen=True)
class MaterialParams:
    """Nondimensional material constants of the coupled model."""

    gamma: float = 1.0       # double-well weight
    mu: float = 1.0          # concentration source weight
    nu1: float = 1.0         # potential source weight
    phi_minus: float = -1.0  # applied potential, in [-2, 0)
    C1: float = math.exp(-0.5)
    C2: float = math.exp(0.5)
    D_e: float = 1e-4        # diffusivity in the electrode
    D_s: float = 1.0         # diffusivity in the electrolyte
    sigma_e: float = 1.0     # conductivity in the electrode
    sigma_s: float = 1e-2    # conductivity in the electrolyte
    eps: float = 0.2         # relaxation parameter

    def __post_init__(self):
        for name in ("gamma", "C1", "C2", "D_e", "D_s", "sigma_e", "sigma_s", "eps"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not -2.0 <= self.phi_minus < 0.0:
            raise ValueError(f"phi_minus must lie in [-2, 0), got {self.phi_minus}")

    @property
    def D_min(self) -> float:
        # exact: h has range [0, 1], so D interpolates its endpoint values
        return min(self.D_e, self.D_s)

    @property
    def max_abs_m(self) -> float:
        return max(self.C1, abs(self.C1 - self.C2))

    def D(self, s):
        hv = h(s)
        return self.D_e * hv + self.D_s * (1.0 - hv)

    def sigma(self, s):
        hv = h(s)
        return self.sigma_e * hv + self.sigma_s * (1.0 - hv)

    def sigma_prime(self, s):
        return (self.sigma_e - self.sigma_s) * h_prime(s)

    def D1(self, w, s):
        """Electromigration coefficient: D(w)*s on [0, 1], cut to D_min above 1
        and to zero below 0."""
        w = np.asarray(w, dtype=float)
        s = np.asarray(s, dtype=float)
        mid = self.D(w) * s
        out = np.where(s > 1.0, self.D_min, np.where(s < 0.0, 0.0, mid))
        return out if out.ndim else float(out)

    def m(self, c):
        """Cutoff forcing coefficient: C1 - c*C2 on [0, 1], held constant outside."""
        c = np.asarray(c, dtype=float)
        out = self.C1 - np.clip(c, 0.0, 1.0) * self.C2
        return out if out.ndim else float(out)

    def deposition_drive(self, c):
        """Signed strength of the electrode reaction acting on the phase field.

        Positive where the ion concentration sustains deposition, negative where
        the reverse (dissolution) branch dominates; equals -m(c).  This is the
        coefficient the dimensional model attaches to h'(u): growth requires
        ions, so the drive increases with c.
        """
        c = np.asarray(c, dtype=float)
        out = np.clip(c, 0.0, 1.0) * self.C2 - self.C1
        return out if out.ndim else float(out)
