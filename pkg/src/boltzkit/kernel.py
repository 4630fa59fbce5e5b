"""Collision kernel: relative-speed power times singular angular factor.

The model angular function is pinned to b(cos theta) = kappa theta^(-1-2s) / sin(theta)
on theta in (0, pi/2], zero past pi/2, so the non-integrability sandwich holds with
explicit constants (kappa, 1/kappa).  Dyadic radial pieces reuse the
decomposition module's bump/annulus pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomposition import LittlewoodPaleyPair

__all__ = [
    "KernelSpec",
    "DyadicKernelSpec",
    "SingularPointError",
    "b_angular",
    "kinetic_factor",
    "dyadic_kernel",
]


class SingularPointError(ValueError):
    """Evaluation requested exactly on the kernel singularity."""


@dataclass(frozen=True)
class KernelSpec:
    """Physical parameters and the strong-form angular cutoff policy.

    gamma: relative-speed exponent in (-3, 1]
    s: angular singularity order in (0, 1), with gamma + 2s > -1
    kappa: sandwich constant in (0, 1] (model b meets both bounds only then)
    theta_min: angular cutoff for strong-form quadrature, in (0, pi/4]
    """

    gamma: float = -1.0
    s: float = 0.25
    kappa: float = 1.0
    theta_min: float = 0.05
    support_half_sphere: bool = True

    def __post_init__(self):
        if not -3.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (-3, 1], got {self.gamma}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.gamma + 2.0 * self.s <= -1.0:
            raise ValueError(f"need gamma + 2s > -1, got {self.gamma + 2 * self.s}")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not 0.0 < self.theta_min <= math.pi / 4.0:
            raise ValueError(f"theta_min must lie in (0, pi/4], got {self.theta_min}")
        if not self.support_half_sphere:
            raise ValueError("support is restricted to the half sphere by construction")


def b_angular(cos_theta: float, spec: KernelSpec) -> float:
    """Model angular function at cos(theta); zero beyond the half sphere."""
    if cos_theta < 0.0:
        return 0.0
    if cos_theta > 1.0:
        raise ValueError(f"cos_theta must lie in [-1, 1], got {cos_theta}")
    if cos_theta == 1.0:
        raise SingularPointError("b diverges at theta = 0; use cutoff or cancellation")
    theta = math.acos(cos_theta)
    return spec.kappa * theta ** (-1.0 - 2.0 * spec.s) / math.sin(theta)


def kinetic_factor(v, v_star, gamma: float) -> float:
    """Relative-speed power |v - v*|^gamma."""
    if not -3.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (-3, 1], got {gamma}")
    if gamma == 0.0:
        return 1.0
    r = float(np.linalg.norm(np.asarray(v, dtype=float) - np.asarray(v_star, dtype=float)))
    if r == 0.0 and gamma < 0.0:
        raise SingularPointError("|v - v*|^gamma singular at coincident velocities")
    return r**gamma


@dataclass(frozen=True)
class DyadicKernelSpec:
    k_index: int
    gamma: float

    def __post_init__(self):
        if self.k_index < -1:
            raise ValueError(f"k_index must be >= -1, got {self.k_index}")


def dyadic_kernel(r: float, spec: DyadicKernelSpec, lp: LittlewoodPaleyPair) -> float:
    """Dyadic radial kernel piece: r^gamma times the shell cutoff at scale 2^k.

    The k = -1 piece uses the bump profile and keeps the r^gamma singularity
    (it is +inf at r = 0 for gamma < 0); every k >= 0 piece vanishes
    identically near the origin.
    """
    if r < 0.0:
        raise ValueError(f"r must be non-negative, got {r}")
    if spec.k_index == -1:
        cut = float(lp.psi(r))
    else:
        cut = float(lp.phi(r / 2.0**spec.k_index))
    if cut == 0.0:
        return 0.0
    if r == 0.0:
        # only reachable for k = -1 where psi(0) = 1
        if spec.gamma < 0.0:
            return math.inf
        return cut if spec.gamma == 0.0 else 0.0
    return r**spec.gamma * cut
