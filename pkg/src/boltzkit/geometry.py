"""Collision geometry on the unit-sphere parametrization.

Post-collision velocities, deviation angle, the half-angle energy split
E(theta), and the two-sided binomial (Povzner) sandwich for E(theta)^{k/2}.
Half-angle quantities are always formed from cos(theta) via
cos^2(theta/2) = (1 + cos theta)/2 so nothing cancels near theta = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import log_gamma

__all__ = [
    "CollisionTriple",
    "DegenerateGeometryError",
    "post_collision",
    "deviation_cosine",
    "halfangle_energy",
    "transverse_unit",
    "post_collision_energy_residual",
    "povzner_sandwich_check",
]

_SIGMA_TOL = 1e-12
_SIN_DEGENERATE = 1e-8


class DegenerateGeometryError(ValueError):
    """Raised when the transverse direction is undefined (theta ~ 0)."""


@dataclass(frozen=True)
class CollisionTriple:
    v: np.ndarray
    v_star: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "v_star", np.asarray(self.v_star, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        norm = float(np.linalg.norm(self.sigma))
        if abs(norm - 1.0) > _SIGMA_TOL:
            raise ValueError(f"sigma must be unit length, |sigma| = {norm}")


def post_collision(t: CollisionTriple) -> tuple[np.ndarray, np.ndarray]:
    """Outgoing pair: each primed velocity sits on the collision sphere.

    v' = (v+v*)/2 + (|v-v*|/2) sigma and v*' = (v+v*)/2 - (|v-v*|/2) sigma,
    so momentum is conserved identically and energy to roundoff.
    """
    center = 0.5 * (t.v + t.v_star)
    half_rel = 0.5 * float(np.linalg.norm(t.v - t.v_star))
    return center + half_rel * t.sigma, center - half_rel * t.sigma


def deviation_cosine(t: CollisionTriple) -> float:
    """cos(theta) = ((v - v*)/|v - v*|) . sigma, clamped into [-1, 1]."""
    rel = t.v - t.v_star
    r = float(np.linalg.norm(rel))
    if r == 0.0:
        raise DegenerateGeometryError("deviation angle undefined for v = v*")
    c = float(np.dot(rel, t.sigma)) / r
    return min(1.0, max(-1.0, c))


def halfangle_energy(v, v_star, theta: float) -> float:
    """E(theta) = <v>^2 cos^2(theta/2) + <v*>^2 sin^2(theta/2)."""
    c2 = 0.5 * (1.0 + math.cos(theta))
    s2 = 1.0 - c2
    bv = 1.0 + float(np.dot(v, v))
    bw = 1.0 + float(np.dot(v_star, v_star))
    return bv * c2 + bw * s2


def transverse_unit(t: CollisionTriple) -> np.ndarray:
    """Unit component of sigma orthogonal to the relative direction.

    Gram-Schmidt of sigma against n = (v-v*)/|v-v*|; signalled as degenerate
    when sin(theta) < 1e-8 rather than fabricating a direction.
    """
    rel = t.v - t.v_star
    r = float(np.linalg.norm(rel))
    if r == 0.0:
        raise DegenerateGeometryError("transverse direction undefined for v = v*")
    n = rel / r
    perp = t.sigma - float(np.dot(t.sigma, n)) * n
    norm = float(np.linalg.norm(perp))
    if norm < _SIN_DEGENERATE:
        raise DegenerateGeometryError(f"sigma parallel to relative direction (sin theta = {norm:.2e})")
    return perp / norm


def post_collision_energy_residual(t: CollisionTriple) -> float:
    """Residual of <v'>^2 = E(theta) + sin(theta) |v-v*| (v . omega).

    omega is the transverse unit from Gram-Schmidt; raises on degenerate
    geometry instead of returning a meaningless number.
    """
    omega = transverse_unit(t)
    cos_t = deviation_cosine(t)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    theta = math.acos(cos_t)
    v_prime, _ = post_collision(t)
    lhs = 1.0 + float(np.dot(v_prime, v_prime))
    rel_norm = float(np.linalg.norm(t.v - t.v_star))
    rhs = halfangle_energy(t.v, t.v_star, theta) + sin_t * rel_norm * float(np.dot(t.v, omega))
    return abs(lhs - rhs)


def _log_binomial_pair_sum(log_a: float, log_b: float, m: int, p_from: int, p_to: int) -> float:
    """log of sum_{p=p_from}^{p_to} C(m,p) [a^p b^(m-p) + a^(m-p) b^p]."""
    if p_to < p_from:
        return -math.inf
    logs = []
    lg_m1 = log_gamma(m + 1.0)
    for p in range(p_from, p_to + 1):
        lc = lg_m1 - log_gamma(p + 1.0) - log_gamma(m - p + 1.0)
        logs.append(lc + p * log_a + (m - p) * log_b)
        logs.append(lc + (m - p) * log_a + p * log_b)
    peak = max(logs)
    return peak + math.log(sum(math.exp(x - peak) for x in logs))


def povzner_sandwich_check(v, v_star, theta: float, k: int) -> bool:
    """Two-sided binomial sandwich for E(theta)^{k/2}, log-compensated.

    True iff the truncated-pair lower sum <= E^{k/2} <= extended-pair upper
    sum, all three compared in log space so k up to 2^10 with |v| up to 32
    never overflows.
    """
    if k % 2 != 0 or k < 4:
        raise ValueError(f"sandwich check requires even k >= 4, got {k!r}")
    m = k // 2
    l_m = (m + 1) // 2
    c2 = 0.5 * (1.0 + math.cos(theta))
    s2 = 1.0 - c2
    a = (1.0 + float(np.dot(v, v))) * c2
    b = (1.0 + float(np.dot(v_star, v_star))) * s2
    if b == 0.0:
        # theta = 0 collapses the split; sandwich degenerates to equality.
        return True
    log_a, log_b = math.log(a), math.log(b)
    log_mid = m * math.log(a + b)
    log_ends_peak = max(m * log_a, m * log_b)
    log_ends = log_ends_peak + math.log(math.exp(m * log_a - log_ends_peak) + math.exp(m * log_b - log_ends_peak))

    def with_ends(log_pairs: float) -> float:
        peak = max(log_pairs, log_ends)
        return peak + math.log(math.exp(log_pairs - peak) + math.exp(log_ends - peak))

    log_upper = with_ends(_log_binomial_pair_sum(log_a, log_b, m, 1, l_m))
    log_lower = with_ends(_log_binomial_pair_sum(log_a, log_b, m, 1, l_m - 1))
    slack = 1e-12
    return (log_lower <= log_mid + slack) and (log_mid <= log_upper + slack)
