"""Exponential moment weights and the weighted energy norms.

The weight is a factorially-damped power series in a <v>^beta whose terms are
assembled entirely in log space; the series index of the largest term grows
like (beta/4) a <v>^beta, so the adaptive loop brackets it numerically instead
of trusting an asymptotic estimate.  Space-homogeneous reduction throughout:
x-derivative blocks of the energy norms are identically zero and omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import DistributionField, VelocityGrid, weighted_l2_norm
from .special import log_gamma

__all__ = [
    "ExpWeightSpec",
    "WeightSeriesError",
    "exp_weight",
    "log_exp_weight",
    "exp_weight_table",
    "exp_weight_growth_bounds",
    "energy_norm_xk",
    "energy_norm_exp",
]

_MAX_TERMS = 20_000
_LOG_OVERFLOW = 700.0


class WeightSeriesError(ArithmeticError):
    """Series loop hit the term cap before the decreasing-tail criterion."""


@dataclass(frozen=True)
class ExpWeightSpec:
    """Parameters (a, beta, M, s) of the exponential weight plus truncation tol.

    beta is strictly inside (0, 2): at beta = 2 the weight would compete with
    the Gaussian equilibrium itself and every weighted integral degenerates.
    """

    a: float = 0.5
    beta: float = 1.0
    M: int = 0
    s: float = 0.5
    series_tol: float = 1e-14

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0.0 < self.beta < 2.0:
            raise ValueError(f"beta must lie strictly in (0, 2), got {self.beta}")
        if self.M < 0 or self.M != int(self.M):
            raise ValueError(f"M must be a non-negative integer, got {self.M}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.series_tol <= 0.0:
            raise ValueError(f"series_tol must be positive, got {self.series_tol}")

    def descriptor(self) -> str:
        return f"exp_a{self.a:g}_b{self.beta:g}"


def _log_term(k: int, log_ab: float, spec: ExpWeightSpec) -> float:
    x = 4.0 * k / spec.beta
    return x * spec.s * log_ab - spec.s * (log_gamma(x + 1.0) if k > 0 else 0.0)


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def log_exp_weight(v_norm_sq: float, spec: ExpWeightSpec, max_terms: int | None = None) -> float:
    """ln of the weight at |v|^2 = v_norm_sq, never materializing huge terms."""
    if v_norm_sq < 0.0:
        raise ValueError(f"v_norm_sq must be non-negative, got {v_norm_sq}")
    log_ab = math.log(spec.a) + 0.5 * spec.beta * math.log1p(v_norm_sq)
    cap = max_terms if max_terms is not None else _MAX_TERMS
    log_tol = math.log(spec.series_tol)
    log_sum = -math.inf
    prev = math.inf
    k = spec.M
    while True:
        lt = _log_term(k, log_ab, spec)
        log_sum = _logaddexp(log_sum, lt)
        decreasing = lt < prev
        if decreasing and lt < log_tol + log_sum:
            return log_sum
        prev = lt
        k += 1
        if k - spec.M > cap:
            raise WeightSeriesError(
                f"exp weight series did not enter its decreasing tail within "
                f"{cap} terms (a <v>^beta = {math.exp(log_ab):.3g})"
            )


def exp_weight(v_norm_sq: float, spec: ExpWeightSpec, max_terms: int | None = None) -> float:
    """Weight value; +inf if it exceeds float range (the log form never does)."""
    log_val = log_exp_weight(v_norm_sq, spec, max_terms)
    return math.inf if log_val > _LOG_OVERFLOW else math.exp(log_val)


@lru_cache(maxsize=16)
def _log_table_cached(n: int, radius: float, spec: ExpWeightSpec) -> np.ndarray:
    grid = VelocityGrid(n, radius)
    log_ab = math.log(spec.a) + 0.5 * spec.beta * np.log1p(grid.speed_sq())
    log_sum = np.full_like(log_ab, -np.inf)
    prev = np.full_like(log_ab, np.inf)
    log_tol = math.log(spec.series_tol)
    for k in range(spec.M, spec.M + _MAX_TERMS):
        x = 4.0 * k / spec.beta
        lt = x * spec.s * log_ab - spec.s * (log_gamma(x + 1.0) if k > 0 else 0.0)
        log_sum = np.logaddexp(log_sum, lt)
        done = (lt < prev) & (lt < log_tol + log_sum)
        if np.all(done):
            return log_sum
        prev = lt
    raise WeightSeriesError("exp weight table did not converge on the grid")


def log_exp_weight_table(grid: VelocityGrid, spec: ExpWeightSpec) -> np.ndarray:
    return _log_table_cached(grid.n_per_axis, grid.radius, spec)


def exp_weight_table(grid: VelocityGrid, spec: ExpWeightSpec) -> np.ndarray:
    """Weight sampled on the lattice; raises naming the radius on overflow."""
    log_tab = log_exp_weight_table(grid, spec)
    if float(log_tab.max()) > _LOG_OVERFLOW:
        idx = np.unravel_index(int(np.argmax(log_tab)), log_tab.shape)
        r = math.sqrt(grid.speed_sq()[idx])
        raise WeightSeriesError(
            f"exp weight overflows float64 at |v| = {r:.3f} "
            f"(ln weight = {float(log_tab.max()):.1f} > {_LOG_OVERFLOW:g})"
        )
    return np.exp(log_tab)


def exp_weight_growth_bounds(spec: ExpWeightSpec, v_max: float, n_samples: int = 400,
                             v_min: float = 2.0) -> tuple[float, float]:
    """(min, max) of ln(weight)/<v>^beta on a radial sweep |v| in [v_min, v_max].

    The weight behaves like a stretched exponential iff both returns are
    positive and finite with a bounded ratio; the M = 0 convention is used
    regardless of spec.M (growth is a property of the full series).
    """
    if v_max < 10.0:
        raise ValueError(f"v_max must be >= 10 for a meaningful sweep, got {v_max}")
    base = ExpWeightSpec(a=spec.a, beta=spec.beta, M=0, s=spec.s, series_tol=spec.series_tol)
    radii = np.linspace(v_min, v_max, n_samples)
    ratios = [
        log_exp_weight(float(r * r), base) / (1.0 + r * r) ** (0.5 * base.beta) for r in radii
    ]
    return float(min(ratios)), float(max(ratios))


def energy_norm_xk(f: DistributionField, k: float) -> float:
    """Polynomially weighted energy norm, homogeneous reduction.

    The x-derivative blocks vanish identically for x-independent fields, so
    this is exactly the weighted L2 norm.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    return weighted_l2_norm(f, k)


def energy_norm_exp(f: DistributionField, spec: ExpWeightSpec) -> float:
    """(int weight(v) f(v)^2 dv)^{1/2}, homogeneous reduction.

    Guards against an unrepresentable weighted integrand and names the
    offending radius rather than returning inf.
    """
    g = f.grid
    log_w = log_exp_weight_table(g, spec)
    vals = f.values
    with np.errstate(divide="ignore"):
        log_f2 = 2.0 * np.log(np.abs(vals), out=np.full_like(vals, -np.inf), where=vals != 0.0)
    log_integrand = log_w + log_f2
    peak = float(log_integrand.max())
    if peak > _LOG_OVERFLOW:
        idx = np.unravel_index(int(np.argmax(log_integrand)), vals.shape)
        r = math.sqrt(g.speed_sq()[idx])
        raise WeightSeriesError(
            f"weighted integrand overflows float64 at |v| = {r:.3f} "
            f"(ln integrand = {peak:.1f})"
        )
    return math.sqrt(float(g.cell_volume * np.sum(np.exp(log_w) * vals**2)))
