"""Bilinear collision operator: strong/weak evaluation and toolbox checks.

The quadrature sums run over lattice pairs (v, v*) and a polar-cap rule for
the scattering direction.  Pairs outside the joint support ball
|v|^2 + |v*|^2 <= R_g^2 + R_h^2 cannot contribute (post-collision speeds obey
the same bound by energy conservation), which cuts the pair count by an
order of magnitude for thermal-scale fields.

Gain and loss are evaluated together pointwise in sigma, so the theta -> 0
singularity only ever multiplies the O(theta) difference
g(v*') h(v') - g(v*) h(v); with interpolation the difference still vanishes
continuously as v' -> v because the primed points are displaced from the
lattice points by one common vector (v' - v = -(v*' - v*)) and interpolants
are continuous through lattice nodes.  Fields tagged analytic (the
Maxwellian) are evaluated in closed form, which makes the equilibrium
integrand cancel to machine roundoff.

The |v - v*|^gamma factor is regularized on the self-cell by the exact
radial average of r^gamma over the volume-equivalent ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, signal

from . import _collision_kernels as _ck
from .grid import DistributionField, SphericalQuadrature, VelocityGrid, build_spherical_quadrature, maxwellian
from .kernel import KernelSpec

__all__ = [
    "CollisionConfig",
    "CollisionNumericsError",
    "make_collision_config",
    "apply_collision",
    "weak_pairing",
    "conservation_pairings",
    "cancellation_residual",
    "change_of_variables_check",
    "linearized_collision",
    "coercivity_floor",
    "kinetic_convolution",
    "angular_mass",
    "loss_coefficient",
]


class CollisionNumericsError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CollisionConfig:
    """Kernel + quadrature + evaluation policy for one operator setup.

    form "strong_cutoff" integrates theta in [kernel.theta_min, pi/2] and is
    only admissible for s < 1/2; "weak_cancel" refines down to a floor chosen
    so the neglected theta-tail is below ``tail_tol`` (the difference form
    integrates theta^{1-2s} there).  ``vstar_stride`` subsamples the v*
    lattice for cost control; ``interp_order`` is 1 (trilinear) or 3 (tensor
    cubic Lagrange) for off-lattice field evaluation.
    """

    kernel: KernelSpec
    squad: SphericalQuadrature
    form: str = "weak_cancel"
    vstar_stride: int = 1
    interp_order: int = 3
    support_tol: float = 1e-12

    def __post_init__(self):
        if self.form not in ("strong_cutoff", "weak_cancel"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == "strong_cutoff" and self.kernel.s >= 0.5:
            raise ValueError(
                "strong_cutoff is not integrable for s >= 1/2; use weak_cancel"
            )
        if self.vstar_stride < 1:
            raise ValueError("vstar_stride must be >= 1")
        if self.interp_order not in (1, 3):
            raise ValueError("interp_order must be 1 (trilinear) or 3 (cubic)")


def _b_of_u(u: np.ndarray, spec: KernelSpec) -> np.ndarray:
    theta = np.arccos(np.clip(u, -1.0, 1.0))
    return spec.kappa * theta ** (-1.0 - 2.0 * spec.s) / np.sin(theta)


def make_collision_config(
    kernel: KernelSpec,
    form: str = "weak_cancel",
    nodes_per_panel: int = 3,
    n_azimuth: int = 8,
    theta_floor: float | None = None,
    tail_tol: float = 2e-4,
    vstar_stride: int = 1,
    interp_order: int = 3,
    support_tol: float = 1e-12,
) -> CollisionConfig:
    """Build a config with a quadrature matched to the form.

    For weak_cancel the polar floor defaults to tail_tol^{1/(2-2s)} (clipped
    to [1e-6, theta_min]) so that the neglected int_0^floor theta^{1-2s}
    d theta stays below tail_tol relative to the O(1) angular scale.
    """
    if form == "strong_cutoff":
        theta_lo = kernel.theta_min
    else:
        if theta_floor is None:
            theta_floor = tail_tol ** (1.0 / (2.0 - 2.0 * kernel.s))
        theta_lo = float(np.clip(theta_floor, 1e-6, kernel.theta_min))
    squad = build_spherical_quadrature(
        nodes_per_panel=nodes_per_panel, n_azimuth=n_azimuth, theta_min=theta_lo
    )
    return CollisionConfig(
        kernel=kernel,
        squad=squad,
        form=form,
        vstar_stride=vstar_stride,
        interp_order=interp_order,
        support_tol=support_tol,
    )


def _bw_polar(cfg: CollisionConfig) -> np.ndarray:
    return cfg.squad.w_polar * _b_of_u(cfg.squad.u_polar, cfg.kernel)


def angular_mass(cfg: CollisionConfig) -> float:
    """Discrete int b(cos theta) d sigma over the quadrature cap."""
    return float(np.sum(_bw_polar(cfg))) * cfg.squad.n_azimuth


def _regularization(grid: VelocityGrid, gamma: float) -> tuple[float, float]:
    # Volume-equivalent ball radius and the exact ball average of r^gamma.
    r_eq = grid.spacing * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
    return r_eq, 3.0 / (3.0 + gamma) * r_eq**gamma


def _analytic_code(f: DistributionField) -> int:
    return _ck.ANALYTIC_MAXWELLIAN if f.analytic == "maxwellian" else _ck.ANALYTIC_NONE


def _support_radius_sq(f: DistributionField, tol: float) -> float:
    if f.analytic == "maxwellian":
        return -2.0 * math.log(tol)
    vals = np.abs(f.values)
    peak = float(vals.max())
    if peak == 0.0:
        return 0.0
    mask = vals > tol * peak
    r2 = f.grid.speed_sq()[mask]
    margin = 2.0 * f.grid.spacing
    return float((np.sqrt(r2.max()) + margin) ** 2)


def _pair_bound_sq(g: DistributionField, h: DistributionField, cfg: CollisionConfig) -> float:
    return _support_radius_sq(g, cfg.support_tol) + _support_radius_sq(h, cfg.support_tol)


def _common_args(cfg: CollisionConfig, grid: VelocityGrid):
    r_reg, k_reg = _regularization(grid, cfg.kernel.gamma)
    return dict(
        n=grid.n_per_axis,
        origin=-grid.radius,
        spacing=grid.spacing,
        cell_vol=grid.cell_volume,
        u_pol=cfg.squad.u_polar,
        bw_pol=_bw_polar(cfg),
        cos_az=cfg.squad.cos_az,
        sin_az=cfg.squad.sin_az,
        gamma=cfg.kernel.gamma,
        r_reg=r_reg,
        k_reg=k_reg,
    )


def apply_collision(g: DistributionField, h: DistributionField,
                    cfg: CollisionConfig) -> DistributionField:
    """Q(g, h) on every lattice point."""
    if g.grid != h.grid:
        raise ValueError("g and h must share a grid")
    grid = g.grid
    out = np.empty_like(h.values)
    _ck.collide_tensor(
        g.values,
        h.values,
        _analytic_code(g),
        _analytic_code(h),
        cfg.interp_order,
        stride=cfg.vstar_stride,
        rsum_max_sq=_pair_bound_sq(g, h, cfg),
        out=out,
        **_common_args(cfg, grid),
    )
    if not np.all(np.isfinite(out)):
        idx = np.argwhere(~np.isfinite(out))[0]
        raise CollisionNumericsError(f"non-finite collision output at grid index {tuple(idx)}")
    return DistributionField(grid, out)


def weak_pairing(g: DistributionField, h: DistributionField, f: DistributionField,
                 cfg: CollisionConfig) -> float:
    """<Q(g, h), f> by the pre-post-collisional weak form.

    Triple sum of w B g(v*) h(v) (f(v') - f(v)); must agree with pairing the
    strong-form output against f within the combined quadrature tolerance.
    """
    if not (g.grid == h.grid == f.grid):
        raise ValueError("fields must share a grid")
    grid = g.grid
    partial = np.empty(grid.n_per_axis**3)
    _ck.weak_pair_field(
        g.values,
        h.values,
        f.values,
        _analytic_code(g),
        _analytic_code(h),
        _analytic_code(f),
        cfg.interp_order,
        stride=cfg.vstar_stride,
        rsum_max_sq=_pair_bound_sq(g, h, cfg),
        partial=partial,
        **_common_args(cfg, grid),
    )
    return float(partial.sum())


def conservation_pairings(F: DistributionField, cfg: CollisionConfig) -> dict:
    """Weak-form defects <Q(F,F), phi> for phi in {1, v, |v|^2}.

    Returns absolute defects plus the gross pairing scale
    sum w B |F_* F| <v'>^2 used for the relative figures.
    """
    grid = F.grid
    partial = np.empty((grid.n_per_axis**3, 6))
    _ck.weak_pair_conserved(
        F.values,
        F.values,
        stride=cfg.vstar_stride,
        rsum_max_sq=_pair_bound_sq(F, F, cfg),
        partial=partial,
        **_common_args(cfg, grid),
    )
    sums = partial.sum(axis=0)
    gross = max(float(sums[5]), 1e-300)
    return {
        "mass": 0.0,
        "momentum": np.array(sums[0:3]),
        "energy": float(sums[3]),
        "gross": gross,
        "rel_momentum": float(np.abs(sums[0:3]).max()) / gross,
        "rel_energy": abs(float(sums[3])) / gross,
    }


@lru_cache(maxsize=16)
def _kinetic_kernel_block(n: int, radius: float, gamma: float) -> np.ndarray:
    grid = VelocityGrid(n, radius)
    r_reg, k_reg = _regularization(grid, gamma)
    off = grid.spacing * np.arange(-(n - 1), n)
    ox, oy, oz = np.meshgrid(off, off, off, indexing="ij")
    r = np.sqrt(ox * ox + oy * oy + oz * oz)
    with np.errstate(divide="ignore"):
        block = np.where(r < r_reg, k_reg, r**gamma)
    return block


def kinetic_convolution(f: DistributionField, gamma: float) -> np.ndarray:
    """(|.|^gamma * f)(v) on the lattice via FFT, self-cell regularized."""
    grid = f.grid
    block = _kinetic_kernel_block(grid.n_per_axis, grid.radius, gamma)
    return grid.cell_volume * signal.fftconvolve(f.values, block, mode="same")


def loss_coefficient(g: DistributionField, cfg: CollisionConfig) -> np.ndarray:
    """c_g(v) = int B g(v*) d sigma dv*: multiplication part of the loss term."""
    return angular_mass(cfg) * kinetic_convolution(g, cfg.kernel.gamma)


def coercivity_floor(F: DistributionField, gamma: float) -> float:
    """min over the lattice of <v>^{-gamma} int |v - v*|^gamma F(v*) dv*."""
    conv = kinetic_convolution(F, gamma)
    return float(np.min(conv * F.grid.bracket_sq() ** (-0.5 * gamma)))


def _angular_difference_integral(kern: KernelSpec, theta_lo: float, exponent: float) -> float:
    """2 pi int sin(theta) b(cos theta) [w(theta/2)^{-exponent} - 1] d theta.

    w = cos for the regular direction (exponent 3 + gamma), sin for the
    singular one handled by the caller through ``exponent`` sign tricks; the
    bracket is evaluated via expm1 so the theta^2 smallness survives.
    """

    def integrand(theta):
        b_sin = kern.kappa * theta ** (-1.0 - 2.0 * kern.s)
        return b_sin * math.expm1(-exponent * math.log(math.cos(0.5 * theta)))

    val, _ = integrate.quad(integrand, theta_lo, math.pi / 2, limit=400)
    return 2.0 * math.pi * val


def _angular_singular_integral(kern: KernelSpec, theta_lo: float, exponent: float) -> float:
    def integrand(theta):
        b_sin = kern.kappa * theta ** (-1.0 - 2.0 * kern.s)
        return b_sin * (math.sin(0.5 * theta) ** (-exponent) - 1.0)

    val, _ = integrate.quad(integrand, theta_lo, math.pi / 2, limit=400)
    return 2.0 * math.pi * val


def _scatter_diff(field_vals, analytic, cfg, grid, point, flip: bool, rmax_sq: float):
    partial = np.empty(grid.n_per_axis**3)
    args = _common_args(cfg, grid)
    if flip:
        # reverse the relative direction: theta measured from (fixed - loop)
        args = dict(args)
        args["u_pol"] = -args["u_pol"]
    _ck.scatter_diff_fixed_vstar(
        field_vals,
        analytic,
        cfg.interp_order,
        wx=point[0],
        wy=point[1],
        wz=point[2],
        rmax_sq=rmax_sq,
        partial=partial,
        **args,
    )
    return float(partial.sum())


def cancellation_residual(f: DistributionField, cfg: CollisionConfig,
                          v_star_samples=None) -> dict:
    """Residual of int int B (f' - f) dv d sigma = (f * S)(v*).

    S(z) = |z|^gamma 2 pi int sin b [cos^{-3-gamma}(theta/2) - 1] d theta with
    the same angular truncation as the quadrature; the convolution side is
    evaluated by FFT.  Returns max residual over the v* sample plus the scale
    of the convolution side.
    """
    grid = f.grid
    if v_star_samples is None:
        ax = grid.axis()
        n = grid.n_per_axis
        picks = [n // 2, n // 2 + n // 8, n // 2 - n // 4]
        v_star_samples = [np.array([ax[i], ax[j], ax[k]]) for i in picks for j, k in [(n // 2, n // 2)]]
        v_star_samples.append(np.array([ax[n // 2 + n // 8]] * 3))
    theta_lo = cfg.squad.theta_min
    s_const = _angular_difference_integral(cfg.kernel, theta_lo, 3.0 + cfg.kernel.gamma)
    conv = s_const * kinetic_convolution(f, cfg.kernel.gamma)
    analytic = _analytic_code(f)
    r_f = math.sqrt(_support_radius_sq(f, cfg.support_tol))
    worst = 0.0
    scale = float(np.abs(conv).max()) + 1e-300
    for vs in v_star_samples:
        vs = np.asarray(vs, dtype=float)
        rmax_sq = (3.0 * r_f + 2.0 * float(np.linalg.norm(vs))) ** 2
        lhs = _scatter_diff(f.values, analytic, cfg, grid, vs, flip=False, rmax_sq=rmax_sq)
        idx = np.round((vs + grid.radius) / grid.spacing).astype(int)
        rhs = float(conv[idx[0], idx[1], idx[2]])
        worst = max(worst, abs(lhs - rhs))
    return {"residual": worst, "scale": scale, "relative": worst / scale}


def change_of_variables_check(f_radial, gamma: float, cfg: CollisionConfig,
                              n: int = 64, radius: float = 8.0) -> tuple[float, float]:
    """Relative residuals of the regular/singular scattering reparametrizations.

    ``f_radial`` is a smooth compactly supported radial profile r -> f(r).
    Both identities are checked in difference form (the angular constant is
    the independent 1-D quadrature of b [w^{-3-gamma} - 1]) and anchored at
    the origin: fixed v* = 0 for the regular direction, fixed v = 0 for the
    singular one.

    Geometry of the two maps at the origin: regular |v'| = |v| cos(theta/2)
    keeps the preimage of supp f inside sqrt(2) r_f; singular
    |v'| = |v*| sin(theta/2) pulls it out to r_f / sin(theta/2), so the
    singular cap is truncated at theta_sing = max(theta_min,
    2 asin(r_f / (0.95 R))), matched on both sides of the identity.
    """
    grid = VelocityGrid(n, radius)
    kern = replace(cfg.kernel, gamma=gamma)
    r_lat = np.sqrt(grid.speed_sq())
    f_vals = np.vectorize(f_radial)(r_lat)
    peak = float(np.abs(f_vals).max())
    if peak == 0.0:
        return 0.0, 0.0
    r_reg, k_reg = _regularization(grid, gamma)
    kin0 = np.where(r_lat < r_reg, k_reg, np.maximum(r_lat, r_reg) ** gamma)
    base = float(np.sum(kin0 * f_vals)) * grid.cell_volume
    supp = np.abs(f_vals) > 1e-14 * peak
    r_f = float(np.sqrt(grid.speed_sq()[supp].max()))
    if r_f > 0.6 * radius:
        raise ValueError(f"test function support radius {r_f:.2f} too close to the lattice edge")

    # regular direction: loop v, fixed v* = 0
    cfg_reg = replace(cfg, kernel=kern)
    rmax_reg = (math.sqrt(2.0) * r_f + 2.0 * grid.spacing) ** 2
    diff_reg = _scatter_diff(f_vals, _ck.ANALYTIC_NONE, cfg_reg, grid, np.zeros(3), flip=False,
                             rmax_sq=rmax_reg)
    a_reg = _angular_difference_integral(kern, cfg_reg.squad.theta_min, 3.0 + gamma)
    res_regular = abs(diff_reg - a_reg * base) / (abs(a_reg * base) + 1e-300)

    # singular direction: loop v*, fixed v = 0, cap wide enough that the
    # preimage of supp f fits the lattice
    theta_sing = max(kern.theta_min, 2.0 * math.asin(min(1.0, r_f / (0.95 * radius))))
    sing_cfg = CollisionConfig(
        kernel=kern,
        squad=build_spherical_quadrature(
            nodes_per_panel=6, n_azimuth=cfg.squad.n_azimuth, theta_min=theta_sing
        ),
        form="weak_cancel",
        interp_order=cfg.interp_order,
    )
    rmax_sing = (r_f / math.sin(0.5 * theta_sing) + 2.0 * grid.spacing) ** 2
    diff_sing = _scatter_diff(f_vals, _ck.ANALYTIC_NONE, sing_cfg, grid, np.zeros(3), flip=True,
                              rmax_sq=rmax_sing)
    a_sing = _angular_singular_integral(kern, theta_sing, 3.0 + gamma)
    res_singular = abs(diff_sing - a_sing * base) / (abs(a_sing * base) + 1e-300)
    return res_regular, res_singular


@lru_cache(maxsize=8)
def _mu_cached(n: int, radius: float) -> DistributionField:
    return maxwellian(VelocityGrid(n, radius))


def linearized_collision(f: DistributionField, cfg: CollisionConfig) -> DistributionField:
    """L f = -Q(mu, f) - Q(f, mu) with the equilibrium evaluated in closed form."""
    mu = _mu_cached(f.grid.n_per_axis, f.grid.radius)
    q1 = apply_collision(mu, f, cfg)
    q2 = apply_collision(f, mu, cfg)
    return f.with_values(-(q1.values + q2.values))
