"""Compiled inner loops for the collision quadrature.

Everything here is numba-jitted and deterministic: parallel loops accumulate
into per-output slots that are combined in a fixed order by the callers.
Field evaluation at off-lattice points is tensor Lagrange interpolation
(order 1 or 3); arguments tagged analytic=1 are evaluated as the closed-form
Maxwellian instead, which makes the equilibrium integrand cancel to roundoff.
"""

import math

import numpy as np
from numba import njit, prange

_MU_NORM = (2.0 * math.pi) ** -1.5

ANALYTIC_NONE = 0
ANALYTIC_MAXWELLIAN = 1

# exp(-x/2) lookup for the analytic Maxwellian path: linear interpolation on a
# step-0.01 table is ~3e-6 relative, far below quadrature tolerances, and
# roughly halves the per-node cost of the hot loops.
_EXP_STEP = 0.01
_EXP_XMAX = 320.0
_EXP_TABLE = np.exp(-0.5 * np.arange(0.0, _EXP_XMAX + 2 * _EXP_STEP, _EXP_STEP))
_EXP_INV_STEP = 1.0 / _EXP_STEP


@njit(cache=True, inline="always")
def _mu_of_speed_sq(x):
    if x >= _EXP_XMAX:
        return 0.0
    t = x * _EXP_INV_STEP
    i = int(t)
    frac = t - i
    return _MU_NORM * (_EXP_TABLE[i] + frac * (_EXP_TABLE[i + 1] - _EXP_TABLE[i]))


@njit(cache=True, inline="always")
def _eval_trilinear(vals, n, origin, inv_sp, x, y, z):
    fx = (x - origin) * inv_sp
    fy = (y - origin) * inv_sp
    fz = (z - origin) * inv_sp
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    iz = int(math.floor(fz))
    tx = fx - ix
    ty = fy - iy
    tz = fz - iz
    if 0 <= ix < n - 1 and 0 <= iy < n - 1 and 0 <= iz < n - 1:
        c00 = vals[ix, iy, iz] * (1.0 - tx) + vals[ix + 1, iy, iz] * tx
        c10 = vals[ix, iy + 1, iz] * (1.0 - tx) + vals[ix + 1, iy + 1, iz] * tx
        c01 = vals[ix, iy, iz + 1] * (1.0 - tx) + vals[ix + 1, iy, iz + 1] * tx
        c11 = vals[ix, iy + 1, iz + 1] * (1.0 - tx) + vals[ix + 1, iy + 1, iz + 1] * tx
        return (c00 * (1.0 - ty) + c10 * ty) * (1.0 - tz) + (c01 * (1.0 - ty) + c11 * ty) * tz
    total = 0.0
    for dx in range(2):
        jx = ix + dx
        if jx < 0 or jx >= n:
            continue
        wx = tx if dx == 1 else 1.0 - tx
        for dy in range(2):
            jy = iy + dy
            if jy < 0 or jy >= n:
                continue
            wy = ty if dy == 1 else 1.0 - ty
            for dz in range(2):
                jz = iz + dz
                if jz < 0 or jz >= n:
                    continue
                wz = tz if dz == 1 else 1.0 - tz
                total += wx * wy * wz * vals[jx, jy, jz]
    return total


@njit(cache=True, inline="always")
def _lagrange4(t):
    # 4-point Lagrange basis on nodes {-1, 0, 1, 2} evaluated at t in [0, 1];
    # returned as a register tuple so the hot loops never allocate.
    a = t - 1.0
    b = t - 2.0
    c = t + 1.0
    return (-t * a * b / 6.0, c * a * b / 2.0, -c * t * b / 2.0, c * t * a / 6.0)


@njit(cache=True, inline="always")
def _eval_cubic(vals, n, origin, inv_sp, x, y, z):
    fx = (x - origin) * inv_sp
    fy = (y - origin) * inv_sp
    fz = (z - origin) * inv_sp
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    iz = int(math.floor(fz))
    wx = _lagrange4(fx - ix)
    wy = _lagrange4(fy - iy)
    wz = _lagrange4(fz - iz)
    total = 0.0
    if 1 <= ix < n - 2 and 1 <= iy < n - 2 and 1 <= iz < n - 2:
        for dx in range(4):
            jx = ix - 1 + dx
            for dy in range(4):
                jy = iy - 1 + dy
                wxy = wx[dx] * wy[dy]
                col = (
                    wz[0] * vals[jx, jy, iz - 1]
                    + wz[1] * vals[jx, jy, iz]
                    + wz[2] * vals[jx, jy, iz + 1]
                    + wz[3] * vals[jx, jy, iz + 2]
                )
                total += wxy * col
        return total
    for dx in range(4):
        jx = ix - 1 + dx
        if jx < 0 or jx >= n:
            continue
        for dy in range(4):
            jy = iy - 1 + dy
            if jy < 0 or jy >= n:
                continue
            wxy = wx[dx] * wy[dy]
            for dz in range(4):
                jz = iz - 1 + dz
                if jz < 0 or jz >= n:
                    continue
                total += wxy * wz[dz] * vals[jx, jy, jz]
    return total


@njit(cache=True, inline="always")
def _eval_field(vals, analytic, order, n, origin, inv_sp, x, y, z):
    if analytic == ANALYTIC_MAXWELLIAN:
        return _mu_of_speed_sq(x * x + y * y + z * z)
    if order == 3:
        return _eval_cubic(vals, n, origin, inv_sp, x, y, z)
    return _eval_trilinear(vals, n, origin, inv_sp, x, y, z)


@njit(cache=True, inline="always")
def _frame(nx, ny, nz):
    # Orthonormal pair spanning the plane orthogonal to n (|n| = 1).
    if abs(nx) <= abs(ny) and abs(nx) <= abs(nz):
        e1x, e1y, e1z = 0.0, -nz, ny
    elif abs(ny) <= abs(nz):
        e1x, e1y, e1z = -nz, 0.0, nx
    else:
        e1x, e1y, e1z = -ny, nx, 0.0
    inv = 1.0 / math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    e1x *= inv
    e1y *= inv
    e1z *= inv
    e2x = ny * e1z - nz * e1y
    e2y = nz * e1x - nx * e1z
    e2z = nx * e1y - ny * e1x
    return e1x, e1y, e1z, e2x, e2y, e2z


@njit(cache=True, parallel=True, fastmath=True)
def collide_tensor(
    gv,
    hv,
    g_analytic,
    h_analytic,
    order,
    n,
    origin,
    spacing,
    cell_vol,
    u_pol,
    bw_pol,
    cos_az,
    sin_az,
    gamma,
    r_reg,
    k_reg,
    stride,
    rsum_max_sq,
    out,
):
    """Bilinear collision output on every lattice point.

    out[v] = sum_{v*, sigma} w B(|v-v*|, cos theta) [g(v*') h(v') - g(v*) h(v)].
    Pairs with |v|^2 + |v*|^2 beyond rsum_max_sq cannot contribute (gain and
    loss both vanish to field-support precision) and are skipped.
    """
    n_pol = u_pol.shape[0]
    n_az = cos_az.shape[0]
    w_star = cell_vol * stride * stride * stride
    for flat in prange(n * n * n):
        i = flat // (n * n)
        j = (flat // n) % n
        k = flat % n
        vx = origin + spacing * i
        vy = origin + spacing * j
        vz = origin + spacing * k
        vv = vx * vx + vy * vy + vz * vz
        h_here = _eval_field(hv, h_analytic, order, n, origin, 1.0 / spacing, vx, vy, vz)
        acc_out = 0.0
        for si in range(0, n, stride):
            wx = origin + spacing * si
            dx = vx - wx
            for sj in range(0, n, stride):
                wy = origin + spacing * sj
                dy = vy - wy
                for sk in range(0, n, stride):
                    wz = origin + spacing * sk
                    ws = wx * wx + wy * wy + wz * wz
                    if vv + ws > rsum_max_sq:
                        continue
                    dz = vz - wz
                    rr = dx * dx + dy * dy + dz * dz
                    if rr == 0.0:
                        continue  # v' = v for every sigma: integrand vanishes
                    r = math.sqrt(rr)
                    kin = k_reg if r < r_reg else r**gamma
                    g_star = _eval_field(gv, g_analytic, order, n, origin, 1.0 / spacing, wx, wy, wz)
                    loss = g_star * h_here
                    nx = dx / r
                    ny = dy / r
                    nz = dz / r
                    e1x, e1y, e1z, e2x, e2y, e2z = _frame(nx, ny, nz)
                    cx = 0.5 * (vx + wx)
                    cy = 0.5 * (vy + wy)
                    cz = 0.5 * (vz + wz)
                    half_r = 0.5 * r
                    acc_pair = 0.0
                    for ip in range(n_pol):
                        u = u_pol[ip]
                        st = math.sqrt(1.0 - u * u)
                        bw = bw_pol[ip]
                        acc_pol = 0.0
                        for ia in range(n_az):
                            px = st * (cos_az[ia] * e1x + sin_az[ia] * e2x) + u * nx
                            py = st * (cos_az[ia] * e1y + sin_az[ia] * e2y) + u * ny
                            pz = st * (cos_az[ia] * e1z + sin_az[ia] * e2z) + u * nz
                            vpx = cx + half_r * px
                            vpy = cy + half_r * py
                            vpz = cz + half_r * pz
                            vspx = vx + wx - vpx
                            vspy = vy + wy - vpy
                            vspz = vz + wz - vpz
                            gain = _eval_field(
                                gv, g_analytic, order, n, origin, 1.0 / spacing, vspx, vspy, vspz
                            ) * _eval_field(
                                hv, h_analytic, order, n, origin, 1.0 / spacing, vpx, vpy, vpz
                            )
                            acc_pol += gain - loss
                        acc_pair += bw * acc_pol
                    acc_out += kin * acc_pair
        out[i, j, k] = w_star * acc_out


@njit(cache=True, parallel=True, fastmath=True)
def weak_pair_field(
    gv,
    hv,
    fv,
    g_analytic,
    h_analytic,
    f_analytic,
    order,
    n,
    origin,
    spacing,
    cell_vol,
    u_pol,
    bw_pol,
    cos_az,
    sin_az,
    gamma,
    r_reg,
    k_reg,
    stride,
    rsum_max_sq,
    partial,
):
    """Pre-post weak form: partial[v-slot] sums w B g(v*) h(v) (f(v') - f(v)).

    The v* integral is the strided outer loop here (its support bound comes
    from g), and the v integral runs over the full lattice.  f is evaluated at
    the scattered point v' by interpolation (or exactly when analytic).
    """
    n_pol = u_pol.shape[0]
    n_az = cos_az.shape[0]
    w_star = cell_vol * cell_vol * stride * stride * stride
    for flat in prange(n * n * n):
        i = flat // (n * n)
        j = (flat // n) % n
        k = flat % n
        vx = origin + spacing * i
        vy = origin + spacing * j
        vz = origin + spacing * k
        vv = vx * vx + vy * vy + vz * vz
        h_here = _eval_field(hv, h_analytic, order, n, origin, 1.0 / spacing, vx, vy, vz)
        f_here = _eval_field(fv, f_analytic, order, n, origin, 1.0 / spacing, vx, vy, vz)
        if h_here == 0.0:
            partial[flat] = 0.0
            continue
        acc_v = 0.0
        for si in range(0, n, stride):
            wx = origin + spacing * si
            dx = vx - wx
            for sj in range(0, n, stride):
                wy = origin + spacing * sj
                dy = vy - wy
                for sk in range(0, n, stride):
                    wz = origin + spacing * sk
                    ws = wx * wx + wy * wy + wz * wz
                    if vv + ws > rsum_max_sq:
                        continue
                    dz = vz - wz
                    rr = dx * dx + dy * dy + dz * dz
                    if rr == 0.0:
                        continue
                    r = math.sqrt(rr)
                    kin = k_reg if r < r_reg else r**gamma
                    g_star = _eval_field(gv, g_analytic, order, n, origin, 1.0 / spacing, wx, wy, wz)
                    if g_star == 0.0:
                        continue
                    nx = dx / r
                    ny = dy / r
                    nz = dz / r
                    e1x, e1y, e1z, e2x, e2y, e2z = _frame(nx, ny, nz)
                    cx = 0.5 * (vx + wx)
                    cy = 0.5 * (vy + wy)
                    cz = 0.5 * (vz + wz)
                    half_r = 0.5 * r
                    acc_pair = 0.0
                    for ip in range(n_pol):
                        u = u_pol[ip]
                        st = math.sqrt(1.0 - u * u)
                        bw = bw_pol[ip]
                        acc_pol = 0.0
                        for ia in range(n_az):
                            px = st * (cos_az[ia] * e1x + sin_az[ia] * e2x) + u * nx
                            py = st * (cos_az[ia] * e1y + sin_az[ia] * e2y) + u * ny
                            pz = st * (cos_az[ia] * e1z + sin_az[ia] * e2z) + u * nz
                            vpx = cx + half_r * px
                            vpy = cy + half_r * py
                            vpz = cz + half_r * pz
                            f_prime = _eval_field(
                                fv, f_analytic, order, n, origin, 1.0 / spacing, vpx, vpy, vpz
                            )
                            acc_pol += f_prime - f_here
                        acc_pair += bw * acc_pol
                    acc_v += kin * g_star * acc_pair
        partial[flat] = w_star * h_here * acc_v


@njit(cache=True, parallel=True, fastmath=True)
def weak_pair_conserved(
    fv_outer,
    fv_inner,
    n,
    origin,
    spacing,
    cell_vol,
    u_pol,
    bw_pol,
    cos_az,
    sin_az,
    gamma,
    r_reg,
    k_reg,
    stride,
    rsum_max_sq,
    partial,
):
    """Weak-form pairings against the collision invariants, in one sweep.

    partial[slot, 0..4] accumulate the momentum (3), energy and mass defects
    sum w B F(v*) F(v) (phi(v') - phi(v)); partial[slot, 5] the gross scale
    sum w B |F(v*) F(v)| <v'>^2 used to normalize them.  phi = 1 contributes
    exactly zero pointwise and is reported through the mass slot as 0.
    """
    n_pol = u_pol.shape[0]
    n_az = cos_az.shape[0]
    w_star = cell_vol * cell_vol * stride * stride * stride
    for flat in prange(n * n * n):
        i = flat // (n * n)
        j = (flat // n) % n
        k = flat % n
        vx = origin + spacing * i
        vy = origin + spacing * j
        vz = origin + spacing * k
        vv = vx * vx + vy * vy + vz * vz
        f_here = fv_outer[i, j, k]
        for c in range(6):
            partial[flat, c] = 0.0
        if f_here == 0.0:
            continue
        acc_mx = 0.0
        acc_my = 0.0
        acc_mz = 0.0
        acc_en = 0.0
        acc_gross = 0.0
        for si in range(0, n, stride):
            wx = origin + spacing * si
            dx = vx - wx
            for sj in range(0, n, stride):
                wy = origin + spacing * sj
                dy = vy - wy
                for sk in range(0, n, stride):
                    wz = origin + spacing * sk
                    ws = wx * wx + wy * wy + wz * wz
                    if vv + ws > rsum_max_sq:
                        continue
                    f_star = fv_inner[si, sj, sk]
                    if f_star == 0.0:
                        continue
                    dz = vz - wz
                    rr = dx * dx + dy * dy + dz * dz
                    if rr == 0.0:
                        continue
                    r = math.sqrt(rr)
                    kin = k_reg if r < r_reg else r**gamma
                    pair_w = kin * f_star * f_here
                    abs_pair = abs(pair_w)
                    nx = dx / r
                    ny = dy / r
                    nz = dz / r
                    e1x, e1y, e1z, e2x, e2y, e2z = _frame(nx, ny, nz)
                    cx = 0.5 * (vx + wx)
                    cy = 0.5 * (vy + wy)
                    cz = 0.5 * (vz + wz)
                    half_r = 0.5 * r
                    for ip in range(n_pol):
                        u = u_pol[ip]
                        st = math.sqrt(1.0 - u * u)
                        bw = bw_pol[ip]
                        for ia in range(n_az):
                            px = st * (cos_az[ia] * e1x + sin_az[ia] * e2x) + u * nx
                            py = st * (cos_az[ia] * e1y + sin_az[ia] * e2y) + u * ny
                            pz = st * (cos_az[ia] * e1z + sin_az[ia] * e2z) + u * nz
                            vpx = cx + half_r * px
                            vpy = cy + half_r * py
                            vpz = cz + half_r * pz
                            vp2 = vpx * vpx + vpy * vpy + vpz * vpz
                            acc_mx += bw * pair_w * (vpx - vx)
                            acc_my += bw * pair_w * (vpy - vy)
                            acc_mz += bw * pair_w * (vpz - vz)
                            acc_en += bw * pair_w * (vp2 - vv)
                            acc_gross += bw * abs_pair * (1.0 + vp2)
        partial[flat, 0] = w_star * acc_mx
        partial[flat, 1] = w_star * acc_my
        partial[flat, 2] = w_star * acc_mz
        partial[flat, 3] = w_star * acc_en
        partial[flat, 5] = w_star * acc_gross


@njit(cache=True, parallel=True, fastmath=True)
def scatter_diff_fixed_vstar(
    fv,
    f_analytic,
    order,
    n,
    origin,
    spacing,
    cell_vol,
    u_pol,
    bw_pol,
    cos_az,
    sin_az,
    gamma,
    r_reg,
    k_reg,
    wx,
    wy,
    wz,
    rmax_sq,
    partial,
):
    """sum_v w B(|v - v*|) (f(v') - f(v)) for one fixed v* (cancellation test).

    Loop points beyond rmax_sq are skipped: callers size that radius so both
    f(v) and every reachable f(v') vanish there.
    """
    n_pol = u_pol.shape[0]
    n_az = cos_az.shape[0]
    for flat in prange(n * n * n):
        i = flat // (n * n)
        j = (flat // n) % n
        k = flat % n
        vx = origin + spacing * i
        vy = origin + spacing * j
        vz = origin + spacing * k
        if vx * vx + vy * vy + vz * vz > rmax_sq:
            partial[flat] = 0.0
            continue
        dx = vx - wx
        dy = vy - wy
        dz = vz - wz
        rr = dx * dx + dy * dy + dz * dz
        if rr == 0.0:
            partial[flat] = 0.0
            continue
        r = math.sqrt(rr)
        kin = k_reg if r < r_reg else r**gamma
        f_here = _eval_field(fv, f_analytic, order, n, origin, 1.0 / spacing, vx, vy, vz)
        nx = dx / r
        ny = dy / r
        nz = dz / r
        e1x, e1y, e1z, e2x, e2y, e2z = _frame(nx, ny, nz)
        cx = 0.5 * (vx + wx)
        cy = 0.5 * (vy + wy)
        cz = 0.5 * (vz + wz)
        half_r = 0.5 * r
        acc = 0.0
        for ip in range(n_pol):
            u = u_pol[ip]
            st = math.sqrt(1.0 - u * u)
            bw = bw_pol[ip]
            acc_pol = 0.0
            for ia in range(n_az):
                px = st * (cos_az[ia] * e1x + sin_az[ia] * e2x) + u * nx
                py = st * (cos_az[ia] * e1y + sin_az[ia] * e2y) + u * ny
                pz = st * (cos_az[ia] * e1z + sin_az[ia] * e2z) + u * nz
                vpx = cx + half_r * px
                vpy = cy + half_r * py
                vpz = cz + half_r * pz
                f_prime = _eval_field(fv, f_analytic, order, n, origin, 1.0 / spacing, vpx, vpy, vpz)
                acc_pol += f_prime - f_here
            acc += bw * acc_pol
        partial[flat] = cell_vol * kin * acc
