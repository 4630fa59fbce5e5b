import math

import numpy as np
import pytest

from boltzkit.geometry import (
    CollisionTriple,
    DegenerateGeometryError,
    deviation_cosine,
    halfangle_energy,
    post_collision,
    post_collision_energy_residual,
    povzner_sandwich_check,
    transverse_unit,
)


def random_unit(rng):
    u = rng.normal(size=3)
    return u / np.linalg.norm(u)


class TestPostCollision:
    def test_head_on_rotation(self):
        t = CollisionTriple(v=[1, 0, 0], v_star=[-1, 0, 0], sigma=[0, 1, 0])
        vp, vsp = post_collision(t)
        assert np.allclose(vp, [0, 1, 0], atol=1e-15)
        assert np.allclose(vsp, [0, -1, 0], atol=1e-15)

    def test_zero_angle_is_identity(self):
        v = np.array([0.3, -1.2, 2.0])
        vs = np.array([1.0, 0.5, -0.25])
        sigma = (v - vs) / np.linalg.norm(v - vs)
        vp, vsp = post_collision(CollisionTriple(v, vs, sigma))
        assert np.allclose(vp, v, atol=1e-14)
        assert np.allclose(vsp, vs, atol=1e-14)

    def test_conservation_on_random_triples(self):
        rng = np.random.Generator(np.random.Philox(7))
        for _ in range(10_000):
            v = rng.normal(scale=3.0, size=3)
            vs = rng.normal(scale=3.0, size=3)
            t = CollisionTriple(v, vs, random_unit(rng))
            vp, vsp = post_collision(t)
            mom = np.abs(v + vs - vp - vsp).max()
            en = abs(v @ v + vs @ vs - vp @ vp - vsp @ vsp)
            scale = 1.0 + v @ v + vs @ vs
            assert mom <= 1e-12 * scale
            assert en <= 1e-12 * scale

    def test_sigma_must_be_unit(self):
        with pytest.raises(ValueError):
            CollisionTriple([1, 0, 0], [0, 0, 0], [0, 2, 0])


class TestDeviationCosine:
    def test_clamped_into_range(self):
        rng = np.random.Generator(np.random.Philox(8))
        for _ in range(1000):
            t = CollisionTriple(rng.normal(size=3), rng.normal(size=3), random_unit(rng))
            assert -1.0 <= deviation_cosine(t) <= 1.0

    def test_coincident_points_raise(self):
        t = CollisionTriple([1, 1, 1], [1, 1, 1], [1, 0, 0])
        with pytest.raises(DegenerateGeometryError):
            deviation_cosine(t)


class TestHalfangleEnergy:
    def test_theta_zero_gives_v_weight(self):
        v = np.array([1.0, 2.0, -1.0])
        assert halfangle_energy(v, [5, 5, 5], 0.0) == pytest.approx(1.0 + v @ v, rel=1e-15)

    def test_equal_velocities_angle_independent(self):
        v = np.array([0.7, -0.1, 1.4])
        want = 1.0 + v @ v
        for theta in np.linspace(0, math.pi / 2, 20):
            assert halfangle_energy(v, v, theta) == pytest.approx(want, rel=1e-14)

    def test_right_angle_mixes_half_half(self):
        # <v>^2 = 5, <v*>^2 = 2, theta = pi/2 -> 5/2 + 2/2 = 3.5
        assert halfangle_energy([2, 0, 0], [0, 1, 0], math.pi / 2) == pytest.approx(3.5, rel=1e-14)


class TestEnergyIdentity:
    def test_residual_small_on_random_generic_triples(self):
        rng = np.random.Generator(np.random.Philox(9))
        checked = 0
        while checked < 10_000:
            v = rng.normal(scale=2.0, size=3)
            vs = rng.normal(scale=2.0, size=3)
            t = CollisionTriple(v, vs, random_unit(rng))
            try:
                res = post_collision_energy_residual(t)
            except DegenerateGeometryError:
                continue
            scale = 1.0 + v @ v + vs @ vs
            assert res <= 1e-10 * scale
            checked += 1

    def test_orthogonal_transverse_reduces_to_energy_split(self):
        # Build sigma so that omega = v x n / |v x n| which is orthogonal to v.
        v = np.array([1.0, 0.5, -0.3])
        vs = np.array([-0.6, 1.1, 0.8])
        n = (v - vs) / np.linalg.norm(v - vs)
        w = np.cross(v, n)
        w /= np.linalg.norm(w)
        theta = 0.9
        t = CollisionTriple(v, vs, math.cos(theta) * n + math.sin(theta) * w)
        vp, _ = post_collision(t)
        lhs = 1.0 + vp @ vp
        assert lhs == pytest.approx(halfangle_energy(v, vs, theta), abs=1e-10)

    def test_dual_identity_with_cross_term(self):
        # sin(theta) |v-v*| (v . omega) = sin(theta) (j . omega) h~ where
        # h~ = sqrt(|v|^2 |v*|^2 - (v.v*)^2).
        rng = np.random.Generator(np.random.Philox(10))
        checked = 0
        while checked < 2000:
            v = rng.normal(scale=2.0, size=3)
            vs = rng.normal(scale=2.0, size=3)
            t = CollisionTriple(v, vs, random_unit(rng))
            rel = v - vs
            n = rel / np.linalg.norm(rel)
            h = v + vs
            hn = np.linalg.norm(h)
            if hn < 1e-8 or abs(h @ n / hn) > 1.0 - 1e-6:
                continue
            try:
                omega = transverse_unit(t)
            except DegenerateGeometryError:
                continue
            hu = h / hn
            j = hu - (hu @ n) * n
            j /= np.linalg.norm(j)
            h_tilde = math.sqrt(max(0.0, (v @ v) * (vs @ vs) - (v @ vs) ** 2))
            lhs = np.linalg.norm(rel) * (v @ omega)
            rhs = (j @ omega) * h_tilde
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs) + abs(rhs))
            checked += 1

    def test_degenerate_direction_signalled(self):
        v = np.array([1.0, 0.0, 0.0])
        vs = np.array([-1.0, 0.0, 0.0])
        with pytest.raises(DegenerateGeometryError):
            transverse_unit(CollisionTriple(v, vs, [1.0, 0.0, 0.0]))


class TestPovznerSandwich:
    @pytest.mark.parametrize("k", [4, 8, 16, 64])
    def test_random_triples_always_inside(self, k):
        rng = np.random.Generator(np.random.Philox(11 + k))
        for _ in range(1000):
            v = rng.normal(scale=3.0, size=3)
            vs = rng.normal(scale=3.0, size=3)
            theta = rng.uniform(1e-3, math.pi / 2 - 1e-3)
            assert povzner_sandwich_check(v, vs, theta, k)

    def test_equal_velocities_collapse_to_equality(self):
        v = np.array([1.3, -0.2, 0.4])
        for k in (4, 8, 32):
            for theta in (0.2, 0.7, 1.3):
                assert povzner_sandwich_check(v, v, theta, k)

    def test_exact_binomial_expansion_k8(self):
        # Direct oracle: (a+b)^4 = sum_p C(4,p) a^p b^(4-p), checked to 1e-12.
        v = np.array([1.0, 2.0, 0.5])
        vs = np.array([-0.5, 0.3, 1.5])
        theta = 0.8
        c2 = 0.5 * (1.0 + math.cos(theta))
        a = (1.0 + v @ v) * c2
        b = (1.0 + vs @ vs) * (1.0 - c2)
        direct = sum(math.comb(4, p) * a**p * b ** (4 - p) for p in range(5))
        e4 = halfangle_energy(v, vs, theta) ** 4
        assert e4 == pytest.approx(direct, rel=1e-12)
        assert povzner_sandwich_check(v, vs, theta, 8)

    def test_no_overflow_at_k1024_speed32(self):
        v = np.array([32.0, 0.0, 0.0])
        vs = np.array([0.0, 32.0, 0.0])
        assert povzner_sandwich_check(v, vs, 1.0, 1024)

    def test_odd_k_rejected(self):
        with pytest.raises(ValueError):
            povzner_sandwich_check([1, 0, 0], [0, 1, 0], 0.5, 5)
