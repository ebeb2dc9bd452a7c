import numpy as np
import pytest

from scalinglab import ball_domain, cayley, orbit_to_boundary, siegel_domain
from scalinglab.automorphisms import ball_mobius, siegel_dilation
from scalinglab.errors import OutOfBall, PoleHit, UnsupportedDomain
from scalinglab.holomap import jacobian_consistency
from scalinglab.kobayashi import ball_distance, sample_kobayashi_ball
from scalinglab.sampling import as_rng, ball_points


def e(k, n):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


class TestBallMobius:
    def test_zero_center_is_identity(self):
        phi = ball_mobius(np.zeros(3, complex))
        z = np.array([0.3, -0.2j, 0.1], complex)
        assert np.allclose(phi(z), z)

    def test_defining_property(self):
        a = 0.7 * e(0, 3)
        phi = ball_mobius(a)
        assert np.abs(phi(a)).max() < 1e-14
        assert np.allclose(phi(np.zeros(3, complex)), a)

    def test_involution_on_samples(self):
        rng = as_rng(0)
        a = np.array([0.4, 0.2j, -0.1], complex)
        phi = ball_mobius(a)
        pts = ball_points(rng, 1000, 3)
        assert np.abs(phi(phi(pts)) - pts).max() < 1e-10

    def test_maps_ball_into_ball(self):
        rng = as_rng(1)
        phi = ball_mobius(np.array([0.5, 0.3j], complex))
        pts = ball_points(rng, 500, 2)
        assert np.linalg.norm(phi(pts), axis=-1).max() < 1.0

    def test_norm_identity(self):
        # 1 - ||phi_a(z)||^2 = (1-||a||^2)(1-||z||^2) / |1 - <z,a>|^2
        rng = as_rng(2)
        a = np.array([0.3, -0.4j, 0.1], complex)
        phi = ball_mobius(a)
        pts = ball_points(rng, 300, 3)
        lhs = 1 - np.linalg.norm(phi(pts), axis=-1) ** 2
        inner = np.sum(pts * np.conj(a), axis=-1)
        rhs = ((1 - np.linalg.norm(a) ** 2)
               * (1 - np.linalg.norm(pts, axis=-1) ** 2)
               / np.abs(1 - inner) ** 2)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_jacobian_matches_finite_differences(self):
        rng = as_rng(3)
        phi = ball_mobius(np.array([0.2, 0.5j, -0.3], complex))
        for z in ball_points(rng, 10, 3, radius=0.8):
            assert jacobian_consistency(phi, z) < 1e-6

    def test_distance_invariance(self):
        rng = as_rng(4)
        phi = ball_mobius(np.array([0.45, 0.2], complex))
        xs = ball_points(rng, 200, 2)
        ys = ball_points(rng, 200, 2)
        before = ball_distance(xs, ys)
        after = ball_distance(phi(xs), phi(ys))
        assert np.abs(before - after).max() < 1e-9

    def test_out_of_ball_raises(self):
        with pytest.raises(OutOfBall):
            ball_mobius(1.01 * e(0, 2))


class TestCayley:
    def test_center_correspondence(self):
        psi, _ = cayley(3)
        assert np.abs(psi(np.array([1.0, 0, 0], complex))).max() < 1e-14

    def test_distinguished_boundary_point(self):
        psi, _ = cayley(3)
        img = psi(np.zeros(3, complex))
        assert np.allclose(img, e(0, 3))

    def test_algebraic_identity(self):
        # 1 - ||Psi(w)||^2 = 4 (Re w1 - ||w'||^2) / |1 + w1|^2
        rng = as_rng(5)
        psi, _ = cayley(3)
        wp = 0.5 * ball_points(rng, 1000, 2)
        w1 = (np.linalg.norm(wp, axis=-1) ** 2 + rng.random(1000)
              + 1j * rng.standard_normal(1000))
        w = np.concatenate([w1[:, None], wp], axis=1)
        lhs = 1 - np.linalg.norm(psi(w), axis=-1) ** 2
        rhs = (4 * (np.real(w1) - np.linalg.norm(wp, axis=-1) ** 2)
               / np.abs(1 + w1) ** 2)
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_round_trip(self):
        rng = as_rng(6)
        psi, psi_inv = cayley(4)
        wp = 0.4 * ball_points(rng, 200, 3)
        w1 = np.linalg.norm(wp, axis=-1) ** 2 + 0.1 + rng.random(200)
        w = np.concatenate([w1[:, None] + 0.2j, wp], axis=1)
        assert np.abs(psi_inv(psi(w)) - w).max() < 1e-12

    def test_boundary_to_boundary(self):
        rng = as_rng(7)
        psi, _ = cayley(3)
        wp = 0.5 * ball_points(rng, 200, 2)
        w1 = np.linalg.norm(wp, axis=-1) ** 2 + 1j * rng.standard_normal(200)
        w = np.concatenate([w1[:, None], wp], axis=1)
        assert np.abs(np.linalg.norm(psi(w), axis=-1) - 1.0).max() < 1e-10

    def test_pole(self):
        psi, _ = cayley(2)
        with pytest.raises(PoleHit):
            psi(np.array([-1.0, 0.0], complex))

    def test_dilation_conjugation_fixes_poles(self):
        # Cayley-conjugated dilations are ball automorphisms fixing +-e1
        psi, psi_inv = cayley(3)
        dil = siegel_dilation(0.6, 3)
        rng = as_rng(8)
        pts = ball_points(rng, 200, 3, radius=0.9)
        conj = psi(dil(psi_inv(pts)))
        assert np.linalg.norm(conj, axis=-1).max() < 1.0
        assert np.abs(psi(dil(psi_inv(e(0, 3) * (1 - 1e-9)))) - e(0, 3)
                      ).max() < 1e-6


class TestOrbits:
    def test_ball_axis_orbit(self):
        ball = ball_domain(3)
        orbit = orbit_to_boundary(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.5, count=8)
        gaps = orbit.gaps()
        for j, g in enumerate(gaps, start=1):
            assert g == pytest.approx(0.5 ** j, abs=1e-12)
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_ball_offcenter_base(self):
        ball = ball_domain(3)
        q = np.array([0.2, 0.3j, 0], complex)
        orbit = orbit_to_boundary(ball, q, e(0, 3), rate=0.5, count=6)
        gaps = orbit.gaps()
        for j, g in enumerate(gaps, start=1):
            assert g == pytest.approx(0.5 ** j, abs=1e-12)
        # exact automorphisms: interior samples stay interior
        rng = as_rng(9)
        pts = ball_points(rng, 200, 3)
        for m in orbit.maps:
            assert np.linalg.norm(m(pts), axis=-1).max() < 1.0
            assert np.linalg.cond(m.jacobian(q)) < 1e8

    def test_siegel_dilation_orbit(self):
        sieg = siegel_domain(3)
        q = np.array([1.0, 0, 0], complex)
        orbit = orbit_to_boundary(sieg, q, np.zeros(3, complex), rate=0.5,
                                  count=6)
        gaps = orbit.gaps()
        for j, g in enumerate(gaps, start=1):
            assert g == pytest.approx(0.5 ** j, abs=1e-12)

    def test_siegel_needs_origin_target(self):
        sieg = siegel_domain(3)
        with pytest.raises(UnsupportedDomain):
            orbit_to_boundary(sieg, np.array([1.0, 0, 0], complex),
                              np.array([0, 1.0, 0], complex), 0.5, 4)

    def test_unsupported_catalog(self):
        from scalinglab import ellipsoid_domain

        with pytest.raises(UnsupportedDomain):
            orbit_to_boundary(ellipsoid_domain(3), np.zeros(3, complex),
                              e(0, 3), 0.5, 4)

    def test_orbit_localizes_kobayashi_ball(self):
        # images of a fixed Kobayashi ball contract into any neighborhood
        # of the target once j is large; report the threshold index
        ball = ball_domain(3)
        q = np.zeros(3, complex)
        orbit = orbit_to_boundary(ball, q, e(0, 3), rate=0.5, count=12)
        rng = as_rng(10)
        pts = sample_kobayashi_ball(ball, q, 1.0, 400, rng)
        threshold = None
        for j, m in enumerate(orbit.maps, start=1):
            reach = np.linalg.norm(m(pts) - e(0, 3), axis=-1).max()
            if reach < 0.1 and threshold is None:
                threshold = j
        assert threshold is not None
        # once inside, deeper maps stay inside
        for m in orbit.maps[threshold - 1:]:
            assert np.linalg.norm(m(pts) - e(0, 3), axis=-1).max() < 0.1
