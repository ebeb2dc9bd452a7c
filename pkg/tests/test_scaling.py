import numpy as np
import pytest

from scalinglab import (
    ball_domain,
    build_L,
    build_stage,
    calibrate,
    cayley,
    compose_pipeline,
    ellipsoid_domain,
    hausdorff_to_siegel,
    normalize_at,
    perturbed_ball_domain,
    ray_boundary_point,
    run_ball_pipeline,
    run_synthetic_pipeline,
    scaling_diagnostics,
    schedule_radius,
    siegel_domain,
)
from scalinglab.errors import DomainEscape, NonpositiveRadius
from scalinglab.linalg import flag_preserving, max_lower_entry
from scalinglab.sampling import as_rng, unit_vectors


def e(k, n):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def parabolic_orbit(nd, js, rate=0.5, tangent=0.4, height=2.0,
                    imag_height=0.3, phase=0.7):
    """q_j marching to the origin inside the paraboloid-scaled region."""
    n = nd.dimension
    out = []
    for j in js:
        r = rate ** j
        wp = np.zeros(n - 1, dtype=complex)
        wp[0] = tangent * np.sqrt(r) * np.exp(1j * phase)
        w = np.zeros(n, dtype=complex)
        w[1:] = wp
        w[0] = nd.psi(0.0, wp) + height * r + 1j * imag_height * r
        out.append(w)
    return out


class TestBuildL:
    def test_unit_radius_is_identity(self):
        l_map = build_L(1.0)
        z = np.array([0.3 + 0.1j, -0.2, 0.5j], complex)
        assert np.allclose(l_map(z), z)

    def test_printed_substitution(self):
        # w = (1, 1, 0, ...) at r = 1/4 maps to (4, 2, 0, ...)
        l_map = build_L(0.25)
        w = np.array([1.0, 1.0, 0.0, 0.0], complex)
        assert np.allclose(l_map(w), [4.0, 2.0, 0.0, 0.0])

    def test_paraboloid_invariance_machine_precision(self):
        rng = as_rng(0)
        for r in (1.0, 0.5, 0.1, 0.05):
            l_map = build_L(r)
            for _ in range(250):
                wp = 0.7 * unit_vectors(rng, 1, 3)[0]
                t = float(rng.uniform(-1, 1))
                w = np.zeros(4, dtype=complex)
                w[0] = np.sum(np.abs(wp) ** 2) + 1j * t
                w[1:] = wp
                img = l_map(w)
                resid = np.real(img[0]) - np.sum(np.abs(img[1:]) ** 2)
                scale = max(1.0, abs(np.real(img[0])))
                assert abs(resid) <= 1e-14 * scale

    def test_nonpositive_radius(self):
        with pytest.raises(NonpositiveRadius):
            build_L(0.0)

    def test_inverse(self):
        l_map = build_L(0.3)
        z = np.array([0.2, 0.5j, 1.0], complex)
        assert np.abs(l_map.inverse(l_map(z)) - z).max() < 1e-14


class TestBuildStage:
    def test_siegel_model_stage(self):
        sieg = siegel_domain(3)
        nd = normalize_at(sieg, np.zeros(3, complex))
        q_j = np.array([0.25, 0, 0], complex)
        stage = build_stage(nd, q_j, j=2, rng=0)
        assert np.allclose(stage.p_j, np.zeros(3))
        assert stage.r_j == pytest.approx(0.25, abs=1e-12)
        assert stage.theta_j == pytest.approx(0.0, abs=1e-12)
        assert np.abs(stage.t_coeffs).max() < 1e-12
        # H is translation by -p_j = 0 here, so it is the identity
        z = np.array([0.3, 0.1j, 0], complex)
        assert np.allclose(stage.H(z), z)
        assert stage.diagnostics["stage_residual"] < 1e-12

    def test_ball_cayley_side_stage(self):
        ball = ball_domain(3)
        nd = normalize_at(ball, e(0, 3))
        # on-axis orbit point: G(a e1) = (2(1-a), 0, 0)
        a = 0.75
        q_j = np.array([2 * (1 - a), 0, 0], complex)
        stage = build_stage(nd, q_j, j=2, c1_samples=300, rng=1)
        assert stage.r_j == pytest.approx(2 * (1 - a), abs=1e-12)
        assert np.abs(stage.p_j).max() < 1e-12
        assert stage.diagnostics["c1_margin"] >= -1e-8
        assert stage.diagnostics["stage_residual"] < 1e-10

    def test_stage_identity_h_of_q(self):
        # H_j(q_j) = e^{i theta_j} r_j e1 exactly, also off axis
        pb = perturbed_ball_domain(3, delta=0.2)
        p0, _ = ray_boundary_point(pb, pb.basepoint)
        nd = normalize_at(pb, p0)
        q_j = parabolic_orbit(nd, [3])[0]
        stage = build_stage(nd, q_j, j=3, rng=2)
        target = np.zeros(3, complex)
        target[0] = np.exp(1j * stage.theta_j) * stage.r_j
        assert np.abs(stage.H(stage.q_j) - target).max() < 1e-12
        assert np.all(stage.p_j[1:] == stage.q_j[1:])

    def test_phase_decay_bound(self):
        # measured: |e^{i theta_j} - 1| < 2 sqrt(r_j) along the schedule
        pb = perturbed_ball_domain(3, delta=0.2)
        p0, _ = ray_boundary_point(pb, pb.basepoint)
        nd = normalize_at(pb, p0)
        js = list(range(2, 10))
        gaps = []
        for j, q_j in zip(js, parabolic_orbit(nd, js)):
            stage = build_stage(nd, q_j, j=j, rng=3)
            gap = abs(np.exp(1j * stage.theta_j) - 1.0)
            gaps.append(gap)
            assert gap < 2.0 * np.sqrt(stage.r_j)
        assert gaps[-1] < gaps[0]


class TestComposePipeline:
    def test_siegel_dilation_cancellation(self):
        # dilations are exactly undone by L_j: omega_j restricted to the
        # model is the identity
        sieg = siegel_domain(3)
        nd = normalize_at(sieg, np.zeros(3, complex))
        from scalinglab.automorphisms import siegel_dilation

        lam = 0.5
        phi = siegel_dilation(lam, 3)
        q = np.array([1.0, 0, 0], complex)
        q_j = nd.G(phi(q))
        stage = build_stage(nd, q_j, j=2, rng=4)
        omega, tau = compose_pipeline(nd, stage, phi=phi)
        rng = as_rng(5)
        for _ in range(20):
            wp = 0.4 * unit_vectors(rng, 1, 2)[0]
            z = np.zeros(3, complex)
            z[0] = np.sum(np.abs(wp) ** 2) + 0.5
            z[1:] = wp
            assert np.abs(omega(z) - z).max() < 1e-10

    def test_domain_escape_designed_failure(self):
        ball = ball_domain(3)
        q = np.zeros(3, complex)
        state = run_ball_pipeline(ball, q, e(0, 3), rate=0.5,
                                  j_values=[2, 3], rng=6)
        stage = state.stages[0]
        phi = state.orbit.maps[stage.j - 1]
        with pytest.raises(DomainEscape):
            compose_pipeline(state.normalized, stage, phi=phi,
                             psi=state.psi, check_radius=schedule_radius(9),
                             q=q, rng=7)

    def test_tau_image_within_tolerated_ball(self):
        ball = ball_domain(3)
        state = run_ball_pipeline(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.5, j_values=list(range(2, 7)),
                                  rng=8)
        from scalinglab.kobayashi import sample_kobayashi_ball

        rng = as_rng(9)
        for idx, tau in enumerate(state.taus):
            pts = sample_kobayashi_ball(ball, state.q, state.radii[idx],
                                        300, rng)
            norms = np.linalg.norm(tau(pts), axis=-1)
            assert norms.max() <= 1.0 + state.eps[idx] + 1e-12


class TestCalibrate:
    def test_triangular_map_is_fixed_point(self):
        # a map whose differential at the base is upper triangular with
        # positive diagonal calibrates with S = I
        from scalinglab.holomap import linear_map

        mat = np.array([[0.9, 0.2 + 0.1j, 0.0],
                        [0.0, 0.8, 0.3j],
                        [0.0, 0.0, 0.7]], dtype=complex)
        tau = linear_map(mat, tag="triangular")
        s, sigma, norms = calibrate(tau, np.zeros(3, complex))
        assert np.abs(s - np.eye(3)).max() < 1e-12
        assert min(norms) > 0

    def test_idempotent(self):
        ball = ball_domain(3)
        state = run_ball_pipeline(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.5, j_values=[2, 3, 4], rng=10)
        sigma = state.sigmas[-1]
        s2, sigma2, _ = calibrate(sigma, state.q)
        assert np.abs(s2 - np.eye(3)).max() < 1e-9

    def test_flag_preservation_and_floor(self):
        ball = ball_domain(4)
        state = run_ball_pipeline(ball, np.zeros(4, complex), e(0, 4),
                                  rate=0.5, j_values=list(range(2, 9)),
                                  rng=11)
        for idx, sigma in enumerate(state.sigmas):
            d = sigma.jacobian(state.base_points[idx])
            assert flag_preserving(d, 1e-9)
            assert np.real(np.diag(d)).min() > 0
            assert min(state.f_norms[idx]) > 0.5

    def test_uniform_differential_bounds(self):
        ball = ball_domain(3)
        state = run_ball_pipeline(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.5, j_values=list(range(2, 11)),
                                  rng=12)
        norms, inv_norms = [], []
        for idx, sigma in enumerate(state.sigmas):
            d = sigma.jacobian(state.base_points[idx])
            sv = np.linalg.svd(d, compute_uv=False)
            norms.append(sv[0])
            inv_norms.append(1.0 / sv[-1])
        assert max(norms) < 1.1
        assert max(inv_norms) < 1.3


class TestPipelineInvariants:
    def test_stage_consistency(self):
        ball = ball_domain(3)
        state = run_ball_pipeline(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.4, j_values=list(range(2, 8)),
                                  rng=13)
        for stage in state.stages:
            assert np.all(stage.p_j[1:] == stage.q_j[1:])
            assert np.linalg.norm(stage.p_j - stage.q_j) == pytest.approx(
                stage.r_j, rel=1e-12)
        rs = [s.r_j for s in state.stages]
        assert all(b < a for a, b in zip(rs, rs[1:]))

    def test_diagnostics_pass_on_ball(self):
        ball = ball_domain(4)
        state = run_ball_pipeline(ball, np.zeros(4, complex), e(0, 4),
                                  rate=0.5, j_values=list(range(2, 10)),
                                  rng=14)
        rep = scaling_diagnostics(state, rng=15)
        assert rep.all_pass
        assert max(rep.data["sigma_at_base"]) < 1e-12
        est0 = rep.data["est0_residual"]
        assert est0[-1] < est0[0]

    def test_synthetic_mode_on_ellipsoid(self):
        ell = ellipsoid_domain(3)
        nd = normalize_at(ell, e(0, 3))
        js = list(range(3, 10))
        state = run_synthetic_pipeline(nd, parabolic_orbit(nd, js),
                                       j_values=js, rng=16)
        assert len(state.stages) == len(js)
        eps_steps = np.diff(np.asarray(state.eps))
        assert eps_steps.max() <= 1e-9
        for idx, sigma in enumerate(state.sigmas):
            d = sigma.jacobian(state.base_points[idx])
            scale = max(1.0, np.linalg.norm(d, 2))
            assert max_lower_entry(d) <= 1e-9 * scale


class TestHausdorff:
    def test_siegel_model_machine_zero(self):
        sieg = siegel_domain(3)
        nd = normalize_at(sieg, np.zeros(3, complex))
        js = [2, 3, 4, 5]
        qs = [np.array([0.5 ** j, 0, 0], complex) for j in js]
        state = run_synthetic_pipeline(nd, qs, j_values=js, rng=17)
        rep = hausdorff_to_siegel(nd, state.stages, samples=100, rng=18)
        assert max(rep.data["deviation"]) < 1e-12

    def test_quadric_decay_exponent_near_one(self):
        # ball and ellipsoid graphs are even in their arguments, so the
        # rescaled deviation carries no sqrt(r) term; the honest exponent
        # is 1, not the naive cubic-term rate
        ell = ellipsoid_domain(3)
        nd = normalize_at(ell, e(0, 3))
        js = list(range(4, 14))
        state = run_synthetic_pipeline(nd, parabolic_orbit(nd, js),
                                       j_values=js, rng=19)
        rep = hausdorff_to_siegel(nd, state.stages, samples=200, rng=20)
        devs = rep.data["deviation"]
        assert all(b <= a + 1e-9 for a, b in zip(devs, devs[1:]))
        assert 0.8 <= rep.data["decay_exponent"] <= 1.2

    def test_ball_orbit_decay(self):
        ball = ball_domain(3)
        state = run_ball_pipeline(ball, np.zeros(3, complex), e(0, 3),
                                  rate=0.5, j_values=list(range(2, 10)),
                                  rng=21)
        rep = hausdorff_to_siegel(state.normalized, state.stages,
                                  samples=150, rng=22)
        devs = rep.data["deviation"]
        assert devs[-1] < devs[0]
        assert devs[-1] < 1e-2

    def test_cubic_boundary_gives_sqrt_rate(self):
        # genuine cubic boundary terms produce the sqrt(r_j) decay
        pb = perturbed_ball_domain(3, delta=0.3)
        p0, _ = ray_boundary_point(pb, pb.basepoint)
        nd = normalize_at(pb, p0)
        js = list(range(3, 15))
        state = run_synthetic_pipeline(nd, parabolic_orbit(nd, js),
                                       j_values=js, rng=23)
        rep = hausdorff_to_siegel(nd, state.stages, samples=250, rng=24)
        assert 0.3 <= rep.data["decay_exponent"] <= 0.7
