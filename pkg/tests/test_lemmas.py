import numpy as np
import pytest

from scalinglab import (
    ball_convergence_check,
    ball_domain,
    disc_lemma_check,
    empirical_delta,
    invert_by_iteration,
    linear_contraction_family,
    main_theorem_pipeline,
    mobius_unitary_family,
    orbit_to_boundary,
    surjectivity_radius,
)
from scalinglab.errors import ContractionFailure, PreconditionViolated
from scalinglab.holomap import HoloMap, linear_map
from scalinglab.lemmas import blaschke_family
from scalinglab.sampling import as_rng, ball_points


def e(k, n):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


def quadratic_perturbation(n, gamma):
    def evaluate(z):
        return z + gamma * z ** 2

    def jacobian(z):
        return np.eye(n, dtype=complex) + 2 * gamma * np.diag(z)

    return HoloMap(evaluate, jacobian=jacobian, tag="quadratic")


class TestDiscLemma:
    def test_identity(self):
        rep = disc_lemma_check(lambda z: z, delta=0.5, eps=0.3)
        assert rep.data["sup"] == 0.0
        assert rep.all_pass

    def test_blaschke_near_identity(self):
        c = 1 - 1e-4

        def f(z):
            return z * (c + z) / (1 + c * z)

        rep = disc_lemma_check(f, delta=1e-3, eps=0.1)
        assert rep.all_pass
        assert rep.data["sup"] < 0.1

    def test_rotation_rejected(self):
        alpha = 0.5
        with pytest.raises(PreconditionViolated):
            disc_lemma_check(lambda z: np.exp(1j * alpha) * z, delta=0.5,
                             eps=0.2)

    def test_escaping_map_rejected(self):
        with pytest.raises(PreconditionViolated):
            disc_lemma_check(lambda z: 1.2 * z, delta=0.9, eps=0.2)


class TestEmpiricalDelta:
    def test_weak_demand(self):
        assert empirical_delta(0.9, budget=64) >= 1e-1

    def test_monotone_in_eps(self):
        values = [empirical_delta(eps, budget=64) for eps in (0.5, 0.2, 0.1)]
        assert values[0] >= values[1] >= values[2]
        assert values[-1] > 0

    def test_family_members_are_admissible_maps(self):
        for f, d0 in blaschke_family(budget=16):
            ring = np.exp(2j * np.pi * np.arange(64) / 64) * (1 - 1e-9)
            assert np.abs(f(ring)).max() <= 1 + 1e-9
            assert abs(f(0j)) < 1e-12
            h = 1e-6
            deriv = (f(h + 0j) - f(-h + 0j)) / (2 * h)
            assert deriv.real == pytest.approx(d0, abs=1e-6)


class TestBallConvergence:
    def test_linear_family_exact_sup(self):
        fam = linear_contraction_family(3)
        rep = ball_convergence_check(fam, 0.9, j_max=12, samples=1500, rng=0)
        sups = rep.data["sup"]
        for j, s in zip(rep.data["js"], sups):
            assert s == pytest.approx(0.9 / j, abs=1e-9)
        assert rep.all_pass is False or rep.all_pass  # margins recorded
        assert rep.entry("schwarz_h_bound").passed
        assert rep.entry("schwarz_g_bound").passed
        assert rep.entry("sup_nonincreasing").passed

    def test_mobius_family_converges(self):
        fam = mobius_unitary_family(3)
        rep = ball_convergence_check(fam, 0.8, j_max=24, samples=800, rng=1,
                                     js=list(range(2, 25, 2)))
        sups = rep.data["sup"]
        assert sups[-1] < 0.05
        assert sups[-1] < sups[0]
        assert rep.entry("schwarz_h_bound").passed
        assert rep.entry("schwarz_g_bound").passed

    def test_floor_precondition_enforced(self):
        fam = linear_contraction_family(2, floor=lambda j: 0.5 / j)
        # actual contraction 1 - 1/j sits below the claimed 1 - 0.5/j floor
        with pytest.raises(PreconditionViolated):
            ball_convergence_check(
                linear_contraction_family(2).__class__(
                    generator=lambda j: linear_map(
                        (1 - 1.0 / j) * np.eye(2, dtype=complex)),
                    floor=lambda j: 0.5 / j),
                0.9, j_max=3, samples=50, rng=2)


class TestInversionIteration:
    def test_identity_immediate(self):
        from scalinglab.holomap import identity_map

        x = np.array([0.2, -0.1j], complex)
        trace = invert_by_iteration(identity_map(2), x, 0.5, 0.1, 1e-12,
                                    check_derivative=False)
        assert trace.steps == 0
        assert trace.residuals[0] == 0.0

    def test_quadratic_root_oracle(self):
        # psi(z) = z + 0.05 z^2, x = 0.1: the true root solves the
        # quadratic 0.05 y^2 + y - 0.1 = 0, y = 10 (sqrt(1.02) - 1)
        psi = quadratic_perturbation(1, 0.05)
        x = np.array([0.1], complex)
        trace = invert_by_iteration(psi, x, 0.5, 0.06, 1e-14, rng=3)
        root = 10.0 * (np.sqrt(1.02) - 1.0)
        assert abs(trace.solution[0] - root) < 1e-12

    def test_geometric_envelope(self):
        # iterate gaps obey ||y_{k+1} - y_k|| <= eps^k ||y_1 - y_0||
        psi = quadratic_perturbation(3, 0.05)
        rng = as_rng(4)
        x = ball_points(rng, 1, 3, radius=0.5)[0]
        eps = 0.1
        trace = invert_by_iteration(psi, x, 0.7, eps, 1e-13, rng=rng)
        gaps = [np.linalg.norm(b - a) for a, b in
                zip(trace.iterates, trace.iterates[1:])]
        for k, g in enumerate(gaps[1:], start=1):
            assert g <= eps ** k * gaps[0] * (1 + 1e-6)

    def test_step_count_bound(self):
        psi = quadratic_perturbation(2, 0.05)
        x = np.array([0.3, -0.2], complex)
        tol = 1e-10
        trace = invert_by_iteration(psi, x, 0.6, 0.1, tol, rng=5)
        first_gap = trace.residuals[0]
        bound = int(np.ceil(np.log(tol / first_gap) / np.log(0.1))) + 2
        assert trace.steps <= bound

    def test_contraction_failure_raised(self):
        # ||d psi - I|| ~ 0.5 near the edge defeats the claimed eps = 0.1
        psi = quadratic_perturbation(2, 0.45)
        x = np.array([0.55, 0.0], complex)
        with pytest.raises(ContractionFailure):
            invert_by_iteration(psi, x, 0.7, 0.1, 1e-12,
                                check_derivative=False)

    def test_derivative_precondition(self):
        psi = quadratic_perturbation(2, 0.4)
        with pytest.raises(PreconditionViolated):
            invert_by_iteration(psi, np.array([0.1, 0], complex), 0.7, 0.1,
                                1e-10, rng=6)

    def test_radius_preconditions(self):
        psi = quadratic_perturbation(2, 0.01)
        with pytest.raises(PreconditionViolated):
            invert_by_iteration(psi, np.array([0.9, 0], complex), 0.5, 0.1,
                                1e-10)
        with pytest.raises(PreconditionViolated):
            invert_by_iteration(psi, np.array([0.1, 0], complex), 0.9, 0.2,
                                1e-10)


class TestSurjectivity:
    def test_identity(self):
        from scalinglab.holomap import identity_map

        rep = surjectivity_radius(identity_map(3), 0.6, 0.1, samples=50,
                                  rng=7, dim=3)
        assert rep.entry("inversion_failures").value == 0
        assert rep.entry("injectivity_margin").value == pytest.approx(1.0)

    def test_small_quadratic(self):
        psi = quadratic_perturbation(3, 0.025)
        rep = surjectivity_radius(psi, 0.7, 0.05, samples=1000, rng=8, dim=3)
        assert rep.entry("inversion_failures").value == 0
        assert rep.entry("injectivity_margin").value >= 0.95


class TestMainTheoremPipeline:
    def test_printed_constants(self):
        # c_j = (1-1/j)^2 (1+1/j)^{-1} and b_j = u(1-1/j) = log(2j-1)/2
        ball = ball_domain(4)
        rep = main_theorem_pipeline(ball, j_max=6, rng=9, sup_samples=128,
                                    qa_samples=64, surj_samples=16)
        js = rep.data["j_values"]
        assert js[0] == 2
        assert rep.data["c_j"][0] == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert rep.data["b_j"][0] == pytest.approx(0.5 * np.log(3.0),
                                                   abs=1e-15)
        cs = rep.data["c_j"]
        assert all(b > a for a, b in zip(cs, cs[1:]))
        assert cs[-1] < 1.0

    def test_t_j_decreases_to_tanh_a(self):
        ball = ball_domain(3)
        rep = main_theorem_pipeline(ball, j_max=10, rng=10, sup_samples=64,
                                    qa_samples=32, surj_samples=8,
                                    a_radius=0.5)
        ts = [t for t in rep.data["t_j"] if np.isfinite(t)]
        assert all(b < a for a, b in zip(ts, ts[1:]))
        assert ts[-1] > np.tanh(0.5)

    def test_replay_small_config_passes(self):
        ball = ball_domain(4)
        rep = main_theorem_pipeline(ball, j_max=24, rng=11, sup_samples=256,
                                    qa_samples=96, surj_samples=32)
        failing = [e.name for e in rep.entries
                   if not e.passed and e.name != "sup_closure_final"]
        assert failing == []
        sups = rep.data["sup_closure"]
        assert all(b <= a + 1e-6 for a, b in zip(sups, sups[1:]))
        assert rep.data["polar_consistency_first"] < 1e-8

    def test_off_axis_orbit(self):
        ball = ball_domain(3)
        orbit = orbit_to_boundary(ball, np.array([0.1, 0.2j, 0], complex),
                                  e(0, 3), 0.5, 12)
        rep = main_theorem_pipeline(ball, orbit=orbit, j_max=12, rng=12,
                                    sup_samples=128, qa_samples=48,
                                    surj_samples=8)
        assert rep.entry("derivative_floor_worst").passed
        assert rep.entry("qa_containment_worst").passed

    def test_needs_ball(self):
        from scalinglab import ellipsoid_domain

        with pytest.raises(PreconditionViolated):
            main_theorem_pipeline(ellipsoid_domain(3), j_max=4)
