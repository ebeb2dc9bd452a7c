"""Verification suites for the convergence lemmas and the full replay.

The four suites measure, at finite truncation:

  * localization margins (delegated to kobayashi.localization_check),
  * the disc rigidity estimate |f(z) - z| < eps for f(0) = 0, f'(0) near 1,
  * uniform convergence to the identity for ball self-maps with expanding
    derivative at the origin, including the Schwarz-chain intermediate
    bounds used in its proof,
  * the inversion iteration y_k = x + y_{k-1} - psi(y_{k-1}) with its
    geometric error envelope, injectivity and surjectivity margins.

main_theorem_pipeline chains everything on the ball: it builds the
calibrated scaling sequence, symmetrizes d(sigma o sigma_j^-1)(0) by polar
decomposition, forms tau_j(x) = sigma_j^-1((1-1/j) U_j^-1 x), and tracks
the operator bound d(sigma o tau_j)(0) >= c_j I with
c_j = (1-1/j)^2 (1+1/j)^-1, the sup-norm convergence of sigma o tau_j to
the identity, and the containment sigma_j(Q_a) within tanh-controlled balls.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .automorphisms import ball_mobius
from .errors import (
    ContractionFailure,
    NonConvergence,
    PreconditionViolated,
)
from .holomap import HoloMap, compose, finite_diff_jacobian, linear_map
from .kobayashi import ball_distance, ball_metric, sample_kobayashi_ball
from .report import Report
from .sampling import as_rng, ball_points, disc_grid, unit_vectors
from .scaling import run_ball_pipeline, schedule_radius


# ---------------------------------------------------------------------------
# self-map families for the ball convergence lemma


@dataclass
class SelfMapFamily:
    """Ball self-maps g_j with g_j(0) = 0 and dg_j(0) >= (1 - a_j) I."""

    generator: callable  # j -> HoloMap
    floor: callable      # j -> a_j
    name: str = "family"
    dim: int = None


def linear_contraction_family(n, floor=lambda j: 1.0 / j):
    def gen(j):
        a = floor(j)
        scale = 1.0 - a
        return HoloMap(lambda z: scale * np.asarray(z, dtype=complex),
                       jacobian=lambda z: scale * np.eye(n, dtype=complex),
                       tag=f"contraction[{j}]")

    return SelfMapFamily(generator=gen, floor=floor,
                         name="linear-contraction", dim=n)


def mobius_unitary_family(n, offset_scale=1.0, angle_scale=1.0):
    """g_j = phi_{U_j b}  o  U_j  o  phi_b with b = offset_scale e1 / j^2 and
    U_j a plane rotation by angle_scale / j; fixes 0 by construction."""
    if n < 2:
        raise ValueError("needs dimension >= 2")

    def build(j):
        b = np.zeros(n, dtype=complex)
        b[0] = offset_scale / j ** 2
        alpha = angle_scale / j
        u = np.eye(n, dtype=complex)
        u[0, 0] = np.cos(alpha)
        u[0, 1] = -np.sin(alpha)
        u[1, 0] = np.sin(alpha)
        u[1, 1] = np.cos(alpha)
        return compose(ball_mobius(u @ b), linear_map(u, tag="rot"),
                       ball_mobius(b), tag=f"mobius-corrected[{j}]")

    floors = {}

    def floor(j):
        if j not in floors:
            d0 = build(j).jacobian(np.zeros(n, dtype=complex))
            lam = np.linalg.eigvalsh(linalg.hermitian_part(d0))[0]
            floors[j] = max(1e-15, 1.0 - float(lam))
        return floors[j]

    return SelfMapFamily(generator=build, floor=floor, name="mobius-unitary",
                         dim=n)


# ---------------------------------------------------------------------------
# disc rigidity


def disc_lemma_check(f, delta, eps, radial=64, angular=256,
                     boundary_samples=256):
    """Measure sup |f(z) - z| over |z| <= 1 - eps for a disc self-map.

    Preconditions (PreconditionViolated): f maps the disc into the closed
    disc on boundary samples, f(0) = 0, and f'(0) is real with
    f'(0) > 1 - delta.
    """
    ring = (1 - 1e-9) * np.exp(2j * np.pi * np.arange(boundary_samples)
                               / boundary_samples)
    if np.max(np.abs(f(ring))) > 1.0 + 1e-10:
        raise PreconditionViolated("f leaves the closed unit disc")
    if abs(f(0.0 + 0.0j)) > 1e-12:
        raise PreconditionViolated("f(0) != 0")
    h = 1e-5
    d0 = (f(h + 0.0j) - f(-h + 0.0j)) / (2 * h)
    if abs(d0.imag) > 1e-6:
        raise PreconditionViolated(f"f'(0) = {d0:.6f} is not real")
    if d0.real <= 1.0 - delta:
        raise PreconditionViolated(
            f"f'(0) = {d0.real:.8f} <= 1 - delta = {1 - delta:.8f}")

    grid = disc_grid(radial, angular, radius=1.0 - eps)
    sup = float(np.max(np.abs(f(grid) - grid)))
    rep = Report(title="disc-rigidity")
    rep.metadata.update({"delta": delta, "eps": eps})
    rep.add("sup_deviation", sup, margin=eps - sup, tol=0.0)
    rep.data["sup"] = sup
    rep.data["fprime0"] = float(d0.real)
    return rep


def _blaschke_product(zeros):
    zeros = [complex(a) for a in zeros]

    def f(z):
        z = np.asarray(z, dtype=complex)
        out = np.array(z, copy=True)
        for a in zeros:
            out = out * (abs(a) / a) * (a - z) / (1.0 - np.conj(a) * z)
        return out

    return f


def blaschke_family(max_gap_exp=7, min_gap_exp=0.5, gaps=8, phases=(1, 1j, -1),
                    budget=256):
    """Degree <= 3 products z * prod b_a with zeros on a log-spaced radial
    grid; returns a list of (f, f'(0)) pairs."""
    radii = 1.0 - np.logspace(-float(max_gap_exp), -float(min_gap_exp), gaps)
    pool = [r * ph for r in radii for ph in phases]
    members = []
    for a in pool:
        members.append(((a,), abs(a)))
    for i in range(len(pool)):
        for k in range(i, len(pool)):
            members.append(((pool[i], pool[k]), abs(pool[i]) * abs(pool[k])))
    members = members[: int(budget)]
    return [(_blaschke_product(zs), d) for zs, d in members]


def empirical_delta(eps, budget=256, deltas=None, radial=48, angular=128):
    """Largest grid delta for which every sampled admissible Blaschke map
    satisfies the rigidity conclusion at this eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if deltas is None:
        deltas = [10.0 ** (-k) for k in range(1, 7)]
    family = blaschke_family(budget=budget)
    grid = disc_grid(radial, angular, radius=1.0 - eps)
    for delta in deltas:
        ok = True
        for f, d0 in family:
            if d0 <= 1.0 - delta:
                continue
            if np.max(np.abs(f(grid) - grid)) >= eps:
                ok = False
                break
        if ok:
            return float(delta)
    return 0.0


# ---------------------------------------------------------------------------
# ball convergence


def ball_convergence_check(family, r, j_max, samples=10000, zeta_count=8,
                           z_radial=12, z_angular=12, rng=0, js=None):
    """Uniform convergence of g_j to the identity on rB, with the proof's
    intermediate Schwarz bounds checked on sampled (z, zeta)."""
    if not 0 < r < 1:
        raise PreconditionViolated("need 0 < r < 1")
    rng = as_rng(rng)
    rep = Report(title="ball-convergence")
    if js is None:
        js = list(range(1, j_max + 1))
    n = family.dim if family.dim is not None else _family_dim(
        family.generator(js[0]))

    pts = ball_points(rng, samples, n, radius=r)
    shell = r * unit_vectors(rng, max(64, samples // 16), n)
    pts = np.concatenate([pts, shell], axis=0)
    zetas = unit_vectors(rng, zeta_count, n)
    zgrid = disc_grid(z_radial, z_angular, radius=r)

    sups = []
    h_margin = np.inf
    g_margin = np.inf
    for j in js:
        g = family.generator(j)
        a_j = family.floor(j)
        d0 = g.jacobian(np.zeros(n, dtype=complex))
        if not linalg.operator_geq(linalg.hermitian_part(d0),
                                   (1.0 - a_j) * np.eye(n)):
            raise PreconditionViolated(
                f"dg_{j}(0) fails the (1 - a_j) lower bound")
        sups.append(float(np.max(np.linalg.norm(g(pts) - pts, axis=-1))))
        for zeta in zetas:
            zz = zgrid[:, None] * zeta[None, :]
            gz = g(zz)
            f_vals = linalg.inner(gz, zeta)
            eps_meas = float(np.max(np.abs(f_vals - zgrid)))
            eps_eff = min(max(eps_meas, 1e-15), 1.0)
            h_sq = np.linalg.norm(gz - f_vals[:, None] * zeta[None, :],
                                  axis=-1) ** 2
            dev_sq = np.linalg.norm(gz - zz, axis=-1) ** 2
            h_margin = min(h_margin,
                           float(np.min(2 * eps_eff - eps_eff ** 2 + 1e-9
                                        - h_sq)))
            g_margin = min(g_margin,
                           float(np.min(2 * eps_eff + 1e-9 - dev_sq)))
    steps = np.diff(np.asarray(sups))
    worst_step = float(steps.max()) if len(steps) else 0.0
    rep.add("sup_nonincreasing", worst_step, margin=-worst_step, tol=1e-12)
    rep.add("sup_final", sups[-1], margin=0.02 - sups[-1], tol=0.0)
    rep.add("schwarz_h_bound", h_margin, margin=h_margin, tol=0.0)
    rep.add("schwarz_g_bound", g_margin, margin=g_margin, tol=0.0)
    rep.data["sup"] = sups
    rep.data["js"] = list(js)
    return rep


def _family_dim(holo):
    for n in (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64):
        try:
            holo(np.zeros(n, dtype=complex))
            return n
        except Exception:
            continue
    raise ValueError("could not infer family dimension")


# ---------------------------------------------------------------------------
# inversion iteration


@dataclass
class IterationTrace:
    iterates: list
    residuals: list
    ratio_estimate: float
    converged: bool

    @property
    def steps(self):
        return len(self.iterates) - 1

    @property
    def solution(self):
        return self.iterates[-1]


def sampled_jacobian_deviation(psi, radius, samples=64, rng=0, dim=None):
    """max over sampled points of ||d psi - I|| on radius*B."""
    rng = as_rng(rng)
    n = dim if dim is not None else _family_dim(psi)
    pts = ball_points(rng, samples, n, radius=radius)
    eye = np.eye(n)
    worst = 0.0
    for z in pts:
        worst = max(worst, linalg.operator_norm(psi.jacobian(z) - eye))
    return float(worst)


def invert_by_iteration(psi, x, r, eps, tol, check_derivative=True,
                        deriv_samples=32, rng=0, max_extra=40):
    """Solve psi(y) = x by y_k = x + y_{k-1} - psi(y_{k-1}).

    Requires ||x|| < r, (1 + 2 eps) r < 1, and (sampled) ||d psi - I|| < eps
    on (1 + 2 eps) r B.  The residuals ||psi(y_k) - x|| contract by eps per
    step; a measured ratio above eps + 0.05 raises ContractionFailure.
    """
    x = np.asarray(x, dtype=complex)
    if np.linalg.norm(x) >= r:
        raise PreconditionViolated("||x|| must be below r")
    if (1 + 2 * eps) * r >= 1:
        raise PreconditionViolated("(1 + 2 eps) r must stay below 1")
    if check_derivative:
        dev = sampled_jacobian_deviation(psi, (1 + 2 * eps) * r,
                                         samples=deriv_samples, rng=rng)
        if dev >= eps:
            raise PreconditionViolated(
                f"sampled ||d psi - I|| = {dev:.4f} >= eps = {eps}")
    y = x.copy()
    iterates = [y]
    res = float(np.linalg.norm(psi(y) - x))
    residuals = [res]
    if res <= tol:
        return IterationTrace(iterates, residuals, 0.0, True)
    cap = int(np.ceil(np.log(tol / res) / np.log(eps))) + 2 + max_extra
    worst_ratio = 0.0
    for _ in range(cap):
        y = x + y - psi(y)
        iterates.append(y)
        new_res = float(np.linalg.norm(psi(y) - x))
        residuals.append(new_res)
        if new_res <= tol:
            if res > 1e-14:
                worst_ratio = max(worst_ratio, new_res / res)
            return IterationTrace(iterates, residuals, worst_ratio, True)
        if res > 1e-14:
            ratio = new_res / res
            if ratio > eps + 0.05:
                raise ContractionFailure(
                    f"measured ratio {ratio:.4f} > eps + 0.05 = {eps + 0.05}")
            worst_ratio = max(worst_ratio, ratio)
        res = new_res
    raise NonConvergence(f"residual {res:.3e} after {cap} iterations")


def surjectivity_radius(psi, r, eps, samples=200, tol=1e-10, rng=0,
                        pair_samples=200, dim=None, max_extra=40):
    """Invert psi over sampled targets in rB and measure injectivity margins.

    Success on every target witnesses rB inside psi(B); the injectivity
    margin is min ||psi(u) - psi(v)|| / ||u - v|| over sampled pairs in rB.
    """
    rng = as_rng(rng)
    n = dim if dim is not None else _family_dim(psi)
    dev = sampled_jacobian_deviation(psi, min((1 + 2 * eps) * r, 1 - 1e-9),
                                     samples=32, rng=rng, dim=n)
    if dev >= eps:
        raise PreconditionViolated(
            f"sampled ||d psi - I|| = {dev:.4f} >= eps = {eps}")
    rep = Report(title="surjectivity")
    targets = ball_points(rng, samples, n, radius=r * (1 - 1e-9))
    failures = 0
    max_steps = 0
    worst_ratio = 0.0
    for x in targets:
        try:
            trace = invert_by_iteration(psi, x, r, eps, tol,
                                        check_derivative=False,
                                        max_extra=max_extra)
            max_steps = max(max_steps, trace.steps)
            worst_ratio = max(worst_ratio, trace.ratio_estimate)
        except (ContractionFailure, NonConvergence):
            failures += 1
    rep.add("inversion_failures", failures, margin=-float(failures), tol=0.0)
    rep.add("max_steps", float(max_steps), margin=0.0, tol=1.0)
    rep.add("worst_ratio", worst_ratio, margin=eps + 0.05 - worst_ratio,
            tol=0.0)
    us = ball_points(rng, pair_samples, n, radius=r)
    vs = ball_points(rng, pair_samples, n, radius=r)
    gaps = np.linalg.norm(us - vs, axis=-1)
    keep = gaps > 1e-9
    ratios = (np.linalg.norm(psi(us[keep]) - psi(vs[keep]), axis=-1)
              / gaps[keep])
    margin = float(ratios.min())
    rep.add("injectivity_margin", margin, margin=margin - (1 - eps), tol=1e-9)
    rep.data["max_steps"] = max_steps
    rep.data["worst_ratio"] = worst_ratio
    return rep


# ---------------------------------------------------------------------------
# full replay


def main_theorem_pipeline(domain, orbit=None, j_max=16, rate=0.5, rng=0,
                          a_radius=1.0, sup_radius=0.9, sup_samples=512,
                          qa_samples=196, surj_samples=128, est_samples=48,
                          j_values=None):
    """Numerical replay of the biholomorphism construction on the ball.

    Builds the calibrated scaling sequence sigma_j, takes sigma = sigma_jmax
    as the limit proxy, and reports: the polar-decomposition bound
    d(sigma o tau_j)(0) >= c_j I, the sup-norm convergence of sigma o tau_j
    to the identity on sup_radius * B, the containment
    sigma_j(Q_a) in t_j (1 + 1/j) B with t_j = tanh(a / tanh(b_j - a)),
    injectivity margins of sigma on Q_a, and surjectivity of
    sigma o tau_jmax over sampled targets.
    """
    if domain.tag != "ball":
        raise PreconditionViolated("the replay needs the exact ball")
    rng = as_rng(rng)
    n = domain.dimension
    if j_values is None:
        j_values = list(range(2, j_max + 1))
    q = orbit.q if orbit is not None else np.zeros(n, dtype=complex)
    p = orbit.p if orbit is not None else linalg.basis_vector(0, n)
    state = run_ball_pipeline(domain, q, p, rate=rate, j_values=j_values,
                              rng=rng, orbit=orbit)
    rep = Report(title="theorem-replay")
    rep.metadata.update({"j_max": max(j_values), "dimension": n, "rate": rate})

    sigma = state.sigmas[-1]
    jac_sigma = sigma.jacobian(q)
    eye = np.eye(n)

    sup_pts = np.concatenate([
        ball_points(rng, sup_samples, n, radius=sup_radius),
        sup_radius * unit_vectors(rng, sup_samples // 4, n)], axis=0)
    qa_pts = sample_kobayashi_ball(domain, q, a_radius * (1 - 1e-9),
                                   qa_samples, rng)

    c_margins = []
    sup_vals = []
    qa_margins = []
    half_margins = []
    j_half_idx = max(0, len(j_values) // 2 - 1)
    jac_half = state.sigmas[j_half_idx].jacobian(q)
    taus = []
    for idx, j in enumerate(j_values):
        jac_j = state.sigmas[idx].jacobian(q)
        a_op = jac_sigma @ np.linalg.inv(jac_j)
        p_op, u_op = linalg.polar_decompose(a_op)
        scale_map = linear_map((1.0 - 1.0 / j) * np.conj(u_op.T),
                               tag=f"retract[{j}]")
        tau_j = compose(state.sigmas[idx].inverse, scale_map, tag=f"tau[{j}]")
        taus.append(tau_j)
        g_j = compose(sigma, tau_j, tag=f"closure[{j}]")
        d_comp = g_j.jacobian(np.zeros(n, dtype=complex))
        c_j = (1 - 1.0 / j) ** 2 / (1 + 1.0 / j)
        lam = np.linalg.eigvalsh(linalg.hermitian_part(d_comp))[0]
        c_margins.append(float(lam - c_j))
        consistency = np.linalg.norm(d_comp - (1 - 1.0 / j) * p_op)
        if idx == 0:
            rep.data["polar_consistency_first"] = float(consistency)
        sup_vals.append(float(np.max(
            np.linalg.norm(g_j(sup_pts) - sup_pts, axis=-1))))

        b_j = schedule_radius(j)
        if b_j > a_radius:
            t_j = np.tanh(a_radius / np.tanh(b_j - a_radius))
            norms = np.linalg.norm(state.sigmas[idx](qa_pts), axis=-1)
            qa_margins.append(float(t_j * (1 + 1.0 / j) - norms.max()))
        else:
            qa_margins.append(np.nan)

        a_half = jac_half @ np.linalg.inv(jac_j)
        p_half, _ = linalg.polar_decompose(a_half)
        lam_half = np.linalg.eigvalsh(
            linalg.hermitian_part((1 - 1.0 / j) * p_half))[0]
        half_margins.append(float(lam_half - c_j))

    rep.data["j_values"] = list(j_values)
    rep.data["c_margin"] = c_margins
    rep.data["sup_closure"] = sup_vals
    rep.data["qa_margin"] = qa_margins
    rep.data["halving_margin"] = half_margins
    rep.data["b_j"] = [schedule_radius(j) for j in j_values]
    rep.data["c_j"] = [(1 - 1.0 / j) ** 2 / (1 + 1.0 / j) for j in j_values]
    rep.data["t_j"] = [
        float(np.tanh(a_radius / np.tanh(schedule_radius(j) - a_radius)))
        if schedule_radius(j) > a_radius else np.nan for j in j_values]

    rep.add("derivative_floor_worst", min(c_margins), margin=min(c_margins),
            tol=1e-9)
    steps = np.diff(np.asarray(sup_vals))
    rep.add("sup_closure_final", sup_vals[-1], margin=0.05 - sup_vals[-1],
            tol=0.0)
    rep.add("sup_closure_nonincreasing", float(steps.max()),
            margin=-float(steps.max()), tol=1e-6)
    finite_qa = [m for m in qa_margins if np.isfinite(m)]
    rep.add("qa_containment_worst", min(finite_qa), margin=min(finite_qa),
            tol=1e-9)
    rep.add("halving_stability_worst", min(half_margins),
            margin=min(half_margins), tol=1e-9)

    us = qa_pts[: qa_samples // 2]
    vs = qa_pts[qa_samples // 2: 2 * (qa_samples // 2)]
    gaps = np.linalg.norm(us - vs, axis=-1)
    keep = gaps > 1e-9
    inj = float(np.min(np.linalg.norm(sigma(us[keep]) - sigma(vs[keep]),
                                      axis=-1) / gaps[keep]))
    rep.add("sigma_injectivity_margin", inj, margin=inj, tol=0.0)

    final_dev = sampled_jacobian_deviation(
        compose(sigma, taus[-1]), 0.96, samples=32, rng=rng, dim=n)
    eps_surj = max(0.1, 2.0 * final_dev)
    r_surj = min(0.8, 0.98 / (1 + 2 * eps_surj))
    # evaluation noise through the deep sigma_j^-1 chain scales like
    # machine epsilon over r_jmax, so the residual target must sit above it
    tol_surj = max(1e-10, 100 * np.finfo(float).eps / state.stages[-1].r_j)
    rep.data["surjectivity_eps"] = eps_surj
    rep.data["surjectivity_radius"] = r_surj
    rep.data["surjectivity_tol"] = tol_surj
    surj = surjectivity_radius(compose(sigma, taus[-1]), r_surj, eps_surj,
                               samples=surj_samples, rng=rng, dim=n,
                               tol=tol_surj)
    rep.extend(surj, prefix="surjectivity_")

    # scaling-level diagnostics ride along for CSV emission
    from .scaling import scaling_diagnostics

    diag = scaling_diagnostics(state, rng=rng)
    rep.extend(diag, prefix="scaling_")
    rep.data["state"] = state
    return rep
