"""Per-index scaling stages and the calibrated scaling sequence.

For each index j the pipeline takes an interior point q_j of the normalized
domain and builds

    H_j : affine stage map   w1 = e^{i theta_j}(z1 - p_j1) + T_j(z' - p_j'),
                             w' = z' - p_j'
    L_j : anisotropic dilation  w -> (w1/r_j, w'/sqrt(r_j))

where p_j is the boundary foot of q_j on the e1 line (the interior sits on
the Re z1 > psi side, so the foot lies at q_j - r_j e1, and q_j - p_j =
+r_j e1).  The phase and the tangential functional T_j are the unique
tangent-plane match: with g the complex gradient of the normalized defining
function at p_j,

    e^{i theta_j} = -g_1 / |g_1|,     T_j(v') = -(g' . v') / |g_1|,

which places the image domain on the side Re w1 > 0 with the supporting
hyperplane {Re w1 = 0} at the origin and makes H_j(q_j) = e^{i theta_j} r_j e1
exactly.

The bounded modification is tau_j = Psi o L_j o H_j o G (o phi_j), with Psi
the Cayley map; calibration recenters tau_j(base) to 0 by a ball Moebius
map, orthonormalizes the differential columns by Gram-Schmidt, and applies
the resulting isometry S_j, so sigma_j(base) = 0 and d sigma_j(base) is
upper triangular with positive diagonal.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .automorphisms import ball_mobius, cayley
from .domains import ray_boundary_point
from .errors import (
    DegenerateTangent,
    DomainEscape,
    NonpositiveRadius,
    PreconditionViolated,
    SingularDifferential,
)
from .holomap import compose, linear_map
from .kobayashi import ball_distance, ball_metric, sample_kobayashi_ball
from .report import Report
from .sampling import as_rng, ball_points


def schedule_radius(j):
    """Kobayashi localization radius b_j = u(1 - 1/j) = (1/2) ln(2j - 1)."""
    return 0.5 * np.log(2.0 * j - 1.0)


@dataclass
class ScalingStage:
    j: int
    q_j: np.ndarray
    p_j: np.ndarray
    r_j: float
    theta_j: float
    t_coeffs: np.ndarray  # tangential functional on (e1)^perp
    H: object
    L: object
    orientation: int = -1
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ScalingState:
    normalized: object
    psi: object                      # Cayley map
    psi_inv: object
    stages: list = field(default_factory=list)
    omegas: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    isometries: list = field(default_factory=list)   # S_j matrices
    eps: list = field(default_factory=list)
    radii: list = field(default_factory=list)        # R_j
    f_norms: list = field(default_factory=list)      # per-stage GS norms
    base_points: list = field(default_factory=list)  # calibration points
    orbit: object = None
    q: np.ndarray = None
    mode: str = "orbit"

    @property
    def js(self):
        return [s.j for s in self.stages]

    def stage_rows(self):
        """Rows for the stage CSV: j, r_j, theta_j, eps_j."""
        return [
            (s.j, s.r_j, s.theta_j, self.eps[i])
            for i, s in enumerate(self.stages)
        ]


class AnisotropicDilation:
    """Diagonal map w -> (first * w1, rest * w'), any dimension."""

    def __init__(self, first, rest, tag="dilation"):
        self.first = first
        self.rest = rest
        self.tag = tag
        self.parts = (self,)

    def __call__(self, z):
        out = np.array(z, dtype=complex, copy=True)
        out[..., 0] *= self.first
        out[..., 1:] *= self.rest
        return out

    def jacobian(self, z):
        n = np.asarray(z).shape[-1]
        d = np.full(n, self.rest, dtype=complex)
        d[0] = self.first
        return np.diag(d)

    @property
    def has_inverse(self):
        return True

    @property
    def inverse(self):
        inv = AnisotropicDilation(1.0 / self.first, 1.0 / self.rest,
                                  tag=self.tag + "^-1")
        return inv


def build_L(r_j):
    """Anisotropic dilation w -> (w1/r_j) e1 + w'/sqrt(r_j)."""
    if r_j <= 0:
        raise NonpositiveRadius(f"r_j = {r_j}")
    return AnisotropicDilation(1.0 / r_j, 1.0 / np.sqrt(r_j))


def build_stage(normalized, q_j, j, c1_samples=128, sample_scale=0.25, rng=0,
                grad_tol=1e-8):
    """Affine stage at index j: boundary foot, phase, tangential tilt.

    Verifies (sampled): the image domain piece lies on the Re w1 >= -1e-8
    side, 0 is on its boundary, and H_j(q_j) = e^{i theta_j} r_j e1.
    """
    rho_hat = normalized.rho_hat
    q_j = np.asarray(q_j, dtype=complex)
    if rho_hat.rho(q_j) >= 0:
        raise PreconditionViolated("q_j is not interior to the normalized piece")
    n = normalized.dimension

    nd_domain = _normalized_as_domain(normalized)
    p_j, r_j = ray_boundary_point(nd_domain, q_j, orientation=-1)

    g = rho_hat.cgrad(p_j)
    g1 = g[0]
    if abs(g1) < grad_tol * np.linalg.norm(g):
        raise DegenerateTangent("defining gradient nearly tangent to e1")
    eitheta = -g1 / abs(g1)
    theta = float(np.angle(eitheta))
    t_coeffs = -g[1:] / abs(g1)

    mat = np.eye(n, dtype=complex)
    mat[0, 0] = eitheta
    mat[0, 1:] = t_coeffs
    from .holomap import affine_map

    H = affine_map(mat, -mat @ p_j, tag=f"H[{j}]")
    L = build_L(r_j)

    diag = {}
    diag["rho_at_p"] = float(abs(rho_hat.rho(p_j)))
    hq = H(q_j)
    target = np.zeros(n, dtype=complex)
    target[0] = eitheta * r_j
    diag["stage_residual"] = float(np.linalg.norm(hq - target))
    diag["phase_gap"] = float(abs(eitheta - 1.0))

    # supporting-side check on boundary samples around p_j
    rng = as_rng(rng)
    scale = sample_scale * min(1.0, normalized.validity_radius)
    margins = []
    for _ in range(c1_samples):
        t = scale * (2 * rng.random() - 1)
        wp = scale * (rng.standard_normal(n - 1)
                      + 1j * rng.standard_normal(n - 1)) / np.sqrt(2 * n)
        try:
            z = normalized.boundary_sample(p_j, t, wp)
        except Exception:
            continue
        margins.append(float(np.real(H(z)[0])))
    diag["c1_margin"] = float(min(margins)) if margins else np.nan
    diag["c1_samples"] = len(margins)

    return ScalingStage(j=j, q_j=q_j, p_j=p_j, r_j=float(r_j), theta_j=theta,
                        t_coeffs=t_coeffs, H=H, L=L, diagnostics=diag)


def _normalized_as_domain(normalized):
    from .domains import DomainSpec

    n = normalized.dimension
    base = np.zeros(n, dtype=complex)
    base[0] = 1e-3
    if normalized.rho_hat.rho(base) >= 0:
        base[0] = 10 * abs(normalized.psi(0.0, np.zeros(n - 1, dtype=complex)))
    return DomainSpec(normalized.rho_hat, n, base, tag="normalized",
                      e1_orientation=-1)


def compose_pipeline(normalized, stage, phi=None, psi=None, check_radius=None,
                     q=None, escape_samples=128, rng=0):
    """Compose omega_j = L_j o H_j o G (o phi_j) and tau_j = Psi o omega_j.

    When `check_radius` and the orbit base `q` are given (model-domain mode),
    samples of the Kobayashi ball B^K(q, check_radius) are pushed through
    phi_j and must stay inside the validity neighborhood of G; otherwise
    DomainEscape is raised, signalling that the localization index for this
    radius has not been reached yet.
    """
    if psi is None:
        psi = cayley(normalized.dimension)[0]
    pieces = [stage.L, stage.H, normalized.G]
    if phi is not None:
        pieces.append(phi)
    omega = compose(*pieces, tag=f"omega[{stage.j}]")
    tau = compose(psi, omega, tag=f"tau[{stage.j}]")

    if check_radius is not None and q is not None and phi is not None:
        rng = as_rng(rng)
        pts = sample_kobayashi_ball(normalized.domain, q, check_radius,
                                    escape_samples, rng)
        moved = phi(pts)
        dist = np.linalg.norm(moved - normalized.base_point, axis=-1)
        if np.any(dist >= normalized.validity_radius):
            worst = float(dist.max())
            raise DomainEscape(
                f"K-ball of radius {check_radius:.3f} leaves the "
                f"normalization neighborhood (reach {worst:.3f} >= "
                f"{normalized.validity_radius:.3f})")
    return omega, tau


def calibrate(tau, base_point, cond_max=1e8):
    """Recenter and orthonormalize: returns (S, sigma, f_norms).

    sigma = S o phi_a o tau with a = tau(base_point); S is the unitary
    sending the Gram-Schmidt frame of d(phi_a o tau)(base) to the standard
    basis, so sigma(base) = 0 and d sigma(base) is upper triangular with
    positive diagonal.
    """
    base_point = np.asarray(base_point, dtype=complex)
    a = tau(base_point)
    if np.linalg.norm(a) >= 1.0 - 1e-12:
        raise PreconditionViolated(
            f"tau(base) has norm {np.linalg.norm(a):.6f}, cannot recenter")
    recenter = ball_mobius(a)
    tau_hat = compose(recenter, tau, tag="recentered")
    d = tau_hat.jacobian(base_point)
    svals = np.linalg.svd(d, compute_uv=False)
    if svals[-1] <= 0 or svals[0] / svals[-1] >= cond_max:
        raise SingularDifferential(
            f"differential condition number {svals[0] / max(svals[-1], 1e-300):.3e}")
    cols = [d[:, m] for m in range(d.shape[1])]
    ortho, f_norms = linalg.gram_schmidt(cols)
    s_mat = np.stack(ortho, axis=1).conj().T
    sigma = compose(linear_map(s_mat, tag="calibration",
                               inv_matrix=s_mat.conj().T),
                    tau_hat, tag="sigma")
    return s_mat, sigma, f_norms


def run_ball_pipeline(domain, q, p, rate=0.5, j_values=None, radii=None,
                      validity_radius=0.8, rng=0, escape_samples=128,
                      eps_samples=256, orbit=None):
    """Full orbit-driven pipeline on a model domain with exact automorphisms."""
    from .automorphisms import orbit_to_boundary
    from .domains import normalize_at

    if j_values is None:
        j_values = list(range(2, 11))
    j_max = max(j_values)
    rng = as_rng(rng)
    normalized = normalize_at(domain, p, validity_radius=validity_radius,
                              rng=rng)
    if orbit is None:
        orbit = orbit_to_boundary(domain, q, p, rate, j_max)
    psi_map, psi_inv = cayley(domain.dimension)
    state = ScalingState(normalized=normalized, psi=psi_map, psi_inv=psi_inv,
                         orbit=orbit, q=np.asarray(q, dtype=complex),
                         mode="orbit")
    if radii is None:
        radii = {j: schedule_radius(j) for j in j_values}
    for j in j_values:
        phi = orbit.maps[j - 1]
        q_j = normalized.G(phi(state.q))
        stage = build_stage(normalized, q_j, j, rng=rng)
        omega, tau = compose_pipeline(
            normalized, stage, phi=phi, psi=psi_map,
            check_radius=radii[j], q=state.q, escape_samples=escape_samples,
            rng=rng)
        pts = sample_kobayashi_ball(domain, state.q, radii[j], eps_samples, rng)
        eps_j = float(max(0.0, np.max(np.linalg.norm(tau(pts), axis=-1)) - 1.0))
        s_mat, sigma, f_norms = calibrate(tau, state.q)
        state.stages.append(stage)
        state.omegas.append(omega)
        state.taus.append(tau)
        state.sigmas.append(sigma)
        state.isometries.append(s_mat)
        state.eps.append(eps_j)
        state.radii.append(radii[j])
        state.f_norms.append(f_norms)
        state.base_points.append(state.q)
    return state


def run_synthetic_pipeline(normalized, q_list, j_values=None, rng=0,
                           eps_samples=256, cloud_height=4.0):
    """Stage sweep driven by a prescribed sequence q_j -> 0 in normalized
    coordinates, for catalog domains without automorphisms."""
    rng = as_rng(rng)
    if j_values is None:
        j_values = list(range(2, 2 + len(q_list)))
    psi_map, psi_inv = cayley(normalized.dimension)
    state = ScalingState(normalized=normalized, psi=psi_map, psi_inv=psi_inv,
                         mode="synthetic")
    g_inv = normalized.G.inverse
    for j, q_j in zip(j_values, q_list):
        q_j = np.asarray(q_j, dtype=complex)
        stage = build_stage(normalized, q_j, j, rng=rng)
        omega, tau = compose_pipeline(normalized, stage, phi=None, psi=psi_map)
        base = g_inv(q_j)
        pts = _parabolic_cloud(normalized, stage, eps_samples, rng,
                               height=cloud_height)
        img = tau(normalized.G(pts))
        eps_j = float(max(0.0, np.max(np.linalg.norm(img, axis=-1)) - 1.0))
        s_mat, sigma, f_norms = calibrate(tau, base)
        state.stages.append(stage)
        state.omegas.append(omega)
        state.taus.append(tau)
        state.sigmas.append(sigma)
        state.isometries.append(s_mat)
        state.eps.append(eps_j)
        state.radii.append(schedule_radius(j))
        state.f_norms.append(f_norms)
        state.base_points.append(base)
    return state


def _parabolic_cloud(normalized, stage, count, rng, height=4.0):
    """Interior points near p_j at the anisotropic scale (r_j, sqrt(r_j)).

    Returned in the original domain coordinates' preimage space of G; the
    caller maps through G.  Heights sit in (0, height*r_j], tangential
    offsets within height*sqrt(r_j).
    """
    n = normalized.dimension
    r = stage.r_j
    rng = as_rng(rng)
    pts = []
    g_inv = normalized.G.inverse
    tries = 0
    while len(pts) < count and tries < 20 * count:
        tries += 1
        s = r * height * rng.random()
        t = r * height * (2 * rng.random() - 1)
        wp = stage.p_j[1:] + np.sqrt(r) * height * 0.5 * (
            rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
        ) / np.sqrt(2 * n)
        w = np.zeros(n, dtype=complex)
        w[0] = stage.p_j[0] + s + 1j * t
        w[1:] = wp
        if normalized.rho_hat.rho(w) < 0 and normalized.in_validity(w):
            pts.append(g_inv(w))
    if not pts:
        raise PreconditionViolated("no interior cloud points found")
    return np.asarray(pts)


def scaling_diagnostics(state, v_samples=64, containment_samples=256, rng=0,
                        est_tol=1e-3):
    """Convergence and containment diagnostics across the built stages.

    Entries: recentered value at the base (exactly 0 by construction), flag
    preservation margins of d sigma_j, Cauchy differences of d sigma_j on
    each flag subspace, sampled containment for the (1 -/+ 1/j) sandwich,
    and the two-sided metric comparison

        (1 - 1/j) k(q, v) <= ||d sigma_j(q) v|| <= (1 + 1/j)(1 - 1/j)^-1 k(q, v)

    with the exact ball metric when the underlying domain is a round ball.
    """
    if len(state.stages) < 3:
        raise PreconditionViolated("need at least 3 stages")
    from .kobayashi import round_ball_of

    rng = as_rng(rng)
    rep = Report(title="scaling-diagnostics")
    n = state.normalized.dimension
    domain = state.normalized.domain

    sigma_at_base = []
    jacs = []
    for stage, sigma, base in zip(state.stages, state.sigmas,
                                  state.base_points):
        sigma_at_base.append(float(np.linalg.norm(sigma(base))))
        jacs.append(sigma.jacobian(base))
    rep.add("sigma_at_base_max", max(sigma_at_base),
            margin=1e-10 - max(sigma_at_base), tol=0.0)
    rep.data["sigma_at_base"] = sigma_at_base

    flag_margins = []
    for jmat in jacs:
        scale = max(1.0, linalg.operator_norm(jmat))
        flag_margins.append(linalg.max_lower_entry(jmat) / scale)
    rep.add("flag_preservation_max", max(flag_margins),
            margin=1e-9 - max(flag_margins), tol=0.0)
    rep.data["flag_margins"] = flag_margins
    rep.data["jacobian_norms"] = [linalg.operator_norm(j) for j in jacs]
    rep.data["jacobian_inv_norms"] = [
        1.0 / np.linalg.svd(j, compute_uv=False)[-1] for j in jacs]

    cauchy = []
    for a, b in zip(jacs[:-1], jacs[1:]):
        per_flag = [linalg.operator_norm((b - a)[:, :m]) for m in
                    range(1, n + 1)]
        cauchy.append(per_flag)
    rep.data["cauchy_per_flag"] = cauchy
    last, prev = cauchy[-1][-1], cauchy[0][-1]
    rep.add("differential_cauchy_decay", last, margin=prev - last, tol=1e-9)

    rb = round_ball_of(domain) if state.mode == "orbit" else None
    est_lo, est_hi, est0 = [], [], []
    dirs = None
    for idx, (stage, jmat, base) in enumerate(
            zip(state.stages, jacs, state.base_points)):
        j = stage.j
        if rb is None:
            est_lo.append(np.nan)
            est_hi.append(np.nan)
            est0.append(np.nan)
            continue
        if dirs is None:
            from .sampling import unit_vectors

            dirs = unit_vectors(rng, v_samples, n)
        k = ball_metric((base - rb[0]) / rb[1],
                        dirs) / rb[1]
        push = np.linalg.norm(dirs @ jmat.T, axis=-1)
        lo = np.min((push - (1 - 1 / j) * k) / k)
        hi = np.min(((1 + 1 / j) / (1 - 1 / j) * k - push) / k)
        est_lo.append(float(lo))
        est_hi.append(float(hi))
        est0.append(float(np.max(np.abs(push - k) / k)))
    rep.data["est_lo_margin"] = est_lo
    rep.data["est_hi_margin"] = est_hi
    rep.data["est0_residual"] = est0
    if rb is not None:
        rep.add("est_lower_worst", min(est_lo), margin=min(est_lo),
                tol=est_tol)
        rep.add("est_upper_worst", min(est_hi), margin=min(est_hi),
                tol=est_tol)
        rep.add("est0_final", est0[-1], margin=1e-2 - est0[-1], tol=0.0)

    if state.mode == "orbit" and rb is not None:
        # The subdomains Omega_j realizing the sandwich are taken as
        # B^K(q, b_j) united with the sigma_j-preimage of (1-1/j)B; the
        # outer margin samples the Kobayashi-ball piece against (1+1/j)B,
        # the inner margin checks that the preimage piece stays strictly
        # interior (so (1-1/j)B really is covered), and the distance
        # overshoot of that piece beyond b_j is recorded as data.
        outer, inner, overshoot = [], [], []
        for idx, stage in enumerate(state.stages):
            j = stage.j
            b_j = state.radii[idx]
            pts = sample_kobayashi_ball(domain, state.q, b_j * (1 - 1e-9),
                                        containment_samples, rng)
            norms = np.linalg.norm(state.sigmas[idx](pts), axis=-1)
            outer.append(float((1 + 1 / j) - norms.max()))
            ys = ball_points(rng, containment_samples, n,
                             radius=(1 - 1 / j) * (1 - 1e-6))
            sig_inv = state.sigmas[idx].inverse
            xs = sig_inv(ys)
            rho_vals = domain.defining.rho(xs)
            inner.append(float(-rho_vals.max()))
            if np.all(rho_vals < 0):
                d = ball_distance((xs - rb[0]) / rb[1],
                                  (state.q - rb[0]) / rb[1])
                overshoot.append(float(max(0.0, d.max() - b_j)))
            else:
                overshoot.append(np.inf)
        rep.data["outer_margin"] = outer
        rep.data["inner_margin"] = inner
        rep.data["inner_distance_overshoot"] = overshoot
        rep.add("containment_outer_worst", min(outer), margin=min(outer),
                tol=1e-9)
        rep.add("containment_inner_worst", min(inner), margin=min(inner),
                tol=1e-9)

    eps_steps = np.diff(np.asarray(state.eps))
    worst_eps_step = float(eps_steps.max()) if len(eps_steps) else 0.0
    rep.add("eps_nonincreasing", worst_eps_step, margin=-worst_eps_step,
            tol=1e-9)
    rep.data["eps"] = list(state.eps)
    rep.data["f_norm_min"] = [min(f) for f in state.f_norms]
    rep.add("f_norm_floor", min(min(f) for f in state.f_norms),
            margin=min(min(f) for f in state.f_norms), tol=0.0)
    return rep


def hausdorff_to_siegel(normalized, stages, samples=128, rng=0, height=1.0):
    """Deviation of the rescaled boundary from the limit paraboloid.

    For each stage the local boundary within the anisotropic box
    (Im w1 ~ r_j, w' ~ sqrt(r_j)) around p_j is pushed through L_j o H_j and
    compared with {Re W1 = psi2(W')}; the decay of the max deviation against
    r_j is fit to a power law.  One set of unit-scale offsets is drawn and
    reused across stages (scaled per stage), so the per-stage maxima are
    comparable and the monotonicity check is not dominated by sampling
    noise.
    """
    rng = as_rng(rng)
    rep = Report(title="hausdorff-to-paraboloid")
    n = normalized.dimension
    t_unit = 2 * rng.random(samples) - 1
    wp_unit = 0.5 * (rng.standard_normal((samples, n - 1))
                     + 1j * rng.standard_normal((samples, n - 1))
                     ) / np.sqrt(max(1, n - 1))
    devs = []
    rs = []
    for stage in stages:
        r = stage.r_j
        worst = 0.0
        got = 0
        for k in range(samples):
            t = height * r * t_unit[k]
            wp = height * np.sqrt(r) * wp_unit[k]
            try:
                z = normalized.boundary_sample(stage.p_j, t, wp)
            except Exception:
                continue
            w = stage.L(stage.H(z))
            dev = abs(float(np.real(w[0]) - normalized.psi2(w[1:])))
            worst = max(worst, dev)
            got += 1
        if got == 0:
            continue
        devs.append(worst)
        rs.append(r)
    rep.data["r_j"] = rs
    rep.data["deviation"] = devs
    steps = np.diff(np.asarray(devs))
    worst_step = float(steps.max()) if len(steps) else 0.0
    rep.add("deviation_nonincreasing", worst_step, margin=-worst_step,
            tol=1e-9)
    if len(devs) >= 3 and min(devs) > 0:
        slope = np.polyfit(np.log(np.asarray(rs)), np.log(np.asarray(devs)),
                           1)[0]
        rep.add("decay_exponent", float(slope), margin=0.0, tol=1.0)
        rep.data["decay_exponent"] = float(slope)
    return rep
