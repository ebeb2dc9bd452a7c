"""Defining functions, Levi forms, and boundary normalization.

A domain is carried by a real-valued defining function rho with first and
second derivative oracles: the interior is {rho < 0}, the boundary
{rho = 0}.  The catalog (ball, ellipsoid, siegel, perturbed-ball) ships
analytic oracles; user-supplied functions fall back to central finite
differences.

Complex differential conventions, for real-valued rho and the Hermitian
inner product <x, y> = sum x_i conj(y_i):

    d rho(p; v)              real directional derivative
    del rho(p; v) = g . v    with g_j = (d/dz_j) rho, bilinear dot
    Levi(p; v) = (1/4) [d2(p; v, v) + d2(p; iv, iv)]

Normalization at a strongly pseudoconvex boundary point p composes a
translation, a unitary rotation sending the inner normal to +e1, a real
rescaling of z1 making the linear part exactly -Re z1, and a shear removing
the holomorphic quadratic terms.  Afterwards the interior is locally
{Re z1 > psi(Im z1, z')} with psi vanishing to second order at 0.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    NoBoundaryHit,
    NotBoundaryPoint,
    NotStronglyPseudoconvex,
    OutsideNeighborhood,
)
from .holomap import HoloMap, affine_map, compose
from .sampling import as_rng, unit_vectors

_OMEGA = np.exp(1j * np.pi / 4)


class DefiningFunction:
    """Real-valued rho with derivative oracles and a validity neighborhood.

    rho    : callable on (..., N) complex arrays
    d1     : d1(p, v) -> real directional derivative (optional)
    d2     : d2(p, v, w) -> real second derivative (optional)
    levi   : exact Levi oracle (optional; derived from d2 otherwise)
    center/radius : Euclidean validity ball U (radius may be inf)
    valid  : optional membership override for non-ball validity regions
    """

    def __init__(self, rho, d1=None, d2=None, levi=None, cgrad=None,
                 center=None, radius=np.inf, valid=None, fd_step=1e-5):
        self.rho = rho
        self._d1 = d1
        self._d2 = d2
        self._levi = levi
        self._cgrad = cgrad
        self.center = None if center is None else np.asarray(center, dtype=complex)
        self.radius = float(radius)
        self._valid = valid
        self.fd_step = fd_step

    def in_neighborhood(self, p):
        if self._valid is not None:
            return bool(self._valid(np.asarray(p, dtype=complex)))
        if self.center is None or not np.isfinite(self.radius):
            return True
        return bool(np.linalg.norm(np.asarray(p) - self.center) < self.radius)

    def d1(self, p, v):
        if self._d1 is not None:
            return float(self._d1(p, v))
        h = self.fd_step
        return float((self.rho(p + h * v) - self.rho(p - h * v)) / (2 * h))

    def d2(self, p, v, w):
        if self._d2 is not None:
            return float(self._d2(p, v, w))
        h = self.fd_step
        pp = self.rho(p + h * v + h * w)
        pm = self.rho(p + h * v - h * w)
        mp = self.rho(p - h * v + h * w)
        mm = self.rho(p - h * v - h * w)
        return float((pp - pm - mp + mm) / (4 * h * h))

    def cgrad(self, p):
        """Complex gradient g with d rho(p; v) = 2 Re(g . v)."""
        if self._cgrad is not None:
            return np.asarray(self._cgrad(p), dtype=complex)
        p = np.asarray(p, dtype=complex)
        n = p.shape[-1]
        g = np.zeros(n, dtype=complex)
        for k in range(n):
            e = linalg.basis_vector(k, n)
            g[k] = 0.5 * (self.d1(p, e) - 1j * self.d1(p, 1j * e))
        return g

    def levi(self, p, v):
        if self._levi is not None:
            return float(self._levi(p, v))
        v = np.asarray(v, dtype=complex)
        return 0.25 * (self.d2(p, v, v) + self.d2(p, 1j * v, 1j * v))

    def holo_quadratic(self, p):
        """Matrix a with a_jk = (d^2 rho / dz_j dz_k)(p), symmetric."""
        p = np.asarray(p, dtype=complex)
        n = p.shape[-1]

        def re_q(u):
            return 0.25 * (self.d2(p, u, u) - self.d2(p, 1j * u, 1j * u))

        def q(u):
            return re_q(u) - 1j * re_q(_OMEGA * u)

        a = np.zeros((n, n), dtype=complex)
        diag = [q(linalg.basis_vector(j, n)) for j in range(n)]
        for j in range(n):
            a[j, j] = diag[j]
        for j in range(n):
            for k in range(j + 1, n):
                u = linalg.basis_vector(j, n) + linalg.basis_vector(k, n)
                a[j, k] = a[k, j] = 0.5 * (q(u) - diag[j] - diag[k])
        return a

    def hermitian_form(self, p):
        """Hermitian matrix h with Levi(p; v) = sum_jk h_jk v_j conj(v_k)."""
        p = np.asarray(p, dtype=complex)
        n = p.shape[-1]
        h = np.zeros((n, n), dtype=complex)
        diag = [self.levi(p, linalg.basis_vector(j, n)) for j in range(n)]
        for j in range(n):
            h[j, j] = diag[j]
        for j in range(n):
            for k in range(j + 1, n):
                ej, ek = linalg.basis_vector(j, n), linalg.basis_vector(k, n)
                re = 0.5 * (self.levi(p, ej + ek) - diag[j] - diag[k])
                im = 0.5 * (self.levi(p, ej + 1j * ek) - diag[j] - diag[k])
                h[j, k] = re + 1j * im
                h[k, j] = re - 1j * im
        return h


@dataclass
class DomainSpec:
    """A concrete domain: defining function, dimension, interior basepoint.

    e1_orientation is the sign of the e1 ray used by ray_boundary_point:
    +1 for the bounded catalog domains (shoot outward along +e1), -1 for
    graph-type domains whose interior lies on the Re z1 > psi side.
    """

    defining: DefiningFunction
    dimension: int
    basepoint: np.ndarray
    tag: str = "custom"
    e1_orientation: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.basepoint = np.asarray(self.basepoint, dtype=complex)
        if self.defining.rho(self.basepoint) >= 0:
            raise ValueError("basepoint must be strictly interior")

    def contains(self, z):
        return self.defining.rho(z) < 0


def ball_domain(n):
    def rho(z):
        return np.sum(np.abs(z) ** 2, axis=-1) - 1.0

    df = DefiningFunction(
        rho,
        d1=lambda p, v: 2 * np.real(linalg.inner(v, p)),
        d2=lambda p, v, w: 2 * np.real(linalg.inner(v, w)),
        levi=lambda p, v: float(np.sum(np.abs(v) ** 2)),
        cgrad=lambda p: np.conj(p),
    )
    return DomainSpec(df, n, np.zeros(n, dtype=complex), tag="ball")


def ellipsoid_domain(n, axes=None):
    """{ sum a_m |z_m|^2 < 1 } with positive weights (default (1, 4, 1, ...))."""
    if axes is None:
        axes = [1.0, 4.0] + [1.0] * (n - 2) if n >= 2 else [1.0]
    a = np.asarray(axes, dtype=float)
    if a.shape[0] != n:
        raise ValueError("axes length must match dimension")

    def rho(z):
        return np.sum(a * np.abs(z) ** 2, axis=-1) - 1.0

    df = DefiningFunction(
        rho,
        d1=lambda p, v: 2 * np.real(np.sum(a * v * np.conj(p), axis=-1)),
        d2=lambda p, v, w: 2 * np.real(np.sum(a * v * np.conj(w), axis=-1)),
        levi=lambda p, v: float(np.sum(a * np.abs(v) ** 2)),
        cgrad=lambda p: a * np.conj(p),
    )
    return DomainSpec(df, n, np.zeros(n, dtype=complex), tag="ellipsoid",
                      params={"axes": a})


def siegel_domain(n):
    """Unbounded model { Re z1 > ||z'||^2 }; rho = ||z'||^2 - Re z1."""

    def rho(z):
        return np.sum(np.abs(z[..., 1:]) ** 2, axis=-1) - np.real(z[..., 0])

    def cgrad(p):
        g = np.conj(np.asarray(p, dtype=complex)).copy()
        g[0] = -0.5
        return g

    df = DefiningFunction(
        rho,
        d1=lambda p, v: 2 * np.real(linalg.inner(v[..., 1:], p[..., 1:]))
        - np.real(v[..., 0]),
        d2=lambda p, v, w: 2 * np.real(linalg.inner(v[..., 1:], w[..., 1:])),
        levi=lambda p, v: float(np.sum(np.abs(v[1:]) ** 2)),
        cgrad=cgrad,
    )
    base = np.zeros(n, dtype=complex)
    base[0] = 1.0
    return DomainSpec(df, n, base, tag="siegel", e1_orientation=-1)


def perturbed_ball_domain(n, delta=0.1):
    """Ball plus the pluriharmonic bump delta * Re(z2^3).

    The bump leaves the Levi form untouched (it is pluriharmonic), so the
    domain stays strongly pseudoconvex while its boundary acquires genuine
    cubic terms and a nonzero holomorphic Hessian.
    """
    if n < 2:
        raise ValueError("needs dimension >= 2")

    def rho(z):
        return (np.sum(np.abs(z) ** 2, axis=-1) - 1.0
                + delta * np.real(z[..., 1] ** 3))

    def d1(p, v):
        return (2 * np.real(linalg.inner(v, p))
                + 3 * delta * np.real(p[1] ** 2 * v[1]))

    def d2(p, v, w):
        return (2 * np.real(linalg.inner(v, w))
                + 6 * delta * np.real(p[1] * v[1] * w[1]))

    def cgrad(p):
        g = np.conj(np.asarray(p, dtype=complex)).copy()
        g[1] += 1.5 * delta * p[1] ** 2
        return g

    df = DefiningFunction(
        rho, d1=d1, d2=d2,
        levi=lambda p, v: float(np.sum(np.abs(v) ** 2)),
        cgrad=cgrad,
    )
    return DomainSpec(df, n, np.zeros(n, dtype=complex), tag="perturbed-ball",
                      params={"delta": delta})


_CATALOG = {
    "ball": lambda n, params: ball_domain(n),
    "ellipsoid": lambda n, params: ellipsoid_domain(n, params.get("axes")),
    "siegel": lambda n, params: siegel_domain(n),
    "perturbed-ball": lambda n, params: perturbed_ball_domain(
        n, params.get("delta", 0.1)),
}


def make_domain(tag, n, **params):
    try:
        factory = _CATALOG[tag]
    except KeyError:
        raise ValueError(f"unknown catalog tag '{tag}'") from None
    return factory(n, params)


def enclosing_ball(domain):
    """(center, radius) of a catalog ball containing the domain, or None."""
    if domain.tag == "ball":
        return np.zeros(domain.dimension, dtype=complex), 1.0
    if domain.tag == "ellipsoid":
        return (np.zeros(domain.dimension, dtype=complex),
                1.0 / np.sqrt(float(domain.params["axes"].min())))
    if domain.tag == "perturbed-ball":
        delta = domain.params["delta"]
        # rho >= r^2 - 1 - delta r^3; outer radius is the positive root
        lo, hi = 1.0, 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid * mid - 1.0 - delta * mid ** 3 > 0:
                hi = mid
            else:
                lo = mid
        return np.zeros(domain.dimension, dtype=complex), hi
    return None


def levi_form(domain, p, v):
    """Levi form del dbar rho(p; v, v), real and quadratic in ||v||."""
    p = np.asarray(p, dtype=complex)
    if not domain.defining.in_neighborhood(p):
        raise OutsideNeighborhood("point outside the defining neighborhood")
    return domain.defining.levi(p, np.asarray(v, dtype=complex))


def complex_tangent_project(g, v):
    """Project v onto the complex tangent space {w : g . w = 0}."""
    g = np.asarray(g, dtype=complex)
    gsq = np.sum(np.abs(g) ** 2)
    return v - (np.sum(g * v, axis=-1)[..., None]) * np.conj(g) / gsq


def is_strongly_pseudoconvex(domain, p, samples=512, rng=0, boundary_tol=1e-9):
    """Minimize the Levi form over unit complex-tangent vectors at p.

    Returns (min > 1e-6, min value).  Sampling combines Gaussian draws with
    projected basis vectors so axis-aligned extrema are hit exactly.
    """
    p = np.asarray(p, dtype=complex)
    if abs(float(domain.defining.rho(p))) >= boundary_tol:
        raise NotBoundaryPoint(f"|rho(p)| = {abs(float(domain.defining.rho(p))):.2e}")
    g = domain.defining.cgrad(p)
    n = domain.dimension
    rng = as_rng(rng)
    candidates = list(unit_vectors(rng, samples, n))
    for k in range(n):
        candidates.append(linalg.basis_vector(k, n))
    best = np.inf
    for v in candidates:
        vt = complex_tangent_project(g, v)
        nv = np.linalg.norm(vt)
        if nv < 1e-8:
            continue
        val = domain.defining.levi(p, vt / nv)
        best = min(best, val)
    return bool(best > 1e-6), float(best)


def _bisect_ray(rho, q, direction, t_hi, value_tol=1e-12, iters=200):
    """First boundary crossing of t -> rho(q + t*direction) on (0, t_hi]."""
    f0 = float(rho(q))
    if f0 >= 0:
        raise NoBoundaryHit("ray origin is not interior")
    # march out to bracket the sign change
    grid = np.linspace(0.0, t_hi, 257)[1:]
    vals = rho(q[None, :] + grid[:, None] * direction[None, :])
    pos = np.nonzero(vals >= 0)[0]
    if len(pos) == 0:
        raise NoBoundaryHit("no sign change within the validity range")
    k = pos[0]
    lo = grid[k - 1] if k > 0 else 0.0
    hi = grid[k]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if rho(q + mid * direction) >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-17 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    # polish within the bracket so |rho| meets value_tol
    for _ in range(8):
        val = float(rho(q + t * direction))
        if abs(val) < value_tol:
            break
        d = (float(rho(q + (t + 1e-7) * direction)) - val) / 1e-7
        if d == 0:
            break
        t = min(max(t - val / d, lo), hi)
    return t


def ray_boundary_point(domain, q, orientation=None, value_tol=1e-12):
    """Boundary point on the e1 line through the interior point q.

    Only the real part of the first coordinate moves, so the returned point
    satisfies p' = q' exactly.  Returns (p_b, r) with r = ||p_b - q|| > 0.
    """
    q = np.asarray(q, dtype=complex)
    if domain.defining.rho(q) >= 0:
        raise NoBoundaryHit("q is not interior")
    sign = domain.e1_orientation if orientation is None else orientation
    direction = sign * linalg.basis_vector(0, domain.dimension)
    radius = domain.defining.radius
    t_hi = 4.0 if not np.isfinite(radius) else 2.0 * radius
    t = _bisect_ray(domain.defining.rho, q, direction, t_hi, value_tol)
    p_b = q.copy()
    p_b[0] = q[0] + sign * t
    return p_b, float(t)


@dataclass
class NormalizedDomain:
    """Result of boundary normalization at p: coordinates where the interior
    is locally {Re w1 > psi(Im w1, w')} and psi has no linear or holomorphic
    quadratic part."""

    G: HoloMap
    domain: DomainSpec
    rho_hat: DefiningFunction
    base_point: np.ndarray
    validity_radius: float
    psi2_matrix: np.ndarray  # tangential Hermitian block, (N-1) x (N-1)
    _h_full: np.ndarray = None  # full Hermitian form of rho_hat at 0

    @property
    def dimension(self):
        return self.domain.dimension

    def in_validity(self, w):
        z = self.G.inverse(np.asarray(w, dtype=complex))
        return np.linalg.norm(z - self.base_point, axis=-1) < self.validity_radius

    def psi(self, t, wprime):
        """Graph height: solve rho_hat((s + i t) e1 + (0, w')) = 0 for s."""
        n = self.dimension
        w0 = np.zeros(n, dtype=complex)
        w0[0] = 1j * t
        w0[1:] = wprime

        def f(s):
            w = w0.copy()
            w[0] = s + 1j * t
            return float(self.rho_hat.rho(w))

        guess = float(np.real(
            np.conj(np.append(0, wprime)) @ self._h_full @ np.append(0, wprime)))
        lo, hi = guess - 0.05, guess + 0.05
        span = 0.05
        while f(hi) >= 0:
            hi += span
            span *= 2
            if hi > 10 * max(1.0, self.validity_radius):
                raise NoBoundaryHit("psi solve: no interior found above")
        span = 0.05
        while f(lo) <= 0:
            lo -= span
            span *= 2
            if lo < -10 * max(1.0, self.validity_radius):
                raise NoBoundaryHit("psi solve: no exterior found below")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if f(mid) >= 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def psi2(self, wprime):
        """Quadratic tangential part of psi (the limit paraboloid height)."""
        wprime = np.asarray(wprime, dtype=complex)
        return float(np.real(np.conj(wprime) @ self.psi2_matrix @ wprime))

    def boundary_sample(self, anchor, t, wprime):
        """Boundary point near `anchor` with prescribed (Im w1, w') offsets."""
        n = self.dimension
        w = np.asarray(anchor, dtype=complex).copy()
        w[0] = w[0] + 1j * t
        w[1:] = w[1:] + wprime

        def f(s):
            ws = w.copy()
            ws[0] = ws[0] + s
            return float(self.rho_hat.rho(ws))

        lo, hi = -0.2, 0.2
        tries = 0
        while f(hi) >= 0 and tries < 12:
            hi *= 1.6
            tries += 1
        tries = 0
        while f(lo) <= 0 and tries < 12:
            lo *= 1.6
            tries += 1
        if f(hi) >= 0 or f(lo) <= 0:
            raise NoBoundaryHit("no boundary crossing near anchor")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if f(mid) >= 0:
                lo = mid
            else:
                hi = mid
        s = 0.5 * (lo + hi)
        out = w.copy()
        out[0] = out[0] + s
        return out


def normalize_at(domain, p, validity_radius=0.8, check_samples=128, rng=0):
    """Normalize the domain at the strongly pseudoconvex boundary point p.

    The returned map G is a polynomial biholomorphism (translation, unitary
    rotation, z1 rescaling, quadratic shear) with G(p) = 0, after which the
    defining function reads -Re w1 + Hermitian(w) + higher order.
    """
    p = np.asarray(p, dtype=complex)
    ok, c_min = is_strongly_pseudoconvex(domain, p, samples=check_samples, rng=rng)
    if not ok:
        raise NotStronglyPseudoconvex(f"Levi minimum {c_min:.3e} at p")
    df = domain.defining
    g = df.cgrad(p)
    gnorm = np.linalg.norm(g)
    u_in = -np.conj(g) / gnorm
    w_basis = linalg.complete_unitary(u_in)
    rot = w_basis.conj().T  # sends the inner normal to e1
    n = domain.dimension
    scale = np.eye(n, dtype=complex)
    scale[0, 0] = 2.0 * gnorm
    a_mat = scale @ rot
    base_affine = affine_map(a_mat, -a_mat @ p, tag="frame")

    # holomorphic quadratic of rho in the rotated/scaled frame
    j_inv = np.linalg.inv(a_mat)

    def d2_rot(v, w):
        return df.d2(p, j_inv @ v, j_inv @ w)

    def re_q(u):
        return 0.25 * (d2_rot(u, u) - d2_rot(1j * u, 1j * u))

    def qval(u):
        return re_q(u) - 1j * re_q(_OMEGA * u)

    quad = np.zeros((n, n), dtype=complex)
    diag = [qval(linalg.basis_vector(j, n)) for j in range(n)]
    for j in range(n):
        quad[j, j] = diag[j]
    for j in range(n):
        for k in range(j + 1, n):
            u = linalg.basis_vector(j, n) + linalg.basis_vector(k, n)
            quad[j, k] = quad[k, j] = 0.5 * (qval(u) - diag[j] - diag[k])
    # Taylor: rho_frame = -Re v1 + Re(v^T quad v) + Hermitian + ...; the
    # shear w1 -> w1 - Q(w) with Q = quad absorbs the middle term exactly
    amat = quad

    if np.abs(amat).max() > 1e-12:
        shear = _shear_map(amat)
        g_map = compose(shear, base_affine, tag="normalize")
    else:
        g_map = base_affine

    g_inv = g_map.inverse

    def rho_hat_fn(w):
        return df.rho(g_inv(w))

    def d1_hat(w, v):
        jw = g_inv.jacobian(w)
        return df.d1(g_inv(w), jw @ np.asarray(v, dtype=complex))

    def levi_hat(w, v):
        jw = g_inv.jacobian(w)
        return df.levi(g_inv(w), jw @ np.asarray(v, dtype=complex))

    def cgrad_hat(w):
        jw = g_inv.jacobian(w)
        # del(rho o F)(w; v) = del rho(F w; dF v)  =>  g_hat = J^T g
        return jw.T @ df.cgrad(g_inv(w))

    def valid(w):
        z = g_inv(np.atleast_2d(w))
        return bool(np.all(np.linalg.norm(z - p, axis=-1) < validity_radius))

    rho_hat = DefiningFunction(
        rho_hat_fn, d1=d1_hat, levi=levi_hat, cgrad=cgrad_hat, valid=valid)

    herm = rho_hat.hermitian_form(np.zeros(n, dtype=complex))
    return NormalizedDomain(
        G=g_map,
        domain=domain,
        rho_hat=rho_hat,
        base_point=p,
        validity_radius=validity_radius,
        psi2_matrix=herm[1:, 1:].copy(),
        _h_full=herm,
    )


def _shear_map(amat):
    """w -> (w1 - Q(w), w') with Q(w) = w^T amat w; exact quadratic inverse."""
    amat = np.asarray(amat, dtype=complex)
    n = amat.shape[0]
    sym = 0.5 * (amat + amat.T)

    def q_of(w):
        return np.einsum("...i,ij,...j->...", w, sym, w)

    def fwd(w):
        out = np.array(w, dtype=complex, copy=True)
        out[..., 0] = w[..., 0] - q_of(w)
        return out

    def fwd_jac(w):
        jac = np.eye(n, dtype=complex)
        jac[0, :] -= 2.0 * (sym @ w)
        return jac

    a11 = sym[0, 0]
    b = sym[0, 1:]

    def bwd(v):
        v = np.asarray(v, dtype=complex)
        vp = v[..., 1:]
        qpp = np.einsum("...i,ij,...j->...", vp, sym[1:, 1:], vp)
        beta = 1.0 - 2.0 * np.sum(b * vp, axis=-1)
        gamma = -(v[..., 0] + qpp)
        out = np.array(v, copy=True)
        if abs(a11) < 1e-14:
            out[..., 0] = -gamma / beta
            return out
        alpha = -a11
        disc = np.sqrt(beta * beta - 4.0 * alpha * gamma)
        # branch continuous through the identity at 0: w1 -> v1 as v -> 0
        r1 = (-beta + disc) / (2 * alpha)
        r2 = (-beta - disc) / (2 * alpha)
        pick = np.where(np.abs(r1 - v[..., 0]) <= np.abs(r2 - v[..., 0]), r1, r2)
        out[..., 0] = pick
        return out

    def bwd_jac(v):
        w = bwd(np.asarray(v, dtype=complex))
        return np.linalg.inv(fwd_jac(w))

    fwd_map = HoloMap(fwd, jacobian=fwd_jac, tag="shear")
    bwd_map = HoloMap(bwd, jacobian=bwd_jac, tag="shear^-1", inverse=fwd_map)
    fwd_map._inverse = bwd_map
    return fwd_map


@dataclass
class PeakFunction:
    """Continuous candidate peak function h with peak point p."""

    h: callable
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=complex)


def linear_peak(domain, p):
    """Supporting-hyperplane peak h(z) = Re <z - p, n_p> for convex catalogs."""
    p = np.asarray(p, dtype=complex)
    g = domain.defining.cgrad(p)
    gnorm = np.linalg.norm(g)

    def h(z):
        return np.real(np.sum((np.asarray(z, dtype=complex) - p) * g, axis=-1)) / gnorm

    return PeakFunction(h=h, p=p)


def _closure_samples(domain, count, rng):
    """Interior + radially projected boundary samples of a bounded catalog."""
    rng = as_rng(rng)
    enc = enclosing_ball(domain)
    if enc is None:
        raise ValueError("closure sampling needs a bounded catalog domain")
    center, radius = enc
    pts = []
    from .sampling import ball_points

    raw = ball_points(rng, 4 * count, domain.dimension, radius=radius) + center
    inside = raw[domain.defining.rho(raw) < 0]
    pts.append(inside[: count // 2])
    dirs = unit_vectors(rng, count - len(pts[0]), domain.dimension)
    boundary = []
    origin = domain.basepoint
    for d in dirs:
        t = _bisect_ray(domain.defining.rho, origin, d, 2.0 * radius)
        boundary.append(origin + t * d)
    pts.append(np.asarray(boundary))
    return np.concatenate(pts, axis=0)


def peak_verify(domain, p, peak, m_max=16, samples=1024, rng=0,
                exclusion_radius=0.1):
    """Check the peak conditions on closure samples; returns a Report.

    Conditions recorded: h(p) = 0 (to 1e-12), sup of h off a ball around p
    is negative, and the diameters of V_m = {h > -1/m} shrink as m grows.
    """
    from .report import Report

    p = np.asarray(p, dtype=complex)
    pts = _closure_samples(domain, samples, rng)
    pts = np.concatenate([pts, p[None, :]], axis=0)
    hv = np.asarray(peak.h(pts), dtype=float)
    rep = Report(title="peak-verify")
    rep.add("h_at_peak", float(peak.h(p)), margin=1e-12 - abs(float(peak.h(p))),
            tol=0.0)
    off = hv[np.linalg.norm(pts - p, axis=-1) >= exclusion_radius]
    sup_off = float(off.max()) if len(off) else -np.inf
    # condition (1) demands strict negativity off the peak; h == 0 must fail
    rep.add("sup_off_peak", sup_off, margin=-sup_off - 1e-9, tol=0.0)
    diams = []
    for m in range(1, m_max + 1):
        sel = pts[hv > -1.0 / m]
        if len(sel) < 2:
            diams.append(0.0)
            continue
        sub = sel[:256]
        d = np.linalg.norm(sub[:, None, :] - sub[None, :, :], axis=-1)
        diams.append(float(d.max()))
    rep.data["vm_diameters"] = diams
    shrink = all(diams[i + 1] <= diams[i] + 1e-9 for i in range(len(diams) - 1))
    last = diams[-1] if diams else 0.0
    rep.add("vm_diameters_shrink", last, margin=(1.0 if shrink else -1.0), tol=0.0)
    return rep
