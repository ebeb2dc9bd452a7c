"""Automorphism groups of the model domains.

The unit ball carries the Moebius group; the unbounded model
{Re w1 > ||w'||^2} carries anisotropic dilations and is exchanged with the
ball by an explicit linear fractional map (the Cayley transform).  Orbit
schedules built here feed the scaling pipeline.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBall, PoleHit, UnsupportedDomain
from .holomap import HoloMap, compose, identity_map
from .linalg import inner

__all__ = [
    "ball_mobius", "cayley", "siegel_dilation", "orbit_to_boundary",
    "OrbitSchedule",
]


def ball_mobius(a):
    """Standard involutive automorphism phi_a of the unit ball.

    phi_a(a) = 0, phi_a(0) = a, phi_a o phi_a = id.  With s = sqrt(1-|a|^2)
    and P the orthogonal projection onto C a,

        phi_a(z) = (a - P z - s (I - P) z) / (1 - <z, a>).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    na2 = float(np.sum(np.abs(a) ** 2))
    # 1 - ||a||^2 down to ~1e-12 stays well resolved in double precision
    if na2 >= (1 - 1e-12) ** 2:
        raise OutOfBall(f"||a|| = {np.sqrt(na2):.15f} is not < 1 - 1e-12")
    if na2 == 0.0:
        return identity_map(n)
    s = np.sqrt(1.0 - na2)

    def proj(z):
        return (inner(z, a) / na2)[..., None] * a

    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        pz = proj(z)
        num = a - pz - s * (z - pz)
        den = 1.0 - inner(z, a)
        return num / den[..., None]

    def jacobian(z):
        z = np.asarray(z, dtype=complex)
        den = 1.0 - complex(inner(z, a))
        pmat = np.outer(a, np.conj(a)) / na2
        lin = -(pmat + s * (np.eye(n) - pmat))
        num = a - pmat @ z - s * (z - pmat @ z)
        # d/dv [num(z+tv)/den(z+tv)] = lin v / den + num <v, a> / den^2
        return lin / den + np.outer(num, np.conj(a)) / den ** 2

    m = HoloMap(evaluate, jacobian=jacobian, tag="mobius")
    m._inverse = m  # involution
    return m


def cayley(n):
    """Biholomorphism Psi from {Re w1 > ||w'||^2} onto the unit ball.

    Psi(w) = ((1 - w1)/(1 + w1), 2 w'/(1 + w1)), with the algebraic identity
    1 - ||Psi(w)||^2 = 4 (Re w1 - ||w'||^2)/|1 + w1|^2.  Returns the pair
    (Psi, Psi_inverse); both raise PoleHit on their singular hyperplanes.
    """

    def evaluate(w):
        w = np.asarray(w, dtype=complex)
        den = 1.0 + w[..., 0]
        if np.any(np.abs(den) < 1e-14):
            raise PoleHit("Cayley map evaluated at w1 = -1")
        out = np.empty_like(w)
        out[..., 0] = (1.0 - w[..., 0]) / den
        out[..., 1:] = 2.0 * w[..., 1:] / den[..., None]
        return out

    def jacobian(w):
        w = np.asarray(w, dtype=complex)
        den = 1.0 + w[0]
        if abs(den) < 1e-14:
            raise PoleHit("Cayley map evaluated at w1 = -1")
        jac = np.zeros((n, n), dtype=complex)
        jac[0, 0] = -2.0 / den ** 2
        jac[1:, 0] = -2.0 * w[1:] / den ** 2
        jac[1:, 1:] = (2.0 / den) * np.eye(n - 1)
        return jac

    def inv_evaluate(z):
        z = np.asarray(z, dtype=complex)
        den = 1.0 + z[..., 0]
        if np.any(np.abs(den) < 1e-14):
            raise PoleHit("inverse Cayley map evaluated at z1 = -1")
        out = np.empty_like(z)
        out[..., 0] = (1.0 - z[..., 0]) / den
        out[..., 1:] = z[..., 1:] / den[..., None]
        return out

    def inv_jacobian(z):
        z = np.asarray(z, dtype=complex)
        den = 1.0 + z[0]
        if abs(den) < 1e-14:
            raise PoleHit("inverse Cayley map evaluated at z1 = -1")
        jac = np.zeros((n, n), dtype=complex)
        jac[0, 0] = -2.0 / den ** 2
        jac[1:, 0] = -z[1:] / den ** 2
        jac[1:, 1:] = (1.0 / den) * np.eye(n - 1)
        return jac

    psi = HoloMap(evaluate, jacobian=jacobian, tag="cayley")
    psi_inv = HoloMap(inv_evaluate, jacobian=inv_jacobian, tag="cayley^-1",
                      inverse=psi)
    psi._inverse = psi_inv
    return psi, psi_inv


def siegel_dilation(lam, n):
    """Automorphism w -> (lam^2 w1, lam w') of {Re w1 > ||w'||^2}, lam > 0."""
    if lam <= 0:
        raise ValueError("dilation factor must be positive")
    d = np.ones(n, dtype=complex)
    d[0] = lam * lam
    d[1:] = lam

    def evaluate(w):
        return np.asarray(w, dtype=complex) * d

    def jacobian(w):
        return np.diag(d)

    fwd = HoloMap(evaluate, jacobian=jacobian, tag="dilation")
    bwd = HoloMap(lambda w: np.asarray(w, dtype=complex) / d,
                  jacobian=lambda w: np.diag(1.0 / d),
                  tag="dilation^-1", inverse=fwd)
    fwd._inverse = bwd
    return fwd


@dataclass
class OrbitSchedule:
    """Automorphisms phi_j with phi_j(q) marching to the boundary point p."""

    maps: list
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex)
        self.p = np.asarray(self.p, dtype=complex)

    def gaps(self):
        return [float(np.linalg.norm(m(self.q) - self.p)) for m in self.maps]


def orbit_to_boundary(domain, q, p, rate, count):
    """Exact automorphism schedule phi_j with ||phi_j(q) - p|| -> 0.

    ball:   phi_j = phi_{T_j} o phi_q with targets T_j = (1 - rate^j) p,
            so phi_j(q) = T_j exactly.
    siegel: dilations with lam_j = rate^(j/2); target p must be the origin.
    """
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    if not 0 < rate < 1:
        raise ValueError("rate must lie in (0, 1)")
    maps = []
    if domain.tag == "ball":
        base = ball_mobius(q) if np.linalg.norm(q) > 0 else None
        for j in range(1, count + 1):
            target = (1.0 - rate ** j) * p
            m = ball_mobius(target)
            maps.append(compose(m, base, tag=f"orbit[{j}]") if base is not None
                        else m)
    elif domain.tag == "siegel":
        if np.linalg.norm(p) > 1e-14:
            raise UnsupportedDomain(
                "siegel dilations accumulate only at the origin")
        n = domain.dimension
        for j in range(1, count + 1):
            maps.append(siegel_dilation(rate ** (j / 2.0), n))
    else:
        raise UnsupportedDomain(
            f"no automorphism factory for catalog tag '{domain.tag}'")
    return OrbitSchedule(maps=maps, q=q, p=p)
