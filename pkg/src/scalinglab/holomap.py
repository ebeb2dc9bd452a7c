"""Composable holomorphic map handles.

A HoloMap bundles a vectorized evaluation closure (complex points on the
last axis), a complex Jacobian oracle at single points, an optional inverse,
and a tag describing where the map came from.  Compositions keep the chain
of constituents so pipelines stay inspectable.
"""

import numpy as np


class HoloMap:
    """Holomorphic map C^N -> C^N with evaluation and Jacobian oracles.

    evaluate : callable mapping (..., N) complex arrays to (..., N)
    jacobian : callable mapping a single (N,) point to an (N, N) complex
               matrix; when omitted a central finite difference is used
    inverse  : optional HoloMap undoing this one on its range
    """

    def __init__(self, evaluate, jacobian=None, tag="custom", inverse=None, parts=None):
        self._evaluate = evaluate
        self._jacobian = jacobian
        self.tag = tag
        self._inverse = inverse
        self.parts = tuple(parts) if parts is not None else (self,)

    def __call__(self, z):
        return self._evaluate(np.asarray(z, dtype=complex))

    def jacobian(self, z):
        z = np.asarray(z, dtype=complex)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(z), dtype=complex)
        return finite_diff_jacobian(self._evaluate, z)

    @property
    def inverse(self):
        if self._inverse is None:
            raise ValueError(f"map '{self.tag}' carries no inverse")
        return self._inverse

    @property
    def has_inverse(self):
        return self._inverse is not None

    def __repr__(self):
        chain = "∘".join(p.tag for p in self.parts) if len(self.parts) > 1 else self.tag
        return f"HoloMap({chain})"


def identity_map(n):
    m = HoloMap(lambda z: z, jacobian=lambda z: np.eye(n, dtype=complex), tag="identity")
    m._inverse = m
    return m


def linear_map(matrix, tag="linear", inv_matrix=None):
    a = np.asarray(matrix, dtype=complex)
    fwd = HoloMap(lambda z: z @ a.T, jacobian=lambda z: a, tag=tag)
    if inv_matrix is None:
        inv_matrix = np.linalg.inv(a)
    b = np.asarray(inv_matrix, dtype=complex)
    bwd = HoloMap(lambda z: z @ b.T, jacobian=lambda z: b, tag=tag + "^-1", inverse=fwd)
    fwd._inverse = bwd
    return fwd


def affine_map(matrix, offset, tag="affine"):
    """z -> A z + c, with the exact inverse w -> A^-1 (w - c)."""
    a = np.asarray(matrix, dtype=complex)
    c = np.asarray(offset, dtype=complex)
    ainv = np.linalg.inv(a)
    fwd = HoloMap(lambda z: z @ a.T + c, jacobian=lambda z: a, tag=tag)
    bwd = HoloMap(
        lambda w: (w - c) @ ainv.T, jacobian=lambda w: ainv, tag=tag + "^-1", inverse=fwd
    )
    fwd._inverse = bwd
    return fwd


def translation(offset, tag="translation"):
    c = np.asarray(offset, dtype=complex)
    n = c.shape[0]
    eye = np.eye(n, dtype=complex)
    fwd = HoloMap(lambda z: z + c, jacobian=lambda z: eye, tag=tag)
    bwd = HoloMap(lambda w: w - c, jacobian=lambda w: eye, tag=tag + "^-1", inverse=fwd)
    fwd._inverse = bwd
    return fwd


def compose(*maps, tag=None, _build_inverse=True):
    """compose(f, g, h) is the map z -> f(g(h(z))), applied right to left."""
    maps = [m for m in maps if m is not None]
    if not maps:
        raise ValueError("nothing to compose")
    if len(maps) == 1:
        return maps[0]
    parts = []
    for m in maps:
        parts.extend(m.parts)

    def evaluate(z):
        w = z
        for m in reversed(maps):
            w = m(w)
        return w

    def jacobian(z):
        w = np.asarray(z, dtype=complex)
        jac = None
        for m in reversed(maps):
            jm = m.jacobian(w)
            jac = jm if jac is None else jm @ jac
            w = m(w)
        return jac

    inverse = None
    if _build_inverse and all(m.has_inverse for m in maps):
        inv_maps = [m.inverse for m in reversed(maps)]
        inverse = compose(*inv_maps, tag=(tag + "^-1") if tag else None,
                          _build_inverse=False)
    out = HoloMap(evaluate, jacobian=jacobian, tag=tag or "composition",
                  inverse=inverse, parts=parts)
    if inverse is not None:
        inverse._inverse = out
    return out


def finite_diff_jacobian(f, z, h=1e-6):
    """Central-difference complex Jacobian of a holomorphic map at z.

    Holomorphy means the complex derivative equals the real directional
    derivative along each basis direction, so one real sweep per column
    suffices.
    """
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    cols = []
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        cols.append((f(z + h * e) - f(z - h * e)) / (2 * h))
    return np.stack(cols, axis=-1)


def jacobian_consistency(holo, z, h=1e-6):
    """Relative mismatch between the Jacobian oracle and finite differences."""
    ja = holo.jacobian(z)
    jf = finite_diff_jacobian(holo, np.asarray(z, dtype=complex), h=h)
    scale = max(1.0, np.linalg.norm(ja))
    return float(np.linalg.norm(ja - jf) / scale)
