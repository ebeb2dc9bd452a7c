"""Complex linear algebra primitives on C^N.

Vectors are numpy arrays of shape (N,) and operators arrays of shape (N, N),
both complex128.  The inner product is <x, y> = sum_i x_i * conj(y_i), so it
is linear in the first slot.  The flag subspace of index n is
span(e_1, ..., e_n); an operator preserves every flag iff it is upper
triangular.
"""

import numpy as np

from .errors import DegenerateInput, NotComparable, SingularOperator


def inner(x, y):
    """Hermitian inner product, linear in x, over the last axis."""
    return np.sum(x * np.conj(y), axis=-1)


def norm(x):
    return np.linalg.norm(x, axis=-1)


def basis_vector(k, n, dtype=complex):
    e = np.zeros(n, dtype=dtype)
    e[k] = 1.0
    return e


def gram_schmidt(vectors, tol=1e-10, reorthogonalize=True):
    """Orthonormalize `vectors` (sequence of shape-(N,) arrays).

    Returns (orthonormal, norms) where norms[m] is the length of the m-th
    residual before normalization, i.e. the distance from vectors[m] to the
    span of its predecessors.  A second projection pass is run by default to
    keep the output orthonormal to machine precision.

    Raises DegenerateInput when the inputs are not numerically independent
    (smallest singular value <= tol).
    """
    mat = np.asarray(vectors, dtype=complex)
    if mat.ndim != 2:
        raise DegenerateInput("expected a sequence of vectors")
    smin = np.linalg.svd(mat, compute_uv=False)[-1]
    if smin <= tol:
        raise DegenerateInput(
            f"vectors are numerically dependent (sigma_min={smin:.3e} <= {tol:.0e})"
        )
    ortho = []
    norms = []
    for v in mat:
        u = v.astype(complex)
        for q in ortho:
            u = u - inner(u, q) * q
        if reorthogonalize:
            for q in ortho:
                u = u - inner(u, q) * q
        r = np.linalg.norm(u)
        norms.append(float(r))
        ortho.append(u / r)
    return ortho, norms


def polar_decompose(a, cond_max=1e8):
    """Left polar decomposition a = P @ U with P positive definite, U unitary.

    Computed from the SVD a = W S V*: P = W S W*, U = W V*.  Raises
    SingularOperator when cond(a) >= cond_max.
    """
    a = np.asarray(a, dtype=complex)
    w, s, vh = np.linalg.svd(a)
    if s[-1] <= 0 or s[0] / s[-1] >= cond_max:
        raise SingularOperator(f"condition number {s[0] / max(s[-1], 1e-300):.3e}")
    p = (w * s) @ w.conj().T
    p = 0.5 * (p + p.conj().T)
    u = w @ vh
    return p, u


def hermitian_part(a):
    return 0.5 * (a + np.conj(a.T))


def operator_geq(t, s, herm_tol=1e-10, eig_tol=1e-10):
    """Loewner order check: is <(t - s)x, x> >= 0 for all x?

    The difference must be Hermitian within herm_tol (relative to its size);
    it is then symmetrized and the check is lambda_min >= -eig_tol.
    """
    d = np.asarray(t, dtype=complex) - np.asarray(s, dtype=complex)
    skew = 0.5 * (d - np.conj(d.T))
    scale = max(1.0, np.linalg.norm(d, 2))
    if np.linalg.norm(skew, 2) > herm_tol * scale:
        raise NotComparable(
            f"difference is non-Hermitian (defect {np.linalg.norm(skew, 2):.3e})"
        )
    lam_min = np.linalg.eigvalsh(hermitian_part(d))[0]
    return bool(lam_min >= -eig_tol)


def flag_preserving(a, tol):
    """True iff a maps each span(e_1..e_n) into itself, i.e. max strictly
    lower-triangular entry has modulus <= tol."""
    a = np.asarray(a)
    lower = np.tril(a, k=-1)
    return bool(np.abs(lower).max(initial=0.0) <= tol)


def max_lower_entry(a):
    return float(np.abs(np.tril(np.asarray(a), k=-1)).max(initial=0.0))


def is_unitary(u, tol=1e-10):
    u = np.asarray(u)
    return np.linalg.norm(u @ np.conj(u.T) - np.eye(u.shape[0]), 2) <= tol


def operator_norm(a):
    return float(np.linalg.svd(np.asarray(a), compute_uv=False)[0])


def complete_unitary(first_column, tol=1e-8):
    """Unitary matrix whose first column is the given unit vector.

    The remaining columns come from orthonormalizing the standard basis
    against it; when first_column is already e_1 the result is the identity.
    """
    u = np.asarray(first_column, dtype=complex)
    n = u.shape[0]
    u = u / np.linalg.norm(u)
    cols = [u]
    for k in range(n):
        v = basis_vector(k, n)
        for q in cols:
            v = v - inner(v, q) * q
        r = np.linalg.norm(v)
        if r > tol:
            cols.append(v / r)
        if len(cols) == n:
            break
    if len(cols) < n:
        raise DegenerateInput("failed to complete an orthonormal basis")
    return np.stack(cols, axis=1)
