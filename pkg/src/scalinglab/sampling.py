"""Deterministic random sampling helpers.

All randomness in the package flows through numpy Generators; functions
accept either a Generator or an integer seed so experiment drivers can fan
out reproducible streams.
"""

import numpy as np


def as_rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def complex_gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit_vectors(rng, count, n):
    """Uniform points on the unit sphere of C^n, shape (count, n)."""
    v = complex_gaussian(rng, (count, n))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def ball_points(rng, count, n, radius=1.0):
    """Uniform points in the complex n-ball of the given radius."""
    directions = unit_vectors(rng, count, n)
    # |B_C^n| is a real 2n-ball, so radii follow U^(1/2n)
    r = radius * rng.random(count) ** (1.0 / (2 * n))
    return directions * r[:, None]


def disc_grid(radial, angular, radius=1.0):
    """Polar grid on the closed disc of the given radius (complex scalars)."""
    r = np.linspace(0.0, radius, radial + 1)[1:]
    th = 2 * np.pi * (np.arange(angular) + 0.5) / angular
    pts = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    return np.concatenate([[0.0 + 0.0j], pts])


def disc_boundary(count, radius=1.0):
    th = 2 * np.pi * (np.arange(count) + 0.5) / count
    return radius * np.exp(1j * th)
