"""Orthonormal spherical harmonics on the unit sphere in the flat layout.

Coefficient ``(n, m)`` with ``|m| <= n`` sits at index ``n(n+1) + m``.  Values
come from :func:`scipy.special.sph_harm_y` (Condon-Shortley phase, orthonormal
on S^2).
"""

from __future__ import annotations

import numpy as np
import scipy.special as sps

__all__ = ["flat_index", "degree_order", "n_coeffs", "evaluate", "evaluate_with_gradient", "to_spherical"]


def n_coeffs(n_max):
    return (n_max + 1) ** 2


def flat_index(n, m):
    return n * (n + 1) + m


def degree_order(n_max):
    """Arrays ``(n, m)`` listing every flat slot up to degree ``n_max``."""
    n = np.repeat(np.arange(n_max + 1), 2 * np.arange(n_max + 1) + 1)
    m = np.arange(n.size) - n * (n + 1)
    return n, m


def to_spherical(points):
    """Cartesian ``(P, 3)`` points to ``(r, theta, phi)`` with ``phi`` in ``[0, 2pi)``."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(p, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.arccos(np.clip(np.where(r > 0, p[:, 2] / r, 1.0), -1.0, 1.0))
    phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
    return r, theta, phi


def evaluate(n_max, theta, phi):
    """``Y_n^m(theta, phi)`` with shape ``(n_coeffs, P)``."""
    n, m = degree_order(n_max)
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    return sps.sph_harm_y(n[:, None], m[:, None], theta[None, :], phi[None, :])


def evaluate_with_gradient(n_max, theta, phi):
    """Values, ``dY/dtheta`` and ``(1/sin theta) dY/dphi``.

    On the polar axis the last quantity is the limit ``i m dY/dtheta * sign(cos theta)``,
    which is nonzero only for ``|m| = 1``.
    """
    n, m = degree_order(n_max)
    theta = np.atleast_1d(theta)
    phi = np.atleast_1d(phi)
    y, d = sps.sph_harm_y(n[:, None], m[:, None], theta[None, :], phi[None, :], diff_n=1)
    dtheta, dphi = d[..., 0], d[..., 1]
    sin_t = np.sin(theta)[None, :]
    pole = np.abs(sin_t) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        azim = np.where(pole, 1j * m[:, None] * dtheta * np.sign(np.cos(theta))[None, :], dphi / sin_t)
    return y, dtheta, azim
