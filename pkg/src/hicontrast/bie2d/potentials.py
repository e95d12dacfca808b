"""Off-boundary and far-field evaluation of combined layer potentials.

A field is ``u = S sigma + D mu`` (single-layer density ``sigma``, double-layer
density ``mu``), evaluated with the trapezoid rule.  That is spectrally
accurate away from the curve; near it, densities are first upsampled by
trigonometric interpolation.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import scipy.special as sps

__all__ = ["upsample", "evaluate", "evaluate_gradient", "far_field", "normal_derivative_double_layer"]


def upsample(values, n_new):
    """Trigonometric interpolant of equispaced samples resampled to ``n_new`` points."""
    values = np.asarray(values, dtype=complex)
    n = values.size
    if n_new == n:
        return values.copy()
    c = np.fft.fft(values)
    out = np.zeros(n_new, dtype=complex)
    h = n // 2
    out[:h] = c[:h]
    out[-h:] = c[-h:]
    # split the Nyquist coefficient evenly between +/- n/2
    out[h] = c[h] / 2
    out[-h] = c[h] / 2
    return np.fft.ifft(out) * (n_new / n)


def _kernel_parts(curve, x, k):
    diff = x[:, None, :] - curve.points[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    return diff, r


def evaluate(curve, k, sigma, mu, x):
    """``S sigma + D mu`` at points ``x`` (shape ``(P, 2)``) off the curve."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    diff, r = _kernel_parts(curve, x, k)
    w = curve.weights
    out = np.zeros(len(x), dtype=complex)
    if sigma is not None:
        out += (0.25j * sps.hankel1(0, k * r)) @ (w * sigma)
    if mu is not None:
        proj = np.einsum("pjc,jc->pj", diff, curve.normal)
        out += (0.25j * k * sps.hankel1(1, k * r) * proj / r) @ (w * mu)
    return out


def evaluate_gradient(curve, k, sigma, mu, x):
    """Gradient of ``S sigma + D mu`` at ``x``, shape ``(P, 2)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    diff, r = _kernel_parts(curve, x, k)
    w = curve.weights
    q = diff / r[..., None]  # unit vector from y to x
    H0, H1 = sps.hankel1(0, k * r), sps.hankel1(1, k * r)
    grad = np.zeros((len(x), 2), dtype=complex)
    if sigma is not None:
        # grad_x Phi = -(ik/4) H1(kr) q
        grad += np.einsum("pj,pjc->pc", -0.25j * k * H1 * (w * sigma)[None, :], q)
    if mu is not None:
        nu = curve.normal[None, :, :]
        u = np.einsum("pjc,jc->pj", q, curve.normal)
        # grad_x dPhi/dnu_y = (ik/4) [nu_y H1/r + q (q.nu_y)(k H0 - 2 H1/r)]
        coef_nu = 0.25j * k * H1 / r * (w * mu)[None, :]
        coef_q = 0.25j * k * u * (k * H0 - 2 * H1 / r) * (w * mu)[None, :]
        grad += np.einsum("pj,xjc->pc", coef_nu, nu) + np.einsum("pj,pjc->pc", coef_q, q)
    return grad


def normal_derivative_double_layer(curve, k, mu, x, nu_x):
    """``nu_x . grad D mu`` at points ``x`` with unit vectors ``nu_x``."""
    g = evaluate_gradient(curve, k, None, mu, x)
    return np.sum(g * np.asarray(nu_x), axis=1)


def far_field(curve, k, sigma, mu, angles):
    """Far-field pattern of ``S sigma + D mu`` at observation angles.

    ``u(x) ~ e^{ikr} / sqrt(r) * F(theta)`` with
    ``F = e^{i pi/4}/sqrt(8 pi k) int e^{-ik xhat.y} (sigma - ik xhat.nu_y mu) ds_y``.
    """
    theta = np.atleast_1d(np.asarray(angles, dtype=float))
    xhat = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    phase = np.exp(-1j * k * xhat @ curve.points.T)
    w = curve.weights
    dens = np.zeros_like(phase)
    if sigma is not None:
        dens = dens + sigma[None, :]
    if mu is not None:
        dens = dens - 1j * k * (xhat @ curve.normal.T) * mu[None, :]
    gamma = cmath.exp(1j * math.pi / 4) / math.sqrt(8 * math.pi * k)
    return gamma * (phase * dens) @ w
