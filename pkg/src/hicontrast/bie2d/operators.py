"""Nystrom matrices of the boundary layer operators with Kress log-splitting.

With ``Phi(x, y) = (i/4) H_0^(1)(k |x - y|)`` and ``nu`` the outward normal:

* ``S psi(x)     = int Phi(x, y) psi(y) ds_y``
* ``K psi(x)     = int dPhi/dnu_y psi(y) ds_y``
* ``Kstar psi(x) = int dPhi/dnu_x psi(y) ds_y``
* ``T psi(x)     = d/dnu_x int dPhi/dnu_y psi(y) ds_y``  (Maue form below)
* ``S0``: single layer of the Laplace kernel ``-(1/2 pi) log |x - y|``

Each kernel ``M(t, tau)`` in parameter form is split as
``M1 log(4 sin^2((t - tau)/2)) + M2`` with smooth ``M1, M2``; the log part is
integrated exactly against the trigonometric interpolant of the density and
``M2`` by the trapezoid rule.  The hypersingular operator uses Maue's identity

    T = d/ds S d/ds + k^2 (nu_1 S nu_1 + nu_2 S nu_2)

with ``d/ds`` applied spectrally.  Jump relations for outward ``nu``:
``D psi|_pm = (K +- 1/2) psi`` and ``dS psi/dnu|_pm = (Kstar -+ 1/2) psi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.special as sps

from .curve import NystromCurve

__all__ = ["OperatorKind", "LayerOperator", "assemble", "kress_weights", "diff_matrix"]

EULER = 0.57721566490153286061


class OperatorKind(str, enum.Enum):
    S = "S"
    K = "K"
    KSTAR = "Kstar"
    T = "T"
    S0 = "S0"


@dataclass(frozen=True)
class LayerOperator:
    kind: OperatorKind
    k: float
    matrix: np.ndarray

    def __matmul__(self, other):
        return self.matrix @ other


@lru_cache(maxsize=32)
def kress_weights(n_nodes):
    """``R[i, j]`` integrating ``log(4 sin^2((t_i - tau)/2)) f(tau)`` exactly for trig f."""
    n = n_nodes // 2
    t = 2 * math.pi * np.arange(n_nodes) / n_nodes
    d = t[:, None] - t[None, :]
    m = np.arange(1, n)
    R = -(2 * math.pi / n) * np.einsum("m,ijm->ij", 1.0 / m, np.cos(d[:, :, None] * m)) if n > 1 else 0.0
    R = R - (math.pi / n**2) * np.cos(n * d)
    R.setflags(write=False)
    return R


@lru_cache(maxsize=32)
def diff_matrix(n_nodes):
    """Spectral differentiation on ``n_nodes`` equispaced points (N even)."""
    i = np.arange(n_nodes)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** d / np.tan(math.pi * d / n_nodes)
    D[i, i] = 0.0
    D.setflags(write=False)
    return D


def _geometry(curve):
    x = curve.points
    diff = x[:, None, :] - x[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    N = curve.n_nodes
    t = curve.t
    logsin = np.log(4 * np.sin((t[:, None] - t[None, :]) / 2) ** 2 + np.eye(N))
    return diff, r, logsin


def _combine(M1, M, logsin, diag_M2, R, N):
    with np.errstate(invalid="ignore"):
        M2 = M - M1 * logsin
    idx = np.arange(N)
    M2[idx, idx] = diag_M2
    return R * M1 + (math.pi / (N // 2)) * M2


def _single_layer(curve, k):
    N = curve.n_nodes
    diff, r, logsin = _geometry(curve)
    R = kress_weights(N)
    speed = curve.speed
    idx = np.arange(N)
    rr = r.copy()
    rr[idx, idx] = 1.0
    M = 0.25j * sps.hankel1(0, k * rr) * speed[None, :]
    M1 = -sps.j0(k * rr) / (4 * math.pi) * speed[None, :]
    diag = (0.25j - EULER / (2 * math.pi) - np.log(k * speed / 2) / (2 * math.pi)) * speed
    M1[idx, idx] = -speed / (4 * math.pi)
    return _combine(M1, M, logsin, diag, R, N)


def _laplace_single_layer(curve):
    N = curve.n_nodes
    _, r, logsin = _geometry(curve)
    R = kress_weights(N)
    speed = curve.speed
    idx = np.arange(N)
    rr = r.copy()
    rr[idx, idx] = 1.0
    M = -np.log(rr) / (2 * math.pi) * speed[None, :]
    M1 = -np.ones((N, N)) / (4 * math.pi) * speed[None, :]
    diag = -np.log(speed) / (2 * math.pi) * speed
    return _combine(M1, M, logsin, diag, R, N)


def _curvature_diag(curve):
    # n . x'' / (4 pi |x'|^2) with n = (x2', -x1')
    d1, d2 = curve.d1, curve.d2
    return (d1[:, 1] * d2[:, 0] - d1[:, 0] * d2[:, 1]) / (4 * math.pi * curve.speed**2)


def _double_layer(curve, k, adjoint):
    N = curve.n_nodes
    diff, r, logsin = _geometry(curve)
    R = kress_weights(N)
    idx = np.arange(N)
    rr = r.copy()
    rr[idx, idx] = 1.0
    if adjoint:
        # -(ik/4) H1(kr) (x - y).n(t)/r * |x'(tau)| / |x'(t)|
        nvec = curve.d1[:, ::-1] * np.array([1.0, -1.0])  # unnormalised normal at t
        proj = -np.einsum("ijc,ic->ij", diff, nvec) * (curve.speed[None, :] / curve.speed[:, None])
    else:
        nvec = curve.d1[:, ::-1] * np.array([1.0, -1.0])
        proj = np.einsum("ijc,jc->ij", diff, nvec)
    M = 0.25j * k * proj * sps.hankel1(1, k * rr) / rr
    M1 = -k / (4 * math.pi) * proj * sps.j1(k * rr) / rr
    M1[idx, idx] = 0.0
    M[idx, idx] = 0.0
    return _combine(M1, M, logsin, _curvature_diag(curve), R, N)


def _hypersingular(curve, k):
    S = _single_layer(curve, k)
    Ds = diff_matrix(curve.n_nodes) / curve.speed[:, None]
    n1, n2 = curve.normal[:, 0], curve.normal[:, 1]
    return Ds @ S @ Ds + k**2 * (n1[:, None] * S * n1[None, :] + n2[:, None] * S * n2[None, :])


def assemble(kind, curve, k):
    """Dense Nystrom matrix of a layer operator on ``curve`` at wavenumber ``k``.

    Parameters
    ----------
    kind : {"S", "K", "Kstar", "T", "S0"}
    curve : NystromCurve
    k : float
        Wavenumber; must be positive except for ``S0`` where it is ignored.
    """
    kind = OperatorKind(kind)
    if not isinstance(curve, NystromCurve):
        raise TypeError("curve must be a NystromCurve")
    if kind is OperatorKind.S0:
        return LayerOperator(kind, 0.0, _laplace_single_layer(curve))
    if not k > 0:
        raise ValueError(f"{kind.value} needs a positive wavenumber")
    if kind is OperatorKind.S:
        mat = _single_layer(curve, k)
    elif kind is OperatorKind.K:
        mat = _double_layer(curve, k, adjoint=False)
    elif kind is OperatorKind.KSTAR:
        mat = _double_layer(curve, k, adjoint=True)
    else:
        mat = _hypersingular(curve, k)
    mat.setflags(write=False)
    return LayerOperator(kind, float(k), mat)
