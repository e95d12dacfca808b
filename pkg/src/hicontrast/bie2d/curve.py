"""Smooth closed trigonometric curves sampled at equispaced parameter nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["TrigCurve", "NystromCurve", "GeometryError", "ParityError", "circle", "kite"]


class GeometryError(ValueError):
    """The curve is degenerate or negatively oriented."""


class ParityError(ValueError):
    """The node count must be even."""


def _series(coeffs_cos, coeffs_sin, t, order):
    """``d^order/dt^order`` of ``sum_j c_j cos(j t) + s_j sin(j t)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for j, c in enumerate(coeffs_cos):
        if c:
            # derivative of cos(jt) is j^p cos(jt + p pi/2)
            out += c * j**order * np.cos(j * t + order * math.pi / 2)
    for j, s in enumerate(coeffs_sin):
        if s:
            out += s * j**order * np.sin(j * t + order * math.pi / 2)
    return out


@dataclass(frozen=True)
class TrigCurve:
    """``x(t) = sum x_cos[j] cos(jt) + x_sin[j] sin(jt)``, likewise ``y(t)``.

    Index ``j`` of each coefficient list is the frequency.
    """

    x_cos: tuple = (0.0,)
    x_sin: tuple = (0.0,)
    y_cos: tuple = (0.0,)
    y_sin: tuple = (0.0,)

    def __post_init__(self):
        for name in ("x_cos", "x_sin", "y_cos", "y_sin"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def derivative(self, t, order=0):
        """``(P, 2)`` array of the ``order``-th derivative at parameters ``t``."""
        return np.stack(
            [_series(self.x_cos, self.x_sin, t, order), _series(self.y_cos, self.y_sin, t, order)], axis=-1
        )

    def discretize(self, n_nodes):
        return NystromCurve(self, n_nodes)


def circle(radius=1.0):
    return TrigCurve(x_cos=(0.0, radius), y_sin=(0.0, radius))


def kite():
    """``(cos t + 0.65 cos 2t - 0.65, 1.5 sin t)``."""
    return TrigCurve(x_cos=(-0.65, 1.0, 0.65), y_sin=(0.0, 1.5))


@dataclass(frozen=True)
class NystromCurve:
    """Nodes ``t_i = 2 pi i / N`` with positions, derivatives and normals.

    Attributes
    ----------
    points, d1, d2 : ndarray, shape (N, 2)
        ``x(t_i)``, ``x'(t_i)``, ``x''(t_i)``.
    speed : ndarray
        ``|x'(t_i)|``.
    normal : ndarray, shape (N, 2)
        Outward unit normal ``(x_2', -x_1') / |x'|``.
    weights : ndarray
        Trapezoid arc-length weights ``2 pi |x'| / N``.
    """

    geometry: TrigCurve
    n_nodes: int
    t: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)
    d1: np.ndarray = field(init=False, repr=False)
    d2: np.ndarray = field(init=False, repr=False)
    speed: np.ndarray = field(init=False, repr=False)
    normal: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N = self.n_nodes
        if N < 4 or N % 2:
            raise ParityError(f"node count must be even and at least 4, got {N}")
        t = 2 * math.pi * np.arange(N) / N
        pts = self.geometry.derivative(t, 0)
        d1 = self.geometry.derivative(t, 1)
        d2 = self.geometry.derivative(t, 2)
        speed = np.hypot(d1[:, 0], d1[:, 1])
        if not np.all(speed > 1e-10 * max(np.max(speed), 1e-300)):
            raise GeometryError("curve has a vanishing tangent")
        area = 0.5 * np.sum(pts[:, 0] * d1[:, 1] - pts[:, 1] * d1[:, 0]) * 2 * math.pi / N
        if not area > 0:
            raise GeometryError("curve must be positively oriented with nonzero area")
        normal = np.stack([d1[:, 1], -d1[:, 0]], axis=1) / speed[:, None]
        for name, val in (("t", t), ("points", pts), ("d1", d1), ("d2", d2), ("speed", speed),
                          ("normal", normal), ("weights", 2 * math.pi * speed / N)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "_area", float(area))

    @property
    def area(self):
        """Enclosed area ``(1/2) int (x y' - y x') dt`` (the volume ``V`` in 2D)."""
        return self._area

    def resample(self, n_nodes):
        return NystromCurve(self.geometry, n_nodes)
