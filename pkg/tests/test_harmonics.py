import math

import numpy as np
import pytest

from hicontrast.harmonics import degree_order, evaluate, evaluate_with_gradient, flat_index, n_coeffs, to_spherical


def test_layout():
    n, m = degree_order(3)
    assert len(n) == n_coeffs(3) == 16
    for i, (nn, mm) in enumerate(zip(n, m)):
        assert flat_index(nn, mm) == i
        assert abs(mm) <= nn


def test_orthonormal_on_sphere():
    # Gauss-Legendre in cos(theta) times trapezoid in phi is exact for degree <= 2*6
    x, w = np.polynomial.legendre.leggauss(12)
    phi = 2 * math.pi * np.arange(24) / 24
    theta = np.repeat(np.arccos(x), phi.size)
    ph = np.tile(phi, x.size)
    weights = np.repeat(w, phi.size) * (2 * math.pi / phi.size)
    y = evaluate(5, theta, ph)
    gram = (y * weights) @ y.conj().T
    assert np.allclose(gram, np.eye(n_coeffs(5)), atol=1e-13)


def test_addition_theorem():
    # sum_m |Y_n^m|^2 = (2n+1)/(4 pi)
    rng = np.random.default_rng(1)
    theta, phi = rng.uniform(0, math.pi, 5), rng.uniform(0, 2 * math.pi, 5)
    y = evaluate(6, theta, phi)
    n, _ = degree_order(6)
    for deg in range(7):
        s = np.sum(np.abs(y[n == deg]) ** 2, axis=0)
        assert np.allclose(s, (2 * deg + 1) / (4 * math.pi), rtol=1e-13)


def test_gradient_by_finite_differences():
    theta, phi, h = 0.7, 1.3, 1e-6
    _, dth, daz = evaluate_with_gradient(4, theta, phi)
    fd_t = (evaluate(4, theta + h, phi) - evaluate(4, theta - h, phi)) / (2 * h)
    fd_p = (evaluate(4, theta, phi + h) - evaluate(4, theta, phi - h)) / (2 * h) / math.sin(theta)
    assert np.allclose(dth, fd_t, atol=1e-8)
    assert np.allclose(daz, fd_p, atol=1e-8)


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_pole_limit(theta):
    eps = 1e-7
    _, _, near = evaluate_with_gradient(3, abs(theta - eps), 0.4)
    _, _, pole = evaluate_with_gradient(3, theta, 0.4)
    assert np.all(np.isfinite(pole))
    assert np.allclose(pole, near, atol=1e-5)


def test_to_spherical():
    r, theta, phi = to_spherical(np.array([[0.0, 0.0, 2.0], [0.0, -1.0, 0.0]]))
    assert np.allclose(r, [2, 1])
    assert np.allclose(theta, [0, math.pi / 2])
    assert np.isclose(phi[1], 1.5 * math.pi)
