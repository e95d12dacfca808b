import math

import mpmath as mp
import numpy as np
import pytest

from hicontrast.specfun import (
    BesselDomainError,
    BesselOverflowError,
    BesselPoleError,
    bessel_family,
    log_double_factorial,
    ratio_Q,
    wronskian_residual,
)

mp.mp.dps = 50


def _mp_sph(kind, n, z):
    z = mp.mpc(z)
    pref = mp.sqrt(mp.pi / (2 * z))
    if kind == "J":
        return complex(pref * mp.besselj(n + 0.5, z))
    if kind == "Y":
        return complex(pref * mp.bessely(n + 0.5, z))
    return complex(_mp_h_scaled(n, z) * mp.exp(mp.mpc(0, 1) * z))


def _mp_h_scaled(n, z):
    # e^{-iz} h_n(z) from the terminating series, free of cancellation
    z = mp.mpc(z)
    s = mp.fsum(
        mp.mpc(0, 1) ** k * mp.factorial(n + k) / (mp.factorial(k) * mp.factorial(n - k) * (2 * z) ** k)
        for k in range(n + 1)
    )
    return mp.mpc(0, -1) ** (n + 1) * s / z


def _mp_cyl(kind, n, z):
    z = mp.mpc(z)
    f = {"J": mp.besselj, "Y": mp.bessely, "H1": mp.hankel1}[kind]
    return complex(f(n, z))


ARGS = [1.0, 0.3 + 0.2j, 2 + 0.5j, 7.3, 30.0, 5 - 3j, 0.9j, 40 + 60j, 150 + 1j, 1e-3, 100 + 100j]


@pytest.mark.parametrize("kind", ["J", "Y", "H1"])
@pytest.mark.parametrize("z", ARGS)
def test_spherical_against_mpmath(kind, z):
    vals, ders = bessel_family("spherical", kind, 60, z)
    for n in (0, 1, 5, 20, 40, 60):
        ref = _mp_sph(kind, n, z)
        assert abs(vals[n] - ref) <= 1e-12 * abs(ref), (n, vals[n], ref)


@pytest.mark.parametrize("kind", ["J", "Y", "H1"])
@pytest.mark.parametrize("z", [1.0, 2 + 0.5j, 7.3 - 1j, 0.4j])
def test_cylindrical_against_mpmath(kind, z):
    vals, ders = bessel_family("cylindrical", kind, 12, z)
    for n in (0, 1, 6, 12):
        ref = _mp_cyl(kind, n, z)
        assert abs(vals[n] - ref) <= 1e-12 * abs(ref)
        dref = complex(mp.diff(lambda t: {"J": mp.besselj, "Y": mp.bessely, "H1": mp.hankel1}[kind](n, t), mp.mpc(z)))
        assert abs(ders[n] - dref) <= 1e-11 * abs(dref)


def test_spherical_derivative_against_mpmath():
    z = 3.1 + 0.7j
    _, ders = bessel_family("spherical", "J", 10, z)
    for n in (0, 3, 10):
        dref = complex(mp.diff(lambda t: mp.sqrt(mp.pi / (2 * t)) * mp.besselj(n + 0.5, t), mp.mpc(z)))
        assert abs(ders[n] - dref) <= 1e-12 * abs(dref)


def test_closed_form_j0():
    vals, _ = bessel_family("spherical", "J", 0, 1.0)
    assert vals[0] == pytest.approx(math.sin(1.0), rel=1e-15)


def test_origin_limits():
    vals, ders = bessel_family("spherical", "J", 4, 0.0)
    np.testing.assert_array_equal(vals, [1, 0, 0, 0, 0])
    assert ders[1] == pytest.approx(1 / 3)
    with pytest.raises(BesselDomainError):
        bessel_family("spherical", "Y", 3, 0.0)
    with pytest.raises(BesselDomainError):
        bessel_family("cylindrical", "H1", 3, 0.0)


def test_h5_example_against_series_oracle():
    # h_5 at 2 + 0.5i from the mpmath j and y series summed separately
    z = 2.0 + 0.5j
    ref = _mp_sph("J", 5, z) + 1j * _mp_sph("Y", 5, z)
    vals, _ = bessel_family("spherical", "H1", 5, z)
    assert abs(vals[5] - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("family", ["spherical", "cylindrical"])
def test_h1_is_j_plus_iy(family):
    rng = np.random.default_rng(1)
    z = rng.uniform(0.5, 30, 40) + 1j * rng.uniform(-3, 3, 40)
    j, _ = bessel_family(family, "J", 30, z)
    y, _ = bessel_family(family, "Y", 30, z)
    h, _ = bessel_family(family, "H1", 30, z)
    scale = np.maximum(np.abs(h), np.abs(j + 1j * y))
    assert np.max(np.abs(h - (j + 1j * y)) / scale) < 1e-12


@pytest.mark.parametrize("family", ["spherical", "cylindrical"])
@pytest.mark.parametrize("kind", ["J", "Y", "H1"])
def test_derivative_recurrence(family, kind):
    z = np.array([0.7 + 0.1j, 3.0, 12 - 2j])
    vals, ders = bessel_family(family, kind, 21, z)
    n = np.arange(21)[:, None]
    lhs = z * ders[:-1]
    rhs = n * vals[:-1] - z * vals[1:]
    assert np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)) < 1e-12


def test_scaled_values_survive_large_imaginary_part():
    z = 30 + 900j
    with pytest.raises(BesselOverflowError):
        bessel_family("spherical", "J", 5, z)
    vals, _ = bessel_family("spherical", "J", 5, z, scaled=True)
    assert np.all(np.isfinite(vals))
    ref = mp.sqrt(mp.pi / (2 * mp.mpc(z))) * mp.besselj(3.5, mp.mpc(z)) * mp.exp(-900)
    assert abs(vals[3] - complex(ref)) <= 1e-12 * abs(complex(ref))
    hs, _ = bessel_family("spherical", "H1", 5, z, scaled=True)
    href = complex(_mp_h_scaled(3, z))
    assert abs(hs[3] - href) <= 1e-12 * abs(href)


def test_wronskian_examples():
    assert wronskian_residual(3, 2.0) < 1e-14
    assert wronskian_residual(0, 1.0 + 1.0j) < 1e-14
    assert wronskian_residual(50, 30.0) < 1e-10


def test_wronskian_lower_half_plane():
    for z in (3 - 40j, 0.01 - 0.02j, -20 - 1j):
        assert wronskian_residual(17, z) < 1e-12


def test_large_order_law():
    n, k = 80, 1.0
    j, _ = bessel_family("spherical", "J", n, k)
    h, _ = bessel_family("spherical", "H1", n, k)
    log_j = n * math.log(k) - log_double_factorial(2 * n + 1)
    log_h = (n + 1) * math.log(k) - log_double_factorial(2 * n - 1)
    ratio_j = j[n].real / math.exp(log_j)
    ratio_h = abs(h[n] * 1j * math.exp(log_h))
    assert abs(ratio_j - 1) < 0.05
    assert abs(ratio_h - 1) < 0.05


def test_log_double_factorial():
    assert log_double_factorial(-1) == 0.0
    assert log_double_factorial(1) == pytest.approx(0.0, abs=1e-15)
    assert log_double_factorial(7) == pytest.approx(math.log(105))
    with pytest.raises(ValueError):
        log_double_factorial(4)


def test_ratio_Q_small_argument():
    assert ratio_Q(2, 1e-4) == pytest.approx(5e-5, rel=1e-6)
    z = 1e-3
    ref = complex((mp.sin(z) / z) / ((mp.cos(z) * z - mp.sin(z)) / z**2))
    assert ratio_Q(0, z) == pytest.approx(ref, rel=1e-10)
    assert ratio_Q(0, z) == pytest.approx(-3 / z, rel=1e-5)


def test_ratio_Q_large_argument_phase():
    q = ratio_Q(4, 100 + 100j)
    assert abs(q) == pytest.approx(1.0, abs=0.02)
    # observed phase is +pi/2, consistent with j_n'/j_n -> e^{-i pi/2}
    assert abs(np.angle(q) - np.pi / 2) < 0.02


def test_ratio_Q_matches_division():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(0, 21))
        z = complex(rng.uniform(0.2, 20), rng.uniform(0.1, 20))
        v, d = bessel_family("spherical", "J", n, z, scaled=True)
        ref = v[n] / d[n]
        assert abs(ratio_Q(n, z) - ref) <= 1e-10 * abs(ref)


def test_ratio_Q_pole():
    # first zero of j_1' near 2.0815759778671
    z0 = float(mp.findroot(lambda t: mp.diff(lambda s: mp.sin(s) / s**2 - mp.cos(s) / s, t), 2.08))
    with pytest.raises(BesselPoleError):
        ratio_Q(1, z0)
