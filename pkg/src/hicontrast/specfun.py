"""Bessel, Neumann and first-kind Hankel functions of complex argument.

Spherical functions (3D) are evaluated in-house:

* ``j_n`` by its power series for small ``|z|``, by upward recurrence from the
  closed forms of ``j_0, j_1`` when ``|z|`` is well above the highest order,
  and by Miller-type backward ratio recurrence otherwise;
* ``h_n`` by upward recurrence from the closed forms of ``h_0, h_1``;
* ``y_n`` as ``i(j_n - h_n)``, or through ``h_n^{(2)}`` in the lower half plane.

Cylindrical functions (2D) take their values from ``scipy.special`` (AMOS) and
share the derivative recurrence with the spherical family.

Every routine accepts ``scaled=True``, which returns ``J, Y`` multiplied by
``exp(-|Im z|)`` and ``H1`` multiplied by ``exp(-iz)``.  Scaled values never
overflow for large ``|Im z|``; the transmission formulas are homogeneous in the
interior pair ``(j_n(k_b), j_n'(k_b))`` so they consume scaled values directly.
"""

from __future__ import annotations

import enum
import math

import numpy as np
import scipy.special as sps

__all__ = [
    "BesselKind",
    "Family",
    "BesselDomainError",
    "BesselOverflowError",
    "BesselPoleError",
    "bessel_family",
    "wronskian_residual",
    "wronskian_residuals",
    "ratio_Q",
    "log_double_factorial",
    "SERIES_RADIUS",
]

# Below this modulus j_n is summed from its power series.  Pinned by the
# Wronskian certificate over the acceptance grid (tests/test_specfun.py).
SERIES_RADIUS = 1.0
_SERIES_TERMS = 40


class BesselKind(str, enum.Enum):
    J = "J"
    Y = "Y"
    H1 = "H1"


class Family(str, enum.Enum):
    SPHERICAL = "spherical"
    CYLINDRICAL = "cylindrical"


class BesselDomainError(ValueError):
    """Raised for ``z = 0`` with a kind that is singular at the origin."""


class BesselOverflowError(OverflowError):
    """Raised when an unscaled value exceeds the floating-point range."""


class BesselPoleError(ZeroDivisionError):
    """Raised when ``j_n'(z)`` vanishes to working precision in :func:`ratio_Q`."""


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def _scaled_trig(z):
    """Return ``sin z * e^{-|Im z|}``, ``cos z * e^{-|Im z|}`` and ``e^{iz} e^{-|Im z|}``."""
    x, y = z.real, z.imag
    ay = np.abs(y)
    ep = np.exp(1j * x) * np.exp(-y - ay)  # e^{iz} e^{-|y|}
    em = np.exp(-1j * x) * np.exp(y - ay)  # e^{-iz} e^{-|y|}
    return (ep - em) / 2j, (ep + em) / 2, ep


# ---------------------------------------------------------------------------
# spherical family
# ---------------------------------------------------------------------------


def _sph_j_series(nmax, z):
    """Power series of j_0..j_nmax; rows are orders."""
    n = np.arange(nmax + 1)[:, None]
    zz = z[None, :]
    lead = np.ones((nmax + 1, z.size), dtype=complex)
    for m in range(1, nmax + 1):
        lead[m] = lead[m - 1] * z / (2 * m + 1)
    term = lead.copy()
    total = lead.copy()
    w = -(zz**2) / 2
    for m in range(1, _SERIES_TERMS):
        term = term * w / (m * (2 * n + 2 * m + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    return total


def _sph_j_upward(nmax, z, s, c):
    out = np.empty((nmax + 1, z.size), dtype=complex)
    out[0] = s / z
    if nmax >= 1:
        out[1] = s / z**2 - c / z
    for n in range(1, nmax):
        out[n + 1] = (2 * n + 1) / z * out[n] - out[n - 1]
    return out


def _backward_ratios(nmax, z):
    """Ratios r_n = j_{n+1}/j_n for n = 0..nmax by backward recurrence."""
    top = max(nmax, int(np.max(np.abs(z))) + 1)
    start = top + int(math.sqrt(40 * top)) + 20
    r = np.zeros(z.size, dtype=complex)
    out = np.empty((nmax + 1, z.size), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for m in range(start, 0, -1):
            # j_{m-1} = (2m+1)/z j_m - j_{m+1}  =>  r_{m-1} = 1 / ((2m+1)/z - r_m)
            r = 1.0 / ((2 * m + 1) / z - r)
            if m - 1 <= nmax:
                out[m - 1] = r
    return out


def _sph_j_miller(nmax, z, s, c):
    r = _backward_ratios(nmax, z)
    j0 = s / z
    j1 = s / z**2 - c / z
    out = np.empty((nmax + 1, z.size), dtype=complex)
    # normalize on the larger of j_0, j_1 to dodge a zero of either
    use_j0 = np.abs(j0) >= np.abs(j1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[0] = np.where(use_j0, j0, j1 / r[0])
    if nmax >= 1:
        out[1] = np.where(use_j0, j0 * r[0], j1)
        for n in range(1, nmax):
            out[n + 1] = out[n] * r[n]
    return out


def _sph_j(nmax, z, scaled):
    """Rows j_0..j_nmax (optionally scaled by e^{-|Im z|})."""
    out = np.empty((nmax + 1, z.size), dtype=complex)
    small = np.abs(z) < SERIES_RADIUS
    if np.any(small):
        zs = z[small]
        vals = _sph_j_series(nmax, zs)
        if scaled:
            vals = vals * np.exp(-np.abs(zs.imag))
        out[:, small] = vals
    big = ~small
    if np.any(big):
        zb = z[big]
        s, c, _ = _scaled_trig(zb)
        # upward recurrence only far from the turning point n ~ |z|, where it
        # loses accuracy for complex arguments
        up = np.abs(zb) >= 4 * (nmax + 2)
        vals = np.empty((nmax + 1, zb.size), dtype=complex)
        if np.any(up):
            vals[:, up] = _sph_j_upward(nmax, zb[up], s[up], c[up])
        if np.any(~up):
            vals[:, ~up] = _sph_j_miller(nmax, zb[~up], s[~up], c[~up])
        if not scaled:
            with np.errstate(over="ignore", invalid="ignore"):
                vals = vals * np.exp(np.abs(zb.imag))
        out[:, big] = vals
    return out


def _sph_y(nmax, z, scaled):
    """y_n from j_n and the Hankel function decaying in the half plane of z.

    Plain upward recurrence for y_n loses all accuracy near the turning point
    n ~ |z| off the real axis; y = i(j - h1) = i(h2 - j) does not.
    """
    j = _sph_j(nmax, z, True)
    upper = z.imag >= 0
    zh = np.where(upper, z, np.conj(z))
    h = _sph_h1(nmax, zh, True)
    x, yy = z.real, z.imag
    with np.errstate(under="ignore"):
        # bring e^{-iz}-scaled h into the e^{-|Im z|} scale of j
        f_up = np.exp(1j * x) * np.exp(-2 * np.abs(yy))
    h = np.where(upper, h * f_up, np.conj(h) * np.conj(f_up))
    out = np.where(upper, 1j * (j - h), 1j * (h - j))
    if not scaled:
        with np.errstate(over="ignore", invalid="ignore"):
            out = out * np.exp(np.abs(yy))
    return out


def _sph_h1(nmax, z, scaled):
    out = np.empty((nmax + 1, z.size), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        # e^{-iz} h_0 and e^{-iz} h_1 are rational in z
        out[0] = -1j / z
        if nmax >= 1:
            out[1] = -(z + 1j) / z**2
        for n in range(1, nmax):
            out[n + 1] = (2 * n + 1) / z * out[n] - out[n - 1]
        if not scaled:
            out = out * np.exp(1j * z)
    return out


# ---------------------------------------------------------------------------
# cylindrical family
# ---------------------------------------------------------------------------


def _cyl(kind, nmax, z, scaled):
    n = np.arange(nmax + 1)[:, None]
    zz = z[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        if kind is BesselKind.J:
            out = sps.jve(n, zz) if scaled else sps.jv(n, zz)
        elif kind is BesselKind.Y:
            out = sps.yve(n, zz) if scaled else sps.yv(n, zz)
        else:
            out = sps.hankel1e(n, zz) if scaled else sps.hankel1(n, zz)
    return np.asarray(out, dtype=complex)


# ---------------------------------------------------------------------------
# public interface
# ---------------------------------------------------------------------------


def bessel_family(family, kind, n_max, z, *, scaled=False):
    """Values and derivatives of orders ``0..n_max`` at ``z``.

    Parameters
    ----------
    family : Family or str
        ``"spherical"`` (j_n, y_n, h_n) or ``"cylindrical"`` (J_n, Y_n, H_n).
    kind : BesselKind or str
        ``"J"``, ``"Y"`` or ``"H1"``.
    n_max : int
        Highest order, ``n_max >= 0``.
    z : complex or array_like
        Argument(s).
    scaled : bool
        Return exponentially scaled values (see module docstring).

    Returns
    -------
    values, derivatives : ndarray
        Shape ``(n_max + 1,) + np.shape(z)``; derivatives are with respect to
        ``z`` and obtained from ``z phi_n' = n phi_n - z phi_{n+1}``.
    """
    family = Family(family)
    kind = BesselKind(kind)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    z = _as_complex(z)
    shape = z.shape
    zf = z.ravel()
    zero = zf == 0
    if kind is not BesselKind.J and np.any(zero):
        raise BesselDomainError(f"{family.value} {kind.value} is singular at z = 0")

    top = n_max + 1
    if family is Family.SPHERICAL:
        if kind is BesselKind.J:
            vals = _sph_j(top, zf, scaled)
        elif kind is BesselKind.Y:
            vals = _sph_y(top, zf, scaled)
        else:
            vals = _sph_h1(top, zf, scaled)
    else:
        vals = _cyl(kind, top, zf, scaled)

    n = np.arange(n_max + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        derivs = n / zf * vals[:-1] - vals[1:]
    if np.any(zero):
        # J only: phi_n'(0) is 1/3 (spherical) or 1/2 (cylindrical) at n = 1
        derivs[:, zero] = 0.0
        if n_max >= 1:
            derivs[1, zero] = 1 / 3 if family is Family.SPHERICAL else 0.5
        if family is Family.SPHERICAL:
            vals[:, zero] = 0.0
            vals[0, zero] = 1.0
    values = vals[:-1]
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(derivs))):
        raise BesselOverflowError(
            f"{family.value} {kind.value} up to order {n_max} exceeds the floating-point "
            "range; rescale the argument or pass scaled=True"
        )
    return values.reshape((n_max + 1,) + shape), derivs.reshape((n_max + 1,) + shape)


def wronskian_residual(n, z):
    """Relative residual of ``j_n y_n' - j_n' y_n = 1/z^2``.

    The combination is evaluated through the Hankel function that decays in
    the half plane of ``z`` (``h^(1)`` for ``Im z >= 0``, ``h^(2) = j - i y``
    otherwise).  Algebraically this is the same expression; numerically it
    avoids the ``exp(2|Im z|)`` cancellation between ``j y'`` and ``j' y``.
    """
    z = complex(z)
    if z == 0:
        raise BesselDomainError("Wronskian undefined at z = 0")
    return float(wronskian_residuals(n, np.array([z]))[n, 0])


def wronskian_residuals(n_max, z):
    """Residuals of :func:`wronskian_residual` for all ``n <= n_max``, shape ``(n_max+1,) + z.shape``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise BesselDomainError("Wronskian undefined at z = 0")
    upper = z.imag >= 0
    zh = np.where(upper, z, np.conj(z))
    j, jp = bessel_family(Family.SPHERICAL, BesselKind.J, n_max, z, scaled=True)
    h, hp = bessel_family(Family.SPHERICAL, BesselKind.H1, n_max, zh, scaled=True)
    h = np.where(upper, h, np.conj(h))
    hp = np.where(upper, hp, np.conj(hp))
    # j h1' - j' h1 = i W and j h2' - j' h2 = -i W; scale factors combine to e^{+-i Re z}
    sign = np.where(upper, -1j, 1j)
    w = sign * (j * hp - jp * h) * np.exp(np.where(upper, 1j, -1j) * z.real)
    target = 1.0 / z**2
    return np.abs(w - target) / np.abs(target)


def ratio_Q(n, z):
    """``Q(n, z) = j_n(z) / j_n'(z)`` from backward ratio recurrence.

    Uses ``j_n'/j_n = n/z - j_{n+1}/j_n`` with the ratio obtained by a Miller
    sweep, so no Bessel value is ever formed.
    """
    z = complex(z)
    if n < 0:
        raise ValueError("order must be nonnegative")
    if z == 0:
        return 0j if n > 0 else complex("inf")
    r = _backward_ratios(n, np.array([z]))[n, 0]
    logder = n / z - r
    if not np.isfinite(r):
        # j_n(z) = 0: Q vanishes
        return 0j
    if abs(logder) <= 64 * np.finfo(float).eps * (abs(n / z) + abs(r)):
        raise BesselPoleError(f"j_{n}'({z}) vanishes to working precision")
    return complex(1.0 / logder)


def log_double_factorial(m):
    """``log(m!!)`` for odd ``m >= -1``, evaluated through the gamma function."""
    if m == -1:
        return 0.0
    if m < 0 or m % 2 == 0:
        raise ValueError("odd m >= -1 expected")
    n = (m - 1) // 2  # m = 2n + 1
    return (n + 1) * math.log(2) + math.lgamma(n + 1.5) - 0.5 * math.log(math.pi)
