"""Truncated multipole solutions for the penetrable unit ball (3D) and disk (2D).

Inside the inclusion ``u = sum b_n j_n(k_b r) Y_n``, outside
``u = sum (a_n j_n(k r) + c_n h_n(k r)) Y_n``.  With ``f, g`` the regular and
outgoing radial functions at ``k``, ``F`` the regular one at ``k_b`` and
``s = sqrt(delta tau) = delta / n`` the modal transmission conditions

    b F = a f + c g,        b F' = s (a f' + c g')

give

    c = a (f F' - s f' F) / D,    b = a s W / D,    D = s g' F - g F',

where ``W = f g' - f' g`` is ``i/k^2`` for spherical and ``2i/(pi k)`` for
cylindrical functions.  The formulas are homogeneous in ``(F, F')`` so the
exponentially scaled interior functions are used throughout; ``b`` is stored
in scaled form, ``b_true = b * exp(-b_scale)`` with ``b_scale = |Im k_b|``.

The four obstacle limits have closed-form coefficients on the ball:

* U (sound hard):   c = -a f'/g'
* W (sound soft):   c = -a f/g
* V (nonlocal):     as W for n >= 1; n = 0 from the flux/volume condition
* T (constant value, zero net flux): as W for n >= 1, as U for n = 0

Differences between the transmission and obstacle coefficients are formed
directly from the Wronskian-reduced multipliers, never by subtraction.

Coefficient layout: 3D slot ``n(n+1)+m``; 2D slot ``n + n_max`` for
``n = -n_max..n_max``.
"""

from __future__ import annotations

import cmath
import enum
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import harmonics
from .specfun import BesselKind, Family, bessel_family

__all__ = [
    "Model",
    "WaveContext",
    "Contrast",
    "ModalSolution",
    "FarField",
    "ResonanceError",
    "TruncationCapError",
    "TruncationWarning",
    "RESONANCE_FLOOR",
    "plane_wave_modes",
    "transmission_modes",
    "obstacle_modes",
    "diff_coefficients",
    "eval_field",
    "far_field",
    "truncation_order",
    "modal_residuals",
    "diff_multipliers",
    "mode_orders",
]

logger = logging.getLogger(__name__)

RESONANCE_FLOOR = 1e-280
DEFAULT_COEFF_BOUND = 1e12


class ResonanceError(ArithmeticError):
    """A modal denominator fell below :data:`RESONANCE_FLOOR`."""


class TruncationCapError(ValueError):
    """The requested tolerance needs more modes than allowed."""


class TruncationWarning(UserWarning):
    """The last retained mode is not negligible in a field evaluation."""


class Model(str, enum.Enum):
    TRANSMISSION = "Transmission"
    V = "V"
    T = "T"
    W = "W"
    U = "U"


@dataclass(frozen=True)
class WaveContext:
    """Exterior medium and frequency.

    Attributes
    ----------
    k : float
        Exterior wavenumber ``omega sqrt(rho/kappa)``.
    omega, rho, kappa : float
        Angular frequency, density and bulk modulus of the background.
    dimension : int
        2 (disk) or 3 (ball).
    """

    k: float
    omega: float
    rho: float
    kappa: float
    dimension: int = 3

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        for name in ("k", "omega", "rho", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        k2 = self.omega**2 * self.rho / self.kappa
        if abs(self.k**2 - k2) > 1e-13 * k2:
            raise ValueError("k^2 must equal omega^2 rho / kappa")

    @classmethod
    def from_wavenumber(cls, k, dimension=3, rho=1.0, kappa=1.0):
        return cls(k=float(k), omega=float(k) * math.sqrt(kappa / rho), rho=rho, kappa=kappa, dimension=dimension)

    @property
    def family(self):
        return Family.SPHERICAL if self.dimension == 3 else Family.CYLINDRICAL

    @property
    def wronskian(self):
        """``f g' - f' g`` for the regular/outgoing pair at ``k``."""
        return 1j / self.k**2 if self.dimension == 3 else 2j / (math.pi * self.k)


@dataclass(frozen=True)
class Contrast:
    """Material contrast of the inclusion against the background.

    ``tau = kappa0 (alpha - i beta) / kappa``; ``kb = k n`` with
    ``n = sqrt(delta/tau)`` on the branch ``Im n >= 0``; ``a + i b = 1/(kappa tau)``.
    """

    delta: float
    tau: complex
    alpha: float
    beta: float
    kappa0: float
    kb: complex
    refractive_index: complex
    a_coeff: float
    b_coeff: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.tau.imag > 0:
            raise ValueError("tau must satisfy Im tau <= 0")
        if self.kb.imag < 0:
            raise ValueError("kb must satisfy Im kb >= 0")

    @classmethod
    def from_material(cls, ctx, delta, alpha, beta, kappa0):
        """Build from ``delta`` and the inclusion modulus ``kappa0 (alpha - i beta)``."""
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        tau = complex(kappa0 * complex(alpha, -beta) / ctx.kappa)
        if tau == 0:
            raise ValueError("tau must be nonzero")
        n = cmath.sqrt(delta / tau)
        if n.imag < 0:
            n = -n
        inv = 1.0 / (ctx.kappa * tau)
        return cls(
            delta=float(delta),
            tau=tau,
            alpha=float(alpha),
            beta=float(beta),
            kappa0=float(kappa0),
            kb=ctx.k * n,
            refractive_index=n,
            a_coeff=inv.real,
            b_coeff=inv.imag,
        )

    @classmethod
    def from_delta_tau(cls, ctx, delta, tau):
        """Build from the two ratios, normalising ``alpha^2 + beta^2 = 1``."""
        tau = complex(tau)
        mod = abs(tau)
        if mod == 0:
            raise ValueError("tau must be nonzero")
        return cls.from_material(ctx, delta, tau.real / mod, -tau.imag / mod, mod * ctx.kappa)

    @property
    def sqrt_delta_tau(self):
        """``sqrt(delta tau)`` on the branch consistent with ``kb``."""
        return self.delta / self.refractive_index


def _readonly(x):
    if x is None:
        return None
    a = np.array(x, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModalSolution:
    """Coefficient arrays of one series solution.

    ``b`` is stored scaled: the interior coefficient is ``b * exp(-b_scale)``.
    Obstacle models carry ``b = None``.
    """

    dimension: int
    n_max: int
    a: np.ndarray
    b: np.ndarray | None
    c: np.ndarray
    model: Model
    b_scale: float = 0.0
    coeff_bound: float = DEFAULT_COEFF_BOUND

    def __post_init__(self):
        size = _n_slots(self.dimension, self.n_max)
        for name in ("a", "b", "c"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = _readonly(arr)
            if arr.shape != (size,):
                raise ValueError(f"{name} must have {size} entries for n_max={self.n_max}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "model", Model(self.model))
        energy = float(np.sum(np.abs(self.a) ** 2))
        if not energy <= self.coeff_bound:
            raise ValueError(f"sum |a|^2 = {energy:.3e} exceeds the configured bound {self.coeff_bound:.3e}")

    @property
    def b_true(self):
        """Unscaled interior coefficients (may underflow to zero)."""
        if self.b is None:
            return None
        return self.b * math.exp(-self.b_scale)


@dataclass(frozen=True)
class FarField:
    """Far-field pattern coefficients.

    3D: ``F(x) = sum F_n^m Y_n^m(x)``.  2D: ``F(theta) = sum F_n e^{i n theta}``.
    """

    dimension: int
    n_max: int
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _readonly(self.coefficients))

    def evaluate(self, directions):
        """Pattern at unit directions (3D, shape ``(P, 3)``) or angles (2D)."""
        if self.dimension == 3:
            _, theta, phi = harmonics.to_spherical(directions)
            return self.coefficients @ harmonics.evaluate(self.n_max, theta, phi)
        theta = np.atleast_1d(np.asarray(directions, dtype=float))
        n = mode_orders(2, self.n_max)
        return np.exp(1j * np.outer(theta, n)) @ self.coefficients

    def l2_norm(self):
        """``L^2`` norm on the unit sphere or circle."""
        w = 1.0 if self.dimension == 3 else 2 * math.pi
        return math.sqrt(w * float(np.sum(np.abs(self.coefficients) ** 2)))


# ---------------------------------------------------------------------------
# indexing helpers
# ---------------------------------------------------------------------------


def _n_slots(dimension, n_max):
    return (n_max + 1) ** 2 if dimension == 3 else 2 * n_max + 1


def mode_orders(dimension, n_max):
    """Signed order of each slot: ``n`` in 3D, ``n`` in ``-n_max..n_max`` in 2D."""
    if dimension == 3:
        return harmonics.degree_order(n_max)[0]
    return np.arange(-n_max, n_max + 1)


def _abs_orders(dimension, n_max):
    return np.abs(mode_orders(dimension, n_max))


def _n_max_from_size(dimension, size):
    if dimension == 3:
        n_max = int(round(math.sqrt(size))) - 1
    else:
        n_max = (size - 1) // 2
    if _n_slots(dimension, n_max) != size:
        raise ValueError(f"{size} coefficients do not form a complete {dimension}D layout")
    return n_max


def _radial(ctx, kind, n_max, z, scaled=False):
    vals, ders = bessel_family(ctx.family, kind, n_max, z, scaled=scaled)
    return vals, ders


# ---------------------------------------------------------------------------
# incident field
# ---------------------------------------------------------------------------


def plane_wave_modes(ctx, direction, n_max):
    """Coefficients of ``exp(i k x.d)``.

    3D: ``a_n^m = 4 pi i^n conj(Y_n^m(d))``.  2D: ``a_n = i^n exp(-i n theta_d)``
    where ``d`` is a unit 2-vector or an angle.
    """
    if ctx.dimension == 3:
        d = np.asarray(direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1) > 1e-12:
            raise ValueError("direction must be a unit 3-vector")
        _, theta, phi = harmonics.to_spherical(d[None, :])
        y = harmonics.evaluate(n_max, theta, phi)[:, 0]
        n = mode_orders(3, n_max)
        return 4 * math.pi * (1j**n) * np.conj(y)
    if np.ndim(direction) == 0:
        theta_d = float(direction)
    else:
        d = np.asarray(direction, dtype=float)
        if d.shape != (2,) or abs(np.linalg.norm(d) - 1) > 1e-12:
            raise ValueError("direction must be a unit 2-vector or an angle")
        theta_d = math.atan2(d[1], d[0])
    n = mode_orders(2, n_max)
    return (1j ** (n % 4)) * np.exp(-1j * n * theta_d)


# ---------------------------------------------------------------------------
# modal coefficients
# ---------------------------------------------------------------------------


def _exterior_pairs(ctx, n_max):
    f, fp = _radial(ctx, BesselKind.J, n_max, ctx.k)
    g, gp = _radial(ctx, BesselKind.H1, n_max, ctx.k)
    return f, fp, g, gp


def _interior_pairs(ctx, contrast, n_max):
    F, Fp = _radial(ctx, BesselKind.J, n_max, contrast.kb, scaled=True)
    return F, Fp


def _check_floor(den, what):
    bad = np.abs(den) < RESONANCE_FLOOR
    if np.any(bad) or not np.all(np.isfinite(den)):
        orders = np.nonzero(bad | ~np.isfinite(den))[0].tolist()
        raise ResonanceError(f"{what} denominator below {RESONANCE_FLOOR:g} at orders {orders}")


def _expand(per_order, dimension, n_max):
    return per_order[_abs_orders(dimension, n_max)]


def _transmission_per_order(ctx, contrast, n_max):
    f, fp, g, gp = _exterior_pairs(ctx, n_max)
    F, Fp = _interior_pairs(ctx, contrast, n_max)
    s = contrast.sqrt_delta_tau
    den = s * gp * F - g * Fp
    _check_floor(den, "transmission")
    c = (f * Fp - s * fp * F) / den
    b = s * ctx.wronskian / den
    return b, c, den


def transmission_modes(ctx, contrast, a):
    """Interior and scattered coefficients of the penetrable inclusion.

    Raises
    ------
    ResonanceError
        If a modal denominator has modulus below :data:`RESONANCE_FLOOR`.
    """
    a = np.asarray(a, dtype=complex)
    n_max = _n_max_from_size(ctx.dimension, a.size)
    b, c, _ = _transmission_per_order(ctx, contrast, n_max)
    return ModalSolution(
        dimension=ctx.dimension,
        n_max=n_max,
        a=a,
        b=_expand(b, ctx.dimension, n_max) * a,
        c=_expand(c, ctx.dimension, n_max) * a,
        model=Model.TRANSMISSION,
        b_scale=abs(contrast.kb.imag),
    )


def _obstacle_per_order(ctx, model, tau, n_max):
    f, fp, g, gp = _exterior_pairs(ctx, n_max)
    model = Model(model)
    if model is Model.U:
        _check_floor(gp, "sound-hard")
        return -fp / gp
    _check_floor(g, "Dirichlet")
    ratio = -f / g
    if model is Model.T:
        _check_floor(gp[:1], "zero-flux")
        ratio[0] = -fp[0] / gp[0]
    elif model is Model.V:
        if tau is None:
            raise ValueError("model V needs tau")
        N, k = ctx.dimension, ctx.k
        den = N * tau * gp[0] + k * g[0]
        _check_floor(np.array([den]), "model-V")
        ratio[0] = -(N * tau * fp[0] + k * f[0]) / den
    elif model is not Model.W:
        raise ValueError(f"{model.value} is not an obstacle model")
    return ratio


def obstacle_modes(ctx, model, tau, a):
    """Scattered coefficients of a limiting obstacle model on the unit ball/disk.

    Parameters
    ----------
    model : {"U", "W", "V", "T"}
    tau : complex or None
        Needed by model V only (its ``n = 0`` condition involves ``tau``).
    a : array_like
        Incident coefficients.
    """
    a = np.asarray(a, dtype=complex)
    n_max = _n_max_from_size(ctx.dimension, a.size)
    ratio = _obstacle_per_order(ctx, model, tau, n_max)
    return ModalSolution(
        dimension=ctx.dimension,
        n_max=n_max,
        a=a,
        b=None,
        c=_expand(ratio, ctx.dimension, n_max) * a,
        model=Model(model),
    )


def _regular_excess(ctx, kb, scaled):
    """``F_0' + kb F_0 / N`` at small ``kb`` from its power series (leading term kb^3)."""
    x = complex(kb)
    total = 0j
    if ctx.dimension == 3:
        # -(j_1 - x j_0 / 3) = -sum_{m>=2} (-1)^{m+1} x^{2m-1} (1/(2m+1) - 1/3) / (2m-1)!
        for m in range(2, 30):
            term = (-1) ** (m + 1) * x ** (2 * m - 1) * (1 / (2 * m + 1) - 1 / 3) / math.factorial(2 * m - 1)
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
    else:
        # -(J_1 - x J_0 / 2) = -sum_{m>=1} (-1)^{m+1} (x/2)^{2m+1} m / ((m!)^2 (m+1))
        for m in range(1, 30):
            term = (-1) ** (m + 1) * (x / 2) ** (2 * m + 1) * m / (math.factorial(m) ** 2 * (m + 1))
            total += term
            if abs(term) < 1e-18 * abs(total):
                break
    total = -total
    if scaled:
        total *= math.exp(-abs(x.imag))
    return total


def diff_multipliers(ctx, contrast, pair, n_max):
    """Multipliers per order ``n = 0..n_max``."""
    pair = Model(pair)
    f, fp, g, gp = _exterior_pairs(ctx, n_max)
    F, Fp = _interior_pairs(ctx, contrast, n_max)
    s = contrast.sqrt_delta_tau
    W = ctx.wronskian
    den = s * gp * F - g * Fp
    _check_floor(den, "transmission")
    q = W * Fp / (gp * den)
    l = s * W * F / (g * den)
    if pair is Model.U:
        return q
    if pair is Model.W:
        return l
    if pair is Model.T:
        out = l.copy()
        out[0] = q[0]
        return out
    if pair is Model.V:
        N, k, tau = ctx.dimension, ctx.k, contrast.tau
        kb = contrast.kb
        if abs(kb) < 0.5:
            excess = _regular_excess(ctx, kb, scaled=True)
        else:
            excess = Fp[0] + kb * F[0] / N
        e0 = N * tau * gp[0] + k * g[0]
        _check_floor(np.array([e0]), "model-V")
        out = l.copy()
        out[0] = W * N * tau * excess / (den[0] * e0)
        return out
    raise ValueError(f"{pair.value} is not an obstacle model")


def diff_coefficients(ctx, contrast, pair, n_max):
    """Multiplier of ``c_transmission - c_model`` in the coefficient layout.

    Parameters
    ----------
    pair : {"U", "V", "T", "W"}
        The limiting model compared against.
    n_max : int
        Truncation order.

    Returns
    -------
    ndarray
        ``d`` with ``(c_transmission - c_model) = d * a`` slot by slot.  The
        per-order values are ``q_n`` (U), ``l_n`` (W), ``p_n`` (V) and, for T,
        ``q_0`` at ``n = 0`` and ``l_n`` above.
    """
    per = diff_multipliers(ctx, contrast, pair, n_max)
    return _expand(per, ctx.dimension, n_max)


def modal_residuals(sol, ctx, contrast=None, tau=None):
    """Relative residual of each mode's defining boundary condition.

    Transmission: max of the value and flux continuity residuals.  U: Neumann;
    W: Dirichlet; T: Dirichlet for ``n >= 1``, Neumann for ``n = 0``; V:
    Dirichlet for ``n >= 1`` and the flux/volume condition for ``n = 0``.
    """
    n_max = sol.n_max
    f, fp, g, gp = _exterior_pairs(ctx, n_max)
    nn = _abs_orders(ctx.dimension, n_max)
    a, c = sol.a, sol.c
    f, fp, g, gp = f[nn], fp[nn], g[nn], gp[nn]
    val_out = a * f + c * g
    der_out = a * fp + c * gp
    scale_v = np.abs(a * f) + np.abs(c * g)
    scale_d = np.abs(a * fp) + np.abs(c * gp)
    with np.errstate(invalid="ignore", divide="ignore"):
        if sol.model is Model.TRANSMISSION:
            F, Fp = _interior_pairs(ctx, contrast, n_max)
            F, Fp = F[nn], Fp[nn]
            s = contrast.sqrt_delta_tau
            r1 = np.abs(sol.b * F - val_out) / np.maximum(np.abs(sol.b * F), scale_v)
            r2 = np.abs(sol.b * Fp - s * der_out) / np.maximum(np.abs(sol.b * Fp), np.abs(s) * scale_d)
            res = np.maximum(r1, r2)
        elif sol.model is Model.U:
            res = np.abs(der_out) / scale_d
        else:
            res = np.abs(val_out) / scale_v
            zero = nn == 0
            if sol.model is Model.T:
                res[zero] = (np.abs(der_out) / scale_d)[zero]
            elif sol.model is Model.V:
                N, k = ctx.dimension, ctx.k
                lhs = N * tau * der_out + k * val_out
                sc = np.abs(N * tau) * scale_d + k * scale_v
                res[zero] = (np.abs(lhs) / sc)[zero]
    return np.nan_to_num(res, nan=0.0)


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------


def _angular(ctx, n_max, points):
    """Angular functions and their tangential gradients at Cartesian points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if ctx.dimension == 3:
        r, theta, phi = harmonics.to_spherical(pts)
        y, dth, daz = harmonics.evaluate_with_gradient(n_max, theta, phi)
        st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
        rhat = np.stack([st * cp, st * sp, ct], axis=1)
        that = np.stack([ct * cp, ct * sp, -st], axis=1)
        phat = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
        return r, y, [(dth, that), (daz, phat)], rhat
    r = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    n = mode_orders(2, n_max)
    y = np.exp(1j * np.outer(n, theta))
    rhat = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    that = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    return r, y, [(1j * n[:, None] * y, that)], rhat


def _series(ctx, coeffs, n_max, radial_vals, radial_ders, wavenumber, r, y, tang, rhat):
    """Sum ``coeffs * R(w r) * Y`` and its gradient for per-point radial arrays."""
    nn = _abs_orders(ctx.dimension, n_max)
    R = radial_vals[nn]  # (slots, P)
    Rp = radial_ders[nn]
    if ctx.dimension == 2:
        # Z_{-n} = (-1)^n Z_n for every cylinder function
        sign = np.where((mode_orders(2, n_max) < 0) & (nn % 2 == 1), -1.0, 1.0)[:, None]
        R, Rp = R * sign, Rp * sign
    cy = coeffs[:, None] * y
    value = np.sum(cy * R, axis=0)
    grad = (np.sum(cy * Rp, axis=0) * wavenumber)[:, None] * rhat
    for ang, unit in tang:
        with np.errstate(divide="ignore", invalid="ignore"):
            part = np.sum(coeffs[:, None] * ang * R, axis=0) / r
        grad = grad + part[:, None] * unit
    last = nn == n_max
    tail = np.max(np.abs(np.sum((cy * R)[last], axis=0))) if np.any(last) else 0.0
    return value, grad, tail


def eval_field(sol, ctx, contrast=None, points=None, *, tail_fraction=1e-6):
    """Total field and gradient at Cartesian points.

    Interior points (``r < 1 - 1e-12``) use the interior series and require a
    transmission solution; exterior points use the scattered plus incident
    series.

    Returns
    -------
    values : ndarray, shape (P,)
    gradients : ndarray, shape (P, dimension)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != ctx.dimension:
        raise ValueError(f"points must have {ctx.dimension} columns")
    n_max = sol.n_max
    r, y, tang, rhat = _angular(ctx, n_max, pts)
    values = np.zeros(len(pts), dtype=complex)
    grads = np.zeros((len(pts), ctx.dimension), dtype=complex)
    # points within rounding of the interface use the exterior series
    inside = r < 1.0 - 1e-12
    outside = ~inside
    tail = 0.0
    total = 0.0
    if np.any(inside):
        if sol.model is not Model.TRANSMISSION:
            raise ValueError("obstacle solutions are defined outside the unit ball only")
        kb = contrast.kb
        sig = abs(kb.imag)
        ri = r[inside]
        Fv, Fd = _radial(ctx, BesselKind.J, n_max, kb * ri, scaled=True)
        # b j(kb r) = b_scaled exp(-sig (1 - r)) j_scaled(kb r)
        damp = np.exp(-sig * (1.0 - ri))
        sub = [(ang[:, inside], unit[inside]) for ang, unit in tang]
        v, gr, t = _series(ctx, sol.b, n_max, Fv * damp, Fd * damp, kb, ri, y[:, inside], sub, rhat[inside])
        values[inside], grads[inside] = v, gr
        tail, total = max(tail, t), max(total, np.max(np.abs(v)))
    if np.any(outside):
        ro = r[outside]
        kr = ctx.k * ro
        jv, jd = _radial(ctx, BesselKind.J, n_max, kr)
        hv, hd = _radial(ctx, BesselKind.H1, n_max, kr)
        sub = [(ang[:, outside], unit[outside]) for ang, unit in tang]
        yo, rh = y[:, outside], rhat[outside]
        v1, g1, t1 = _series(ctx, sol.a, n_max, jv, jd, ctx.k, ro, yo, sub, rh)
        v2, g2, t2 = _series(ctx, sol.c, n_max, hv, hd, ctx.k, ro, yo, sub, rh)
        values[outside], grads[outside] = v1 + v2, g1 + g2
        tail = max(tail, t1, t2)
        # compare against each part: the total cancels on a Dirichlet boundary
        total = max(total, np.max(np.abs(v1)), np.max(np.abs(v2)))
    if total > 0 and tail > tail_fraction * total:
        warnings.warn(
            f"last retained order {n_max} contributes {tail / total:.2e} of the field",
            TruncationWarning,
            stacklevel=2,
        )
    return values, grads


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


def far_field(sol, ctx):
    """Far-field coefficients of the scattered series.

    3D: ``F_n^m = c_n^m i^{-(n+1)} / k``.
    2D: ``F_n = sqrt(2/(pi k)) e^{-i pi/4} (-i)^n c_n`` from the large-argument
    form of ``H_n``.
    """
    n = mode_orders(ctx.dimension, sol.n_max)
    if ctx.dimension == 3:
        coeffs = sol.c * (-1j) ** ((n + 1) % 4) / ctx.k
    else:
        pref = math.sqrt(2 / (math.pi * ctx.k)) * cmath.exp(-1j * math.pi / 4)
        coeffs = pref * (-1j) ** (np.abs(n) % 4) * sol.c
        # (-i)^n for negative n equals i^{|n|}
        neg = n < 0
        coeffs[neg] = pref * (1j ** (np.abs(n[neg]) % 4)) * sol.c[neg]
    return FarField(dimension=ctx.dimension, n_max=sol.n_max, coefficients=coeffs)


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------


def _plane_wave_weight(dimension, n):
    """``sqrt(sum_m |a_n^m|^2)`` for a unit plane wave."""
    return math.sqrt(4 * math.pi * (2 * n + 1)) if dimension == 3 else math.sqrt(2.0)


def truncation_order(ctx, contrast=None, tol=1e-12, *, radius=1.0, max_order=200, margin=2):
    """Smallest order whose neglected plane-wave tail is below ``tol``.

    The tail of order ``n`` is estimated as ``sqrt(sum_m |a_n^m|^2) |j_n(k radius)|``,
    which decays like ``(k radius)^n / (2n+1)!!`` once ``n > k radius``.  The
    interior series needs no separate estimate: its boundary trace equals the
    exterior one by continuity and ``|j_n(k_b r)| <= |j_n(k_b)|`` beyond the
    turning point.  ``contrast`` is accepted for interface symmetry.

    Raises
    ------
    TruncationCapError
        If more than ``max_order`` modes would be needed.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = ctx.k * radius
    vals, _ = _radial(ctx, BesselKind.J, max_order + 3, x)
    for n in range(int(x), max_order + 1):
        tail = sum(_plane_wave_weight(ctx.dimension, m) * abs(vals[m]) for m in range(n + 1, n + 4))
        if tail < tol:
            return n + margin if n + margin <= max_order else max_order
    raise TruncationCapError(f"tolerance {tol:g} needs more than {max_order} orders at k r = {x:g}")
