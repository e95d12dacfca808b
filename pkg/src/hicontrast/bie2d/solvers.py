"""Boundary integral solvers for the four obstacle models.

Every scattered field is stored as ``u^s = S sigma + D mu``:

* sound soft (W), Dirichlet data: ``u^s = D psi - i zeta S psi`` and
  ``(1/2 + K - i zeta S) psi = u^s|``;
* sound hard (U): ``u^s = S psi + i eta D S0^2 psi`` and
  ``(Kstar - 1/2 + i eta T S0^2) psi = -d_nu u^i``;
* model V: ``v^s = D psi - i iota S psi`` with the nonlocal condition
  ``c_V v + (1/rho) int d_nu v ds = 0`` on the curve, ``c_V = omega^2 V / kappa_tilde``;
* model T: constant boundary value ``C_0`` fixed by zero net flux, assembled
  from the Dirichlet solutions for ``-u^i`` and for ``1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..analytic import Model
from . import potentials
from .operators import assemble

__all__ = [
    "BieSolution",
    "LinearSolveError",
    "DivisionHazardError",
    "solve_sound_soft",
    "solve_sound_hard",
    "solve_model_v",
    "solve_model_t",
    "dtn_flux",
    "far_field_from_density",
    "plane_wave_traces",
    "model_v_data",
    "flux_functional_two_ways",
]

logger = logging.getLogger(__name__)

FLUX_FLOOR = 1e-12


class LinearSolveError(RuntimeError):
    """The boundary system is singular to working precision."""


class DivisionHazardError(ArithmeticError):
    """The flux of the unit-Dirichlet solution is numerically zero."""


@dataclass
class BieSolution:
    """Density of a solved boundary integral equation.

    ``sigma`` and ``mu`` are the single- and double-layer densities of the
    scattered field; ``psi`` is the unknown of the boundary system.
    """

    model: Model
    psi: np.ndarray
    coupling: float
    sigma: np.ndarray
    mu: np.ndarray
    k: float
    b0: complex | None = None
    C0: complex | None = None
    a0: complex | None = None
    condition: float | None = None
    extras: dict = field(default_factory=dict)

    def field(self, curve, x):
        return potentials.evaluate(curve, self.k, self.sigma, self.mu, x)


def _solve(A, rhs, what):
    try:
        lu = sla.lu_factor(A, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise LinearSolveError(f"{what}: {exc}") from exc
    rcond = 1.0 / np.linalg.cond(A, 1)
    if not rcond > 1e3 * np.finfo(float).eps:
        raise LinearSolveError(f"{what}: system singular to working precision (condition {1 / rcond:.2e})")
    return sla.lu_solve(lu, rhs), 1.0 / rcond


def _identity(n):
    return np.eye(n, dtype=complex)


def plane_wave_traces(curve, k, angle):
    """Trace and normal derivative of ``exp(i k x.d)`` with ``d = (cos, sin)(angle)``."""
    d = np.array([math.cos(angle), math.sin(angle)])
    u = np.exp(1j * k * curve.points @ d)
    return u, 1j * k * (curve.normal @ d) * u


# ---------------------------------------------------------------------------
# Dirichlet machinery
# ---------------------------------------------------------------------------


def _dirichlet_system(curve, k, zeta):
    N = curve.n_nodes
    S = assemble("S", curve, k).matrix
    K = assemble("K", curve, k).matrix
    return 0.5 * _identity(N) + K - 1j * zeta * S


def _dirichlet_density(curve, k, data, zeta):
    A = _dirichlet_system(curve, k, zeta)
    psi, cond = _solve(A, np.asarray(data, dtype=complex), "Dirichlet system")
    return psi, cond


def _dirichlet_flux_row(curve, k, zeta):
    """Row vector ``w^T (T - i zeta (Kstar - 1/2))``: net outward flux of ``D psi - i zeta S psi``."""
    N = curve.n_nodes
    T = assemble("T", curve, k).matrix
    Ks = assemble("Kstar", curve, k).matrix
    return curve.weights @ (T - 1j * zeta * (Ks - 0.5 * _identity(N)))


def solve_sound_soft(curve, k, h, zeta=None):
    """Sound-soft scattering: ``u^s = -h`` on the curve.

    Parameters
    ----------
    h : array_like
        Incident trace at the nodes.
    zeta : float, optional
        Nonzero real coupling parameter, default ``k``.
    """
    zeta = k if zeta is None else float(zeta)
    if zeta == 0:
        raise ValueError("coupling parameter must be nonzero")
    psi, cond = _dirichlet_density(curve, k, -np.asarray(h, dtype=complex), zeta)
    return BieSolution(Model.W, psi, zeta, sigma=-1j * zeta * psi, mu=psi, k=k, condition=cond)


def dtn_flux(curve, k, d, zeta=None):
    """``int Lambda d ds``: net outward flux of the radiating field with trace ``d``."""
    zeta = k if zeta is None else float(zeta)
    d = np.asarray(d, dtype=complex)
    if not np.any(d):
        return 0j
    psi, _ = _dirichlet_density(curve, k, d, zeta)
    return complex(_dirichlet_flux_row(curve, k, zeta) @ psi)


def solve_sound_hard(curve, k, g, eta=1.0):
    """Sound-hard scattering: ``d_nu u^s = -g`` on the curve.

    Parameters
    ----------
    g : array_like
        Incident normal derivative at the nodes.
    eta : float
        Nonzero real regularisation parameter.
    """
    if eta == 0:
        raise ValueError("coupling parameter must be nonzero")
    N = curve.n_nodes
    Ks = assemble("Kstar", curve, k).matrix
    T = assemble("T", curve, k).matrix
    S0 = assemble("S0", curve, 0.0).matrix
    S02 = S0 @ S0
    A = Ks - 0.5 * _identity(N) + 1j * eta * T @ S02
    psi, cond = _solve(A, -np.asarray(g, dtype=complex), "sound-hard system")
    return BieSolution(Model.U, psi, float(eta), sigma=psi, mu=1j * eta * S02 @ psi, k=k, condition=cond)


def model_v_data(curve, ctx, kappa_tilde, u_inc, dudn_inc):
    """Right-hand side ``f = -((1/rho) int d_nu u^i + c_V u^i)`` of the scattered condition."""
    c_v = ctx.omega**2 * curve.area / kappa_tilde
    return -(curve.weights @ dudn_inc / ctx.rho + c_v * np.asarray(u_inc))


def solve_model_v(curve, ctx, kappa_tilde, f, iota=None):
    """Nonlocal model V: ``(1/rho) int d_nu v^s ds + (omega^2 V / kappa_tilde) v^s = f``.

    Parameters
    ----------
    ctx : WaveContext
        Two-dimensional background medium.
    kappa_tilde : complex
        Inclusion bulk modulus, ``Im kappa_tilde < 0`` for uniqueness.
    f : array_like
        Nodal data; :func:`model_v_data` builds it from an incident field.
    iota : float, optional
        Positive coupling parameter, default ``k``.
    """
    k = ctx.k
    iota = k if iota is None else float(iota)
    if not iota > 0:
        raise ValueError("iota must be positive")
    N = curve.n_nodes
    c_v = ctx.omega**2 * curve.area / kappa_tilde
    b0 = 1.0 / (ctx.omega**2 * ctx.rho * curve.area / kappa_tilde)
    trace = _dirichlet_system(curve, k, iota)
    flux = _dirichlet_flux_row(curve, k, iota)
    A = c_v * trace + np.outer(np.ones(N), flux) / ctx.rho
    psi, cond = _solve(A, np.asarray(f, dtype=complex), "model-V system")
    return BieSolution(Model.V, psi, iota, sigma=-1j * iota * psi, mu=psi, k=k, b0=b0, condition=cond)


def solve_model_t(curve, k, u_inc, dudn_inc, zeta=None):
    """Model T: ``t = C_0`` on the curve with ``int d_nu t ds = 0``.

    ``t^s = t_1 + C_0 t_3`` where ``t_1`` has trace ``-u^i`` and ``t_3`` trace 1;
    ``C_0 = (a_0 - int Lambda t_1) / int Lambda t_3`` with ``a_0 = -int d_nu u^i``.
    """
    zeta = k if zeta is None else float(zeta)
    N = curve.n_nodes
    A = _dirichlet_system(curve, k, zeta)
    lu = sla.lu_factor(A)
    psi1 = sla.lu_solve(lu, -np.asarray(u_inc, dtype=complex))
    psi3 = sla.lu_solve(lu, np.ones(N, dtype=complex))
    row = _dirichlet_flux_row(curve, k, zeta)
    flux1, flux3 = row @ psi1, row @ psi3
    if abs(flux3) < FLUX_FLOOR:
        raise DivisionHazardError(f"flux of the unit-Dirichlet field is {abs(flux3):.2e}")
    a0 = -(curve.weights @ dudn_inc)
    C0 = (a0 - flux1) / flux3
    psi = psi1 + C0 * psi3
    return BieSolution(
        Model.T, psi, zeta, sigma=-1j * zeta * psi, mu=psi, k=k, C0=complex(C0), a0=complex(a0),
        extras={"flux_t1": complex(flux1), "flux_t3": complex(flux3)},
    )


def far_field_from_density(solution, curve, k, directions):
    """Far-field samples of the solution's scattered field at observation angles."""
    return potentials.far_field(curve, k, solution.sigma, solution.mu, directions)


def flux_functional_two_ways(curve, k, psi, *, upsample=None, offsets=None, spacing=0.1):
    """``<T psi, 1>`` from the Maue matrix and from off-boundary extrapolation.

    The second value integrates ``nu . grad D psi`` over parallel curves at
    distances ``s = h, 2h, ..., 5h`` outside and extrapolates polynomially to
    ``s = 0``, using a density upsampled by trigonometric interpolation.  By
    default the upsampled node spacing is at most ``spacing * h``, which keeps
    the trapezoid rule accurate at distance ``h`` from the curve.
    """
    T = assemble("T", curve, k).matrix
    direct = complex(curve.weights @ (T @ psi))
    h = 0.01 if offsets is None else offsets
    if upsample is None:
        upsample = 1
        while np.max(curve.weights) / upsample > spacing * h:
            upsample *= 2
    fine = curve.resample(curve.n_nodes * upsample)
    mu = potentials.upsample(psi, fine.n_nodes)
    s = h * np.arange(1, 6)
    vals = []
    for si in s:
        x = curve.points + si * curve.normal
        dn = potentials.normal_derivative_double_layer(fine, k, mu, x, curve.normal)
        # integrate against the base arc length so the s -> 0 limit is <T psi, 1>
        vals.append(curve.weights @ dn)
    vals = np.array(vals)
    coef = np.polyfit(s, vals, len(s) - 1)
    extrap = complex(np.polyval(coef, 0.0))
    return direct, extrap
