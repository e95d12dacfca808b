"""Error norms, contrast sweeps, rate fits and interior scaling checks.

Norms use orthogonality of the angular functions, so every squared norm is a
sum over modes of ``|coefficient|^2`` times a radial integral.  Radial
integrals use composite Gauss-Legendre rules and are accepted only when
doubling the rule changes them by less than ``1e-8`` relatively.

In 2D the angular functions ``e^{i n theta}`` have squared norm ``2 pi``, which
is folded into every 2D norm.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .analytic import (
    Contrast,
    FarField,
    Model,
    WaveContext,
    _abs_orders,
    diff_coefficients,
    plane_wave_modes,
    transmission_modes,
    truncation_order,
)
from .specfun import BesselKind, bessel_family

__all__ = [
    "NormKind",
    "NormSpec",
    "GridSpec",
    "RateTable",
    "QuadratureConvergenceError",
    "FitError",
    "h1_annulus_diff",
    "h1_annulus_total",
    "interior_norms",
    "farfield_l2_diff",
    "boundary_trace_diff",
    "rate_sweep",
    "sweep_point",
    "fit_rate",
    "contrast_for",
    "default_grid",
    "default_tau",
    "absorption_identity",
    "apriori_ratios",
    "energy_ratios",
    "TAU_PHASE",
]

logger = logging.getLogger(__name__)

QUAD_RTOL = 1e-8
# unit phase of the reference lossy modulus 1 - 0.5i, used on the coupled paths
TAU_PHASE = (1 - 0.5j) / abs(1 - 0.5j)


class QuadratureConvergenceError(RuntimeError):
    """Doubling the quadrature order changed a norm by more than ``1e-8``."""


class FitError(ValueError):
    """Too few or degenerate samples for a log-log fit."""


class NormKind(str, enum.Enum):
    H1_ANNULUS = "H1_annulus"
    FARFIELD_L2 = "FarField_L2"
    BOUNDARY_TRACE = "Boundary_trace"


@dataclass(frozen=True)
class NormSpec:
    """Exterior error norm.

    Attributes
    ----------
    outer_radius : float
        ``R`` of the annulus ``1 < r < R``.
    quadrature_order : int
        Gauss-Legendre points on the annulus (checked against twice as many).
    norm_kind : NormKind
    """

    outer_radius: float = 2.0
    quadrature_order: int = 32
    norm_kind: NormKind = NormKind.H1_ANNULUS

    def __post_init__(self):
        if not self.outer_radius > 1:
            raise ValueError("outer_radius must exceed 1")
        if self.quadrature_order < 16:
            raise ValueError("quadrature_order must be at least 16")
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced parameter grid ``10^start .. 10^stop``.

    ``trim_low`` and ``trim_high`` drop that many decades from either end
    before fitting; trimmed points are still evaluated and reported.
    """

    start: float
    stop: float
    points_per_decade: int = 4
    trim_low: float = 0.0
    trim_high: float = 0.0

    def values(self):
        n = int(round(abs(self.stop - self.start) * self.points_per_decade)) + 1
        return np.logspace(self.start, self.stop, n)

    def fit_mask(self):
        p = np.log10(self.values())
        lo, hi = min(self.start, self.stop), max(self.start, self.stop)
        return (p >= lo + self.trim_low - 1e-9) & (p <= hi - self.trim_high + 1e-9)


@dataclass
class RateTable:
    """Sweep samples and their log-log fit."""

    model: Model
    parameters: np.ndarray
    errors: np.ndarray
    fitted_slope: float
    fit_residual: float
    intercept: float
    norm_kind: NormKind
    errors_h1: np.ndarray | None = None
    errors_ff: np.ndarray | None = None
    slope_h1: float | None = None
    slope_ff: float | None = None
    excluded: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.parameters, dtype=float)
        d = np.diff(p)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("parameter grid must be strictly monotone")
        if not np.all(np.asarray(self.errors) > 0):
            raise ValueError("errors must be strictly positive")


# ---------------------------------------------------------------------------
# radial quadrature
# ---------------------------------------------------------------------------


def _gauss(a, b, order, panels=1):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _checked(compute, order, what):
    lo = compute(order)
    hi = compute(2 * order)
    scale = np.maximum(np.abs(hi), np.finfo(float).tiny)
    change = np.max(np.abs(hi - lo) / scale)
    if change > QUAD_RTOL:
        raise QuadratureConvergenceError(f"{what}: relative change {change:.2e} under order doubling")
    return hi


@lru_cache(maxsize=256)
def _annulus_gram(dimension, n_max, k, R, order):
    """Per-order 2x2 Gram matrices over ``[j_n(kr), h_n(kr)]`` on ``1 < r < R``.

    ``G[n, p, q] = int (k^2 phi_p' conj(phi_q') + (L_n / r^2 + 1) phi_p conj(phi_q)) r^{N-1} dr``
    with ``L_n = n(n+1)`` (3D) or ``n^2`` (2D), times ``2 pi`` in 2D.
    """
    ctx = WaveContext.from_wavenumber(k, dimension)
    n = np.arange(n_max + 1)[:, None]
    lam = n * (n + 1) if dimension == 3 else n**2
    panels = max(1, int(math.ceil((R - 1) * k / 2)))

    def compute(q):
        r, w = _gauss(1.0, R, q, panels)
        j, jp = bessel_family(ctx.family, BesselKind.J, n_max, k * r)
        h, hp = bessel_family(ctx.family, BesselKind.H1, n_max, k * r)
        phi = np.stack([j, h], axis=1)  # (n, 2, P)
        dphi = np.stack([jp, hp], axis=1)
        meas = w * r ** (dimension - 1)
        g = k**2 * np.einsum("npx,nqx,x->npq", dphi, dphi.conj(), meas)
        g += np.einsum("npx,nqx,nx->npq", phi, phi.conj(), (lam / r**2 + 1) * meas)
        return g * (2 * math.pi if dimension == 2 else 1.0)

    out = _checked(compute, order, "annulus Gram matrix")
    out.setflags(write=False)
    return out


def _gram(ctx, n_max, spec):
    return _annulus_gram(ctx.dimension, n_max, float(ctx.k), float(spec.outer_radius), spec.quadrature_order)


def _scattered_h1(d, ctx, n_max, spec):
    G = _gram(ctx, n_max, spec)
    w = G[:, 1, 1].real[_abs_orders(ctx.dimension, n_max)]
    return math.sqrt(float(np.sum(np.abs(d) ** 2 * w)))


def h1_annulus_diff(sol1, sol2, ctx, spec=NormSpec()):
    """``||u_1 - u_2||_{H^1(B_R minus closed B_1)}`` for solutions sharing the incident field."""
    if sol1.n_max != sol2.n_max or sol1.dimension != sol2.dimension:
        raise ValueError("solutions must share dimension and truncation")
    return _scattered_h1(np.asarray(sol1.c) - np.asarray(sol2.c), ctx, sol1.n_max, spec)


def h1_annulus_total(a, c, ctx, spec=NormSpec()):
    """H^1 annulus norm of the total field ``sum (a j_n + c h_n) Y_n``."""
    a = np.asarray(a, dtype=complex)
    c = np.zeros_like(a) if c is None else np.asarray(c, dtype=complex)
    n_max = _n_max_of(ctx.dimension, a.size)
    G = _gram(ctx, n_max, spec)[_abs_orders(ctx.dimension, n_max)]
    v = np.stack([a, c], axis=1)
    val = np.einsum("sp,spq,sq->", v, G, v.conj()).real
    return math.sqrt(max(val, 0.0))


def _n_max_of(dimension, size):
    return int(round(math.sqrt(size))) - 1 if dimension == 3 else (size - 1) // 2


def boundary_trace_diff(sol1, sol2, ctx):
    """``L^2`` norm on ``r = 1`` of the difference of two exterior fields."""
    n_max = sol1.n_max
    h, _ = bessel_family(ctx.family, BesselKind.H1, n_max, ctx.k)
    d = np.asarray(sol1.c) - np.asarray(sol2.c)
    w = np.abs(h[_abs_orders(ctx.dimension, n_max)]) ** 2 * (2 * math.pi if ctx.dimension == 2 else 1.0)
    return math.sqrt(float(np.sum(np.abs(d) ** 2 * w)))


def farfield_l2_diff(f1, f2):
    """``L^2`` norm of the difference of two far-field patterns, exact by orthogonality."""
    if f1.dimension != f2.dimension or f1.n_max != f2.n_max:
        raise ValueError("far fields must share dimension and truncation")
    return FarField(f1.dimension, f1.n_max, f1.coefficients - f2.coefficients).l2_norm()


def interior_norms(sol, ctx, contrast, quadrature_order=16):
    """``(||u||_{L^2(B_1)}, ||grad u||_{L^2(B_1)})`` of the interior series.

    The radial rule uses panels of width ``min(1/8, 1/|k_b|)``.  With
    ``sigma = |Im k_b|`` the integrand carries ``exp(-2 sigma (1 - r))``, so
    the interval is cut to ``1 - 25/sigma < r < 1`` where the rest is below
    ``e^{-50}``.
    """
    if sol.b is None:
        raise ValueError("interior norms need a transmission solution")
    b = np.asarray(sol.b)
    if not np.any(b):
        return 0.0, 0.0
    n_max = sol.n_max
    kb = contrast.kb
    sig = abs(kb.imag)
    r0 = max(0.0, 1.0 - 25.0 / sig) if sig > 0 else 0.0
    width = min(1 / 8, 1 / max(abs(kb), 1e-300))
    panels = max(1, int(math.ceil((1 - r0) / width)))
    n = np.arange(n_max + 1)[:, None]
    lam = n * (n + 1) if ctx.dimension == 3 else n**2
    nn = _abs_orders(ctx.dimension, n_max)
    per_order = np.zeros(n_max + 1)
    np.add.at(per_order, nn, np.abs(b) ** 2)
    per_order = per_order[:, None]

    def compute(q):
        r, w = _gauss(r0, 1.0, q, panels)
        F, Fp = bessel_family(ctx.family, BesselKind.J, n_max, kb * r, scaled=True)
        damp = np.exp(-2 * sig * (1.0 - r))
        meas = w * r ** (ctx.dimension - 1) * damp
        absF = np.abs(F) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.where(r > 0, lam * absF / r**2, 0.0)
        l2 = np.sum(per_order * absF * meas)
        grad = np.sum(per_order * (abs(kb) ** 2 * np.abs(Fp) ** 2 + ang) * meas)
        return np.array([l2, grad])

    vals = _checked(compute, quadrature_order, "interior norm")
    if ctx.dimension == 2:
        vals = vals * 2 * math.pi
    return math.sqrt(vals[0]), math.sqrt(vals[1])


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def default_tau(model):
    """Reference ``tau`` (U, V) or unit phase of ``tau`` (W, T)."""
    model = Model(model)
    if model is Model.U:
        return 1.0 + 0j
    if model is Model.V:
        return 1 - 0.5j
    return TAU_PHASE


def default_grid(model):
    """Decades ``10^2..10^8`` for U, ``10^-8..10^-2`` otherwise; 4 points per decade."""
    return GridSpec(2, 8) if Model(model) is Model.U else GridSpec(-8, -2)


def contrast_for(ctx, model, param, tau=None):
    """Contrast at a grid point on the default path of ``model``.

    U, V: ``delta = param`` with fixed ``tau``.  W: ``delta = param``,
    ``tau = param * phase``.  T: ``delta = param``, ``tau = phase / param``.
    """
    model = Model(model)
    t = default_tau(model) if tau is None else complex(tau)
    if model in (Model.U, Model.V):
        return Contrast.from_delta_tau(ctx, param, t)
    phase = t / abs(t)
    if model is Model.W:
        return Contrast.from_delta_tau(ctx, param, param * phase)
    if model is Model.T:
        return Contrast.from_delta_tau(ctx, param, phase / param)
    raise ValueError(f"no sweep path for model {model.value}")


def sweep_point(model, ctx, param, a, spec, tau=None):
    """``(error_h1, error_ff)`` between the transmission and ``model`` solutions."""
    n_max = _n_max_of(ctx.dimension, len(a))
    contrast = contrast_for(ctx, model, param, tau)
    d = diff_coefficients(ctx, contrast, model, n_max) * a
    err_h1 = _scattered_h1(d, ctx, n_max, spec)
    # |F_n| = |c_n| / k (3D) or sqrt(2/(pi k)) |c_n| with weight 2 pi (2D)
    ff2 = float(np.sum(np.abs(d) ** 2))
    ff = math.sqrt(ff2) / ctx.k if ctx.dimension == 3 else math.sqrt(4 * ff2 / ctx.k)
    return err_h1, ff


def _incident(ctx, tol):
    n_max = truncation_order(ctx, tol=tol)
    direction = np.array([0.0, 0.0, 1.0]) if ctx.dimension == 3 else 0.0
    return plane_wave_modes(ctx, direction, n_max)


def _guarded_point(model, ctx, param, a, spec, tau):
    """``sweep_point`` that reports solver failures instead of raising."""
    try:
        e_h1, e_ff = sweep_point(model, ctx, param, a, spec, tau)
        e_tr = _trace_error(model, ctx, param, a, tau) if spec.norm_kind is NormKind.BOUNDARY_TRACE else None
    except (ArithmeticError, QuadratureConvergenceError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    values = (e_h1, e_ff, e_tr)
    if not all(v is None or (math.isfinite(v) and v > 0) for v in values):
        return None, f"non-finite or zero error {values}"
    return values, None


def rate_sweep(model, ctx, grid=None, spec=NormSpec(), *, tau=None, a=None, tol=1e-15, mapper=map):
    """Errors between the transmission solution and a limiting model over a grid.

    Parameters
    ----------
    model : {"U", "V", "W", "T"}
    grid : GridSpec, optional
        Defaults to :func:`default_grid`.
    spec : NormSpec
        ``norm_kind`` selects which error drives ``fitted_slope``.
    tau : complex, optional
        Fixed ``tau`` (U, V) or the phase source (W, T).
    a : array_like, optional
        Incident coefficients; a plane wave along the symmetry axis by default.
    mapper : callable
        ``map``-like evaluator, e.g. an executor's ``map``; results keep grid order.

    Grid points whose evaluation fails are dropped from the table and listed
    in ``RateTable.failures``; fewer than four valid samples is a
    :class:`FitError`.
    """
    model = Model(model)
    grid = default_grid(model) if grid is None else grid
    params = grid.values()
    if a is None:
        a = _incident(ctx, tol)
    a = np.asarray(a, dtype=complex)
    m = len(params)
    results = list(mapper(_guarded_point, [model] * m, [ctx] * m, params, [a] * m, [spec] * m, [tau] * m))
    ok = np.array([r[0] is not None for r in results])
    failures = [(float(p), r[1]) for p, r in zip(params, results) if r[0] is None]
    for p, msg in failures:
        logger.warning("model %s, parameter %.6g aborted: %s", model.value, p, msg)
    if ok.sum() < 4:
        raise FitError(f"only {int(ok.sum())} valid samples for model {model.value}")
    mask = grid.fit_mask()[ok]
    params = params[ok]
    vals = np.array([r[0] for r in results if r[0] is not None], dtype=object)
    e_h1 = vals[:, 0].astype(float)
    e_ff = vals[:, 1].astype(float)
    excluded = params[~mask].tolist()
    if excluded:
        logger.info("model %s: excluding %d pre-asymptotic grid points from the fit", model.value, len(excluded))
    s_h1, _, _ = fit_rate(params[mask], e_h1[mask])
    s_ff, _, _ = fit_rate(params[mask], e_ff[mask])
    if spec.norm_kind is NormKind.FARFIELD_L2:
        errors = e_ff
    elif spec.norm_kind is NormKind.H1_ANNULUS:
        errors = e_h1
    else:
        errors = vals[:, 2].astype(float)
    slope, intercept, resid = fit_rate(params[mask], errors[mask])
    return RateTable(
        model=model,
        parameters=params,
        errors=errors,
        fitted_slope=slope,
        fit_residual=resid,
        intercept=intercept,
        norm_kind=spec.norm_kind,
        errors_h1=e_h1,
        errors_ff=e_ff,
        slope_h1=s_h1,
        slope_ff=s_ff,
        excluded=excluded,
        failures=failures,
    )


def _trace_error(model, ctx, param, a, tau):
    n_max = _n_max_of(ctx.dimension, len(a))
    contrast = contrast_for(ctx, model, param, tau)
    d = diff_coefficients(ctx, contrast, model, n_max) * a
    h, _ = bessel_family(ctx.family, BesselKind.H1, n_max, ctx.k)
    w = np.abs(h[_abs_orders(ctx.dimension, n_max)]) ** 2 * (2 * math.pi if ctx.dimension == 2 else 1.0)
    return math.sqrt(float(np.sum(np.abs(d) ** 2 * w)))


def fit_rate(params, errors):
    """Least-squares line through ``(log p, log e)``.

    Returns
    -------
    slope, intercept, residual
        ``residual`` is the RMS misfit in ``log e``.
    """
    p = np.asarray(params, dtype=float)
    e = np.asarray(errors, dtype=float)
    if p.size < 2 or p.size != e.size:
        raise FitError("need at least two samples")
    if np.any(p <= 0) or np.any(e <= 0):
        raise FitError("samples must be positive")
    x, y = np.log(p), np.log(e)
    if np.ptp(x) == 0:
        raise FitError("all parameters are equal")
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = math.sqrt(float(np.mean((A @ [slope, intercept] - y) ** 2)))
    return float(slope), float(intercept), resid


# ---------------------------------------------------------------------------
# energy, a priori and absorption checks
# ---------------------------------------------------------------------------


def energy_ratios(ctx, contrasts, spec=NormSpec(), tol=1e-15):
    """``||u_delta||_{H^1(annulus)} / ||u^i||_{H^1(annulus)}`` for each contrast."""
    a = _incident(ctx, tol)
    inc = h1_annulus_total(a, None, ctx, spec)
    return np.array([h1_annulus_total(a, transmission_modes(ctx, c, a).c, ctx, spec) / inc for c in contrasts])


@dataclass
class AprioriCheck:
    name: str
    parameters: np.ndarray
    ratios: np.ndarray

    @property
    def spread(self):
        return float(np.max(self.ratios) / np.min(self.ratios))


def apriori_ratios(ctx, spec=NormSpec(), tol=1e-15, points_per_decade=4):
    """The three interior scaling ratios, each relative to ``||u||_{H^1(annulus)}``.

    (a) ``delta^{-1/2} ||u||_{H^1(B_1)}`` over ``delta in [1e2, 1e8]``, ``tau = 1 - 0.5i``;
    (b) ``||grad u||_{L^2(B_1)} / delta^{1/2}`` over ``delta in [1e-8, 1e-2]``, ``tau = 1 - 0.5i``;
    (c) ``||u||_{H^1(B_1)} / (delta + |tau|)^{1/2}`` with ``delta = |tau| = eps in [1e-8, 1e-2]``.
    """
    a = _incident(ctx, tol)
    out = []
    cases = [
        ("a", GridSpec(2, 8, points_per_decade), lambda d: Contrast.from_delta_tau(ctx, d, 1 - 0.5j),
         lambda c, l2, g: c.delta ** -0.5 * math.hypot(l2, g)),
        ("b", GridSpec(-8, -2, points_per_decade), lambda d: Contrast.from_delta_tau(ctx, d, 1 - 0.5j),
         lambda c, l2, g: g / c.delta**0.5),
        ("c", GridSpec(-8, -2, points_per_decade), lambda e: Contrast.from_delta_tau(ctx, e, e * TAU_PHASE),
         lambda c, l2, g: math.hypot(l2, g) / (c.delta + abs(c.tau)) ** 0.5),
    ]
    for name, grid, make, ratio in cases:
        params = grid.values()
        vals = []
        for p in params:
            c = make(p)
            sol = transmission_modes(ctx, c, a)
            l2, g = interior_norms(sol, ctx, c)
            ext = h1_annulus_total(a, sol.c, ctx, spec)
            vals.append(ratio(c, l2, g) / ext)
        out.append(AprioriCheck(name, params, np.array(vals)))
    return out


def absorption_identity(ctx, contrast, a, radius=2.0):
    """Both sides of ``omega^2 b ||u||^2_{L^2(B_1)} = -Im int_{|x|=R} (1/rho) d_r u conj(u) ds``.

    Returns
    -------
    volume, flux
        ``omega^2 b ||u||^2`` from interior quadrature and ``-Im`` of the
        boundary flux from the exterior series.
    """
    sol = transmission_modes(ctx, contrast, a)
    l2, _ = interior_norms(sol, ctx, contrast)
    volume = ctx.omega**2 * contrast.b_coeff * l2**2
    n_max = sol.n_max
    x = ctx.k * radius
    j, jp = bessel_family(ctx.family, BesselKind.J, n_max, x)
    h, hp = bessel_family(ctx.family, BesselKind.H1, n_max, x)
    nn = _abs_orders(ctx.dimension, n_max)
    u = sol.a * j[nn] + sol.c * h[nn]
    du = ctx.k * (sol.a * jp[nn] + sol.c * hp[nn])
    if ctx.dimension == 3:
        area = radius**2
    else:
        area = 2 * math.pi * radius
    flux = -(area / ctx.rho * np.sum(du * np.conj(u))).imag
    return volume, float(flux)
