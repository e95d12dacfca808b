"""Task runners behind the command line: each returns tables and a result dict.

Runners are pure functions of an :class:`~hicontrast.config.ExperimentConfig`
(plus an optional ``map``-like evaluator), so identical configs give
identical tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic as an
from . import asymptotics as asy
from .bie2d import curve as bcurve
from .bie2d import solvers

__all__ = [
    "Table",
    "TaskResult",
    "run_task",
    "expected_slope",
    "disk_series_errors",
    "self_convergence",
    "build_curve",
]

BIE_MODELS = ("U", "V", "W", "T")


@dataclass
class Table:
    """Rows for a CSV file; floats are written with 17 significant digits."""

    columns: list
    rows: list = field(default_factory=list)


@dataclass
class TaskResult:
    table: Table
    results: dict
    passed: bool = True
    diagnostics: dict = field(default_factory=dict)


def _ctx(cfg):
    w = cfg.wave
    return an.WaveContext.from_wavenumber(w.k, w.dimension, rho=w.rho, kappa=w.kappa)


def _incident(cfg, ctx, n_max):
    d = np.array(cfg.incident) if ctx.dimension == 3 else cfg.incident[0]
    return an.plane_wave_modes(ctx, d, n_max)


def _n_max(cfg, ctx):
    return an.truncation_order(ctx, tol=cfg.truncation.tol, max_order=cfg.truncation.max_order)


def expected_slope(model):
    """Rate the asymptotic theory predicts for each sweep path."""
    return -0.5 if an.Model(model) is an.Model.U else 0.5


def _mode_labels(dimension, n_max):
    if dimension == 3:
        from .harmonics import degree_order

        n, m = degree_order(n_max)
        return n.tolist(), m.tolist()
    n = an.mode_orders(2, n_max)
    return n.tolist(), [0] * len(n)


# ---------------------------------------------------------------------------
# solve / farfield
# ---------------------------------------------------------------------------


def _solve_modes(cfg, ctx):
    n_max = _n_max(cfg, ctx)
    a = _incident(cfg, ctx, n_max)
    tau = cfg.contrast.tau
    if cfg.model == "Transmission":
        contrast = an.Contrast.from_delta_tau(ctx, cfg.contrast.delta, tau)
        return an.transmission_modes(ctx, contrast, a), contrast
    return an.obstacle_modes(ctx, cfg.model, tau, a), None


def run_solve(cfg, mapper=map):
    ctx = _ctx(cfg)
    sol, contrast = _solve_modes(cfg, ctx)
    n, m = _mode_labels(ctx.dimension, sol.n_max)
    b = sol.b_true if sol.b is not None else np.zeros_like(sol.c)
    table = Table(["n", "m", "a_re", "a_im", "b_re", "b_im", "c_re", "c_im", "scattered"])
    for i in range(len(sol.c)):
        table.rows.append([n[i], m[i], sol.a[i].real, sol.a[i].imag, b[i].real, b[i].imag,
                           sol.c[i].real, sol.c[i].imag, abs(sol.c[i])])
    kw = {"contrast": contrast} if contrast is not None else {"tau": cfg.contrast.tau}
    resid = an.modal_residuals(sol, ctx, **kw)
    results = {
        "n_max": sol.n_max,
        "max_abs_c": float(np.max(np.abs(sol.c))),
        "norm_a": float(np.linalg.norm(sol.a)),
        "far_field_l2": an.far_field(sol, ctx).l2_norm(),
        "max_residual": float(np.max(resid)),
    }
    if contrast is not None:
        results["kb"] = [contrast.kb.real, contrast.kb.imag]
    return TaskResult(table, results)


def run_farfield(cfg, mapper=map):
    ctx = _ctx(cfg)
    sol, _ = _solve_modes(cfg, ctx)
    ff = an.far_field(sol, ctx)
    table = Table(["angle_or_lm", "re", "im"])
    if ctx.dimension == 3:
        n, m = _mode_labels(3, sol.n_max)
        for i, z in enumerate(ff.coefficients):
            table.rows.append([f"{n[i]}:{m[i]}", z.real, z.imag])
    else:
        theta = 2 * math.pi * np.arange(cfg.bie.n_angles) / cfg.bie.n_angles
        for t, z in zip(theta, ff.evaluate(theta)):
            table.rows.append([t, z.real, z.imag])
    return TaskResult(table, {"n_max": sol.n_max, "l2_norm": ff.l2_norm()})


# ---------------------------------------------------------------------------
# sweep / rates
# ---------------------------------------------------------------------------


def _grid(cfg):
    g = cfg.grid
    return asy.GridSpec(g.start, g.stop, g.points_per_decade, g.trim_low, g.trim_high)


def _norm(cfg):
    n = cfg.norm
    return asy.NormSpec(n.outer_radius, n.quadrature_order, n.norm_kind)


def _interior_point(ctx, delta, tau, a, order):
    contrast = an.Contrast.from_delta_tau(ctx, delta, tau)
    sol = an.transmission_modes(ctx, contrast, a)
    return asy.interior_norms(sol, ctx, contrast, order)


def run_sweep(cfg, mapper=map):
    ctx = _ctx(cfg)
    a = _incident(cfg, ctx, _n_max(cfg, ctx))
    params = _grid(cfg).values()
    tau = cfg.grid.tau
    m = len(params)
    norms = list(mapper(_interior_point, [ctx] * m, params, [tau] * m, [a] * m, [cfg.norm.quadrature_order] * m))
    table = Table(["delta", "tau_abs", "l2", "grad_l2"])
    for p, (l2, g) in zip(params, norms):
        table.rows.append([float(p), abs(tau), l2, g])
    return TaskResult(table, {"points": m, "tau": [tau.real, tau.imag]})


def run_rates(cfg, mapper=map):
    ctx = _ctx(cfg)
    a = _incident(cfg, ctx, _n_max(cfg, ctx))
    tab = asy.rate_sweep(cfg.model, ctx, _grid(cfg), _norm(cfg), tau=cfg.grid.tau, a=a, mapper=mapper)
    table = Table(["param", "error_h1", "error_ff"])
    for p, e1, e2 in zip(tab.parameters, tab.errors_h1, tab.errors_ff):
        table.rows.append([float(p), float(e1), float(e2)])
    target = cfg.validation.slope if cfg.validation.slope is not None else expected_slope(cfg.model)
    tol = cfg.validation.slope_tol
    passed = abs(tab.fitted_slope - target) <= tol
    results = {
        "model": tab.model.value,
        "norm_kind": tab.norm_kind.value,
        "fitted_slope": tab.fitted_slope,
        "intercept": tab.intercept,
        "fit_residual": tab.fit_residual,
        "slope_h1": tab.slope_h1,
        "slope_ff": tab.slope_ff,
        "expected_slope": target,
        "slope_tol": tol,
        "excluded": tab.excluded,
    }
    diagnostics = {"failures": [{"param": p, "error": msg} for p, msg in tab.failures]}
    return TaskResult(table, results, passed, diagnostics)


# ---------------------------------------------------------------------------
# bie-validate
# ---------------------------------------------------------------------------


def build_curve(geo):
    """Trigonometric curve from a :class:`~hicontrast.config.GeometryConfig`."""
    if geo.kind == "circle":
        return bcurve.circle()
    if geo.kind == "kite":
        return bcurve.kite()
    return bcurve.TrigCurve(geo.x_cos or (0.0,), geo.x_sin or (0.0,), geo.y_cos or (0.0,), geo.y_sin or (0.0,))


def _bie_solve(model, nyst, ctx, tau, angle, couplings):
    k = ctx.k
    ui, dui = solvers.plane_wave_traces(nyst, k, angle)
    zeta, eta, iota = couplings
    if model == "W":
        return solvers.solve_sound_soft(nyst, k, ui, zeta)
    if model == "U":
        return solvers.solve_sound_hard(nyst, k, dui, eta)
    if model == "V":
        kt = ctx.kappa * tau
        return solvers.solve_model_v(nyst, ctx, kt, solvers.model_v_data(nyst, ctx, kt, ui, dui), iota)
    if model == "T":
        return solvers.solve_model_t(nyst, k, ui, dui, zeta)
    raise ValueError(f"unknown obstacle model {model!r}")


def _bie_far_field(model, geometry, n_nodes, ctx, tau, angle, theta, couplings):
    nyst = geometry.discretize(n_nodes)
    sol = _bie_solve(model, nyst, ctx, tau, angle, couplings)
    return solvers.far_field_from_density(sol, nyst, ctx.k, theta)


def _rel(x, ref):
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))


def disk_series_errors(k, n_nodes=256, *, tau=1 - 0.5j, angle=0.0, n_angles=64, couplings=(None, 1.0, None),
                       models=BIE_MODELS):
    """Relative sampled-``L^2`` far-field error of each BIE model against the disk series."""
    ctx = an.WaveContext.from_wavenumber(k, 2)
    theta = 2 * math.pi * np.arange(n_angles) / n_angles
    a = an.plane_wave_modes(ctx, angle, an.truncation_order(ctx, tol=1e-16) + 4)
    out = {}
    for model in models:
        ref = an.far_field(an.obstacle_modes(ctx, model, tau, a), ctx).evaluate(theta)
        ff = _bie_far_field(model, bcurve.circle(), n_nodes, ctx, tau, angle, theta, couplings)
        out[model] = _rel(ff, ref)
    return out


def self_convergence(geometry, k, nodes, reference_nodes, *, tau=1 - 0.5j, angle=0.0, n_angles=64,
                     couplings=(None, 1.0, None), models=BIE_MODELS):
    """Far-field error at each node count against a finer reference solution."""
    ctx = an.WaveContext.from_wavenumber(k, 2)
    theta = 2 * math.pi * np.arange(n_angles) / n_angles
    out = {}
    for model in models:
        ref = _bie_far_field(model, geometry, reference_nodes, ctx, tau, angle, theta, couplings)
        out[model] = [_rel(_bie_far_field(model, geometry, n, ctx, tau, angle, theta, couplings), ref) for n in nodes]
    return out


def run_bie_validate(cfg, mapper=map):
    k = cfg.wave.k
    b = cfg.bie
    models = BIE_MODELS if cfg.model == "all" else (cfg.model,)
    couplings = (b.zeta, b.eta, b.iota)
    common = dict(tau=b.tau, angle=b.incident_angle, n_angles=b.n_angles, couplings=couplings, models=models)
    geometry = build_curve(cfg.geometry)
    nodes = [n for n in b.convergence_nodes if n < cfg.geometry.n_nodes]
    conv = self_convergence(geometry, k, nodes, cfg.geometry.n_nodes, **common)
    table = Table(["model", "n_nodes", "reference", "error"])
    for model in models:
        for n, e in zip(nodes, conv[model]):
            table.rows.append([model, n, "self", e])
    results = {"self_convergence": {m: dict(zip(map(str, nodes), conv[m])) for m in models}}
    passed = True
    unit_disk = cfg.geometry.kind == "circle"
    if unit_disk:
        errs = disk_series_errors(k, cfg.geometry.n_nodes, **common)
        for model in models:
            table.rows.append([model, cfg.geometry.n_nodes, "series", errs[model]])
        results["series_errors"] = errs
        results["max_series_error"] = max(errs.values())
        passed = results["max_series_error"] < b.tolerance
    return TaskResult(table, results, passed)


RUNNERS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "rates": run_rates,
    "farfield": run_farfield,
    "bie-validate": run_bie_validate,
}


def run_task(cfg, mapper=map):
    """Dispatch on ``cfg.task``."""
    return RUNNERS[cfg.task](cfg, mapper)
