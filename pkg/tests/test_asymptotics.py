import math

import mpmath as mp
import numpy as np
import pytest

from hicontrast.analytic import (
    Contrast,
    ModalSolution,
    Model,
    WaveContext,
    diff_coefficients,
    far_field,
    obstacle_modes,
    plane_wave_modes,
    transmission_modes,
    truncation_order,
)
from hicontrast.asymptotics import (
    FitError,
    GridSpec,
    NormSpec,
    QuadratureConvergenceError,
    _checked,
    absorption_identity,
    apriori_ratios,
    boundary_trace_diff,
    contrast_for,
    default_grid,
    energy_ratios,
    farfield_l2_diff,
    fit_rate,
    h1_annulus_diff,
    h1_annulus_total,
    interior_norms,
    rate_sweep,
    sweep_point,
)
from hicontrast.harmonics import evaluate, flat_index

mp.mp.dps = 30
ZHAT = np.array([0.0, 0.0, 1.0])
FF = NormSpec(norm_kind="FarField_L2")


def ctx_of(dim, k=1.0):
    return WaveContext.from_wavenumber(k, dim)


def incident(ctx):
    return plane_wave_modes(ctx, ZHAT if ctx.dimension == 3 else 0.0, truncation_order(ctx, tol=1e-15))


def scattered(ctx, c):
    c = np.asarray(c, dtype=complex)
    n_max = int(round(math.sqrt(c.size))) - 1 if ctx.dimension == 3 else (c.size - 1) // 2
    return ModalSolution(ctx.dimension, n_max, np.zeros_like(c), None, c, Model.U)


# ---------------------------------------------------------------------------
# rate fit
# ---------------------------------------------------------------------------


def test_fit_exact_power_law():
    x = np.logspace(-3, 3, 13)
    slope, intercept, resid = fit_rate(x, 3 * x**0.5)
    assert abs(slope - 0.5) < 1e-13
    assert abs(intercept - math.log(3)) < 1e-12
    assert resid < 1e-13


def test_fit_perturbed_power_law():
    x = np.logspace(0, 6, 25)
    slope, _, _ = fit_rate(x, x**-0.5 * (1 + 0.01 * np.sin(np.log(x))))
    assert abs(slope + 0.5) < 0.01


def test_fit_two_points_interpolates():
    slope, _, resid = fit_rate([2.0, 8.0], [3.0, 12.0])
    assert abs(slope - 1.0) < 1e-14 and resid < 1e-14


@pytest.mark.parametrize("p,e", [([1.0], [1.0]), ([1.0, 1.0], [1.0, 2.0]), ([1.0, 2.0], [0.0, 1.0])])
def test_fit_rejects_degenerate(p, e):
    with pytest.raises(FitError):
        fit_rate(p, e)


def test_grid_spec():
    g = GridSpec(2, 8)
    assert len(g.values()) == 25
    assert np.isclose(g.values()[0], 100) and np.isclose(g.values()[-1], 1e8)
    mask = GridSpec(2, 8, trim_low=2).fit_mask()
    assert mask.sum() == 17 and not mask[0]


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(outer_radius=1.0)
    with pytest.raises(ValueError):
        NormSpec(quadrature_order=8)


def test_quadrature_doubling_check():
    with pytest.raises(QuadratureConvergenceError):
        _checked(lambda q: np.array([1.0 / q]), 16, "synthetic")
    assert _checked(lambda q: np.array([2.0]), 16, "synthetic")[0] == 2.0


# ---------------------------------------------------------------------------
# exterior norms
# ---------------------------------------------------------------------------


def _mp_h1_radial(n, k, R, dim):
    def h(r):
        if dim == 3:
            z = k * r
            return mp.sqrt(mp.pi / (2 * z)) * (mp.besselj(n + 0.5, z) + 1j * mp.bessely(n + 0.5, z))
        return mp.besselj(n, k * r) + 1j * mp.bessely(n, k * r)

    lam = n * (n + 1) if dim == 3 else n**2

    def integrand(r):
        return (abs(mp.diff(h, r)) ** 2 + (lam / r**2 + 1) * abs(h(r)) ** 2) * r ** (dim - 1)

    val = mp.quad(integrand, [1, R])
    return float(mp.sqrt(val * (2 * mp.pi if dim == 2 else 1)))


@pytest.mark.parametrize("dim,n", [(3, 0), (3, 2), (2, 0), (2, 1)])
def test_single_mode_h1_against_adaptive_quadrature(dim, n):
    ctx = ctx_of(dim)
    n_max = 3
    c = np.zeros((n_max + 1) ** 2 if dim == 3 else 2 * n_max + 1, dtype=complex)
    c[flat_index(n, 0) if dim == 3 else n_max + n] = 1.0
    val = h1_annulus_diff(scattered(ctx, c), scattered(ctx, np.zeros_like(c)), ctx)
    assert abs(val - _mp_h1_radial(n, 1.0, 2, dim)) < 1e-10 * val


def test_h1_norm_axioms():
    ctx = ctx_of(3)
    rng = np.random.default_rng(3)
    u, v, w = (scattered(ctx, rng.normal(size=16) + 1j * rng.normal(size=16)) for _ in range(3))
    assert h1_annulus_diff(u, u, ctx) == 0
    assert h1_annulus_diff(u, w, ctx) <= h1_annulus_diff(u, v, ctx) + h1_annulus_diff(v, w, ctx)


@pytest.mark.parametrize("dim", [2, 3])
def test_plane_wave_h1_norm_is_annulus_volume(dim):
    # |e^{ikx.d}|^2 + |grad|^2 = 1 + k^2 pointwise
    k, R = 1.5, 2.0
    ctx = ctx_of(dim, k)
    vol = 4 * math.pi / 3 * (R**3 - 1) if dim == 3 else math.pi * (R**2 - 1)
    val = h1_annulus_total(incident(ctx), None, ctx, NormSpec(outer_radius=R))
    assert abs(val - math.sqrt((1 + k**2) * vol)) < 1e-10 * val


def test_far_field_norm_against_sampled_quadrature():
    ctx = ctx_of(3)
    a = incident(ctx)
    contrast = Contrast.from_delta_tau(ctx, 1e3, 1.0)
    f1 = far_field(transmission_modes(ctx, contrast, a), ctx)
    f2 = far_field(obstacle_modes(ctx, "U", None, a), ctx)
    x, w = np.polynomial.legendre.leggauss(40)
    phi = 2 * math.pi * np.arange(80) / 80
    theta = np.repeat(np.arccos(x), phi.size)
    ph = np.tile(phi, x.size)
    weights = np.repeat(w, phi.size) * (2 * math.pi / phi.size)
    y = evaluate(f1.n_max, theta, ph)
    diff = (f1.coefficients - f2.coefficients) @ y
    sampled = math.sqrt(float(np.sum(weights * np.abs(diff) ** 2)))
    exact = farfield_l2_diff(f1, f2)
    assert abs(sampled - exact) < 1e-10 * exact
    assert farfield_l2_diff(f1, f1) == 0


def test_far_field_error_from_multipliers():
    # ||F_delta - F_u||^2 = (1/k^2) sum |q_n|^2 |a_n^m|^2
    ctx = ctx_of(3)
    a = incident(ctx)
    c = Contrast.from_delta_tau(ctx, 1e4, 1.0)
    q = diff_coefficients(ctx, c, "U", transmission_modes(ctx, c, a).n_max)
    _, ff = sweep_point("U", ctx, 1e4, a, NormSpec(), 1.0)
    assert abs(ff - math.sqrt(np.sum(np.abs(q * a) ** 2)) / ctx.k) < 1e-14


def test_boundary_trace_zero_for_equal_solutions():
    ctx = ctx_of(2)
    sol = obstacle_modes(ctx, "W", None, incident(ctx))
    assert boundary_trace_diff(sol, sol, ctx) == 0


# ---------------------------------------------------------------------------
# interior norms
# ---------------------------------------------------------------------------


def test_interior_norms_zero_field():
    ctx = ctx_of(3)
    c = Contrast.from_delta_tau(ctx, 2.0, 1.0)
    sol = transmission_modes(ctx, c, np.zeros(16, dtype=complex))
    assert interior_norms(sol, ctx, c) == (0.0, 0.0)


@pytest.mark.parametrize("dim", [2, 3])
def test_interior_norms_of_incident_field(dim):
    k = 1.3
    ctx = ctx_of(dim, k)
    c = Contrast.from_delta_tau(ctx, 1.0, 1.0)
    l2, grad = interior_norms(transmission_modes(ctx, c, incident(ctx)), ctx, c)
    vol = 4 * math.pi / 3 if dim == 3 else math.pi
    assert abs(l2 - math.sqrt(vol)) < 1e-10
    assert abs(grad - k * math.sqrt(vol)) < 1e-10


def test_interior_monopole_against_adaptive_quadrature():
    ctx = ctx_of(3)
    c = Contrast.from_delta_tau(ctx, 50.0, 1 - 0.5j)
    a = np.zeros(4, dtype=complex)
    a[0] = 1.0
    sol = transmission_modes(ctx, c, a)
    b = mp.mpc(sol.b_true[0])
    kb = mp.mpc(c.kb)

    def j0(r):
        return mp.sin(kb * r) / (kb * r) if r > 0 else mp.mpf(1)

    l2 = mp.quad(lambda r: abs(b * j0(r)) ** 2 * r**2, [0, 0.5, 1])
    grad = mp.quad(lambda r: abs(b * mp.diff(j0, r)) ** 2 * r**2, [0, 0.5, 1])
    got = interior_norms(sol, ctx, c)
    assert abs(got[0] - float(mp.sqrt(l2))) < 1e-9 * got[0]
    assert abs(got[1] - float(mp.sqrt(grad))) < 1e-9 * got[1]


def test_absorption_identity_and_sign():
    ctx = ctx_of(3)
    a = incident(ctx)
    for beta in (0.1, 1.0):
        for delta in (1e-3, 1.0, 1e3):
            vol, flux = absorption_identity(ctx, Contrast.from_material(ctx, delta, 1.0, beta, 1.0), a)
            assert vol > 0
            assert abs(vol - flux) < 1e-8 * abs(flux)


def test_absorption_identity_lossless():
    ctx = ctx_of(2)
    vol, flux = absorption_identity(ctx, Contrast.from_material(ctx, 3.0, 1.0, 0.0, 1.0), incident(ctx))
    assert vol == 0 and abs(flux) < 1e-12


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def test_contrast_paths():
    ctx = ctx_of(3)
    w = contrast_for(ctx, "W", 1e-4)
    assert np.isclose(w.delta, 1e-4) and np.isclose(abs(w.tau), 1e-4)
    t = contrast_for(ctx, "T", 1e-4)
    assert np.isclose(abs(t.tau), 1e4)
    assert contrast_for(ctx, "U", 10.0).tau == 1
    with pytest.raises(ValueError):
        contrast_for(ctx, "Transmission", 1.0)


@pytest.mark.parametrize("model", ["U", "V", "W", "T"])
def test_norm_consistency(model):
    tab = rate_sweep(model, ctx_of(3), spec=FF)
    assert not tab.failures
    assert len(tab.parameters) == 25
    assert abs(tab.slope_ff - tab.slope_h1) < 0.05


@pytest.mark.parametrize("model", ["V", "W", "T"])
def test_observed_rate_is_linear_in_epsilon(model):
    # on the ball the error decays like eps^1, faster than the eps^(1/2) upper bound
    tab = rate_sweep(model, ctx_of(3), spec=FF)
    assert abs(tab.fitted_slope - 1.0) < 0.01
    assert tab.fit_residual < 0.05


def test_sound_hard_rate_with_absorption():
    tab = rate_sweep("U", ctx_of(3), spec=FF, tau=1 - 0.5j)
    assert abs(tab.fitted_slope + 0.5) < 0.05


def test_sound_hard_resonances_are_physical():
    # at tau = 1, kb = sqrt(delta) is real; delta = 10^5.5 sits near a zero of j_n(kb)
    ctx = ctx_of(3)
    delta = 10**5.5
    c = Contrast.from_delta_tau(ctx, delta, 1.0)
    q = diff_coefficients(ctx, c, "U", 3)
    kb, s = mp.sqrt(delta), mp.sqrt(delta)
    for n in range(4):
        j = lambda z: mp.sqrt(mp.pi / (2 * z)) * mp.besselj(n + 0.5, z)  # noqa: E731
        h = lambda z: j(z) + 1j * mp.sqrt(mp.pi / (2 * z)) * mp.bessely(n + 0.5, z)  # noqa: E731
        A = mp.matrix([[j(kb), -h(1)], [mp.diff(j, kb), -s * mp.diff(h, 1)]])
        _, cn = mp.lu_solve(A, mp.matrix([j(1), s * mp.diff(j, 1)]))
        ref = complex(cn + mp.diff(j, 1) / mp.diff(h, 1))
        got = q[flat_index(n, 0)]
        assert abs(got - ref) < 1e-8 * abs(ref)
    assert abs(q[0]) > 0.1


def test_rate_sweep_trimming_is_reported():
    tab = rate_sweep("U", ctx_of(3), GridSpec(2, 8, trim_low=2, trim_high=1), FF)
    assert len(tab.excluded) == 12
    assert len(tab.parameters) == 25


def test_rate_sweep_needs_enough_points():
    with pytest.raises(FitError):
        rate_sweep("V", ctx_of(3), GridSpec(-3, -2, points_per_decade=2), FF)


def test_rate_sweep_with_custom_mapper_preserves_order():
    ctx = ctx_of(3)
    seen = []

    def mapper(fn, *cols):
        out = [fn(*args) for args in zip(*cols)]
        seen.append(len(out))
        return out

    a = rate_sweep("V", ctx, spec=FF)
    b = rate_sweep("V", ctx, spec=FF, mapper=mapper)
    assert seen == [25]
    assert np.array_equal(a.errors, b.errors)


def test_default_grids():
    assert default_grid("U").start == 2
    assert default_grid("V").stop == -2


# ---------------------------------------------------------------------------
# energy and a priori scaling
# ---------------------------------------------------------------------------


def test_energy_controlled_by_incident_field():
    ctx = ctx_of(3)
    contrasts = [contrast_for(ctx, m, p) for m in "UVWT" for p in default_grid(m).values()]
    ratios = energy_ratios(ctx, contrasts)
    assert np.all(ratios < 10)


def test_apriori_large_delta_ratio_bounded():
    checks = {c.name: c for c in apriori_ratios(ctx_of(3))}
    assert checks["a"].spread < 1e2


def test_interior_gradient_scales_linearly_in_delta():
    # the gradient bound delta^(1/2) is not sharp on the ball: the gradient decays like delta
    ctx = ctx_of(3)
    a = incident(ctx)
    grads = []
    for delta in (1e-6, 1e-4):
        c = Contrast.from_delta_tau(ctx, delta, 1 - 0.5j)
        grads.append(interior_norms(transmission_modes(ctx, c, a), ctx, c)[1])
    assert abs(grads[1] / grads[0] / 100 - 1) < 0.01
