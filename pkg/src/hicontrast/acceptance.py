"""Built-in acceptance suite: one check per criterion, tolerances pinned.

Each check returns a :class:`Criterion` with the measured value and a
pass/fail flag.  Failing criteria are reported, never relaxed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import analytic as an
from . import asymptotics as asy
from .bie2d import curve as bcurve
from .config import parse_config
from .experiments import disk_series_errors, run_task, self_convergence
from .records import format_csv
from .specfun import wronskian_residuals

__all__ = ["Criterion", "CHECKS", "run_all", "format_line"]

SLOPE_LOW_U, SLOPE_HIGH_U = -0.55, -0.45
SLOPE_LOW, SLOPE_HIGH = 0.45, 0.55
RATE_RUNTIME = 10.0
NULL_TOL = 1e-14
WRONSKIAN_TOL = 1e-10
APRIORI_SPREAD = 1e2
ABSORPTION_TOL = 1e-8
BIE_DISK_TOL = 1e-8
BIE_RATIO = 1e2
BIE_FLOOR = 1e-12
BIE_RUNTIME = 30.0
KITE_NODES = (16, 32, 64, 128)
KITE_REFERENCE = 256


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def format_line(c):
    return f"[{'PASS' if c.passed else 'FAIL'}] {c.number:2d} {c.name}: {c.detail} ({c.seconds:.2f} s)"


def _ctx3():
    return an.WaveContext.from_wavenumber(1.0, 3)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _rate(number, name, model, tau, low, high, both_norms):
    ctx = _ctx3()
    spec = asy.NormSpec(norm_kind="FarField_L2")
    tab, secs = _timed(lambda: asy.rate_sweep(model, ctx, asy.default_grid(model), spec, tau=tau))
    inside = [low <= tab.slope_ff <= high]
    if both_norms:
        inside.append(low <= tab.slope_h1 <= high)
    ok = all(inside) and secs < RATE_RUNTIME and not tab.failures
    detail = (f"slope_ff={tab.slope_ff:.4f}, slope_h1={tab.slope_h1:.4f}, target [{low}, {high}], "
              f"{len(tab.parameters)} points, {len(tab.failures)} aborted")
    return Criterion(number, name, ok, detail, secs)


def check_sound_hard_rate():
    return _rate(1, "sound-hard rate", "U", 1.0, SLOPE_LOW_U, SLOPE_HIGH_U, True)


def check_model_v_rate():
    return _rate(2, "model-V rate", "V", 1 - 0.5j, SLOPE_LOW, SLOPE_HIGH, False)


def check_sound_soft_rate():
    return _rate(3, "sound-soft joint rate", "W", None, SLOPE_LOW, SLOPE_HIGH, False)


def check_model_t_rate():
    return _rate(4, "model-T joint rate", "T", None, SLOPE_LOW, SLOPE_HIGH, False)


def check_homogeneous_null():
    def run():
        worst = 0.0
        for dim, d in ((3, np.array([0.0, 0.0, 1.0])), (2, 0.0)):
            ctx = an.WaveContext.from_wavenumber(1.0, dim)
            a = an.plane_wave_modes(ctx, d, an.truncation_order(ctx, tol=1e-15))
            sol = an.transmission_modes(ctx, an.Contrast.from_delta_tau(ctx, 1.0, 1.0), a)
            worst = max(worst, float(np.max(np.abs(sol.c)) / np.linalg.norm(a)))
        return worst

    worst, secs = _timed(run)
    return Criterion(5, "homogeneous null", worst < NULL_TOL, f"max|c|/||a|| = {worst:.2e} < {NULL_TOL:g}", secs)


def wronskian_grid():
    """``10^4`` points: 100 log-spaced moduli in ``[1e-3, 100]`` times 100 angles in ``(-pi, pi)``."""
    r = np.logspace(-3, 2, 100)
    a = -math.pi + (np.arange(100) + 0.5) * (2 * math.pi / 100)
    return (r[:, None] * np.exp(1j * a[None, :])).ravel()


def check_wronskian():
    res, secs = _timed(lambda: wronskian_residuals(60, wronskian_grid()))
    worst = float(np.max(res))
    return Criterion(6, "Wronskian certificate", worst < WRONSKIAN_TOL,
                     f"max residual {worst:.2e} over n<=60 and 1e4 points < {WRONSKIAN_TOL:g}", secs)


def check_apriori():
    checks, secs = _timed(lambda: asy.apriori_ratios(_ctx3()))
    ok = all(c.spread < APRIORI_SPREAD for c in checks)
    detail = ", ".join(f"({c.name}) spread {c.spread:.3g}" for c in checks) + f"; limit {APRIORI_SPREAD:g}"
    return Criterion(7, "a priori scaling", ok, detail, secs)


def check_absorption():
    def run():
        ctx = _ctx3()
        a = an.plane_wave_modes(ctx, np.array([0.0, 0.0, 1.0]), an.truncation_order(ctx, tol=1e-15))
        worst = 0.0
        for beta in (0.1, 1.0):
            for delta in (1e-3, 1.0, 1e3):
                c = an.Contrast.from_material(ctx, delta, 1.0, beta, 1.0)
                vol, flux = asy.absorption_identity(ctx, c, a)
                worst = max(worst, abs(vol - flux) / abs(flux))
        return worst

    worst, secs = _timed(run)
    return Criterion(8, "absorption identity", worst < ABSORPTION_TOL, f"max rel diff {worst:.2e} < {ABSORPTION_TOL:g}", secs)


def _spectral_decay(errors):
    """Ratio above ``BIE_RATIO`` per doubling while the coarser error is above the floor."""
    for e0, e1 in zip(errors, errors[1:]):
        if e0 > BIE_FLOOR and e1 > BIE_FLOOR and e0 / e1 <= BIE_RATIO:
            return False
    return errors[-1] < BIE_FLOOR * 10


def check_bie():
    def run():
        disk = disk_series_errors(1.0, 256)
        kite = self_convergence(bcurve.kite(), 1.0, KITE_NODES, KITE_REFERENCE)
        return disk, kite

    (disk, kite), secs = _timed(run)
    ok_disk = max(disk.values()) < BIE_DISK_TOL
    ok_kite = all(_spectral_decay(v) for v in kite.values())
    detail = ("disk " + ", ".join(f"{m} {e:.1e}" for m, e in disk.items())
              + "; kite " + ", ".join(f"{m} " + "/".join(f"{e:.0e}" for e in v) for m, v in kite.items()))
    return Criterion(9, "BIE vs series", ok_disk and ok_kite and secs < BIE_RUNTIME, detail, secs)


def check_determinism():
    def run():
        cfg = parse_config({"task": "rates", "model": "U"})
        first = format_csv(run_task(cfg).table)
        second = format_csv(run_task(parse_config({"task": "rates", "model": "U"})).table)
        return first == second, len(first)

    (same, size), secs = _timed(run)
    return Criterion(10, "determinism", same, f"two rates runs {'identical' if same else 'differ'} ({size} bytes)", secs)


CHECKS = (
    check_sound_hard_rate,
    check_model_v_rate,
    check_sound_soft_rate,
    check_model_t_rate,
    check_homogeneous_null,
    check_wronskian,
    check_apriori,
    check_absorption,
    check_bie,
    check_determinism,
)


def run_all(echo=None):
    """Run every check; ``echo`` receives each formatted line as it completes."""
    out = []
    for check in CHECKS:
        c = check()
        out.append(c)
        if echo is not None:
            echo(format_line(c))
    return out
