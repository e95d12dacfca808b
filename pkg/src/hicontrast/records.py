"""CSV and JSON persistence of task results."""

from __future__ import annotations

import datetime
import io
import json
import math
import platform

import numpy as np

from . import __version__

__all__ = ["format_value", "format_csv", "build_record", "dump_record"]


def format_value(v):
    """17 significant digits for floats; integers and strings verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"refusing to write non-finite value {v!r}")
        return f"{float(v) + 0.0:.16e}"
    return str(v)


def format_csv(table):
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def build_record(cfg, result, extra_diagnostics=None):
    """``{config, fingerprint, version, results, diagnostics}``.

    Everything but ``diagnostics`` is a deterministic function of the config.
    """
    diagnostics = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "passed": bool(result.passed),
        **result.diagnostics,
        **(extra_diagnostics or {}),
    }
    return {
        "config": cfg.to_dict(),
        "fingerprint": cfg.fingerprint(),
        "version": __version__,
        "results": _jsonable(result.results),
        "diagnostics": _jsonable(diagnostics),
    }


def dump_record(record):
    return json.dumps(record, indent=2, sort_keys=True) + "\n"
