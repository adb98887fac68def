"""Kernel backend selection: compiled extension vs pure-numpy fallback.

The compiled sweeps cover the hot path (linear family with the logistic
smoothing kernel; penalized least squares for the linear family).  All
other configurations run on the numpy kernels.  ``FGMM_BACKEND`` or
``SolverConfig.backend`` can force ``"python"`` or ``"compiled"``.
"""

from __future__ import annotations

import os

import numpy as np

from .exceptions import DomainError
from .model import LinkFamily
from .penalty import HARD, L1, MCP, SCAD

try:
    from . import _speedups  # noqa: F401
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

_PENALTY_CODES = {SCAD: 0, MCP: 1, L1: 2, HARD: 3}


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if HAVE_COMPILED else ("python",)


def select(requested: str | None = None) -> str:
    """Resolve a backend name from the argument, env var, or availability."""
    req = requested or os.environ.get("FGMM_BACKEND") or "auto"
    req = req.lower()
    if req in ("auto", ""):
        return "compiled" if HAVE_COMPILED else "python"
    if req in ("compiled", "cython", "c"):
        if not HAVE_COMPILED:
            raise DomainError("compiled backend requested but the "
                              "fgmm._speedups extension is not built")
        return "compiled"
    if req == "python":
        return "python"
    raise DomainError(f"unknown backend {requested!r}")


def compiled_supports(family: LinkFamily, kernel=None) -> bool:
    """True if the compiled kernels implement this configuration."""
    if not HAVE_COMPILED:
        return False
    if family is not LinkFamily.LINEAR:
        return False
    if kernel is not None and kernel.variant != "logistic":
        return False
    return True


def penalty_code(spec) -> tuple[int, float, float]:
    return _PENALTY_CODES[spec.family], float(spec.lam), float(spec.shape)


def context_arrays(ctx):
    """Contiguous transposed views used by the compiled sweeps."""
    return (
        np.ascontiguousarray(ctx.data.y),
        np.ascontiguousarray(ctx.data.x.T),
        np.ascontiguousarray(ctx.inst.f.T),
        np.ascontiguousarray(ctx.inst.h.T),
        np.ascontiguousarray(ctx.inst.w1),
        np.ascontiguousarray(ctx.inst.w2),
    )
