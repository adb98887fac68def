"""Folded-concave penalties: values, derivatives, exact scalar prox.

All four families satisfy P(0) = 0 and are concave nondecreasing on
[0, inf) with a continuous derivative away from 0.  The prox solves

    argmin_b  0.5 * curvature * (z - b)^2 + P(|b|)

exactly; the objective restricted to b >= 0 is piecewise quadratic, so
the global minimizer is found by enumerating the stationary point of
each piece together with the piece boundaries.  Ties are resolved toward
the smaller magnitude (sparsity-favoring).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

SCAD = "scad"
MCP = "mcp"
L1 = "l1"
HARD = "hard"

_FAMILIES = (SCAD, MCP, L1, HARD)
_DEFAULT_SHAPE = {SCAD: 3.7, MCP: 3.0, L1: 0.0, HARD: 0.0}


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family with tuning parameter ``lam`` and shape parameter.

    ``shape`` is the SCAD ``a`` (> 2) or the MCP ``gamma`` (> 1); it is
    unused for the l1 and hard-threshold families.
    """

    family: str
    lam: float
    shape: float = field(default=float("nan"))

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown penalty family {self.family!r}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be positive, got {self.lam!r}")
        shape = self.shape
        if np.isnan(shape):
            shape = _DEFAULT_SHAPE[self.family]
        if self.family == SCAD and not shape > 2:
            raise DomainError(f"SCAD requires a > 2, got {shape!r}")
        if self.family == MCP and not shape > 1:
            raise DomainError(f"MCP requires gamma > 1, got {shape!r}")
        object.__setattr__(self, "shape", float(shape))

    @classmethod
    def scad(cls, lam: float, a: float = 3.7) -> "PenaltySpec":
        return cls(SCAD, lam, a)

    @classmethod
    def mcp(cls, lam: float, gamma: float = 3.0) -> "PenaltySpec":
        return cls(MCP, lam, gamma)

    @classmethod
    def l1(cls, lam: float) -> "PenaltySpec":
        return cls(L1, lam)

    @classmethod
    def hard(cls, lam: float) -> "PenaltySpec":
        return cls(HARD, lam)


def penalty_value(spec: PenaltySpec, t):
    """P(t) for t >= 0 (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("penalty_value requires t >= 0")
    lam = spec.lam
    if spec.family == L1:
        out = lam * t
    elif spec.family == SCAD:
        a = spec.shape
        out = np.where(
            t <= lam,
            lam * t,
            np.where(
                t <= a * lam,
                (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0)),
                0.5 * (a + 1.0) * lam * lam,
            ),
        )
    elif spec.family == MCP:
        g = spec.shape
        out = np.where(t <= g * lam, lam * t - t * t / (2.0 * g),
                       0.5 * g * lam * lam)
    else:  # hard threshold
        out = np.where(t < lam, lam * lam - (lam - t) ** 2, lam * lam)
    return float(out) if out.ndim == 0 else out


def penalty_derivative(spec: PenaltySpec, t):
    """P'(t) for t > 0; at t = 0 the right limit P'(0+) is returned."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("penalty_derivative requires t >= 0")
    lam = spec.lam
    if spec.family == L1:
        out = np.full_like(t, lam)
    elif spec.family == SCAD:
        a = spec.shape
        out = np.where(
            t <= lam, lam,
            np.where(t <= a * lam, (a * lam - t) / (a - 1.0), 0.0))
    elif spec.family == MCP:
        g = spec.shape
        out = np.where(t <= g * lam, lam - t / g, 0.0)
    else:
        out = np.where(t < lam, 2.0 * (lam - t), 0.0)
    return float(out) if out.ndim == 0 else out


def _prox_candidates(spec: PenaltySpec, z0: float, c: float):
    """Nonnegative candidate minimizers: per-piece stationary points that
    fall inside their piece, plus all piece boundaries."""
    lam = spec.lam
    cands = [0.0]
    if spec.family == L1:
        u = z0 - lam / c
        if u > 0.0:
            cands.append(u)
    elif spec.family == SCAD:
        a = spec.shape
        cands.extend((lam, a * lam))
        u1 = z0 - lam / c
        if 0.0 <= u1 <= lam:
            cands.append(u1)
        den = c * (a - 1.0) - 1.0
        if den != 0.0:
            u2 = (c * z0 * (a - 1.0) - a * lam) / den
            if lam <= u2 <= a * lam:
                cands.append(u2)
        if z0 >= a * lam:
            cands.append(z0)
    elif spec.family == MCP:
        g = spec.shape
        cands.append(g * lam)
        den = c - 1.0 / g
        if den != 0.0:
            u1 = (c * z0 - lam) / den
            if 0.0 <= u1 <= g * lam:
                cands.append(u1)
        if z0 >= g * lam:
            cands.append(z0)
    else:  # hard threshold
        cands.append(lam)
        if c != 2.0:
            u1 = (c * z0 - 2.0 * lam) / (c - 2.0)
            if 0.0 <= u1 < lam:
                cands.append(u1)
        if z0 >= lam:
            cands.append(z0)
    return cands


def scalar_prox(spec: PenaltySpec, z: float, curvature: float) -> float:
    """Exact global minimizer of 0.5*curvature*(z-b)^2 + P(|b|).

    Ties at equal objective value go to the smaller magnitude.  The
    output has |result| <= |z| and carries the sign of z (or is 0).
    """
    if not (np.isfinite(curvature) and curvature > 0):
        raise DomainError(f"curvature must be positive, got {curvature!r}")
    if not np.isfinite(z):
        raise DomainError(f"z must be finite, got {z!r}")
    if z == 0.0:
        return 0.0
    z0 = abs(z)
    best_u = 0.0
    best_obj = 0.5 * curvature * z0 * z0  # objective at u = 0
    for u in sorted(_prox_candidates(spec, z0, curvature)):
        if u <= 0.0:
            continue
        d = u - z0
        obj = 0.5 * curvature * d * d + penalty_value(spec, u)
        if obj < best_obj:
            best_obj = obj
            best_u = u
    return best_u if z > 0 else -best_u
