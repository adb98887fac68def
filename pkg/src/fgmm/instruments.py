"""Instrument construction: the two transformation sets F and H.

Over-identification needs two *different* transformations of the
instrumental variables per regressor; each column pair (F_j, H_j) is
checked for distinctness at build time.  Column weights are reciprocal
sample variances (denominator n) so that standardized columns have unit
variance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DegenerateInstrumentError, DimensionError
from .model import Dataset

_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class InstrumentSet:
    """Realized instrument matrices F, H (n x p) and their weights."""

    f: np.ndarray
    h: np.ndarray
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        f = np.ascontiguousarray(self.f, dtype=float)
        h = np.ascontiguousarray(self.h, dtype=float)
        if f.shape != h.shape or f.ndim != 2:
            raise DimensionError(
                f"F and H must be equal-shape matrices, got {f.shape} and {h.shape}")
        w1 = np.ascontiguousarray(self.w1, dtype=float)
        w2 = np.ascontiguousarray(self.w2, dtype=float)
        if w1.shape != (f.shape[1],) or w2.shape != (f.shape[1],):
            raise DimensionError("weight vectors must have one entry per column")
        for name, w in (("w1", w1), ("w2", w2)):
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise DegenerateInstrumentError(
                    int(np.flatnonzero(~(np.isfinite(w) & (w > 0)))[0]),
                    f"{name} must be finite and positive")
        for arr in (f, h, w1, w2):
            arr.flags.writeable = False
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def n(self) -> int:
        return self.f.shape[0]

    @property
    def p(self) -> int:
        return self.f.shape[1]


@dataclass(frozen=True)
class FourierSieve:
    """F_j = sqrt(2) * sum_c sin(j*pi*W_c), H_j the cosine analogue."""


@dataclass(frozen=True)
class SelfInstrument:
    """F = X and H = X^2 (elementwise); usable when X_S is exogenous."""


@dataclass(frozen=True)
class Custom:
    """User-supplied builders mapping (w, p) -> an (n, p) matrix each.

    Covers e.g. H = cos(X) + 1 for designs with many binary regressors.
    """

    f_builder: Callable[[np.ndarray, int], np.ndarray]
    h_builder: Callable[[np.ndarray, int], np.ndarray]


InstrumentRecipe = FourierSieve | SelfInstrument | Custom


def fourier_pair(w: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Fourier sine/cosine sieve columns j = 1..p summed over the columns
    of w.  Shared with the simulation designs that generate from the same
    basis."""
    w = np.asarray(w, dtype=float)
    freqs = np.pi * np.arange(1, p + 1)          # (p,)
    ang = w[:, :, None] * freqs[None, None, :]   # (n, q, p)
    root2 = np.sqrt(2.0)
    f = root2 * np.sin(ang).sum(axis=1)
    h = root2 * np.cos(ang).sum(axis=1)
    return f, h


def _column_weights(mat: np.ndarray, label: str) -> np.ndarray:
    # sample variance with denominator n, matching the moment normalizations
    centered = mat - mat.mean(axis=0)
    var = np.mean(centered * centered, axis=0)
    bad = np.flatnonzero(var < _VARIANCE_FLOOR)
    if bad.size:
        j = int(bad[0])
        raise DegenerateInstrumentError(
            j, f"instrument column {j} of {label} has sample variance "
               f"{var[j]:.3e} < {_VARIANCE_FLOOR:g}")
    return 1.0 / var


def build_instruments(recipe: InstrumentRecipe, data: Dataset) -> InstrumentSet:
    """Realize F, H and their standardization weights for a dataset."""
    if isinstance(recipe, SelfInstrument):
        f = data.x.copy()
        h = data.x * data.x
    elif isinstance(recipe, FourierSieve):
        f, h = fourier_pair(data.w, data.p)
    elif isinstance(recipe, Custom):
        f = np.ascontiguousarray(recipe.f_builder(data.w, data.p), dtype=float)
        h = np.ascontiguousarray(recipe.h_builder(data.w, data.p), dtype=float)
        if f.shape != (data.n, data.p) or h.shape != (data.n, data.p):
            raise DimensionError(
                f"custom builders must return (n, p) = {(data.n, data.p)} "
                f"matrices, got {f.shape} and {h.shape}")
    else:
        raise DimensionError(f"unknown instrument recipe {recipe!r}")
    w1 = _column_weights(f, "F")
    w2 = _column_weights(h, "H")
    identical = np.flatnonzero(np.max(np.abs(f - h), axis=0) == 0.0)
    if identical.size:
        j = int(identical[0])
        raise DegenerateInstrumentError(
            j, f"instrument columns F_{j} and H_{j} are identical; "
               "over-identification needs two distinct transformations")
    return InstrumentSet(f=f, h=h, w1=w1, w2=w2)


def weight_matrix(inst: InstrumentSet, support) -> np.ndarray:
    """Diagonal weight matrix for the moment vector on a support.

    Ordering matches the stacked moment vector: all F-weights for the
    support indices (ascending), then all H-weights.
    """
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise DimensionError("weight_matrix requires a nonempty support")
    if support.size and (support.min() < 0 or support.max() >= inst.p):
        raise DimensionError(
            f"support indices must lie in [0, {inst.p - 1}]")
    support = np.sort(support)
    return np.diag(np.concatenate([inst.w1[support], inst.w2[support]]))
