"""Observation model: residual link functions and data containers.

The estimating equations are built from a scalar residual function
``g(t1, t2)`` applied row-wise to ``(y_i, x_i' beta)``.  ``m`` and ``q``
are the first and second partial derivatives of ``g`` in its second
argument; they drive the analytic gradient/curvature used by the solver
and the plug-in covariance estimators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

from .exceptions import DimensionError, DomainError

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def _norm_pdf(t):
    return np.exp(-0.5 * np.asarray(t, dtype=float) ** 2) / _SQRT_2PI


class LinkFamily(enum.Enum):
    """Residual family of the regression model.

    * ``LINEAR``: g(t1, t2) = t1 - t2
    * ``LOGIT``:  g(t1, t2) = t1 - exp(t2)/(1 + exp(t2))
    * ``PROBIT``: g(t1, t2) = t1 - Phi(t2), the standard normal CDF
    """

    LINEAR = "linear"
    LOGIT = "logit"
    PROBIT = "probit"

    def g(self, t1, t2):
        """Residual value(s); accepts scalars or arrays (broadcast)."""
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        if self is LinkFamily.LINEAR:
            return t1 - t2
        if self is LinkFamily.LOGIT:
            return t1 - expit(t2)
        return t1 - ndtr(t2)

    def m(self, t1, t2):
        """First partial derivative of g in t2."""
        t2 = np.asarray(t2, dtype=float)
        if self is LinkFamily.LINEAR:
            return np.full_like(np.broadcast_arrays(t1, t2)[1], -1.0)
        if self is LinkFamily.LOGIT:
            s = expit(t2)
            return -s * (1.0 - s)
        return -_norm_pdf(t2)

    def q(self, t1, t2):
        """Second partial derivative of g in t2."""
        t2 = np.asarray(t2, dtype=float)
        if self is LinkFamily.LINEAR:
            return np.zeros_like(np.broadcast_arrays(t1, t2)[1])
        if self is LinkFamily.LOGIT:
            s = expit(t2)
            return -s * (1.0 - s) * (1.0 - 2.0 * s)
        return t2 * _norm_pdf(t2)


def _check_finite_pair(t1, t2):
    if not (np.isfinite(t1) and np.isfinite(t2)):
        raise DomainError("link-function arguments must be finite, got "
                          f"({t1!r}, {t2!r})")


def g_value(family: LinkFamily, t1: float, t2: float) -> float:
    """Scalar residual-function value for the family."""
    _check_finite_pair(t1, t2)
    return float(family.g(t1, t2))


def m_value(family: LinkFamily, t1: float, t2: float) -> float:
    """Scalar first derivative of g in its second argument."""
    _check_finite_pair(t1, t2)
    return float(family.m(t1, t2))


def q_value(family: LinkFamily, t1: float, t2: float) -> float:
    """Scalar second derivative of g in its second argument."""
    _check_finite_pair(t1, t2)
    return float(family.q(t1, t2))


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """An observed sample (y, x, w) with aligned rows.

    ``w`` holds the instrumental variables; it may alias columns of ``x``
    (self-instrumenting designs pass w = x).
    """

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if y.ndim != 1 or x.ndim != 2 or w.ndim != 2:
            raise DimensionError(
                "expected y: vector, x: matrix, w: matrix, got shapes "
                f"{y.shape}, {x.shape}, {w.shape}")
        n = y.shape[0]
        if n < 2:
            raise DimensionError(f"need at least 2 observations, got {n}")
        if x.shape[0] != n or w.shape[0] != n:
            raise DimensionError(
                f"row mismatch: y has {n} rows, x {x.shape[0]}, w {w.shape[0]}")
        if x.shape[1] < 1 or w.shape[1] < 1:
            raise DimensionError("x and w must have at least one column")
        for name, arr in (("y", y), ("x", x), ("w", w)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"non-finite entries in {name}")
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "w", _frozen(w))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class Coefficients:
    """A coefficient vector; the support is the set of bitwise-nonzero entries.

    Exact zero is the selection criterion: the solver is responsible for
    storing eliminated coordinates as exact zeros.
    """

    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1:
            raise DimensionError(f"beta must be a vector, got shape {beta.shape}")
        if not np.all(np.isfinite(beta)):
            raise DomainError("non-finite coefficients")
        object.__setattr__(self, "beta", _frozen(beta))

    @property
    def support(self) -> np.ndarray:
        """Sorted 0-based indices j with beta_j != 0 (exact comparison)."""
        return np.flatnonzero(self.beta)

    def __len__(self) -> int:
        return self.beta.shape[0]


def residuals(family: LinkFamily, data: Dataset, beta: Coefficients) -> np.ndarray:
    """Vector of g(y_i, x_i' beta) over the sample.

    The linear predictor is accumulated over the support columns only, in
    ascending index order, so that appending zero coordinates leaves the
    result bit-identical.
    """
    b = beta.beta if isinstance(beta, Coefficients) else np.asarray(beta, float)
    if b.shape[0] != data.p:
        raise DimensionError(
            f"beta has {b.shape[0]} entries but x has {data.p} columns")
    support = np.flatnonzero(b)
    if support.size:
        xb = data.x[:, support] @ b[support]
    else:
        xb = np.zeros(data.n)
    return family.g(data.y, xb)
