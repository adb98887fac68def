"""Three-step coordinate descent for the penalized (smoothed) FGMM criterion.

Step 1 warm-starts from penalized least squares, step 2 sweeps the
coordinates with analytic quadratic models and prox updates accepted only
on descent of the smoothed penalized criterion, step 3 stops when the
sweep-to-sweep change falls below the tolerance.

Selection sharpness requires care beyond plain descent, because the
smoothed criterion barely charges a wrongly supported coordinate whose
magnitude sits below the smoothing scale sqrt(h).  Four devices keep the
support honest, all validated against the reference simulation designs:

* the warm start is truncated at the smoothing scale (coefficients the
  kernel cannot distinguish from zero do not enter as active);
* trial values come from a quadratic model with the kernel weights frozen
  at the current iterate, so a zero coordinate proposes the value the
  moment equations actually ask for instead of a sub-scale crumb;
* updates must clear a small relative descent threshold (``accept_tol``),
  not merely any strict decrease, which starves off sequences of
  individually-tiny moment-overfitting steps;
* activating a zero coordinate must also approximately not increase the
  exact (indicator) criterion, where a wrong coordinate pays its full
  pair of over-identification violations (``entry_tol``).

After the support stabilizes, a polish phase reruns plain strict-descent
sweeps on the fixed support using the full kernel chain rule, so the
returned point is a coordinate-wise stationary point of the smoothed
criterion.  Every accepted update decreases the smoothed criterion, so
objective traces are nonincreasing by construction.

Two interchangeable kernel backends run the sweeps: a compiled extension
(linear family, logistic kernel) and a pure-numpy fallback that works for
every family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import backend as _backend
from .exceptions import DimensionError, DomainError, NumericError
from .instruments import InstrumentRecipe, build_instruments
from .model import Coefficients, Dataset, LinkFamily
from .objective import (ObjectiveContext, SmoothingKernel,
                        _coordinate_quadratic, penalized_fgmm,
                        smoothed_penalized)
from .penalty import PenaltySpec, penalty_derivative, penalty_value, scalar_prox

_G2_FLOOR = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    """Stopping, warm-start and acceptance parameters of the solver.

    ``epsilon`` is the sweep-to-sweep stopping tolerance on the smoothed
    criterion.  ``accept_tol`` and ``entry_tol`` are the relative descent
    threshold and the relative exact-criterion activation guard described
    in the module docstring; both can be set to 0 to recover plain
    strict-descent acceptance.
    """

    epsilon: float = 1e-8
    max_sweeps: int = 500
    pls_lambda: float = 0.5
    zero_clamp: float = 1e-8
    accept_tol: float = 1e-4
    entry_tol: float = 0.02
    backend: Optional[str] = None  # None = best available

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_sweeps < 1:
            raise DomainError(f"max_sweeps must be >= 1, got {self.max_sweeps!r}")
        if not (np.isfinite(self.pls_lambda) and self.pls_lambda > 0):
            raise DomainError(
                f"pls_lambda must be positive, got {self.pls_lambda!r}")
        for name in ("zero_clamp", "accept_tol", "entry_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be nonnegative, got {v!r}")


@dataclass
class FitResult:
    """Solver output: coefficients, per-sweep objective trace, diagnostics.

    ``objective_trace[0]`` is the criterion at the starting point and one
    entry follows per sweep; the trace is nonincreasing.
    ``final_exact_objective`` is the unsmoothed penalized criterion at the
    solution (for penalized least squares, the exact PLS criterion).
    """

    beta: Coefficients
    objective_trace: np.ndarray
    sweeps_used: int
    converged: bool
    final_exact_objective: float
    diagnostics: dict = field(default_factory=dict)


def _resolve_order(p: int, order) -> np.ndarray:
    if order is None:
        return np.arange(p, dtype=np.int64)
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(p)):
        raise DimensionError("sweep order must be a permutation of range(p)")
    return order


def _check_trace(trace: np.ndarray):
    if np.any(np.diff(trace) > 0):
        raise NumericError("objective trace increased; descent check broken")


def _soft_threshold(tbar: float, rho_over_c: float) -> float:
    if abs(tbar) <= rho_over_c:
        return 0.0
    return math.copysign(abs(tbar) - rho_over_c, tbar)


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section search for a minimizer of f on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return c if fc < fd else d


# ---------------------------------------------------------------------------
# penalized least squares (warm start and PLS baseline)
# ---------------------------------------------------------------------------

def pls_objective(family: LinkFamily, data: Dataset, penalty: PenaltySpec,
                  beta: np.ndarray) -> float:
    """(1/n) sum g(y_i, x_i'beta)^2 plus the penalty, freshly evaluated."""
    support = np.flatnonzero(beta)
    xb = data.x[:, support] @ beta[support] if support.size else np.zeros(data.n)
    g = family.g(data.y, xb)
    loss = float(np.mean(g * g))
    pen = float(np.sum(penalty_value(penalty, np.abs(beta[support])))) \
        if support.size else 0.0
    return loss + pen


def _pls_sweep_py(family, data, penalty, beta, xb, q_cur, order):
    """One coordinate sweep of penalized least squares (any family)."""
    y, x = data.y, data.x
    n = data.n
    changed = 0
    linear = family is LinkFamily.LINEAR
    for k in order:
        xk = x[:, k]
        bk = beta[k]
        g = family.g(y, xb)
        if linear:
            g1 = -2.0 * float(xk @ g) / n
            g2 = 2.0 * float(xk @ xk) / n
        else:
            m = family.m(y, xb)
            q = family.q(y, xb)
            g1 = 2.0 * float((g * m) @ xk) / n
            g2 = 2.0 * float(((m * m + g * q) * xk) @ xk) / n
            if g2 <= _G2_FLOOR:
                g2 = 2.0 * float((m * m * xk) @ xk) / n  # Gauss-Newton
        if g2 <= _G2_FLOOR:
            continue
        t = scalar_prox(penalty, bk - g1 / g2, g2)
        if t == bk:
            continue
        xb_cand = xb + xk * (t - bk)
        g_cand = family.g(y, xb_cand)
        pen_cand = _support_penalty(penalty, beta, k, t)
        q_cand = float(np.mean(g_cand * g_cand)) + pen_cand
        if q_cand < q_cur:
            beta[k] = t
            xb = xb_cand
            q_cur = q_cand
            changed += 1
        if not np.isfinite(q_cur):
            raise NumericError("non-finite penalized least-squares objective",
                               coordinate=int(k))
    return xb, q_cur, changed


def _support_penalty(penalty, beta, k, t):
    """Penalty sum over the support of (beta with beta_k set to t)."""
    cand = beta.copy()
    cand[k] = t
    support = np.flatnonzero(cand)
    if support.size == 0:
        return 0.0
    return float(np.sum(penalty_value(penalty, np.abs(cand[support]))))


def fit_pls(family: LinkFamily, data: Dataset, penalty: PenaltySpec,
            config: SolverConfig = SolverConfig(), _order=None) -> FitResult:
    """Coordinate-descent local minimizer of the penalized squared-residual
    criterion, started from beta = 0."""
    order = _resolve_order(data.p, _order)
    use_compiled = _backend.compiled_supports(family) and \
        _backend.select(config.backend) == "compiled"
    beta = np.zeros(data.p)
    if use_compiled:
        from . import _speedups
        xt = np.ascontiguousarray(data.x.T)
        r = data.y.copy()
        fam, lam, shape = _backend.penalty_code(penalty)
        q_cur = _speedups.pls_objective(data.y, xt, beta, fam, lam, shape)
        trace = [q_cur]
        converged = False
        for _ in range(config.max_sweeps):
            q_cur, _changed = _speedups.pls_sweep(
                data.y, xt, beta, r, fam, lam, shape, order, q_cur)
            trace.append(q_cur)
            if abs(trace[-2] - trace[-1]) < config.epsilon:
                converged = True
                break
        backend_name = "compiled"
    else:
        xb = np.zeros(data.n)
        q_cur = pls_objective(family, data, penalty, beta)
        trace = [q_cur]
        converged = False
        for _ in range(config.max_sweeps):
            xb, q_cur, _changed = _pls_sweep_py(
                family, data, penalty, beta, xb, q_cur, order)
            trace.append(q_cur)
            if abs(trace[-2] - trace[-1]) < config.epsilon:
                converged = True
                break
        backend_name = "python"
    trace = np.asarray(trace)
    _check_trace(trace)
    return FitResult(
        beta=Coefficients(beta),
        objective_trace=trace,
        sweeps_used=len(trace) - 1,
        converged=converged,
        final_exact_objective=pls_objective(family, data, penalty, beta),
        diagnostics={"backend": backend_name, "criterion": "pls"},
    )


# ---------------------------------------------------------------------------
# smoothed FGMM sweeps (pure-python backend)
# ---------------------------------------------------------------------------

def _fgmm_sweep_py(ctx, beta, q_cur, config, order, stats,
                   allow_entries, polish):
    """One coordinate sweep; returns the updated smoothed criterion.

    ``polish`` switches to the full-kernel quadratic model with plain
    strict-descent acceptance (used on the fixed support at the end);
    otherwise the frozen-kernel model with the thresholded acceptance
    gates runs.
    """
    pen = ctx.penalty
    scad_exact = pen.family == "scad"
    rho0 = penalty_derivative(pen, 0.0)
    clamp = config.zero_clamp
    accept_tol = 0.0 if polish else config.accept_tol
    for k in order:
        bk = beta[k]
        if bk == 0.0 and not allow_entries:
            continue
        g1, g2 = _coordinate_quadratic(ctx, beta, int(k),
                                       freeze_kernel=not polish)
        if g2 > _G2_FLOOR:
            tbar = bk - g1 / g2
            if scad_exact:
                t = scalar_prox(pen, tbar, g2)
            else:
                rho = rho0 if bk == 0.0 else penalty_derivative(pen, abs(bk))
                t = _soft_threshold(tbar, rho / g2)
        else:
            stats["fallback"] += 1
            half = max(1.0, 2.0 * abs(bk))

            def f_coord(t, k=k):
                cand = beta.copy()
                cand[k] = t
                return smoothed_penalized(ctx, cand)

            t = _golden_min(f_coord, bk - half, bk + half)
            if f_coord(0.0) <= f_coord(t):
                t = 0.0
        if t == bk:
            continue
        cand = beta.copy()
        cand[k] = t
        q_cand = smoothed_penalized(ctx, cand)
        if t != 0.0 and abs(t) < clamp:
            cand0 = beta.copy()
            cand0[k] = 0.0
            q0 = smoothed_penalized(ctx, cand0)
            if q0 <= q_cand:
                t = 0.0
                cand = cand0
                q_cand = q0
        if q_cand >= q_cur - accept_tol * (1.0 + abs(q_cur)):
            continue
        if bk == 0.0 and t != 0.0:
            e_cur = penalized_fgmm(ctx, beta)
            e_cand = penalized_fgmm(ctx, cand)
            if e_cand >= e_cur + config.entry_tol * (1.0 + abs(e_cur)):
                continue
        beta[k] = t
        q_cur = q_cand
        stats["accepted"] += 1
        if not np.isfinite(q_cur):
            raise NumericError("non-finite smoothed objective",
                               coordinate=int(k))
    return q_cur


def _fit_fgmm_python(ctx, config, order, beta, stats):
    q_cur = smoothed_penalized(ctx, beta)
    trace = [q_cur]
    support_settled = False
    # support phase: restricted sweeps to convergence, then one full pass;
    # settled when a full pass leaves the support unchanged and the
    # criterion change is below tolerance
    while len(trace) - 1 < config.max_sweeps:
        while len(trace) - 1 < config.max_sweeps:
            support = np.flatnonzero(beta)
            if support.size == 0:
                break
            q_new = _fgmm_sweep_py(ctx, beta, q_cur, config,
                                   order[np.isin(order, support)], stats,
                                   allow_entries=False, polish=False)
            trace.append(q_new)
            dq = q_cur - q_new
            q_cur = q_new
            if dq < config.epsilon:
                break
        if len(trace) - 1 >= config.max_sweeps:
            break
        before = np.flatnonzero(beta).copy()
        q_new = _fgmm_sweep_py(ctx, beta, q_cur, config, order, stats,
                               allow_entries=True, polish=False)
        trace.append(q_new)
        dq = q_cur - q_new
        q_cur = q_new
        if np.array_equal(before, np.flatnonzero(beta)) and dq < config.epsilon:
            support_settled = True
            break
    # polish phase: full-kernel strict-descent sweeps on the fixed support
    polished = False
    while len(trace) - 1 < config.max_sweeps:
        support = np.flatnonzero(beta)
        if support.size == 0:
            polished = True
            break
        q_new = _fgmm_sweep_py(ctx, beta, q_cur, config,
                               order[np.isin(order, support)], stats,
                               allow_entries=False, polish=True)
        trace.append(q_new)
        dq = q_cur - q_new
        q_cur = q_new
        if dq < config.epsilon:
            polished = True
            break
    return np.asarray(trace), support_settled and polished


def fit_fgmm(ctx: ObjectiveContext, config: SolverConfig = SolverConfig(),
             _order=None) -> FitResult:
    """Full three-step algorithm on a prepared objective context."""
    order = _resolve_order(ctx.p, _order)
    warm = fit_pls(ctx.family, ctx.data,
                   PenaltySpec.scad(config.pls_lambda), config, _order=order)
    beta = warm.beta.beta.copy()
    # coefficients below the smoothing scale are invisible to the smoothed
    # indicator; they do not enter the sweep phase as active coordinates
    beta[np.abs(beta) < math.sqrt(ctx.kernel.h)] = 0.0
    stats = {"accepted": 0, "fallback": 0}
    diagnostics = {
        "criterion": "fgmm",
        "warm_start_support": int(warm.beta.support.size),
        "zero_start": bool(np.all(beta == 0.0)),
    }

    use_compiled = (_backend.compiled_supports(ctx.family, ctx.kernel)
                    and _backend.select(config.backend) == "compiled")
    if use_compiled:
        from . import _speedups
        trace, converged = _speedups.fgmm_solve(
            *_backend.context_arrays(ctx), beta, ctx.kernel.h,
            *_backend.penalty_code(ctx.penalty), config.zero_clamp,
            config.accept_tol, config.entry_tol, config.epsilon,
            config.max_sweeps, order, stats)
        diagnostics["backend"] = "compiled"
    else:
        trace, converged = _fit_fgmm_python(ctx, config, order, beta, stats)
        diagnostics["backend"] = "python"

    _check_trace(trace)
    diagnostics.update(stats)
    return FitResult(
        beta=Coefficients(beta),
        objective_trace=trace,
        sweeps_used=len(trace) - 1,
        converged=converged,
        final_exact_objective=penalized_fgmm(ctx, beta),
        diagnostics=diagnostics,
    )


def fit(family: LinkFamily, data: Dataset, recipe: InstrumentRecipe,
        penalty: PenaltySpec, kernel: SmoothingKernel,
        config: SolverConfig = SolverConfig(), _order=None) -> FitResult:
    """End-to-end convenience wrapper: instruments -> context -> fit_fgmm."""
    inst = build_instruments(recipe, data)
    ctx = ObjectiveContext(family=family, data=data, inst=inst,
                           penalty=penalty, kernel=kernel)
    return fit_fgmm(ctx, config, _order=_order)
