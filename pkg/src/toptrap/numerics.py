"""Minimal numerical substrate: least-squares fits, adaptive ODE stepping,
and seeded random generators.

The problems in this package are small (state vectors of dimension <= 170,
fits with <= 6 parameters), so the routines here are deliberately compact
self-contained implementations.  The pulse integrator in
``toptrap._kernels`` provides a compiled replacement for the one hot path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    FitDidNotConverge,
    IllConditioned,
    SingularNormalMatrix,
    StepUnderflow,
)

__all__ = [
    "FitResult",
    "ODEResult",
    "make_rng",
    "nonlinear_least_squares",
    "ode_integrate",
    "weighted_linear_least_squares",
]


def make_rng(seed: int) -> np.random.Generator:
    """Return a counter-based (Philox) generator for reproducible noise."""
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass
class FitResult:
    """Parameters and covariance of a least-squares solution.

    ``covariance`` is the inverse (weighted) normal matrix at the solution;
    when per-point sigmas were supplied it is an absolute covariance, in an
    unweighted fit it is scaled by the reduced chi-square.
    """

    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    n_iterations: int
    converged: bool

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def weighted_linear_least_squares(
    design: np.ndarray,
    y: np.ndarray,
    sigma: np.ndarray | None = None,
    cond_threshold: float = 1e10,
) -> FitResult:
    """Solve ``design @ p = y`` in the weighted least-squares sense.

    Parameters
    ----------
    design : (n, k) array
        Design matrix; must have full column rank.
    y : (n,) array
        Observations.
    sigma : (n,) array, optional
        One-sigma uncertainties.  Omitted means unit weights.
    cond_threshold : float
        Raise ``IllConditioned`` when the weighted design exceeds this
        condition number.

    Returns
    -------
    FitResult
        With covariance ``(A^T W A)^-1``.
    """
    a = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or a.shape[0] != y.shape[0]:
        raise ValueError("design and y shapes are inconsistent")
    if sigma is None:
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(sigma, dtype=float)
        if np.any(~np.isfinite(w)):
            raise ValueError("sigmas must be positive and finite")
    aw = a * w[:, None]
    yw = y * w
    cond = np.linalg.cond(aw)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise IllConditioned(f"design condition number {cond:.3g} exceeds {cond_threshold:.3g}")
    params, *_ = np.linalg.lstsq(aw, yw, rcond=None)
    covariance = np.linalg.inv(aw.T @ aw)
    resid = yw - aw @ params
    return FitResult(
        params=params,
        covariance=covariance,
        residual_norm=float(np.linalg.norm(resid)),
        n_iterations=0,
        converged=True,
    )


def _numerical_jacobian(model, params, x, f0):
    jac = np.empty((f0.size, params.size))
    for i in range(params.size):
        h = 1e-6 * max(abs(params[i]), 1.0)
        pp = params.copy()
        pp[i] += h
        pm = params.copy()
        pm[i] -= h
        jac[:, i] = (model(pp, x) - model(pm, x)) / (2.0 * h)
    return jac


def nonlinear_least_squares(
    model: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    initial: Sequence[float],
    sigma: np.ndarray | None = None,
    max_iterations: int = 200,
    gtol: float = 1e-10,
    ftol: float = 1e-14,
) -> FitResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) minimiser.

    ``model(params, x)`` must return the predicted ``y``.  The damping
    parameter grows until a step reduces the weighted sum of squared
    residuals, so the objective never increases between accepted iterates.

    Raises
    ------
    FitDidNotConverge
        If no acceptable step is found within ``max_iterations``.
    SingularNormalMatrix
        If the damped normal equations cannot be solved.
    """
    p = np.asarray(initial, dtype=float).copy()
    x = np.asarray(x)
    y = np.asarray(y, dtype=float)
    if y.size < p.size:
        raise ValueError("need at least as many points as parameters")
    if sigma is None:
        w = np.ones_like(y)
        scale_cov = True
    else:
        w = 1.0 / np.asarray(sigma, dtype=float)
        scale_cov = False

    def cost(params):
        r = (y - model(params, x)) * w
        return r, float(r @ r)

    r, c = cost(p)
    if not np.isfinite(c):
        raise FitDidNotConverge("initial parameters give non-finite residuals")
    lam = 1e-3
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iterations + 1):
        jac = _numerical_jacobian(model, p, x, r) * w[:, None]
        a = jac.T @ jac
        g = jac.T @ r
        if np.max(np.abs(g)) < gtol:
            converged = True
            break
        accepted = False
        while lam < 1e12:
            try:
                step = np.linalg.solve(a + lam * np.diag(np.clip(np.diag(a), 1e-300, None)), g)
            except np.linalg.LinAlgError as exc:
                raise SingularNormalMatrix(str(exc)) from exc
            r_new, c_new = cost(p + step)
            if np.isfinite(c_new) and c_new <= c:
                improved = c - c_new
                p = p + step
                r, c = r_new, c_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if improved <= ftol * max(c, 1e-300):
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # Damping saturated: the current point is a (local) minimum to
            # working precision.
            converged = True
            break
        if converged:
            break
    if not converged:
        raise FitDidNotConverge(f"no convergence after {n_iter} iterations (cost {c:.3g})")

    jac = _numerical_jacobian(model, p, x, r) * w[:, None]
    a = jac.T @ jac
    try:
        covariance = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularNormalMatrix("normal matrix singular at the solution") from exc
    if scale_cov and y.size > p.size:
        covariance = covariance * c / (y.size - p.size)
    return FitResult(
        params=p,
        covariance=covariance,
        residual_norm=float(np.sqrt(c)),
        n_iterations=n_iter,
        converged=True,
    )


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class ODEResult:
    y_final: np.ndarray
    n_steps: int
    t_eval: np.ndarray | None = None
    y_eval: np.ndarray | None = None


def ode_integrate(
    derivative: Callable[[float, np.ndarray], np.ndarray],
    state0: np.ndarray,
    t_span: tuple[float, float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    t_eval: Sequence[float] | None = None,
    max_steps: int = 10_000_000,
) -> ODEResult:
    """Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration.

    Works on real or complex state vectors.  When ``t_eval`` is given the
    stepper lands exactly on those times and records the state there.

    Raises
    ------
    StepUnderflow
        When the error control forces the step below the representable
        resolution of the time span.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    y = np.asarray(state0).astype(complex if np.iscomplexobj(state0) else float).copy()
    span = t1 - t0

    targets = None
    if t_eval is not None:
        targets = np.asarray(t_eval, dtype=float)
        if targets.size and (targets[0] < t0 or targets[-1] > t1 or np.any(np.diff(targets) < 0)):
            raise ValueError("t_eval must be increasing and inside t_span")
        y_eval = np.empty((targets.size,) + y.shape, dtype=y.dtype)
        next_target = 0
        while next_target < targets.size and targets[next_target] <= t0:
            y_eval[next_target] = y
            next_target += 1

    def err_scale(a, b):
        return abs_tol + rel_tol * np.maximum(np.abs(a), np.abs(b))

    t = t0
    f = derivative(t, y)
    # Conservative initial step from the magnitude of the derivative.
    d0 = np.linalg.norm(y / err_scale(y, y)) if y.size else 0.0
    d1 = np.linalg.norm(f / err_scale(y, y))
    dt = min(span, 0.01 * d0 / d1) if d1 > 0 and d0 > 0 else span * 1e-3
    dt = max(dt, span * 1e-12)

    ks = [None] * 7
    n_steps = 0
    dt_min = span * 1e-15
    while t < t1:
        if n_steps >= max_steps:
            raise StepUnderflow(f"exceeded {max_steps} steps")
        dt = min(dt, t1 - t)
        if targets is not None and next_target < targets.size:
            dt = min(dt, max(targets[next_target] - t, dt_min))
        ks[0] = f
        for i in range(1, 7):
            yi = y + dt * sum(_DP_A[i][j] * ks[j] for j in range(i))
            ks[i] = derivative(t + _DP_C[i] * dt, yi)
        y5 = y + dt * sum(_DP_B5[i] * ks[i] for i in range(7))
        err_vec = dt * sum((_DP_B5[i] - _DP_B4[i]) * ks[i] for i in range(7))
        scale = err_scale(y, y5)
        err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        if err <= 1.0:
            t = t + dt
            y = y5
            f = ks[6]  # FSAL
            n_steps += 1
            if targets is not None:
                while next_target < targets.size and t >= targets[next_target] - dt_min:
                    y_eval[next_target] = y
                    next_target += 1
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        dt = dt * min(5.0, max(0.2, factor))
        if dt < dt_min:
            raise StepUnderflow(f"step size underflow at t={t:.6g}")
    if targets is not None:
        while next_target < targets.size:
            y_eval[next_target] = y
            next_target += 1
        return ODEResult(y_final=y, n_steps=n_steps, t_eval=targets, y_eval=y_eval)
    return ODEResult(y_final=y, n_steps=n_steps)
