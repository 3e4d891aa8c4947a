"""Explicit discretization of the flow: a relaxed inertial proximal-gradient
algorithm.

One step solves

    (x_{k+1} - 2 x_k + x_{k-1}) / h_k^2 + gamma_k (x_{k+1} - x_k) / h_k + x_k
        = prox_{lam*f}(x_k - lam*grad g(x_k))

for x_{k+1}.  At h_k = 1 this is the relaxed form

    x_{k+1} = (1 - w) x_k + w * prox_{lam*f}(x_k - lam*grad g(x_k))
              + w (x_k - x_{k-1}),        w = 1/(1 + gamma_k).

The iteration takes two explicit starting positions (x0, x1); x1 - x0 plays
the role of initial momentum.  No convergence guarantee is claimed for the
discrete scheme; termination is purely residual or iteration based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import prox_grad_residual

__all__ = [
    "IterateHistory",
    "DivergenceError",
    "inertial_step_general",
    "inertial_step_unit",
    "run_inertial",
    "constant_gamma",
    "inverse_k_gamma",
    "write_history_csv",
]

_DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Raised when an iterate norm passes the divergence guard."""

    def __init__(self, index, norm):
        self.index = index
        self.norm = norm
        super().__init__("iterate %d diverged: ||x|| = %g exceeds %g" % (index, norm, _DIVERGENCE_LIMIT))


@dataclass
class IterateHistory:
    """Iterates, residuals (aligned with xs from index 1), and objective values."""

    xs: np.ndarray
    residuals: np.ndarray
    objective_values: np.ndarray
    converged: bool
    iterations: int


def constant_gamma(value):
    """Schedule k -> value."""
    if value <= 0:
        raise ValueError("gamma must be positive")

    def schedule(k):
        return value

    return schedule


def inverse_k_gamma(base, floor=1e-3):
    """Schedule k -> max(base / k, floor)."""
    if base <= 0 or floor <= 0:
        raise ValueError("base and floor must be positive")

    def schedule(k):
        return max(base / k, floor)

    return schedule


def inertial_step_general(obj, lam, gk, hk, xk, xkm1):
    """One step of the discretized flow with step hk and damping gk."""
    if lam <= 0 or gk <= 0 or hk <= 0:
        raise ValueError("lam, gk and hk must be positive")
    xk = np.asarray(xk, dtype=float)
    xkm1 = np.asarray(xkm1, dtype=float)
    zk = obj.f.prox(lam, xk - lam * obj.g.grad(xk))
    denom = 1.0 + gk * hk
    return xk + (xk - xkm1) / denom + (hk * hk / denom) * (zk - xk)


def inertial_step_unit(obj, lam, gk, xk, xkm1):
    """One step at hk = 1, in the relaxed proximal-gradient arrangement."""
    if lam <= 0 or gk <= 0:
        raise ValueError("lam and gk must be positive")
    xk = np.asarray(xk, dtype=float)
    xkm1 = np.asarray(xkm1, dtype=float)
    zk = obj.f.prox(lam, xk - lam * obj.g.grad(xk))
    w = 1.0 / (1.0 + gk)
    return (1.0 - w) * xk + w * zk + w * (xk - xkm1)


def run_inertial(obj, lam, gamma_schedule, x0, x1, max_iter, tol):
    """Iterate the unit-step recursion until the residual drops below tol.

    gamma_schedule may be a callable k -> gamma_k (k starting at 1) or a
    plain positive number for a constant schedule.  The residual is checked
    at x1 first, so identical critical starting points converge at
    iteration 1.  Aborts with DivergenceError when an iterate norm exceeds
    1e12.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if not callable(gamma_schedule):
        gamma_schedule = constant_gamma(float(gamma_schedule))
    x_prev = np.asarray(x0, dtype=float).copy()
    x_cur = np.asarray(x1, dtype=float).copy()
    if x_prev.shape != (obj.dim,) or x_cur.shape != (obj.dim,):
        raise ValueError("x0 and x1 must have shape (%d,)" % obj.dim)
    xs = [x_prev, x_cur]
    values = [float(obj.value(x_prev)), float(obj.value(x_cur))]
    residuals = []
    converged = False
    k = 1
    while True:
        r = float(prox_grad_residual(obj, lam, x_cur))
        residuals.append(r)
        if r <= tol:
            converged = True
            break
        if k >= max_iter:
            break
        norm = float(np.linalg.norm(x_cur))
        if norm > _DIVERGENCE_LIMIT:
            raise DivergenceError(index=k, norm=norm)
        x_next = inertial_step_unit(obj, lam, gamma_schedule(k), x_cur, x_prev)
        x_prev, x_cur = x_cur, x_next
        xs.append(x_cur)
        values.append(float(obj.value(x_cur)))
        k += 1
    return IterateHistory(
        xs=np.array(xs),
        residuals=np.array(residuals),
        objective_values=np.array(values),
        converged=converged,
        iterations=len(xs) - 1,
    )


def write_history_csv(history, path):
    """Write `k,x_0..x_{n-1},residual,objective`; the k=0 row has no residual."""
    n = history.xs.shape[1]
    cols = ["k"] + ["x_%d" % i for i in range(n)] + ["residual", "objective"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(len(history.xs)):
            res = history.residuals[k - 1] if k >= 1 else float("nan")
            row = [*history.xs[k], res, history.objective_values[k]]
            fh.write(
                "%d," % k + ",".join(format(val, ".17g") for val in row) + "\n"
            )
