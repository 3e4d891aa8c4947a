"""Catalog of composite objectives f + g.

Every entry pairs a convex nonsmooth part f with a closed-form proximal map
and a smooth part g with an exact gradient and a certified Lipschitz constant
for that gradient.  Oracles accept a single point of shape (dim,) or a stack
of points with coordinates on the last axis, and are immutable after
construction, so they are safe to evaluate concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "SmoothFn",
    "ProxFn",
    "Objective",
    "make_problem",
    "problem_from_json",
    "prox_eval",
    "prox_grad_residual",
    "soft_threshold",
    "box_project",
    "symmetric_top_eigenvalue",
]


def soft_threshold(x, thresh):
    """Soft thresholding, the proximal map of thresh*|.|_1 at unit step."""
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def box_project(x, lower, upper):
    """Euclidean projection onto the box [lower, upper]."""
    return np.clip(x, lower, upper)


def symmetric_top_eigenvalue(mat, tol=1e-10, max_iter=10_000):
    """Largest eigenvalue of a symmetric positive semidefinite matrix.

    Power iteration with a fixed seed start vector; stops when the Rayleigh
    quotient stagnates to relative tolerance ``tol``.
    """
    mat = np.asarray(mat, dtype=float)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    top = 0.0
    for _ in range(max_iter):
        w = mat @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        estimate = float(v @ (mat @ v))
        if abs(estimate - top) <= tol * max(1.0, abs(estimate)):
            return estimate
        top = estimate
    return top


@dataclass(frozen=True)
class SmoothFn:
    """Smooth part g: value, gradient, and gradient Lipschitz constant."""

    eval: Callable
    grad: Callable
    beta: float
    dim: int


@dataclass(frozen=True)
class ProxFn:
    """Nonsmooth convex part f: value (may be +inf) and proximal map.

    ``prox(lam, x)`` returns argmin_y f(y) + ||y - x||^2 / (2*lam).
    """

    eval: Callable
    prox: Callable
    dim: int


@dataclass(frozen=True)
class Objective:
    """Composite objective f + g on R^dim."""

    f: ProxFn
    g: SmoothFn
    dim: int
    name: str = ""

    def __post_init__(self):
        if self.f.dim != self.dim or self.g.dim != self.dim:
            raise ValueError(
                "dimension mismatch: f.dim=%d, g.dim=%d, dim=%d"
                % (self.f.dim, self.g.dim, self.dim)
            )

    def value(self, x):
        return self.f.eval(x) + self.g.eval(x)


def _zero_value(x):
    return np.zeros(np.asarray(x).shape[:-1])


def _zero_prox_fn(dim):
    return ProxFn(eval=_zero_value, prox=lambda lam, x: np.asarray(x, dtype=float), dim=dim)


def _l1_prox_fn(mu, dim):
    def value(x):
        return mu * np.sum(np.abs(x), axis=-1)

    def prox(lam, x):
        return soft_threshold(np.asarray(x, dtype=float), lam * mu)

    return ProxFn(eval=value, prox=prox, dim=dim)


def _box_prox_fn(lower, upper, dim):
    def value(x):
        inside = np.all((x >= lower) & (x <= upper), axis=-1)
        return np.where(inside, 0.0, np.inf)

    def prox(lam, x):
        # projection onto a box does not depend on the prox step
        return np.clip(np.asarray(x, dtype=float), lower, upper)

    return ProxFn(eval=value, prox=prox, dim=dim)


def _quadratic_smooth(Q, b, require_psd=True):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be a square matrix")
    n = Q.shape[0]
    if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12):
        raise ValueError("Q must be symmetric")
    if b is None:
        b = np.zeros(n)
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise ValueError("b has shape %s, expected (%d,)" % (b.shape, n))
    if require_psd and np.linalg.eigvalsh(Q).min() < -1e-10:
        raise ValueError("Q must be positive semidefinite")
    beta = symmetric_top_eigenvalue(Q)

    def value(x):
        return 0.5 * np.einsum("...i,ij,...j->...", x, Q, x) - np.asarray(x) @ b

    def grad(x):
        return np.asarray(x) @ Q - b

    return SmoothFn(eval=value, grad=grad, beta=beta, dim=n)


def _make_zero_quad(Q, b=None):
    g = _quadratic_smooth(Q, b)
    return Objective(f=_zero_prox_fn(g.dim), g=g, dim=g.dim, name="zero_quad")


def _make_lasso(M, y, mu):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("M must be a matrix")
    y = np.asarray(y, dtype=float)
    if y.shape != (M.shape[0],):
        raise ValueError("y has shape %s, expected (%d,)" % (y.shape, M.shape[0]))
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    n = M.shape[1]
    gram = M.T @ M
    beta = symmetric_top_eigenvalue(gram)

    def value(x):
        r = np.asarray(x) @ M.T - y
        return 0.5 * np.sum(r * r, axis=-1)

    def grad(x):
        return (np.asarray(x) @ M.T - y) @ M

    g = SmoothFn(eval=value, grad=grad, beta=beta, dim=n)
    return Objective(f=_l1_prox_fn(mu, n), g=g, dim=n, name="lasso")


def _make_box_quad(Q, b, lower, upper):
    g = _quadratic_smooth(Q, b)
    n = g.dim
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    if np.any(lower > upper):
        raise ValueError("box is empty: lower > upper somewhere")
    return Objective(f=_box_prox_fn(lower, upper, n), g=g, dim=n, name="box_quad")


def _make_cos_quad(dim, mu=0.0):
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    if mu < 0:
        raise ValueError("mu must be nonnegative")

    def value(x):
        x = np.asarray(x)
        return np.sum(0.5 * x * x + 2.0 * np.cos(x), axis=-1)

    def grad(x):
        x = np.asarray(x)
        return x - 2.0 * np.sin(x)

    # second derivative per coordinate is 1 - 2*cos(x_i), contained in [-1, 3]
    g = SmoothFn(eval=value, grad=grad, beta=3.0, dim=dim)
    f = _zero_prox_fn(dim) if mu == 0.0 else _l1_prox_fn(mu, dim)
    return Objective(f=f, g=g, dim=dim, name="cos_quad")


_CATALOG = {
    "zero_quad": _make_zero_quad,
    "lasso": _make_lasso,
    "box_quad": _make_box_quad,
    "cos_quad": _make_cos_quad,
}


def make_problem(name, **spec):
    """Instantiate a catalog objective.

    Entries: zero_quad(Q, b=None), lasso(M, y, mu), box_quad(Q, b, lower,
    upper), cos_quad(dim, mu=0).
    """
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise ValueError(
            "unknown problem %r; catalog: %s" % (name, ", ".join(sorted(_CATALOG)))
        ) from None
    return builder(**spec)


def problem_from_json(source):
    """Build an Objective from a JSON problem spec (dict, path, or JSON text).

    Keys: name (required), dim, Q or M (row-major), b or y, mu, lower, upper.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.exists():
            spec = json.loads(path.read_text())
        else:
            spec = json.loads(str(source))
    else:
        spec = dict(source)
    if "name" not in spec:
        raise ValueError("problem spec is missing the 'name' key")
    name = spec["name"]
    kwargs = {}
    if name == "zero_quad":
        kwargs["Q"] = _require(spec, "Q")
        if "b" in spec:
            kwargs["b"] = spec["b"]
    elif name == "lasso":
        kwargs["M"] = _require(spec, "M")
        kwargs["y"] = _require(spec, "y")
        kwargs["mu"] = _require(spec, "mu")
    elif name == "box_quad":
        kwargs["Q"] = _require(spec, "Q")
        kwargs["b"] = _require(spec, "b")
        kwargs["lower"] = _require(spec, "lower")
        kwargs["upper"] = _require(spec, "upper")
    elif name == "cos_quad":
        kwargs["dim"] = _require(spec, "dim")
        if "mu" in spec:
            kwargs["mu"] = spec["mu"]
    else:
        raise ValueError(
            "unknown problem %r; catalog: %s" % (name, ", ".join(sorted(_CATALOG)))
        )
    obj = make_problem(name, **kwargs)
    if "dim" in spec and int(spec["dim"]) != obj.dim:
        raise ValueError(
            "spec says dim=%d but problem data has dim=%d" % (int(spec["dim"]), obj.dim)
        )
    return obj


def _require(spec, key):
    if key not in spec:
        raise ValueError("problem spec %r is missing the %r key" % (spec.get("name"), key))
    return spec[key]


def prox_eval(f, lam, x):
    """Apply the proximal map of f with step lam at x."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return f.prox(lam, np.asarray(x, dtype=float))


def prox_grad_residual(obj, lam, x):
    """Criticality residual ||x - prox(lam, x - lam*grad g(x))|| / lam.

    Vanishes exactly at critical points of f + g.  Batched over the leading
    axes of x.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    mapped = obj.f.prox(lam, x - lam * obj.g.grad(x))
    return np.linalg.norm(x - mapped, axis=-1) / lam
