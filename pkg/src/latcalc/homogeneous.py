"""Positively homogeneous functions on R^m: the built-in means and norms.

Every function here is vectorized over leading axes: ``h(x)`` takes an array
of shape ``(..., m)`` and returns shape ``(...)``.  Gradients are only
requested on the closed positive orthant; rows where a function has no
(one-sided) gradient come back as NaN from :meth:`HomogeneousFn.grad`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .angles import dyadic_grid
from .errors import NonDifferentiableError

# Stolarsky means switch to the diagonal branch inside this relative band.
DIAGONAL_BAND = 1e-9
FD_STEP = 1e-6


class Curvature(str, enum.Enum):
    CONVEX = "convex-on-positive-orthant"
    CONCAVE = "concave-on-positive-orthant"
    NEITHER = "neither"
    UNVERIFIED = "unverified"


@dataclass(frozen=True, eq=False)
class HomogeneousFn:
    """A continuous function with ``h(lam*x) = lam*h(x)`` for ``lam >= 0``.

    Attributes:
        name: registry name, e.g. ``"mu:2,4"``.
        arity: number of arguments ``m``.
        evaluate: vectorized evaluator on arrays of shape ``(..., m)``.
        gradient: optional vectorized analytic gradient ``(k, m) -> (k, m)``,
            valid on the open positive orthant (and on its boundary when
            ``boundary_differentiable`` is set).
        curvature: convexity tag on the positive orthant; evaluators that
            need convexity trust this tag.
        absolutely_invariant: ``h(x) == h(|x|)``.
        positive: ``h >= 0`` on the positive orthant.
        boundary_differentiable: one-sided partials exist at points of the
            positive orthant with zero coordinates (other than the origin).
    """

    name: str
    arity: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    curvature: Curvature = Curvature.UNVERIFIED
    absolutely_invariant: bool = False
    positive: bool = False
    boundary_differentiable: bool = False

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be positive")
        object.__setattr__(self, "curvature", Curvature(self.curvature))

    def __repr__(self):
        return f"HomogeneousFn({self.name!r}, arity={self.arity})"

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1:] != (self.arity,):
            raise ValueError(
                f"{self.name} takes {self.arity} arguments, got shape {arr.shape}")
        out = self.evaluate(arr)
        return float(out) if np.ndim(out) == 0 else out

    def with_curvature(self, tag) -> "HomogeneousFn":
        return replace(self, curvature=Curvature(tag))

    @property
    def has_analytic_gradient(self) -> bool:
        return self.gradient is not None

    def grad(self, points) -> np.ndarray:
        """Gradients at rows of ``points`` (closed positive orthant).

        Rows where the gradient does not exist are NaN.
        """
        c = np.atleast_2d(np.asarray(points, dtype=float))
        if c.shape[-1] != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} arguments")
        if np.any(c < 0):
            raise ValueError("gradients are only taken on the positive orthant")
        if self.gradient is None:
            return finite_difference_gradient(self, c)
        bad = ~np.any(c > 0, axis=1)
        if not self.boundary_differentiable:
            bad |= np.any(c == 0, axis=1)
        safe = np.where(bad[:, None], 1.0, c)
        with np.errstate(all="ignore"):
            g = np.asarray(self.gradient(safe), dtype=float)
        g[bad] = np.nan
        return g


def finite_difference_gradient(h: HomogeneousFn, points) -> np.ndarray:
    """Central differences with step ``1e-6 * max(1, |c|)``.

    Coordinates closer to zero than the step use a forward difference so the
    stencil stays in the orthant; rows with an exactly zero coordinate are NaN.
    """
    c = np.atleast_2d(np.asarray(points, dtype=float))
    eta = FD_STEP * np.maximum(1.0, np.linalg.norm(c, axis=1))
    out = np.empty_like(c)
    f0 = None
    for k in range(c.shape[1]):
        step = np.zeros_like(c)
        step[:, k] = eta
        fwd = h.evaluate(c + step)
        near = c[:, k] < eta
        if np.any(near):
            if f0 is None:
                f0 = h.evaluate(c)
            back = np.where(near, f0, h.evaluate(np.maximum(c - step, 0.0)))
            out[:, k] = (fwd - back) / np.where(near, eta, 2 * eta)
        else:
            out[:, k] = (fwd - h.evaluate(c - step)) / (2 * eta)
    out[np.any(c == 0, axis=1)] = np.nan
    return out


def gradient_at(h: HomogeneousFn, c) -> np.ndarray:
    """Gradient of ``h`` at one point of the positive orthant.

    Raises:
        NonDifferentiableError: at points where ``h`` has no gradient, e.g.
            the geometric mean at a point with a zero coordinate.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (h.arity,):
        raise ValueError(f"{h.name} takes {h.arity} arguments")
    g = h.grad(c[None, :])[0]
    if not np.all(np.isfinite(g)):
        raise NonDifferentiableError(f"{h.name}: nondifferentiable point {c.tolist()}")
    return g


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


# --- Stolarsky means ------------------------------------------------------

def _log_abs_expm1(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        pos = x + np.log(-np.expm1(-np.abs(x)))
        neg = np.log(-np.expm1(-np.abs(x)))
    return np.where(x > 0, pos, neg)


def _q(x):
    """``x / (1 - exp(-x))``, with its limit 1 at ``x = 0``."""
    with np.errstate(all="ignore"):
        return np.where(x == 0, 1.0, x / -np.expm1(-x))


def stolarsky(r: float, s: float) -> HomogeneousFn:
    """The ``(r, s)``-Stolarsky mean, extended to R^2 through absolute values.

    Off the diagonal it is ``(r(|x|^s - |y|^s) / (s(|x|^r - |y|^r)))^(1/(s-r))``
    and on it ``|x|``.  Evaluation goes through ``t = log(|x|/|y|)`` and
    ``expm1`` so the formula stays accurate right up to the diagonal.
    """
    r, s = float(r), float(s)
    if r == s:
        raise ValueError("Stolarsky mean needs r != s")
    if s == 0:
        raise ValueError("Stolarsky mean needs s != 0")
    both_pos = r > 0 and s > 0
    edge = (r / s) ** (1.0 / (s - r)) if both_pos else 0.0

    def evaluate(x):
        u, v = np.abs(x[..., 0]), np.abs(x[..., 1])
        big = np.maximum(u, v)
        diag = np.abs(u - v) <= DIAGONAL_BAND * big
        zero = (np.minimum(u, v) == 0) & ~diag
        gen = ~(diag | zero)
        with np.errstate(all="ignore"):
            t = np.log(np.where(gen, u, 1.0)) - np.log(np.where(gen, v, 1.0))
            if r != 0:
                log_ratio = (np.log(abs(r)) - np.log(abs(s))
                             + _log_abs_expm1(s * t) - _log_abs_expm1(r * t))
            else:
                log_ratio = _log_abs_expm1(s * t) - np.log(np.abs(s * t))
            val = v * np.exp(log_ratio / (s - r))
        # inside the band the midpoint is exact to second order
        out = np.where(diag, 0.5 * (u + v), np.where(zero, edge * big, val))
        return out[()] if out.ndim == 0 else out

    def dlog(t):
        # d/dt log(ratio) divided out; series near t = 0 avoids cancellation
        small = max(abs(r), abs(s)) * np.abs(t) < 1e-3
        ts = np.where(small, 1.0, t)
        exact = (_q(s * ts) - _q(r * ts)) / ts
        series = ((s - r) / 2 + (s * s - r * r) * t / 12
                  - (s ** 4 - r ** 4) * t ** 3 / 720)
        return np.where(small, series, exact)

    def gradient(c):
        u, v = c[:, 0], c[:, 1]
        hv = evaluate(c)
        t = np.log(u) - np.log(v)
        gu = hv * dlog(t) / (u * (s - r))
        gv = hv * dlog(-t) / (v * (s - r))
        return np.stack([gu, gv], axis=1)

    return HomogeneousFn(f"mu:{_fmt(r)},{_fmt(s)}", 2, evaluate, gradient,
                         Curvature.UNVERIFIED, absolutely_invariant=True,
                         positive=True)


# --- Gini means -----------------------------------------------------------

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def gini(r: float, s: float) -> HomogeneousFn:
    """The ``(r, s)``-Gini mean ``((|x|^s + |y|^s) / (|x|^r + |y|^r))^(1/(s-r))``.

    At ``(0, 0)`` the value is 0.  When exactly one coordinate vanishes and an
    exponent is negative, the continuous extension is 0; with both exponents
    nonnegative the formula applies directly (``0^0 = 1``).
    """
    r, s = float(r), float(s)
    if r == s:
        raise ValueError("Gini mean needs r != s")
    neg = min(r, s) < 0

    def evaluate(x):
        u, v = np.abs(x[..., 0]), np.abs(x[..., 1])
        zero = np.minimum(u, v) == 0
        gen = ~zero
        with np.errstate(all="ignore"):
            lu = np.log(np.where(gen, u, 1.0))
            lv = np.log(np.where(gen, v, 1.0))
            val = np.exp((np.logaddexp(s * lu, s * lv)
                          - np.logaddexp(r * lu, r * lv)) / (s - r))
            if neg:
                edge = np.zeros_like(u)
            else:
                edge = ((u ** s + v ** s) / (u ** r + v ** r)) ** (1.0 / (s - r))
            edge = np.where((u == 0) & (v == 0), 0.0, edge)
        out = np.where(zero, edge, val)
        return out[()] if out.ndim == 0 else out

    def gradient(c):
        u, v = c[:, 0], c[:, 1]
        hv = evaluate(c)
        d = np.log(u) - np.log(v)
        gu = hv / (u * (s - r)) * (s * _sigmoid(s * d) - r * _sigmoid(r * d))
        gv = hv / (v * (s - r)) * (s * _sigmoid(-s * d) - r * _sigmoid(-r * d))
        return np.stack([gu, gv], axis=1)

    return HomogeneousFn(f"nu:{_fmt(r)},{_fmt(s)}", 2, evaluate, gradient,
                         Curvature.UNVERIFIED, absolutely_invariant=True,
                         positive=True)


# --- norms and power / geometric means ------------------------------------

def euclidean_norm(m: int) -> HomogeneousFn:
    m = int(m)
    if m < 2:
        raise ValueError("euclidean_norm needs m >= 2")

    def gradient(c):
        return c / np.linalg.norm(c, axis=1, keepdims=True)

    return HomogeneousFn(f"norm:{m}", m, lambda x: np.linalg.norm(x, axis=-1),
                         gradient, Curvature.CONVEX, absolutely_invariant=True,
                         positive=True, boundary_differentiable=True)


def scaled_geometric_mean(m: int) -> HomogeneousFn:
    """``m * (prod |x_k|)^(1/m)``; concave on the positive orthant."""
    m = int(m)
    if m < 2:
        raise ValueError("scaled_geometric_mean needs m >= 2")

    def evaluate(x):
        prod = np.prod(np.abs(x), axis=-1)
        return m * (np.sqrt(prod) if m == 2 else prod ** (1.0 / m))

    def gradient(c):
        return evaluate(c)[:, None] / (m * c)

    return HomogeneousFn(f"geo:{m}", m, evaluate, gradient, Curvature.CONCAVE,
                         absolutely_invariant=True, positive=True)


def pth_power_mean(p: int, m: int = 2) -> HomogeneousFn:
    """``((|x_1|^p + ... + |x_m|^p) / m)^(1/p)``; convex for ``p >= 1``."""
    if p < 1 or int(p) != p:
        raise ValueError("power mean exponent p must be an integer >= 1")
    p, m = int(p), int(m)
    if m < 2:
        raise ValueError("power mean needs m >= 2")

    def evaluate(x):
        a = np.abs(x)
        top = np.max(a, axis=-1)
        safe = np.where(top > 0, top, 1.0)
        mean = np.mean((a / safe[..., None]) ** p, axis=-1)
        return top * mean ** (1.0 / p)

    def gradient(c):
        top = np.max(c, axis=1, keepdims=True)
        y = c / top
        mean = np.mean(y ** p, axis=1, keepdims=True)
        return y ** (p - 1) * mean ** (1.0 / p - 1.0) / m

    return HomogeneousFn(f"pow:{p},{m}", m, evaluate, gradient, Curvature.CONVEX,
                         absolutely_invariant=True, positive=True,
                         boundary_differentiable=True)


# --- sampling and certification -------------------------------------------

def delta_h_sample(h: HomogeneousFn, density: int):
    """Unit points ``s_theta`` over the dyadic grid with their gradients.

    Returns ``(indices, points, grads, skipped)`` where rows without a
    gradient have been dropped and ``skipped`` counts them.
    """
    if density < 1:
        raise ValueError("density must be >= 1")
    grid = dyadic_grid(h.arity, density)
    pts = grid.points()
    # cos(pi/2) is ~6e-17, not 0; snap so boundary points are recognized
    pts[np.abs(pts) < 1e-15] = 0.0
    g = h.grad(pts)
    ok = np.all(np.isfinite(g), axis=1)
    skipped = int(grid.count - np.count_nonzero(ok))
    if skipped:
        return grid.indices[ok], pts[ok], g[ok], skipped
    return grid.indices, pts, g, 0


def sample_delta_h(h: HomogeneousFn, density: int) -> np.ndarray:
    """Unit points of the positive orthant, from the dyadic angle grid, where
    ``h`` is differentiable.  Rows of the result are the sample points."""
    return delta_h_sample(h, density)[1]


def certify_curvature(h: HomogeneousFn, trials: int = 1000, seed: int = 0) -> Curvature:
    """Midpoint test on random positive pairs.

    This is sampling evidence, not a proof.  A function passing both
    inequalities (e.g. a linear one) is tagged convex.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    x = 1.0 - rng.random((trials, h.arity))
    y = 1.0 - rng.random((trials, h.arity))
    mid = h.evaluate(0.5 * (x + y))
    avg = 0.5 * (h.evaluate(x) + h.evaluate(y))
    if np.all(mid <= avg + 1e-10):
        return Curvature.CONVEX
    if np.all(mid >= avg - 1e-10):
        return Curvature.CONCAVE
    return Curvature.NEITHER


_REGISTRY: dict = {}


def register(h: HomogeneousFn, overwrite: bool = False) -> HomogeneousFn:
    """Make a custom function addressable by name in expressions."""
    if h.name in _REGISTRY and not overwrite:
        raise ValueError(f"{h.name!r} is already registered")
    _REGISTRY[h.name] = h
    return h


def registered(name: str) -> Optional[HomogeneousFn]:
    return _REGISTRY.get(name)
