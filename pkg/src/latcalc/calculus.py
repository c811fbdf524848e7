"""Three ways to evaluate ``h(a_1, ..., a_m)`` on a grid lattice, plus the
square-mean, geometric-mean and complex-modulus constructions.

``pointwise_apply`` is the reference: on a grid lattice point evaluations are
the lattice homomorphisms, so applying ``h`` point by point *is* the
functional calculus.  ``support_formula`` and ``sigma_sequence`` rebuild the
same element from gradients only (supporting hyperplanes of a convex or
concave ``h``), without ever calling ``h`` itself.
"""

from __future__ import annotations

import csv
import io
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .angles import AngleTuple, dyadic_grid, sphere_coefficients
from .errors import HypothesisError
from .homogeneous import Curvature, HomogeneousFn, delta_h_sample
from .lattice import Element, common_lattice

MAX_SKIP_FRACTION = 0.5


def _stack(h_arity: int, a: Sequence[Element]) -> np.ndarray:
    if len(a) != h_arity:
        raise ValueError(f"expected {h_arity} elements, got {len(a)}")
    common_lattice(a)
    return np.stack([e.values for e in a], axis=1)


def _require_positive(a: Sequence[Element]) -> None:
    for k, e in enumerate(a):
        if np.any(e.values < 0):
            raise HypothesisError(f"argument {k} is not positive; inputs must lie in E+")


def _direction(h: HomogeneousFn) -> float:
    if h.curvature == Curvature.CONVEX:
        return 1.0
    if h.curvature == Curvature.CONCAVE:
        return -1.0
    raise HypothesisError(
        f"{h.name} is tagged {h.curvature.value}; the supporting-hyperplane "
        "formula needs a convex or concave function")


def pointwise_apply(h: HomogeneousFn, a: Sequence[Element]) -> Element:
    """``h`` applied at every grid point: the reference evaluator."""
    X = _stack(h.arity, a)
    return Element(a[0].lattice, h.evaluate(X))


# --- exact extreme of linear functionals over a large point set -----------

class _TiledSet:
    """A finite set of vectors grouped into tiles of nearby members.

    ``extreme(X)`` returns ``max_j G_j . x`` for every row ``x >= 0`` of ``X``.
    A tile is scanned only if its componentwise maximum, dotted with ``x``,
    can still beat the best value found so far; since ``x >= 0`` that bound
    is valid and the result is the exact maximum over the whole set.
    """

    def __init__(self, vectors: np.ndarray, tile_ids: np.ndarray):
        order = np.argsort(tile_ids, kind="stable")
        ids = tile_ids[order]
        starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
        counts = np.diff(np.r_[starts, ids.size])
        width = int(counts.max())
        # pad short tiles by repeating a member; duplicates do not move a max
        offs = np.minimum(np.arange(width)[None, :], counts[:, None] - 1)
        take = order[starts[:, None] + offs]
        self.blocks = np.ascontiguousarray(vectors[take])
        self.bounds = np.ascontiguousarray(self.blocks.max(axis=1))
        self.size = vectors.shape[0]

    def extreme(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return _tile_search(self.blocks, self.bounds, X)


@numba.njit(cache=True)
def _tile_search(blocks, bounds, X):
    nt, w, m = blocks.shape
    out = np.empty(X.shape[0])
    ub = np.empty(nt)
    for p in range(X.shape[0]):
        top = -np.inf
        first = 0
        for i in range(nt):
            s = 0.0
            for k in range(m):
                s += bounds[i, k] * X[p, k]
            ub[i] = s
            if s > top:
                top = s
                first = i
        best = -np.inf
        for j in range(w):
            s = 0.0
            for k in range(m):
                s += blocks[first, j, k] * X[p, k]
            if s > best:
                best = s
        for i in range(nt):
            if i == first or ub[i] < best:
                continue
            for j in range(w):
                s = 0.0
                for k in range(m):
                    s += blocks[i, j, k] * X[p, k]
                if s > best:
                    best = s
        out[p] = best
    return out


def _tile_ids(indices: np.ndarray, n: int) -> np.ndarray:
    side = 2 ** n
    d = indices.shape[1]
    t = min(side, 16 if d == 1 else 2 ** (8 // d))
    per = side // t
    ids = np.zeros(indices.shape[0], dtype=np.int64)
    for j in range(d):
        ids = ids * per + indices[:, j] // t
    return ids


_CACHE: "OrderedDict" = OrderedDict()
_CACHE_BYTES = 1 << 30


def _gradient_set(h: HomogeneousFn, density: int, sign: float):
    key = (id(h), density, sign)
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is h:
        _CACHE.move_to_end(key)
        return hit[1]
    idx, _, grads, skipped = delta_h_sample(h, density)
    total = grads.shape[0] + skipped
    if grads.shape[0] == 0:
        raise HypothesisError(f"{h.name}: no differentiable point at level {density}")
    entry = (_TiledSet(sign * grads, _tile_ids(idx, density)), skipped, total)
    _CACHE[key] = (h, entry)
    while len(_CACHE) > 1 and sum(v[1][0].blocks.nbytes for v in _CACHE.values()) > _CACHE_BYTES:
        _CACHE.popitem(last=False)
    return entry


def clear_cache() -> None:
    _CACHE.clear()


def _hyperplane_extreme(h, X, density, check_skips=True):
    # inf over the set = -(max over the negated set)
    sign = _direction(h)
    tiles, skipped, total = _gradient_set(h, density, sign)
    if check_skips and skipped > MAX_SKIP_FRACTION * total:
        raise HypothesisError(
            f"{h.name}: {skipped} of {total} sample directions are "
            "nondifferentiable points")
    return sign * tiles.extreme(X), tiles.size, skipped


def support_formula(h: HomogeneousFn, a: Sequence[Element], density: int = 12) -> Element:
    """Pointwise sup (convex ``h``) or inf (concave ``h``) of ``grad h(c) . a``.

    The directions ``c`` run over the dyadic sample of unit points of the
    positive orthant where ``h`` is differentiable.  For convex ``h`` the
    result never exceeds ``h(a)``, for concave ``h`` it never falls below.

    Raises:
        HypothesisError: curvature tag is neither convex nor concave, an
            input is not positive, or more than half of the sample
            directions are nondifferentiable.
    """
    _direction(h)
    X = _stack(h.arity, a)
    _require_positive(a)
    vals, _, _ = _hyperplane_extreme(h, X, density)
    return Element(a[0].lattice, vals)


def s_theta_combination(theta, a: Sequence[Element]) -> Element:
    """``cos t1 a1 + sin t1 cos t2 a2 + ... + sin t1 ... sin t_{m-1} a_m``."""
    th = theta.thetas if isinstance(theta, AngleTuple) else tuple(np.atleast_1d(theta))
    if len(th) != len(a) - 1:
        raise ValueError(f"{len(th)} angles need {len(th) + 1} elements, got {len(a)}")
    coef = sphere_coefficients(np.asarray(th, dtype=float))
    X = _stack(len(a), a)
    return Element(a[0].lattice, X @ coef)


def sphere_sup(a: Sequence[Element], n: int) -> Element:
    """Pointwise sup of ``s_theta(a)`` over the level-``n`` dyadic grid.

    For positive ``a`` this increases to the Euclidean norm of ``(a_1, ..., a_m)``.
    """
    X = _stack(len(a), a)
    _require_positive(a)
    grid = dyadic_grid(len(a), n)
    tiles = _TiledSet(grid.points(), _tile_ids(grid.indices, n))
    return Element(a[0].lattice, tiles.extreme(X))


@dataclass
class SigmaTrace:
    """The dyadic approximations ``sigma_1, ..., sigma_N`` and their errors.

    ``errors[i]`` is the sup-norm distance from ``sequence[i]`` to the
    pointwise reference value.
    """

    sequence: list
    errors: list
    monotone: bool
    grid_sizes: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def rows(self, timing: bool = True):
        for n, (size, err, ms) in enumerate(
                zip(self.grid_sizes, self.errors, self.wall_ms), start=1):
            yield {"n": n, "grid_size": size, "sup_error": err,
                   "wall_ms": round(ms, 3) if timing else 0.0}

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "grid_size", "sup_error", "wall_ms"])
        for row in self.rows(timing):
            w.writerow([row["n"], row["grid_size"], repr(float(row["sup_error"])),
                        row["wall_ms"]])
        return buf.getvalue()


def sigma_sequence(h: HomogeneousFn, a: Sequence[Element], N: int) -> SigmaTrace:
    """``sigma_n = sup (or inf) of grad h(s_theta) . a`` over theta in P_n, n = 1..N.

    Directions where ``h`` has no gradient are skipped and counted; the run
    aborts if more than half of the finest level is skipped.
    """
    sign = _direction(h)
    if h.arity < 2:
        raise ValueError("sigma_sequence needs arity >= 2")
    if N < 1:
        raise ValueError("N must be >= 1")
    dyadic_grid(h.arity, 1)
    if N * (h.arity - 1) > 24:
        raise ValueError(
            f"level {N} needs 2^{N * (h.arity - 1)} tuples, over the 2^24 budget")
    X = _stack(h.arity, a)
    _require_positive(a)
    ref = h.evaluate(X)
    seq, errs, sizes, skips, times = [], [], [], [], []
    for n in range(1, N + 1):
        t0 = time.perf_counter()
        vals, _, skipped = _hyperplane_extreme(h, X, n, check_skips=(n == N))
        times.append(1e3 * (time.perf_counter() - t0))
        seq.append(Element(a[0].lattice, vals))
        errs.append(float(np.max(np.abs(vals - ref))))
        sizes.append(2 ** (n * (h.arity - 1)))
        skips.append(skipped)
    mono = all(np.all(sign * (nxt.values - cur.values) >= 0)
               for cur, nxt in zip(seq, seq[1:]))
    mono = mono and all(b <= a_ for a_, b in zip(errs, errs[1:]))
    return SigmaTrace(seq, errs, mono, sizes, skips, times)


# --- square mean, geometric mean, modulus --------------------------------

def boxplus(f: Element, g: Element, K: int = 1024) -> Element:
    """``sup{f cos t + g sin t}`` over ``K`` equally spaced angles in [0, 2 pi).

    Converges to ``sqrt(f^2 + g^2)`` with relative error at most ``1 - cos(pi/K)``.
    """
    common_lattice([f, g])
    if K < 4:
        raise ValueError("K must be >= 4")
    t = 2 * np.pi * np.arange(K) / K
    c, s = np.cos(t), np.sin(t)
    out = np.full(f.lattice.size, -np.inf)
    step = max(1, 2 ** 22 // K)
    for lo in range(0, f.lattice.size, step):
        fv, gv = f.values[lo:lo + step], g.values[lo:lo + step]
        out[lo:lo + step] = (np.outer(c, fv) + np.outer(s, gv)).max(axis=0)
    return Element(f.lattice, out)


def complex_modulus(f: Element, g: Element, K: int = 1024) -> Element:
    """Modulus of ``f + i g`` as a sup of rotations; signed inputs allowed."""
    return boxplus(f, g, K)


def _log_range(ratios: np.ndarray):
    lo = np.clip(ratios.min() / 10.0, 1e-6, 1e6)
    hi = np.clip(ratios.max() * 10.0, 1e-6, 1e6)
    if hi <= lo:
        hi = lo * 10.0
    return lo, hi


def boxtimes(f: Element, g: Element, K: int = 2048, full_output: bool = False):
    """``1/2 inf{t f + g/t : t > 0}`` over ``K`` log-spaced values of ``t``.

    Where ``f`` or ``g`` vanishes the infimum is 0 (not attained) and is
    returned in closed form; ``full_output`` also returns the indices of
    those points as ``info["tail_points"]``.
    """
    common_lattice([f, g])
    _require_positive([f, g])
    if K < 4:
        raise ValueError("K must be >= 4")
    fv, gv = f.values, g.values
    live = (fv > 0) & (gv > 0)
    out = np.zeros(f.lattice.size)
    info = {"tail_points": np.flatnonzero(~live).tolist(), "theta_range": None}
    if np.any(live):
        lo, hi = _log_range(np.sqrt(gv[live] / fv[live]))
        t = np.geomspace(lo, hi, K)
        info["theta_range"] = (float(lo), float(hi))
        fl, gl = fv[live], gv[live]
        res = np.empty(fl.size)
        step = max(1, 2 ** 22 // K)
        for a in range(0, fl.size, step):
            res[a:a + step] = 0.5 * (np.outer(t, fl[a:a + step])
                                     + np.outer(1.0 / t, gl[a:a + step])).min(axis=0)
        out[live] = res
    result = Element(f.lattice, out)
    return (result, info) if full_output else result


def weighted_product_inf(a: Sequence[Element], K: int = 512, full_output: bool = False):
    """``inf{t_1 a_1 + ... + t_m a_m : t_k > 0, t_1 ... t_m = 1}`` on a log grid.

    The first ``m - 1`` weights each take ``K`` log-spaced values and the last
    one closes the product.  Converges to ``m (a_1 ... a_m)^(1/m)``; points
    with a vanishing coordinate get the exact infimum 0.
    """
    m = len(a)
    if m < 2:
        raise ValueError("need at least two elements")
    X = _stack(m, a)
    _require_positive(a)
    if K < 4:
        raise ValueError("K must be >= 4")
    live = np.all(X > 0, axis=1)
    out = np.zeros(X.shape[0])
    info = {"tail_points": np.flatnonzero(~live).tolist()}
    if np.any(live):
        XL = X[live]
        gm = np.exp(np.mean(np.log(XL), axis=1))
        axes = []
        for k in range(m - 1):
            lo, hi = _log_range(gm / XL[:, k])
            axes.append(np.geomspace(lo, hi, K))
        free = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m - 1)
        T = np.column_stack([free, 1.0 / np.prod(free, axis=1)])
        res = np.empty(XL.shape[0])
        step = max(1, 2 ** 22 // T.shape[0])
        for lo in range(0, XL.shape[0], step):
            res[lo:lo + step] = (XL[lo:lo + step] @ T.T).min(axis=1)
        out[live] = res
    result = Element(a[0].lattice, out)
    return (result, info) if full_output else result
