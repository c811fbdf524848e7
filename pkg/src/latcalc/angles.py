"""Spherical angle parametrization of the positive unit sphere and dyadic angle grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_GRID_TUPLES = 2 ** 24


@dataclass(frozen=True)
class AngleTuple:
    thetas: tuple

    def __post_init__(self):
        th = tuple(float(t) for t in self.thetas)
        if not th:
            raise ValueError("an angle tuple needs at least one angle")
        if any(t < 0 or t > np.pi / 2 for t in th):
            raise ValueError("angles must lie in [0, pi/2]")
        object.__setattr__(self, "thetas", th)

    @property
    def arity(self) -> int:
        return len(self.thetas) + 1


def sphere_coefficients(thetas) -> np.ndarray:
    """Unit vectors ``s_theta`` for angle rows of shape ``(..., m-1)``.

    Coordinate ``k`` (0-based) is ``prod_{j<k} sin t_j * cos t_k`` for
    ``k < m-1`` and the full sine product for the last one.
    """
    th = np.asarray(thetas, dtype=float)
    if th.ndim == 0:
        th = th[None]
    c, s = np.cos(th), np.sin(th)
    m = th.shape[-1] + 1
    out = np.empty(th.shape[:-1] + (m,))
    run = np.ones(th.shape[:-1])
    for k in range(m - 1):
        out[..., k] = run * c[..., k]
        run = run * s[..., k]
    out[..., m - 1] = run
    return out


@dataclass(frozen=True, eq=False)
class DyadicGrid:
    """All angle tuples ``(l_1 pi/2^(n+1), ..., l_{m-1} pi/2^(n+1))``, ``l_j`` in 1..2^n.

    ``indices`` holds the integer ``l_j - 1`` per row, ``angles`` the angles,
    enumerated with the last coordinate varying fastest.
    """

    m: int
    n: int
    indices: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        return (self.indices + 1) * (np.pi / 2 ** (self.n + 1))

    @property
    def count(self) -> int:
        return self.indices.shape[0]

    @property
    def tuples(self) -> list:
        return [AngleTuple(tuple(row)) for row in self.angles]

    def points(self) -> np.ndarray:
        """The unit vectors ``s_theta`` for every tuple."""
        return sphere_coefficients(self.angles)


def dyadic_grid(m: int, n: int) -> DyadicGrid:
    if m < 2:
        raise ValueError("arity m must be >= 2")
    if n < 1:
        raise ValueError("level n must be >= 1")
    if n * (m - 1) > 24:
        raise ValueError(
            f"dyadic grid with 2^{n * (m - 1)} tuples exceeds the 2^24 budget")
    side = 2 ** n
    idx = np.indices((side,) * (m - 1), dtype=np.int32).reshape(m - 1, -1).T
    return DyadicGrid(m, n, np.ascontiguousarray(idx))
