"""Finite-grid vector lattices.

A :class:`GridLattice` is the space of real functions on a finite set of
labelled points with pointwise order.  Point evaluations are exactly the real
valued lattice homomorphisms on it, which is what makes functional calculus
computable: ``h(a_1, ..., a_m)`` is just ``h`` applied point by point.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import LatticeMismatchError


@dataclass(frozen=True)
class GridLattice:
    """An ordered tuple of distinct point labels."""

    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("a grid lattice needs at least one point")
        if len(set(pts)) != len(pts):
            raise ValueError("grid point labels must be distinct")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return len(self.points)

    @classmethod
    def uniform(cls, n: int, lo: float = 0.0, hi: float = 1.0) -> "GridLattice":
        """``n`` equally spaced abscissae in ``[lo, hi]``."""
        if n < 1:
            raise ValueError("grid size must be >= 1")
        if n == 1:
            return cls((float(lo),))
        return cls(tuple(float(x) for x in np.linspace(lo, hi, n)))

    @classmethod
    def indexed(cls, n: int) -> "GridLattice":
        """Labels ``0, 1, ..., n-1``."""
        if n < 1:
            raise ValueError("grid size must be >= 1")
        return cls(tuple(range(n)))

    def element(self, values) -> "Element":
        return Element(self, values)

    def constant(self, c: float) -> "Element":
        return Element(self, np.full(self.size, float(c)))

    def zeros(self) -> "Element":
        return self.constant(0.0)

    def abscissae(self) -> np.ndarray:
        """Labels as floats; fails for non-numeric labels."""
        try:
            return np.array([float(p) for p in self.points])
        except (TypeError, ValueError):
            raise ValueError("grid labels are not numeric") from None


@dataclass(frozen=True, eq=False)
class Element:
    """A real vector indexed by the points of a grid lattice.

    Values are stored in a read-only float array; every operation returns a
    new element.
    """

    lattice: GridLattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.lattice.size:
            raise ValueError(
                f"expected {self.lattice.size} values, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("element values must be finite (no NaN/inf)")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __repr__(self):
        return f"Element({self.values.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return (self.lattice == other.lattice
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __len__(self):
        return self.lattice.size

    def _new(self, vals) -> "Element":
        return Element(self.lattice, vals)

    def __add__(self, other):
        _same(self, other)
        return self._new(self.values + other.values)

    def __sub__(self, other):
        _same(self, other)
        return self._new(self.values - other.values)

    def __neg__(self):
        return self._new(-self.values)

    def __mul__(self, c):
        if isinstance(c, Element):
            return NotImplemented
        return self._new(float(c) * self.values)

    __rmul__ = __mul__

    def __or__(self, other):
        return lattice_sup(self, other)

    def __and__(self, other):
        return lattice_inf(self, other)

    def __abs__(self):
        return abs_value(self)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_positive(self) -> bool:
        return bool(np.all(self.values >= 0))

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"lattice": list(self.lattice.points),
                "values": [float(v) for v in self.values]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Element":
        return cls(GridLattice(tuple(d["lattice"])), d["values"])

    @classmethod
    def from_json(cls, text: str) -> "Element":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for p, v in zip(self.lattice.points, self.values):
            w.writerow([_label_str(p), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Element":
        labels, vals = [], []
        for row in csv.reader(io.StringIO(text)):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"expected 'label,value' rows, got {row!r}")
            labels.append(_parse_label(row[0]))
            vals.append(float(row[1]))
        return cls(GridLattice(tuple(labels)), vals)


def _label_str(p) -> str:
    return repr(p) if isinstance(p, float) else str(p)


def _parse_label(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


@dataclass(frozen=True)
class Regulator:
    """A strictly positive element used to measure relative uniform distance."""

    element: Element

    def __post_init__(self):
        if not np.all(self.element.values > 0):
            raise ValueError("a regulator must be strictly positive at every point")

    @property
    def values(self) -> np.ndarray:
        return self.element.values


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of a relative uniform convergence or Cauchy check.

    ``per_epsilon`` holds ``(eps, N)`` pairs with 1-based ``N``, or ``None``
    when no tail of the sequence meets the bound.
    """

    converged: bool
    per_epsilon: tuple
    regulator_used: Regulator


def _same(a: Element, b: Element) -> None:
    if a.lattice != b.lattice:
        raise LatticeMismatchError(
            f"elements live on different lattices "
            f"(sizes {a.lattice.size} and {b.lattice.size})")


def common_lattice(elems: Sequence[Element]) -> GridLattice:
    if not elems:
        raise ValueError("need at least one element")
    for e in elems[1:]:
        _same(elems[0], e)
    return elems[0].lattice


def lattice_sup(a: Element, b: Element) -> Element:
    _same(a, b)
    return a._new(np.maximum(a.values, b.values))


def lattice_inf(a: Element, b: Element) -> Element:
    _same(a, b)
    return a._new(np.minimum(a.values, b.values))


def abs_value(a: Element) -> Element:
    return a._new(np.abs(a.values))


def positive_part(a: Element) -> Element:
    return a._new(np.maximum(a.values, 0.0))


def _as_regulator(p) -> Regulator:
    return p if isinstance(p, Regulator) else Regulator(p)


def _check_epsilons(epsilons: Iterable[float]) -> list:
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ValueError("need at least one epsilon")
    if any(e <= 0 for e in eps):
        raise ValueError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    return eps


def check_ru_convergence(seq: Sequence[Element], limit: Element, p,
                         epsilons: Iterable[float]) -> ConvergenceReport:
    """Find, for each eps, the first index N with |f_n - f| < eps*p for all n >= N.

    The comparison is strict, so a term sitting exactly on ``eps*p`` fails.
    """
    if not seq:
        raise ValueError("empty sequence")
    reg = _as_regulator(p)
    common_lattice(list(seq) + [limit, reg.element])
    eps = _check_epsilons(epsilons)
    dev = np.abs(np.stack([f.values for f in seq]) - limit.values)
    out = []
    for e in eps:
        ok = np.all(dev < e * reg.values, axis=1)
        out.append((e, _first_good_tail(ok)))
    return ConvergenceReport(all(n is not None for _, n in out), tuple(out), reg)


def check_ru_cauchy(seq: Sequence[Element], p,
                    epsilons: Iterable[float]) -> ConvergenceReport:
    """Find, for each eps, the first N with |f_m - f_n| < eps*p for all m, n >= N.

    A tail must hold at least two terms; a lone last term would otherwise make
    every finite sequence Cauchy.
    """
    if not seq:
        raise ValueError("empty sequence")
    if len(seq) < 2:
        raise ValueError("a Cauchy check needs at least two terms")
    reg = _as_regulator(p)
    common_lattice(list(seq) + [reg.element])
    eps = _check_epsilons(epsilons)
    vals = np.stack([f.values for f in seq])
    # spread of every tail = suffix max - suffix min, pointwise
    sufmax = np.maximum.accumulate(vals[::-1], axis=0)[::-1]
    sufmin = np.minimum.accumulate(vals[::-1], axis=0)[::-1]
    spread = (sufmax - sufmin)[:-1]
    out = []
    for e in eps:
        ok = np.all(spread < e * reg.values, axis=1)
        out.append((e, _first_good_tail(ok)))
    return ConvergenceReport(all(n is not None for _, n in out), tuple(out), reg)


def _first_good_tail(ok: np.ndarray):
    """1-based start of the longest all-True suffix of ``ok``; None if empty."""
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return int(bad[-1]) + 2 if bad.size else 1
