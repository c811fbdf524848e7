"""Linear maps between grid lattices and their extensions.

A linear map ``T: R^S -> R^T`` is stored as a ``|T| x |S|`` matrix.  It is
positive when every entry is ``>= 0`` and a lattice homomorphism exactly
when, in addition, every row has at most one nonzero entry: such a row reads
off one source point and scales it by a nonnegative factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..calculus import pointwise_apply
from ..errors import HypothesisError
from ..homogeneous import HomogeneousFn
from ..lattice import (Element, GridLattice, Regulator, check_ru_cauchy,
                       check_ru_convergence, common_lattice)
from .expr import Expr, eval_expr

PRESERVATION_TOL = 1e-9
HYPOTHESIS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearMapRep:
    """A linear map between grid lattices.

    Attributes:
        matrix: target points x source points, read-only.
        source: domain lattice.
        target: codomain lattice; defaults to ``GridLattice.indexed(rows)``.
        positive: all entries are ``>= 0``.
        homomorphism: positive with at most one nonzero entry per row.
    """

    matrix: np.ndarray
    source: GridLattice
    target: Optional[GridLattice] = None
    positive: bool = field(init=False)
    homomorphism: bool = field(init=False)

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2:
            raise ValueError("map matrix must be two-dimensional")
        if not np.all(np.isfinite(M)):
            raise ValueError("map matrix must be finite")
        if M.shape[1] != self.source.size:
            raise ValueError(
                f"matrix has {M.shape[1]} columns, source lattice has {self.source.size} points")
        target = self.target or GridLattice.indexed(M.shape[0])
        if M.shape[0] != target.size:
            raise ValueError(
                f"matrix has {M.shape[0]} rows, target lattice has {target.size} points")
        M.setflags(write=False)
        positive = bool(np.all(M >= 0))
        hom = positive and bool(np.all(np.count_nonzero(M, axis=1) <= 1))
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "homomorphism", hom)

    def __call__(self, e: Element) -> Element:
        if e.lattice != self.source:
            raise ValueError("element does not live on the map's source lattice")
        return Element(self.target, self.matrix @ e.values)

    # constructors --------------------------------------------------------

    @classmethod
    def identity(cls, lattice: GridLattice, scale: float = 1.0) -> "LinearMapRep":
        return cls(scale * np.eye(lattice.size), lattice, lattice)

    @classmethod
    def point_evaluation(cls, lattice: GridLattice, index: int) -> "LinearMapRep":
        """``f -> f(p)`` for the ``index``-th grid point ``p``, into a one-point lattice."""
        M = np.zeros((1, lattice.size))
        M[0, index] = 1.0
        return cls(M, lattice, GridLattice((lattice.points[index],)))

    @classmethod
    def random_homomorphism(cls, rng: np.random.Generator, source: GridLattice,
                            n_target: int, zero_row_prob: float = 0.1) -> "LinearMapRep":
        """Each target row picks one source point and a weight in ``[0.1, 2]``, or is zero."""
        M = np.zeros((n_target, source.size))
        for i in range(n_target):
            if rng.random() >= zero_row_prob:
                M[i, rng.integers(source.size)] = rng.uniform(0.1, 2.0)
        return cls(M, source)

    @classmethod
    def random_dense_positive(cls, rng: np.random.Generator, source: GridLattice,
                              n_target: int) -> "LinearMapRep":
        """A positive map with at least two nonzeros in some row (so not a homomorphism)."""
        if source.size < 2:
            raise ValueError("a non-homomorphic positive map needs >= 2 source points")
        M = rng.uniform(0.0, 1.0, (n_target, source.size))
        M[rng.random(M.shape) < 0.3] = 0.0
        row = rng.integers(n_target)
        cols = rng.choice(source.size, 2, replace=False)
        M[row, cols] = rng.uniform(0.1, 1.0, 2)
        return cls(M, source)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "source": list(self.source.points),
                "target": list(self.target.points)}


def _require_hom(T: LinearMapRep):
    if not T.homomorphism:
        raise HypothesisError(
            "extension to the completion requires a lattice homomorphism "
            "(nonnegative entries, at most one nonzero per row)")


def extend_homomorphism(generators: Sequence[Element], T: LinearMapRep, e: Expr,
                        memo: dict = None) -> Element:
    """The value of the unique homomorphic extension of ``T`` at ``e``.

    ``T`` is pushed through the tree: generators map to ``T(generator)``,
    linear and lattice operations are kept, and ``h(a_1, ..., a_m)`` maps to
    ``h(T a_1, ..., T a_m)``.  This never evaluates ``e`` on the source grid,
    which makes it an independent computation from ``T(eval_expr(e))``.

    Args:
        generators: the seed elements, or a :class:`Tower` (its generators
            are used).
    """
    _require_hom(T)
    gens = list(getattr(generators, "generators", generators))
    common_lattice(gens)
    images = [T(g) for g in gens]
    return eval_expr(e, images, memo)


def extend_positive_map_by_limits(T: LinearMapRep, seq: Sequence[Element], p,
                                  limit: Element, epsilons=(1.0, 0.1, 0.01),
                                  tol: float = PRESERVATION_TOL,
                                  full_output: bool = False):
    """Extend a positive map to the relatively uniform limit of ``seq``.

    The sequence must be relatively uniformly Cauchy for the regulator ``p``
    at every ``epsilon`` and converge to ``limit``; the extension is
    ``T(limit)``.  The other order of operations, taking the limit of the
    images ``T(f_n)``, is checked to give the same element: positivity gives
    ``|T f_n - T f| <= T|f_n - f| < eps * T(p)``, so the images converge to
    ``T(limit)`` with regulator ``T(p)`` no later than the source sequence.
    The largest violation of the first inequality is the reported
    ``order_swap_deviation`` and must not exceed ``tol``.

    Returns:
        ``T(limit)``, or ``(T(limit), report)`` with ``full_output``.

    Raises:
        HypothesisError: ``T`` not positive, the sequence not Cauchy or not
            converging to ``limit``, or the two orders disagree.
    """
    if not T.positive:
        raise HypothesisError("extension along limits requires a positive map")
    reg = p if isinstance(p, Regulator) else Regulator(p)
    cauchy = check_ru_cauchy(seq, reg, epsilons)
    if not cauchy.converged:
        raise HypothesisError("sequence is not relatively uniformly Cauchy for this regulator")
    conv = check_ru_convergence(seq, limit, reg, epsilons)
    if not conv.converged:
        raise HypothesisError("sequence does not converge relatively uniformly to the given limit")
    direct = T(limit)
    images = [T(f) for f in seq]
    dev = np.stack([np.abs(img.values - direct.values) - T(abs(f - limit)).values
                    for img, f in zip(images, seq)])
    swap_dev = max(0.0, float(np.max(dev)))
    # rows of T that vanish on p vanish on everything; any positive value
    # works as regulator there
    Tp = T(reg.element).values
    img_reg = Regulator(Element(T.target, np.where(Tp > 0, Tp, 1.0)))
    img_conv = check_ru_convergence(images, direct, img_reg, epsilons)
    no_later = all(n_img is not None and n_img <= n_src
                   for (_, n_img), (_, n_src) in zip(img_conv.per_epsilon, conv.per_epsilon))
    report = {
        "cauchy": [[e, n] for e, n in cauchy.per_epsilon],
        "convergence": [[e, n] for e, n in conv.per_epsilon],
        "image_convergence": [[e, n] for e, n in img_conv.per_epsilon],
        "order_swap_deviation": swap_dev,
    }
    if swap_dev > tol or not no_later:
        raise HypothesisError(
            f"limit and map do not commute (deviation {swap_dev:.3g})")
    return (direct, report) if full_output else direct


@dataclass(frozen=True)
class PreservationReport:
    """Outcome of checking ``T(h(a)) == h(T a)`` on random tuples."""

    passed: bool
    function: str
    trials: int
    max_deviation: float
    tolerance: float
    witness: Optional[dict] = None

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "function": self.function, "trials": self.trials,
                "max_deviation": self.max_deviation, "tolerance": self.tolerance,
                "witness": self.witness}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _random_tuple(rng, T: LinearMapRep, m: int) -> list:
    return [Element(T.source, rng.normal(size=T.source.size)) for _ in range(m)]


def check_preservation(T: LinearMapRep, h: HomogeneousFn, trials: int = 100,
                       seed: int = 0, tol: float = PRESERVATION_TOL) -> PreservationReport:
    """Test whether ``T`` commutes with the functional calculus of ``h``.

    Lattice homomorphisms always do.  Each trial draws ``h.arity`` standard
    normal elements; the witness records the worst trial.
    """
    rng = np.random.default_rng(seed)
    worst, witness = 0.0, None
    for trial in range(trials):
        a = _random_tuple(rng, T, h.arity)
        lhs = T(pointwise_apply(h, a)).values
        rhs = pointwise_apply(h, [T(x) for x in a]).values
        d = np.abs(lhs - rhs)
        k = int(np.argmax(d))
        if d[k] > worst or witness is None:
            worst = float(d[k])
            witness = {"trial": trial, "target_point": _jsonable(T.target.points[k]),
                       "inputs": [x.values.tolist() for x in a],
                       "map_then_fn": float(rhs[k]), "fn_then_map": float(lhs[k]),
                       "deviation": worst}
    passed = worst <= tol
    return PreservationReport(passed, h.name, trials, worst, tol,
                              None if passed else witness)


@dataclass(frozen=True)
class ConverseReport:
    """Outcome of the converse check: preservation of ``h`` forces ``|Sa| = S|a|``.

    ``modulus_commutes`` is None when preservation failed, in which case the
    implication holds vacuously.
    """

    function: str
    preserved: PreservationReport
    modulus_commutes: Optional[bool]
    modulus_deviation: Optional[float]
    modulus_witness: Optional[dict] = None

    @property
    def implication_holds(self) -> bool:
        return self.modulus_commutes is not False

    @property
    def verdict(self) -> str:
        return "PASS" if self.implication_holds else "FAIL"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "function": self.function,
                "preserved": self.preserved.to_dict(),
                "modulus_commutes": ("vacuous" if self.modulus_commutes is None
                                     else self.modulus_commutes),
                "modulus_deviation": self.modulus_deviation,
                "modulus_witness": self.modulus_witness}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def check_modulus_hypothesis(h: HomogeneousFn, eps, lam: float,
                             tol: float = HYPOTHESIS_TOL) -> None:
    """Require ``h(eps_1 x, ..., eps_m x) == lam |x|`` for ``x`` in ``{+-1, +-pi}``."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (h.arity,):
        raise HypothesisError(f"need {h.arity} signs eps, got shape {eps.shape}")
    if lam == 0:
        raise HypothesisError("lambda must be nonzero")
    for x in (1.0, -1.0, np.pi, -np.pi):
        val = h(eps * x)
        if abs(val - lam * abs(x)) > tol:
            raise HypothesisError(
                f"hypothesis unmet: {h.name}(eps*{x:g}) = {val!r}, expected {lam * abs(x)!r}")


def check_converse(S: LinearMapRep, h: HomogeneousFn, eps, lam: float,
                   trials: int = 100, seed: int = 0,
                   tol: float = PRESERVATION_TOL) -> ConverseReport:
    """If ``S`` preserves ``h``, check that it also commutes with the modulus.

    Requires ``h(eps x) = lam |x|`` on the diagonal; then
    ``|S x| = h(eps S x) / lam = S h(eps x) / lam = S|x|``.
    """
    check_modulus_hypothesis(h, eps, lam)
    pres = check_preservation(S, h, trials, seed, tol)
    if not pres.passed:
        return ConverseReport(h.name, pres, None, None)
    rng = np.random.default_rng(seed + 1)
    worst, witness = 0.0, None
    for trial in range(trials):
        a = Element(S.source, rng.normal(size=S.source.size))
        d = np.abs(abs(S(a)).values - S(abs(a)).values)
        k = int(np.argmax(d))
        if d[k] > worst or witness is None:
            worst = float(d[k])
            witness = {"trial": trial, "target_point": _jsonable(S.target.points[k]),
                       "input": a.values.tolist(), "deviation": worst}
    ok = worst <= tol
    return ConverseReport(h.name, pres, ok, worst, None if ok else witness)


def _jsonable(label):
    return label if isinstance(label, (int, float, str)) else str(label)
