"""Expression trees over lattice generators.

Nodes are immutable and hashable, so they can be shared between tower
levels and used as set members.  Python operators build nodes:
``c * e`` scales, ``e1 + e2`` adds, ``e1 - e2`` adds a negated copy,
``e1 | e2`` is the supremum and ``e1 & e2`` the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..calculus import pointwise_apply
from ..lattice import Element, common_lattice
from ..names import parse_mean_spec


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __post_init__(self):
        self._validate()
        key = (type(self).__name__,) + tuple(getattr(self, f) for f in self._fields)
        object.__setattr__(self, "_hash", hash(key))
        depth = 1 + max((k.depth for k in self.children()), default=0)
        object.__setattr__(self, "depth", depth)

    def _validate(self):
        pass

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self) or other._hash != self._hash:
            return False
        return all(getattr(self, f) == getattr(other, f) for f in self._fields)

    def __ne__(self, other):
        return not self == other

    def children(self) -> tuple:
        return ()

    def __add__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return Add(self, other)

    def __sub__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return Add(self, Scale(-1.0, other))

    def __neg__(self):
        return Scale(-1.0, self)

    def __rmul__(self, c):
        if isinstance(c, Expr):
            return NotImplemented
        return Scale(float(c), self)

    def __or__(self, other):
        return Sup(self, other)

    def __and__(self, other):
        return Inf(self, other)

    def __str__(self):
        from ..parsing import format_expr
        return format_expr(self)


def _freeze(cls):
    """Frozen dataclass whose hash and depth are computed once at construction."""
    cls = dataclass(frozen=True, eq=False, repr=True)(cls)
    names = tuple(f.name for f in cls.__dataclass_fields__.values() if f.compare)
    cls._fields = names
    return cls


@_freeze
class Gen(Expr):
    index: int
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def _validate(self):
        if isinstance(self.index, bool) or int(self.index) != self.index or self.index < 0:
            raise ValueError("generator index must be a nonnegative integer")
        object.__setattr__(self, "index", int(self.index))


@_freeze
class Scale(Expr):
    coef: float
    arg: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def _validate(self):
        c = float(self.coef)
        if not np.isfinite(c):
            raise ValueError("scale factor must be finite")
        object.__setattr__(self, "coef", c)

    def children(self):
        return (self.arg,)


@_freeze
class Add(Expr):
    left: Expr
    right: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def children(self):
        return (self.left, self.right)


@_freeze
class Sup(Expr):
    left: Expr
    right: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def children(self):
        return (self.left, self.right)


@_freeze
class Inf(Expr):
    left: Expr
    right: Expr
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def children(self):
        return (self.left, self.right)


@_freeze
class Apply(Expr):
    """``h(args...)`` for a named homogeneous function ``h``.

    The name is resolved on construction and stored in canonical form, so
    ``Apply("mu:2.0,4", ...)`` and ``Apply("mu:2,4", ...)`` are equal.
    """

    name: str
    args: tuple
    _hash: int = field(default=0, init=False, repr=False, compare=False)
    depth: int = field(default=1, init=False, repr=False, compare=False)

    def _validate(self):
        h = parse_mean_spec(self.name)
        args = tuple(self.args)
        if len(args) != h.arity:
            raise ValueError(
                f"{h.name} takes {h.arity} arguments, got {len(args)}")
        if not all(isinstance(a, Expr) for a in args):
            raise TypeError("Apply arguments must be expressions")
        object.__setattr__(self, "name", h.name)
        object.__setattr__(self, "args", args)

    @property
    def fn(self):
        return parse_mean_spec(self.name)

    def children(self):
        return self.args


def max_generator(e: Expr) -> int:
    """Largest generator index used in ``e``."""
    best, stack, seen = -1, [e], set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Gen):
            best = max(best, node.index)
        stack.extend(node.children())
    return best


def eval_expr(e: Expr, assignment: Sequence[Element], memo: dict = None) -> Element:
    """Evaluate ``e`` with generator ``i`` bound to ``assignment[i]``.

    ``memo`` may be shared across calls with the same assignment to reuse
    the values of common subtrees.
    """
    assignment = list(assignment)
    need = max_generator(e) + 1
    if len(assignment) < need:
        raise ValueError(
            f"expression uses {need} generators, assignment has {len(assignment)}")
    if assignment:
        common_lattice(assignment)
    memo = {} if memo is None else memo
    return _eval(e, assignment, memo)


def _eval(e, gens, memo):
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Gen):
        out = gens[e.index]
    elif isinstance(e, Scale):
        out = e.coef * _eval(e.arg, gens, memo)
    elif isinstance(e, Add):
        out = _eval(e.left, gens, memo) + _eval(e.right, gens, memo)
    elif isinstance(e, Sup):
        out = _eval(e.left, gens, memo) | _eval(e.right, gens, memo)
    elif isinstance(e, Inf):
        out = _eval(e.left, gens, memo) & _eval(e.right, gens, memo)
    elif isinstance(e, Apply):
        out = pointwise_apply(e.fn, [_eval(a, gens, memo) for a in e.args])
    else:
        raise TypeError(f"not an expression node: {e!r}")
    memo[e] = out
    return out


def random_expr(rng: np.random.Generator, n_generators: int, max_depth: int,
                dee: Sequence[str] = ("mu:2,4",), coef_choices=(-2.0, -1.0, -0.5, 0.5, 1.0, 3.0)) -> Expr:
    """A random expression of depth at most ``max_depth``.

    Scale factors are drawn from ``coef_choices`` so that test expressions
    stay well scaled; Apply nodes pick their function from ``dee``.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if max_depth == 1 or rng.random() < 0.2:
        return Gen(int(rng.integers(n_generators)))
    kinds = ["scale", "add", "sup", "inf"] + (["apply"] if dee else [])
    kind = kinds[int(rng.integers(len(kinds)))]
    sub = lambda: random_expr(rng, n_generators, max_depth - 1, dee, coef_choices)
    if kind == "scale":
        return Scale(coef_choices[int(rng.integers(len(coef_choices)))], sub())
    if kind == "add":
        return Add(sub(), sub())
    if kind == "sup":
        return Sup(sub(), sub())
    if kind == "inf":
        return Inf(sub(), sub())
    name = dee[int(rng.integers(len(dee)))]
    return Apply(name, tuple(sub() for _ in range(parse_mean_spec(name).arity)))
