"""Rewriting lattice expressions into inf-of-sups of linear combinations.

Every element of the vector lattice generated by some atoms can be written
as ``inf_j sup_l u_{j,l}`` with each ``u_{j,l}`` a linear combination of the
atoms.  :func:`normalize` computes such a form by pushing scalars and sums
through ``sup``/``inf`` and distributing ``sup`` over ``inf``.  Generators
and Apply nodes are atoms; the arguments of an Apply node are left alone.

Internally a form is a set of *sup-sets* (the inf-layer), a sup-set is a
frozenset of *combos*, and a combo is a sorted tuple of
``(atom_index, coefficient)`` pairs with zero coefficients dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from ..errors import ExpressionTooLargeError
from ..lattice import Element
from .expr import Add, Apply, Expr, Gen, Inf, Scale, Sup, eval_expr

MAX_NODES = 10 ** 6


@dataclass(frozen=True)
class InfSupForm:
    """``inf_j sup_l sum_k c_{j,l,k} atoms[k]``.

    Attributes:
        atoms: the Generator and Apply nodes the combinations refer to.
        terms: inf-layer of sup-layers; each linear combination is a tuple
            of ``(atom_index, coefficient)`` pairs.  An empty combination
            stands for zero.
    """

    atoms: tuple
    terms: tuple

    @property
    def size(self) -> int:
        return sum(len(sup_layer) for sup_layer in self.terms)

    def coefficient_rows(self) -> list:
        """Terms with each combination expanded to a dense coefficient list."""
        n = len(self.atoms)
        out = []
        for sup_layer in self.terms:
            rows = []
            for combo in sup_layer:
                row = [0.0] * n
                for k, c in combo:
                    row[k] = c
                rows.append(row)
            out.append(rows)
        return out

    def evaluate(self, assignment: Sequence[Element]) -> Element:
        memo: dict = {}
        atom_vals = np.stack([eval_expr(a, assignment, memo).values for a in self.atoms]) \
            if self.atoms else None
        lattice = assignment[0].lattice
        inf = None
        for sup_layer in self.terms:
            sup = None
            for combo in sup_layer:
                v = np.zeros(lattice.size)
                for k, c in combo:
                    v = v + c * atom_vals[k]
                sup = v if sup is None else np.maximum(sup, v)
            inf = sup if inf is None else np.minimum(inf, sup)
        return Element(lattice, inf)

    def to_expr(self) -> Expr:
        """An expression tree with the same value, built from the form."""
        def combo_expr(combo):
            if not combo:
                return Scale(0.0, self.atoms[0]) if self.atoms else Scale(0.0, Gen(0))
            parts = [a if c == 1.0 else Scale(c, a)
                     for a, c in ((self.atoms[k], c) for k, c in combo)]
            out = parts[0]
            for p in parts[1:]:
                out = Add(out, p)
            return out

        def fold(items, node):
            out = items[0]
            for x in items[1:]:
                out = node(out, x)
            return out

        sups = [fold([combo_expr(c) for c in layer], Sup) for layer in self.terms]
        return fold(sups, Inf)


def _combo_add(a: tuple, b: tuple) -> tuple:
    acc = dict(a)
    for k, c in b:
        acc[k] = acc.get(k, 0.0) + c
    return tuple(sorted((k, c) for k, c in acc.items() if c != 0.0))


def _combo_scale(a: tuple, c: float) -> tuple:
    if c == 0.0:
        return ()
    return tuple((k, c * v) for k, v in a)


def _guard(form: frozenset) -> frozenset:
    if sum(len(s) for s in form) > MAX_NODES:
        raise ExpressionTooLargeError("expression too large")
    return form


def _absorb(form) -> frozenset:
    """Drop sup-sets that contain another sup-set (they are redundant in the inf)."""
    layers = sorted(set(form), key=len)
    kept = []
    for s in layers:
        if not any(k <= s for k in kept):
            kept.append(s)
    return _guard(frozenset(kept))


def _product_size(groups) -> int:
    n = 1
    for g in groups:
        n *= len(g)
        if n > MAX_NODES:
            raise ExpressionTooLargeError("expression too large")
    return n


def _negate(form: frozenset) -> frozenset:
    # -(inf_j sup_l u) = sup_j inf_l (-u) = inf over choices phi of sup_j -u_{j,phi(j)}
    layers = list(form)
    _product_size(layers)
    out = set()
    for choice in product(*layers):
        out.add(frozenset(_combo_scale(u, -1.0) for u in choice))
    return _absorb(out)


def _add(f: frozenset, g: frozenset) -> frozenset:
    _product_size([f, g])
    out = set()
    for a in f:
        for b in g:
            if len(a) * len(b) > MAX_NODES:
                raise ExpressionTooLargeError("expression too large")
            out.add(frozenset(_combo_add(u, v) for u in a for v in b))
    return _absorb(out)


def _sup(f: frozenset, g: frozenset) -> frozenset:
    _product_size([f, g])
    return _absorb({a | b for a in f for b in g})


def _inf(f: frozenset, g: frozenset) -> frozenset:
    return _absorb(f | g)


class _Normalizer:
    def __init__(self):
        self.atoms: list = []
        self.index: dict = {}
        self.memo: dict = {}

    def atom(self, e: Expr) -> frozenset:
        k = self.index.get(e)
        if k is None:
            k = self.index[e] = len(self.atoms)
            self.atoms.append(e)
        return frozenset([frozenset([((k, 1.0),)])])

    def run(self, e: Expr) -> frozenset:
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        if isinstance(e, (Gen, Apply)):
            out = self.atom(e)
        elif isinstance(e, Scale):
            inner = self.run(e.arg)
            if e.coef >= 0:
                out = frozenset(frozenset(_combo_scale(u, e.coef) for u in s) for s in inner)
                out = _absorb(out)
            else:
                out = _negate(frozenset(
                    frozenset(_combo_scale(u, -e.coef) for u in s) for s in inner))
        elif isinstance(e, Add):
            out = _add(self.run(e.left), self.run(e.right))
        elif isinstance(e, Sup):
            out = _sup(self.run(e.left), self.run(e.right))
        elif isinstance(e, Inf):
            out = _inf(self.run(e.left), self.run(e.right))
        else:
            raise TypeError(f"not an expression node: {e!r}")
        self.memo[e] = out
        return out


def _combo_key(combo):
    return (len(combo), combo)


def normalize(e: Expr) -> InfSupForm:
    """Rewrite ``e`` as an inf of sups of linear combinations of atoms.

    Raises:
        ExpressionTooLargeError: the form would exceed 10**6 combinations.
    """
    nz = _Normalizer()
    form = nz.run(e)
    # deterministic order for printing and comparison
    layers = [tuple(sorted(s, key=_combo_key)) for s in form]
    layers.sort(key=lambda layer: (len(layer), [_combo_key(c) for c in layer]))
    return InfSupForm(atoms=tuple(nz.atoms), terms=tuple(layers))
