"""The tower ``E_1 ⊂ E_2 ⊂ ...`` of lattices closed step by step under a set of functions.

``E_{n+1}`` is the vector lattice generated by ``E_n`` and every
``h(a_1, ..., a_m)`` with ``h`` in the function set and ``a_k`` in ``E_n``.
Each level is infinite, so a :class:`Tower` stores a reproducible finite
sample of it: all Apply nodes over the previous stored level (up to a
budget) plus a fixed pattern of sups, infs and differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from ..calculus import pointwise_apply
from ..lattice import Element, common_lattice
from ..names import parse_mean_spec
from .expr import Add, Apply, Gen, Inf, Scale, Sup, eval_expr


@dataclass(frozen=True, eq=False)
class Tower:
    """A seed lattice, a function set and stored samples of each level.

    Attributes:
        generators: seed elements; ``Gen(i)`` evaluates to ``generators[i]``.
        dee: canonical names of the functions the tower is closed under.
        levels: tuple of tuples of expressions; ``levels[0]`` is the seed.
    """

    generators: tuple
    dee: tuple
    levels: tuple

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> tuple:
        """Stored expressions of ``E_n`` (1-based)."""
        if not 1 <= n <= len(self.levels):
            raise IndexError(f"tower has levels 1..{len(self.levels)}")
        return self.levels[n - 1]

    def images(self, n: int, assignment: Sequence[Element] = None) -> list:
        """Values of the level-``n`` expressions, by default at the seed."""
        gens = self.generators if assignment is None else assignment
        memo: dict = {}
        return [eval_expr(e, gens, memo) for e in self.level(n)]


def seed_tower(generators: Sequence[Element], dee: Sequence[str]) -> Tower:
    """Level 1 of the tower: the generators alone.

    Raises:
        ValueError: no generators, or an empty function set.
    """
    gens = tuple(generators)
    if not gens:
        raise ValueError("a tower needs at least one generator")
    common_lattice(list(gens))
    if not dee:
        raise ValueError("the function set must be nonempty")
    names = tuple(dict.fromkeys(parse_mean_spec(d).name for d in dee))
    return Tower(gens, names, (tuple(Gen(i) for i in range(len(gens))),))


def closure_step(t: Tower, budget: int = 1000) -> Tower:
    """Add one level to the tower.

    New Apply nodes come first, enumerated by function (in ``t.dee`` order)
    and then by child tuple in lexicographic order over the previous level;
    at most ``budget`` of them are created.  Then, walking the list of
    previous expressions followed by the new Apply nodes, each adjacent pair
    ``(x, y)`` contributes ``sup(x, y)``, ``inf(x, y)`` and ``x - y``, again
    at most ``budget`` in total.  Duplicates are dropped.

    Raises:
        ValueError: ``budget < 1``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    prev = t.levels[-1]
    applies = []
    for name in t.dee:
        arity = parse_mean_spec(name).arity
        for children in product(prev, repeat=arity):
            if len(applies) >= budget:
                break
            applies.append(Apply(name, children))
    pool = list(prev) + applies
    combos = []
    for x, y in zip(pool, pool[1:]):
        for node in (Sup(x, y), Inf(x, y), Add(x, Scale(-1.0, y))):
            if len(combos) < budget:
                combos.append(node)
    level = tuple(dict.fromkeys(pool + combos))
    return Tower(t.generators, t.dee, t.levels + (level,))


def build_tower(generators: Sequence[Element], dee: Sequence[str], levels: int,
                budget: int = 1000) -> Tower:
    t = seed_tower(generators, dee)
    for _ in range(levels - 1):
        t = closure_step(t, budget)
    return t


def check_closed(t: Tower, assignment: Sequence[Element] = None) -> dict:
    """Verify closure under the function set on stored elements.

    For every level ``n < depth``, every ``h`` and every tuple of level-``n``
    expressions whose Apply node was enumerated within budget, the node
    must be stored at level ``n+1`` and evaluate exactly to ``h`` of the
    children's values.  Also checks that levels are nested.

    Returns:
        A report with ``closed`` (bool), counts and the first failure.
    """
    gens = t.generators if assignment is None else assignment
    memo: dict = {}
    checked, failure = 0, None
    for n in range(1, t.depth):
        below, above = t.level(n), set(t.level(n + 1))
        if not set(below) <= above:
            failure = failure or {"level": n, "reason": "level not contained in the next"}
        for name in t.dee:
            h = parse_mean_spec(name)
            for children in product(below, repeat=h.arity):
                node = Apply(name, children)
                if node not in above:
                    # enumeration stopped at the budget
                    continue
                got = eval_expr(node, gens, memo).values
                want = pointwise_apply(h, [eval_expr(c, gens, memo) for c in children]).values
                checked += 1
                if not np.array_equal(got, want) and failure is None:
                    failure = {"level": n + 1, "node": str(node), "reason": "value mismatch",
                               "deviation": float(np.max(np.abs(got - want)))}
    return {"closed": failure is None, "checked": checked, "failure": failure}
