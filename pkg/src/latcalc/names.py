"""String names for homogeneous functions.

Grammar::

    NAME := "mu:" R "," S | "nu:" R "," S | "norm:" M | "geo:" M | "pow:" P ["," M]

with decimal ``R, S`` and integer ``M, P``.  Names added through
:func:`latcalc.homogeneous.register` are looked up before the grammar.
"""

from __future__ import annotations

import re
from functools import lru_cache

from .errors import ParseError
from .homogeneous import (HomogeneousFn, euclidean_norm, gini, pth_power_mean,
                          registered, scaled_geometric_mean, stolarsky)

_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")

# family -> (parameter kinds, constructor); "d" decimal, "i" integer
_FAMILIES = {
    "mu": (("d", "d"), stolarsky),
    "nu": (("d", "d"), gini),
    "norm": (("i",), euclidean_norm),
    "geo": (("i",), scaled_geometric_mean),
    "pow": (("i", "i?"), pth_power_mean),
}

# characters that can appear inside a name; expression parsers use this to
# find where a name ends
NAME_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                       "0123456789_:,.+-")


def _scan_params(s: str, start: int, kinds: tuple) -> list:
    vals, pos = [], start
    for k, kind in enumerate(kinds):
        optional = kind.endswith("?")
        if k > 0:
            if pos == len(s) and optional:
                break
            if pos >= len(s) or s[pos] != ",":
                raise ParseError("expected ','", pos)
            pos += 1
        pat = _DECIMAL if kind.startswith("d") else _INTEGER
        m = pat.match(s, pos)
        if not m:
            what = "a decimal number" if kind.startswith("d") else "an integer"
            raise ParseError(f"expected {what}", pos)
        vals.append(float(m.group()) if kind.startswith("d") else int(m.group()))
        pos = m.end()
    if pos != len(s):
        raise ParseError(f"unexpected {s[pos]!r}", pos)
    return vals


def parse_mean_spec(s: str) -> HomogeneousFn:
    """Resolve a function name such as ``"mu:2,4"`` or ``"pow:3,2"``.

    Raises:
        ParseError: malformed text, with the offending offset.
        ValueError: well-formed text with invalid parameters (the
            constructor's own message, e.g. for ``"mu:3,3"``).
    """
    if not isinstance(s, str):
        raise TypeError("function name must be a string")
    custom = registered(s)
    if custom is not None:
        return custom
    return _parse_builtin(s)


@lru_cache(maxsize=256)
def _parse_builtin(s: str) -> HomogeneousFn:
    colon = s.find(":")
    if colon < 0:
        pos = re.match(r"[A-Za-z]*", s).end()
        raise ParseError(f"expected FAMILY:PARAMS in {s!r}", pos)
    family = s[:colon]
    if family not in _FAMILIES:
        raise ParseError(
            f"unknown family {family!r} (expected one of {', '.join(_FAMILIES)})", 0)
    kinds, ctor = _FAMILIES[family]
    return ctor(*_scan_params(s, colon + 1, kinds))
