"""Certificates that a piecewise-linear seed lattice is not closed under ``h``.

Seeds are piecewise-linear functions on a finite grid of ``[0, 1]`` with
breakpoints at given knots.  Lattice operations keep functions piecewise
linear but may add kinks anywhere, and a kink shows up in at most two
consecutive second differences.  Curvature, by contrast, makes every second
difference inside a segment nonzero.  So ``b = h(seeds)`` is certified to
lie outside the lattice when some knot segment holds a run of at least
:data:`MIN_RUN` consecutive second differences above the threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..calculus import pointwise_apply
from ..errors import HypothesisError
from ..homogeneous import HomogeneousFn
from ..lattice import Element, common_lattice

NOT_COMPLETE = "NOT-h-COMPLETE"
INCONCLUSIVE = "INCONCLUSIVE"
MIN_RUN = 3


@dataclass(frozen=True)
class CompletenessCertificate:
    verdict: str
    function: str
    threshold: float
    scale: float
    max_second_difference: float
    knots: tuple
    grid_size: int
    witness: Optional[dict] = None
    segments: tuple = field(default=(), repr=False)

    @property
    def not_complete(self) -> bool:
        return self.verdict == NOT_COMPLETE

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "function": self.function,
                "threshold": self.threshold, "scale": self.scale,
                "max_second_difference": self.max_second_difference,
                "knots": list(self.knots), "grid_size": self.grid_size,
                "witness": self.witness, "segments": [list(s) for s in self.segments]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def second_differences(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``y[i-1] - 2 y[i] + y[i+1]`` generalized to uneven spacing.

    Twice the gap between the chord through the neighbours and ``y[i]``;
    on an even grid this is the usual second difference.
    """
    left, right = x[1:-1] - x[:-2], x[2:] - x[1:-1]
    chord = (right * y[:-2] + left * y[2:]) / (left + right)
    return 2.0 * (chord - y[1:-1])


def _segments(x: np.ndarray, knots: Sequence[float]) -> list:
    """Index ranges ``[i0, i1]`` of grid points inside each knot segment."""
    cuts = sorted(set(float(k) for k in knots) | {float(x[0]), float(x[-1])})
    if cuts[0] < x[0] or cuts[-1] > x[-1]:
        raise ValueError("knots must lie inside the grid range")
    out = []
    for a, b in zip(cuts, cuts[1:]):
        idx = np.flatnonzero((x >= a) & (x <= b))
        if idx.size < 3:
            raise ValueError(
                f"grid is not finer than the knots: segment [{a:g}, {b:g}] holds "
                f"{idx.size} grid points, need at least 3")
        out.append((a, b, int(idx[0]), int(idx[-1])))
    return out


def _runs(mask: np.ndarray) -> list:
    """(start, stop) of maximal True runs."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[::2], edges[1::2]))


def certify_not_h_complete(seedfns: Sequence[Element], h: HomogeneousFn,
                           knots: Sequence[float], tol: float = 1e-6,
                           seed_tol: float = 1e-12) -> CompletenessCertificate:
    """Look for a curvature witness showing ``h(seedfns)`` leaves the seed class.

    Args:
        seedfns: ``h.arity`` elements on one lattice with numeric, increasing
            labels; each must be linear between knots.
        h: the function to apply.
        knots: breakpoints of the seed class; the grid ends are added.
        tol: relative threshold; a second difference counts when it exceeds
            ``tol * scale`` with ``scale = max|b|`` (1 if ``b`` vanishes).
        seed_tol: relative tolerance for checking the seeds themselves.

    Raises:
        ValueError: grid not finer than the knots, or labels not increasing.
        HypothesisError: a seed is not linear between knots.
    """
    lattice = common_lattice(list(seedfns))
    x = lattice.abscissae()
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid labels must be strictly increasing")
    segs = _segments(x, knots)
    for k, s in enumerate(seedfns):
        s_scale = max(float(np.max(np.abs(s.values))), 1.0)
        for a, b, i0, i1 in segs:
            d2 = second_differences(x[i0:i1 + 1], s.values[i0:i1 + 1])
            if np.max(np.abs(d2)) > seed_tol * s_scale:
                raise HypothesisError(
                    f"seed {k} is not linear on the knot segment [{a:g}, {b:g}]")
    b_vals = pointwise_apply(h, list(seedfns)).values
    scale = float(np.max(np.abs(b_vals)))
    scale = scale if scale > 0 else 1.0
    thr = tol * scale
    best, witness, seg_report = 0.0, None, []
    for a, b, i0, i1 in segs:
        d2 = second_differences(x[i0:i1 + 1], b_vals[i0:i1 + 1])
        mag = np.abs(d2)
        seg_max = float(mag.max())
        best = max(best, seg_max)
        seg_report.append((a, b, seg_max))
        for start, stop in _runs(mag > thr):
            if stop - start < MIN_RUN:
                continue
            j = start + int(np.argmax(mag[start:stop]))
            if witness is None or mag[j] > abs(witness["second_difference"]):
                i = i0 + 1 + j
                witness = {"x": float(x[i]), "index": int(i),
                           "second_difference": float(d2[j]),
                           "values": [float(v) for v in b_vals[i - 1:i + 2]],
                           "neighbours": [float(v) for v in x[i - 1:i + 2]],
                           "run_length": int(stop - start),
                           "segment": [a, b]}
    verdict = NOT_COMPLETE if witness is not None else INCONCLUSIVE
    return CompletenessCertificate(verdict, h.name, thr, scale, best,
                                   tuple(float(k) for k in knots), lattice.size,
                                   witness, tuple(seg_report))
