"""Command-line front end.

Every run is determined by its :class:`RunConfig`; when no input elements
are given, they are drawn from ``numpy.random.default_rng(seed)``.  Reports
go to ``--out`` or stdout.  Exit status is 0 on success, 1 when a check
fails, and 2 on usage or I/O errors, which print a single ``ERROR:`` line
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .calculus import (boxplus, boxtimes, complex_modulus, pointwise_apply,
                       sigma_sequence, support_formula)
from .completion import (LinearMapRep, build_tower, certify_not_h_complete,
                         check_closed, check_converse, check_preservation,
                         eval_expr, max_generator)
from .lattice import Element, GridLattice
from .names import parse_mean_spec
from .parsing import parse_expr

COMMANDS = ("eval", "converge", "boxplus", "boxtimes", "modulus", "closure",
            "certify", "test-hom")
_JSON_FIRST = {"closure", "certify", "test-hom"}


class UsageError(Exception):
    """Bad flags or inputs; reported with exit status 2."""


@dataclass
class RunConfig:
    command: str
    grid_size: int = 64
    mean_spec: list = field(default_factory=list)
    expr: Optional[str] = None
    level: int = 3
    density: int = 12
    N: int = 10
    K: Optional[int] = None
    m: Optional[int] = None
    seed: int = 42
    output_path: Optional[str] = None
    format: Optional[str] = None
    tol: Optional[float] = None
    threads: int = 1
    values: list = field(default_factory=list)
    values_files: list = field(default_factory=list)
    budget: int = 1000
    knots: Optional[str] = None
    matrix: Optional[str] = None
    trials: int = 100
    eps: Optional[str] = None
    lam: float = 1.0
    method: str = "pointwise"
    timing: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.grid_size < 1:
            raise UsageError("--grid must be >= 1")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.format not in (None, "csv", "json"):
            raise UsageError("--format must be csv or json")
        if isinstance(self.mean_spec, str):
            self.mean_spec = [self.mean_spec]

    @property
    def fmt(self) -> str:
        return self.format or ("json" if self.command in _JSON_FIRST else "csv")


# --- inputs ---------------------------------------------------------------

def _parse_floats(text: str, what: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _load_file(path: str) -> list:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        data = json.loads(text)
        items = data if isinstance(data, list) else [data]
        return [Element.from_dict(d) for d in items]
    return [Element.from_csv(text)]


def _inputs(cfg: RunConfig) -> list:
    elems = []
    lattice = None
    for text in cfg.values:
        vals = _parse_floats(text, "--values")
        if lattice is None:
            lattice = GridLattice.indexed(len(vals))
        elems.append(Element(lattice, vals) if len(vals) == lattice.size else None)
        if elems[-1] is None:
            raise UsageError("all --values must have the same length")
    for path in cfg.values_files:
        elems.extend(_load_file(path))
    return elems


def _random_inputs(cfg: RunConfig, count: int, positive: bool) -> list:
    rng = np.random.default_rng(cfg.seed)
    lattice = GridLattice.uniform(cfg.grid_size)
    draw = (lambda: rng.uniform(0.0, 1.0, cfg.grid_size)) if positive \
        else (lambda: rng.normal(size=cfg.grid_size))
    return [Element(lattice, draw()) for _ in range(count)]


def _one_mean(cfg: RunConfig):
    if len(cfg.mean_spec) != 1:
        raise UsageError(f"{cfg.command} needs exactly one --mean")
    return parse_mean_spec(cfg.mean_spec[0])


def _pair(cfg: RunConfig, positive: bool) -> list:
    elems = _inputs(cfg) or _random_inputs(cfg, 2, positive)
    if len(elems) != 2:
        raise UsageError(f"{cfg.command} needs exactly two input elements, got {len(elems)}")
    return elems


# --- output ---------------------------------------------------------------

def _csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _label(p):
    return p if isinstance(p, (int, float, str)) else str(p)


def _flatten(obj, prefix="") -> list:
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows.extend(_flatten(v, f"{prefix}{i}."))
    else:
        rows.append([prefix[:-1], obj])
    return rows


def _table(cfg: RunConfig, header: list, rows: list, meta: dict) -> str:
    if cfg.fmt == "csv":
        return _csv(header, rows)
    return _json({**meta, "rows": [dict(zip(header, r)) for r in rows]})


def _compare_report(cfg, name, result: Element, oracle: np.ndarray, meta: dict) -> str:
    err = np.abs(result.values - oracle)
    rows = [[_label(p), float(v), float(o), float(e)]
            for p, v, o, e in zip(result.lattice.points, result.values, oracle, err)]
    meta = {"command": cfg.command, **meta, "max_abs_error": float(err.max())}
    return _table(cfg, ["point", name, "oracle", "abs_error"], rows, meta)


# --- commands -------------------------------------------------------------

def _cmd_eval(cfg: RunConfig):
    if cfg.expr is not None:
        e = parse_expr(cfg.expr)
        elems = _inputs(cfg) or _random_inputs(cfg, max_generator(e) + 1, False)
        out = eval_expr(e, elems)
        meta = {"command": "eval", "expr": cfg.expr}
    else:
        h = _one_mean(cfg)
        elems = _inputs(cfg) or _random_inputs(cfg, h.arity, True)
        if cfg.method == "support":
            out = support_formula(h, elems, cfg.density)
        else:
            out = pointwise_apply(h, elems)
        meta = {"command": "eval", "mean": h.name, "method": cfg.method}
    rows = [[_label(p), float(v)] for p, v in zip(out.lattice.points, out.values)]
    return _table(cfg, ["point", "value"], rows, meta), 0


def _cmd_converge(cfg: RunConfig):
    h = _one_mean(cfg)
    if cfg.m is not None and cfg.m != h.arity:
        raise UsageError(f"--m {cfg.m} does not match the arity {h.arity} of {h.name}")
    elems = _inputs(cfg) or _random_inputs(cfg, h.arity, True)
    trace = sigma_sequence(h, elems, cfg.N)
    if cfg.fmt == "csv":
        return trace.to_csv(timing=cfg.timing), 0
    rows = [r if cfg.timing else {k: v for k, v in r.items() if k != "wall_ms"}
            for r in trace.rows(timing=cfg.timing)]
    meta = {"command": "converge", "mean": h.name, "N": cfg.N, "monotone": trace.monotone}
    return _json({**meta, "rows": rows}), 0


def _cmd_boxplus(cfg: RunConfig):
    f, g = _pair(cfg, positive=False)
    K = cfg.K or 1024
    out = boxplus(f, g, K) if cfg.command == "boxplus" else complex_modulus(f, g, K)
    oracle = np.hypot(f.values, g.values)
    return _compare_report(cfg, cfg.command, out, oracle, {"K": K}), 0


def _cmd_boxtimes(cfg: RunConfig):
    f, g = _pair(cfg, positive=True)
    K = cfg.K or 2048
    out = boxtimes(f, g, K)
    oracle = np.sqrt(f.values * g.values)
    return _compare_report(cfg, "boxtimes", out, oracle, {"K": K}), 0


def _cmd_closure(cfg: RunConfig):
    if not cfg.mean_spec:
        raise UsageError("closure needs at least one --mean")
    gens = _inputs(cfg) or _random_inputs(cfg, cfg.m or 2, False)
    tower = build_tower(gens, cfg.mean_spec, cfg.level, cfg.budget)
    check = check_closed(tower)
    sizes = [len(level) for level in tower.levels]
    if cfg.fmt == "csv":
        rows = [[n + 1, s] for n, s in enumerate(sizes)]
        text = _csv(["level", "size"], rows)
    else:
        text = _json({"command": "closure", "functions": list(tower.dee),
                      "level_sizes": sizes, "budget": cfg.budget, **check})
    return text, 0 if check["closed"] else 1


def _cmd_certify(cfg: RunConfig):
    h = _one_mean(cfg)
    seeds = _inputs(cfg)
    if not seeds:
        lattice = GridLattice.uniform(cfg.grid_size)
        x = lattice.abscissae()
        seeds = [Element(lattice, x), Element(lattice, 1.0 - x)][:h.arity]
    knots = _parse_floats(cfg.knots, "--knots") if cfg.knots else [0.0, 1.0]
    cert = certify_not_h_complete(seeds, h, knots, tol=cfg.tol if cfg.tol is not None else 1e-6)
    d = cert.to_dict()
    if cfg.fmt == "csv":
        return _csv(["key", "value"], _flatten(d)), 0
    return _json(d), 0


def _load_matrix(text: str) -> np.ndarray:
    src = text
    if not text.lstrip().startswith("["):
        try:
            src = Path(text).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {text}: {exc.strerror or exc}") from None
    try:
        return np.array(json.loads(src), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError("--matrix must be a JSON list of rows or a path to one") from None


def _cmd_test_hom(cfg: RunConfig):
    if cfg.matrix is None:
        raise UsageError("test-hom needs --matrix")
    M = _load_matrix(cfg.matrix)
    if M.ndim != 2:
        raise UsageError("--matrix must be two-dimensional")
    T = LinearMapRep(M, GridLattice.indexed(M.shape[1]))
    h = _one_mean(cfg)
    tol = cfg.tol if cfg.tol is not None else 1e-9
    if cfg.eps is not None:
        rep = check_converse(T, h, _parse_floats(cfg.eps, "--eps"), cfg.lam,
                             cfg.trials, cfg.seed, tol)
        passed = rep.preserved.passed and rep.implication_holds
    else:
        rep = check_preservation(T, h, cfg.trials, cfg.seed, tol)
        passed = rep.passed
    d = {"command": "test-hom", "positive": T.positive, "homomorphism": T.homomorphism,
         **rep.to_dict()}
    text = _csv(["key", "value"], _flatten(d)) if cfg.fmt == "csv" else _json(d)
    return text, 0 if passed else 1


_DISPATCH = {
    "eval": _cmd_eval, "converge": _cmd_converge, "boxplus": _cmd_boxplus,
    "modulus": _cmd_boxplus, "boxtimes": _cmd_boxtimes, "closure": _cmd_closure,
    "certify": _cmd_certify, "test-hom": _cmd_test_hom,
}


def run(cfg: RunConfig) -> int:
    """Execute one command and write its report.

    Returns the exit status.  Usage and I/O problems raise
    :class:`UsageError`; :func:`main` turns them into status 2.
    """
    text, status = _DISPATCH[cfg.command](cfg)
    if cfg.output_path:
        try:
            Path(cfg.output_path).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {cfg.output_path}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)
    return status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="latcalc", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--grid", dest="grid_size", type=int, default=64,
                   help="grid size for generated inputs")
    p.add_argument("--mean", dest="mean_spec", action="append", default=[],
                   help="function name, e.g. mu:2,4 (repeat for closure)")
    p.add_argument("--expr", help="expression text for eval")
    p.add_argument("--level", type=int, default=3, help="tower levels for closure")
    p.add_argument("--density", type=int, default=12, help="gradient grid level")
    p.add_argument("--N", type=int, default=10, help="finest dyadic level for converge")
    p.add_argument("--K", type=int, default=None, help="angle or log-grid size")
    p.add_argument("--m", type=int, default=None, help="arity / number of generators")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", dest="output_path")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--tol", type=float)
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; results never depend on it")
    p.add_argument("--values", action="append", default=[],
                   help='an element as "1,2,3" (repeat for several)')
    p.add_argument("--values-file", dest="values_files", action="append", default=[],
                   help="element(s) in CSV or JSON form")
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--knots", help='comma-separated knots for certify (default "0,1")')
    p.add_argument("--map", "--matrix", dest="matrix",
                   help="JSON matrix (rows = target points) or path to one")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eps", help="signs for the converse check, e.g. 1,1")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--method", choices=("pointwise", "support"), default="pointwise")
    p.add_argument("--no-timing", dest="timing", action="store_false",
                   help="drop the wall_ms column from converge reports")
    return p


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        return run(RunConfig(**vars(ns)))
    except (UsageError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"ERROR: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
