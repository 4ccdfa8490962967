"""Solver-agnostic linear model and CPLEX-LP text export.

The model keeps variables and constraints in insertion order, so writing the
same model twice yields byte-identical files.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

CONTINUOUS = "continuous"
BINARY = "binary"

LE, GE, EQ = "<=", ">=", "="

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple  # ((var_name, coef), ...)
    sense: str
    rhs: float


@dataclass
class MipModel:
    """Variables, linear constraints and a linear minimisation objective."""

    name: str = "model"
    variables: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    objective: dict = field(default_factory=dict)
    objective_constant: float = 0.0
    metadata: dict = field(default_factory=dict)
    start: dict = field(default_factory=dict)

    def add_var(self, name: str, kind: str = CONTINUOUS, lower: float = 0.0, upper: float = math.inf) -> str:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name!r}")
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound above upper bound")
        self.variables[name] = Variable(name, kind, float(lower), float(upper))
        return name

    def add_constraint(self, name: str, terms, sense: str, rhs: float) -> None:
        if name in self.constraints:
            raise ValueError(f"duplicate constraint {name!r}")
        if sense not in (LE, GE, EQ):
            raise ValueError(f"unknown sense {sense!r}")
        merged: dict = {}
        for var, coef in terms:
            if var not in self.variables:
                raise KeyError(f"constraint {name!r} references undeclared variable {var!r}")
            merged[var] = merged.get(var, 0.0) + float(coef)
        cleaned = tuple((v, c) for v, c in merged.items() if c != 0.0)
        self.constraints[name] = Constraint(name, cleaned, sense, float(rhs))

    def set_objective(self, terms, constant: float = 0.0) -> None:
        obj: dict = {}
        for var, coef in terms:
            if var not in self.variables:
                raise KeyError(f"objective references undeclared variable {var!r}")
            obj[var] = obj.get(var, 0.0) + float(coef)
        self.objective = {v: c for v, c in obj.items() if c != 0.0}
        self.objective_constant = float(constant)

    @property
    def n_binary(self) -> int:
        return sum(v.kind == BINARY for v in self.variables.values())

    @property
    def n_continuous(self) -> int:
        return sum(v.kind == CONTINUOUS for v in self.variables.values())

    def objective_value(self, assignment: dict) -> float:
        return self.objective_constant + math.fsum(c * assignment.get(v, 0.0) for v, c in self.objective.items())

    def violations(self, assignment: dict, tol: float = 1e-7) -> list[str]:
        """Names of bounds/constraints violated by ``assignment`` (missing vars read as 0)."""
        bad = []
        for var in self.variables.values():
            x = assignment.get(var.name, 0.0)
            if x < var.lower - tol or x > var.upper + tol:
                bad.append(f"bound:{var.name}")
            if var.kind == BINARY and min(abs(x), abs(x - 1)) > tol:
                bad.append(f"integrality:{var.name}")
        for con in self.constraints.values():
            lhs = math.fsum(c * assignment.get(v, 0.0) for v, c in con.terms)
            scale = tol * max(1.0, abs(con.rhs))
            if con.sense == LE and lhs > con.rhs + scale:
                bad.append(con.name)
            elif con.sense == GE and lhs < con.rhs - scale:
                bad.append(con.name)
            elif con.sense == EQ and abs(lhs - con.rhs) > scale:
                bad.append(con.name)
        return bad


def _num(x: float) -> str:
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _expr_lines(terms, width: int = 78) -> list[str]:
    """Render ``c1 x1 + c2 x2 ...`` wrapped into lines of at most ``width`` chars."""
    pieces = []
    for k, (var, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1.0 else f"{_num(mag)} {var}"
        if k == 0:
            pieces.append(f"- {body}" if sign == "-" else body)
        else:
            pieces.append(f"{sign} {body}")
    lines, cur = [], ""
    for piece in pieces:
        if cur and len(cur) + 1 + len(piece) > width:
            lines.append(cur)
            cur = piece
        else:
            cur = f"{cur} {piece}" if cur else piece
    if cur:
        lines.append(cur)
    return lines


def to_lp_string(model: MipModel) -> str:
    """CPLEX LP format: objective, constraint rows, bounds, binaries, End."""
    out = [f"\\ {model.name}"]
    for key in sorted(model.metadata):
        out.append(f"\\ {key} = {model.metadata[key]}")
    out.append("Minimize")
    obj_terms = list(model.objective.items())
    if obj_terms:
        lines = _expr_lines(obj_terms)
        out.append(f" obj: {lines[0]}")
        out.extend(f"   {ln}" for ln in lines[1:])
    elif model.variables:
        out.append(f" obj: 0 {next(iter(model.variables))}")
    else:
        out.append(" obj:")
    if model.constraints:
        out.append("Subject To")
        for con in model.constraints.values():
            lines = _expr_lines(con.terms) if con.terms else [f"0 {next(iter(model.variables))}"]
            lines[-1] = f"{lines[-1]} {con.sense} {_num(con.rhs)}"
            out.append(f" {con.name}: {lines[0]}")
            out.extend(f"   {ln}" for ln in lines[1:])
    bounds = []
    for var in model.variables.values():
        if var.kind == BINARY:
            continue
        lo, up = var.lower, var.upper
        if lo == -math.inf and up == math.inf:
            bounds.append(f" {var.name} free")
        elif lo == 0.0 and up == math.inf:
            continue
        elif up == math.inf:
            bounds.append(f" {var.name} >= {_num(lo)}")
        else:
            bounds.append(f" {_num(lo)} <= {var.name} <= {_num(up)}")
    if bounds:
        out.append("Bounds")
        out.extend(bounds)
    binaries = [v.name for v in model.variables.values() if v.kind == BINARY]
    if binaries:
        out.append("Binaries")
        for lo in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[lo:lo + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def write_exchange_file(model: MipModel, path) -> Path:
    path = Path(path)
    path.write_text(to_lp_string(model))
    return path


def write_start_file(model: MipModel, path) -> Path | None:
    """Write the optional start hint as ``name value`` lines; None if no hint."""
    if not model.start:
        return None
    path = Path(path)
    path.write_text("".join(f"{name} {_num(val)}\n" for name, val in model.start.items()))
    return path


def parse_solution_text(text: str) -> dict[str, float]:
    """Read ``name value`` or ``name=value`` pairs; other lines are ignored."""
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) < 2:
            continue
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            continue
    return values


def read_solution_file(path) -> dict[str, float]:
    return parse_solution_text(Path(path).read_text())
