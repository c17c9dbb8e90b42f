"""Brute-force ground truth over bounded boxes, plus the Skolem verification harness."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import formula as F
from .circuit import Circuit, CircuitBuilder
from .errors import ResourceError

ORACLE_POINTS = int(os.environ.get("PRESYNTH_ORACLE_POINTS", 10 ** 7))
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Box:
    """Inclusive integer range per variable."""
    ranges: Tuple[Tuple[str, int, int], ...]

    def __post_init__(self):
        for v, lo, hi in self.ranges:
            if lo > hi:
                raise ValueError(f"empty range for {v}: [{lo},{hi}]")

    @classmethod
    def of(cls, ranges: Mapping[str, Tuple[int, int]]) -> "Box":
        return cls(tuple((v, int(lo), int(hi)) for v, (lo, hi) in ranges.items()))

    @classmethod
    def uniform(cls, variables: Sequence[str], lo: int, hi: int) -> "Box":
        return cls(tuple((v, int(lo), int(hi)) for v in variables))

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _, _ in self.ranges)

    def range_of(self, v: str) -> Tuple[int, int]:
        for u, lo, hi in self.ranges:
            if u == v:
                return lo, hi
        raise KeyError(v)

    def restrict(self, variables: Sequence[str]) -> "Box":
        return Box(tuple((v, *self.range_of(v)) for v in variables))

    def __len__(self):
        n = 1
        for _, lo, hi in self.ranges:
            n *= hi - lo + 1
        return n

    def points(self):
        return itertools.product(*[range(lo, hi + 1) for _, lo, hi in self.ranges])

    def __str__(self):
        return " ".join(f"{v}=[{lo},{hi}]" for v, lo, hi in self.ranges) or "(empty)"


def orthant_key(y: Sequence[int]):
    """Sort key of the fixed well-order: orthant (sign bits, first var most
    significant, nonnegative = 0), then componentwise absolute values."""
    code = 0
    for v in y:
        code = (code << 1) | (v < 0)
    return (code, tuple(abs(v) for v in y))


def _grid(box: Box, ordered: bool = False) -> np.ndarray:
    if len(box) > ORACLE_POINTS:
        raise ResourceError(f"box has {len(box)} points, budget is {ORACLE_POINTS}")
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for _, lo, hi in box.ranges]
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    g = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    if ordered and g.shape[1]:
        code = np.zeros(len(g), dtype=np.int64)
        for j in range(g.shape[1]):
            code = (code << 1) | (g[:, j] < 0)
        keys = [np.abs(g[:, j]) for j in range(g.shape[1] - 1, -1, -1)] + [code]
        g = g[np.lexsort(keys)]
    return g


def bounded_exists(phi: F.FormulaLike, fixed: Mapping[str, int], free: Sequence[str],
                   box: Box) -> Optional[Tuple[int, ...]]:
    """Least witness for ``free`` (in the orthant well-order) inside ``box``, or None."""
    body = F.body_of(phi)
    Y = _grid(box.restrict(free), ordered=True)
    env = dict(fixed)
    for j, v in enumerate(free):
        env[v] = Y[:, j]
    mask = np.broadcast_to(F.eval_batch(body, env), (len(Y),))
    if not mask.any():
        return None
    return tuple(int(v) for v in Y[int(np.argmax(mask))])


def reference_skolem(phi: F.Spec, x: Sequence[int], box: Box) -> Tuple[int, ...]:
    """Canonical least witness within ``box``; the zero vector when there is none."""
    fixed = dict(zip(phi.inputs, x))
    w = bounded_exists(phi, fixed, phi.outputs, box)
    return w if w is not None else (0,) * len(phi.outputs)


@dataclass
class VerifyReport:
    points_checked: int
    failures: List[Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]]  # (x, witness, f(x))
    input_box: Box
    witness_box: Box
    satisfiable_points: int = 0
    note: str = "existence is only checked inside the witness box"

    @property
    def status(self) -> str:
        return "pass" if not self.failures else "fail"

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_text(self) -> str:
        lines = [f"status: {self.status}", f"points_checked: {self.points_checked}",
                 f"satisfiable_points: {self.satisfiable_points}",
                 f"input_box: {self.input_box}", f"witness_box: {self.witness_box}",
                 f"note: {self.note}"]
        for x, w, y in self.failures:
            lines.append(f"failure x={list(x)} witness={list(w)} output={list(y)}")
        return "\n".join(lines) + "\n"


def verify_skolem(phi: F.Spec, c: Circuit, input_box: Box, witness_box: Box,
                  max_failures: Optional[int] = None) -> VerifyReport:
    """Check phi(x, c(x)) at every x of input_box that has a witness in witness_box."""
    if c.n_inputs != len(phi.inputs):
        raise ValueError(f"circuit has {c.n_inputs} inputs, spec has {len(phi.inputs)}")
    if c.n_outputs != len(phi.outputs):
        raise ValueError(f"circuit has {c.n_outputs} outputs, spec has {len(phi.outputs)}")
    body = phi.body
    X = _grid(input_box.restrict(phi.inputs))
    Y = _grid(witness_box.restrict(phi.outputs), ordered=True)
    nx, ny = len(X), len(Y)
    if nx and phi.inputs:
        fx = np.stack([np.asarray(a, dtype=object) for a in c.eval_batch([X[:, j] for j in range(X.shape[1])])], axis=1)
    else:
        fx = np.array([c([]) for _ in range(nx)], dtype=object).reshape(nx, len(phi.outputs))
    env = {v: X[:, j] for j, v in enumerate(phi.inputs)}
    env.update({v: fx[:, j] for j, v in enumerate(phi.outputs)})
    good = np.broadcast_to(F.eval_batch(body, env), (nx,))
    failures = []
    sat_count = 0
    rows = max(1, _CHUNK // max(ny, 1))
    for s in range(0, nx, rows):
        e = min(nx, s + rows)
        env = {v: X[s:e, j][:, None] for j, v in enumerate(phi.inputs)}
        env.update({v: Y[:, j][None, :] for j, v in enumerate(phi.outputs)})
        m = np.broadcast_to(F.eval_batch(body, env), (e - s, ny))
        has = m.any(axis=1)
        sat_count += int(has.sum())
        bad = np.nonzero(has & ~good[s:e])[0]
        for i in bad:
            if max_failures is not None and len(failures) >= max_failures:
                break
            w = Y[int(np.argmax(m[i]))]
            failures.append((tuple(int(v) for v in X[s + i]), tuple(int(v) for v in w),
                             tuple(int(v) for v in fx[s + i])))
    return VerifyReport(nx, failures, input_box, witness_box, sat_count)


def table_circuit(table: Mapping[Tuple[int, ...], Sequence[int]], n_inputs: int, n_outputs: int) -> Circuit:
    """Circuit that returns table[x] on listed points and 0 elsewhere."""
    b = CircuitBuilder(n_inputs)
    outs = []
    for k in range(n_outputs):
        parts = []
        for x, y in table.items():
            w = b.const(y[k])
            for j in range(n_inputs - 1, -1, -1):
                w = b.eq0(b.addc(j, -x[j]), w)
            parts.append(w)
        outs.append(b.add(*parts) if len(parts) > 1 else (parts[0] if parts else b.const(0)))
    return b.build(outs)


# ---------------------------------------------------------------- exact checks

@dataclass
class ExactReport:
    holds: bool
    method: str
    counterexample: Optional[Tuple[int, ...]] = None
    detail: str = ""


def _with_outputs(phi: F.Spec, exprs) -> F.Node:
    """phi with output y_j replaced by exprs[j] = (coeffs, const, den)."""
    return F.substitute(phi.body, dict(zip(phi.outputs, exprs)))


def verify_exact(phi: F.Spec, c: Circuit, method: str = "auto", budget: Optional[int] = None) -> ExactReport:
    """Unbounded check of  forall x: (exists y phi) -> phi(x, c(x)).

    ``trace``: the circuit's gate-trace formula, defined-variable elimination and
    Cooper.  ``pieces``: (single input only) the exact residue/interval
    decomposition of the circuit, one Cooper call per piece.  ``auto`` uses
    pieces for single-input circuits and the trace route otherwise.
    """
    from . import qelim
    if method not in ("auto", "trace", "pieces"):
        raise ValueError(f"unknown method {method!r}")
    if method == "trace" or (method == "auto" and len(phi.inputs) != 1):
        return _exact_trace(phi, c, budget)
    return _exact_pieces(phi, c, budget)


def _exact_trace(phi: F.Spec, c: Circuit, budget) -> ExactReport:
    from . import qelim
    from .circuit import to_existential_formula
    taken = set(phi.variables)
    prefix = "_g"
    while any(v.startswith(prefix) for v in taken):
        prefix = "_" + prefix
    names, trace = to_existential_formula(c, list(phi.inputs), prefix)
    outs = [names[o] for o in c.outputs]
    bad = F.negate(_with_outputs(phi, [({o: 1}, 0, 1) for o in outs]))
    ys = list(phi.outputs)
    # exists x: (exists y phi) and (exists g: trace and not phi(x, g_out))
    inner = qelim.eliminate_defined(F.conj([trace, bad]), names, budget=budget)
    proj = qelim.eliminate_block(phi.body, ys, budget=budget)
    matrix = F.conj([proj, inner])
    sat = qelim.decide(qelim.QuantifiedFormula([("E", v) for v in phi.inputs], matrix), budget=budget)
    cex = None
    if sat:
        cex = qelim.find_point(matrix, list(phi.inputs))
    return ExactReport(not sat, "trace", cex)


def _exact_pieces(phi: F.Spec, c: Circuit, budget) -> ExactReport:
    from . import qelim
    from .analysis import modular_assignment
    if len(phi.inputs) != 1:
        raise ValueError("piecewise exact check needs a single input")
    x = phi.inputs[0]
    proj = qelim.eliminate_block(phi.body, list(phi.outputs), budget=budget)
    assigns = [modular_assignment(c, output=k) for k in range(c.n_outputs)]
    from .analysis import refine_assignments
    for P, rho, lo, hi, fns in refine_assignments(assigns):
        exprs = []
        for a, b in fns:
            den = a.denominator * b.denominator // np.gcd(a.denominator, b.denominator)
            exprs.append(({x: int(a * den)}, int(b * den), int(den)))
        parts = [proj, F.negate(_with_outputs(phi, exprs))]
        if P > 1:
            parts.append(F.mod({x: 1}, rho, P))
        if lo is not None:
            parts.append(F.ge({x: 1}, -lo))
        if hi is not None:
            parts.append(F.ge({x: -1}, hi))
        m = F.conj(parts)
        if qelim.decide(qelim.QuantifiedFormula([("E", x)], m), budget=budget):
            return ExactReport(False, "pieces", qelim.find_point(m, [x]),
                               f"piece x={rho} mod {P} in [{lo},{hi}]")
    return ExactReport(True, "pieces")
