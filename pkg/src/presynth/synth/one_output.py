"""Polynomial Skolem-circuit synthesis for a single output."""
from __future__ import annotations

from typing import List, Mapping, Optional, Sequence, Tuple

from .. import formula as F
from ..circuit import Circuit, CircuitBuilder
from ..exactnum import lcm_all
from .intervals import interval_bundle


def _split_disjuncts(n: F.Node) -> List[F.Node]:
    if isinstance(n, F.Or):
        out = []
        for c in n.children:
            out.extend(_split_disjuncts(c))
        return out
    return [n]


def _y_moduli(n: F.Node, y: str) -> List[int]:
    return [a.modulus for a in F.atoms(n) if isinstance(a, F.ModCon) and a.coef(y)]


def resolve_residue(n: F.Node, y: str, r: int, M: int) -> F.Node:
    """Under y = r (mod M), rewrite every y-modulo atom  a*y + t = c (mod K),
    K | M,  as the y-free  t = c - a*r (mod K)."""
    def fn(l):
        a = l.atom
        if not isinstance(a, F.ModCon):
            return l
        k = a.coef(y)
        if not k:
            return l
        assert M % a.modulus == 0
        rest = tuple((v, c) for v, c in a.coeffs if v != y)
        res = a.residue - k * r
        if not rest:
            hit = res % a.modulus == 0
            return F.TRUE if hit == a.positive else F.FALSE
        return F.mod(rest, res, a.modulus, a.positive)
    return F.map_leaves(n, fn)


def _ceil_div(b: CircuitBuilder, M: int, w: int) -> int:
    # ceil(w / M) = -floor(-w / M)
    return b.neg(b.div(M, b.neg(w)))


def residue_choice(b: CircuitBuilder, phi: F.Node, y: str, env: Mapping[str, int],
                   r: int, M: int) -> int:
    """Wire for f^r: a point = r (mod M) of the first nonempty piece, else 0."""
    B = interval_bundle(b, phi, y, env)
    c = b.div(M, b.addc(B.lb, -r))
    d = _ceil_div(b, M, b.addc(B.ub, -r))
    tail = b.const(0)
    for alpha, beta in reversed(B.bounded):
        aj = _ceil_div(b, M, b.addc(alpha, -r))
        bj = b.div(M, b.addc(beta, -r))
        tail = b.ite(b.ge0(b.sub(bj, aj)), b.lin([(aj, M)], r), tail)
    out = b.ite(B.uf, b.lin([(d, M)], r), tail)
    return b.ite(B.lf, b.lin([(c, M)], r), out)


def disjunct_skolem(b: CircuitBuilder, phi: F.Node, y: str, env: Mapping[str, int]) -> int:
    """Skolem wire for one disjunct: residue split, then the max/min/0 selection."""
    mods = _y_moduli(phi, y)
    M = lcm_all(mods) if mods else 1
    fr = [residue_choice(b, resolve_residue(phi, y, r, M), y, env, r, M) for r in range(M)]
    hi, lo = fr[0], fr[0]
    for w in fr[1:]:
        hi, lo = b.max(hi, w), b.min(lo, w)
    if len(fr) == 1:
        return fr[0]
    zero, one = b.const(0), b.const(1)
    return b.ite_ge(hi, one, hi, b.ite_eq(lo, zero, zero, lo))


def combine_wires(b: CircuitBuilder, phis: Sequence[F.Node], fs: Sequence[int],
                  y: str, env: Mapping[str, int]) -> int:
    """gamma = sum_i 2^(k-i+1) * xi_i(x, f_i(x)); then a telescoping C-sum in
    ascending weight so that the smallest satisfied index wins."""
    k = len(fs)
    if k == 1:
        return fs[0]
    weights = [1 << (k - i) for i in range(k)]    # index 0 gets the largest
    terms = []
    for phi, f, w in zip(phis, fs, weights):
        e = dict(env)
        e[y] = f
        terms.append((b.characteristic(phi, e), w))
    gamma = b.lin(terms)
    out = []
    prev = b.const(0)
    for i in range(k - 1, -1, -1):
        out.append(b.c_gate(b.addc(gamma, -weights[i]), b.sub(fs[i], prev)))
        prev = fs[i]
    return b.add(*out)


def combine_disjunction(phis: Sequence[F.FormulaLike], circuits: Sequence[Circuit],
                        inputs: Sequence[str], y: str) -> Circuit:
    """Skolem circuit for the disjunction of ``phis`` from per-disjunct circuits."""
    if len(phis) != len(circuits) or not phis:
        raise ValueError("need one circuit per disjunct")
    b = CircuitBuilder(len(inputs))
    env = {v: i for i, v in enumerate(inputs)}
    xs = list(range(len(inputs)))
    fs = [b.embed(c, xs)[0] for c in circuits]
    return b.build([combine_wires(b, [F.body_of(p) for p in phis], fs, y, env)])


def skolem_wire(b: CircuitBuilder, phi: F.Node, y: str, env: Mapping[str, int]) -> int:
    parts = _split_disjuncts(phi)
    fs = [disjunct_skolem(b, p, y, env) for p in parts]
    return combine_wires(b, parts, fs, y, env)


def synth_one_output(phi: F.FormulaLike, y: Optional[str] = None,
                     inputs: Optional[Sequence[str]] = None) -> Circuit:
    """Skolem circuit for ``y`` in  forall x exists y: phi.

    Inputs default to the spec's inputs (or the sorted free variables other
    than ``y``).  Modulo atoms on ``y`` are resolved per residue, so tameness
    is not required for correctness; it only keeps the residue count small.
    """
    body = F.body_of(phi)
    if y is None:
        if not isinstance(phi, F.Spec) or len(phi.outputs) != 1:
            raise ValueError("y must be given unless phi is a one-output spec")
        y = phi.outputs[0]
    if inputs is None:
        inputs = phi.inputs if isinstance(phi, F.Spec) else sorted(F.free_vars(body) - {y})
    b = CircuitBuilder(len(inputs))
    env = {v: i for i, v in enumerate(inputs)}
    missing = F.free_vars(body) - set(env) - {y}
    if missing:
        raise ValueError(f"variables neither input nor output: {sorted(missing)}")
    return b.build([skolem_wire(b, body, y, env)])
