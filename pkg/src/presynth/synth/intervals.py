"""Interval-computing circuits: comparator, coalesce-and-sort network, and the
per-formula interval bundles used by the one-output synthesizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .. import formula as F
from ..circuit import Circuit, CircuitBuilder
from ..errors import PreconditionError

Interval = Tuple[int, int]   # (alpha wire, beta wire); empty iff alpha > beta


def empty(b: CircuitBuilder) -> Interval:
    return b.const(1), b.const(0)


def _gt(b: CircuitBuilder, u: int, v: int) -> int:
    """flag u > v"""
    return b.ge0(b.lin([(u, 1), (v, -1)], -1))


def icomp(b: CircuitBuilder, I1: Interval, I2: Interval) -> Tuple[Interval, Interval]:
    """Interval comparator: (low, high).

    Either input empty: low = [1,0], high = the other input.  Separated by a
    gap of at least one integer: sorted pair.  Otherwise low = [1,0] and high
    is the coalesced interval.
    """
    a1, b1 = I1
    a2, b2 = I2
    e1 = _gt(b, a1, b1)
    e2 = _gt(b, a2, b2)
    s12 = _gt(b, a2, b.addc(b1, 1))    # b1 + 1 < a2
    s21 = _gt(b, a1, b.addc(b2, 1))    # b2 + 1 < a1
    one, zero = b.const(1), b.const(0)
    ite = b.ite
    lam_l = ite(e1, one, ite(e2, one, ite(s12, a1, ite(s21, a2, one))))
    mu_l = ite(e1, zero, ite(e2, zero, ite(s12, b1, ite(s21, b2, zero))))
    lam_h = ite(e1, a2, ite(e2, a1, ite(s12, a2, ite(s21, a1, b.min(a1, a2)))))
    mu_h = ite(e1, b2, ite(e2, b1, ite(s12, b2, ite(s21, b1, b.max(b1, b2)))))
    return (lam_l, mu_l), (lam_h, mu_h)


def is_static_empty(b: CircuitBuilder, I: Interval) -> bool:
    lo, hi = b.value_of(I[0]), b.value_of(I[1])
    return lo is not None and hi is not None and lo > hi


def cands_network(b: CircuitBuilder, intervals: Sequence[Interval]) -> List[Interval]:
    """Coalesce-and-sort: same length, empties first, then ascending and
    pairwise non-coalescable, with the union preserved.

    Each new interval is carried upward through the current list (one
    comparator per position), after which a bubble phase moves the empties
    produced by coalescing to the front.
    """
    seq: List[Interval] = []
    for I in intervals:
        carry = I
        nxt = []
        for J in seq:
            low, carry = icomp(b, J, carry)
            nxt.append(low)
        nxt.append(carry)
        seq = nxt
    # bubble empties to the front
    k = len(seq)
    for p in range(k - 1):
        for i in range(k - 2, p - 1, -1):
            seq[i], seq[i + 1] = icomp(b, seq[i], seq[i + 1])
    return seq


def intersect_lists(b: CircuitBuilder, L1: Sequence[Interval], L2: Sequence[Interval],
                    keep: Optional[int] = None) -> List[Interval]:
    """Pairwise intersections, coalesced and sorted, top ``keep`` retained.

    ``keep`` defaults to len(L1) + len(L2) - 1, which is the most maximal
    intervals an intersection of the two unions can have.
    """
    if not L1 or not L2:
        return []
    if keep is None:
        keep = len(L1) + len(L2) - 1
    pieces = [(b.max(a1, a2), b.min(b1, b2)) for a1, b1 in L1 for a2, b2 in L2]
    pieces = [p for p in pieces if not is_static_empty(b, p)]
    if not pieces:
        return []
    out = cands_network(b, pieces)
    return out[-keep:] if keep < len(out) else out


@dataclass
class IntervalBundle:
    """F = (-inf, lb] if lf  U  bounded intervals  U  [ub, inf) if uf."""
    lf: int
    lb: int
    uf: int
    ub: int
    bounded: List[Interval]
    has_lower: bool = True    # static: lf may be 1
    has_upper: bool = True

    @property
    def weight(self) -> int:
        return len(self.bounded) + int(self.has_lower) + int(self.has_upper)


def _bundle(b, lf, lb, uf, ub, bounded):
    return IntervalBundle(lf, lb, uf, ub, list(bounded),
                          b.value_of(lf) != 0, b.value_of(uf) != 0)


def _full(b: CircuitBuilder, flag: int) -> IntervalBundle:
    # Z when flag = 1, empty otherwise
    return _bundle(b, flag, b.const(0), flag, b.const(1), [])


def _and_flag(b, f1, f2):
    return b.eq0(b.lin([(f1, -1)], 1), f2)


def _or_flag(b, f1, f2):
    return b.min(b.add(f1, f2), b.const(1))


def _union(b: CircuitBuilder, B1: IntervalBundle, B2: IntervalBundle) -> IntervalBundle:
    lf = _or_flag(b, B1.lf, B2.lf)
    uf = _or_flag(b, B1.uf, B2.uf)
    lb = b.ite(B1.lf, b.ite(B2.lf, b.max(B1.lb, B2.lb), B1.lb), B2.lb)
    ub = b.ite(B1.uf, b.ite(B2.uf, b.min(B1.ub, B2.ub), B1.ub), B2.ub)
    bounded = [I for I in B1.bounded + B2.bounded if not is_static_empty(b, I)]
    return _bundle(b, lf, lb, uf, ub, bounded)


def _mask(b: CircuitBuilder, B: IntervalBundle, g: int) -> IntervalBundle:
    """B when g = 1, empty when g = 0."""
    one, zero = b.const(1), b.const(0)
    return _bundle(b, _and_flag(b, g, B.lf), B.lb, _and_flag(b, g, B.uf), B.ub,
                   [(b.ite(g, a, one), b.ite(g, c, zero)) for a, c in B.bounded])


def _intersect(b: CircuitBuilder, B1: IntervalBundle, B2: IntervalBundle, stats: Optional[list] = None) -> IntervalBundle:
    one, zero = b.const(1), b.const(0)
    lf = _and_flag(b, B1.lf, B2.lf)
    uf = _and_flag(b, B1.uf, B2.uf)
    lb = b.min(B1.lb, B2.lb)
    ub = b.max(B1.ub, B2.ub)
    pieces: List[Interval] = []
    # ray x ray crossings
    for L, U in ((B1, B2), (B2, B1)):
        f = _and_flag(b, L.lf, U.uf)
        pieces.append((b.ite(f, U.ub, one), b.ite(f, L.lb, zero)))
    # bounded x rays
    for A, R in ((B1, B2), (B2, B1)):
        for a, c in A.bounded:
            pieces.append((b.ite(R.lf, a, one), b.ite(R.lf, b.min(c, R.lb), zero)))
            pieces.append((b.ite(R.uf, b.max(a, R.ub), one), b.ite(R.uf, c, zero)))
    # bounded x bounded
    for a1, c1 in B1.bounded:
        for a2, c2 in B2.bounded:
            pieces.append((b.max(a1, a2), b.min(c1, c2)))
    # clip against the result rays so the pieces cover F minus the rays
    clipped = []
    for a, c in pieces:
        if is_static_empty(b, (a, c)):
            continue
        a = b.ite(lf, b.max(a, b.addc(lb, 1)), a)
        c = b.ite(uf, b.min(c, b.addc(ub, -1)), c)
        if not is_static_empty(b, (a, c)):
            clipped.append((a, c))
    w1, w2 = B1.weight, B2.weight
    keep = max(0, w1 + w2 - 1) if w1 and w2 else 0
    bounded: List[Interval] = []
    if clipped and keep:
        bounded = cands_network(b, clipped)
        bounded = bounded[-keep:] if keep < len(bounded) else bounded
    out = _bundle(b, lf, lb, uf, ub, bounded)
    # invariant: the bounded count stays within the children's combined weight
    assert len(out.bounded) <= w1 + w2
    if stats is not None:
        stats.append((len(B1.bounded), len(B2.bounded), len(out.bounded)))
    return out


def leaf_bundle(b: CircuitBuilder, atom: F.Atom, y: str, env: Mapping[str, int]) -> IntervalBundle:
    c = atom.coef(y)
    if isinstance(atom, F.ModCon):
        if c:
            raise PreconditionError(f"modulo atom mentions {y}: {F.format_atom(atom)}")
        return _full(b, b.characteristic(F.Leaf(atom), env))
    if not c:
        return _full(b, b.characteristic(F.Leaf(atom), env))
    t = b.lin([(env[v], k) for v, k in atom.coeffs if v != y], atom.const)
    zero = b.const(0)
    if c > 0:
        # c*y + t >= 0  <=>  y >= ceil(-t / c) = -floor(t / c)
        return _bundle(b, zero, zero, b.const(1), b.neg(b.div(c, t)), [])
    # -|c|*y + t >= 0  <=>  y <= floor(t / |c|)
    return _bundle(b, b.const(1), b.div(-c, t), zero, zero, [])


def interval_bundle(b: CircuitBuilder, phi: F.Node, y: str, env: Mapping[str, int],
                    stats: Optional[list] = None) -> IntervalBundle:
    """Bundle whose set is {v : phi(x, v)} at every input; phi must be y-modulo-free."""
    memo: Dict[int, IntervalBundle] = {}
    ymemo: Dict[int, bool] = {}

    def mentions(n) -> bool:
        r = ymemo.get(id(n))
        if r is None:
            r = (n.atom.coef(y) != 0) if isinstance(n, F.Leaf) else any(mentions(c) for c in n.children)
            ymemo[id(n)] = r
        return r

    def go(n) -> IntervalBundle:
        r = memo.get(id(n))
        if r is not None:
            return r
        if isinstance(n, F.Leaf):
            r = leaf_bundle(b, n.atom, y, env)
        else:
            free = [c for c in n.children if not mentions(c)]
            dep = [c for c in n.children if mentions(c)]
            g = b.characteristic(F.conj(free) if isinstance(n, F.And) else F.disj(free), env) if free else None
            if not dep:
                r = _full(b, g)
            elif isinstance(n, F.And):
                r = go(dep[0])
                for c in dep[1:]:
                    r = _intersect(b, r, go(c), stats)
                if g is not None:
                    r = _mask(b, r, g)
            else:
                r = go(dep[0])
                for c in dep[1:]:
                    r = _union(b, r, go(c))
                if g is not None:
                    r = _union(b, r, _full(b, g))
        memo[id(n)] = r
        return r
    return go(phi)


@dataclass
class IntervalCircuit:
    """Circuit with outputs (lf, lb, a1, b1, ..., ak, bk, ub, uf)."""
    circuit: Circuit
    k: int
    node_stats: List[Tuple[int, int, int]] = field(default_factory=list)

    def decode(self, x: Sequence[int]):
        out = self.circuit(list(x))
        lf, lb = out[0], out[1]
        ub, uf = out[-2], out[-1]
        bounded = [(out[2 + 2 * j], out[3 + 2 * j]) for j in range(self.k)]
        return lf, lb, bounded, uf, ub

    def contains(self, x: Sequence[int], v: int) -> bool:
        lf, lb, bounded, uf, ub = self.decode(x)
        if lf == 1 and v <= lb:
            return True
        if uf == 1 and v >= ub:
            return True
        return any(a <= v <= c for a, c in bounded)


def interval_circuit(phi: F.FormulaLike, y: str, inputs: Optional[Sequence[str]] = None) -> IntervalCircuit:
    body = F.body_of(phi)
    if inputs is None:
        inputs = phi.inputs if isinstance(phi, F.Spec) else sorted(F.free_vars(body) - {y})
    b = CircuitBuilder(len(inputs))
    env = {v: i for i, v in enumerate(inputs)}
    st: list = []
    B = interval_bundle(b, body, y, env, st)
    outs = [B.lf, B.lb]
    for a, c in B.bounded:
        outs += [a, c]
    outs += [B.ub, B.uf]
    return IntervalCircuit(b.build(outs), len(B.bounded), st)
