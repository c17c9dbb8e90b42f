"""Cooper-style quantifier elimination and a decision procedure for closed formulas."""
from __future__ import annotations

import os
from dataclasses import dataclass
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from . import formula as F
from .exactnum import lcm_all
from .errors import ResourceError

QE_BUDGET = int(os.environ.get("PRESYNTH_QE_NODES", 10 ** 6))


# ---------------------------------------------------------------- canonical atoms

def canon_atom(a: F.Atom) -> F.Atom:
    """gcd-reduced inequality / residue-reduced congruence; constants folded to TRUE/FALSE atoms."""
    if isinstance(a, F.LinIneq):
        if not a.coeffs:
            return F.TRUE_ATOM if a.const >= 0 else F.FALSE_ATOM
        g = 0
        for _, c in a.coeffs:
            g = gcd(g, c)
        if g > 1:
            return F.LinIneq(tuple((v, c // g) for v, c in a.coeffs), a.const // g)
        return a
    M = a.modulus
    cs = [(v, c % M) for v, c in a.coeffs if c % M]
    r = a.residue % M
    if not cs:
        return F.TRUE_ATOM if (r == 0) == a.positive else F.FALSE_ATOM
    g = M
    for _, c in cs:
        g = gcd(g, c)
    if r % g:
        return F.FALSE_ATOM if a.positive else F.TRUE_ATOM
    if g > 1:
        M //= g
        r //= g
        cs = [(v, c // g) for v, c in cs]
    lead = cs[0][1]
    if lead != 1 and gcd(lead, M) == 1:
        inv = pow(lead, -1, M)
        cs = [(v, c * inv % M) for v, c in cs]
        r = r * inv % M
    if M == 1:
        return F.TRUE_ATOM if a.positive else F.FALSE_ATOM
    return F.ModCon(cs, r, M, a.positive)


def _is_true(n):
    return isinstance(n, F.Leaf) and n.atom == F.TRUE_ATOM


def _is_false(n):
    return isinstance(n, F.Leaf) and n.atom == F.FALSE_ATOM


def simplify(f: F.FormulaLike) -> F.Node:
    """Canonicalize atoms, fold constants, flatten, deduplicate, and drop
    redundant inequalities that share a coefficient vector."""
    memo: Dict[int, F.Node] = {}

    def go(n):
        r = memo.get(id(n))
        if r is not None:
            return r
        if isinstance(n, F.Leaf):
            a = canon_atom(n.atom)
            r = n if a is n.atom else F.Leaf(a)
        else:
            is_and = isinstance(n, F.And)
            kids: List[F.Node] = []
            for c in n.children:
                c = go(c)
                if type(c) is type(n):
                    kids.extend(c.children)
                else:
                    kids.append(c)
            r = _junction(kids, is_and)
        memo[id(n)] = r
        return r
    return go(F.body_of(f))


def _junction(kids, is_and):
    absorbing = _is_false if is_and else _is_true
    neutral = _is_true if is_and else _is_false
    out: List[F.Node] = []
    seen = set()
    bounds: Dict[tuple, int] = {}   # coeffs -> index in out of the tightest/loosest inequality
    for c in kids:
        if absorbing(c):
            return F.FALSE if is_and else F.TRUE
        if neutral(c) or c in seen:
            continue
        if isinstance(c, F.Leaf):
            a = c.atom
            neg = F.Leaf(canon_atom(a.negate()))
            if neg in seen:
                return F.FALSE if is_and else F.TRUE
            if isinstance(a, F.LinIneq):
                opp = tuple((v, -k) for v, k in a.coeffs)
                j = bounds.get(opp)
                if j is not None and out[j] is not None:
                    # t + c1 >= 0 and -t + c2 >= 0: empty iff c1 + c2 < 0, cover-all iff c1 + c2 >= -1
                    s = a.const + out[j].atom.const
                    if is_and and s < 0:
                        return F.FALSE
                    if not is_and and s >= -1:
                        return F.TRUE
                j = bounds.get(a.coeffs)
                if j is not None and out[j] is not None:
                    other = out[j].atom.const
                    keep_new = a.const < other if is_and else a.const > other
                    if not keep_new:
                        continue
                    seen.discard(out[j])
                    out[j] = None
                bounds[a.coeffs] = len(out)
        seen.add(c)
        out.append(c)
    out = [c for c in out if c is not None]
    if not out:
        return F.TRUE if is_and else F.FALSE
    if len(out) == 1:
        return out[0]
    return F.And(out) if is_and else F.Or(out)


def tree_size(f: F.Node) -> int:
    memo: Dict[int, int] = {}

    def go(n):
        r = memo.get(id(n))
        if r is None:
            r = 1 if isinstance(n, F.Leaf) else 1 + sum(go(c) for c in n.children)
            memo[id(n)] = r
        return r
    return go(f)


def _check(f: F.Node, budget: Optional[int]) -> F.Node:
    lim = QE_BUDGET if budget is None else budget
    if tree_size(f) > lim:
        raise ResourceError(f"formula exceeds the QE budget of {lim} nodes")
    return f


def _vars_memo():
    # the node is kept in the entry so its id cannot be recycled
    memo: Dict[int, Tuple[F.Node, frozenset]] = {}

    def vs(n):
        hit = memo.get(id(n))
        if hit is not None:
            return hit[1]
        if isinstance(n, F.Leaf):
            r = frozenset(n.atom.vars)
        else:
            r = frozenset().union(*[vs(c) for c in n.children])
        memo[id(n)] = (n, r)
        return r
    return vs


# ---------------------------------------------------------------- Cooper

def _eq_pair(children, y):
    """Find t with top-level conjuncts y + t >= 0 and -y - t >= 0 (unit coefficient)."""
    pos = {}
    for c in children:
        if isinstance(c, F.Leaf) and isinstance(c.atom, F.LinIneq):
            a = c.atom.coef(y)
            if a in (1, -1):
                rest = tuple((v, k * a) for v, k in c.atom.coeffs if v != y)
                pos.setdefault((a, rest), []).append((c, c.atom.const * a))
    for (a, rest), items in pos.items():
        if a != 1:
            continue
        neg = tuple((v, -k) for v, k in rest)
        for c1, k1 in items:
            for c2, k2 in pos.get((-1, rest), []):
                # y + rest + k1 >= 0 and -(y + rest) - k2 >= 0 with k1 == k2 -> y = -rest - k1
                if k1 == k2:
                    return c1, c2, (dict(neg), -k1)
    return None


def eliminate_one(phi: F.FormulaLike, y: str, budget: Optional[int] = None) -> F.Node:
    """Quantifier-free equivalent of  exists y: phi."""
    phi = simplify(phi)
    return _check(_elim(phi, y, budget, _vars_memo()), budget)


def _elim(phi: F.Node, y: str, budget, vs) -> F.Node:
    if y not in vs(phi):
        return phi
    if isinstance(phi, F.Or):
        return simplify(F.disj([_elim(c, y, budget, vs) for c in phi.children]))
    if isinstance(phi, F.And):
        # pull out conjuncts that do not mention y
        keep = [c for c in phi.children if y not in vs(c)]
        mention = [c for c in phi.children if y in vs(c)]
        if keep:
            inner = _elim(F.conj(mention), y, budget, vs)
            return simplify(F.conj(keep + [inner]))
        hit = _eq_pair(phi.children, y)
        if hit is not None:
            c1, c2, (tc, tk) = hit
            rest = [c for c in phi.children if c is not c1 and c is not c2]
            return simplify(F.substitute(F.conj(rest), {y: (tc, tk, 1)}))
    return _cooper(phi, y, budget)


def _cooper(phi: F.Node, y: str, budget) -> F.Node:
    coefs = [abs(a.coef(y)) for a in F.atoms(phi) if a.coef(y)]
    L = lcm_all(coefs)

    def norm(l: F.Leaf) -> F.Node:
        a = l.atom
        c = a.coef(y)
        if not c:
            return l
        k = L // abs(c)
        cs = [(v, (1 if c > 0 else -1) if v == y else k * b) for v, b in a.coeffs]
        if isinstance(a, F.LinIneq):
            return F.Leaf(F.LinIneq(cs, k * a.const))
        return F.Leaf(F.ModCon(cs, k * a.residue, k * a.modulus, a.positive))

    body = F.map_leaves(phi, norm)
    if L > 1:
        body = F.And((body, F.mod({y: 1}, 0, L)))
    delta = lcm_all([a.modulus for a in F.atoms(body) if isinstance(a, F.ModCon) and a.coef(y)])
    lower, upper = [], []
    for a in set(F.atoms(body)):
        if isinstance(a, F.LinIneq) and a.coef(y):
            rest = tuple((v, b) for v, b in a.coeffs if v != y)
            if a.coef(y) > 0:   # y >= -rest - const
                lower.append(({v: -b for v, b in rest}, -a.const))
            else:               # y <= rest + const
                upper.append((dict(rest), a.const))
    use_lower = len(lower) <= len(upper)

    def at_infinity(l: F.Leaf) -> F.Node:
        a = l.atom
        if isinstance(a, F.LinIneq) and a.coef(y):
            is_lower = a.coef(y) > 0
            return F.FALSE if is_lower == use_lower else F.TRUE
        return l

    inf_body = F.map_leaves(body, at_infinity)
    bounds = lower if use_lower else upper
    sign = 1 if use_lower else -1
    parts = []
    lim = QE_BUDGET if budget is None else budget
    total = 0
    for j in range(delta):
        p = simplify(F.substitute(inf_body, {y: ({}, sign * j, 1)}))
        if _is_true(p):
            return F.TRUE
        parts.append(p)
    for tc, tk in sorted(bounds, key=lambda b: (sorted(b[0].items()), b[1])):
        for j in range(delta):
            p = simplify(F.substitute(body, {y: (tc, tk + sign * j, 1)}))
            if _is_true(p):
                return F.TRUE
            total += tree_size(p)
            if total > lim:
                raise ResourceError(f"formula exceeds the QE budget of {lim} nodes")
            parts.append(p)
    return simplify(F.disj(parts))


def eliminate_block(phi: F.FormulaLike, ys: Sequence[str], budget: Optional[int] = None) -> F.Node:
    """exists ys: phi, eliminating the last variable first."""
    f = simplify(phi)
    for y in reversed(list(ys)):
        f = eliminate_one(f, y, budget)
    return f


@dataclass(frozen=True)
class QuantifiedFormula:
    prefix: Tuple[Tuple[str, str], ...]   # ("E" | "A", var), outermost first
    matrix: F.Node

    def __init__(self, prefix, matrix):
        prefix = tuple((q.upper(), v) for q, v in prefix)
        for q, _ in prefix:
            if q not in ("E", "A"):
                raise ValueError(f"unknown quantifier {q!r}")
        names = [v for _, v in prefix]
        if len(set(names)) != len(names):
            raise ValueError("prefix variables must be distinct")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "matrix", F.body_of(matrix))

    @property
    def free_vars(self):
        return F.free_vars(self.matrix) - {v for _, v in self.prefix}


def eliminate_prefix(qf: QuantifiedFormula, budget: Optional[int] = None) -> F.Node:
    f = simplify(qf.matrix)
    for q, v in reversed(qf.prefix):
        if q == "E":
            f = eliminate_one(f, v, budget)
        else:
            f = simplify(F.negate(eliminate_one(F.negate(f), v, budget)))
    return f


def decide(qf: QuantifiedFormula, budget: Optional[int] = None) -> bool:
    if qf.free_vars:
        raise ValueError(f"decide needs a closed formula; free: {sorted(qf.free_vars)}")
    f = eliminate_prefix(qf, budget)
    if _is_true(f):
        return True
    if _is_false(f):
        return False
    return F.eval(f, {})


def local_exists(phi: F.FormulaLike, ys: Sequence[str]) -> F.Node:
    """Replace every leaf mentioning a variable of ``ys`` by 0 >= 0."""
    ys = set(ys)
    return F.map_leaves(F.body_of(phi), lambda l: F.TRUE if ys & set(l.atom.vars) else l)


# ---------------------------------------------------------------- defined variables

def eliminate_defined(phi: F.FormulaLike, names: Sequence[str], budget: Optional[int] = None) -> F.Node:
    """exists names: phi, for variables mostly pinned by unit equalities.

    Works last-to-first. A top-level equality is substituted away; a
    conjunct that is a disjunction of equality cases is distributed;
    anything else falls back to Cooper.
    """
    f = simplify(phi)
    for v in reversed(list(names)):
        f = _check(_elim_def(f, v, budget, _vars_memo()), budget)
    return f


def _elim_def(node, v, budget, vs):
    if v not in vs(node):
        return node
    if isinstance(node, F.Or):
        return simplify(F.disj([_elim_def(c, v, budget, vs) for c in node.children]))
    if isinstance(node, F.And):
        kids = node.children
        hit = _eq_pair(kids, v)
        if hit is not None:
            c1, c2, (tc, tk) = hit
            rest = [c for c in kids if c is not c1 and c is not c2]
            return simplify(F.substitute(F.conj(rest), {v: (tc, tk, 1)}))
        for i, c in enumerate(kids):
            if isinstance(c, F.Or) and all(isinstance(d, F.And) and _eq_pair(d.children, v) for d in c.children):
                rest = kids[:i] + kids[i + 1:]
                out = []
                total = 0
                lim = QE_BUDGET if budget is None else budget
                for d in c.children:
                    p = _elim_def(simplify(F.And(d.children + rest)), v, budget, vs)
                    if _is_true(p):
                        return F.TRUE
                    total += tree_size(p)
                    if total > lim:
                        raise ResourceError(f"formula exceeds the QE budget of {lim} nodes")
                    out.append(p)
                return simplify(F.disj(out))
    return _cooper(node, v, budget) if not isinstance(node, F.Leaf) else _elim(node, v, budget, vs)


# ---------------------------------------------------------------- witnesses

def _witness_1d(psi: F.Node, v: str) -> Optional[int]:
    crit = set()
    mods = []
    for a in F.atoms(psi):
        c = a.coef(v)
        if not c:
            continue
        if isinstance(a, F.LinIneq):
            crit.add(-a.const // c)
            crit.add(-(a.const // c))
        else:
            mods.append(a.modulus)
    delta = lcm_all(mods)
    cands = set()
    if not crit:
        cands.update(range(delta))
    else:
        lo, hi = min(crit), max(crit)
        for p in crit:
            cands.update(range(p - 1, p + delta + 2))
        cands.update(range(lo - delta - 2, lo))
        cands.update(range(hi, hi + delta + 2))
    for x in sorted(cands, key=lambda t: (abs(t), t < 0)):
        if F.eval(psi, {v: x}):
            return x
    return None


def find_point(phi: F.FormulaLike, variables: Sequence[str], budget: Optional[int] = None) -> Optional[Tuple[int, ...]]:
    """A satisfying assignment for ``variables`` (the formula's only free variables), or None."""
    f = simplify(phi)
    vals = []
    variables = list(variables)
    for i, v in enumerate(variables):
        psi = eliminate_block(f, variables[i + 1:], budget)
        x = _witness_1d(psi, v)
        if x is None:
            return None
        vals.append(x)
        f = simplify(F.substitute(f, {v: ({}, x, 1)}))
    return tuple(vals)
