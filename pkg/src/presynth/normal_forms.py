"""Checkers and compilers for modulo-tameness, the semantic synthesis normal
form (PSyNF) and the syntactic one (PSySyNF)."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import formula as F
from . import qelim
from .errors import ResourceError
from .exactnum import AffineMapQ, lcm_all

TAME_BUDGET = int(os.environ.get("PRESYNTH_TAME_MODULUS", 1 << 16))
PSYSYNF_BUDGET = int(os.environ.get("PRESYNTH_PSYSYNF_ATOMS", 500_000))


# ---------------------------------------------------------------- modulo-tameness

def _units(body: F.Node) -> List[F.Node]:
    """Maximal conjunctive subformulas, plus leaves not below any And."""
    out = []
    stack = [body]
    while stack:
        n = stack.pop()
        if isinstance(n, F.Or):
            stack.extend(reversed(n.children))
        else:
            out.append(n)
    return out


def _is_unit_residue(a: F.Atom, y: str) -> bool:
    return isinstance(a, F.ModCon) and a.positive and a.coeffs == ((y, 1),)


@dataclass
class TameEntry:
    subformula: F.Node
    modulus: Optional[int]                 # the shared modulus when tame (None: no y-modulo atoms)
    offenders: List[F.Atom] = field(default_factory=list)

    @property
    def tame(self) -> bool:
        return not self.offenders


@dataclass
class ModuloTameReport:
    variable: str
    entries: List[TameEntry]

    @property
    def tame(self) -> bool:
        return all(e.tame for e in self.entries)

    def to_text(self) -> str:
        lines = [f"{self.variable}-modulo-tame: {'yes' if self.tame else 'no'}"]
        for i, e in enumerate(self.entries):
            if e.tame:
                lines.append(f"  [{i}] ok" + (f" M={e.modulus}" if e.modulus else ""))
            else:
                offs = "; ".join(F.format_atom(a) for a in e.offenders)
                lines.append(f"  [{i}] offending: {offs}")
        return "\n".join(lines) + "\n"


def check_modulo_tame(phi: F.FormulaLike, y: str) -> ModuloTameReport:
    entries = []
    for u in _units(F.body_of(phi)):
        ymods = [a for a in F.atoms(u) if isinstance(a, F.ModCon) and a.coef(y)]
        if not ymods:
            continue
        bad = [a for a in ymods if not _is_unit_residue(a, y)]
        good = [a for a in ymods if _is_unit_residue(a, y)]
        moduli = sorted({a.modulus for a in good})
        if len(moduli) > 1:
            # a pair of unit residues that disagree on the modulus
            first = next(a for a in good if a.modulus == moduli[0])
            other = next(a for a in good if a.modulus != moduli[0])
            bad += [first, other]
        entries.append(TameEntry(u, moduli[0] if len(moduli) == 1 and not bad else None, bad))
    return ModuloTameReport(y, entries)


def _tame_leaf(l: F.Leaf, y: str, Mpsi: int) -> F.Node:
    a = l.atom
    if not isinstance(a, F.ModCon):
        return l
    c = a.coef(y)
    if not c or (_is_unit_residue(a, y) and a.modulus == Mpsi):
        return l
    mu = Mpsi // a.modulus
    rest = tuple((v, k * mu) for v, k in a.coeffs if v != y)
    parts = []
    for r in range(Mpsi):
        rhs = mu * (a.residue - c * r)
        yr = F.mod({y: 1}, r, Mpsi)
        if rest:
            parts.append(F.And((yr, F.mod(rest, rhs, Mpsi, a.positive))))
        elif (rhs % Mpsi == 0) == a.positive:
            parts.append(yr)
    return F.disj(parts)


def make_modulo_tame(phi: F.FormulaLike, y: str, budget: Optional[int] = None) -> F.FormulaLike:
    """Equivalent y-modulo-tame formula: inside each maximal conjunct, every
    a*y + t = b (mod M) becomes  OR_r (y = r (mod M') and mu*t = mu*(b - a*r) (mod M'))
    with M' the lcm of the conjunct's y-moduli and mu = M'/M."""
    lim = TAME_BUDGET if budget is None else budget

    def go(n: F.Node) -> F.Node:
        if isinstance(n, F.Or):
            return F.Or(go(c) for c in n.children)
        mods = [a.modulus for a in F.atoms(n) if isinstance(a, F.ModCon) and a.coef(y)]
        if not mods:
            return n
        Mpsi = lcm_all(mods)
        if Mpsi > lim:
            raise ResourceError(f"modulus {Mpsi} exceeds the tameness budget {lim}")
        return F.map_leaves(n, lambda l: _tame_leaf(l, y, Mpsi))

    body = go(F.body_of(phi))
    if isinstance(phi, F.Spec):
        return F.Spec(phi.inputs, phi.outputs, body)
    return body


# ---------------------------------------------------------------- PSyNF

@dataclass
class PsynfReport:
    ok: bool
    tame: Dict[str, bool]
    failing_i: Optional[int] = None
    counterexample: Optional[Dict[str, int]] = None
    i0_holds: Optional[bool] = None
    reason: str = ""

    def to_text(self) -> str:
        lines = [f"psynf: {'yes' if self.ok else 'no'}"]
        for y, t in self.tame.items():
            lines.append(f"tame {y}: {'yes' if t else 'no'}")
        if self.failing_i is not None:
            lines.append(f"failing_i: {self.failing_i}")
        if self.counterexample:
            lines.append("counterexample: " + " ".join(f"{k}={v}" for k, v in self.counterexample.items()))
        if self.i0_holds is not None:
            lines.append(f"i0 (input prefix, reported separately): {'holds' if self.i0_holds else 'fails'}")
        if self.reason:
            lines.append(f"reason: {self.reason}")
        return "\n".join(lines) + "\n"


def local_global_gap(spec: F.Spec, i: int, budget: Optional[int] = None) -> F.Node:
    """Quantifier-free formula over x, y_1..y_i that holds exactly where the
    local projection of y_{i+1..m} holds but  exists y_{i+1} (local y_{i+2..m})  fails."""
    ys = list(spec.outputs)
    li = qelim.local_exists(spec.body, ys[i:])
    li1 = qelim.local_exists(spec.body, ys[i + 1:])
    q = qelim.eliminate_one(li1, ys[i], budget)
    return qelim.simplify(F.conj([li, F.negate(q)]))


def _condition_holds(spec: F.Spec, i: int, budget):
    gap = local_global_gap(spec, i, budget)
    free = list(spec.inputs) + list(spec.outputs[:i])
    sat = qelim.decide(qelim.QuantifiedFormula([("E", v) for v in free], gap), budget)
    if not sat:
        return True, None
    pt = qelim.find_point(gap, free, budget)
    return False, (dict(zip(free, pt)) if pt is not None else None)


def check_psynf(spec: F.Spec, budget: Optional[int] = None, check_i0: bool = True) -> PsynfReport:
    """Tameness for every output, then the local/global condition for
    i = m-1 .. 1 decided exactly; i = 0 is reported but not part of the verdict."""
    tame = {y: check_modulo_tame(spec.body, y).tame for y in spec.outputs}
    if not all(tame.values()):
        bad = [y for y, t in tame.items() if not t]
        return PsynfReport(False, tame, reason=f"not modulo-tame in {', '.join(bad)}")
    m = len(spec.outputs)
    for i in range(m - 1, 0, -1):
        holds, cex = _condition_holds(spec, i, budget)
        if not holds:
            return PsynfReport(False, tame, i, cex,
                               reason=f"local and global projection differ at i={i}")
    i0 = _condition_holds(spec, 0, budget)[0] if check_i0 and m else None
    return PsynfReport(True, tame, i0_holds=i0)


def _rewrite_output_mods(atoms: Sequence[F.Atom], ys: Sequence[str]) -> List[List[F.Atom]]:
    """Split a conjunction of atoms over the residues of the outputs that
    occur in modulo atoms, so each such output only has  y = s (mod M)."""
    yset = set(ys)
    omods = [a for a in atoms if isinstance(a, F.ModCon) and set(a.vars) & yset]
    if not omods:
        return [list(atoms)]
    M = lcm_all(a.modulus for a in omods)
    if M > TAME_BUDGET:
        raise ResourceError(f"modulus {M} exceeds the tameness budget")
    split = [y for y in ys if any(a.coef(y) for a in omods)]
    rest = [a for a in atoms if not (isinstance(a, F.ModCon) and set(a.vars) & yset)]
    out = []
    for s in itertools.product(range(M), repeat=len(split)):
        sv = dict(zip(split, s))
        cur = [F.ModCon({y: 1}, sv[y], M) for y in split]
        ok = True
        for a in omods:
            cs = [(v, k) for v, k in a.coeffs if v not in sv]
            res = a.residue - sum(k * sv[v] for v, k in a.coeffs if v in sv)
            b = F.ModCon(cs, res, a.modulus, a.positive)
            if not cs:
                if not F.eval_atom(b, {}):
                    ok = False
                    break
                continue
            cur.append(b)
        if ok:
            out.append(cur + rest)
    return out


def compile_psynf(spec: F.Spec, budget: Optional[int] = None) -> F.Spec:
    """phi conjoined with quantifier-free suffix projections, then split into
    disjuncts whose output moduli are rewritten per residue vector."""
    ys = list(spec.outputs)
    parts = [spec.body]
    for i in range(1, len(ys)):
        parts.append(qelim.eliminate_block(spec.body, ys[i:], budget))
    eta = F.conj(parts)
    dnf = F.to_dnf(eta)
    disjuncts = []
    for atoms in dnf:
        for cj in _rewrite_output_mods(atoms, ys):
            disjuncts.append(F.conj(F.Leaf(a) for a in cj))
    return F.Spec(spec.inputs, spec.outputs, F.disj(disjuncts))


def compile_psynf_one_output_optimal(phi: F.FormulaLike, y: Optional[str] = None,
                                     project: Optional[Callable] = None) -> F.FormulaLike:
    """phi* = OR_i (phi_i and phi~) with phi~ the projection of y."""
    body = F.body_of(phi)
    if y is None:
        if not isinstance(phi, F.Spec) or len(phi.outputs) != 1:
            raise ValueError("need a one-output spec or an explicit y")
        y = phi.outputs[0]
    project = project or qelim.eliminate_one
    proj = project(body, y)
    kids = body.children if isinstance(body, F.Or) else (body,)
    out = F.disj(F.And((k, proj)) for k in kids)
    if isinstance(phi, F.Spec):
        return F.Spec(phi.inputs, phi.outputs, out)
    return out


# ---------------------------------------------------------------- PSySyNF

def _map_subst(A: AffineMapQ, srcs: Sequence[str], targets: Sequence[str]):
    """{target: (coeffs, const, den)} for substituting A(srcs) into targets."""
    out = {}
    for y, row, k in zip(targets, A.D, A.d):
        den = lcm_all([q.denominator for q in row] + [k.denominator])
        out[y] = ({v: int(q * den) for v, q in zip(srcs, row) if q}, int(k * den), den)
    return out


def _subst_atom(a: F.Atom, A: AffineMapQ, srcs, targets) -> F.Atom:
    n = F.substitute(F.Leaf(a), _map_subst(A, srcs, targets))
    return n.atom


def _const_leaf(b: bool) -> F.Leaf:
    return F.TRUE if b else F.FALSE


def _eq_group(A: AffineMapQ, M: int, srcs, targets) -> F.Node:
    pairs = []
    for y, row, k in zip(targets, A.D, A.d):
        cs = {y: M}
        for v, q in zip(srcs, row):
            if q:
                cs[v] = cs.get(v, 0) - int(q * M)
        c = -int(k * M)
        t = F.LinIneq(cs, c)
        pairs += [F.Leaf(t), F.Leaf(F.LinIneq(tuple((v, -a) for v, a in t.coeffs), -t.const))]
    return F.And(pairs)


def _conjunct_candidates(atoms, xs, ys, i, radius, budget) -> List[AffineMapQ]:
    from .synth.general import disjunct_candidates
    ins, outs = list(xs) + list(ys[:i]), list(ys[i:])
    sub = F.remove_output_modulos(F.Spec(ins, outs, F.conj(F.Leaf(a) for a in atoms)))
    k = len(outs)
    seen, maps = set(), []
    for dis in F.to_dnf(sub.body):
        d = disjunct_candidates(dis, list(sub.inputs), list(sub.outputs), radius, budget)
        for mp in d.candidates:
            key = (mp.D[:k], mp.d[:k])
            if key not in seen:
                seen.add(key)
                maps.append(AffineMapQ(mp.D[:k], mp.d[:k]))
    return maps


def _eval_affine(A: AffineMapQ, pt) -> Tuple[Fraction, ...]:
    return A(pt)


def compile_psysynf(spec: F.Spec, radius: int = 0, budget: Optional[int] = None) -> F.Spec:
    """Equivalent formula in syntactic normal form (exponential in general).

    Per DNF conjunct and per choice f of candidate maps A_0..A_{m-1}, one
    conjunction of building blocks per residue vector (r, s) mod M_f for which
    every A_i(r^i) is integral.  Modulo atoms become constants under the
    residue vector, which is why M_f also carries the map denominators.
    """
    xs, ys = list(spec.inputs), list(spec.outputs)
    vs = xs + ys
    n, m = len(xs), len(ys)
    lim = PSYSYNF_BUDGET if budget is None else budget
    total = 0
    out: List[F.Node] = []
    for atoms in F.to_dnf(spec.body):
        cands = [_conjunct_candidates(atoms, xs, ys, i, radius, budget) for i in range(m)]
        if any(not c for c in cands):
            continue
        kmod = lcm_all(a.modulus for a in atoms if isinstance(a, F.ModCon))
        for f in itertools.product(*cands):
            den = lcm_all(q for A in f for q in A.denominators())
            M = kmod * den
            for rs in itertools.product(range(M), repeat=n + m):
                pt = dict(zip(vs, rs))
                vals = []
                for i, A in enumerate(f):
                    v = A(rs[:n + i])
                    if any(q.denominator != 1 for q in v):
                        break
                    vals.append(v)
                else:
                    blocks = _blocks(atoms, f, vals, M, pt, xs, ys)
                    if blocks is None:
                        continue
                    total += sum(len(b.children) + len(b.children[0].children) for b in blocks)
                    if total > lim:
                        raise ResourceError(f"normal form exceeds {lim} nodes")
                    out.append(F.And(blocks) if len(blocks) > 1 else blocks[0])
    return F.Spec(spec.inputs, spec.outputs, F.disj(out))


def _blocks(atoms, f, vals, M, pt, xs, ys) -> Optional[List[F.And]]:
    m = len(ys)
    residues = [F.mod({v: 1}, pt[v], M) for v in xs + ys]
    eqs = [_eq_group(A, M, xs + ys[:i], ys[i:]) for i, A in enumerate(f)]
    blocks = []
    for a in atoms:
        if isinstance(a, F.ModCon):
            psi = _const_leaf(F.eval_atom(a, pt))
            subs = []
            for i in range(m):
                p2 = dict(pt)
                p2.update({y: int(v) for y, v in zip(ys[i:], vals[i])})
                subs.append(_const_leaf(F.eval_atom(a, p2)))
        else:
            psi = F.Leaf(a)
            subs = []
            for i, A in enumerate(f):
                b = _subst_atom(a, A, xs + ys[:i], ys[i:])
                subs.append(_const_leaf(F.eval_atom(b, {})) if b.is_const() else F.Leaf(b))
        if any(s.atom == F.FALSE_ATOM for s in subs):
            return None
        blocks.append(F.And((F.Or((psi,) + tuple(eqs)),) + tuple(subs) + tuple(residues)))
    return blocks


@dataclass
class ConjunctCert:
    modulus: int
    residues: Dict[str, int]
    maps: List[AffineMapQ]
    blocks: int

    def to_text(self) -> str:
        rs = " ".join(f"{v}={r}" for v, r in self.residues.items())
        lines = [f"conjunct M={self.modulus} residues {rs} blocks={self.blocks}"]
        for i, A in enumerate(self.maps):
            rows = "; ".join(" ".join(str(q) for q in row) + f" | {k}" for row, k in zip(A.D, A.d))
            lines.append(f"  A{i}: {rows}")
        return "\n".join(lines)


@dataclass
class PSySyNFCert:
    conjuncts: List[ConjunctCert]
    ok: bool = True

    def to_text(self) -> str:
        return "psysynf: yes\n" + "\n".join(c.to_text() for c in self.conjuncts) + "\n"


@dataclass
class PSySyNFRejection:
    reason: str
    ok: bool = False

    def to_text(self) -> str:
        return f"psysynf: no\nreason: {self.reason}\n"


class _Reject(Exception):
    pass


def _read_eq_group(g: F.Node, M: int, xs, ys) -> Tuple[int, AffineMapQ]:
    if not isinstance(g, F.And) or not all(isinstance(c, F.Leaf) for c in g.children):
        raise _Reject("equality disjunct is not a conjunction of atoms")
    kids = [c.atom for c in g.children]
    if len(kids) % 2 or any(not isinstance(a, F.LinIneq) for a in kids):
        raise _Reject("equality disjunct must be paired inequalities")
    rows = {}
    for a, b in zip(kids[::2], kids[1::2]):
        if b.coeffs != tuple((v, -k) for v, k in a.coeffs) or b.const != -a.const:
            raise _Reject(f"unpaired equality atoms {F.format_atom(a)}, {F.format_atom(b)}")
        pos = [(v, k) for v, k in a.coeffs if v in ys and k > 0]
        # the defined output is the last-ordered output with a positive coefficient
        if not pos:
            raise _Reject("equality without a defined output")
        y = max(pos, key=lambda t: ys.index(t[0]))[0]
        rows[y] = a
    k = len(rows)
    i = len(ys) - k
    if set(rows) != set(ys[i:]):
        raise _Reject(f"equality disjunct does not define a suffix of the outputs: {sorted(rows)}")
    srcs = list(xs) + list(ys[:i])
    D, d = [], []
    for y in ys[i:]:
        a = rows[y]
        c = a.coef(y)
        if any(v not in srcs and v != y for v in a.vars):
            raise _Reject(f"A_{i} row for {y} mentions a later output")
        D.append(tuple(Fraction(-a.coef(v), c) for v in srcs))
        d.append(Fraction(-a.const, c))
    return i, AffineMapQ(tuple(D), tuple(d))


def _parse_block(blk: F.Node, xs, ys):
    if not isinstance(blk, F.And):
        raise _Reject("building block is not a conjunction")
    ors = [c for c in blk.children if isinstance(c, F.Or)]
    leaves = [c for c in blk.children if isinstance(c, F.Leaf)]
    if len(ors) != 1 or len(ors) + len(leaves) != len(blk.children):
        raise _Reject("building block needs exactly one disjunction and atoms")
    vs = list(xs) + list(ys)
    residues, subs = {}, []
    M = None
    for l in leaves:
        a = l.atom
        if isinstance(a, F.ModCon) and a.positive and len(a.coeffs) == 1 and a.coeffs[0][1] == 1 \
                and a.coeffs[0][0] in vs and a.coeffs[0][0] not in residues:
            if M is not None and a.modulus != M:
                raise _Reject("residue constraints use different moduli")
            M = a.modulus
            residues[a.coeffs[0][0]] = a.residue
        else:
            subs.append(a)
    if set(residues) != set(vs):
        # one-variable modulus-1 residues collapse to constants; accept only real gaps
        raise _Reject(f"missing residue constraints for {sorted(set(vs) - set(residues))}")
    disj = ors[0].children
    if not isinstance(disj[0], F.Leaf):
        raise _Reject("first disjunct must be an atom")
    psi = disj[0].atom
    maps: Dict[int, AffineMapQ] = {}
    for g in disj[1:]:
        i, A = _read_eq_group(g, M, xs, ys)
        if i in maps:
            raise _Reject(f"A_{i} appears twice")
        maps[i] = A
    if sorted(maps) != list(range(len(ys))):
        raise _Reject(f"expected affine maps A_0..A_{len(ys) - 1}, found {sorted(maps)}")
    return M, residues, psi, [maps[i] for i in range(len(ys))], subs


def check_psysynf(phi: F.Spec) -> "PSySyNFCert | PSySyNFRejection":
    xs, ys = list(phi.inputs), list(phi.outputs)
    body = phi.body
    for y in ys:
        if not check_modulo_tame(body, y).tame:
            return PSySyNFRejection(f"not {y}-modulo-tame")
    units = _units(body)
    certs = []
    try:
        for u in units:
            if not isinstance(u, F.And):
                if isinstance(u, F.Leaf) and u.atom == F.FALSE_ATOM:
                    continue
                raise _Reject(f"atom outside any conjunction: {F.format_node(u)}")
            kids = u.children
            blocks = list(kids) if all(isinstance(c, F.And) for c in kids) else [u]
            ref = None
            for blk in blocks:
                M, residues, psi, maps, subs = _parse_block(blk, xs, ys)
                key = (M, tuple(sorted(residues.items())), tuple((A.D, A.d) for A in maps))
                if ref is None:
                    ref = key
                elif key != ref:
                    raise _Reject("blocks of one conjunct disagree on M, residues or maps")
                if len(subs) != len(ys):
                    raise _Reject(f"expected {len(ys)} substituted atoms, found {len(subs)}")
                for i, (A, got) in enumerate(zip(maps, subs)):
                    if any(M % q for q in A.denominators()):
                        raise _Reject(f"denominator of A_{i} does not divide M={M}")
                    pt = [residues[v] for v in xs + ys[:i]]
                    if any(q.denominator != 1 for q in A(pt)):
                        raise _Reject(f"A_{i} is not integral on the residue vector")
                    # a folded modulo atom cannot be re-derived; its substituted form must be true
                    want = F.TRUE_ATOM if psi.is_const() else _subst_atom(psi, A, xs + ys[:i], ys[i:])
                    if qelim.canon_atom(want) != qelim.canon_atom(got):
                        raise _Reject(f"atom {F.format_atom(got)} is not psi(x^{i}, A_{i}(x^{i}))")
            M, rs, _ = ref
            certs.append(ConjunctCert(M, dict(rs), maps, len(blocks)))
    except _Reject as e:
        return PSySyNFRejection(str(e))
    return PSySyNFCert(certs)
