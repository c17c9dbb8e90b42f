"""Modular-assignment abstraction and period law for single-input circuits, and the
Chinese-remainder reduction from Boolean functional synthesis."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from . import formula as F
from .circuit import Circuit, Div, Eq0, Input, Linear, Max, stats
from .errors import ParseError, ResourceError

ASSIGN_BUDGET = int(os.environ.get("PRESYNTH_ASSIGN_SEGMENTS", 200_000))

# A segment (lo, hi, a, b): on lo <= x <= hi (None = unbounded) the value is a*x + b.
Seg = Tuple[Optional[int], Optional[int], Fraction, Fraction]


def _lo_le(a, b):
    # compare lower endpoints where None is -inf
    return a is None or (b is not None and a <= b)


def _max_lo(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _min_hi(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _nonempty(lo, hi, rho, P):
    if lo is not None and hi is not None:
        if lo > hi:
            return False
        first = lo + (rho - lo) % P
        return first <= hi
    return True


@dataclass
class _Fn:
    """Piecewise-affine function: per residue mod P, a sorted segment list covering Z."""
    P: int
    segs: List[List[Seg]]

    def lift(self, L: int) -> "_Fn":
        if L == self.P:
            return self
        return _Fn(L, [self.segs[r % self.P] for r in range(L)])

    def count(self) -> int:
        return sum(len(s) for s in self.segs)

    def __call__(self, x: int) -> Fraction:
        for lo, hi, a, b in self.segs[x % self.P]:
            if (lo is None or lo <= x) and (hi is None or x <= hi):
                return a * x + b
        raise AssertionError("segments do not cover x")


def _overlay(s1: List[Seg], s2: List[Seg]):
    """Common refinement of two covering segment lists: (lo, hi, f1, f2)."""
    out = []
    i = j = 0
    lo = None
    while i < len(s1) and j < len(s2):
        h1, h2 = s1[i][1], s2[j][1]
        hi = _min_hi(h1, h2)
        out.append((lo, hi, s1[i][2:], s2[j][2:]))
        if hi is None:
            break
        lo = hi + 1
        if h1 == hi:
            i += 1
        if h2 == hi:
            j += 1
    return out


def _compact(segs: List[Seg], rho: int, P: int) -> List[Seg]:
    out: List[Seg] = []
    for s in segs:
        lo, hi, a, b = s
        if not _nonempty(lo, hi, rho, P):
            continue
        if out and out[-1][2] == a and out[-1][3] == b:
            out[-1] = (out[-1][0], hi, a, b)
        else:
            out.append(s)
    if not out:
        return out
    # restore full coverage after dropping class-empty pieces
    fixed = []
    prev_hi = None
    for k, (lo, hi, a, b) in enumerate(out):
        lo = None if k == 0 else prev_hi + 1
        fixed.append((lo, hi, a, b))
        prev_hi = hi
    last = fixed[-1]
    fixed[-1] = (last[0], None, last[2], last[3])
    return fixed


def _binary(f: _Fn, g: _Fn, op) -> _Fn:
    L = lcm(f.P, g.P)
    f, g = f.lift(L), g.lift(L)
    segs = []
    for rho in range(L):
        pieces = []
        for lo, hi, (a1, b1), (a2, b2) in _overlay(f.segs[rho], g.segs[rho]):
            pieces.extend(op(lo, hi, a1, b1, a2, b2, rho, L))
        segs.append(_compact(pieces, rho, L))
    return _Fn(L, segs)


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _floor(q: Fraction) -> int:
    return q.numerator // q.denominator


def _max_op(lo, hi, a1, b1, a2, b2, rho, P):
    if a1 == a2:
        return [(lo, hi, a1, b1) if b1 >= b2 else (lo, hi, a2, b2)]
    root = (b2 - b1) / (a1 - a2)
    if a1 > a2:   # f wins for x >= root
        t = _ceil(root)
        left, right = (a2, b2), (a1, b1)
    else:         # f wins for x <= root
        t = _floor(root) + 1
        left, right = (a1, b1), (a2, b2)
    out = []
    if lo is None or lo <= t - 1:
        out.append((lo, _min_hi(hi, t - 1), *left))
    if hi is None or hi >= t:
        out.append((_max_lo(lo, t), hi, *right))
    return [s for s in out if s[0] is None or s[1] is None or s[0] <= s[1]]


def _eq0_op(lo, hi, ac, bc, av, bv, rho, P):
    z = Fraction(0)
    if ac == 0:
        return [(lo, hi, av, bv) if bc == 0 else (lo, hi, z, z)]
    x0 = -bc / ac
    if x0.denominator != 1:
        return [(lo, hi, z, z)]
    x0 = int(x0)
    if x0 % P != rho or (lo is not None and x0 < lo) or (hi is not None and x0 > hi):
        return [(lo, hi, z, z)]
    out = []
    if lo is None or lo <= x0 - 1:
        out.append((lo, x0 - 1, z, z))
    out.append((x0, x0, av, bv))
    if hi is None or hi >= x0 + 1:
        out.append((x0 + 1, hi, z, z))
    return out


def _div(f: _Fn, m: int) -> _Fn:
    k = 1
    for segs in f.segs:
        for _, _, a, _ in segs:
            aP = a * f.P
            assert aP.denominator == 1
            k = lcm(k, m // gcd(int(aP), m))
    P2 = f.P * k
    segs2 = []
    for rho in range(P2):
        out = []
        for lo, hi, a, b in f.segs[rho % f.P]:
            v0 = a * rho + b
            assert v0.denominator == 1
            a2 = a / m
            b2 = Fraction(_floor(v0 / m)) - a2 * rho
            out.append((lo, hi, a2, b2))
        segs2.append(_compact(out, rho, P2))
    return _Fn(P2, segs2)


def _gate_fns(c: Circuit, budget: Optional[int] = None) -> List[_Fn]:
    if c.n_inputs != 1:
        raise ValueError("modular assignments need a single-input circuit")
    lim = ASSIGN_BUDGET if budget is None else budget
    one, zero = Fraction(1), Fraction(0)
    fns: List[_Fn] = []
    for g in c.gates:
        t = type(g)
        if t is Input:
            f = _Fn(1, [[(None, None, one, zero)]])
        elif t is Linear:
            f = _Fn(1, [[(None, None, zero, Fraction(g.const))]])
            for w, k in g.terms:
                f = _binary(f, fns[w], lambda lo, hi, a1, b1, a2, b2, r, P, k=k: [(lo, hi, a1 + k * a2, b1 + k * b2)])
        elif t is Max:
            f = _binary(fns[g.a], fns[g.b], _max_op)
        elif t is Eq0:
            f = _binary(fns[g.cond], fns[g.val], _eq0_op)
        else:
            f = _div(fns[g.arg], g.m)
        if f.count() > lim:
            raise ResourceError(f"modular assignment exceeds {lim} segments")
        fns.append(f)
    return fns


@dataclass
class ModularAssignment:
    """f(x) = (c*x + d) / modulus for the first entry (r, lo, hi, c, d) with
    x = r (mod modulus) and lo <= x <= hi (None = unbounded)."""
    modulus: int
    entries: List[Tuple[int, Optional[int], Optional[int], int, int]]

    def __call__(self, x: int) -> int:
        m = self.modulus
        for r, lo, hi, c, d in self.entries:
            if x % m == r and (lo is None or lo <= x) and (hi is None or x <= hi):
                num = c * x + d
                if num % m:
                    raise AssertionError(f"non-integral value at {x}")
                return num // m
        raise AssertionError(f"no entry matches {x}")

    def breakpoints(self) -> List[int]:
        pts = set()
        for _, lo, hi, _, _ in self.entries:
            if lo is not None:
                pts.add(lo)
            if hi is not None:
                pts.add(hi)
        return sorted(pts)

    def pieces(self) -> Iterator[Tuple[int, Optional[int], Optional[int], Fraction, Fraction]]:
        for r, lo, hi, c, d in self.entries:
            yield r, lo, hi, Fraction(c, self.modulus), Fraction(d, self.modulus)

    def to_text(self) -> str:
        def end(v, inf):
            return inf if v is None else str(v)
        lines = [f"modulus {self.modulus}"]
        for r, lo, hi, c, d in self.entries:
            lines.append(f"r={r} I=[{end(lo, '-inf')},{end(hi, 'inf')}] c={c} d={d}")
        return "\n".join(lines) + "\n"


def modular_assignment(c: Circuit, output: int = 0, budget: Optional[int] = None) -> ModularAssignment:
    fn = _gate_fns(c, budget)[c.outputs[output]]
    P = fn.P
    entries = []
    for rho in range(P):
        for lo, hi, a, b in fn.segs[rho]:
            cc, dd = a * P, b * P
            assert cc.denominator == 1 and dd.denominator == 1
            entries.append((rho, lo, hi, int(cc), int(dd)))
    return ModularAssignment(P, entries)


def refine_assignments(assigns: Sequence[ModularAssignment]):
    """Common refinement: yields (L, rho, lo, hi, [(a_k, b_k) per assignment])."""
    fns = []
    for ma in assigns:
        segs: List[List[Seg]] = [[] for _ in range(ma.modulus)]
        for r, lo, hi, a, b in ma.pieces():
            segs[r].append((lo, hi, a, b))
        fns.append(_Fn(ma.modulus, segs))
    L = 1
    for f in fns:
        L = lcm(L, f.P)
    fns = [f.lift(L) for f in fns]
    for rho in range(L):
        cur = [(s[0], s[1], [s[2:]]) for s in fns[0].segs[rho]] if fns else [(None, None, [])]
        for f in fns[1:]:
            nxt = []
            wrapped = [(lo, hi, 0, idx) for idx, (lo, hi, _) in enumerate(cur)]
            for lo, hi, (_, idx), ab in _overlay(wrapped, f.segs[rho]):
                nxt.append((lo, hi, cur[idx][2] + [ab]))
            cur = nxt
        for lo, hi, fs in cur:
            if _nonempty(lo, hi, rho, L):
                yield L, rho, lo, hi, fs


# ---------------------------------------------------------------- period law

class PeriodLawViolation(AssertionError):
    pass


@dataclass
class PeriodReport:
    bound: int
    lo: int
    hi: int
    horizon: int
    boundary_violations: List[int] = field(default_factory=list)
    interior_violations: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.interior_violations


def _horizon(c: Circuit, bound: int) -> int:
    try:
        ma = modular_assignment(c)
        pts = ma.breakpoints()
        return (max(abs(p) for p in pts) if pts else 0) + bound
    except ResourceError:
        return 0


def validate_period(c: Circuit, p: int, N: Optional[int] = None, horizon: Optional[int] = None) -> PeriodReport:
    if N is None:
        N = min(10 ** 6, 1000 * p)
    if horizon is None:
        horizon = _horizon(c, p)
    N = max(N, horizon + 2 * p + 1)
    import numpy as np
    xs = np.arange(-N, N + 1, dtype=np.int64)
    vals = np.asarray(c.eval_batch([xs])[0])
    if not np.isin(vals, (0, 1)).all():
        bad = int(xs[~np.isin(vals, (0, 1))][0])
        raise ValueError(f"circuit output is not 0/1 (at x={bad})")
    diff = np.nonzero(vals[:-p] != vals[p:])[0] if p < len(xs) else np.array([], dtype=np.int64)
    rep = PeriodReport(p, -N, N, horizon)
    for i in diff:
        x = int(xs[i])
        # interior: x and x+p both beyond the horizon on the same side
        if (x > horizon) or (x + p < -horizon):
            rep.interior_violations.append(x)
        else:
            rep.boundary_violations.append(x)
    return rep


def period_bound(c: Circuit, N: Optional[int] = None, horizon: Optional[int] = None) -> int:
    """lcm(D)^e for the circuit's div moduli D and div-gate count e, validated on a range."""
    st = stats(c)
    p = 1
    for m in st.div_moduli_set:
        p = lcm(p, m)
    p = p ** st.div_gate_count
    rep = validate_period(c, p, N, horizon)
    if not rep.ok:
        raise PeriodLawViolation(f"{p} is not a period: x={rep.interior_violations[:5]}")
    return p


# ---------------------------------------------------------------- CRT reduction

def first_primes(k: int) -> List[int]:
    out = []
    n = 2
    while len(out) < k:
        if all(n % p for p in out if p * p <= n):
            out.append(n)
        n += 1
    return out


@dataclass(frozen=True)
class BoolPi2:
    """forall inputs exists outputs: CNF over variable ids (DIMACS literals)."""
    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    clauses: Tuple[Tuple[int, ...], ...]

    def holds(self, assign: Dict[int, bool]) -> bool:
        return all(any(assign[abs(l)] == (l > 0) for l in cl) for cl in self.clauses)

    def to_text(self) -> str:
        nv = max((abs(l) for cl in self.clauses for l in cl), default=0)
        nv = max([nv, *self.inputs, *self.outputs], default=0)
        lines = [f"p cnf {nv} {len(self.clauses)}",
                 "a " + " ".join(map(str, self.inputs)) + " 0",
                 "e " + " ".join(map(str, self.outputs)) + " 0"]
        lines += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(lines) + "\n"


def parse_qdimacs(text: str) -> BoolPi2:
    """Prefix 'a' lines are the inputs, 'e' lines the outputs."""
    ins: List[int] = []
    outs: List[int] = []
    clauses = []
    cur: List[int] = []
    seen_p = False
    for lno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        try:
            if toks[0] == "p":
                if len(toks) != 4 or toks[1] != "cnf":
                    raise ParseError("expected 'p cnf <vars> <clauses>'", lno, 1)
                seen_p = True
                continue
            if toks[0] in ("a", "e"):
                ids = [int(t) for t in toks[1:]]
                if not ids or ids[-1] != 0:
                    raise ParseError("quantifier line must end with 0", lno, 1)
                (ins if toks[0] == "a" else outs).extend(ids[:-1])
                continue
            for t in toks:
                v = int(t)
                if v == 0:
                    clauses.append(tuple(cur))
                    cur = []
                else:
                    cur.append(v)
        except ValueError:
            raise ParseError(f"bad token in {line!r}", lno, 1) from None
    if cur:
        raise ParseError("last clause not terminated by 0", lno, 1)
    if not seen_p:
        raise ParseError("missing 'p cnf' header", 1, 1)
    declared = set(ins) | set(outs)
    for cl in clauses:
        for l in cl:
            if abs(l) not in declared:
                raise ParseError(f"variable {abs(l)} not in the quantifier prefix", 1, 1)
    return BoolPi2(tuple(ins), tuple(outs), tuple(clauses))


@dataclass(frozen=True)
class CRTEncoding:
    p: Tuple[int, ...]   # one prime per input variable
    q: Tuple[int, ...]   # one prime per output variable
    spec: F.Spec         # inputs ("a",), outputs ("b",)
    source: BoolPi2

    def encode(self, X: Sequence[bool]) -> int:
        return encode_assignment(X, self.p)

    def decode(self, M: int) -> Tuple[bool, ...]:
        return decode_witness(M, self.q)


def encode_bool_to_pa(psi: BoolPi2, a: str = "a", b: str = "b") -> CRTEncoding:
    primes = first_primes(len(psi.inputs) + len(psi.outputs))
    p = tuple(primes[:len(psi.inputs)])
    q = tuple(primes[len(psi.inputs):])
    prime_of = {}
    for v, pr in zip(psi.inputs, p):
        prime_of[v] = (a, pr)
    for v, pr in zip(psi.outputs, q):
        prime_of[v] = (b, pr)
    clauses = []
    for cl in psi.clauses:
        lits = []
        for l in cl:
            var, pr = prime_of[abs(l)]
            lits.append(F.mod({var: 1}, 0, pr, positive=l > 0))
        clauses.append(F.disj(lits))
    return CRTEncoding(p, q, F.Spec((a,), (b,), F.conj(clauses)), psi)


def encode_assignment(X: Sequence[bool], primes: Sequence[int]) -> int:
    n = 1
    for x, pr in zip(X, primes):
        if x:
            n *= pr
    return n


def decode_witness(M: int, primes: Sequence[int]) -> Tuple[bool, ...]:
    return tuple(M % q == 0 for q in primes)


def bool_skolem_via_pa(enc: CRTEncoding, pa_skolem: Circuit) -> Callable[[Sequence[bool]], Tuple[bool, ...]]:
    def skolem(X):
        return enc.decode(pa_skolem([enc.encode(X)])[0])
    return skolem


def verify_bool_skolem(psi: BoolPi2, skolem) -> List[Tuple[bool, ...]]:
    """Input assignments where some Y satisfies psi but skolem(X) does not."""
    bad = []
    for X in itertools.product((False, True), repeat=len(psi.inputs)):
        env = dict(zip(psi.inputs, X))
        sat = any(psi.holds({**env, **dict(zip(psi.outputs, Y))})
                  for Y in itertools.product((False, True), repeat=len(psi.outputs)))
        if sat and not psi.holds({**env, **dict(zip(psi.outputs, skolem(X)))}):
            bad.append(X)
    return bad
