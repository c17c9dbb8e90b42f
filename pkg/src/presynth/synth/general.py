"""General (exponential) Skolem synthesis via affine candidate maps.

Each DNF disjunct is written as  A y <= B x + c  (plus equalities and input
guards); a finite list of affine maps x -> D (B x + c) + d is tried in a fixed
order and the first one that yields an integral solution is output.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .. import formula as F
from ..circuit import Circuit, CircuitBuilder
from ..errors import ResourceError
from ..exactnum import (AffineMapQ, column_echelon, frac_norm, hadamard_bound,
                        inverse, lcm_all)

CANDIDATE_BUDGET = int(os.environ.get("PRESYNTH_CANDIDATES", 50000))
DEFAULT_RADIUS = 0    # widened on demand by synth_general_detailed
CANDIDATE_GAP = "CANDIDATE_GAP"


@dataclass
class CandidateSet:
    """Maps b -> D b + d (b = B x + c, the right-hand side vector)."""
    maps: List[AffineMapQ]
    bound: int
    trace: List[Tuple[Tuple[int, ...], Tuple[int, ...]]] = field(default_factory=list)

    def __len__(self):
        return len(self.maps)

    def over_inputs(self, B, c) -> List[AffineMapQ]:
        """Compose each map with b = B x + c."""
        out = []
        for mp in self.maps:
            D = tuple(tuple(sum((Fraction(row[k]) * B[k][j] for k in range(len(B))), Fraction(0))
                            for j in range(len(B[0]) if B else 0)) for row in mp.D)
            d = tuple(sum((Fraction(row[k]) * c[k] for k in range(len(c))), Fraction(0)) + dd
                      for row, dd in zip(mp.D, mp.d))
            out.append(AffineMapQ(D, d))
        return out


def _slack_ranges(A_S, is_pin, radius):
    H, _, _ = column_echelon(A_S)
    out = []
    for i, pin in enumerate(is_pin):
        if pin:
            out.append(sorted(range(-radius, radius + 1), key=lambda s: (abs(s), s < 0)))
        else:
            out.append(list(range(abs(H[i][i]) * (radius + 1))))
    return out


def generate_affine_candidates(A, B=None, c=None, radius: int = DEFAULT_RADIUS,
                               budget: Optional[int] = None) -> CandidateSet:
    """Vertex candidates for  A y <= b: for every invertible m x m row subset S
    (unit pin rows e_j stand in for missing rows), y = A_S^-1 (b_S - s) with
    slack s over a residue system of the lattice A_S Z^m, widened by
    ``radius``; pin slacks range over [-radius, radius].

    ``B`` and ``c`` are accepted for interface symmetry; the maps are returned
    in right-hand-side space (see CandidateSet.over_inputs).
    """
    A = [[int(v) for v in row] for row in A]
    l = len(A)
    m = len(A[0]) if A else 0
    if A and any(len(r) != m for r in A):
        raise ValueError("ragged matrix")
    lim = CANDIDATE_BUDGET if budget is None else budget
    if m == 0:
        return CandidateSet([AffineMapQ((), ())], 1)
    delta = hadamard_bound(A) if A else 1
    bound = (m + 1) * delta * delta
    rows = [(tuple(r), False, i) for i, r in enumerate(A) if any(r)]
    rows += [(tuple(int(j == k) for k in range(m)), True, None) for j in range(m)]
    seen = set()
    maps: List[AffineMapQ] = []
    trace = []
    for S in itertools.combinations(range(len(rows)), m):
        A_S = [rows[i][0] for i in S]
        inv = inverse(A_S)
        if inv is None:
            continue
        assert frac_norm([list(r) for r in inv]) <= bound, "candidate exceeds the fractional-norm bound"
        pins = [rows[i][1] for i in S]
        D = [[Fraction(0)] * l for _ in range(m)]
        for col, i in enumerate(S):
            src = rows[i][2]
            if src is not None:
                for r in range(m):
                    D[r][src] += inv[r][col]
        Dt = tuple(tuple(r) for r in D)
        ranges = _slack_ranges(A_S, pins, radius)
        slacks = sorted(itertools.product(*ranges), key=lambda s: (sum(abs(v) for v in s), s))
        for s in slacks:
            d = tuple(-sum((inv[r][k] * s[k] for k in range(m)), Fraction(0)) for r in range(m))
            key = (Dt, d)
            if key in seen:
                continue
            seen.add(key)
            maps.append(AffineMapQ(Dt, d))
            trace.append((tuple(rows[i][2] if rows[i][2] is not None else -1 - j
                                for j, i in enumerate(S)), tuple(s)))
            if len(maps) > lim:
                raise ResourceError(f"more than {lim} affine candidates")
    return CandidateSet(maps, bound, trace)


# ---------------------------------------------------------------- disjunct shape

Aff = Tuple[Tuple[Fraction, ...], Fraction]   # coefficients over x, constant


@dataclass
class Disjunct:
    atoms: List[F.Atom]
    guards: List[F.Atom]                   # input-only modulo atoms
    rows: List[F.LinIneq]                  # every linear atom (checked per candidate)
    candidates: List[AffineMapQ]           # over the inputs, one value per output
    n_equalities: int = 0


def _split(atoms: Sequence[F.Atom], ys: Sequence[str]):
    yset = set(ys)
    guards = [a for a in atoms if isinstance(a, F.ModCon)]
    lin = [a for a in atoms if isinstance(a, F.LinIneq)]
    if any(set(a.vars) & yset for a in guards):
        raise ValueError("output modulo atoms must be removed first")
    eqs, ineqs, used = [], [], set()
    index = {(a.coeffs, a.const): i for i, a in enumerate(lin)}
    for i, a in enumerate(lin):
        if i in used or not (set(a.vars) & yset):
            continue
        j = index.get((tuple((v, -k) for v, k in a.coeffs), -a.const))
        if j is not None and j != i and j not in used:
            used.update((i, j))
            eqs.append(a)
    for i, a in enumerate(lin):
        if i not in used and set(a.vars) & yset:
            ineqs.append(a)
    return guards, lin, eqs, ineqs


def _affine_zero(n) -> Aff:
    return tuple(Fraction(0) for _ in range(n)), Fraction(0)


def parametrize(eqs: Sequence[F.LinIneq], xs: Sequence[str], ys: Sequence[str]):
    """y = y0(x) + V2 z  for the integer solutions of the equalities.

    Returns (y0 as a list of Aff, V2 as an integer matrix |ys| x m').
    """
    n, m = len(xs), len(ys)
    if not eqs:
        return [_affine_zero(n) for _ in ys], [[int(i == j) for j in range(m)] for i in range(m)]
    E = [[a.coef(y) for y in ys] for a in eqs]
    # a.y + b.x + c = 0  ->  a.y = -b.x - c
    rhs = [(tuple(Fraction(-a.coef(x)) for x in xs), Fraction(-a.const)) for a in eqs]
    H, V, r = column_echelon(E)
    w: List[Aff] = []
    for j in range(r):
        p = next(i for i in range(len(E)) if H[i][j] != 0)
        cs, k = list(rhs[p][0]), rhs[p][1]
        for l_ in range(j):
            h = H[p][l_]
            if h:
                cs = [u - h * v for u, v in zip(cs, w[l_][0])]
                k -= h * w[l_][1]
        piv = H[p][j]
        w.append((tuple(u / piv for u in cs), k / piv))
    y0 = []
    for i in range(m):
        cs = [Fraction(0)] * n
        k = Fraction(0)
        for j in range(r):
            if V[i][j]:
                cs = [u + V[i][j] * v for u, v in zip(cs, w[j][0])]
                k += V[i][j] * w[j][1]
        y0.append((tuple(cs), k))
    V2 = [[V[i][j] for j in range(r, m)] for i in range(m)]
    return y0, V2


def disjunct_candidates(atoms: Sequence[F.Atom], xs: Sequence[str], ys: Sequence[str],
                        radius: int, budget: Optional[int] = None) -> Disjunct:
    guards, lin, eqs, ineqs = _split(atoms, ys)
    n = len(xs)
    y0, V2 = parametrize(eqs, xs, ys)
    mz = len(V2[0]) if V2 and V2[0] else 0
    # inequality rows in z-space:  (-a) V2 z <= b.x + c + a.y0(x)
    A, Bq, cq, seen = [], [], [], set()
    for a in ineqs:
        av = [a.coef(y) for y in ys]
        row = tuple(-sum(av[i] * V2[i][j] for i in range(len(ys))) for j in range(mz))
        bx = [Fraction(a.coef(x)) for x in xs]
        k = Fraction(a.const)
        for i in range(len(ys)):
            if av[i]:
                bx = [u + av[i] * v for u, v in zip(bx, y0[i][0])]
                k += av[i] * y0[i][1]
        key = (row, tuple(bx), k)
        if not any(row) or key in seen:
            continue
        seen.add(key)
        A.append(list(row))
        Bq.append(bx)
        cq.append(k)
    cands: List[AffineMapQ] = []
    if mz == 0:
        zmaps = [((), ())]
    else:
        cs = generate_affine_candidates(A if A else [[0] * mz], None, None, radius, budget)
        if A:
            zmaps = [(mp.D, mp.d) for mp in cs.over_inputs(Bq, cq)]
        else:
            zmaps = [(tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(mz)), mp.d) for mp in cs.maps]
    seen_maps = set()
    for Dz, dz in zmaps:
        D, d = [], []
        for i in range(len(ys)):
            row = list(y0[i][0])
            k = y0[i][1]
            for j in range(mz):
                if V2[i][j]:
                    row = [u + V2[i][j] * v for u, v in zip(row, Dz[j])]
                    k += V2[i][j] * dz[j]
            D.append(tuple(row))
            d.append(k)
        key = (tuple(D), tuple(d))
        if key not in seen_maps:
            seen_maps.add(key)
            cands.append(AffineMapQ(tuple(D), tuple(d)))
    return Disjunct(list(atoms), guards, lin, cands, len(eqs))


# ---------------------------------------------------------------- circuit

@dataclass
class GeneralResult:
    circuit: Circuit
    radius: int
    disjuncts: List[Disjunct]
    fired_circuit: Circuit            # extra last output: number of passing candidates
    gaps: List[Tuple[int, ...]] = field(default_factory=list)
    report: object = None

    @property
    def candidate_count(self) -> int:
        return sum(len(d.candidates) for d in self.disjuncts)


def _emit(b: CircuitBuilder, xs, ys, n_out, disjuncts: Sequence[Disjunct]):
    env = {v: i for i, v in enumerate(xs)}
    one = b.const(1)
    G_list, vals = [], []
    for dj in disjuncts:
        g = b.characteristic(F.conj(F.Leaf(a) for a in dj.guards), env) if dj.guards else one
        for mp in dj.candidates:
            den = mp.common_denominator()
            Ns = [b.lin([(env[x], int(row[j] * den)) for j, x in enumerate(xs)], int(k * den))
                  for row, k in zip(mp.D, mp.d)]
            yv = [b.div(den, N) for N in Ns]
            rem = b.lin([(N, 1) for N in Ns] + [(q, -den) for q in yv])
            M = b.eq0(rem, one)
            e = dict(env)
            e.update(zip(ys, yv))
            rows = [b.c_gate(b.term(a.coeffs, a.const, e), one) for a in dj.rows]
            I = b.c_gate(b.lin([(w, 1) for w in rows], -len(rows)), one) if rows else one
            G_list.append(b.eq0(b.lin([(I, -1)], 1), b.eq0(b.lin([(g, -1)], 1), M)))
            vals.append(yv[:n_out])
    outs = [b.const(0)] * n_out
    prefix = b.const(0)
    for G, yv in zip(G_list, vals):
        Fw = b.eq0(prefix, G)
        for c in range(n_out):
            outs[c] = b.add(outs[c], b.eq0(b.lin([(Fw, -1)], 1), yv[c]))
        prefix = b.add(prefix, G)
    return outs, prefix


def build_general(spec: F.Spec, radius: int = DEFAULT_RADIUS, budget: Optional[int] = None):
    sp = F.remove_output_modulos(spec)
    xs, ys = list(sp.inputs), list(sp.outputs)
    dnf = F.to_dnf(sp.body)
    disjuncts = [disjunct_candidates(atoms, xs, ys, radius, budget) for atoms in dnf]
    total = sum(len(d.candidates) for d in disjuncts)
    lim = CANDIDATE_BUDGET if budget is None else budget
    if total > lim:
        raise ResourceError(f"{total} affine candidates exceed the budget of {lim}")
    b = CircuitBuilder(len(xs))
    outs, fired = _emit(b, xs, ys, len(spec.outputs), disjuncts)
    return b.build(outs), b.build(outs + [fired]), disjuncts


def synth_general_detailed(spec: F.Spec, radius: int = DEFAULT_RADIUS, input_box=None,
                           witness_box=None, max_radius: int = 3,
                           budget: Optional[int] = None) -> GeneralResult:
    """Build, and when boxes are given, verify and widen the offset radius
    (up to ``max_radius``) until no candidate gap remains."""
    r = radius
    while True:
        c, fc, dj = build_general(spec, r, budget)
        res = GeneralResult(c, r, dj, fc)
        if input_box is None or witness_box is None:
            return res
        res.gaps, res.report = diagnose_candidate_gaps(spec, fc, input_box, witness_box)
        if not res.gaps or r >= max_radius:
            return res
        r += 1


def synth_general(spec: F.Spec, radius: int = DEFAULT_RADIUS, budget: Optional[int] = None) -> Circuit:
    return build_general(spec, radius, budget)[0]


def diagnose_candidate_gaps(spec: F.Spec, fired_circuit: Circuit, input_box, witness_box):
    """Inputs where the oracle finds a witness but no candidate fires.

    ``fired_circuit`` carries the number of passing candidates as its last
    output.  Returns (gap points, the verify report for the Skolem outputs).
    """
    from ..oracle import verify_skolem
    m = len(spec.outputs)
    skolem = Circuit(fired_circuit.n_inputs, fired_circuit.gates, fired_circuit.outputs[:m])
    rep = verify_skolem(spec, skolem, input_box, witness_box)
    gaps = []
    for x, _, _ in rep.failures:
        if fired_circuit(list(x))[-1] == 0:
            gaps.append(x)
    return gaps, rep
