import itertools
import random
from fractions import Fraction

import pytest

from presynth import formula as F
from presynth.circuit import CircuitBuilder
from presynth.errors import PreconditionError
from presynth.oracle import Box, verify_exact, verify_skolem
from presynth.synth.general import (generate_affine_candidates, synth_general,
                                    synth_general_detailed)
from presynth.synth.multi import synth_multi_output
from presynth.synth.one_output import combine_disjunction, resolve_residue, synth_one_output

from corpus import random_spec
from specs import ORDER_D1_BEFORE_D2, two_branch, psi, sched_psi2

IBOX = Box.uniform(["x"], -20, 20)
WBOX = Box.uniform(["y"], -60, 60)


def _spec(text, ins="x", outs="y"):
    return F.parse_spec(f"(spec (inputs {ins}) (outputs {outs}) {text})")


def _lin(n, rows):
    b = CircuitBuilder(n)
    return b.build([b.lin([(b.input(j), k) for j, k in enumerate(cs)], c) for c, cs in rows])


# ---------------------------------------------------------------- one output

def test_psi3_values():
    f = synth_one_output(psi(3))
    assert f(5) == [8] and f(8) == [16] and f(-1) == [0]


def test_identity_spec():
    f = synth_one_output(_spec("(= y x)"))
    assert all(f(x) == [x] for x in range(-30, 31))


def test_constant_choice():
    f = synth_one_output(_spec("(and (>= y 0) (>= (- 5 y) 0) (mod= y 2 3))"))
    vals = {f(x)[0] for x in range(-10, 11)}
    assert len(vals) == 1 and vals <= {2, 5}


def test_one_output_two_branch_exact():
    sp = two_branch()
    c = synth_one_output(sp)
    assert verify_skolem(sp, c, IBOX, WBOX).ok
    assert verify_exact(sp, c).holds


def test_one_output_needs_output_name():
    with pytest.raises(ValueError):
        synth_one_output(F.parse("(>= y x)"))
    with pytest.raises(ValueError):
        synth_one_output(F.parse("(>= y (+ x z))"), "y", ["x"])


def test_resolve_residue():
    n = F.parse("(and (mod= (+ (* 2 y) x) 1 4) (mod= y 1 2) (>= y x))")
    out = resolve_residue(n, "y", 1, 4)
    assert all("y" not in a.vars for a in F.atoms(out) if isinstance(a, F.ModCon))
    for x in range(-8, 9):
        for y in range(-9, 10, 4):   # y = 1 mod 4 (and mod 2)
            assert F.eval(out, {"x": x, "y": y}) == F.eval(n, {"x": x, "y": y})


def test_one_output_corpus_verifies():
    rng = random.Random(17)
    for _ in range(40):
        sp = random_spec(rng, 1, 1, max_atoms=6)
        c = synth_one_output(sp)
        rep = verify_skolem(sp, c, Box.uniform(["x1"], -15, 15), Box.uniform(["y1"], -60, 60))
        assert rep.ok, F.format_formula(sp)


# ---------------------------------------------------------------- combiner

def test_combine_smallest_index_wins():
    phis = [F.parse("(= y x)"), F.parse("(= y (+ x 1))")]
    c = combine_disjunction(phis, [_lin(1, [(0, [1])]), _lin(1, [(1, [1])])], ["x"], "y")
    assert all(c(u) == [u] for u in range(-10, 11))


def test_combine_single_and_unsat_first():
    one = combine_disjunction([F.parse("(= y x)")], [_lin(1, [(3, [2])])], ["x"], "y")
    assert all(one(u) == [2 * u + 3] for u in range(-5, 6))
    phis = [F.parse("(and (>= y 1) (<= y 0))"), F.parse("(= y x)")]
    c = combine_disjunction(phis, [_lin(1, [(7, [0])]), _lin(1, [(0, [1])])], ["x"], "y")
    assert all(c(u) == [u] for u in range(-10, 11))


def test_combine_picks_first_satisfied_pointwise():
    rng = random.Random(6)
    for _ in range(30):
        k = rng.randint(2, 4)
        phis = [F.parse(f"(>= (+ (* {rng.choice([-1, 1])} y) (* {rng.randint(-2, 2)} x) {rng.randint(-5, 5)}) 0)")
                for _ in range(k)]
        rows = [(rng.randint(-4, 4), [rng.randint(-2, 2)]) for _ in range(k)]
        c = combine_disjunction(phis, [_lin(1, [r]) for r in rows], ["x"], "y")
        for u in range(-8, 9):
            vals = [r[0] + r[1][0] * u for r in rows]
            ok = [i for i in range(k) if F.eval(phis[i], {"x": u, "y": vals[i]})]
            if ok:
                assert c(u) == [vals[ok[0]]]


def test_combine_arity_mismatch():
    with pytest.raises(ValueError):
        combine_disjunction([F.parse("(= y x)")], [], ["x"], "y")


# ---------------------------------------------------------------- multi output

def test_multi_chain():
    sp = _spec("(and (= y1 x) (= y2 (+ y1 1)))", outs="y1 y2")
    c = synth_multi_output(sp)
    assert all(c(x) == [x, x + 1] for x in range(-10, 11))


def test_multi_scheduling():
    sp = sched_psi2(ORDER_D1_BEFORE_D2)
    c = synth_multi_output(sp)
    ibox = Box.of({"t1": (0, 6), "t2": (0, 6), "D": (0, 12)})
    rep = verify_skolem(sp, c, ibox, Box.uniform(sp.outputs, 0, 12))
    assert rep.ok and rep.satisfiable_points > 0


def test_multi_rejects_non_normal_form():
    from specs import sched_psi1, ORDER_D2_BEFORE_D1
    with pytest.raises(PreconditionError):
        synth_multi_output(sched_psi1(ORDER_D2_BEFORE_D1))


def test_multi_single_output_matches_one_output():
    sp = psi(3)
    a, b = synth_multi_output(sp), synth_one_output(sp)
    assert all(a(x) == b(x) for x in range(-30, 31))


# ---------------------------------------------------------------- general

def _has(cs, D, d):
    D = tuple(tuple(Fraction(v) for v in row) for row in D)
    d = tuple(Fraction(v) for v in d)
    return any(m.D == D and m.d == d for m in cs.maps)


def test_candidates_unit_rows():
    cs = generate_affine_candidates([[1], [-1]])
    # y <= b1 and -y <= b2: the two vertices y = b1 and y = -b2
    assert _has(cs, [[1, 0]], [0]) and _has(cs, [[0, -1]], [0])
    assert all(m.frac_norm() <= cs.bound for m in cs.maps)


def test_candidates_scaled_rows():
    cs = generate_affine_candidates([[2], [-2]])
    assert _has(cs, [[Fraction(1, 2), 0]], [0])
    assert _has(cs, [[Fraction(1, 2), 0]], [Fraction(-1, 2)])
    assert all(m.frac_norm() <= cs.bound for m in cs.maps)


def test_candidates_zero_rows():
    cs = generate_affine_candidates([[0], [0]], radius=1)
    assert cs.maps and all(all(v == 0 for row in m.D for v in row) for m in cs.maps)
    assert {m.d for m in cs.maps} == {(-1,), (0,), (1,)}


def test_candidates_budget():
    from presynth.errors import ResourceError
    with pytest.raises(ResourceError):
        generate_affine_candidates([[3, 1], [1, -3], [2, 5]], radius=2, budget=10)


def test_general_floor_half():
    sp = _spec("(and (>= (- x (* 2 y)) 0) (>= (+ (* 2 y) (- x) 1) 0))")
    c = synth_general(sp)
    assert all(c(x) == [x // 2] for x in range(-30, 31))


def test_general_two_branch():
    sp = two_branch()
    res = synth_general_detailed(sp, input_box=IBOX, witness_box=WBOX)
    assert not res.gaps and res.report.ok
    assert verify_exact(sp, res.circuit).holds


def test_general_unsat_vacuous():
    sp = _spec("(and (>= y 1) (>= (- y) 0))")
    assert verify_skolem(sp, synth_general(sp), IBOX, WBOX).ok


def test_general_two_outputs_with_modulo():
    sp = _spec("(and (mod= (+ y1 y2) 1 3) (<= x y1) (<= y1 (+ x 2)) (= y2 (* 2 x)))", outs="y1 y2")
    res = synth_general_detailed(sp, input_box=Box.uniform(["x"], -10, 10),
                                 witness_box=Box.uniform(["y1", "y2"], -25, 25))
    assert res.report.ok and not res.gaps


def test_general_corpus_exact_small():
    rng = random.Random(404)
    for _ in range(12):
        sp = random_spec(rng, 1, 1, max_atoms=5)
        res = synth_general_detailed(sp, input_box=Box.uniform(["x1"], -15, 15),
                                     witness_box=Box.uniform(["y1"], -60, 60))
        assert res.report.ok
        assert verify_exact(sp, res.circuit, method="pieces").holds
