import itertools
import math
import random

import pytest

from presynth import formula as F
from presynth import qelim as Q
from presynth.errors import ResourceError

from corpus import random_formula
from specs import _D1_PROJECTED, two_branch, psi, sched_psi


def _agree_on_box(psi_, phi, free, bound_var, B, box=range(-8, 9)):
    for p in itertools.product(box, repeat=len(free)):
        env = dict(zip(free, p))
        want = any(F.eval(phi, {**env, bound_var: y}) for y in range(-B, B + 1))
        assert F.eval(psi_, env) == want, env


def cooper_bound(phi, y, radius=8):
    """A window [-B, B] that must contain a witness whenever one exists,
    given the other variables lie in [-radius, radius]."""
    t, a, L = 0, 1, 1
    for at in F.atoms(phi):
        rest = sum(abs(c) for v, c in at.coeffs if v != y)
        t = max(t, abs(getattr(at, "const", 0)) + radius * rest)
        if at.coef(y):
            a = math.lcm(a, abs(at.coef(y)))
        if isinstance(at, F.ModCon):
            L = math.lcm(L, at.modulus)
    return t + a * L + 1


def test_eliminate_always_satisfiable():
    phi = F.parse("(and (>= (- y x) 1) (>= (- (+ x 2) y) 1))")
    res = Q.eliminate_one(phi, "y")
    for x in range(-20, 21):
        assert F.eval(res, {"x": x})


def test_eliminate_contradictory_residues():
    res = Q.eliminate_one(F.parse("(and (mod= y 0 2) (mod= y 1 2))"), "y")
    assert Q.simplify(res) == F.FALSE or not F.eval(res, {})


def test_eliminate_scheduling_first_output():
    sp = sched_psi()
    res = Q.eliminate_one(sp.body, "d1")
    psi45 = F.parse(_D1_PROJECTED)
    loc = Q.local_exists(sp.body, ["d1"])
    for t1, t2, d2, D in itertools.product(range(0, 5), range(0, 5), range(0, 4), range(0, 8)):
        env = {"t1": t1, "t2": t2, "d2": d2, "D": D}
        # d1 >= 0 and d1 <= D, so this window is exhaustive
        want = any(F.eval(sp.body, {**env, "d1": d1}) for d1 in range(0, D + 1))
        assert F.eval(res, env) == want
        assert (F.eval(psi45, env) and F.eval(loc, env)) == want


def test_eliminate_block_two_branch_projection():
    sp = two_branch()
    res = Q.eliminate_block(sp, ["y"])
    assert F.free_vars(res) <= {"x"}
    for x in range(-30, 31):
        want = any(F.eval(sp, {"x": x, "y": y}) for y in range(-60, 61))
        assert F.eval(res, {"x": x}) == want


def test_eliminate_block_trivial_cases():
    phi = F.parse("(>= x 3)")
    assert Q.eliminate_block(phi, []) == Q.simplify(phi)
    chain = F.parse("(and (= y1 x) (= y2 y1))")
    assert Q.simplify(Q.eliminate_block(chain, ["y1", "y2"])) == F.TRUE


def test_budget_exceeded():
    rng = random.Random(3)
    phi = F.conj([random_formula(rng, ["x", "y", "z"], max_atoms=8, max_mod=7) for _ in range(3)])
    with pytest.raises(ResourceError):
        Q.eliminate_block(phi, ["y", "z"], budget=5)


def _qf(prefix, text):
    return Q.QuantifiedFormula(prefix, F.parse(text))


def test_decide_examples():
    assert Q.decide(_qf([("A", "x"), ("E", "y")], "(>= (- y x) 1)"))
    assert not Q.decide(_qf([("A", "x"), ("E", "y")], "(and (mod= y 0 2) (= y x))"))
    assert Q.decide(Q.QuantifiedFormula([("A", "x"), ("E", "y")], psi(3).body))


def test_decide_rejects_open_and_bad_prefix():
    with pytest.raises(ValueError):
        Q.decide(_qf([("E", "y")], "(>= (- y x) 1)"))
    with pytest.raises(ValueError):
        _qf([("E", "y"), ("A", "y")], "(>= y 0)")
    with pytest.raises(ValueError):
        _qf([("Q", "y")], "(>= y 0)")


def test_decide_matches_bounded_game():
    rng = random.Random(77)
    for _ in range(40):
        phi = random_formula(rng, ["a", "b"], max_atoms=4, coef=2, const=3, max_mod=3)
        # both quantifier orders over a box large enough to contain the periodic behaviour
        B = cooper_bound(phi, "b", radius=12)
        for pre in ([("A", "a"), ("E", "b")], [("E", "a"), ("A", "b")]):
            got = Q.decide(Q.QuantifiedFormula(pre, phi))
            inner = any if pre[1][0] == "E" else all
            outer = any if pre[0][0] == "E" else all
            want = outer(inner(F.eval(phi, {"a": a, "b": b}) for b in range(-B, B + 1)) for a in range(-12, 13))
            # outer range is bounded, so only the direction the box can certify is checked
            if pre[0][0] == "A" and got:
                assert want
            if pre[0][0] == "E" and not got:
                assert not want


def test_local_exists_examples():
    sp = two_branch()
    loc = Q.local_exists(sp, ["y"])
    # 3x - 2 >= 0 is the only leaf without y
    kept = [l for l in F.iter_leaves(loc) if l != F.TRUE]
    assert kept == [F.ge({"x": 3}, -2)]
    assert len(list(F.iter_leaves(loc))) == 4
    phi = F.parse("(and (>= x 0) (mod= x 1 3))")
    assert Q.local_exists(phi, ["y"]) == phi
    assert Q.local_exists(F.parse("(>= y 0)"), ["y"]) == F.TRUE


def test_eliminate_soundness_corpus():
    rng = random.Random(1001)
    for _ in range(40):
        vs = ["p", "q", "y"][3 - rng.randint(2, 3):]
        phi = random_formula(rng, vs, max_atoms=5, coef=3, const=6, max_mod=4)
        res = Q.eliminate_one(phi, "y")
        free = [v for v in vs if v != "y"]
        assert F.free_vars(res) <= set(free)
        _agree_on_box(res, phi, free, "y", cooper_bound(phi, "y"))


def test_exists_implies_local_exists():
    rng = random.Random(5)
    for _ in range(40):
        phi = random_formula(rng, ["x", "y"], max_atoms=6)
        loc = Q.local_exists(phi, ["y"])
        for x in range(-10, 11):
            if any(F.eval(phi, {"x": x, "y": y}) for y in range(-40, 41)):
                assert F.eval(loc, {"x": x})


def test_find_point():
    phi = F.parse("(and (mod= a 2 5) (>= a 10) (= b (+ a 1)))")
    a, b = Q.find_point(phi, ["a", "b"])
    assert a % 5 == 2 and a >= 10 and b == a + 1
    assert Q.find_point(F.parse("(and (>= a 1) (<= a 0))"), ["a"]) is None


def test_canon_atom_reduces():
    at = Q.canon_atom(F.ModCon({"x": 8, "y": 4}, 14, 6))
    assert at.modulus <= 6 and 0 <= at.residue < at.modulus
    for x, y in itertools.product(range(-6, 7), repeat=2):
        env = {"x": x, "y": y}
        assert F.eval_atom(at, env) == ((8 * x + 4 * y - 14) % 6 == 0)
