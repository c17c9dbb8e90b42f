import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from presynth import formula as F
from presynth.circuit import CircuitBuilder
from presynth.errors import ResourceError
from presynth import oracle
from presynth.oracle import Box, bounded_exists, orthant_key, reference_skolem, table_circuit, verify_skolem

from corpus import random_spec
from specs import two_branch, psi

SUCC = F.parse_spec("(spec (inputs x) (outputs y) (= y (+ x 1)))")


def _affine_circuit(n, rows):
    """rows: list of (const, coeffs)."""
    b = CircuitBuilder(n)
    return b.build([b.lin([(b.input(j), k) for j, k in enumerate(cs)], c) for c, cs in rows])


def test_box_basics():
    b = Box.of({"x": (-1, 1), "y": (0, 3)})
    assert len(b) == 12
    assert b.restrict(["y"]).variables == ("y",)
    with pytest.raises(ValueError):
        Box.of({"x": (2, 1)})


def test_orthant_order():
    pts = sorted(itertools.product(range(-2, 3), repeat=2), key=orthant_key)
    assert pts[0] == (0, 0)
    # nonnegative orthant first, first variable's sign most significant
    assert pts[:9] == sorted([p for p in pts if min(p) >= 0], key=lambda p: p)
    assert pts[-1] == (-2, -2)


def test_bounded_exists_examples():
    assert bounded_exists(SUCC, {"x": 3}, ["y"], Box.uniform(["y"], -10, 10)) == (4,)
    pin = F.parse("(and (>= y 0) (>= (- y) 0))")
    assert bounded_exists(pin, {}, ["y"], Box.uniform(["y"], -5, 5)) == (0,)
    assert bounded_exists(psi(3), {"x": 5}, ["y"], Box.uniform(["y"], 0, 16)) == (8,)


def test_bounded_exists_none_and_budget(monkeypatch):
    assert bounded_exists(SUCC, {"x": 30}, ["y"], Box.uniform(["y"], -10, 10)) is None
    monkeypatch.setattr(oracle, "ORACLE_POINTS", 100)
    with pytest.raises(ResourceError):
        bounded_exists(SUCC, {"x": 0}, ["y"], Box.uniform(["y"], -100, 100))


def test_verify_correct_and_constant():
    box = Box.uniform(["x"], -20, 20)
    wbox = Box.uniform(["y"], -30, 30)
    rep = verify_skolem(SUCC, _affine_circuit(1, [(1, [1])]), box, wbox)
    assert rep.status == "pass" and rep.points_checked == 41
    zero = _affine_circuit(1, [(0, [0])])
    rep = verify_skolem(SUCC, zero, box, wbox)
    assert sorted(x for (x,), _, _ in rep.failures) == [x for x in range(-20, 21) if x != -1]
    assert rep.status == "fail"
    assert "failure x=[-20] witness=[-19] output=[0]" in rep.to_text()


def test_verify_arity_mismatch():
    with pytest.raises(ValueError):
        verify_skolem(SUCC, _affine_circuit(2, [(0, [1, 1])]), Box.uniform(["x"], 0, 1), Box.uniform(["y"], 0, 1))


def test_verify_two_branch_synthesized():
    from presynth.synth.one_output import synth_one_output
    sp = two_branch()
    rep = verify_skolem(sp, synth_one_output(sp), Box.uniform(["x"], -20, 20), Box.uniform(["y"], -60, 60))
    assert rep.ok and rep.satisfiable_points == 41


def test_reference_skolem_examples():
    unsat = F.parse_spec("(spec (inputs x) (outputs y) (and (>= y 1) (>= (- y) 0)))")
    assert reference_skolem(unsat, (0,), Box.uniform(["y"], -10, 10)) == (0,)
    ge3 = F.parse_spec("(spec (inputs x) (outputs y) (>= y 3))")
    assert reference_skolem(ge3, (0,), Box.uniform(["y"], -10, 10)) == (3,)


@pytest.mark.parametrize("x,want", [(0, 5), (1, 2), (2, 0)])
def test_reference_skolem_two_branch(x, want):
    # hand-derived: x=0 needs y = 5 mod 6 with 5y+7 >= 0; x=1 needs y = 2 mod 3; x=2 needs y = 0 mod 3
    assert reference_skolem(two_branch(), (x,), Box.uniform(["y"], -20, 20)) == (want,)


def test_reference_tabulation_passes():
    rng = random.Random(4)
    for _ in range(20):
        sp = random_spec(rng, 1, rng.randint(1, 2), max_atoms=5)
        ibox = Box.uniform(sp.inputs, -4, 4)
        wbox = Box.uniform(sp.outputs, -6, 6)
        table = {x: reference_skolem(sp, x, wbox) for x in ibox.points()}
        c = table_circuit(table, 1, len(sp.outputs))
        assert verify_skolem(sp, c, ibox, wbox).ok


def test_monotone_and_deterministic():
    rng = random.Random(12)
    for _ in range(20):
        sp = random_spec(rng, 1, 1, max_atoms=5)
        c = _affine_circuit(1, [(rng.randint(-3, 3), [rng.randint(-2, 2)])])
        ibox = Box.uniform(sp.inputs, -8, 8)
        small = verify_skolem(sp, c, ibox, Box.uniform(sp.outputs, -3, 3))
        big = verify_skolem(sp, c, ibox, Box.uniform(sp.outputs, -12, 12))
        assert {f[0] for f in small.failures} <= {f[0] for f in big.failures}
        assert small.to_text() == verify_skolem(sp, c, ibox, Box.uniform(sp.outputs, -3, 3)).to_text()


@settings(max_examples=40, deadline=None)
@given(st.integers(-15, 15), st.integers(1, 4))
def test_psi_unique_witness(x, n):
    k = 2 ** n
    got = bounded_exists(psi(n), {"x": x}, ["y"], Box.uniform(["y"], x - k, x + 2 * k))
    assert got is not None
    y = got[0]
    assert x < y <= x + k and y % k == 0


def test_exact_routes_agree_on_successor():
    c = _affine_circuit(1, [(1, [1])])
    for method in ("pieces", "trace"):
        assert oracle.verify_exact(SUCC, c, method=method).holds
    bad = oracle.verify_exact(SUCC, _affine_circuit(1, [(0, [1])]), method="pieces")
    assert not bad.holds and bad.counterexample is not None
