import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from presynth import formula as F
from presynth.errors import ParseError, ResourceError

from corpus import random_formula
from specs import TWO_BRANCH, two_branch


def test_parse_single_atom():
    assert F.parse("(>= (+ (* 3 x) -2) 0)") == F.ge({"x": 3}, -2)


def test_parse_not_flips_integer_inequality():
    assert F.parse("(not (>= x 0))") == F.ge({"x": -1}, -1)


def test_parse_two_branch_shape():
    sp = two_branch()
    assert isinstance(sp.body, F.Or) and len(sp.body.children) == 2
    left, right = sp.body.children
    assert [c.atom for c in left.children] == [F.LinIneq({"x": 3}, -2), F.ModCon({"x": 4, "y": 5}, 2, 3)]
    assert [c.atom for c in right.children] == [F.LinIneq({"x": -2, "y": 5}, 7), F.ModCon({"y": 1}, 5, 6)]


@pytest.mark.parametrize("text,msg", [
    ("(>= x", "unclosed"),
    ("(mod= x 3 3)", "residue"),
    ("(frob x)", "unknown"),
    ("(mod= x 0 0)", "modulus"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        F.parse(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        F.parse("(and\n  (>= x 0)\n  (mod= y 9 4))")
    assert e.value.line == 3


def test_sugar():
    pt = {"x": 2, "y": 2}
    assert F.eval(F.parse("(= x y)"), pt)
    assert not F.eval(F.parse("(> x y)"), pt)
    assert F.eval(F.parse("(<= x y)"), pt)
    assert not F.eval(F.parse("(not (= x y))"), pt)


def test_size():
    s = F.size(F.ge({"x": 1}, 0))
    assert (s.node_count, s.var_count) == (1, 1) and s.const_bits >= 1
    assert F.size(two_branch()).node_count == 7
    a = F.ge({"x": 1}, 3)
    assert F.size(F.And((a, a))).node_count == F.size(a).node_count + 2


def test_eval_examples():
    sp = two_branch()
    assert F.eval(sp, {"x": 2, "y": 5})
    assert not F.eval(sp, {"x": 1, "y": 1})
    assert F.eval(F.mod({"y": 1}, 5, 6), {"y": -1})


def test_eval_missing_variable():
    with pytest.raises(F.EvalError):
        F.eval(F.ge({"x": 1, "z": 1}), {"x": 0})


def test_maximal_conjunctive_subformulas():
    sp = two_branch()
    assert F.maximal_conjunctive_subformulas(sp) == list(sp.body.children)
    assert F.maximal_conjunctive_subformulas(F.ge({"x": 1})) == []
    inner = F.And((F.ge({"x": 1}), F.ge({"y": 1})))
    root = F.And((F.ge({"z": 1}), F.Or((inner, F.ge({"x": -1})))))
    assert F.maximal_conjunctive_subformulas(root) == [root]


def test_to_dnf_examples():
    a, b, c = F.ge({"x": 1}), F.ge({"y": 1}), F.ge({"z": 1})
    assert F.to_dnf(F.Or((a, b))) == [[a.atom], [b.atom]]
    assert F.to_dnf(F.And((F.Or((a, b)), c))) == [[a.atom, c.atom], [b.atom, c.atom]]
    sp = two_branch()
    assert F.to_dnf(sp) == [[l.atom for l in ch.children] for ch in sp.body.children]


def test_to_dnf_budget():
    parts = [F.Or((F.ge({f"x{i}": 1}), F.ge({f"x{i}": -1}, -1))) for i in range(12)]
    with pytest.raises(ResourceError):
        F.to_dnf(F.And(parts), budget=100)


def _points(vs, lo=-5, hi=5):
    for p in itertools.product(range(lo, hi + 1), repeat=len(vs)):
        yield dict(zip(vs, p))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dnf_equivalent(seed):
    rng = random.Random(seed)
    vs = ["x", "y", "z"][: rng.randint(1, 3)]
    f = random_formula(rng, vs, max_atoms=6)
    dnf = F.dnf_formula(F.to_dnf(f))
    assert all(F.eval(f, p) == F.eval(dnf, p) for p in _points(vs))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_print_parse_roundtrip(seed):
    rng = random.Random(seed)
    f = random_formula(rng, ["x", "y", "z"], max_atoms=8)
    text = F.format_formula(f)
    assert F.parse(text) == f
    assert F.format_formula(F.parse(text)) == text
    assert F.parse(F.pretty(f)) == f


def test_spec_roundtrip():
    sp = two_branch()
    assert F.parse(F.format_formula(sp)) == sp


@settings(max_examples=100)
@given(st.integers(0, 10 ** 6))
def test_double_negation_of_atoms(seed):
    rng = random.Random(seed)
    a = random_formula(rng, ["x", "y"], max_atoms=1).atom
    assert a.negate().negate() == a


def test_negate_is_complement():
    f = two_branch().body
    g = F.negate(f)
    assert all(F.eval(f, p) != F.eval(g, p) for p in _points(["x", "y"], -8, 8))


def test_remove_output_modulos_example():
    sp = F.parse_spec("(spec (inputs x) (outputs y) (mod= y 2 3))")
    out = F.remove_output_modulos(sp)
    assert len(out.outputs) == 2 and out.outputs[0] == "y"
    k = out.outputs[1]
    assert F.atoms(out) == [F.LinIneq({"y": 1, k: -3}, -2), F.LinIneq({"y": -1, k: 3}, 2)]


def test_remove_output_modulos_no_mods():
    sp = F.parse_spec("(spec (inputs x) (outputs y) (and (>= (+ y x) 0) (mod= x 1 2)))")
    assert F.remove_output_modulos(sp) == sp


def _projection_agrees(sp, box=range(-10, 11)):
    out = F.remove_output_modulos(sp)
    fresh = out.outputs[len(sp.outputs):]
    vs = list(sp.variables)
    # every quotient k satisfies |k| <= max |t| over the box, divided by M >= 2
    reach = max([sum(abs(c) for _, c in a.coeffs) for a in F.atoms(sp) if isinstance(a, F.ModCon)] + [1])
    K = reach * max(abs(box.start), abs(box.stop - 1)) // 2 + 1
    ks = list(itertools.product(range(-K, K + 1), repeat=len(fresh)))
    cols = [np.array(col, dtype=np.int64) for col in zip(*ks)] if fresh else []
    for p in itertools.product(box, repeat=len(vs)):
        env = dict(zip(vs, p))
        if fresh:
            grid = {**{v: np.full(len(ks), x, dtype=np.int64) for v, x in env.items()}, **dict(zip(fresh, cols))}
            ext = bool(np.any(F.eval_batch(out.body, grid)))
        else:
            ext = F.eval(out, env)
        if ext != F.eval(sp, env):
            return False
    return True


def test_remove_output_modulos_negative_residue():
    sp = F.parse_spec("(spec (inputs x) (outputs y) (mod!= y 0 2))")
    assert _projection_agrees(sp)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_remove_output_modulos_projection(seed):
    rng = random.Random(seed)
    body = random_formula(rng, ["x", "y"], max_atoms=3, coef=2, max_mod=3, p_mod=0.5)
    sp = F.Spec(("x",), ("y",), body)
    assert _projection_agrees(sp, range(-5, 6))


def test_substitute():
    f = F.ge({"x": 1, "y": -2}, 1)
    g = F.substitute(f, {"y": ({"x": 1}, 1, 2)})    # y = (x + 1) / 2
    assert g.atom.is_const() and F.eval(g, {})
    h = F.substitute(F.ge({"y": 1}), {"y": ({"x": 1}, -3, 2)})
    for x in range(-9, 10, 2):
        assert F.eval(h, {"x": x}) == ((x - 3) // 2 >= 0)


def test_eval_batch_matches_eval():
    sp = two_branch()
    xs, ys = np.meshgrid(np.arange(-6, 7), np.arange(-6, 7), indexing="ij")
    got = F.eval_batch(sp, {"x": xs.ravel(), "y": ys.ravel()})
    want = [F.eval(sp, {"x": int(a), "y": int(b)}) for a, b in zip(xs.ravel(), ys.ravel())]
    assert list(got) == want
