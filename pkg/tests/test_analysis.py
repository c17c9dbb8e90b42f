import random

import numpy as np
import pytest

from presynth import analysis as A
from presynth import formula as F
from presynth.circuit import CircuitBuilder
from presynth.errors import ParseError
from presynth.synth.general import synth_general

from corpus import random_bool_circuit, random_circuit, random_pi2


def _one(build):
    b = CircuitBuilder(1)
    return b.build([build(b, b.input(0))])


IDENT = _one(lambda b, x: x)
PARITY = _one(lambda b, x: b.lin([(x, 1), (b.div(2, x), -2)]))
RELU = _one(lambda b, x: b.max(x, b.const(0)))


def test_assignment_identity():
    ma = A.modular_assignment(IDENT)
    assert ma.modulus == 1 and ma.entries == [(0, None, None, 1, 0)]


def test_assignment_parity():
    ma = A.modular_assignment(PARITY)
    assert ma.modulus == 2
    assert all(ma(x) == x % 2 for x in range(-20, 21))
    assert {(r, c, d) for r, _, _, c, d in ma.entries} == {(0, 0, 0), (1, 0, 2)}


def test_assignment_relu():
    ma = A.modular_assignment(RELU)
    assert ma.modulus == 1 and len(ma.entries) == 2
    assert 0 in ma.breakpoints() or -1 in ma.breakpoints()
    assert "modulus 1" in ma.to_text()


def test_assignment_random_circuits_exact():
    rng = random.Random(21)
    xs = np.arange(-200, 201)
    for _ in range(40):
        c = random_circuit(rng, n_gates=10, moduli=(2, 3, 4), max_divs=3)
        ma = A.modular_assignment(c)
        want = c.eval_batch([xs])[0]
        assert [ma(int(x)) for x in xs] == [int(v) for v in want]


def test_period_examples():
    even = _one(lambda b, x: b.is_zero(b.lin([(x, 1), (b.div(2, x), -2)])))
    assert A.period_bound(even) == 2
    assert A.period_bound(_one(lambda b, x: b.ge0(x))) == 1

    def sixes(b, x):
        # multiples of 6, from one div_2 and one div_3 gate
        return b.min(b.is_zero(b.lin([(x, 1), (b.div(2, x), -2)])),
                     b.is_zero(b.lin([(x, 1), (b.div(3, x), -3)])))
    c = _one(sixes)
    assert A.period_bound(c) == 36
    assert A.validate_period(c, 6).ok


def test_period_rejects_non_boolean():
    with pytest.raises(ValueError):
        A.period_bound(_one(lambda b, x: b.addc(b.lin([(x, 1), (b.div(2, x), -2)]), 1)))


def test_period_detects_wrong_period():
    even = _one(lambda b, x: b.is_zero(b.lin([(x, 1), (b.div(2, x), -2)])))
    assert not A.validate_period(even, 3).ok


def test_period_law_random():
    rng = random.Random(2025)
    for _ in range(30):
        c = random_bool_circuit(rng)
        rep = A.validate_period(c, A.period_bound(c))
        assert rep.ok


def test_first_primes():
    assert A.first_primes(6) == [2, 3, 5, 7, 11, 13]


def test_encode_clauses():
    psi = A.BoolPi2((1,), (2,), ((1, 2),))
    enc = A.encode_bool_to_pa(psi)
    assert (enc.p, enc.q) == ((2,), (3,))
    assert enc.spec.body == F.disj([F.mod({"a": 1}, 0, 2), F.mod({"b": 1}, 0, 3)])
    neg = A.encode_bool_to_pa(A.BoolPi2((1,), (), ((-1,),)))
    assert neg.spec.body == F.mod({"a": 1}, 0, 2, positive=False)
    empty = A.encode_bool_to_pa(A.BoolPi2((1,), (2,), ()))
    assert all(F.eval(empty.spec, {"a": a, "b": b}) for a in range(5) for b in range(5))


def test_encode_decode():
    assert A.encode_assignment([True], [2]) == 2
    assert A.encode_assignment([False, False], [2, 3]) == 1
    assert A.decode_witness(15, [3, 5]) == (True, True)


def test_crt_roundtrip_disjoint():
    primes = [2, 3, 5, 7]
    import itertools
    codes = {}
    for X in itertools.product((False, True), repeat=4):
        N = A.encode_assignment(X, primes)
        assert A.decode_witness(N, primes) == X
        codes[N] = X
    assert len(codes) == 16


def test_bool_skolem_small():
    psi = A.BoolPi2((1,), (2,), ((1, 2),))
    enc = A.encode_bool_to_pa(psi)
    sk = A.bool_skolem_via_pa(enc, synth_general(enc.spec))
    assert A.verify_bool_skolem(psi, sk) == []
    unsat = A.BoolPi2((1,), (2,), ((2,), (-2,)))
    enc = A.encode_bool_to_pa(unsat)
    assert A.verify_bool_skolem(unsat, A.bool_skolem_via_pa(enc, synth_general(enc.spec))) == []


def test_bool_skolem_random():
    rng = random.Random(7)
    for _ in range(3):
        psi = random_pi2(rng)
        enc = A.encode_bool_to_pa(psi)
        sk = A.bool_skolem_via_pa(enc, synth_general(enc.spec))
        assert A.verify_bool_skolem(psi, sk) == []


def test_verify_bool_skolem_catches_bad():
    psi = A.BoolPi2((1,), (2,), ((1, 2), (-1, -2)))
    assert A.verify_bool_skolem(psi, lambda X: (X[0],)) == [(False,), (True,)]


def test_qdimacs_roundtrip_and_errors():
    psi = random_pi2(random.Random(1))
    assert A.parse_qdimacs(psi.to_text()) == psi
    for bad in ["a 1 0\n1 0\n", "p cnf 2 1\na 1 0\n1 2\n", "p cnf 2 1\na 1 0\n3 0\n", "p cnf 1 1\na 1\n"]:
        with pytest.raises(ParseError):
            A.parse_qdimacs(bad)
