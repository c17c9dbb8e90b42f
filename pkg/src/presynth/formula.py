"""Quantifier-free Presburger formulas in negation normal form.

Atoms are linear inequalities ``sum(a_i v_i) + c >= 0`` and modulo
constraints ``sum(a_i v_i) (=|!=) r (mod M)``. Trees are built from
``And``/``Or``/``Leaf`` nodes; ``Spec`` attaches declared inputs and the
ordered outputs.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from math import gcd
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParseError, ResourceError

Coeffs = Tuple[Tuple[str, int], ...]

DNF_BUDGET = int(os.environ.get("PRESYNTH_DNF_DISJUNCTS", 1 << 16))


def _mk_coeffs(coeffs) -> Coeffs:
    acc: Dict[str, int] = {}
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    for v, a in items:
        a = int(a)
        if a:
            acc[v] = acc.get(v, 0) + a
    return tuple(sorted((v, a) for v, a in acc.items() if a))


class LinIneq:
    """sum(a_i v_i) + const >= 0"""
    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs, const: int = 0):
        self.coeffs = _mk_coeffs(coeffs)
        self.const = int(const)
        self._hash = hash(("lin", self.coeffs, self.const))

    def __eq__(self, other):
        return (self is other or type(other) is LinIneq and self._hash == other._hash
                and self.coeffs == other.coeffs and self.const == other.const)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"LinIneq({dict(self.coeffs)}, {self.const})"

    @property
    def vars(self):
        return tuple(v for v, _ in self.coeffs)

    def coef(self, v: str) -> int:
        for u, a in self.coeffs:
            if u == v:
                return a
        return 0

    def negate(self) -> "LinIneq":
        # not (t >= 0)  <=>  -t - 1 >= 0
        return LinIneq(tuple((v, -a) for v, a in self.coeffs), -self.const - 1)

    def is_const(self) -> bool:
        return not self.coeffs


class ModCon:
    """sum(a_i v_i) == residue (mod modulus), or != when ``positive`` is False."""
    __slots__ = ("coeffs", "residue", "modulus", "positive", "_hash")

    def __init__(self, coeffs, residue: int, modulus: int, positive: bool = True):
        modulus = int(modulus)
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        self.coeffs = _mk_coeffs(coeffs)
        self.modulus = modulus
        self.residue = int(residue) % modulus
        self.positive = bool(positive)
        self._hash = hash(("mod", self.coeffs, self.residue, self.modulus, self.positive))

    def __eq__(self, other):
        return (self is other or type(other) is ModCon and self._hash == other._hash
                and self.coeffs == other.coeffs and self.residue == other.residue
                and self.modulus == other.modulus and self.positive == other.positive)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        op = "==" if self.positive else "!="
        return f"ModCon({dict(self.coeffs)} {op} {self.residue} mod {self.modulus})"

    @property
    def vars(self):
        return tuple(v for v, _ in self.coeffs)

    def coef(self, v: str) -> int:
        for u, a in self.coeffs:
            if u == v:
                return a
        return 0

    def negate(self) -> "ModCon":
        return ModCon(self.coeffs, self.residue, self.modulus, not self.positive)

    def is_const(self) -> bool:
        return not self.coeffs


Atom = Union[LinIneq, ModCon]

TRUE_ATOM = LinIneq((), 0)
FALSE_ATOM = LinIneq((), -1)


class Node:
    __slots__ = ()


class Leaf(Node):
    __slots__ = ("atom", "_hash")

    def __init__(self, atom: Atom):
        self.atom = atom
        self._hash = hash(("leaf", atom))

    def __eq__(self, other):
        return self is other or type(other) is Leaf and self._hash == other._hash and self.atom == other.atom

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Leaf({self.atom!r})"


class _Junction(Node):
    __slots__ = ("children", "_hash")
    tag = ""

    def __init__(self, children: Iterable[Node]):
        self.children = tuple(children)
        if not self.children:
            raise ValueError(f"{self.tag} needs at least one child")
        self._hash = hash((self.tag, self.children))

    def __eq__(self, other):
        return (self is other or type(other) is type(self) and self._hash == other._hash
                and self.children == other.children)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}{self.children!r}"


class And(_Junction):
    __slots__ = ()
    tag = "and"


class Or(_Junction):
    __slots__ = ()
    tag = "or"


TRUE = Leaf(TRUE_ATOM)
FALSE = Leaf(FALSE_ATOM)


@dataclass(frozen=True)
class Spec:
    """A formula together with its declared inputs and ordered outputs."""
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    body: Node

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        names = self.inputs + self.outputs
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable declaration")
        extra = free_vars(self.body) - set(names)
        if extra:
            raise ValueError(f"undeclared variables: {sorted(extra)}")

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.inputs + self.outputs

    def with_body(self, body: Node) -> "Spec":
        return Spec(self.inputs, self.outputs, body)

    def with_outputs(self, outputs) -> "Spec":
        return Spec(self.inputs, tuple(outputs), self.body)


FormulaLike = Union[Spec, Node]


def body_of(f: FormulaLike) -> Node:
    return f.body if isinstance(f, Spec) else f


# ---------------------------------------------------------------- construction

def leaf(atom: Atom) -> Leaf:
    return Leaf(atom)


def ge(coeffs, const=0) -> Leaf:
    return Leaf(LinIneq(coeffs, const))


def eq(coeffs, const=0) -> And:
    """t = 0 as the pair t >= 0, -t >= 0."""
    t = LinIneq(coeffs, const)
    return And((Leaf(t), Leaf(LinIneq(tuple((v, -a) for v, a in t.coeffs), -t.const))))


def mod(coeffs, residue, modulus, positive=True) -> Leaf:
    return Leaf(ModCon(coeffs, residue, modulus, positive))


def conj(children: Iterable[Node]) -> Node:
    ch = tuple(children)
    if not ch:
        return TRUE
    return ch[0] if len(ch) == 1 else And(ch)


def disj(children: Iterable[Node]) -> Node:
    ch = tuple(children)
    if not ch:
        return FALSE
    return ch[0] if len(ch) == 1 else Or(ch)


# ---------------------------------------------------------------- traversal

def iter_leaves(f: FormulaLike) -> Iterator[Leaf]:
    stack = [body_of(f)]
    while stack:
        n = stack.pop()
        if isinstance(n, Leaf):
            yield n
        else:
            stack.extend(reversed(n.children))


def atoms(f: FormulaLike) -> List[Atom]:
    return [l.atom for l in iter_leaves(f)]


def free_vars(f: FormulaLike) -> set:
    out = set()
    for a in atoms(f):
        out.update(a.vars)
    return out


def map_leaves(f: Node, fn) -> Node:
    """Rebuild the tree with ``fn(leaf) -> Node`` applied to every leaf."""
    memo = {}

    def go(n):
        r = memo.get(id(n))
        if r is not None:
            return r
        if isinstance(n, Leaf):
            r = fn(n)
        else:
            r = type(n)(go(c) for c in n.children)
        memo[id(n)] = r
        return r
    return go(f)


def negate(f: Node) -> Node:
    """NNF negation: flip atoms, swap connectives."""
    if isinstance(f, Leaf):
        return Leaf(f.atom.negate())
    if isinstance(f, And):
        return Or(negate(c) for c in f.children)
    return And(negate(c) for c in f.children)


# ---------------------------------------------------------------- size

@dataclass(frozen=True)
class SizeMetric:
    node_count: int
    var_count: int
    const_bits: int

    @property
    def total(self) -> int:
        return self.node_count + self.var_count + self.const_bits


def _bits(c: int) -> int:
    return max(1, abs(int(c)).bit_length())


def atom_bits(a: Atom) -> int:
    b = sum(_bits(c) for _, c in a.coeffs)
    if isinstance(a, LinIneq):
        return b + _bits(a.const)
    return b + _bits(a.residue) + _bits(a.modulus)


def size(f: FormulaLike) -> SizeMetric:
    nodes = 0
    bits = 0
    stack = [body_of(f)]
    while stack:
        n = stack.pop()
        nodes += 1
        if isinstance(n, Leaf):
            bits += atom_bits(n.atom)
        else:
            stack.extend(n.children)
    nvars = len(f.variables) if isinstance(f, Spec) else len(free_vars(f))
    return SizeMetric(nodes, nvars, bits)


# ---------------------------------------------------------------- evaluation

class EvalError(KeyError):
    pass


def eval_atom(a: Atom, point: Mapping[str, int]) -> bool:
    try:
        s = sum(c * point[v] for v, c in a.coeffs)
    except KeyError as e:
        raise EvalError(f"missing value for variable {e.args[0]}") from None
    if isinstance(a, LinIneq):
        return s + a.const >= 0
    return ((s - a.residue) % a.modulus == 0) == a.positive


def eval(f: FormulaLike, point: Mapping[str, int]) -> bool:  # noqa: A001 - mirrors the operation name
    n = body_of(f)
    if isinstance(n, Leaf):
        return eval_atom(n.atom, point)
    if isinstance(n, And):
        return all(eval(c, point) for c in n.children)
    return any(eval(c, point) for c in n.children)


evaluate = eval


def eval_batch(f: FormulaLike, env: Mapping[str, "np.ndarray | int"]):
    """Vectorized evaluation; ``env`` maps variables to equally-broadcastable int arrays."""
    cache = {}

    def atom_val(a: Atom):
        r = cache.get(a)
        if r is not None:
            return r
        s = 0
        for v, c in a.coeffs:
            if v not in env:
                raise EvalError(f"missing value for variable {v}")
            s = s + c * env[v]
        if isinstance(a, LinIneq):
            r = np.asarray(s + a.const >= 0)
        else:
            r = np.asarray(((s - a.residue) % a.modulus == 0) == a.positive)
        cache[a] = r
        return r

    def go(n):
        if isinstance(n, Leaf):
            return atom_val(n.atom)
        vals = [go(c) for c in n.children]
        out = vals[0]
        op = np.logical_and if isinstance(n, And) else np.logical_or
        for v in vals[1:]:
            out = op(out, v)
        return out
    return go(body_of(f))


# ---------------------------------------------------------------- structure

def maximal_conjunctive_subformulas(f: FormulaLike) -> List[And]:
    out = []
    stack = [body_of(f)]
    while stack:
        n = stack.pop()
        if isinstance(n, And):
            out.append(n)
        elif isinstance(n, Or):
            stack.extend(reversed(n.children))
    return out


def _contradicts(a: Atom, b: Atom) -> bool:
    if isinstance(a, LinIneq) and isinstance(b, LinIneq):
        if a.coeffs and a.coeffs == tuple((v, -c) for v, c in b.coeffs):
            return a.const + b.const < 0
        return False
    if isinstance(a, ModCon) and isinstance(b, ModCon):
        if a.coeffs == b.coeffs and a.modulus == b.modulus:
            if a.positive and b.positive:
                return a.residue != b.residue
            if a.positive != b.positive:
                return a.residue == b.residue
    return False


def _add_atom(conj_atoms: Tuple[Atom, ...], a: Atom) -> Optional[Tuple[Atom, ...]]:
    if a.is_const():
        if eval_atom(a, {}):
            return conj_atoms
        return None
    if a in conj_atoms:
        return conj_atoms
    for b in conj_atoms:
        if _contradicts(a, b):
            return None
    return conj_atoms + (a,)


def to_dnf(f: FormulaLike, budget: Optional[int] = None) -> List[List[Atom]]:
    """Disjunctive normal form as a list of atom lists.

    Constant atoms are folded, duplicate atoms merged, and conjuncts with an
    obviously complementary pair dropped. Raises ResourceError beyond ``budget``.
    """
    if budget is None:
        budget = DNF_BUDGET
    def go(n) -> List[Tuple[Atom, ...]]:
        if isinstance(n, Leaf):
            r = _add_atom((), n.atom)
            return [] if r is None else [r]
        if isinstance(n, Or):
            out, seen = [], set()
            for c in n.children:
                for cj in go(c):
                    key = frozenset(cj)
                    if key not in seen:
                        seen.add(key)
                        out.append(cj)
                        if len(out) > budget:
                            raise ResourceError(f"DNF exceeds {budget} disjuncts")
            return out
        acc: List[Tuple[Atom, ...]] = [()]
        for c in n.children:
            parts = go(c)
            nxt, seen = [], set()
            for left in acc:
                for right in parts:
                    cur = left
                    for a in right:
                        cur = _add_atom(cur, a)
                        if cur is None:
                            break
                    if cur is None:
                        continue
                    key = frozenset(cur)
                    if key in seen:
                        continue
                    seen.add(key)
                    nxt.append(cur)
                    if len(nxt) > budget:
                        raise ResourceError(f"DNF exceeds {budget} disjuncts")
            acc = nxt
            if not acc:
                break
        return acc
    return [list(c) for c in go(body_of(f))]


def dnf_formula(dnf: Sequence[Sequence[Atom]]) -> Node:
    return disj(conj(Leaf(a) for a in c) for c in dnf)


def fresh_names(taken: Iterable[str], prefix: str, count: int) -> List[str]:
    taken = set(taken)
    out, i = [], 0
    while len(out) < count:
        name = f"{prefix}{i}"
        if name not in taken:
            out.append(name)
        i += 1
    return out


def remove_output_modulos(spec: Spec, prefix: str = "_k") -> Spec:
    """Replace output-mentioning modulo atoms by equalities with fresh outputs.

    ``t == r (mod M)`` becomes ``t - M k - r = 0``; ``t != r (mod M)`` first
    expands to the M-1 complementary residues. One fresh ``k`` per (t, M).
    The fresh outputs are appended after the original outputs.
    """
    outs = set(spec.outputs)
    taken = set(spec.variables)
    fresh: List[str] = []

    shared: Dict[tuple, str] = {}

    def new_var(key):
        # atoms over the same term and modulus share one quotient variable;
        # t - M k = r pins k, so two residues can never both hold
        name = shared.get(key)
        if name is None:
            name = fresh_names(taken, prefix, 1)[0]
            taken.add(name)
            fresh.append(name)
            shared[key] = name
        return name

    def elim(coeffs, r, M, k):
        return eq(tuple(coeffs) + ((k, -M),), -r)

    def fn(l: Leaf) -> Node:
        a = l.atom
        if not isinstance(a, ModCon) or not (set(a.vars) & outs) or a.modulus == 1:
            if isinstance(a, ModCon) and a.modulus == 1:
                return TRUE if a.positive else FALSE
            return l
        k = new_var((a.coeffs, a.modulus))
        if a.positive:
            return elim(a.coeffs, a.residue, a.modulus, k)
        return disj(elim(a.coeffs, s, a.modulus, k) for s in range(a.modulus) if s != a.residue)

    body = map_leaves(spec.body, fn)
    return Spec(spec.inputs, spec.outputs + tuple(fresh), body)


# ---------------------------------------------------------------- substitution

def substitute(f: Node, mapping: Mapping[str, Tuple[Mapping[str, int], int, int]]) -> Node:
    """Substitute v := (sum(coeffs) + const) / den for each mapped v.

    The caller guarantees divisibility wherever the result is evaluated; atoms
    are scaled by the denominators so everything stays integral.
    """
    def sub_atom(a: Atom) -> Atom:
        hit = [(v, c) for v, c in a.coeffs if v in mapping]
        if not hit:
            return a
        den = 1
        for v, _ in hit:
            den = den * mapping[v][2] // gcd(den, mapping[v][2])
        acc: Dict[str, int] = {}
        const = 0
        for v, c in a.coeffs:
            if v in mapping:
                tc, tk, td = mapping[v]
                s = c * (den // td)
                for u, b in (tc.items() if isinstance(tc, Mapping) else tc):
                    acc[u] = acc.get(u, 0) + s * b
                const += s * tk
            else:
                acc[v] = acc.get(v, 0) + c * den
        if isinstance(a, LinIneq):
            return LinIneq(acc, const + a.const * den)
        # sum == r (mod M) with the sum scaled by den: den*sum == den*r (mod den*M)
        return ModCon(acc, den * a.residue - const, den * a.modulus, a.positive)
    return map_leaves(f, lambda l: Leaf(sub_atom(l.atom)))


def rename(f: Node, names: Mapping[str, str]) -> Node:
    def fn(l):
        a = l.atom
        cs = tuple((names.get(v, v), c) for v, c in a.coeffs)
        if isinstance(a, LinIneq):
            return Leaf(LinIneq(cs, a.const))
        return Leaf(ModCon(cs, a.residue, a.modulus, a.positive))
    return map_leaves(f, fn)


# ---------------------------------------------------------------- text format

def _tokenize(text: str):
    out = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
        elif ch.isspace():
            i, col = i + 1, col + 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            out.append((ch, line, col))
            i, col = i + 1, col + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append((text[i:j], line, col))
            col += j - i
            i = j
    return out


def _read_sexpr(text: str):
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty input", 1, 1)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            t = toks[-1]
            raise ParseError("unexpected end of input", t[1], t[2])
        tok, ln, cl = toks[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(toks):
                    raise ParseError("unclosed parenthesis", ln, cl)
                if toks[pos][0] == ")":
                    pos += 1
                    return ("list", items, ln, cl)
                items.append(read())
        if tok == ")":
            raise ParseError("unexpected ')'", ln, cl)
        return ("atom", tok, ln, cl)

    e = read()
    if pos != len(toks):
        raise ParseError("trailing input", toks[pos][1], toks[pos][2])
    return e


_INT = re.compile(r"^[+-]?\d+$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_'.]*$")


def _err(e, msg):
    raise ParseError(msg, e[2], e[3])


def _int(e) -> int:
    if e[0] != "atom" or not _INT.match(e[1]):
        _err(e, "expected integer")
    return int(e[1])


def _term(e) -> Tuple[Dict[str, int], int]:
    if e[0] == "atom":
        if _INT.match(e[1]):
            return {}, int(e[1])
        if not _IDENT.match(e[1]):
            _err(e, f"bad identifier {e[1]!r}")
        return {e[1]: 1}, 0
    items = e[1]
    if not items or items[0][0] != "atom":
        _err(e, "expected operator")
    op = items[0][1]
    if op == "+":
        acc: Dict[str, int] = {}
        k = 0
        for it in items[1:]:
            c, kk = _term(it)
            for v, a in c.items():
                acc[v] = acc.get(v, 0) + a
            k += kk
        return acc, k
    if op == "*":
        if len(items) != 3:
            _err(e, "(* k t) takes two arguments")
        # accept (* k t) and (* t k)
        if items[1][0] == "atom" and _INT.match(items[1][1]):
            k, t = int(items[1][1]), items[2]
        else:
            k, t = _int(items[2]), items[1]
        c, kk = _term(t)
        return {v: k * a for v, a in c.items()}, k * kk
    if op == "-":
        parts = [_term(it) for it in items[1:]]
        if not parts:
            _err(e, "(-) needs arguments")
        if len(parts) == 1:
            c, kk = parts[0]
            return {v: -a for v, a in c.items()}, -kk
        acc = dict(parts[0][0])
        k = parts[0][1]
        for c, kk in parts[1:]:
            for v, a in c.items():
                acc[v] = acc.get(v, 0) - a
            k -= kk
        return acc, k
    _err(e, f"unknown term operator {op!r}")


def _diff(a, b):
    ca, ka = a
    cb, kb = b
    acc = dict(ca)
    for v, x in cb.items():
        acc[v] = acc.get(v, 0) - x
    return acc, ka - kb


def _formula(e, neg=False) -> Node:
    if e[0] != "list" or not e[1] or e[1][0][0] != "atom":
        _err(e, "expected a formula")
    items = e[1]
    op = items[0][1]
    args = items[1:]
    if op in ("and", "or"):
        kids = [_formula(a, neg) for a in args]
        is_and = (op == "and") != neg
        if not kids:
            return TRUE if is_and else FALSE
        return (And if is_and else Or)(kids) if len(kids) > 1 else kids[0]
    if op == "not":
        if len(args) != 1:
            _err(e, "(not f) takes one argument")
        return _formula(args[0], not neg)
    if op in (">=", ">", "=", "<=", "<"):
        if len(args) != 2:
            _err(e, f"({op} t u) takes two arguments")
        t = _diff(_term(args[0]), _term(args[1]))
        if op in ("<=", "<"):
            t = ({v: -a for v, a in t[0].items()}, -t[1])
        if op in (">", "<"):
            t = (t[0], t[1] - 1)
        if op == "=":
            node = eq(t[0], t[1])
            return negate(node) if neg else node
        a = LinIneq(t[0], t[1])
        return Leaf(a.negate() if neg else a)
    if op in ("mod=", "mod!="):
        if len(args) != 3:
            _err(e, f"({op} t r M) takes three arguments")
        c, k = _term(args[0])
        r, M = _int(args[1]), _int(args[2])
        if M < 1:
            _err(args[2], "modulus must be >= 1")
        if not 0 <= r < M:
            _err(args[1], f"residue {r} out of [0,{M})")
        a = ModCon(c, r - k, M, op == "mod=")
        return Leaf(a.negate() if neg else a)
    if op in ("true", "false"):
        return TRUE if (op == "true") != neg else FALSE
    _err(e, f"unknown formula operator {op!r}")


def _names(e, head):
    if e[0] != "list" or not e[1] or e[1][0] != ("atom", head, e[1][0][2], e[1][0][3]):
        _err(e, f"expected ({head} ...)")
    out = []
    for it in e[1][1:]:
        if it[0] != "atom" or not _IDENT.match(it[1]):
            _err(it, "expected variable name")
        out.append(it[1])
    return tuple(out)


def parse(text: str) -> FormulaLike:
    """Parse a ``(spec ...)`` document into a Spec, or a bare body into a Node."""
    e = _read_sexpr(text)
    if e[0] == "list" and e[1] and e[1][0][0] == "atom" and e[1][0][1] == "spec":
        items = e[1]
        if len(items) != 4:
            _err(e, "(spec (inputs ...) (outputs ...) body)")
        ins = _names(items[1], "inputs")
        outs = _names(items[2], "outputs")
        body = _formula(items[3])
        try:
            return Spec(ins, outs, body)
        except ValueError as ex:
            _err(e, str(ex))
    return _formula(e)


def parse_spec(text: str) -> Spec:
    f = parse(text)
    if not isinstance(f, Spec):
        raise ParseError("expected (spec ...)", 1, 1)
    return f


def format_term(coeffs: Coeffs, const: int = 0) -> str:
    parts = []
    for v, a in coeffs:
        parts.append(v if a == 1 else f"(* {a} {v})")
    if const or not parts:
        parts.append(str(const))
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def format_atom(a: Atom) -> str:
    if isinstance(a, LinIneq):
        return f"(>= {format_term(a.coeffs, a.const)} 0)"
    op = "mod=" if a.positive else "mod!="
    return f"({op} {format_term(a.coeffs)} {a.residue} {a.modulus})"


def format_node(n: Node) -> str:
    if isinstance(n, Leaf):
        return format_atom(n.atom)
    return "(" + n.tag + " " + " ".join(format_node(c) for c in n.children) + ")"


def format_formula(f: FormulaLike) -> str:
    if isinstance(f, Spec):
        return (f"(spec (inputs {' '.join(f.inputs)}) (outputs {' '.join(f.outputs)}) "
                f"{format_node(f.body)})")
    return format_node(f)


def pretty(f: FormulaLike, indent: int = 2) -> str:
    """Multi-line rendering; parses back to the same formula."""
    def go(n, depth):
        pad = " " * (indent * depth)
        if isinstance(n, Leaf):
            return pad + format_atom(n.atom)
        inner = "\n".join(go(c, depth + 1) for c in n.children)
        return f"{pad}({n.tag}\n{inner})"
    if isinstance(f, Spec):
        return (f"(spec (inputs {' '.join(f.inputs)})\n      (outputs {' '.join(f.outputs)})\n"
                + go(f.body, 3) + ")")
    return go(f, 0)
