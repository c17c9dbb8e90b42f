"""Presburger circuits: acyclic gate graphs over linear maps, max, E and div_m."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import formula as F
from .errors import ParseError


class Input(NamedTuple):
    index: int


class Linear(NamedTuple):
    const: int
    terms: Tuple[Tuple[int, int], ...]  # (wire, coefficient)


class Max(NamedTuple):
    a: int
    b: int


class Eq0(NamedTuple):
    """E(cond, val): val when cond == 0, else 0."""
    cond: int
    val: int


class Div(NamedTuple):
    m: int
    arg: int


Gate = object  # one of the NamedTuples above


def gate_args(g) -> Tuple[int, ...]:
    t = type(g)
    if t is Linear:
        return tuple(w for w, _ in g.terms)
    if t is Max:
        return (g.a, g.b)
    if t is Eq0:
        return (g.cond, g.val)
    if t is Div:
        return (g.arg,)
    return ()


class CircuitError(ValueError):
    pass


class Circuit:
    """Gates in topological order; wire i is the output of gate i."""
    __slots__ = ("n_inputs", "gates", "outputs")

    def __init__(self, n_inputs: int, gates: Sequence, outputs: Sequence[int]):
        self.n_inputs = int(n_inputs)
        self.gates = tuple(gates)
        self.outputs = tuple(int(o) for o in outputs)
        for i, g in enumerate(self.gates):
            if type(g) is Input:
                if not 0 <= g.index < self.n_inputs:
                    raise CircuitError(f"g{i}: input index {g.index} out of range")
            elif type(g) is Div:
                if g.m < 1:
                    raise CircuitError(f"g{i}: div modulus must be >= 1")
            elif type(g) not in (Linear, Max, Eq0):
                raise CircuitError(f"g{i}: unknown gate {g!r}")
            for w in gate_args(g):
                if not 0 <= w < i:
                    raise CircuitError(f"g{i}: wire g{w} does not precede it")
        for o in self.outputs:
            if not 0 <= o < len(self.gates):
                raise CircuitError(f"output g{o} does not exist")

    def __eq__(self, other):
        return (isinstance(other, Circuit) and self.n_inputs == other.n_inputs
                and self.outputs == other.outputs
                and [(type(g), g) for g in self.gates] == [(type(g), g) for g in other.gates])

    def __hash__(self):
        return hash((self.n_inputs, self.outputs, len(self.gates)))

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def __repr__(self):
        return f"Circuit(n={self.n_inputs}, m={self.n_outputs}, gates={len(self.gates)})"

    # -------------------------------------------------------------- evaluation

    def eval_all(self, inputs: Sequence[int]) -> List[int]:
        if len(inputs) != self.n_inputs:
            raise CircuitError(f"expected {self.n_inputs} inputs, got {len(inputs)}")
        vals: List[int] = []
        app = vals.append
        for g in self.gates:
            t = type(g)
            if t is Linear:
                s = g.const
                for w, c in g.terms:
                    s += c * vals[w]
                app(s)
            elif t is Max:
                a, b = vals[g.a], vals[g.b]
                app(a if a >= b else b)
            elif t is Eq0:
                app(vals[g.val] if vals[g.cond] == 0 else 0)
            elif t is Div:
                app(vals[g.arg] // g.m)  # Python // floors toward -inf
            else:
                app(int(inputs[g.index]))
        return vals

    def __call__(self, *inputs) -> List[int]:
        if len(inputs) == 1 and isinstance(inputs[0], (list, tuple)):
            inputs = inputs[0]
        vals = self.eval_all(inputs)
        return [vals[o] for o in self.outputs]

    def _bounds(self, in_bound: int) -> List[int]:
        bs: List[int] = []
        for g in self.gates:
            t = type(g)
            if t is Linear:
                bs.append(abs(g.const) + sum(abs(c) * bs[w] for w, c in g.terms))
            elif t is Max:
                bs.append(max(bs[g.a], bs[g.b]))
            elif t is Eq0:
                bs.append(bs[g.val])
            elif t is Div:
                bs.append(bs[g.arg] // g.m + 1)
            else:
                bs.append(in_bound)
        return bs

    def eval_batch(self, inputs: Sequence) -> List[np.ndarray]:
        """Vectorized evaluation over arrays of inputs (one array per input).

        Uses int64 when a static magnitude bound proves it cannot overflow,
        Python-int object arrays otherwise.
        """
        arrs = [np.asarray(a) for a in inputs]
        if len(arrs) != self.n_inputs:
            raise CircuitError(f"expected {self.n_inputs} inputs, got {len(arrs)}")
        shape_ = np.broadcast_shapes(*[a.shape for a in arrs]) if arrs else ()
        in_bound = max((int(np.max(np.abs(a.astype(object)))) if a.size else 0) for a in arrs) if arrs else 0
        wide = max(self._bounds(in_bound), default=0) >= (1 << 62)
        dt = object if wide else np.int64
        arrs = [np.broadcast_to(a.astype(dt), shape_) for a in arrs]
        vals: List = []
        keep = set(self.outputs)
        last_use = {}
        for i, g in enumerate(self.gates):
            for w in gate_args(g):
                last_use[w] = i
        for i, g in enumerate(self.gates):
            t = type(g)
            if t is Linear:
                s = np.full(shape_, g.const, dtype=dt)
                for w, c in g.terms:
                    s = s + c * vals[w] if c != 1 else s + vals[w]
                v = s
            elif t is Max:
                v = np.maximum(vals[g.a], vals[g.b])
            elif t is Eq0:
                v = np.where(vals[g.cond] == 0, vals[g.val], 0)
                if dt is object:
                    v = v.astype(object)
            elif t is Div:
                v = np.floor_divide(vals[g.arg], g.m)
            else:
                v = arrs[g.index]
            vals.append(v)
            for w in gate_args(g):
                if last_use.get(w) == i and w not in keep:
                    vals[w] = None
        return [vals[o] for o in self.outputs]


def eval(c: Circuit, inputs: Sequence[int]) -> List[int]:  # noqa: A001
    return c(list(inputs))


# ------------------------------------------------------------------ builder

class CircuitBuilder:
    """Hash-consing circuit builder with constant folding."""

    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self.gates: List = []
        self._index: Dict = {}
        self._const: Dict[int, int] = {}
        for j in range(n_inputs):
            self._emit(Input(j))

    def _emit(self, g) -> int:
        key = (type(g), g)
        w = self._index.get(key)
        if w is None:
            w = len(self.gates)
            self.gates.append(g)
            self._index[key] = w
            if type(g) is Linear and not g.terms:
                self._const[w] = g.const
        return w

    def input(self, j: int) -> int:
        return j

    def const(self, c: int) -> int:
        return self._emit(Linear(int(c), ()))

    def value_of(self, w: int) -> Optional[int]:
        return self._const.get(w)

    def lin(self, terms: Iterable[Tuple[int, int]], const: int = 0) -> int:
        acc: Dict[int, int] = {}
        k = int(const)
        for w, c in terms:
            if not c:
                continue
            cv = self._const.get(w)
            if cv is not None:
                k += c * cv
                continue
            g = self.gates[w]
            if type(g) is Linear and len(g.terms) == 1:
                # inline single-term affine wires
                (w2, c2), = g.terms
                k += c * g.const
                acc[w2] = acc.get(w2, 0) + c * c2
            else:
                acc[w] = acc.get(w, 0) + c
        ts = tuple(sorted((w, c) for w, c in acc.items() if c))
        if not ts:
            return self.const(k)
        if k == 0 and len(ts) == 1 and ts[0][1] == 1:
            return ts[0][0]
        return self._emit(Linear(k, ts))

    def add(self, *ws: int) -> int:
        return self.lin([(w, 1) for w in ws])

    def sub(self, a: int, b: int) -> int:
        return self.lin([(a, 1), (b, -1)])

    def neg(self, a: int) -> int:
        return self.lin([(a, -1)])

    def scale(self, a: int, k: int) -> int:
        return self.lin([(a, k)])

    def addc(self, a: int, k: int) -> int:
        return self.lin([(a, 1)], k)

    def max(self, a: int, b: int) -> int:
        if a == b:
            return a
        ca, cb = self._const.get(a), self._const.get(b)
        if ca is not None and cb is not None:
            return self.const(max(ca, cb))
        if a > b:
            a, b = b, a
        return self._emit(Max(a, b))

    def min(self, a: int, b: int) -> int:
        return self.neg(self.max(self.neg(a), self.neg(b)))

    def eq0(self, cond: int, val: int) -> int:
        """E(cond, val)."""
        cc = self._const.get(cond)
        if cc is not None:
            return val if cc == 0 else self.const(0)
        if self._const.get(val) == 0:
            return val
        return self._emit(Eq0(cond, val))

    E = eq0

    def div(self, m: int, a: int) -> int:
        m = int(m)
        if m < 1:
            raise CircuitError("div modulus must be >= 1")
        if m == 1:
            return a
        ca = self._const.get(a)
        if ca is not None:
            return self.const(ca // m)
        return self._emit(Div(m, a))

    # -------------------------------------------------------------- sugar

    def c_gate(self, x: int, y: int) -> int:
        """C(x, y) = E(min(max(x+1, 0), 1) - 1, y): y when x >= 0, else 0."""
        cx = self._const.get(x)
        if cx is not None:
            return y if cx >= 0 else self.const(0)
        clipped = self.min(self.max(self.addc(x, 1), self.const(0)), self.const(1))
        return self.eq0(self.addc(clipped, -1), y)

    def ge0(self, x: int) -> int:
        """1 if x >= 0 else 0."""
        return self.c_gate(x, self.const(1))

    def is_zero(self, x: int) -> int:
        return self.eq0(x, self.const(1))

    def ite(self, flag: int, a: int, b: int) -> int:
        """ite over a 0/1 flag wire: E(1 - flag, a) + E(flag, b)."""
        cf = self._const.get(flag)
        if cf == 1:
            return a
        if cf == 0:
            return b
        if a == b:
            return a
        return self.add(self.eq0(self.lin([(flag, -1)], 1), a), self.eq0(flag, b))

    def ite_eq(self, f1: int, f2: int, f3: int, f4: int) -> int:
        """ite(f1 = f2, f3, f4) = E(f1 - f2, f3 - f4) + f4."""
        if f3 == f4:
            return f3
        return self.add(self.eq0(self.sub(f1, f2), self.sub(f3, f4)), f4)

    def ite_ge(self, f1: int, f2: int, f3: int, f4: int) -> int:
        """ite(f1 >= f2, f3, f4) = C(f1 - f2, f3 - f4) + f4."""
        if f3 == f4:
            return f3
        return self.add(self.c_gate(self.sub(f1, f2), self.sub(f3, f4)), f4)

    def term(self, coeffs, const: int, env: Mapping[str, int]) -> int:
        return self.lin([(env[v], c) for v, c in coeffs], const)

    def characteristic(self, node: F.Node, env: Mapping[str, int], memo: Optional[dict] = None) -> int:
        """Wire computing the 0/1 characteristic function of ``node``."""
        if memo is None:
            memo = {}
        r = memo.get(node)
        if r is not None:
            return r
        one = self.const(1)
        if isinstance(node, F.Leaf):
            a = node.atom
            if isinstance(a, F.LinIneq):
                r = self.c_gate(self.term(a.coeffs, a.const, env), one)
            else:
                t = self.term(a.coeffs, -a.residue, env)
                M = a.modulus
                if a.positive:
                    d1 = self.div(M, t)
                    d2 = self.div(M, self.addc(t, -1))
                    r = self.eq0(self.lin([(d1, 1), (d2, -1)], -1), one)
                else:
                    rem = self.lin([(t, 1), (self.div(M, t), -M)])
                    r = self.lin([(self.eq0(rem, one), -1)], 1)
        elif isinstance(node, F.And):
            r = self.characteristic(node.children[0], env, memo)
            for ch in node.children[1:]:
                r = self.c_gate(self.addc(r, -1), self.characteristic(ch, env, memo))
        else:
            r = self.characteristic(node.children[0], env, memo)
            for ch in node.children[1:]:
                x2 = self.characteristic(ch, env, memo)
                r = self.lin([(self.c_gate(self.neg(r), self.lin([(x2, -1)], 1)), -1)], 1)
        memo[node] = r
        return r

    def build(self, outputs: Sequence[int], prune: bool = True) -> Circuit:
        outputs = list(outputs)
        if not prune:
            return Circuit(self.n_inputs, self.gates, outputs)
        live = [False] * len(self.gates)
        for o in outputs:
            live[o] = True
        for i in range(len(self.gates) - 1, -1, -1):
            if live[i]:
                for w in gate_args(self.gates[i]):
                    live[w] = True
        remap = {}
        gates = []
        for i, g in enumerate(self.gates):
            if live[i] or type(g) is Input:
                remap[i] = len(gates)
                gates.append(_remap_gate(g, remap))
        return Circuit(self.n_inputs, gates, [remap[o] for o in outputs])

    def embed(self, c: Circuit, inputs: Sequence[int]) -> List[int]:
        """Copy ``c`` into this builder with its inputs wired to ``inputs``."""
        m: Dict[int, int] = {}
        for i, g in enumerate(c.gates):
            t = type(g)
            if t is Input:
                m[i] = inputs[g.index]
            elif t is Linear:
                m[i] = self.lin([(m[w], k) for w, k in g.terms], g.const)
            elif t is Max:
                m[i] = self.max(m[g.a], m[g.b])
            elif t is Eq0:
                m[i] = self.eq0(m[g.cond], m[g.val])
            else:
                m[i] = self.div(g.m, m[g.arg])
        return [m[o] for o in c.outputs]


def _remap_gate(g, remap):
    t = type(g)
    if t is Linear:
        return Linear(g.const, tuple((remap[w], c) for w, c in g.terms))
    if t is Max:
        return Max(remap[g.a], remap[g.b])
    if t is Eq0:
        return Eq0(remap[g.cond], remap[g.val])
    if t is Div:
        return Div(g.m, remap[g.arg])
    return g


def build_c_gate(builder: CircuitBuilder, x: int, y: int) -> int:
    return builder.c_gate(x, y)


def build_ite(builder: CircuitBuilder, phi: F.Node, f1: Sequence[int], f2: Sequence[int],
              env: Mapping[str, int]) -> List[int]:
    xi = builder.characteristic(F.body_of(phi), env)
    return [builder.ite(xi, a, b) for a, b in zip(f1, f2)]


def characteristic_circuit(phi: F.FormulaLike, variables: Optional[Sequence[str]] = None) -> Circuit:
    """One-output circuit computing 1 iff phi holds; inputs in ``variables`` order."""
    if variables is None:
        variables = phi.variables if isinstance(phi, F.Spec) else sorted(F.free_vars(phi))
    b = CircuitBuilder(len(variables))
    env = {v: i for i, v in enumerate(variables)}
    return b.build([b.characteristic(F.body_of(phi), env)])


def rewrite_div_composite(c: Circuit, k: int, l: int, direction: str = "expand") -> Circuit:
    """Rewrite div gates using the composite-modulus identities.

    ``expand``: every Div(k*l) becomes a sum over residues built from div_k and div_l.
    ``contract``: every Div(k) becomes a sum over residues built from div_{k*l}.
    """
    if k < 1 or l < 1:
        raise CircuitError("k, l must be >= 1")
    if direction not in ("expand", "contract"):
        raise CircuitError("direction must be 'expand' or 'contract'")
    kl = k * l
    b = CircuitBuilder(c.n_inputs)
    m: Dict[int, int] = {}
    for i, g in enumerate(c.gates):
        t = type(g)
        if t is Input:
            m[i] = g.index
        elif t is Linear:
            m[i] = b.lin([(m[w], q) for w, q in g.terms], g.const)
        elif t is Max:
            m[i] = b.max(m[g.a], m[g.b])
        elif t is Eq0:
            m[i] = b.eq0(m[g.cond], m[g.val])
        elif direction == "expand" and g.m == kl and kl > 1:
            x = m[g.arg]
            parts = []
            for r in range(kl):
                xr = b.addc(x, -r)
                q = b.div(l, b.div(k, xr))
                parts.append(b.eq0(b.lin([(q, kl), (xr, -1)]), q))
            m[i] = b.add(*parts) if len(parts) > 1 else parts[0]
        elif direction == "contract" and g.m == k and kl > 1:
            x = m[g.arg]
            D = b.div(kl, x)
            parts = []
            for r in range(kl):
                cond = b.lin([(D, kl), (x, -1)], r)
                parts.append(b.eq0(cond, b.lin([(D, l)], r // k)))
            m[i] = b.add(*parts) if len(parts) > 1 else parts[0]
        else:
            m[i] = b.div(g.m, m[g.arg])
    return b.build([m[o] for o in c.outputs])


def to_existential_formula(c: Circuit, input_names: Optional[Sequence[str]] = None,
                           prefix: str = "_g") -> Tuple[List[str], F.Node]:
    """One fresh variable per gate; the conjunction holds exactly on evaluation traces.

    The i-th conjunct of the returned And constrains the i-th gate variable in
    terms of earlier ones (or the inputs).
    """
    if input_names is None:
        input_names = [f"x{j}" for j in range(c.n_inputs)]
    names = [f"{prefix}{i}" for i in range(len(c.gates))]
    parts = []
    for i, g in enumerate(c.gates):
        gv = names[i]
        t = type(g)
        if t is Input:
            parts.append(F.eq({gv: 1, input_names[g.index]: -1}))
        elif t is Linear:
            cs: Dict[str, int] = {gv: 1}
            for w, k in g.terms:
                cs[names[w]] = cs.get(names[w], 0) - k
            parts.append(F.eq(cs, -g.const))
        elif t is Div:
            a = names[g.arg]
            parts.append(F.And((F.ge({a: 1, gv: -g.m}), F.ge({gv: g.m, a: -1}, g.m - 1))))
        elif t is Max:
            a, bb = names[g.a], names[g.b]
            if a == bb:
                parts.append(F.eq({gv: 1, a: -1}))
                continue
            parts.append(F.Or((
                F.And((F.eq({gv: 1, a: -1}), F.ge({a: 1, bb: -1}))),
                F.And((F.eq({gv: 1, bb: -1}), F.ge({bb: 1, a: -1}, -1))),
            )))
        else:
            cv, vv = names[g.cond], names[g.val]
            parts.append(F.Or((
                F.And((F.eq({cv: 1}), F.eq({gv: 1, vv: -1}))),
                F.And((F.ge({cv: 1}, -1), F.eq({gv: 1}))),
                F.And((F.ge({cv: -1}, -1), F.eq({gv: 1}))),
            )))
    return names, F.conj(parts)


@dataclass(frozen=True)
class CircuitStats:
    gate_count: int
    div_gate_count: int
    div_moduli_set: FrozenSet[int]
    max_coeff_bits: int
    depth: int


def stats(c: Circuit) -> CircuitStats:
    divs = [g.m for g in c.gates if type(g) is Div]
    bits = 0
    depth = [0] * len(c.gates)
    for i, g in enumerate(c.gates):
        if type(g) is Linear:
            for _, k in g.terms:
                bits = max(bits, abs(k).bit_length())
            bits = max(bits, abs(g.const).bit_length())
        if type(g) is Div:
            bits = max(bits, g.m.bit_length())
        args = gate_args(g)
        if args:
            depth[i] = 1 + max(depth[w] for w in args)
    return CircuitStats(len(c.gates), len(divs), frozenset(divs), bits,
                        max((depth[o] for o in c.outputs), default=0))


def serialize(c: Circuit) -> str:
    lines = [f"circuit n={c.n_inputs} m={c.n_outputs}"]
    for i, g in enumerate(c.gates):
        t = type(g)
        if t is Input:
            body = f"input {g.index}"
        elif t is Linear:
            body = "lin " + " ".join([str(g.const)] + [f"({k} g{w})" for w, k in g.terms])
        elif t is Max:
            body = f"max g{g.a} g{g.b}"
        elif t is Eq0:
            body = f"eq0 g{g.cond} g{g.val}"
        else:
            body = f"div {g.m} g{g.arg}"
        lines.append(f"g{i} = {body}")
    lines.append("outputs" + "".join(f" g{o}" for o in c.outputs))
    return "\n".join(lines) + "\n"


_HDR = re.compile(r"^circuit\s+n=(\d+)\s+m=(\d+)$")
_TERM = re.compile(r"\((-?\d+)\s+g(\d+)\)")


def deserialize(text: str) -> Circuit:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty circuit", 1, 1)
    m = _HDR.match(lines[0][1])
    if not m:
        raise ParseError("expected 'circuit n=<k> m=<k>'", lines[0][0], 1)
    n, mo = int(m.group(1)), int(m.group(2))
    gates = []
    outputs = None
    for lno, ln in lines[1:]:
        if ln.startswith("outputs"):
            toks = ln.split()[1:]
            try:
                outputs = [int(t[1:]) for t in toks if t.startswith("g")]
            except ValueError:
                raise ParseError("bad outputs line", lno, 1) from None
            if len(outputs) != len(toks):
                raise ParseError("bad outputs line", lno, 1)
            continue
        lhs, _, rhs = ln.partition("=")
        lhs = lhs.strip()
        if lhs != f"g{len(gates)}":
            raise ParseError(f"expected g{len(gates)}", lno, 1)
        parts = rhs.split()
        try:
            op = parts[0]
            if op == "input":
                gates.append(Input(int(parts[1])))
            elif op == "lin":
                rest = rhs.strip()[3:].strip()
                const_txt, _, terms_txt = rest.partition(" ")
                terms = tuple((int(w), int(k)) for k, w in _TERM.findall(terms_txt))
                if _TERM.sub("", terms_txt).strip():
                    raise ValueError
                gates.append(Linear(int(const_txt), terms))
            elif op == "max":
                gates.append(Max(int(parts[1][1:]), int(parts[2][1:])))
            elif op == "eq0":
                gates.append(Eq0(int(parts[1][1:]), int(parts[2][1:])))
            elif op == "div":
                gates.append(Div(int(parts[1]), int(parts[2][1:])))
            else:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"malformed gate line {ln!r}", lno, 1) from None
    if outputs is None:
        raise ParseError("missing outputs line", lines[-1][0], 1)
    if len(outputs) != mo:
        raise ParseError(f"header says m={mo} but {len(outputs)} outputs listed", lines[-1][0], 1)
    try:
        return Circuit(n, gates, outputs)
    except CircuitError as e:
        raise ParseError(str(e), 1, 1) from None
