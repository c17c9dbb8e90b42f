"""Command-line entry point.

Exit codes: 0 success, 1 verification or check failure, 2 resource budget
exceeded, 3 usage or input error.  Options that take negative numbers need
the ``--opt=value`` spelling, e.g. ``--input-box=-15:15``.
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence

from . import circuit as C
from . import formula as F
from . import normal_forms as NF
from . import qelim
from .errors import ParseError, PreconditionError, ResourceError

OK, FAIL, RESOURCE, USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _spec(path: str) -> F.Spec:
    f = F.parse(_read(path))
    if not isinstance(f, F.Spec):
        raise UsageError(f"{path}: expected a (spec ...) document")
    return f


def _circuit(path: str) -> C.Circuit:
    return C.deserialize(_read(path))


def _ints(text: str) -> List[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"expected integers, got {text!r}") from None


def _range(text: str):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"expected lo:hi, got {text!r}")
    a, b = _ints(lo), _ints(hi)
    if len(a) != 1 or len(b) != 1 or a[0] > b[0]:
        raise UsageError(f"bad range {text!r}")
    return a[0], b[0]


def parse_box(text: str, variables: Sequence[str]):
    """``lo:hi`` for every variable, or ``v=lo:hi,w=lo:hi``."""
    from .oracle import Box
    if "=" not in text:
        lo, hi = _range(text)
        return Box.uniform(variables, lo, hi)
    ranges = {}
    for part in text.split(","):
        v, _, r = part.partition("=")
        ranges[v.strip()] = _range(r)
    missing = [v for v in variables if v not in ranges]
    if missing:
        raise UsageError(f"box lacks ranges for {', '.join(missing)}")
    return Box(tuple((v, *ranges[v]) for v in variables))


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec_text(f: F.FormulaLike) -> str:
    return F.pretty(f) + "\n"


# ---------------------------------------------------------------- subcommands

def cmd_parse(a) -> int:
    f = F.parse(_read(a.file))
    s = F.size(f)
    print(F.format_formula(f))
    print(f"; size nodes={s.node_count} vars={s.var_count} bits={s.const_bits} total={s.total}")
    return OK


def cmd_eval(a) -> int:
    pt = a.point
    if a.circuit:
        c = _circuit(a.circuit)
        print(" ".join(map(str, c(_ints(pt)))))
        return OK
    f = F.parse(_read(a.formula))
    if "=" in pt:
        env = {}
        for part in pt.split(","):
            v, _, val = part.partition("=")
            env[v.strip()] = _ints(val)[0]
    else:
        names = (list(f.inputs) + list(f.outputs)) if isinstance(f, F.Spec) else sorted(F.free_vars(f))
        vals = _ints(pt)
        if len(vals) != len(names):
            raise UsageError(f"expected values for {' '.join(names)}")
        env = dict(zip(names, vals))
    try:
        print("true" if F.eval(f, env) else "false")
    except F.EvalError as e:
        raise UsageError(str(e)) from None
    return OK


def cmd_synth(a) -> int:
    from .synth.general import synth_general, synth_general_detailed
    from .synth.multi import synth_multi_output
    from .synth.one_output import synth_one_output
    spec = _spec(a.file)
    mode = a.mode
    if mode is None:
        mode = "psynf" if NF.check_psynf(spec, check_i0=False).ok else "general"
        print(f"; mode {mode}", file=sys.stderr)
    if mode == "one-output":
        if len(spec.outputs) != 1:
            raise UsageError("one-output mode needs exactly one output")
        c = synth_one_output(spec)
    elif mode == "psynf":
        try:
            c = synth_multi_output(spec, check=True)
        except PreconditionError as e:
            print(f"precondition failed: {e}", file=sys.stderr)
            return FAIL
    elif a.input_box and a.witness_box:
        r0 = a.offset_radius if a.offset_radius is not None else 0
        res = synth_general_detailed(spec, r0, parse_box(a.input_box, spec.inputs),
                                     parse_box(a.witness_box, spec.outputs), max_radius=a.max_radius)
        c = res.circuit
        print(f"; radius {res.radius} candidates {res.candidate_count}", file=sys.stderr)
        for g in res.gaps:
            print(f"CANDIDATE_GAP x={list(g)}", file=sys.stderr)
        if res.gaps:
            _emit(C.serialize(c), a.out)
            return FAIL
    else:
        c = synth_general(spec, a.offset_radius if a.offset_radius is not None else 0)
    _emit(C.serialize(c), a.out)
    return OK


def cmd_verify(a) -> int:
    from .oracle import verify_exact, verify_skolem
    spec = _spec(a.spec)
    c = _circuit(a.circuit)
    if a.exact:
        rep = verify_exact(spec, c, method=a.method)
        print(f"exact {rep.method}: {'holds' if rep.holds else 'fails'}")
        if rep.counterexample is not None:
            print("counterexample x=" + " ".join(map(str, rep.counterexample)))
        return OK if rep.holds else FAIL
    if not a.input_box or not a.witness_box:
        raise UsageError("verify needs --input-box and --witness-box (or --exact)")
    rep = verify_skolem(spec, c, parse_box(a.input_box, spec.inputs),
                        parse_box(a.witness_box, spec.outputs), max_failures=a.max_failures)
    print(rep.to_text(), end="")
    return OK if rep.ok else FAIL


def cmd_check_nf(a) -> int:
    spec = _spec(a.file)
    if a.form == "tame":
        ok = True
        for y in ([a.var] if a.var else spec.outputs):
            rep = NF.check_modulo_tame(spec.body, y)
            print(rep.to_text(), end="")
            ok &= rep.tame
        return OK if ok else FAIL
    if a.form == "psynf":
        rep = NF.check_psynf(spec)
        print(rep.to_text(), end="")
        return OK if rep.ok else FAIL
    res = NF.check_psysynf(spec)
    print(res.to_text(), end="")
    return OK if res.ok else FAIL


def cmd_compile_nf(a) -> int:
    spec = _spec(a.file)
    if a.form == "tame":
        out = spec
        for y in ([a.var] if a.var else spec.outputs):
            out = NF.make_modulo_tame(out, y)
    elif a.form == "psynf":
        out = NF.compile_psynf(spec)
    elif a.form == "psynf-opt":
        if len(spec.outputs) != 1:
            raise UsageError("psynf-opt needs exactly one output")
        out = NF.compile_psynf_one_output_optimal(spec)
    else:
        out = NF.compile_psysynf(spec, radius=a.offset_radius or 0)
    _emit(_spec_text(out), a.out)
    return OK


def cmd_qe(a) -> int:
    f = F.parse(_read(a.file))
    body = F.body_of(f)
    if a.decide:
        if isinstance(f, F.Spec):
            prefix = [("A", v) for v in f.inputs] + [("E", v) for v in f.outputs]
            rest = F.free_vars(body) - set(f.inputs) - set(f.outputs)
            prefix = [("E", v) for v in sorted(rest)] + prefix
        else:
            prefix = [("E", v) for v in sorted(F.free_vars(body))]
        ok = qelim.decide(qelim.QuantifiedFormula(prefix, body))
        print("true" if ok else "false")
        return OK if ok else FAIL
    if not a.eliminate:
        raise UsageError("qe needs --eliminate or --decide")
    ys = [v.strip() for v in a.eliminate.split(",") if v.strip()]
    out = qelim.simplify(qelim.eliminate_block(body, ys))
    if isinstance(f, F.Spec):
        out = F.Spec(f.inputs, tuple(v for v in f.outputs if v not in ys), out)
    print(F.pretty(out))
    return OK


def cmd_analyze(a) -> int:
    from . import analysis as A
    c = _circuit(a.file)
    if a.modassign:
        print(A.modular_assignment(c).to_text(), end="")
        return OK
    try:
        p = A.period_bound(c, a.range)
    except A.PeriodLawViolation as e:
        print(f"period violation: {e}")
        return FAIL
    print(f"period {p}")
    return OK


def cmd_reduce_bool(a) -> int:
    from . import analysis as A
    psi = A.parse_qdimacs(_read(a.file))
    enc = A.encode_bool_to_pa(psi)
    if a.encode:
        print(f"; input primes {' '.join(map(str, enc.p))}; output primes {' '.join(map(str, enc.q))}")
        print(F.pretty(enc.spec))
        return OK
    from .synth.general import synth_general
    sk = A.bool_skolem_via_pa(enc, synth_general(enc.spec))
    import itertools
    for X in itertools.product((False, True), repeat=len(psi.inputs)):
        Y = sk(X)
        print(" ".join(str(int(v)) for v in X) + " -> " + " ".join(str(int(v)) for v in Y))
    bad = A.verify_bool_skolem(psi, sk)
    for X in bad:
        print("FAIL " + " ".join(str(int(v)) for v in X))
    return OK if not bad else FAIL


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="presynth", description="Skolem circuits for Presburger specifications")
    g = p.add_argument_group("budgets (also settable through PRESYNTH_* environment variables)")
    g.add_argument("--dnf-budget", type=int, help="max DNF disjuncts [PRESYNTH_DNF_DISJUNCTS]")
    g.add_argument("--candidate-budget", type=int, help="max affine candidates [PRESYNTH_CANDIDATES]")
    g.add_argument("--qe-budget", type=int, help="max QE formula nodes [PRESYNTH_QE_NODES]")
    g.add_argument("--oracle-points", type=int, help="max oracle grid points [PRESYNTH_ORACLE_POINTS]")
    g.add_argument("--nf-budget", type=int, help="max normal-form nodes [PRESYNTH_PSYSYNF_ATOMS]")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", help="print the canonical form and size")
    s.add_argument("file")
    s.set_defaults(fn=cmd_parse)

    s = sub.add_parser("eval", help="evaluate a formula or circuit at a point")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula")
    src.add_argument("--circuit")
    s.add_argument("--point", required=True, help="values in order, or v=k,w=k for formulas")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("synth", help="synthesize a Skolem circuit")
    s.add_argument("file")
    s.add_argument("--mode", choices=["one-output", "psynf", "general"])
    s.add_argument("--offset-radius", type=int)
    s.add_argument("--max-radius", type=int, default=3)
    s.add_argument("--input-box", help="with --witness-box: widen the radius until no candidate gap")
    s.add_argument("--witness-box")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("verify", help="check a circuit against a spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--circuit", required=True)
    s.add_argument("--input-box")
    s.add_argument("--witness-box")
    s.add_argument("--max-failures", type=int, default=10)
    s.add_argument("--exact", action="store_true", help="unbounded check through quantifier elimination")
    s.add_argument("--method", choices=["auto", "trace", "pieces"], default="auto")
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("check-nf", help="check a normal form")
    s.add_argument("file")
    s.add_argument("--form", choices=["tame", "psynf", "psysynf"], required=True)
    s.add_argument("--var", help="tame: the output to check (default: all)")
    s.set_defaults(fn=cmd_check_nf)

    s = sub.add_parser("compile-nf", help="compile into a normal form")
    s.add_argument("file")
    s.add_argument("--form", choices=["tame", "psynf", "psysynf", "psynf-opt"], required=True)
    s.add_argument("--var")
    s.add_argument("--offset-radius", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_compile_nf)

    s = sub.add_parser("qe", help="quantifier elimination and decision")
    s.add_argument("file")
    m = s.add_mutually_exclusive_group(required=True)
    m.add_argument("--eliminate", help="comma-separated variables")
    m.add_argument("--decide", action="store_true",
                   help="decide forall inputs exists outputs (all variables existential for bare formulas)")
    s.set_defaults(fn=cmd_qe)

    s = sub.add_parser("analyze", help="period and modular assignment of a one-input circuit")
    s.add_argument("file")
    m = s.add_mutually_exclusive_group(required=True)
    m.add_argument("--period", action="store_true")
    m.add_argument("--modassign", action="store_true")
    s.add_argument("--range", type=int, help="validation half-width for --period")
    s.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("reduce-bool", help="Boolean forall-exists CNF through the modular encoding")
    s.add_argument("file", help="QDIMACS-style CNF with 'a' and 'e' prefix lines")
    m = s.add_mutually_exclusive_group(required=True)
    m.add_argument("--encode", action="store_true")
    m.add_argument("--solve", action="store_true")
    s.set_defaults(fn=cmd_reduce_bool)
    return p


def _apply_budgets(a) -> None:
    from . import oracle
    from .synth import general
    if a.dnf_budget is not None:
        F.DNF_BUDGET = a.dnf_budget
    if a.candidate_budget is not None:
        general.CANDIDATE_BUDGET = a.candidate_budget
    if a.qe_budget is not None:
        qelim.QE_BUDGET = a.qe_budget
    if a.oracle_points is not None:
        oracle.ORACLE_POINTS = a.oracle_points
    if a.nf_budget is not None:
        NF.PSYSYNF_BUDGET = a.nf_budget


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = build_parser()
    try:
        a = p.parse_args(argv)
        _apply_budgets(a)
        return a.fn(a)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return USAGE
    except ResourceError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return RESOURCE
    except (C.CircuitError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
