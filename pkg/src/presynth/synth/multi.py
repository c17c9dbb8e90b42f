"""Sequential multi-output synthesis for formulas in semantic normal form."""
from __future__ import annotations

from typing import Optional, Sequence

from .. import formula as F
from .. import qelim
from ..circuit import Circuit, CircuitBuilder
from ..errors import PreconditionError
from .one_output import skolem_wire


def synth_multi_output(spec: F.Spec, check: bool = True, budget: Optional[int] = None) -> Circuit:
    """Skolem circuit for all outputs of a spec in semantic normal form.

    Output i is synthesized for the local projection of the suffix y_{i+1..m}
    with x, y_1..y_{i-1} as inputs; the pieces are composed front to back.
    """
    if check:
        from ..normal_forms import check_psynf
        rep = check_psynf(spec, budget=budget)
        if not rep.ok:
            raise PreconditionError(f"not in semantic normal form: {rep.reason}")
    xs, ys = list(spec.inputs), list(spec.outputs)
    b = CircuitBuilder(len(xs))
    env = {v: i for i, v in enumerate(xs)}
    out = []
    for i, y in enumerate(ys):
        proj = qelim.local_exists(spec.body, ys[i + 1:])
        w = skolem_wire(b, proj, y, env)
        env[y] = w
        out.append(w)
    return b.build(out)
