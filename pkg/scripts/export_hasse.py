#!/usr/bin/env python3
"""Export covering-relation graphs of the chain stages of an equation.

Usage: export_hasse.py [EQUATION] [STAGES] [OUTDIR]
"""

import sys

from domania.cli import export_dot, parse_equation, resolve_per_source
from domania.spfunctor import omega_chain

DEFAULT_EQ = "param A = sierpinski; param B = sierpinski; X = A + [B -> X]"


def run(eq=DEFAULT_EQ, stages=2, outdir="."):
    src = parse_equation(eq)
    env = {
        name: resolve_per_source(s).carrier for (name, s) in src.decls.items()
    }
    chain = omega_chain(src.expr, env, int(stages))
    for stage in chain:
        path = f"{outdir}/stage{stage.index}.dot"
        nodes, edges = export_dot(stage.basis, path)
        print(f"{path}: {nodes} nodes, {edges} edges")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
