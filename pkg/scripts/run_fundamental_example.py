#!/usr/bin/env python3
"""Work through the fundamental equation X = A + [B -> X] end to end:
domain chain and unfolding isomorphism, per chain and stabilization,
dense machinery, and the evaluation round trip."""

import sys

from domania.cli import main

EQ = "param A = sierpinski; param B = sierpinski; X = A + [B -> X]"


def run():
    for argv in (
        ["solve-domain", "--eq", EQ, "--stages", "3"],
        ["per-lfp", "--eq", EQ, "--rank-bound", "3", "--beyond-omega", "1"],
        ["dense", "--eq", EQ, "--n-max", "3", "--rank-bound", "3"],
        ["eta-roundtrip", "--eq", EQ, "--rank-bound", "3"],
    ):
        print(f"$ domania {' '.join(argv)}")
        code = main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
