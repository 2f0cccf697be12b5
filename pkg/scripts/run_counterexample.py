#!/usr/bin/env python3
"""Rebuild the classical witness that the per chain of A + [flatnat -> X]
does not stabilize at the first limit stage, and contrast it with the
finite-exponent variant that does."""

import sys

from domania.cli import main

FINITE_EQ = "param A = sierpinski; param B = sierpinski; X = A + [B -> X]"


def run():
    print("$ domania counterexample --param sierpinski --bound 5 --nat-bound 8")
    main(["counterexample", "--param", "sierpinski", "--bound", "5",
          "--nat-bound", "8"])
    print(f"$ domania per-lfp --eq '{FINITE_EQ}' --rank-bound 4")
    return main(["per-lfp", "--eq", FINITE_EQ, "--rank-bound", "4",
                 "--beyond-omega", "1"])


if __name__ == "__main__":
    sys.exit(run())
