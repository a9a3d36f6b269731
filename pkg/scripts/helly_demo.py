"""Helly selection on a sequence alternating between two limits.

Even members are the ramp t/(2 pi), odd members the unit step at pi.  The
selected subsequence settles on one parity and integrals of e^{it} against
its limit reproduce that limit's value (0 for the ramp, -1 for the step).
"""

import argparse

import numpy as np

from caratheodory.helly import helly_select, pass_to_limit
from caratheodory.selftest import two_limit_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--members", type=int, default=40)
    ap.add_argument("--dim", type=int, default=1)
    args = ap.parse_args()
    F = two_limit_sequence(args.members, args.dim)
    sel = helly_select(F)
    v = pass_to_limit(lambda t: np.exp(1j * t), sel)
    print("selected members:", " ".join(map(str, sel.indices)))
    print(f"residual {sel.residual:.2e} (tol {sel.tol:.1e}), converged {sel.converged}")
    print("int e^{it} dM_limit =", np.round(v, 10))
    for t in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
        print(f"  M({t:.4f}) = {np.real(sel.limit(np.array([t]))[0, 0, 0]):.6f}")


if __name__ == "__main__":
    main()
