"""Ring-modulus resolution sweep: solver value against the closed form.

Prints a CSV table of relative errors for several direction counts and
grid sizes, for a ring of radius ratio ``e``.
"""

import argparse
import csv
import math
import sys
import time

from qmod import modulus


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[2, 3])
    p.add_argument("--ratio", type=float, default=math.e)
    p.add_argument("--tol", type=float, default=1e-6)
    return p.parse_args(argv)


SWEEP = {2: [(128, 128), (256, 256), (512, 256), (1024, 512)],
         3: [(512, 64), (512, 128), (2048, 64), (2048, 128), (4096, 128)]}


def main(argv=None):
    args = parse_args(argv)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["n", "directions", "cells", "analytic", "solver", "rel_err", "seconds"])
    for n in args.n:
        exact = modulus.ring_modulus_exact(1.0, args.ratio, n)
        for count, cells in SWEEP.get(n, [(2048, 64)]):
            t = time.perf_counter()
            fam, box = modulus.ring_family_and_box(n, args.ratio, count=count, cells=cells)
            res = modulus.modulus_solve(box, fam, n, tol=args.tol)
            out.writerow([n, count, cells, f"{exact:.10g}", f"{res.value:.10g}",
                          f"{res.value / exact - 1:+.4f}", f"{time.perf_counter() - t:.2f}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
