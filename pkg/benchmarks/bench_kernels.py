"""Compare the compiled and pure-Python kernel backends.

Times the single stencil calls and the fused explicit two-derivative RK
advection run used by the TV sweep, on the sweep's default grid (1600 cells,
50 steps).  Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--cells 1600] [--steps 50]
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from tdssp import kernels
from tdssp.problems import step_ic
from tdssp.registry import lookup


def _best(fn, repeat: int, number: int) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--cells", type=int, default=1600)
    ap.add_argument("--steps", type=int, default=50)
    args = ap.parse_args(argv)

    backends = {"python": kernels.python_backend()}
    compiled = kernels.compiled_backend()
    if compiled is None:
        print("compiled extension not built; timing the python backend only", file=sys.stderr)
    else:
        backends["cython"] = compiled

    u = np.random.default_rng(0).normal(size=args.cells)
    u0 = step_ic(args.cells)
    m = lookup("td-3s5p").method
    cases = {
        "upwind": (lambda k: lambda: k.upwind(u, 1.0), 2000),
        "centered": (lambda k: lambda: k.centered(u, 1.0), 2000),
        "total_variation": (lambda k: lambda: k.total_variation(u), 2000),
        f"advect td-3s5p x{args.steps}": (
            lambda k: lambda: k.advect_tdrk(u0, m.A, m.Adot, m.b, m.bdot, 0.6, 0, args.steps), 5),
    }

    print(f"{'kernel':<24}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, (make, number) in cases.items():
        times = {name: _best(make(k), args.repeat, number) for name, k in backends.items()}
        row = f"{label:<24}" + "".join(f"{t * 1e6:>11.1f} us" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
