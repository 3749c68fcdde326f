"""Compare the compiled and numpy power-flow kernels.

    python3 benchmarks/bench_kernels.py --sizes 200 1000 --repeat 20

Times one mismatch evaluation, one Jacobian assembly and a full solve per
kernel on synthetic household feeders of increasing size.
"""

import argparse
import sys
import timeit

import numpy as np

from cpesgraph.fixtures import household_grid
from cpesgraph.powerflow import build_ybus, bus_injections, solve
from cpesgraph.powerflow import kernels


def operands(tables):
    y = build_ybus(tables).matrix
    n = y.shape[0]
    rng = np.random.default_rng(0)
    v = (1 + 0.01 * rng.standard_normal(n)) * np.exp(0.01j * rng.standard_normal(n))
    slack = {e.bus for e in tables.ext_grid}
    ids = sorted(b.id for b in tables.bus)
    free = np.array([i for i, b in enumerate(ids) if b not in slack])
    pos = np.full(n, -1, dtype=np.int64)
    pos[free] = np.arange(len(free))
    return (y.indptr.astype(np.int32), y.indices.astype(np.int32), y.data.astype(np.complex128), v,
            bus_injections(tables), pos, len(free))


def bench(n_households: int, repeat: int) -> list[tuple]:
    tables = household_grid(n_households, seed=0)
    indptr, indices, data, v, sbus, pos, m = operands(tables)
    rows = []
    for name in sorted(kernels.AVAILABLE):
        k = kernels.get(name)
        _, cur = k.power_mismatch(indptr, indices, data, v, sbus)
        t_mis = min(timeit.repeat(lambda: k.power_mismatch(indptr, indices, data, v, sbus), number=1, repeat=repeat))
        t_jac = min(timeit.repeat(lambda: k.jacobian_coo(indptr, indices, data, v, cur, pos, m), number=1,
                                  repeat=repeat))
        t_solve = min(timeit.repeat(lambda: solve(tables, kernel=name), number=1, repeat=max(1, repeat // 5)))
        rows.append((n_households, len(tables.bus), name, t_mis * 1e3, t_jac * 1e3, t_solve * 1e3))
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 500, 2000])
    parser.add_argument("--repeat", type=int, default=10)
    args = parser.parse_args(argv)

    print(f"active kernel: {kernels.NAME}; available: {', '.join(sorted(kernels.AVAILABLE))}")
    print(f"{'households':>10} {'buses':>6} {'kernel':>7} {'mismatch ms':>12} {'jacobian ms':>12} {'solve ms':>9}")
    for size in args.sizes:
        for h, b, name, a, j, s in bench(size, args.repeat):
            print(f"{h:>10} {b:>6} {name:>7} {a:>12.3f} {j:>12.3f} {s:>9.1f}")
    if "cython" not in kernels.AVAILABLE:
        print("compiled kernels not built; only the numpy fallback was measured", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
