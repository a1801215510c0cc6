"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the polynomial Dormand-Prince integrator on the spiral annulus field
and the Smith diagonalisation of order-complex boundary matrices.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from morseflow import kernels
from morseflow.builtins import spiral_poly
from morseflow.finspace import minimal_sphere_model, order_complex


def cases():
    poly = spiral_poly()
    x0 = np.array([1.5, 0.0])

    def integrate():
        kernels.dp54_poly(poly.coef, poly.expo, poly.out, x0, 50.0, 1e-10, 1e-10, 1_000_000, 1e8)

    boundary = order_complex(minimal_sphere_model(4)).boundary(2).tolist()

    def snf():
        kernels.snf_diagonal([list(r) for r in boundary])

    return {"dp54_poly (spiral, t=50)": integrate, "snf_diagonal (X4, d=2)": snf}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    rows = []
    for name, fn in cases().items():
        best = {}
        for backend in backends:
            with kernels.use_backend(backend):
                best[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        rows.append((name, best))
    width = max(len(n) for n, _ in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>10}" for b in backends) + "   speedup")
    for name, best in rows:
        cells = "  ".join(f"{best[b] * 1e3:8.2f}ms" for b in backends)
        speed = f"{best['python'] / best['compiled']:8.1f}x" if "compiled" in best else "       n/a"
        print(f"{name:<{width}}  {cells}  {speed}")


if __name__ == "__main__":
    main()
