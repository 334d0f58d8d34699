"""Chain-recurrent cells and attractors of two deterministic flows.

x' = x^3 - x on [-1, 1] has equilibria -1, 0, 1; its attractors are {0},
[-1, 0] and [0, 1].  x' = cos^2(x/2) on the circle has no attractor besides
the whole circle, and every cell is chain recurrent.

    python demos/deterministic_conley.py
"""
from randconley import (FiberWindow, Grid, build_graph, chain_recurrent_cells,
                        enumerate_attractors, make_system, sample_path, verify_decomposition)


def main(n=1000, T=1.0, K=20):
    for name in ("CUBIC_DET", "COS2_CIRCLE"):
        sys = make_system(name)
        grid = Grid(sys.space, n)
        eps = 2 * grid.cell_width
        omega = sample_path(sys.noise, 0)
        cr = chain_recurrent_cells(build_graph(sys, grid, omega, T, eps))
        print(f"{name}: {len(cr)} chain-recurrent cells {cr!r}")
        for r in enumerate_attractors(sys, grid, FiberWindow(omega, T, K), eps):
            kind = "trivial" if r.trivial else "attractor"
            print(f"  {kind:9s} A={r.attractor[0]!r}  B={r.basin[0]!r}")
        rep = verify_decomposition(sys, grid, 0, T, eps, K)
        print(f"  X - CR vs union of B - A: {rep.sym_diff_cells} cells differ "
              f"(tolerance {rep.tol_cells}) {rep.sym_diff!r}")


if __name__ == "__main__":
    main()
