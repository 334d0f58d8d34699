"""x' = -cos x on the circle, conjugated by a rotating shift x -> x + omega.

Every cell is chain recurrent on each sampled fibre.  The pullback window
still finds local attractors around the random equilibrium omega + 3*pi/2
(the image of the stable point 3*pi/2 of x' = -cos x), so the enumeration reports
nontrivial records; all of them are flagged horizon-limited.

    python demos/rotation_conjugate.py
"""
import math

from randconley import (FiberWindow, Grid, build_graph, chain_recurrent_cells,
                        enumerate_attractors, make_system, sample_path)


def main(seed=0, n=1000, T=1.0, K=20):
    sys = make_system("ROT_CONJ")
    grid = Grid(sys.space, n)
    eps = 2 * grid.cell_width
    omega = sample_path(sys.noise, seed)
    cr = chain_recurrent_cells(build_graph(sys, grid, omega, T, eps))
    print(f"{len(cr)}/{n} cells chain recurrent")
    recs = enumerate_attractors(sys, grid, FiberWindow(omega, T, K), eps)
    eq = grid.cell_of((omega.omega + 1.5 * math.pi) % (2 * math.pi))
    print(f"{sum(not r.trivial for r in recs)} nontrivial records; random equilibrium in cell {eq}")
    for r in recs[:5]:
        print(f"  A={r.attractor[0]!r} horizon_limited={r.horizon_limited}")


if __name__ == "__main__":
    main()
