"""Random attractors of dx = (x - x^3)(dt + dW) along a few noise paths.

The equilibria -1, 0, 1 survive the noise.  Each sampled fibre should carry
three nontrivial attractors {-1}, {1}, {-1, 1} with basins [-1, 0), (0, 1]
and their union, and the chain-recurrent cells should be exactly those
outside every B - A.

    python demos/sde_attractors.py [n_seeds]
"""
import sys as _sys

from randconley import Grid, make_system
from randconley.theorem import aggregate, decompose

T, K = 10.0, 20


def main(n_seeds=3, n=1000):
    sys = make_system("CUBIC_SDE", dt=0.01, horizon=(K + 1) * T)
    grid = Grid(sys.space, n)
    eps = 2 * grid.cell_width
    reports = []
    for seed in range(n_seeds):
        rep, recs = decompose(sys, grid, seed, T, eps, K)
        reports.append(rep)
        print(f"seed {seed}: CR={rep.cr_cells!r}")
        for r in recs:
            if not r.trivial:
                print(f"  A={r.attractor[0]!r:28s} B={r.basin[0]!r}")
        print(f"  decomposition differs in {rep.sym_diff_cells} cells {rep.sym_diff!r}")
    agg = aggregate(reports)
    print(f"{agg.n_passed}/{agg.n_seeds} seeds within {reports[0].tol_cells} cells, "
          f"max difference {agg.max_sym_diff_cells}")


if __name__ == "__main__":
    main(int(_sys.argv[1]) if len(_sys.argv) > 1 else 3)
