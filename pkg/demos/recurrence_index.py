"""Recurrence index of random initial points for the noisy cubic.

The constants 0 and +-1 are equilibria and always chain recurrent; 0.5 never
is.  A coin that picks 1 with probability p and 0.5 otherwise is chain
recurrent exactly when it picks 1, so its index is p.

    python demos/recurrence_index.py [n_seeds]
"""
import sys as _sys

from randconley import Grid, make_system
from randconley.chains import RandomVariableSpec, classify_variable

T = 10.0


def main(n_seeds=1000, p=0.3):
    sys = make_system("CUBIC_SDE", dt=0.01, horizon=2 * T)
    grid = Grid(sys.space, 1000)
    eps = 2 * grid.cell_width
    variables = {
        "x = 0": RandomVariableSpec.constant(0.0),
        "x = 1": RandomVariableSpec.constant(1.0),
        "x = 0.5": RandomVariableSpec.constant(0.5),
        f"coin p={p}": RandomVariableSpec.from_table([(p, 1.0), (1 - p, 0.5)]),
    }
    for name, spec in variables.items():
        c = classify_variable(sys, grid, spec, T, eps, range(n_seeds), name=name)
        print(f"{name:12s} delta={c.delta_hat:.3f} [{c.ci_low:.3f}, {c.ci_high:.3f}] {c.verdict}")


if __name__ == "__main__":
    main(int(_sys.argv[1]) if len(_sys.argv) > 1 else 1000)
