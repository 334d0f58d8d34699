"""Cell-level check of the decomposition X - CR = union over attractors of (B(A) - A).

For one sampled fibre both sides are computed from the same T and eps: the
left from the chain-recurrent cells of the transition graph, the right from
the enumerated attractor records.  Seeds are then folded into an aggregate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .attractors import FiberWindow, enumerate_attractors
from .chains import (ChainClassification, ConfigError, RandomVariableSpec, build_graph,
                     chain_recurrent_cells)
from .geometry import CellSet, Grid
from .noise import sample_path
from .systems import CocycleSystem

DECOMPOSITION_SCHEMA = "randconley.decomposition/1"
AGGREGATE_SCHEMA = "randconley.aggregate/1"


def default_tolerance(grid: Grid, eps: float) -> int:
    """2 * (eps / cell_width) + 4 cells, rounded up."""
    return int(math.ceil(2 * eps / grid.cell_width - 1e-9)) + 4


def _cells(s: CellSet) -> list[int]:
    return s.to_list()


@dataclass(eq=True)
class DecompositionReport:
    seed: int
    grid: dict
    T: float
    eps: float
    K: int
    tol_cells: int
    cr_cells: CellSet
    union_b_minus_a: CellSet
    sym_diff: CellSet
    # X - CR cells outside every B - A, with the U_x seed cell that failed to separate them
    missing: list = field(default_factory=list)
    # chain-recurrent cells lying in some B - A, with the records responsible
    extra: list = field(default_factory=list)
    contributions: list = field(default_factory=list)
    attractor_cells: CellSet | None = None

    @property
    def sym_diff_cells(self) -> int:
        return len(self.sym_diff)

    @property
    def passed(self) -> bool:
        return self.sym_diff_cells <= self.tol_cells

    def params(self) -> tuple:
        return (json.dumps(self.grid, sort_keys=True), self.T, self.eps, self.K, self.tol_cells)

    def to_json(self) -> dict:
        return {
            "schema": DECOMPOSITION_SCHEMA,
            "seed": self.seed,
            "grid": self.grid,
            "T": self.T,
            "eps": self.eps,
            "K": self.K,
            "tol_cells": self.tol_cells,
            "passed": self.passed,
            "sym_diff_cells": self.sym_diff_cells,
            "cr_cells": _cells(self.cr_cells),
            "union_b_minus_a": _cells(self.union_b_minus_a),
            "sym_diff": _cells(self.sym_diff),
            "attractor_cells": _cells(self.attractor_cells) if self.attractor_cells is not None else None,
            "missing": self.missing,
            "extra": self.extra,
            "contributions": self.contributions,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DecompositionReport":
        if d.get("schema") != DECOMPOSITION_SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        grid = Grid.from_dict(d["grid"])
        cs = partial(CellSet.from_indices, grid)
        att = d.get("attractor_cells")
        return cls(d["seed"], d["grid"], d["T"], d["eps"], d["K"], d["tol_cells"],
                   cs(d["cr_cells"]), cs(d["union_b_minus_a"]), cs(d["sym_diff"]),
                   [dict(m) for m in d["missing"]], [dict(e) for e in d["extra"]],
                   [dict(c) for c in d["contributions"]],
                   cs(att) if att is not None else None)


def _with_seed(exc: Exception, seed: int) -> Exception:
    exc.seed = seed
    if exc.args and isinstance(exc.args[0], str):
        exc.args = (f"seed {seed}: {exc.args[0]}",) + exc.args[1:]
    return exc


def verify_decomposition(sys: CocycleSystem, grid: Grid, seed: int, T: float, eps: float,
                         K: int, tol_cells: int | None = None, eps0: float | None = None,
                         T0_mult: int = 1, dedupe_tol: int = 3,
                         samples_per_cell: int = 3) -> DecompositionReport:
    """Compare X - CR with the union of B - A at fibre 0 of one sampled path.

    ``eps0`` (the U_x padding) defaults to ``eps`` so both sides share the
    same resolution.
    """
    return decompose(sys, grid, seed, T, eps, K, tol_cells, eps0, T0_mult, dedupe_tol,
                     samples_per_cell)[0]


def decompose(sys: CocycleSystem, grid: Grid, seed: int, T: float, eps: float, K: int,
              tol_cells: int | None = None, eps0: float | None = None, T0_mult: int = 1,
              dedupe_tol: int = 3, samples_per_cell: int = 3):
    """:func:`verify_decomposition` that also returns the enumerated records."""
    if tol_cells is None:
        tol_cells = default_tolerance(grid, eps)
    eps0 = eps if eps0 is None else eps0
    try:
        omega = sample_path(sys.noise, seed)
        cr = chain_recurrent_cells(build_graph(sys, grid, omega, T, eps, samples_per_cell))
        records = enumerate_attractors(sys, grid, FiberWindow(omega, T, K), eps0, T0_mult,
                                       dedupe_tol)
    except Exception as exc:
        raise _with_seed(exc, seed)

    union = grid.empty()
    attractors = grid.empty()
    parts = []
    owner = {}
    for i, r in enumerate(records):
        part = r.basin[0] - r.attractor[0]
        parts.append(part)
        union = union | part
        attractors = attractors | r.attractor[0]
        for c in r.seed_cells:
            owner[c] = i
    non_cr = cr.complement()
    sym = non_cr ^ union

    missing = [{"cell": int(c), "seed_cell": int(c), "record": owner.get(int(c))}
               for c in (non_cr - union)]
    extra = [{"cell": int(c), "records": [i for i, p in enumerate(parts) if c in p]}
             for c in (union & cr)]
    contributions = [{"record": i, "trivial": r.trivial, "attractor": r.attractor[0].runs(),
                      "b_minus_a_cells": len(p)} for i, (r, p) in enumerate(zip(records, parts))]
    for c in contributions:
        c["attractor"] = [list(ab) for ab in c["attractor"]]
    report = DecompositionReport(int(seed), grid.to_dict(), float(T), float(eps), int(K),
                                 int(tol_cells), cr, union, sym, missing, extra, contributions,
                                 attractors)
    return report, records


def _verify_one(seed, **kw):
    return verify_decomposition(seed=seed, **kw)


def verify_many(sys: CocycleSystem, grid: Grid, seeds: Sequence[int], workers: int | None = None,
                **kw) -> list[DecompositionReport]:
    """:func:`verify_decomposition` over many seeds, fanned out over processes."""
    return pmap(partial(_verify_one, sys=sys, grid=grid, **kw), list(seeds), workers)


@dataclass(frozen=True)
class AggregateReport:
    n_seeds: int
    max_sym_diff_cells: int
    mean_sym_diff_cells: float
    failures: tuple
    seeds: tuple
    params: dict

    @property
    def n_passed(self) -> int:
        return self.n_seeds - len(self.failures)

    def to_json(self) -> dict:
        return {
            "schema": AGGREGATE_SCHEMA,
            "n_seeds": self.n_seeds,
            "n_passed": self.n_passed,
            "max_sym_diff_cells": self.max_sym_diff_cells,
            "mean_sym_diff_cells": self.mean_sym_diff_cells,
            "failures": list(self.failures),
            "seeds": list(self.seeds),
            "params": self.params,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AggregateReport":
        if d.get("schema") != AGGREGATE_SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return cls(d["n_seeds"], d["max_sym_diff_cells"], d["mean_sym_diff_cells"],
                   tuple(d["failures"]), tuple(d["seeds"]), d["params"])


def aggregate(reports: Sequence[DecompositionReport]) -> AggregateReport:
    """Order-independent summary of per-seed reports sharing one parameterisation."""
    reports = sorted(reports, key=lambda r: r.seed)
    if not reports:
        raise ConfigError("aggregate needs at least one report")
    if len({r.params() for r in reports}) != 1:
        raise ConfigError("reports mix different grids, T, eps, K or tolerances")
    sizes = np.array([r.sym_diff_cells for r in reports])
    first = reports[0]
    params = {"grid": first.grid, "T": first.T, "eps": first.eps, "K": first.K,
              "tol_cells": first.tol_cells}
    return AggregateReport(len(reports), int(sizes.max()), float(sizes.mean()),
                           tuple(r.seed for r in reports if not r.passed),
                           tuple(r.seed for r in reports), params)


# ---------------------------------------------------------------------------
# recurrence index against the decomposition

@dataclass(frozen=True)
class DeltaReconciliation:
    delta_hat: float
    ci_low: float
    ci_high: float
    n_seeds: int
    in_attractor: float  # fraction of seeds with x(omega) in some attractor cell
    in_b_minus_a: float  # fraction with x(omega) in some B - A
    delta_decomposition: float  # 1 - in_b_minus_a
    consistent: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def reconcile_delta(sys: CocycleSystem, grid: Grid, spec: RandomVariableSpec,
                    classification: ChainClassification,
                    reports: Sequence[DecompositionReport]) -> DeltaReconciliation:
    """Cross-check the recurrence index against the decomposition.

    A chain-recurrent x(omega) almost surely avoids every B - A, so the
    fraction of seeds where x(omega) avoids the union estimates the same
    index.  The two disagree when that fraction falls outside the Wilson
    interval of ``classification``.
    """
    if not reports:
        raise ConfigError("need at least one decomposition report")
    in_a = in_ba = 0
    for r in reports:
        c = grid.cell_of(spec(sample_path(sys.noise, r.seed)))
        in_ba += c in r.union_b_minus_a
        in_a += r.attractor_cells is not None and c in r.attractor_cells
    n = len(reports)
    delta_dec = 1 - in_ba / n
    ok = classification.ci_low - 1e-12 <= delta_dec <= classification.ci_high + 1e-12
    return DeltaReconciliation(classification.delta_hat, classification.ci_low,
                               classification.ci_high, n, in_a / n, in_ba / n, delta_dec, ok)
