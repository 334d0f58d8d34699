"""Command-line front end: ``randconley {recurrence,attractors,verify,classify}``.

Every run is described by one JSON config; command-line flags override its
keys.  Outputs are plain JSON/CSV files that embed the full config, and
reruns with the same config are byte-identical.

Exit codes: 0 success, 1 tolerance failure, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import pmap
from .attractors import FiberWindow, enumerate_attractors
from .chains import (ConfigError, RandomVariableSpec, build_graph, chain_recurrent_cells,
                     classify_variable)
from .geometry import DomainError, Grid
from .noise import HorizonExceeded, sample_path
from .systems import SYSTEM_NAMES, make_system
from .theorem import aggregate, verify_many

log = logging.getLogger("randconley")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# chain step used when the config leaves T unset; one time unit of the SDE
# is too short for the pullback dynamics to settle
DEFAULT_T = {"CUBIC_SDE": 10.0}


def _width_or_abs(value, cell_width: float, name: str) -> float:
    """Numbers are absolute; strings like ``"2w"`` count cell widths."""
    if isinstance(value, str):
        v = value.strip()
        if not v.endswith("w"):
            raise ConfigError(f"{name}: expected a number or '<k>w', got {value!r}")
        try:
            return float(v[:-1] or 1) * cell_width
        except ValueError:
            raise ConfigError(f"{name}: expected a number or '<k>w', got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number or '<k>w', got {value!r}")
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    system: str = "CUBIC_DET"
    n_cells: int = 1000
    T: float | None = None
    eps: float | str = "2w"
    eps0: float | str | None = None
    T0_mult: int = 1
    K: int = 20
    dt: float = 0.01
    horizon: float | None = None
    seeds: int = 1
    base_seed: int = 0
    tol_cells: int | None = None
    out: str = "out"
    integrated: bool = False
    step: float = 1e-3
    samples_per_cell: int = 3
    dedupe_tol: int = 3
    alpha: float = 0.01
    variable: dict | None = None
    variable_name: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # resolved values -------------------------------------------------------
    @property
    def chain_T(self) -> float:
        return float(self.T if self.T is not None else DEFAULT_T.get(self.system.upper(), 1.0))

    @property
    def noise_horizon(self) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        return (self.K + 1) * self.chain_T

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.base_seed, self.base_seed + self.seeds))

    def grid(self, sys) -> Grid:
        return Grid(sys.space, self.n_cells)

    def eps_abs(self, grid: Grid) -> float:
        return _width_or_abs(self.eps, grid.cell_width, "eps")

    def eps0_abs(self, grid: Grid) -> float:
        if self.eps0 is None:
            return self.eps_abs(grid)
        return _width_or_abs(self.eps0, grid.cell_width, "eps0")

    def system_obj(self):
        return make_system(self.system, dt=self.dt, horizon=self.noise_horizon,
                           integrated=self.integrated, step=self.step)

    def validate(self):
        if self.system.upper() not in SYSTEM_NAMES:
            raise ConfigError(f"system: unknown {self.system!r}; choose from {', '.join(SYSTEM_NAMES)}")
        for name in ("n_cells", "T0_mult", "K", "seeds", "samples_per_cell"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {v!r}")
        if self.n_cells < 3:
            raise ConfigError("n_cells: need at least 3 cells")
        if not self.chain_T > 0:
            raise ConfigError(f"T: must be positive, got {self.T!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt: must be positive, got {self.dt!r}")
        if self.K * self.chain_T > self.noise_horizon + 1e-9:
            raise ConfigError(f"horizon: K*T = {self.K * self.chain_T:g} exceeds the noise "
                              f"horizon {self.noise_horizon:g}")
        if self.system.upper() == "CUBIC_SDE":
            steps = self.noise_horizon / self.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ConfigError("dt: must divide the noise horizon")
        if not 0 < self.alpha < 0.5:
            raise ConfigError(f"alpha: must lie in (0, 0.5), got {self.alpha!r}")
        if self.tol_cells is not None and (not isinstance(self.tol_cells, int) or self.tol_cells < 0):
            raise ConfigError(f"tol_cells: must be a non-negative integer, got {self.tol_cells!r}")
        sys_ = self.system_obj()
        grid = self.grid(sys_)
        if self.eps_abs(grid) < grid.cell_width * (1 - 1e-9):
            raise ConfigError(f"eps: {self.eps!r} is below one cell width ({grid.cell_width:g})")
        if self.eps0_abs(grid) < grid.cell_width * (1 - 1e-9):
            raise ConfigError(f"eps0: {self.eps0!r} is below one cell width ({grid.cell_width:g})")
        if self.variable is not None:
            try:
                RandomVariableSpec.from_dict(self.variable)
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"variable: {exc}") from None


# ---------------------------------------------------------------------------
# output helpers

def _dump(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _header(cfg: RunConfig, sys_, grid: Grid) -> dict:
    return {"version": __version__, "config": cfg.to_dict(), "system": sys_.describe(),
            "grid": grid.to_dict(), "T": cfg.chain_T, "eps": cfg.eps_abs(grid)}


def _cr_one(seed, sys_, grid, T, eps, spc):
    g = build_graph(sys_, grid, sample_path(sys_.noise, seed), T, eps, spc)
    return chain_recurrent_cells(g).to_list()


def cmd_recurrence(cfg: RunConfig) -> int:
    sys_ = cfg.system_obj()
    grid = cfg.grid(sys_)
    eps = cfg.eps_abs(grid)
    seeds = cfg.seed_list
    cells = pmap(partial(_cr_one, sys_=sys_, grid=grid, T=cfg.chain_T, eps=eps,
                         spc=cfg.samples_per_cell), seeds)
    out = Path(cfg.out)
    _dump(out / "cr_cells.json", {**_header(cfg, sys_, grid),
                                  "seeds": [{"seed": s, "cells": c} for s, c in zip(seeds, cells)]})
    counts = np.zeros(grid.n_cells, dtype=int)
    for c in cells:
        counts[c] += 1
    with open(out / "cr_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "center", "fraction"])
        for i, (x, k) in enumerate(zip(grid.centers(), counts)):
            w.writerow([i, repr(float(x)), repr(float(k) / len(seeds))])
    log.info("recurrence: %d seeds, mean %.1f recurrent cells", len(seeds),
             counts.sum() / len(seeds))
    return EXIT_OK


def _attractors_one(seed, sys_, grid, cfg_dict):
    cfg = RunConfig(**cfg_dict)
    window = FiberWindow(sample_path(sys_.noise, seed), cfg.chain_T, cfg.K)
    return enumerate_attractors(sys_, grid, window, cfg.eps0_abs(grid), cfg.T0_mult,
                                cfg.dedupe_tol)


def cmd_attractors(cfg: RunConfig) -> int:
    sys_ = cfg.system_obj()
    grid = cfg.grid(sys_)
    seeds = cfg.seed_list
    results = pmap(partial(_attractors_one, sys_=sys_, grid=grid, cfg_dict=cfg.to_dict()), seeds)
    out = Path(cfg.out)
    _dump(out / "attractors.json", {
        **_header(cfg, sys_, grid),
        "seeds": [{"seed": s, "n_nontrivial": sum(not r.trivial for r in recs),
                   "records": [r.to_json() for r in recs]} for s, recs in zip(seeds, results)],
    })
    with open(out / "basins.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "cell", "record"])
        for s, recs in zip(seeds, results):
            # records are ordered smallest attractor first; the trivial one is last
            owner = np.full(grid.n_cells, len(recs) - 1)
            for i in reversed(range(len(recs))):
                owner[recs[i].basin[0].mask] = i
            for c in range(grid.n_cells):
                w.writerow([s, c, int(owner[c])])
    for s, recs in zip(seeds, results):
        log.info("attractors: seed %d, %d nontrivial records", s, sum(not r.trivial for r in recs))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    sys_ = cfg.system_obj()
    grid = cfg.grid(sys_)
    reports = verify_many(sys_, grid, cfg.seed_list, T=cfg.chain_T, eps=cfg.eps_abs(grid),
                          K=cfg.K, tol_cells=cfg.tol_cells, eps0=cfg.eps0_abs(grid),
                          T0_mult=cfg.T0_mult, dedupe_tol=cfg.dedupe_tol,
                          samples_per_cell=cfg.samples_per_cell)
    agg = aggregate(reports)
    out = Path(cfg.out)
    header = _header(cfg, sys_, grid)
    _dump(out / "decomposition.json", {**header, "reports": [r.to_json() for r in reports]})
    _dump(out / "aggregate.json", {**header, "aggregate": agg.to_json()})
    log.info("verify: %d/%d seeds within %d cells (max %d)", agg.n_passed, agg.n_seeds,
             reports[0].tol_cells, agg.max_sym_diff_cells)
    return EXIT_OK if not agg.failures else EXIT_TOLERANCE


def cmd_classify(cfg: RunConfig) -> int:
    if cfg.variable is None:
        raise ConfigError("variable: classify needs a variable spec, e.g. {\"constant\": 0}")
    sys_ = cfg.system_obj()
    grid = cfg.grid(sys_)
    spec = RandomVariableSpec.from_dict(cfg.variable)
    res = classify_variable(sys_, grid, spec, cfg.chain_T, cfg.eps_abs(grid), cfg.seed_list,
                            alpha=cfg.alpha, samples_per_cell=cfg.samples_per_cell,
                            name=cfg.variable_name)
    _dump(Path(cfg.out) / "classification.json",
          {**_header(cfg, sys_, grid), "classification": res.to_dict()})
    log.info("classify: %s delta=%.4f [%.4f, %.4f] -> %s", res.variable, res.delta_hat,
             res.ci_low, res.ci_high, res.verdict)
    return EXIT_OK


COMMANDS = {
    "recurrence": cmd_recurrence,
    "attractors": cmd_attractors,
    "verify": cmd_verify,
    "classify": cmd_classify,
}


# ---------------------------------------------------------------------------
# argument parsing

def _eps_arg(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randconley", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file; flags override its keys")
        sp.add_argument("--system", choices=SYSTEM_NAMES)
        sp.add_argument("--n-cells", dest="n_cells", type=int)
        sp.add_argument("--T", dest="T", type=float)
        sp.add_argument("--eps", type=_eps_arg, help="absolute, or '<k>w' in cell widths")
        sp.add_argument("--eps0", type=_eps_arg)
        sp.add_argument("--T0-mult", dest="T0_mult", type=int)
        sp.add_argument("--K", dest="K", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--horizon", type=float)
        sp.add_argument("--seeds", type=int, help="number of seeds")
        sp.add_argument("--base-seed", dest="base_seed", type=int)
        sp.add_argument("--tol-cells", dest="tol_cells", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--integrated", action="store_const", const=True, default=None)
        sp.add_argument("--step", type=float)
        sp.add_argument("--samples-per-cell", dest="samples_per_cell", type=int)
        sp.add_argument("--dedupe-tol", dest="dedupe_tol", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--variable", type=json.loads,
                        help='JSON, e.g. \'{"constant": 0}\' or \'{"table": [[0.5, 1], [0.5, 0.5]]}\'')
        sp.add_argument("--variable-name", dest="variable_name")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


_NON_CONFIG = {"command", "config", "verbose"}


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
    for k, v in vars(args).items():
        if k not in _NON_CONFIG and v is not None:
            data[k] = v
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except (ConfigError, DomainError, HorizonExceeded, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
