"""Transition graphs of one epsilon-fattened pullback step, and chain recurrence.

A graph is built at a single fibre omega: a cell ``c`` (read at fibre
theta_{-T} omega) has an edge to every cell within ``eps`` of the image of
``c`` under phi(T, theta_{-T} omega).  Cells on directed cycles are the
grid-level chain-recurrent set.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy import sparse, stats
from scipy.sparse.csgraph import connected_components

from ._parallel import pmap
from .geometry import _SNAP, CellSet, Grid
from .noise import NoisePath, sample_path
from .systems import CocycleSystem

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Inconsistent or invalid run parameters."""


@dataclass(frozen=True, eq=False)
class TransitionGraph:
    grid: Grid
    fiber: NoisePath = field(repr=False)
    T: float
    eps: float
    adjacency: sparse.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.n_cells

    def successors(self, c: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[c]:a.indptr[c + 1]]

    def targets(self, c: int) -> CellSet:
        return CellSet.from_indices(self.grid, self.successors(c))

    def has_edge(self, c: int, d: int) -> bool:
        return bool(d in self.successors(c))

    def to_json(self) -> dict:
        """Adjacency as ``{cell: sorted targets}`` plus the run parameters."""
        return {
            "grid": self.grid.to_dict(),
            "fiber": self.fiber.describe(),
            "T": self.T,
            "eps": self.eps,
            "adjacency": {str(c): sorted(int(d) for d in self.successors(c))
                          for c in range(self.n)},
        }


def image_spans(grid: Grid, images: np.ndarray, inner: bool = False, shrink=0.0):
    """First cell and cell count covered by each row of sampled images.

    ``images[i]`` holds the images of ordered sample points of one connected
    piece (endpoints first and last).  On an interval the span is the hull
    of the images; on the circle it is the forward arc from the first to the
    last image, or the whole circle when the intermediate samples do not
    lie on that arc in order.  With ``inner`` only cells lying entirely
    inside the span are counted (the count may be 0), after pulling both
    ends inward by ``shrink`` cells.
    """
    n = grid.n_cells
    w = grid.cell_width
    if not grid.periodic:
        a = images.min(axis=1)
        b = images.max(axis=1)
        if inner:
            i = np.ceil(grid._coord(a) - _SNAP + shrink).astype(np.int64)
            j = np.floor(grid._coord(b) + _SNAP - shrink).astype(np.int64) - 1
            return i, np.maximum(j - i + 1, 0)
        i = grid.cell_of(a)
        j = grid.cell_of_upper(b)
        lo = np.minimum(i, j)
        return lo, np.maximum(i, j) - lo + 1
    c = grid.space.extent
    rel = np.mod(images - images[:, :1], c)
    arc = rel[:, -1]
    ordered = np.all(np.diff(rel, axis=1) >= 0, axis=1)
    full = ~ordered | (arc >= c - w)
    if inner:
        c0 = grid._coord(images[:, 0])
        i = np.ceil(c0 - _SNAP + shrink).astype(np.int64)
        j = np.floor(c0 + arc / w + _SNAP - shrink).astype(np.int64) - 1
        count = np.where(full, n, np.maximum(j - i + 1, 0))
        return np.where(full, 0, np.mod(i, n)), count
    i = grid.cell_of(images[:, 0])
    # a (near) zero-length arc on a boundary would otherwise wrap the whole circle
    j = np.where(arc < 0.5 * w, grid.cell_of(images[:, -1]), grid.cell_of_upper(images[:, -1]))
    count = np.mod(j - i, n) + 1
    count = np.where(full, n, count)
    i = np.where(full, 0, i)
    return i, count


def _ranges_to_csr(n: int, start: np.ndarray, count: np.ndarray, periodic: bool):
    """CSR matrix whose row r covers ``count[r]`` consecutive cells from ``start[r]``."""
    if periodic:
        count = np.minimum(count, n)
        start = np.where(count >= n, 0, np.mod(start, n))
    else:
        stop = np.minimum(start + count, n)
        start = np.maximum(start, 0)
        count = stop - start
    indptr = np.concatenate([[0], np.cumsum(count)])
    total = int(indptr[-1])
    row_of = np.repeat(np.arange(n), count)
    local = np.arange(total) - indptr[:-1][row_of]
    cols = start[row_of] + local
    if periodic:
        cols = np.mod(cols, n)
    data = np.ones(total, dtype=np.int8)
    mat = sparse.csr_matrix((data, cols, indptr), shape=(n, n))
    mat.sort_indices()
    return mat


def build_graph(sys: CocycleSystem, grid: Grid, omega: NoisePath, T: float, eps: float,
                samples_per_cell: int = 3) -> TransitionGraph:
    """Pullback transition graph phi(T, theta_{-T} omega) at one fibre."""
    if not T > 0:
        raise ConfigError("chain step T must be positive")
    if eps < grid.cell_width * (1 - 1e-9):
        raise ConfigError(f"eps={eps:g} is below one cell width ({grid.cell_width:g})")
    n = grid.n_cells
    pts = grid.cell_lo(np.arange(n))[:, None] + grid.sample_offsets(samples_per_cell) * grid.cell_width
    if grid.periodic:
        pts = np.mod(pts, grid.space.extent)
    else:
        pts = np.minimum(pts, grid.space.hi)
    images = sys.flow(T, -T, omega, pts)
    lo, count = image_spans(grid, images)
    r = grid.cells_radius(eps)
    adjacency = _ranges_to_csr(n, lo - r, count + 2 * r, grid.periodic)
    return TransitionGraph(grid, omega, float(T), float(eps), adjacency)


def chain_recurrent_cells(g: TransitionGraph) -> CellSet:
    """Cells in a strongly connected component that carries a cycle."""
    _, labels = connected_components(g.adjacency, directed=True, connection="strong")
    sizes = np.bincount(labels)
    loops = g.adjacency.diagonal() > 0
    return CellSet(g.grid, (sizes[labels] >= 2) | loops)


def find_chain(g: TransitionGraph, start: int, end: int):
    """Shortest chain ``[(cell, T), ...]`` of length >= 1 from ``start`` to ``end``.

    Returns ``None`` when ``end`` is unreachable.
    """
    parent = {}
    queue = deque()
    for d in g.successors(start):
        d = int(d)
        if d not in parent:
            parent[d] = start
            queue.append(d)
    while queue:
        c = queue.popleft()
        if c == end:
            path = [c]
            while True:
                p = parent[path[-1]]
                path.append(p)
                if p == start and len(path) > 1:
                    break
            return [(int(x), g.T) for x in reversed(path)]
        for d in g.successors(c):
            d = int(d)
            if d not in parent:
                parent[d] = c
                queue.append(d)
    return None


# ---------------------------------------------------------------------------
# random variables and the recurrence trichotomy

@dataclass(frozen=True)
class RandomVariableSpec:
    """x(omega): a constant, a seed-driven table of (probability, value), or a formula."""

    kind: str
    value: float | None = None
    table: tuple = ()
    func: Callable | None = field(default=None, compare=False)

    @classmethod
    def constant(cls, value: float) -> "RandomVariableSpec":
        return cls("constant", value=float(value))

    @classmethod
    def from_table(cls, pairs: Sequence[tuple[float, float]]) -> "RandomVariableSpec":
        probs = np.array([p for p, _ in pairs], dtype=float)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("table probabilities must be non-negative and sum to 1")
        return cls("table", table=tuple((float(p), float(v)) for p, v in pairs))

    @classmethod
    def formula(cls, func: Callable[[NoisePath], float]) -> "RandomVariableSpec":
        return cls("formula", func=func)

    def __call__(self, path: NoisePath) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "table":
            # own stream so the coin is independent of the noise increments
            u = np.random.default_rng([abs(int(path.seed)), 0x5EED]).random()
            acc = 0.0
            for p, v in self.table:
                acc += p
                if u < acc:
                    return v
            return self.table[-1][1]
        return float(self.func(path))

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"constant": self.value}
        if self.kind == "table":
            return {"table": [list(pv) for pv in self.table]}
        raise ValueError("formula variables cannot be serialised")

    @classmethod
    def from_dict(cls, d: dict) -> "RandomVariableSpec":
        if "constant" in d:
            return cls.constant(d["constant"])
        if "table" in d:
            return cls.from_table([tuple(pv) for pv in d["table"]])
        raise ValueError(f"unrecognised variable spec {d!r}")


@dataclass(frozen=True)
class ChainClassification:
    variable: str
    n_samples: int
    n_recurrent: int
    delta_hat: float
    ci_low: float
    ci_high: float
    verdict: str  # "Recurrent" | "Partial" | "NonRecurrent"
    alpha: float = 0.01
    n_failed: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainClassification":
        return cls(**d)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def verdict_for(ci_low: float, ci_high: float, alpha: float) -> str:
    if ci_low >= 1 - alpha:
        return "Recurrent"
    if ci_high <= alpha:
        return "NonRecurrent"
    return "Partial"


def _param(p, path):
    return float(p(path)) if callable(p) else float(p)


def recurrent_at_seed(seed: int, sys: CocycleSystem, grid: Grid, spec: RandomVariableSpec,
                      T, eps, samples_per_cell: int = 3) -> bool:
    omega = sample_path(sys.noise, seed)
    g = build_graph(sys, grid, omega, _param(T, omega), _param(eps, omega), samples_per_cell)
    return grid.cell_of(spec(omega)) in chain_recurrent_cells(g)


def _safe_seed(seed, **kw):
    try:
        return recurrent_at_seed(seed, **kw)
    except (ArithmeticError, ValueError) as exc:
        log.warning("seed %s aborted: %s", seed, exc)
        return None


def classify_variable(sys: CocycleSystem, grid: Grid, spec: RandomVariableSpec, T, eps,
                      seeds: Sequence[int], alpha: float = 0.01, samples_per_cell: int = 3,
                      workers: int | None = None, name: str | None = None) -> ChainClassification:
    """Estimate the recurrence index of x(omega) over sampled fibres.

    ``T`` and ``eps`` may be constants or functions of the sampled path.
    """
    seeds = list(seeds)
    if len(seeds) < 30:
        raise ConfigError("classification needs at least 30 seeds")
    job = partial(_safe_seed, sys=sys, grid=grid, spec=spec, T=T, eps=eps,
                  samples_per_cell=samples_per_cell)
    outcomes = pmap(job, seeds, workers)
    done = [o for o in outcomes if o is not None]
    failed = len(outcomes) - len(done)
    if len(done) < 0.9 * len(seeds):
        raise RuntimeError(f"only {len(done)} of {len(seeds)} seeds completed")
    k = int(sum(done))
    lo, hi = wilson_interval(k, len(done))
    label = name or (repr(spec.to_dict()) if spec.kind != "formula" else "formula")
    return ChainClassification(label, len(done), k, k / len(done), lo, hi,
                               verdict_for(lo, hi, alpha), alpha, failed)
