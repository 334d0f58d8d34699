"""Compact 1-D phase spaces, uniform cell grids and cell-set algebra.

Cells are half-open ``[lo + i*w, lo + (i+1)*w)``; on an interval the last
cell is closed.  All set-valued tolerances in the package are integer
numbers of cells, and every distance between cell sets is measured between
cell centres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# float slack used when snapping a coordinate onto a cell boundary
_SNAP = 1e-9


class DomainError(ValueError):
    """A point or set lies outside the domain of an operation."""


@dataclass(frozen=True)
class PhaseSpace:
    kind: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("interval", "circle"):
            raise ValueError(f"unknown phase space kind {self.kind!r}")
        if not self.hi > self.lo:
            raise ValueError("phase space needs lo < hi (or circumference > 0)")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "PhaseSpace":
        return cls("interval", float(lo), float(hi))

    @classmethod
    def circle(cls, circumference: float = 2 * math.pi) -> "PhaseSpace":
        return cls("circle", 0.0, float(circumference))

    @property
    def periodic(self) -> bool:
        return self.kind == "circle"

    @property
    def extent(self) -> float:
        return self.hi - self.lo

    def reduce(self, x):
        """Canonical representative of ``x`` (mod C on the circle)."""
        x = np.asarray(x, dtype=float)
        if self.periodic:
            return np.mod(x, self.extent)
        return x

    def distance(self, x, y):
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.periodic:
            d = np.mod(d, self.extent)
            d = np.minimum(d, self.extent - d)
        return d

    def to_dict(self) -> dict:
        if self.periodic:
            return {"kind": "circle", "circumference": self.extent}
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseSpace":
        if d["kind"] == "circle":
            return cls.circle(d["circumference"])
        return cls.interval(d["lo"], d["hi"])


@dataclass(frozen=True)
class Grid:
    space: PhaseSpace
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) < 1:
            raise ValueError("n_cells must be positive")

    @property
    def cell_width(self) -> float:
        return self.space.extent / self.n_cells

    @property
    def periodic(self) -> bool:
        return self.space.periodic

    def _coord(self, x):
        """Position of ``x`` in cell-width units, measured from ``lo``."""
        x = np.asarray(x, dtype=float)
        if self.periodic:
            return np.mod(x, self.space.extent) / self.cell_width
        lo, hi = self.space.lo, self.space.hi
        tol = _SNAP * self.space.extent
        if np.any((x < lo - tol) | (x > hi + tol)) or np.any(np.isnan(x)):
            bad = x[(x < lo - tol) | (x > hi + tol) | np.isnan(x)] if x.ndim else x
            raise DomainError(f"point(s) {bad} outside [{lo}, {hi}]")
        return (np.clip(x, lo, hi) - lo) / self.cell_width

    def cell_of(self, x):
        """Index of the cell containing ``x``; boundaries go to the upper cell,
        except the right end of an interval which belongs to the last cell."""
        c = self._coord(x)
        i = np.floor(c + _SNAP).astype(np.int64)
        if self.periodic:
            i = np.mod(i, self.n_cells)
        else:
            i = np.clip(i, 0, self.n_cells - 1)
        return int(i) if np.ndim(i) == 0 else i

    def cell_of_upper(self, x):
        """Like :meth:`cell_of` but a point on a boundary goes to the lower cell.

        Used for the right end of a closed span so that ``[a, b]`` touching a
        boundary at ``b`` does not spill into the next cell.
        """
        c = self._coord(x)
        i = np.ceil(c - _SNAP).astype(np.int64) - 1
        if self.periodic:
            i = np.mod(i, self.n_cells)
        else:
            i = np.clip(i, 0, self.n_cells - 1)
        return int(i) if np.ndim(i) == 0 else i

    def cell_lo(self, i):
        return self.space.lo + np.asarray(i) * self.cell_width

    def cell_hi(self, i):
        return self.space.lo + (np.asarray(i) + 1) * self.cell_width

    def centers(self) -> np.ndarray:
        return self.space.lo + (np.arange(self.n_cells) + 0.5) * self.cell_width

    def sample_offsets(self, samples_per_cell: int = 3) -> np.ndarray:
        """Relative sample positions in a cell, endpoints included."""
        if samples_per_cell < 2:
            raise ValueError("need at least the two cell endpoints")
        return np.linspace(0.0, 1.0, samples_per_cell)

    def index_distance(self, i, j):
        d = np.abs(np.asarray(i) - np.asarray(j))
        if self.periodic:
            d = np.minimum(d, self.n_cells - d)
        return d

    def cells_radius(self, eps: float) -> int:
        """Number of whole cells whose centres lie within ``eps`` of a centre."""
        if eps < 0:
            raise ValueError("eps must be non-negative")
        return int(math.floor(eps / self.cell_width + _SNAP))

    def cells(self, lo: float, hi: float) -> "CellSet":
        """Cells meeting the closed interval (or forward arc) from lo to hi."""
        mask = np.zeros(self.n_cells, dtype=bool)
        _mark_span(self, mask, self.cell_of(lo), self.cell_of_upper(hi), lo, hi)
        return CellSet(self, mask)

    def empty(self) -> "CellSet":
        return CellSet(self, np.zeros(self.n_cells, dtype=bool))

    def full(self) -> "CellSet":
        return CellSet(self, np.ones(self.n_cells, dtype=bool))

    def to_dict(self) -> dict:
        return {"space": self.space.to_dict(), "n_cells": self.n_cells}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(PhaseSpace.from_dict(d["space"]), int(d["n_cells"]))


def _mark_span(grid: Grid, mask: np.ndarray, i: int, j: int, a=None, b=None):
    """Set ``mask`` on cells i..j (wrapping on the circle)."""
    if grid.periodic:
        if a is not None and b is not None:
            arc = (float(b) - float(a)) % grid.space.extent
            if arc >= grid.space.extent - grid.cell_width:
                mask[:] = True
                return
            if j == (i - 1) % grid.n_cells and arc < grid.cell_width:
                # degenerate span sitting on a boundary
                mask[i] = mask[j] = True
                return
        if i <= j:
            mask[i:j + 1] = True
        else:
            mask[i:] = True
            mask[:j + 1] = True
    else:
        if i > j:
            i, j = j, i
        mask[i:j + 1] = True


@dataclass(frozen=True, eq=False)
class CellSet:
    """A finite set of cells of one grid, stored as a boolean mask."""

    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.grid.n_cells,):
            raise ValueError("mask length does not match the grid")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_indices(cls, grid: Grid, indices) -> "CellSet":
        mask = np.zeros(grid.n_cells, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= grid.n_cells):
            raise DomainError("cell index out of range")
        mask[idx] = True
        return cls(grid, mask)

    @classmethod
    def from_runs(cls, grid: Grid, runs) -> "CellSet":
        """Inverse of :meth:`runs`; a run with ``first > last`` wraps the seam."""
        mask = np.zeros(grid.n_cells, dtype=bool)
        for a, b in runs:
            if not (0 <= a < grid.n_cells and 0 <= b < grid.n_cells):
                raise DomainError("cell index out of range")
            if a <= b:
                mask[a:b + 1] = True
            elif grid.periodic:
                mask[a:] = True
                mask[:b + 1] = True
            else:
                raise DomainError("wrapping run on an interval grid")
        return cls(grid, mask)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self):
        return int(self.mask.sum())

    def __bool__(self):
        return bool(self.mask.any())

    def __iter__(self):
        return iter(int(i) for i in self.indices)

    def __contains__(self, i):
        return bool(self.mask[int(i)])

    def _check(self, other: "CellSet"):
        if other.grid != self.grid:
            raise ValueError("cell sets live on different grids")

    def __or__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & ~other.mask)

    def __xor__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask ^ other.mask)

    def complement(self) -> "CellSet":
        return CellSet(self.grid, ~self.mask)

    def issubset(self, other: "CellSet") -> bool:
        self._check(other)
        return not np.any(self.mask & ~other.mask)

    def __le__(self, other):
        return self.issubset(other)

    def __eq__(self, other):
        if not isinstance(other, CellSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))

    def runs(self) -> list[tuple[int, int]]:
        """Maximal runs of consecutive cells as inclusive ``(first, last)``.

        On the circle a run may wrap, in which case ``first > last``; the
        full circle is reported as the single run ``(0, n - 1)``.
        """
        m = self.mask
        n = m.size
        if not m.any():
            return []
        if m.all():
            return [(0, n - 1)]
        d = np.diff(m.astype(np.int8))
        starts = list(np.flatnonzero(d == 1) + 1)
        ends = list(np.flatnonzero(d == -1))
        if m[0]:
            starts.insert(0, 0)
        if m[-1]:
            ends.append(n - 1)
        runs = [(int(a), int(b)) for a, b in zip(starts, ends)]
        if self.grid.periodic and len(runs) > 1 and m[0] and m[-1]:
            first = runs.pop(0)
            last = runs.pop()
            runs.append((last[0], first[1]))
        return runs

    def to_list(self) -> list[int]:
        return [int(i) for i in self.indices]

    def __repr__(self):
        runs = ", ".join(f"{a}..{b}" if a != b else f"{a}" for a, b in self.runs())
        return f"CellSet({{{runs}}})"


def cell_of(grid: Grid, x):
    return grid.cell_of(x)


def _dilate(mask: np.ndarray, r: int, periodic: bool) -> np.ndarray:
    n = mask.size
    if r <= 0 or not mask.any():
        return mask.copy()
    if periodic:
        if 2 * r + 1 >= n:
            return np.ones(n, dtype=bool)
        padded = np.concatenate([mask[-r:], mask, mask[:r]])
    else:
        padded = np.concatenate([np.zeros(r, bool), mask, np.zeros(r, bool)])
    c = np.concatenate([[0], np.cumsum(padded, dtype=np.int64)])
    # window sum over padded[i : i + 2r + 1] for each original cell i
    win = c[2 * r + 1:] - c[: -(2 * r + 1)]
    return win[:n] > 0


def fatten(grid: Grid, s: CellSet, eps: float) -> CellSet:
    """All cells whose centre lies within ``eps`` of the centre of a cell of ``s``."""
    r = grid.cells_radius(eps)
    return CellSet(grid, _dilate(s.mask, r, grid.periodic))


def distance_to_set(grid: Grid, s: CellSet) -> np.ndarray:
    """Index distance from every cell to the nearest cell of ``s`` (inf if empty)."""
    n = grid.n_cells
    idx = s.indices
    if idx.size == 0:
        return np.full(n, np.inf)
    cells = np.arange(n)
    pos = np.searchsorted(idx, cells)
    right = idx[np.minimum(pos, idx.size - 1)]
    left = idx[np.maximum(pos - 1, 0)]
    d = np.minimum(np.abs(cells - right), np.abs(cells - left)).astype(float)
    if grid.periodic:
        # nearest member may sit across the seam
        d = np.minimum(d, cells + n - idx[-1])
        d = np.minimum(d, idx[0] + n - cells)
    return d


def hausdorff_semi(grid: Grid, a: CellSet, b: CellSet) -> float:
    """sup over centres of ``a`` of the distance to the nearest centre of ``b``."""
    if not a or not b:
        raise DomainError("Hausdorff semi-distance needs non-empty sets")
    return float(distance_to_set(grid, b)[a.mask].max()) * grid.cell_width


def hausdorff(grid: Grid, a: CellSet, b: CellSet) -> float:
    """Symmetric Hausdorff distance between cell-centre sets."""
    return max(hausdorff_semi(grid, a, b), hausdorff_semi(grid, b, a))


def hausdorff_cells(grid: Grid, a: CellSet, b: CellSet) -> int:
    """Symmetric Hausdorff distance in whole cells; empty vs empty is 0."""
    if not a and not b:
        return 0
    if not a or not b:
        return grid.n_cells
    da = distance_to_set(grid, b)[a.mask].max()
    db = distance_to_set(grid, a)[b.mask].max()
    return int(max(da, db))
