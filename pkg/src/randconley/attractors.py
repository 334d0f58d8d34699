"""Pre-attractors, pullback attractors and basins along one sampled noise orbit.

Random sets are represented on a fibre window: one cell set for each fibre
``theta_{kT} omega`` with ``k`` in ``[-K, K]``.  Images between fibres are
evaluated directly through the cocycle on the endpoints of each run of
cells (every map here is an orientation preserving homeomorphism of a 1-D
space, so a run maps onto the span of its endpoint images), then padded by
one cell.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .chains import ConfigError
from .geometry import _SNAP, CellSet, Grid, hausdorff_cells
from .noise import HorizonExceeded, NoisePath
from .systems import CocycleSystem

log = logging.getLogger(__name__)


class ConsistencyError(RuntimeError):
    """An internal invariant failed; usually eps or the grid is misconfigured."""


@dataclass(frozen=True, eq=False)
class FiberWindow:
    """Fibres ``theta_{kT} omega`` for ``k = -K..K``; ``core`` fibres carry the results."""

    omega: NoisePath = field(repr=False)
    T: float
    K: int
    core: int | None = None

    def __post_init__(self):
        if self.K < 1 or not self.T > 0:
            raise ConfigError("window needs K >= 1 and T > 0")
        m = self.omega.model
        if m.kind == "wiener" and self.K * self.T > m.horizon - abs(self.omega.offset) + 1e-9:
            raise HorizonExceeded(self.K * self.T, m.horizon - abs(self.omega.offset))
        if self.core is None:
            object.__setattr__(self, "core", max(1, self.K // 4))
        if not 0 <= self.core <= self.K:
            raise ConfigError("core must lie within the window")

    @property
    def autonomous(self) -> bool:
        return self.omega.model.kind == "trivial"

    @property
    def fibers(self) -> range:
        return range(-self.K, self.K + 1)

    @property
    def core_fibers(self) -> range:
        return range(-self.core, self.core + 1)

    def describe(self) -> dict:
        return {"T": self.T, "K": self.K, "core": self.core, **self.omega.describe()}


@dataclass(frozen=True, eq=False)
class RandomCellFamily:
    window: FiberWindow = field(repr=False)
    sets: dict

    @classmethod
    def constant(cls, window: FiberWindow, s: CellSet, fibers: Iterable[int] | None = None):
        fibers = window.fibers if fibers is None else fibers
        return cls(window, {k: s for k in fibers})

    @property
    def fibers(self) -> list[int]:
        return sorted(self.sets)

    def __getitem__(self, k: int) -> CellSet:
        return self.sets[k]

    def __contains__(self, k: int) -> bool:
        return k in self.sets

    def __or__(self, other: "RandomCellFamily") -> "RandomCellFamily":
        ks = set(self.sets) & set(other.sets)
        return RandomCellFamily(self.window, {k: self.sets[k] | other.sets[k] for k in sorted(ks)})

    def key(self) -> tuple:
        return tuple((k, self.sets[k].mask.tobytes()) for k in self.fibers)

    def __eq__(self, other):
        if not isinstance(other, RandomCellFamily):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_json(self) -> dict:
        return {str(k): self.sets[k].to_list() for k in self.fibers}

    @classmethod
    def from_json(cls, window: FiberWindow, grid: Grid, d: dict) -> "RandomCellFamily":
        return cls(window, {int(k): CellSet.from_indices(grid, v) for k, v in d.items()})


# ---------------------------------------------------------------------------
# image machinery

def _runs_2d(masks: np.ndarray, periodic: bool):
    """Runs of every row of a 2-D mask: arrays ``(row, first, last)`` plus full rows.

    On the circle a run through the seam is reported once with
    ``first > last``; rows that are entirely set come back in ``full``.
    """
    n_rows, n = masks.shape
    m = masks.astype(np.int8)
    d = np.diff(np.pad(m, ((0, 0), (1, 1))), axis=1)
    sr, sc = np.nonzero(d == 1)
    er, ec = np.nonzero(d == -1)
    # nonzero walks rows in order, so starts and ends pair up
    first, last, row = sc, ec - 1, sr
    full = masks.all(axis=1) if n_rows else np.zeros(0, bool)
    if periodic and row.size:
        keep = ~full[row]
        row, first, last = row[keep], first[keep], last[keep]
        wrap = masks[:, 0] & masks[:, -1] & ~full
        if wrap.any():
            # merge the run ending at n-1 with the run starting at 0
            is_head = (first == 0) & wrap[row]
            is_tail = (last == n - 1) & wrap[row]
            tail_first = np.full(n_rows, -1)
            tail_first[row[is_tail]] = first[is_tail]
            first = np.where(is_head, tail_first[row], first)
            keep = ~is_tail
            row, first, last = row[keep], first[keep], last[keep]
    elif not periodic:
        full = np.zeros(n_rows, bool)
    return row, first, last, full


def _run_endpoints(grid: Grid, first, last) -> np.ndarray:
    """Rows ``(lo, mid, hi)`` spanning each run of cells."""
    lo = grid.cell_lo(first)
    length = (np.mod(last - first, grid.n_cells) + 1) * grid.cell_width
    pts = np.stack([lo, lo + 0.5 * length, lo + length], axis=1)
    if grid.periodic:
        return np.mod(pts, grid.space.extent)
    return np.minimum(pts, grid.space.hi)


def _mark_ranges(n: int, start, count, periodic: bool, rows=None, n_rows: int = 1) -> np.ndarray:
    """Boolean masks (one per row id) covering the given index ranges."""
    start = np.asarray(start, dtype=np.int64)
    count = np.asarray(count, dtype=np.int64)
    rows = np.zeros(start.size, dtype=np.int64) if rows is None else np.asarray(rows)
    diff = np.zeros((n_rows, n + 1), dtype=np.int32)
    if periodic:
        count = np.minimum(count, n)
        start = np.mod(start, n)
        end = start + count
        over = end > n
        np.add.at(diff, (rows, start), 1)
        np.add.at(diff, (rows, np.minimum(end, n)), -1)
        np.add.at(diff, (rows[over], np.zeros(over.sum(), dtype=np.int64)), 1)
        np.add.at(diff, (rows[over], end[over] - n), -1)
    else:
        end = np.minimum(start + count, n)
        start = np.maximum(start, 0)
        np.add.at(diff, (rows, start), 1)
        np.add.at(diff, (rows, end), -1)
    return np.cumsum(diff, axis=1)[:, :n] > 0


def _dilate_2d(masks: np.ndarray, r: int, periodic: bool) -> np.ndarray:
    n_rows, n = masks.shape
    if r <= 0 or n_rows == 0:
        return masks.copy()
    if periodic:
        if 2 * r + 1 >= n:
            return np.repeat(masks.any(axis=1, keepdims=True), n, axis=1)
        padded = np.concatenate([masks[:, -r:], masks, masks[:, :r]], axis=1)
    else:
        z = np.zeros((n_rows, r), bool)
        padded = np.concatenate([z, masks, z], axis=1)
    c = np.zeros((n_rows, padded.shape[1] + 1), dtype=np.int32)
    np.cumsum(padded, axis=1, out=c[:, 1:])
    return (c[:, 2 * r + 1:] - c[:, :-(2 * r + 1)])[:, :n] > 0


def _carry(sys: CocycleSystem, grid: Grid, window: FiberWindow, pts, src, dst, rows,
           n_rows: int, inner: bool = False) -> np.ndarray:
    """Mark, per row id, the cells spanned by the images of run endpoints ``pts``
    carried from fibre ``src`` to fibre ``dst`` (arrays aligned with ``pts``)."""
    from .chains import image_spans

    if len(pts) == 0:
        return np.zeros((n_rows, grid.n_cells), dtype=bool)
    t = ((dst - src) * window.T)[:, None]
    s = (src * window.T)[:, None]
    img = sys.flow(t, s, window.omega, pts)
    # under a nonzero time an image endpoint landing exactly on a cell
    # boundary has saturated onto an invariant point (or hit it by chance),
    # so the inner rule does not count the cell beyond it
    shrink = np.where(t[:, 0] != 0, 2 * _SNAP, 0.0) if inner else 0.0
    lo, count = image_spans(grid, img, inner, shrink)
    return _mark_ranges(grid.n_cells, lo, count, grid.periodic, rows, n_rows)


def _images(sys: CocycleSystem, grid: Grid, window: FiberWindow, pieces, n_rows: int = 1,
            pad: int = 1, inner: bool = False) -> np.ndarray:
    """Image masks of ``pieces = [(set, src_fiber, dst_fiber, row), ...]``.

    Each set is carried from its source fibre to its destination fibre and
    OR-ed into mask ``row``; the result is padded by ``pad`` cells.  With
    ``inner`` only cells lying wholly inside each image are marked.
    """
    n = grid.n_cells
    out = np.zeros((n_rows, n), dtype=bool)
    pts, src, dst, rows = [], [], [], []
    for s, a, b, row in pieces:
        _, first, last, full = _runs_2d(s.mask[None, :], grid.periodic)
        if full[0]:
            out[row] = True
            continue
        if first.size == 0:
            continue
        pts.append(_run_endpoints(grid, first, last))
        src.append(np.full(first.size, a))
        dst.append(np.full(first.size, b))
        rows.append(np.full(first.size, row))
    if pts:
        out |= _carry(sys, grid, window, np.concatenate(pts), np.concatenate(src),
                      np.concatenate(dst), np.concatenate(rows), n_rows, inner)
    return _dilate_2d(out, pad, grid.periodic)


def pullback_image(sys: CocycleSystem, grid: Grid, window: FiberWindow, s: CellSet,
                   k: int, m: int) -> CellSet:
    """Image at fibre ``k`` of the set ``s`` living at fibre ``k - m`` (``m`` steps of T)."""
    if not window.autonomous and k - m < -window.K:
        raise HorizonExceeded((k - m) * window.T, window.K * window.T)
    return CellSet(grid, _images(sys, grid, window, [(s, k - m, k, 0)])[0])


def _row_distance(masks: np.ndarray, periodic: bool) -> np.ndarray:
    """Per row, index distance from every cell to the nearest set cell (inf if none)."""
    n_rows, n = masks.shape
    if periodic:
        d = _row_distance(np.concatenate([masks, masks, masks], axis=1), False)
        return d[:, n:2 * n]
    big = 10 * n + 10
    idx = np.arange(n)
    left = np.maximum.accumulate(np.where(masks, idx, -big), axis=1)
    right = np.minimum.accumulate(np.where(masks, idx, 2 * big)[:, ::-1], axis=1)[:, ::-1]
    d = np.minimum(idx - left, right - idx).astype(float)
    d[~masks.any(axis=1)] = np.inf
    return d


def _clearance_rows(grid: Grid, inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Length of free cells between each ``inner`` row and the complement of ``outer``.

    Negative when ``inner`` is not contained in ``outer``.
    """
    w = grid.cell_width
    dist = _row_distance(~outer, grid.periodic)
    d = np.where(inner, dist, np.inf).min(axis=1)
    out = np.where(np.isfinite(d), (d - 1) * w, grid.space.extent)
    out = np.minimum(out, grid.space.extent)
    return np.where(np.any(inner & ~outer, axis=1), -w, out)


@dataclass(frozen=True)
class PreAttractorCheck:
    ok: bool
    margin: float


def _stack(grid: Grid, families: Sequence[RandomCellFamily], fibers: Sequence[int]) -> np.ndarray:
    """Masks ``(family, fibre, cell)``; fibres a family lacks are empty."""
    out = np.zeros((len(families), len(fibers), grid.n_cells), dtype=bool)
    for i, u in enumerate(families):
        for j, k in enumerate(fibers):
            if k in u:
                out[i, j] = u[k].mask
    return out


class _EndpointCache:
    """Run endpoints of every family at every window fibre, computed once."""

    def __init__(self, grid: Grid, window: FiberWindow, stack: np.ndarray):
        self.grid = grid
        self.window = window
        self.stack = stack
        self._cache = {}

    def __call__(self, k: int):
        if k not in self._cache:
            row, first, last, full = _runs_2d(self.stack[:, k + self.window.K], self.grid.periodic)
            self._cache[k] = (row, _run_endpoints(self.grid, first, last), np.flatnonzero(full))
        return self._cache[k]


def _carry_many(sys, grid, window, cache: _EndpointCache, terms, n_rows: int) -> np.ndarray:
    """OR the images of ``terms = [(src_fibre, dst_fibre, row_offset, row_stride)]``.

    Family ``f`` at ``src`` lands in output row ``f * stride + offset``; the
    result is padded by one cell.
    """
    rows, pts, src, dst, full_rows = [], [], [], [], []
    for a, b, off, stride in terms:
        row, p, full = cache(a)
        rows.append(row * stride + off)
        pts.append(p)
        src.append(np.full(len(p), a))
        dst.append(np.full(len(p), b))
        full_rows.append(full * stride + off)
    if not rows:
        return np.zeros((n_rows, grid.n_cells), dtype=bool)
    out = _carry(sys, grid, window, np.concatenate(pts), np.concatenate(src),
                 np.concatenate(dst), np.concatenate(rows), n_rows)
    out[np.concatenate(full_rows)] = True
    return _dilate_2d(out, 1, grid.periodic)


def _check_stack(sys, grid, window: FiberWindow, stack: np.ndarray, T_mult: int) -> np.ndarray:
    """Pre-attractor margins for a stack of families over all window fibres."""
    if T_mult < 1:
        raise ConfigError("T_mult must be at least 1")
    usable = [k for k in window.fibers if window.K + k >= T_mult]
    if len(usable) < 2:
        raise ConfigError("window too small: fewer than 2 usable fibres")
    nf = stack.shape[0]
    cache = _EndpointCache(grid, window, stack)
    margin = np.full(nf, grid.space.extent)
    for k in usable:
        terms = [(k - m, k, 0, 1) for m in range(T_mult, window.K + k + 1)]
        union = _carry_many(sys, grid, window, cache, terms, nf)
        margin = np.minimum(margin, _clearance_rows(grid, union, stack[:, k + window.K]))
    return margin


def check_pre_attractor(sys: CocycleSystem, grid: Grid, u: RandomCellFamily,
                        T_mult: int = 1) -> PreAttractorCheck:
    """Do the time >= T_mult*T pullback images of ``u`` land strictly inside ``u``?"""
    w = u.window
    margin = float(_check_stack(sys, grid, w, _stack(grid, [u], list(w.fibers)), T_mult)[0])
    return PreAttractorCheck(margin > 0, margin)


def _omega_stack(sys, grid, window: FiberWindow, stack: np.ndarray, T_mult: int,
                 fibers: Sequence[int], chunk: int = 48) -> np.ndarray:
    """Attractor masks ``(family, fibre, cell)`` for a stack of pre-attractors."""
    nf, n = stack.shape[0], grid.n_cells
    out = np.zeros((nf, len(fibers), n), dtype=bool)
    nonempty = stack.any(axis=2)
    for lo in range(0, nf, chunk):
        sub = stack[lo:lo + chunk]
        ns = sub.shape[0]
        cache = _EndpointCache(grid, window, sub)
        for jf, k in enumerate(fibers):
            M = window.K + k
            if M < 1:
                continue
            terms = [(k - m, k, m - 1, M) for m in range(1, M + 1)]
            imgs = _carry_many(sys, grid, window, cache, terms, ns * M).reshape(ns, M, n)
            # suffix unions over m >= n
            suffix = np.logical_or.accumulate(imgs[:, ::-1], axis=1)[:, ::-1]
            valid = nonempty[lo:lo + ns, [k - m + window.K for m in range(1, M + 1)]]
            for f in range(ns):
                idx = [i for i in range(T_mult - 1, M) if valid[f, i]]
                if not idx:
                    continue
                current = suffix[f, idx[0]]
                for i in idx[1:]:
                    nxt = suffix[f, i]
                    if np.any(nxt & ~current):
                        raise ConsistencyError(f"pullback unions not nested at fibre {k}")
                    if np.array_equal(nxt, current):
                        break
                    current = nxt
                out[lo + f, jf] = current
    for jf, k in enumerate(fibers):
        if -window.K <= k <= window.K:
            bad = np.any(out[:, jf] & ~stack[:, k + window.K], axis=1)
            if bad.any():
                raise ConsistencyError(f"attractor leaves its pre-attractor at fibre {k}")
    return out


def omega_limit(sys: CocycleSystem, grid: Grid, u: RandomCellFamily, T_mult: int = 1,
                fibers: Iterable[int] | None = None) -> RandomCellFamily:
    """Nested pullback limit of ``u`` at each requested fibre (default: the core).

    At fibre k the n-th set is the union of the images of ``u(k-m)`` over
    ``m >= n``; the sequence is non-increasing and the first n at which two
    successive sets agree gives the attractor.
    """
    w = u.window
    fibers = list(w.core_fibers if fibers is None else fibers)
    a = _omega_stack(sys, grid, w, _stack(grid, [u], list(w.fibers)), T_mult, fibers)[0]
    return RandomCellFamily(w, {k: CellSet(grid, a[j]) for j, k in enumerate(fibers)})


def basin(sys: CocycleSystem, grid: Grid, u: RandomCellFamily, K: int | None = None,
          fibers: Iterable[int] | None = None) -> RandomCellFamily:
    """Union of the backward images of ``u(k+m)``, ``m = 0..K-k``, at each fibre.

    Only cells lying wholly inside a backward image are kept, so cells that
    merely touch the closure of the basin (an unstable equilibrium on its
    edge, say) are left out.
    """
    w = u.window
    K = w.K if K is None else K
    fibers = list(w.core_fibers if fibers is None else fibers)
    out = {}
    for k in fibers:
        pieces = [(u[k + m], k + m, k, 0) for m in range(0, K - k + 1)
                  if (k + m) in u and u[k + m]]
        out[k] = CellSet(grid, _images(sys, grid, w, pieces, pad=0, inner=True)[0])
    return RandomCellFamily(w, out)


def build_Ux_batch(sys: CocycleSystem, grid: Grid, window: FiberWindow, cells: Sequence[int],
                   eps0: float, T0_mult: int = 1) -> list[RandomCellFamily]:
    """:func:`build_Ux` for many seed cells at once (one mask row per cell)."""
    if eps0 < grid.cell_width * (1 - 1e-9):
        raise ConfigError("eps0 must be at least one cell width")
    if T0_mult < 1:
        raise ConfigError("T0_mult must be at least 1")
    cells = np.asarray(list(cells), dtype=np.int64)
    nc, n = cells.size, grid.n_cells
    r = grid.cells_radius(eps0)
    seed = np.zeros((nc, n), dtype=bool)
    seed[np.arange(nc), cells] = True

    def endpoints(masks, active):
        row, first, last, full = _runs_2d(masks, grid.periodic)
        return active[row], _run_endpoints(grid, first, last), active[full]

    if window.autonomous:
        v = np.zeros((nc, n), dtype=bool)
        active = np.arange(nc)
        while active.size:
            row, pts, full_rows = endpoints(seed[active] | v[active], active)
            img = np.zeros((nc, n), dtype=bool)
            for m in range(T0_mult, 2 * T0_mult):
                zeros = np.zeros(len(pts), dtype=np.int64)
                img |= _carry(sys, grid, window, pts, zeros, zeros + m, row, nc)
            img[full_rows] = True
            img = _dilate_2d(_dilate_2d(img, 1, grid.periodic), r, grid.periodic)
            new = v | img
            changed = np.any(new != v, axis=1)
            v = new
            active = np.flatnonzero(changed)
        return [RandomCellFamily.constant(window, CellSet(grid, v[i])) for i in range(nc)]

    sets = {}
    cached = {}  # fibre -> (row, endpoints, full rows) of seed | sets[fibre]
    for k in window.fibers:
        rows, pts, src, fulls = [], [], [], []
        for j in range(-window.K, k - T0_mult + 1):
            if j not in cached:
                cached[j] = endpoints(seed | sets[j], np.arange(nc))
            row, p, full_rows = cached[j]
            rows.append(row)
            pts.append(p)
            src.append(np.full(len(p), j))
            fulls.append(full_rows)
        if rows:
            row = np.concatenate(rows)
            src = np.concatenate(src)
            img = _carry(sys, grid, window, np.concatenate(pts), src, np.full(src.size, k), row, nc)
            img[np.concatenate(fulls)] = True
            img = _dilate_2d(_dilate_2d(img, 1, grid.periodic), r, grid.periodic)
        else:
            img = np.zeros((nc, n), dtype=bool)
        sets[k] = img
    return [RandomCellFamily(window, {k: CellSet(grid, sets[k][i]) for k in window.fibers})
            for i in range(nc)]


def build_Ux(sys: CocycleSystem, grid: Grid, window: FiberWindow, c: int, eps0: float,
             T0_mult: int = 1) -> RandomCellFamily:
    """Smallest family containing the eps0-padded pullback images of cell ``c``
    and of itself, over times >= T0_mult*T.

    Along a random window each fibre only depends on earlier fibres, so one
    forward sweep over ``k`` reaches the fixed point.  For autonomous systems
    the family is constant and is found by iterating to a fixed point.
    """
    return build_Ux_batch(sys, grid, window, [c], eps0, T0_mult)[0]


def first_entrance_time(sys: CocycleSystem, omega: NoisePath, x: float, u: RandomCellFamily,
                        t_max: float, resolution: float = 1e-3):
    """First time phi(t, omega)x enters (the closure of) ``u``, or ``None``.

    Lattice times ``mT`` are scanned first; the crossing inside the first
    successful step is refined by bisection to ``resolution``.
    """
    w = u.window
    grid_of = next(iter(u.sets.values())).grid
    if t_max > w.K * w.T + 1e-9:
        raise HorizonExceeded(t_max, w.K * w.T)

    def inside(t, k):
        return grid_of.cell_of(float(sys.flow(t, 0.0, omega, x))) in u[k]

    m_max = int(np.floor(t_max / w.T + 1e-9))
    for m in range(0, m_max + 1):
        if m not in u:
            continue
        if inside(m * w.T, m):
            if m == 0:
                return 0.0
            lo, hi = (m - 1) * w.T, m * w.T
            while hi - lo > resolution:
                mid = 0.5 * (lo + hi)
                if inside(mid, m):
                    hi = mid
                else:
                    lo = mid
            return hi
    return None


# ---------------------------------------------------------------------------
# records and enumeration

@dataclass(eq=False)
class AttractorRecord:
    pre_attractor: RandomCellFamily = field(repr=False)
    attractor: RandomCellFamily = field(repr=False)
    basin: RandomCellFamily = field(repr=False)
    T_used: float
    margin: float
    seed_cells: list = field(default_factory=list)
    trivial: bool = False
    horizon_limited: bool = False

    def __eq__(self, other):
        if not isinstance(other, AttractorRecord):
            return NotImplemented
        return self.to_json() == other.to_json()

    def summary(self, k: int = 0) -> str:
        return f"A={self.attractor[k]!r} B={self.basin[k]!r}"

    def to_json(self) -> dict:
        w = self.attractor.window
        return {
            "T": self.T_used,
            "margin": self.margin,
            "seed": w.omega.seed,
            "K": w.K,
            "trivial": self.trivial,
            "horizon_limited": self.horizon_limited,
            "seed_cells": list(self.seed_cells),
            "U": self.pre_attractor.to_json(),
            "A": self.attractor.to_json(),
            "B": self.basin.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict, window: FiberWindow, grid: Grid) -> "AttractorRecord":
        fam = partial(RandomCellFamily.from_json, window, grid)
        return cls(fam(d["U"]), fam(d["A"]), fam(d["B"]), d["T"], d["margin"],
                   list(d["seed_cells"]), d["trivial"], d["horizon_limited"])


def families_close(grid: Grid, a: RandomCellFamily, b: RandomCellFamily, tol: int) -> bool:
    ks = set(a.fibers) & set(b.fibers)
    return all(hausdorff_cells(grid, a[k], b[k]) <= tol for k in ks)


def _separated(grid: Grid, a: RandomCellFamily, b: RandomCellFamily, tol: int) -> bool:
    """More than ``tol`` free cells between ``a`` and ``b`` at every shared fibre."""
    for k in set(a.fibers) & set(b.fibers):
        if not a[k] or not b[k]:
            return False
        dist = _row_distance(b[k].mask[None], grid.periodic)[0]
        if dist[a[k].mask].min() <= tol + 1:
            return False
    return True


def _record_for(sys, grid, u: RandomCellFamily, T_mult: int, seed_cells) -> AttractorRecord:
    chk = check_pre_attractor(sys, grid, u, T_mult)
    if not chk.ok:
        raise ConsistencyError(f"candidate from cells {seed_cells} is not a pre-attractor "
                               f"(margin {chk.margin:g})")
    w = u.window
    a = omega_limit(sys, grid, u, T_mult)
    b = basin(sys, grid, u)
    return AttractorRecord(u, a, b, w.T * T_mult, chk.margin, list(seed_cells),
                           horizon_limited=not w.autonomous)


def enumerate_attractors(sys: CocycleSystem, grid: Grid, window: FiberWindow, eps0: float,
                         T0_mult: int = 1, dedupe_tol: int = 3,
                         seed_cells: Sequence[int] | None = None) -> list[AttractorRecord]:
    """Attractors generated by the U_x families of every cell, closed under unions.

    Records whose attractors agree within ``dedupe_tol`` cells on every core
    fibre are merged; the trivial record (U = A = B = X) is always present
    and absorbs candidates whose attractor is the whole space.  Candidates
    whose limit is not invariant within ``dedupe_tol`` cells are dropped.
    Sorted by attractor size at fibre 0.
    """
    cells = list(range(grid.n_cells) if seed_cells is None else seed_cells)
    families: dict[tuple, tuple[RandomCellFamily, list[int]]] = {}
    for c, u in zip(cells, build_Ux_batch(sys, grid, window, cells, eps0, T0_mult)):
        key = u.key()
        if key in families:
            families[key][1].append(c)
        else:
            families[key] = (u, [c])

    full = RandomCellFamily.constant(window, grid.full())
    core_full = RandomCellFamily.constant(window, grid.full(), window.core_fibers)
    trivial = AttractorRecord(full, core_full, core_full, window.T * T0_mult,
                              grid.space.extent, [], trivial=True,
                              horizon_limited=not window.autonomous)
    records = [trivial]

    def absorb(rec: AttractorRecord) -> bool:
        for old in records:
            if families_close(grid, old.attractor, rec.attractor, dedupe_tol):
                old.seed_cells.extend(rec.seed_cells)
                return False
        records.append(rec)
        return True

    cands = [(u, cs) for u, cs in families.values() if any(u[k] for k in window.core_fibers)]
    if cands:
        core = list(window.core_fibers)
        stack = _stack(grid, [u for u, _ in cands], list(window.fibers))
        margins = _check_stack(sys, grid, window, stack, T0_mult)
        if np.any(margins <= 0):
            i = int(np.argmax(margins <= 0))
            raise ConsistencyError(f"candidate from cells {cands[i][1]} is not a pre-attractor "
                                   f"(margin {margins[i]:g})")
        limits = _omega_stack(sys, grid, window, stack, T0_mult, core)
        # most U_x share their attractor exactly; group before the costlier checks
        groups: dict[bytes, list[int]] = {}
        for i in range(len(cands)):
            groups.setdefault(limits[i].tobytes(), []).append(i)
        sizes = stack.sum(axis=(1, 2))
        for idx in groups.values():
            # the basin does not depend on which U generated A; the tightest
            # one is least exposed to spill-over near the end of the window
            i = min(idx, key=lambda j: (sizes[j], j))
            u = cands[i][0]
            a = RandomCellFamily(window, {k: CellSet(grid, limits[i, j]) for j, k in enumerate(core)})
            # a limit that is not invariant along the window (it jumps to a
            # much larger set near the window's end) is an edge artifact
            if check_invariance(sys, grid, a) > dedupe_tol * grid.cell_width * (1 + 1e-9):
                continue
            cs = [c for j in idx for c in cands[j][1]]
            placeholder = AttractorRecord(u, a, None, window.T * T0_mult, float(margins[i]), cs,
                                          horizon_limited=not window.autonomous)
            if absorb(placeholder):
                placeholder.basin = basin(sys, grid, u)

    # unions of pre-attractors are pre-attractors; U_x alone never yields
    # attractors with several separated components.  Only unions of
    # attractors that stay apart on every core fibre can be new; overlapping
    # ones merge into a near-duplicate and would make the closure explode.
    frontier = [r for r in records if not r.trivial]
    tried = set()
    while frontier:
        new = []
        nontrivial = [r for r in records if not r.trivial]
        for r1 in frontier:
            for r2 in nontrivial:
                if r1 is r2:
                    continue
                pair = frozenset((id(r1), id(r2)))
                if pair in tried:
                    continue
                tried.add(pair)
                if not _separated(grid, r1.attractor, r2.attractor, dedupe_tol):
                    continue
                u = r1.pre_attractor | r2.pre_attractor
                rec = _record_for(sys, grid, u, T0_mult, [])
                if absorb(rec):
                    new.append(rec)
        frontier = new

    for r in records:
        r.seed_cells = sorted(set(r.seed_cells))
    return sorted(records, key=lambda r: (r.trivial, len(r.attractor[0]), r.attractor[0].to_list()))


def check_invariance(sys: CocycleSystem, grid: Grid, a: RandomCellFamily, T: float | None = None) -> float:
    """Largest Hausdorff distance between phi(T)A(k) and A(k+1) over adjacent fibres."""
    ks = a.fibers
    if len(ks) < 2:
        raise ConfigError("invariance check needs at least two fibres")
    worst = 0
    for k in ks[:-1]:
        if k + 1 not in a:
            continue
        img = pullback_image(sys, grid, a.window, a[k], k + 1, 1)
        worst = max(worst, hausdorff_cells(grid, img, a[k + 1]))
    return worst * grid.cell_width


def check_basin_independence(sys: CocycleSystem, grid: Grid, u1: RandomCellFamily,
                             u2: RandomCellFamily, K: int | None = None, dedupe_tol: int = 3,
                             T_mult: int = 1):
    """Size of ``basin(u1) ^ basin(u2)`` at fibre 0, or ``None`` if the attractors differ."""
    a1 = omega_limit(sys, grid, u1, T_mult, [0])
    a2 = omega_limit(sys, grid, u2, T_mult, [0])
    if hausdorff_cells(grid, a1[0], a2[0]) > dedupe_tol:
        return None
    b1 = basin(sys, grid, u1, K, [0])[0]
    b2 = basin(sys, grid, u2, K, [0])[0]
    return len(b1 ^ b2)
