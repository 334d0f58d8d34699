import json

import numpy as np
import pytest

from randconley.attractors import (AttractorRecord, ConsistencyError, FiberWindow,
                                   RandomCellFamily, basin, build_Ux, build_Ux_batch,
                                   check_basin_independence, check_invariance,
                                   check_pre_attractor, enumerate_attractors,
                                   first_entrance_time, omega_limit, pullback_image)
from randconley.chains import ConfigError
from randconley.geometry import CellSet, Grid, fatten, hausdorff_cells
from randconley.noise import HorizonExceeded, sample_path
from randconley.systems import make_system


@pytest.fixture(scope="module")
def det():
    sys = make_system("CUBIC_DET")
    grid = Grid(sys.space, 1000)
    window = FiberWindow(sample_path(sys.noise, 0), 1.0, 20)
    return sys, grid, window


@pytest.fixture(scope="module")
def sde():
    sys = make_system("CUBIC_SDE", horizon=210.0)
    grid = Grid(sys.space, 1000)
    return sys, grid


def sde_window(sys, seed):
    return FiberWindow(sample_path(sys.noise, seed), 10.0, 20)


def const(window, s):
    return RandomCellFamily.constant(window, s)


def test_window_checks(sde):
    sys, _ = sde
    with pytest.raises(HorizonExceeded):
        FiberWindow(sample_path(sys.noise, 0), 11.0, 20)
    with pytest.raises(ConfigError):
        FiberWindow(sample_path(sys.noise, 0), 1.0, 0)
    w = sde_window(sys, 0)
    assert list(w.core_fibers) == [-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5]


def test_pullback_image_identity_and_contraction(det):
    sys, grid, w = det
    s = grid.cells(0.2, 0.3)
    assert pullback_image(sys, grid, w, s, 0, 0) == fatten(grid, s, grid.cell_width)
    img = pullback_image(sys, grid, w, grid.full(), 0, 5)
    assert img == grid.full()  # X is invariant
    img = pullback_image(sys, grid, w, grid.cells(-0.9, 0.9), 0, 5)
    y = 0.9 * np.exp(-5) / np.sqrt(1 - 0.81 + 0.81 * np.exp(-10))
    assert img == fatten(grid, grid.cells(-y, y), grid.cell_width)


def test_pullback_image_window_underflow(sde):
    sys, grid = sde
    w = sde_window(sys, 0)
    with pytest.raises(HorizonExceeded):
        pullback_image(sys, grid, w, grid.full(), -18, 5)


def test_pullback_image_sde_converges_to_one(sde):
    sys, grid = sde
    w = sde_window(sys, 3)
    img = pullback_image(sys, grid, w, grid.cells(0.2, 0.8), 0, 15)
    assert hausdorff_cells(grid, img, CellSet.from_indices(grid, [999])) <= 2


def test_check_pre_attractor_examples(det):
    sys, grid, w = det
    full = check_pre_attractor(sys, grid, const(w, grid.full()))
    assert full.ok and full.margin == pytest.approx(grid.space.extent)
    mid = check_pre_attractor(sys, grid, const(w, grid.cells(-0.5, 0.5)))
    assert mid.ok and mid.margin > 0.2
    bad = check_pre_attractor(sys, grid, const(w, grid.cells(0.5, 1.0)))
    assert not bad.ok
    with pytest.raises(ConfigError):
        check_pre_attractor(sys, grid, const(w, grid.full()), T_mult=40)


def test_omega_limit_examples(det, sde):
    sys, grid, w = det
    assert omega_limit(sys, grid, const(w, grid.full()))[0] == grid.full()
    a = omega_limit(sys, grid, const(w, grid.cells(-0.5, 0.5)))
    for k in w.core_fibers:
        assert hausdorff_cells(grid, a[k], grid.cells(0, 0)) <= 2
    sys2, grid2 = sde
    w2 = sde_window(sys2, 1)
    u = const(w2, fatten(grid2, grid2.cells(0.1, 1.0), 2 * grid2.cell_width))
    a = omega_limit(sys2, grid2, u)
    assert hausdorff_cells(grid2, a[0], grid2.cells(1.0, 1.0)) <= 2


def test_omega_limit_not_nested_raises(det):
    sys, grid, w = det
    # (0.5, 1) is not a pre-attractor: its images leave it
    with pytest.raises(ConsistencyError):
        omega_limit(sys, grid, const(w, grid.cells(0.5, 1.0)))


def test_basin_examples(det, sde):
    sys, grid, w = det
    u = const(w, grid.cells(-0.5, 0.5))
    b = basin(sys, grid, u)
    for k in b.fibers:
        assert u[k].issubset(b[k])
        assert len(b[k] ^ grid.cells(-1, 1)) <= 2
    sys2, grid2 = sde
    w2 = sde_window(sys2, 2)
    b = basin(sys2, grid2, const(w2, grid2.cells(0.9, 1.0)))
    assert len(b[0] ^ grid2.cells(0.0005, 1.0)) <= 3


def test_build_ux_examples(det, sde):
    sys, grid, w = det
    eps0 = 2 * grid.cell_width
    zero = grid.cell_of(0.0)
    u = build_Ux(sys, grid, w, zero, eps0)
    # 0 sits on the 499/500 boundary: its one-step image meets 498..501,
    # padded by one cell and fattened by two gives 495..504
    assert u[0] == CellSet.from_runs(grid, [(495, 504)])
    assert fatten(grid, CellSet.from_indices(grid, [zero]), eps0).issubset(u[0])
    c = grid.cell_of(0.5)
    u = build_Ux(sys, grid, w, c, eps0)
    assert c not in u[0] and grid.cell_of(0.0) in u[0]
    assert u[0].issubset(grid.cells(-0.01, 0.4))

    sys2, grid2 = sde
    c = grid2.cell_of(-0.5)
    for seed in range(100):
        u = build_Ux(sys2, grid2, sde_window(sys2, seed), c, eps0)
        assert c not in u[0]
        assert 0 in u[0]


def test_build_ux_is_a_fixed_point(sde):
    sys, grid = sde
    w = sde_window(sys, 5)
    eps0 = 2 * grid.cell_width
    r = grid.cells_radius(eps0)
    c = grid.cell_of(0.3)
    u = build_Ux(sys, grid, w, c, eps0)
    seed = CellSet.from_indices(grid, [c])
    for k in w.fibers:
        again = grid.empty()
        for j in range(-w.K, k):
            again = again | pullback_image(sys, grid, w, u[j] | seed, k, k - j)
        assert fatten(grid, again, r * grid.cell_width) == u[k]
    assert check_pre_attractor(sys, grid, u).ok


def test_build_ux_batch_matches_single(det):
    sys, grid, w = det
    cells = [3, 250, 500, 640]
    batch = build_Ux_batch(sys, grid, w, cells, 2 * grid.cell_width)
    for c, u in zip(cells, batch):
        assert u == build_Ux(sys, grid, w, c, 2 * grid.cell_width)


def test_first_entrance_time(det):
    sys, grid, w = det
    u = const(w, grid.cells(-0.5, 0.5))
    omega = w.omega
    assert first_entrance_time(sys, omega, 0.1, u, 10.0) == 0.0
    t = first_entrance_time(sys, omega, 0.9, u, 10.0)
    assert 0 < t < 10
    assert abs(float(sys.flow(t, 0.0, omega, 0.9)) - 0.5) <= grid.cell_width
    assert first_entrance_time(sys, omega, 1.0, u, 10.0) is None
    with pytest.raises(HorizonExceeded):
        first_entrance_time(sys, omega, 0.9, u, 30.0)


def test_invariance_examples(det, sde):
    sys, grid, w = det
    a = const(w, CellSet.from_indices(grid, [grid.cell_of(0.0)]))
    assert check_invariance(sys, grid, a) <= grid.cell_width
    assert check_invariance(sys, grid, const(w, grid.full())) == 0.0


def test_basin_independence_examples(det):
    sys, grid, w = det
    u1 = const(w, grid.cells(-0.5, 0.5))
    u2 = const(w, grid.cells(-0.3, 0.3))
    assert check_basin_independence(sys, grid, u1, u1) == 0
    assert check_basin_independence(sys, grid, u1, u2) <= 4
    far = const(w, grid.full())
    assert check_basin_independence(sys, grid, u1, far) is None


def test_enumerate_cubic_det(det):
    sys, grid, w = det
    recs = enumerate_attractors(sys, grid, w, 2 * grid.cell_width)
    assert sum(r.trivial for r in recs) == 1 and recs[-1].trivial
    found = [r.attractor[0] for r in recs if not r.trivial]
    targets = [grid.cells(0, 0), grid.cells(-1, 0), grid.cells(0, 1)]
    assert len(found) == 3
    for t in targets:
        assert min(hausdorff_cells(grid, t, f) for f in found) <= 3
    for r in recs:
        assert r.margin > 0
        for k in r.attractor.fibers:
            assert r.attractor[k].issubset(r.pre_attractor[k])
            assert r.pre_attractor[k].issubset(r.basin[k])


def test_record_json_round_trip(det):
    sys, grid, w = det
    recs = enumerate_attractors(sys, grid, w, 2 * grid.cell_width, seed_cells=[500, 800])
    for r in recs:
        back = AttractorRecord.from_json(json.loads(json.dumps(r.to_json())), w, grid)
        assert back == r
        assert back.attractor == r.attractor


def test_absorption_property_deterministic(det):
    from randconley.chains import build_graph, chain_recurrent_cells
    sys, grid, w = det
    eps = 2 * grid.cell_width
    cr = chain_recurrent_cells(build_graph(sys, grid, w.omega, w.T, eps))
    for r in enumerate_attractors(sys, grid, w, eps):
        near = fatten(grid, r.attractor[0], eps + 2 * grid.cell_width)
        assert (cr & r.basin[0]).issubset(near)
