"""Grids, weighted integration, the sequence norm, and sub-box restriction."""

import math

import numpy as np
import pytest

import ksfluid as kf
from ksfluid.quadrature import (check_symmetry, gridfunction_to_csv,
                                read_gridfunction, write_gridfunction)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def test_build_grid_two_per_axis():
    grid = kf.build_grid(kf.Box(2.0), 2)
    assert grid.n_nodes == 8
    assert np.allclose(sorted(set(np.round(grid.nodes.ravel(), 12))), [-0.5, 0.5])
    assert np.all(grid.weights == 1.0)


def test_build_grid_rejects_single_node():
    with pytest.raises(ValueError):
        kf.build_grid(kf.Box(1.0), 1)


def test_build_grid_three_per_axis():
    grid = kf.build_grid(kf.Box(3.0), 3)
    assert grid.n_nodes == 27
    assert set(np.round(grid.axis, 12)) == {-1.0, 0.0, 1.0}
    assert np.all(grid.weights == 1.0)


def test_grid_weight_sum_matches_volume():
    for L, ng in ((2.0, 3), (1.7, 5), (4.0, 2)):
        grid = kf.build_grid(kf.Box(L), ng)
        assert float(grid.weights.sum()) == pytest.approx(L ** 3, rel=1e-12)


def test_grid_nodes_symmetric_under_negation():
    grid = kf.build_grid(kf.Box(2.4), 4)
    as_set = {tuple(np.round(p, 12)) for p in grid.nodes}
    for p in grid.nodes:
        assert tuple(np.round(-p, 12)) in as_set


def test_box_rejects_nonpositive_side():
    with pytest.raises(ValueError):
        kf.Box(0.0)


# ---------------------------------------------------------------------------
# integrate_n
# ---------------------------------------------------------------------------

def test_integrate_constant_two_factors():
    grid = kf.build_grid(kf.Box(2.0), 2)
    assert kf.integrate_n(grid, 2, lambda a, b: 1.0) == pytest.approx(64.0, rel=1e-14)


def test_integrate_half_space_indicator():
    grid = kf.build_grid(kf.Box(2.0), 2)
    val = kf.integrate_n(grid, 1, lambda a: 1.0 if a[0] > 0 else 0.0)
    assert val == pytest.approx(4.0, rel=1e-14)


def test_integrate_radius_squared_matches_midpoint_sum():
    # closed-form midpoint value: 3 * L^2 * sum_i x_i^2 * h with h = L/n
    grid = kf.build_grid(kf.Box(2.0), 4)
    expected = 3.0 * (grid.weight * 0.0 + (2.0 ** 2) * float(
        np.sum(grid.axis ** 2) * grid.spacing))
    val = kf.integrate_n(grid, 1, lambda a: float(a @ a))
    assert val == pytest.approx(expected, rel=1e-13)


def test_integrate_budget_error_names_count():
    grid = kf.build_grid(kf.Box(1.0), 4)  # 64 nodes
    with pytest.raises(kf.BudgetError, match="262144"):
        kf.integrate_n(grid, 3, lambda *a: 1.0, budget=1000)


def test_integrate_rejects_zero_factors():
    grid = kf.build_grid(kf.Box(1.0), 2)
    with pytest.raises(ValueError):
        kf.integrate_n(grid, 0, lambda: 1.0)


# ---------------------------------------------------------------------------
# xnorm
# ---------------------------------------------------------------------------

def _gf(grid, order, values):
    return kf.GridFunction(order=order, grid=grid, values=values)


def test_xnorm_first_order_only():
    grid = kf.build_grid(kf.Box(1.0), 2)
    M = grid.n_nodes
    phis = [_gf(grid, 1, np.ones(M)), _gf(grid, 2, np.zeros((M, M)))]
    assert kf.xnorm(phis, 2.0) == pytest.approx(2.0)


def test_xnorm_balanced_sequence():
    grid = kf.build_grid(kf.Box(1.0), 2)
    M = grid.n_nodes
    c = 1.7
    phis = [np.full((M,) * m, c ** (-m)) for m in (1, 2, 3)]
    assert kf.xnorm(phis, c) == pytest.approx(1.0, rel=1e-14)


def test_xnorm_matches_exhaustive_scan():
    rng = np.random.default_rng(11)
    grid = kf.build_grid(kf.Box(1.0), 2)
    M = grid.n_nodes
    c = 0.8
    phis = [rng.normal(size=(M,) * m) for m in (1, 2, 3)]
    brute = max(c ** m * max(abs(x) for x in p.ravel())
                for m, p in enumerate(phis, start=1))
    assert kf.xnorm(phis, c) == pytest.approx(brute, rel=1e-15)


def test_xnorm_requires_positive_weight():
    grid = kf.build_grid(kf.Box(1.0), 2)
    with pytest.raises(ValueError):
        kf.xnorm([np.ones(grid.n_nodes)], 0.0)


def test_xnorm_is_a_norm_on_random_pairs():
    rng = np.random.default_rng(5)
    grid = kf.build_grid(kf.Box(1.0), 2)
    M = grid.n_nodes
    c = 1.3
    for _ in range(16):
        xs = [rng.normal(size=(M,) * m) for m in (1, 2)]
        ys = [rng.normal(size=(M,) * m) for m in (1, 2)]
        alpha = float(rng.normal())
        nx, ny = kf.xnorm(xs, c), kf.xnorm(ys, c)
        assert kf.xnorm([alpha * a for a in xs], c) == pytest.approx(abs(alpha) * nx, rel=1e-12)
        assert kf.xnorm([a + b for a, b in zip(xs, ys)], c) <= nx + ny + 1e-12 * (nx + ny)


# ---------------------------------------------------------------------------
# imbedding and restriction
# ---------------------------------------------------------------------------

def test_restrict_identity():
    grid = kf.build_grid(kf.Box(2.0), 3)
    spec = kf.ImbeddingSpec.build(grid, grid)
    rng = np.random.default_rng(0)
    f = _gf(grid, 2, rng.normal(size=(27, 27)))
    out = kf.restrict(spec, f)
    assert np.array_equal(out.values, f.values)


def test_restrict_constant():
    outer = kf.build_grid(kf.Box(2.0), 4)
    inner = kf.build_grid(kf.Box(1.0), 2)
    spec = kf.ImbeddingSpec.build(outer, inner)
    f = _gf(outer, 1, np.ones(outer.n_nodes))
    assert np.all(kf.restrict(spec, f).values == 1.0)


def test_restrict_central_subblock_bookkeeping():
    # node-index function: value = node id; the restriction must pick the
    # ids whose coordinates live in the central 2^3 block of the 4^3 grid
    outer = kf.build_grid(kf.Box(2.0), 4)
    inner = kf.build_grid(kf.Box(1.0), 2)
    spec = kf.ImbeddingSpec.build(outer, inner)
    f = _gf(outer, 1, np.arange(outer.n_nodes, dtype=float))
    picked = kf.restrict(spec, f).values.astype(int)
    expected = []
    for i, node in enumerate(outer.nodes):
        if np.all(np.abs(node) <= 0.5):
            expected.append(i)
    assert sorted(picked.tolist()) == expected
    # inner enumeration order must match the inner grid's own order
    for node_in, node_out_id in zip(inner.nodes, spec.node_map):
        assert np.allclose(node_in, outer.nodes[node_out_id], atol=1e-13)


def test_restrict_composes_over_nested_boxes():
    big = kf.build_grid(kf.Box(3.0), 6)
    mid = kf.build_grid(kf.Box(2.0), 4)
    small = kf.build_grid(kf.Box(1.0), 2)
    rng = np.random.default_rng(2)
    f = _gf(big, 2, rng.normal(size=(big.n_nodes,) * 2))
    two_step = kf.restrict(kf.ImbeddingSpec.build(mid, small),
                           kf.restrict(kf.ImbeddingSpec.build(big, mid), f))
    one_step = kf.restrict(kf.ImbeddingSpec.build(big, small), f)
    assert np.array_equal(two_step.values, one_step.values)


def test_embedding_rejects_offset_lattice():
    outer = kf.build_grid(kf.Box(2.0), 4)
    inner = kf.build_grid(kf.Box(1.0), 3)  # spacing 1/3 vs 1/2
    with pytest.raises(kf.EmbeddingError):
        kf.ImbeddingSpec.build(outer, inner)


def test_embedding_rejects_oversized_inner():
    outer = kf.build_grid(kf.Box(1.0), 2)
    inner = kf.build_grid(kf.Box(2.0), 4)
    with pytest.raises(kf.EmbeddingError):
        kf.ImbeddingSpec.build(outer, inner)


# ---------------------------------------------------------------------------
# symmetry checks and on-disk round trips
# ---------------------------------------------------------------------------

def test_check_symmetry_detects_asymmetry():
    grid = kf.build_grid(kf.Box(1.0), 2)
    M = grid.n_nodes
    sym = np.random.default_rng(1).normal(size=(M, M))
    sym = sym + sym.T
    assert check_symmetry(_gf(grid, 2, sym))
    asym = sym.copy()
    asym[0, 1] += 1.0
    assert not check_symmetry(_gf(grid, 2, asym))


def test_gridfunction_rejects_nonfinite():
    grid = kf.build_grid(kf.Box(1.0), 2)
    bad = np.zeros(grid.n_nodes)
    bad[3] = np.inf
    with pytest.raises(ValueError):
        _gf(grid, 1, bad)


def test_csv_export_roundtrips_values(tmp_path):
    grid = kf.build_grid(kf.Box(2.0), 2)
    rng = np.random.default_rng(9)
    f = _gf(grid, 2, rng.normal(size=(8, 8)))
    path = tmp_path / "f.csv"
    gridfunction_to_csv(f, str(path))
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "x1,y1,z1,x2,y2,z2,value"
    assert len(rows) == 1 + 64
    # row-major enumeration: row k holds tuple (k // 8, k % 8)
    k = 13
    cols = [float(x) for x in rows[1 + k].split(",")]
    assert np.allclose(cols[:3], grid.nodes[k // 8])
    assert np.allclose(cols[3:6], grid.nodes[k % 8])
    assert cols[6] == f.values[k // 8, k % 8]


def test_binary_roundtrip(tmp_path):
    grid = kf.build_grid(kf.Box(1.5), 3)
    rng = np.random.default_rng(4)
    f = _gf(grid, 2, rng.normal(size=(27, 27)))
    write_gridfunction(f, str(tmp_path / "f"))
    back = read_gridfunction(str(tmp_path / "f"))
    assert back.order == 2
    assert back.grid.nodes_per_axis == 3
    assert np.array_equal(back.values, f.values)
